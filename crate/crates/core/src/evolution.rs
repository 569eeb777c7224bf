//! Method-of-lines time integration of the two conservation laws.
//!
//! The evolved variables are the density `rho` and the energy density
//! `E = rho (theta + V)`, both updated in flux form so that the discrete
//! totals `sum_i w_i rho_i` and (for an isolated system) `sum_i w_i E_i` are
//! conserved up to roundoff. The temperature is recovered as `E/rho - V`.
//! Time stepping uses the embedded Bogacki-Shampine 3(2) pair with FSAL,
//! error-based step control and an explicit stability cap.

use serde::Serialize;

use crate::currents::fluxes;
use crate::error::{invalid, Error, Result};
use crate::grid::divergence;
use crate::model::{FieldState, ModelParams};
use crate::thermo::{entropy, entropy_production_rate};

/// Smallest step before the integration gives up.
pub const DT_MIN: f64 = 1e-12;

/// Fraction of the real-axis stability interval of the Bogacki-Shampine
/// pair (about 2.5) used by the step cap.
const STABILITY_LIMIT: f64 = 2.0;

#[derive(Debug, Clone)]
pub struct Rhs {
    pub drho_dt: Vec<f64>,
    pub de_dt: Vec<f64>,
}

/// Time derivatives of `rho` and `E` at time `t`.
///
/// With a heat bath the endpoint temperatures are held fixed, so the
/// boundary entries of `de_dt` are the derivative of
/// `rho (theta_bc + V)` rather than the flux balance of the half cell.
pub fn rhs(state: &FieldState, params: &ModelParams, t: f64) -> Rhs {
    if state.t == t {
        rhs_at(state, params)
    } else {
        let mut s = state.clone();
        s.t = t;
        rhs_at(&s, params)
    }
}

fn rhs_at(state: &FieldState, params: &ModelParams) -> Rhs {
    let grid = &state.grid;
    let f = fluxes(state, params);
    let drho_dt: Vec<f64> = divergence(&f.material, grid).into_iter().map(|d| -d).collect();
    let mut de_dt: Vec<f64> = divergence(&f.energy, grid).into_iter().map(|d| -d).collect();
    let dv_dt = params.potential.time_derivative(grid, state.t);
    if let Some(dv) = &dv_dt {
        for ((d, r), dv) in de_dt.iter_mut().zip(&state.rho).zip(dv) {
            *d += r * dv;
        }
    }
    if !params.bc.is_isolated() {
        let v = params.potential.values(grid, state.t);
        let n = grid.len();
        for (b, theta_bc) in [(0, params.bc.theta_left), (n - 1, params.bc.theta_right)] {
            let source = dv_dt.as_ref().map_or(0.0, |dv| state.rho[b] * dv[b]);
            de_dt[b] = (theta_bc + v[b]) * drho_dt[b] + source;
        }
    }
    Rhs { drho_dt, de_dt }
}

/// Trapezoid totals of `rho` and `E`.
pub fn conserved_totals(state: &FieldState, params: &ModelParams) -> (f64, f64) {
    let e = crate::model::energy_density(state, params).values;
    (state.grid.integrate(&state.rho), state.grid.integrate(&e))
}

#[derive(Debug, Clone)]
pub struct StepControl {
    pub dt_initial: f64,
    pub dt_max: f64,
    pub safety: f64,
    pub t_end: f64,
    /// Snapshot times; empty means only `t_end`.
    pub output_times: Vec<f64>,
    pub max_steps: usize,
    pub rtol: f64,
    pub atol: f64,
    /// Keep a record of every accepted step.
    pub record_steps: bool,
}

impl StepControl {
    pub fn until(t_end: f64) -> Self {
        Self {
            dt_initial: 1e-6,
            dt_max: f64::INFINITY,
            safety: 0.9,
            t_end,
            output_times: Vec::new(),
            max_steps: 50_000_000,
            rtol: 1e-7,
            atol: 1e-10,
            record_steps: false,
        }
    }

    pub fn with_outputs(mut self, times: Vec<f64>) -> Self {
        self.output_times = times;
        self
    }

    pub fn recording_steps(mut self) -> Self {
        self.record_steps = true;
        self
    }

    fn validate(&self, t0: f64) -> Result<Vec<f64>> {
        let positive = [self.dt_initial, self.dt_max, self.safety, self.rtol, self.atol];
        if positive.iter().any(|v| !(*v > 0.0)) || self.max_steps == 0 {
            return Err(invalid("step control values must be positive"));
        }
        if !(self.t_end >= t0) {
            return Err(invalid(format!(
                "t_end = {} precedes the initial time {t0}",
                self.t_end
            )));
        }
        let outputs = if self.output_times.is_empty() {
            vec![self.t_end]
        } else {
            self.output_times.clone()
        };
        if outputs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("output times must be strictly increasing"));
        }
        if outputs.iter().any(|&t| t < t0 || t > self.t_end) {
            return Err(invalid("output times must lie in [t0, t_end]"));
        }
        Ok(outputs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub entropy: f64,
    pub entropy_production: f64,
    pub max_boundary_material_flux: f64,
}

impl Diagnostics {
    pub fn of(state: &FieldState, params: &ModelParams) -> Result<Self> {
        let (mass, energy) = conserved_totals(state, params);
        let jc = crate::currents::material_current(state, params);
        Ok(Self {
            t: state.t,
            mass,
            energy,
            entropy: entropy(state, params)?,
            entropy_production: entropy_production_rate(state, params).rate,
            max_boundary_material_flux: jc[0].abs().max(jc[jc.len() - 1].abs()),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRecord {
    pub t: f64,
    pub dt: f64,
    pub mass: f64,
    pub energy: f64,
    pub entropy: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub smallest_dt: f64,
    pub largest_dt: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<FieldState>,
    pub diagnostics: Vec<Diagnostics>,
    pub steps: Vec<StepRecord>,
    pub stats: StepStats,
}

impl Trajectory {
    pub fn last(&self) -> &FieldState {
        self.snapshots.last().expect("trajectory has at least one snapshot")
    }
}

/// Evolved variables `[rho; E]` together with the fixed model data.
struct System<'a> {
    params: &'a ModelParams,
    template: FieldState,
    n: usize,
}

enum StageFailure {
    Positivity {
        field: &'static str,
        node: usize,
        value: f64,
    },
}

impl<'a> System<'a> {
    fn state(&self, y: &[f64], t: f64) -> std::result::Result<FieldState, StageFailure> {
        let n = self.n;
        let v = self.params.potential.values(&self.template.grid, t);
        let (rho, e) = y.split_at(n);
        if let Some(i) = rho.iter().position(|r| !(*r > 0.0)) {
            return Err(StageFailure::Positivity {
                field: "rho",
                node: i,
                value: rho[i],
            });
        }
        let mut theta: Vec<f64> = e.iter().zip(rho).zip(&v).map(|((e, r), v)| e / r - v).collect();
        if !self.params.bc.is_isolated() {
            theta[0] = self.params.bc.theta_left;
            theta[n - 1] = self.params.bc.theta_right;
        }
        if let Some(i) = theta.iter().position(|th| !(*th > 0.0)) {
            return Err(StageFailure::Positivity {
                field: "theta",
                node: i,
                value: theta[i],
            });
        }
        let mut s = self.template.clone();
        s.rho = rho.to_vec();
        s.theta = theta;
        s.t = t;
        Ok(s)
    }

    /// Re-imposes the bath temperature on the endpoint energies.
    fn constrain(&self, y: &mut [f64], t: f64) {
        if self.params.bc.is_isolated() {
            return;
        }
        let n = self.n;
        let grid = &self.template.grid;
        let (v0, v1) = match &self.params.potential {
            crate::model::PotentialSpec::Zero => (0.0, 0.0),
            p => {
                let v = p.values(grid, t);
                (v[0], v[n - 1])
            }
        };
        y[n] = y[0] * (self.params.bc.theta_left + v0);
        y[2 * n - 1] = y[n - 1] * (self.params.bc.theta_right + v1);
    }

    fn derivative(&self, y: &[f64], t: f64) -> std::result::Result<Vec<f64>, StageFailure> {
        let s = self.state(y, t)?;
        let r = rhs_at(&s, self.params);
        let mut d = r.drho_dt;
        d.extend(r.de_dt);
        Ok(d)
    }

    fn stable_dt(&self, y: &[f64], t: f64) -> f64 {
        let theta_max = self
            .state(y, t)
            .map(|s| s.theta.iter().fold(0.0_f64, |m, th| m.max(*th)))
            .unwrap_or(f64::INFINITY);
        let h = self.template.grid.spacing();
        // Largest eigenvalue of the principal part is lambda theta (2 + sqrt 2).
        let diffusivity = self.params.lambda * theta_max * (2.0 + std::f64::consts::SQRT_2);
        STABILITY_LIMIT * h * h / (self.params.stencil.laplacian_radius() * diffusivity)
    }
}

fn axpy(y: &[f64], dt: f64, terms: &[(f64, &[f64])]) -> Vec<f64> {
    let mut out = y.to_vec();
    for (c, k) in terms {
        let c = dt * c;
        for (o, ki) in out.iter_mut().zip(k.iter()) {
            *o += c * ki;
        }
    }
    out
}

/// Integrates from `state.t` to `ctl.t_end`, returning snapshots at the
/// requested output times.
pub fn evolve(state: &FieldState, params: &ModelParams, ctl: &StepControl) -> Result<Trajectory> {
    state.validate()?;
    params.validate(&state.grid)?;
    let outputs = ctl.validate(state.t)?;
    let n = state.len();
    if !params.bc.is_isolated() {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs();
        if !close(state.theta[0], params.bc.theta_left) || !close(state.theta[n - 1], params.bc.theta_right) {
            return Err(invalid(
                "initial endpoint temperatures differ from the bath temperatures",
            ));
        }
    }
    if let Some(i) = state.rho.iter().position(|r| !(*r > 0.0)) {
        return Err(Error::Positivity {
            field: "rho",
            node: i,
            t: state.t,
            value: state.rho[i],
        });
    }

    let sys = System {
        params,
        template: state.clone(),
        n,
    };
    let mut t = state.t;
    let mut y = state.rho.clone();
    y.extend(crate::model::energy_density(state, params).values);
    sys.constrain(&mut y, t);

    let mut snapshots = Vec::with_capacity(outputs.len());
    let mut diagnostics = Vec::with_capacity(outputs.len());
    let mut steps = Vec::new();
    let mut stats = StepStats {
        smallest_dt: f64::INFINITY,
        ..StepStats::default()
    };
    let emit = |y: &[f64], t: f64, snapshots: &mut Vec<FieldState>, diagnostics: &mut Vec<Diagnostics>| -> Result<()> {
        let s = sys
            .state(y, t)
            .map_err(|StageFailure::Positivity { field, node, value }| Error::Positivity { field, node, t, value })?;
        diagnostics.push(Diagnostics::of(&s, params)?);
        snapshots.push(s);
        Ok(())
    };
    let record = |y: &[f64], t: f64, dt: f64| -> Result<StepRecord> {
        let s = sys
            .state(y, t)
            .map_err(|StageFailure::Positivity { field, node, value }| Error::Positivity { field, node, t, value })?;
        let (mass, energy) = conserved_totals(&s, params);
        Ok(StepRecord {
            t,
            dt,
            mass,
            energy,
            entropy: entropy(&s, params)?,
        })
    };

    let mut next_output = 0;
    while next_output < outputs.len() && outputs[next_output] <= t {
        emit(&y, t, &mut snapshots, &mut diagnostics)?;
        next_output += 1;
    }
    if ctl.record_steps {
        steps.push(record(&y, t, 0.0)?);
    }

    let fail = |f: StageFailure, t: f64| match f {
        StageFailure::Positivity { field, node, value } => Error::Positivity { field, node, t, value },
    };
    let mut k1 = sys.derivative(&y, t).map_err(|f| fail(f, t))?;
    let mut dt = ctl.dt_initial.min(ctl.dt_max);
    let mut last_failure: Option<Error> = None;

    while next_output < outputs.len() {
        if stats.accepted + stats.rejected >= ctl.max_steps {
            return Err(Error::MaxSteps(ctl.max_steps));
        }
        let target = outputs[next_output];
        let mut h = dt.min(ctl.dt_max).min(sys.stable_dt(&y, t));
        let lands = t + h >= target - 1e-14 * target.abs().max(1.0);
        if lands {
            h = target - t;
        }
        if h < DT_MIN && !lands {
            return Err(last_failure.unwrap_or(Error::Stiffness {
                t,
                dt: h,
                dt_min: DT_MIN,
            }));
        }

        let attempt = (|| -> std::result::Result<(Vec<f64>, Vec<f64>, f64), StageFailure> {
            let mut y2 = axpy(&y, h, &[(0.5, &k1)]);
            sys.constrain(&mut y2, t + 0.5 * h);
            let k2 = sys.derivative(&y2, t + 0.5 * h)?;
            let mut y3 = axpy(&y, h, &[(0.75, &k2)]);
            sys.constrain(&mut y3, t + 0.75 * h);
            let k3 = sys.derivative(&y3, t + 0.75 * h)?;
            let mut y_new = axpy(&y, h, &[(2.0 / 9.0, &k1), (1.0 / 3.0, &k2), (4.0 / 9.0, &k3)]);
            sys.constrain(&mut y_new, t + h);
            let k4 = sys.derivative(&y_new, t + h)?;
            let mut sum = 0.0;
            for i in 0..y.len() {
                let e = h * (-5.0 / 72.0 * k1[i] + 1.0 / 12.0 * k2[i] + 1.0 / 9.0 * k3[i] - 0.125 * k4[i]);
                let scale = ctl.atol + ctl.rtol * y[i].abs().max(y_new[i].abs());
                sum += (e / scale).powi(2);
            }
            Ok((y_new, k4, (sum / y.len() as f64).sqrt()))
        })();

        match attempt {
            Ok((y_new, k4, err)) if err <= 1.0 => {
                t = if lands { target } else { t + h };
                y = y_new;
                k1 = k4;
                stats.accepted += 1;
                stats.smallest_dt = stats.smallest_dt.min(h);
                stats.largest_dt = stats.largest_dt.max(h);
                last_failure = None;
                if ctl.record_steps {
                    steps.push(record(&y, t, h)?);
                }
                let grow = if err == 0.0 {
                    5.0
                } else {
                    (ctl.safety * err.powf(-1.0 / 3.0)).clamp(0.2, 5.0)
                };
                // A step shortened to land on an output time says nothing
                // about the admissible step size.
                dt = if lands { dt.max(h * grow) } else { h * grow };
                while next_output < outputs.len() && outputs[next_output] <= t {
                    emit(&y, t, &mut snapshots, &mut diagnostics)?;
                    next_output += 1;
                }
            }
            Ok((_, _, err)) => {
                stats.rejected += 1;
                dt = h * (ctl.safety * err.powf(-1.0 / 3.0)).clamp(0.1, 0.9);
                if dt < DT_MIN {
                    return Err(Error::Stiffness { t, dt, dt_min: DT_MIN });
                }
            }
            Err(f) => {
                stats.rejected += 1;
                last_failure = Some(fail(f, t + h));
                dt = 0.25 * h;
                if dt < DT_MIN {
                    return Err(last_failure.take().expect("failure recorded"));
                }
            }
        }
    }

    Ok(Trajectory {
        snapshots,
        diagnostics,
        steps,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1D;
    use crate::model::{BoundarySpec, PotentialSpec, TimePotential};

    fn sup(v: &[f64]) -> f64 {
        v.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    #[test]
    fn totals_of_simple_states() {
        let g = Grid1D::new(21).unwrap();
        let p = ModelParams::rare_gas(1.0, PotentialSpec::Zero, BoundarySpec::isolated());
        let s = FieldState::from_fns(g.clone(), |_| 2.0, |_| 1.0).unwrap();
        assert!((conserved_totals(&s, &p).0 - 2.0).abs() < 1e-14);
        let s = FieldState::from_fns(g, |_| 1.0, |_| 3.0).unwrap();
        assert!((conserved_totals(&s, &p).1 - 3.0).abs() < 1e-14);
    }

    #[test]
    fn boltzmann_mass_matches_closed_form() {
        let exact = 1.0 - (-1.0_f64).exp();
        let err = |n| {
            let g = Grid1D::new(n).unwrap();
            let s = FieldState::from_fns(g, |x| (-x).exp(), |_| 1.0).unwrap();
            let p = ModelParams::rare_gas(1.0, PotentialSpec::Linear { slope: 1.0 }, BoundarySpec::isolated());
            (conserved_totals(&s, &p).0 - exact).abs()
        };
        assert!(err(101) < 1e-5);
        assert!(((err(51) / err(101)).log2() - 2.0).abs() < 0.05);
    }

    #[test]
    fn rhs_conserves_mass_exactly() {
        let g = Grid1D::new(37).unwrap();
        let s = FieldState::from_fns(g.clone(), |x| 1.0 + 0.4 * (5.0 * x).sin(), |x| 1.0 + x).unwrap();
        for bc in [BoundarySpec::dirichlet(1.0, 2.0), BoundarySpec::isolated()] {
            let p = ModelParams::rare_gas(1.0, PotentialSpec::Linear { slope: 0.3 }, bc);
            let r = rhs(&s, &p, 0.0);
            let total: f64 = r.drho_dt.iter().zip(g.weights()).map(|(d, w)| d * w).sum();
            assert!(total.abs() < 1e-13, "{total}");
        }
    }

    #[test]
    fn time_dependent_potential_adds_source() {
        let g = Grid1D::new(17).unwrap();
        let s = FieldState::from_fns(g, |_| 1.5, |_| 1.0).unwrap();
        // V = t * 2 is spatially uniform, so only the source term acts.
        let pot = PotentialSpec::TimeDependent(TimePotential::new(|_, t| (2.0 * t, 2.0)));
        let p = ModelParams::rare_gas(1.0, pot, BoundarySpec::isolated());
        let r = rhs(&s, &p, 0.3);
        assert!(sup(&r.drho_dt) < 1e-11);
        assert!(r.de_dt.iter().all(|d| (d - 3.0).abs() < 1e-12));
    }

    #[test]
    fn uniform_equilibrium_is_a_fixed_point() {
        let g = Grid1D::new(21).unwrap();
        let s = FieldState::from_fns(g, |_| 0.7, |_| 1.3).unwrap();
        let p = ModelParams::rare_gas(1.0, PotentialSpec::Zero, BoundarySpec::dirichlet(1.3, 1.3));
        let tr = evolve(&s, &p, &StepControl::until(0.5).with_outputs(vec![0.0, 0.25, 0.5])).unwrap();
        assert_eq!(tr.snapshots.len(), 3);
        for snap in &tr.snapshots {
            assert!(snap.rho.iter().all(|r| (r - 0.7).abs() < 1e-12));
            assert!(snap.theta.iter().all(|t| (t - 1.3).abs() < 1e-12));
        }
    }

    #[test]
    fn dirichlet_endpoints_are_held_exactly() {
        let g = Grid1D::new(25).unwrap();
        let s = FieldState::from_fns(g, |x| 1.0 + 0.2 * x, |x| 1.0 + x).unwrap();
        let p = ModelParams::rare_gas(1.0, PotentialSpec::Zero, BoundarySpec::dirichlet(1.0, 2.0));
        let tr = evolve(&s, &p, &StepControl::until(0.1).with_outputs(vec![0.05, 0.1])).unwrap();
        for snap in &tr.snapshots {
            assert_eq!(snap.theta[0], 1.0);
            assert_eq!(snap.theta[24], 2.0);
        }
    }

    #[test]
    fn mismatched_bath_temperature_is_rejected() {
        let g = Grid1D::new(9).unwrap();
        let s = FieldState::from_fns(g, |_| 1.0, |_| 1.0).unwrap();
        let p = ModelParams::rare_gas(1.0, PotentialSpec::Zero, BoundarySpec::dirichlet(2.0, 2.0));
        assert!(matches!(
            evolve(&s, &p, &StepControl::until(1.0)),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn vanishing_density_reports_positivity() {
        let g = Grid1D::new(9).unwrap();
        let s = FieldState::from_fns(g, |x| if x > 0.5 { 0.0 } else { 1.0 }, |_| 1.0).unwrap();
        let p = ModelParams::rare_gas(1.0, PotentialSpec::Zero, BoundarySpec::isolated());
        assert!(matches!(
            evolve(&s, &p, &StepControl::until(1.0)),
            Err(Error::Positivity { field: "rho", .. })
        ));
    }

    #[test]
    fn bad_step_control_is_rejected() {
        let g = Grid1D::new(9).unwrap();
        let s = FieldState::from_fns(g, |_| 1.0, |_| 1.0).unwrap();
        let p = ModelParams::rare_gas(1.0, PotentialSpec::Zero, BoundarySpec::isolated());
        let ctl = StepControl::until(1.0).with_outputs(vec![0.5, 0.2]);
        assert!(evolve(&s, &p, &ctl).is_err());
        let ctl = StepControl::until(1.0).with_outputs(vec![2.0]);
        assert!(evolve(&s, &p, &ctl).is_err());
    }
}
