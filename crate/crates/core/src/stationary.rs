//! No-flow stationary solutions.
//!
//! With `j_c = 0` and `div j_e = 0` the stationary problem reduces to
//! `(theta rho)' + rho V' = 0` and `(theta theta' rho)' = 0`. The second
//! integrates to `rho = k / (theta theta')`; eliminating `rho` from the first
//! leaves `theta theta'' - theta' V' = 0`, which is solved either for `V`
//! (temperature prescribed) or for `theta` (potential prescribed, two-point
//! boundary-value problem).

use serde::Serialize;

use crate::currents::fluxes;
use crate::error::{invalid, Error, Result};
use crate::grid::{cumulative_integral, divergence, node_derivative, node_second_derivative, Grid1D};
use crate::model::{BoundarySpec, FieldState, ModelParams, PotentialSpec};

/// Tolerance factor on `h^2` times the flux scale of a solution.
const RESIDUAL_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Boltzmann,
    ThetaPrescribed,
    BvpSolved,
    DrivenExample,
}

/// `(max |div j_c|, max |div j_e|, max |j_c|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationarityResiduals {
    pub max_div_material: f64,
    pub max_div_energy: f64,
    pub max_material: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualTolerances {
    /// Bound on `max |j_c|`.
    pub material: f64,
    /// Bound on `max |div j_e|`.
    pub energy: f64,
}

#[derive(Debug, Clone)]
pub struct StationarySolution {
    pub state: FieldState,
    pub potential: PotentialSpec,
    /// Integration constant in `rho = k / (theta theta')`; absent for
    /// isothermal profiles.
    pub k: Option<f64>,
    /// Prefactor of the Boltzmann profile.
    pub c: Option<f64>,
    pub provenance: Provenance,
    /// Residuals at `lambda = 1` (both currents are linear in `lambda`).
    pub residuals: StationarityResiduals,
    pub tolerances: ResidualTolerances,
}

impl StationarySolution {
    /// Rare-gas parameters with the matching potential and bath temperatures.
    pub fn params(&self, lambda: f64) -> ModelParams {
        let n = self.state.len();
        ModelParams::rare_gas(
            lambda,
            self.potential.clone(),
            BoundarySpec::dirichlet(self.state.theta[0], self.state.theta[n - 1]),
        )
    }

    pub fn within_tolerance(&self) -> bool {
        self.residuals.max_material <= self.tolerances.material
            && self.residuals.max_div_energy <= self.tolerances.energy
    }

    fn finish(
        state: FieldState,
        potential: PotentialSpec,
        k: Option<f64>,
        c: Option<f64>,
        provenance: Provenance,
    ) -> Self {
        let mut sol = Self {
            state,
            potential,
            k,
            c,
            provenance,
            residuals: StationarityResiduals {
                max_div_material: 0.0,
                max_div_energy: 0.0,
                max_material: 0.0,
            },
            tolerances: ResidualTolerances {
                material: 0.0,
                energy: 0.0,
            },
        };
        let params = sol.params(1.0);
        sol.residuals = stationarity_residual(&sol, &params);
        sol.tolerances = tolerances_for(&sol.state, &params);
        sol
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `RESIDUAL_FACTOR h^2` times `lambda max(rho) max(theta) (1 + max|(theta + V)'|)`.
fn tolerances_for(state: &FieldState, params: &ModelParams) -> ResidualTolerances {
    let grid = &state.grid;
    let v = params.potential.values(grid, state.t);
    let drive: Vec<f64> = state.theta.iter().zip(&v).map(|(t, v)| t + v).collect();
    let slope = sup(&node_derivative(&drive, grid));
    let scale = params.lambda * sup(&state.rho) * sup(&state.theta) * (1.0 + slope);
    let h2 = grid.spacing().powi(2);
    ResidualTolerances {
        material: RESIDUAL_FACTOR * h2 * scale,
        energy: RESIDUAL_FACTOR * h2 * scale * (1.0 + slope),
    }
}

/// Recomputes both currents and reports their sup norms and divergences.
pub fn stationarity_residual(sol: &StationarySolution, params: &ModelParams) -> StationarityResiduals {
    let f = fluxes(&sol.state, params);
    let grid = &sol.state.grid;
    StationarityResiduals {
        max_div_material: sup(&divergence(&f.material, grid)),
        max_div_energy: sup(&divergence(&f.energy, grid)),
        max_material: sup(&f.material),
    }
}

/// Isothermal profile `rho = C exp(-g x / theta0)` under `V = g x`, with `C`
/// fixed by the trapezoid total mass.
pub fn boltzmann_profile(g: f64, theta0: f64, total_mass: f64, grid: &Grid1D) -> Result<StationarySolution> {
    if !(theta0 > 0.0) || !(total_mass > 0.0) || !g.is_finite() {
        return Err(invalid(
            "boltzmann profile needs theta0 > 0, total_mass > 0 and finite g",
        ));
    }
    let shape = grid.sample(|x| (-g * x / theta0).exp());
    let c = total_mass / grid.integrate(&shape);
    let rho = shape.iter().map(|s| c * s).collect();
    let state = FieldState::new(grid.clone(), rho, vec![theta0; grid.len()], 0.0)?;
    Ok(StationarySolution::finish(
        state,
        PotentialSpec::Linear { slope: g },
        None,
        Some(c),
        Provenance::Boltzmann,
    ))
}

fn monotone_derivative(theta: &[f64], grid: &Grid1D) -> Result<Vec<f64>> {
    let d = node_derivative(theta, grid);
    let sign = d[0].signum();
    if let Some(i) = d.iter().position(|&di| di == 0.0 || di.signum() != sign) {
        return Err(Error::SingularProfile { node: i });
    }
    Ok(d)
}

/// `rho_i = k / (theta_i theta'_i)`.
pub fn rho_from_theta(theta: &[f64], k: f64, grid: &Grid1D) -> Result<Vec<f64>> {
    grid.check_len("theta", theta.len())?;
    if theta.iter().any(|t| !(*t > 0.0)) {
        return Err(invalid("theta must be positive"));
    }
    let d = monotone_derivative(theta, grid)?;
    if k == 0.0 || k.signum() != d[0].signum() {
        return Err(invalid(
            "k must be nonzero with the sign of theta' for a positive density",
        ));
    }
    Ok(theta.iter().zip(&d).map(|(t, d)| k / (t * d)).collect())
}

/// Solves `theta theta'' = theta' V'` for `V` with the gauge `V(0) = 0`.
pub fn potential_from_theta(theta: &[f64], grid: &Grid1D) -> Result<PotentialSpec> {
    grid.check_len("theta", theta.len())?;
    let d = monotone_derivative(theta, grid)?;
    let d2 = node_second_derivative(theta, grid);
    let slope: Vec<f64> = theta.iter().zip(&d).zip(&d2).map(|((t, d), d2)| t * d2 / d).collect();
    Ok(PotentialSpec::Tabulated(cumulative_integral(&slope, grid)))
}

/// Shooting parameters for [`theta_from_potential`].
#[derive(Debug, Clone, Copy)]
pub struct ShootingOptions {
    pub slope_range: (f64, f64),
    pub panels: usize,
    /// Integration substeps per grid cell.
    pub refinement: usize,
    pub mismatch_tol: f64,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self {
            slope_range: (-50.0, 50.0),
            panels: 200,
            refinement: 10,
            mismatch_tol: 1e-10,
        }
    }
}

/// One RK4 shot of `theta'' = theta' V' / theta` from `theta(0) = theta0`,
/// `theta'(0) = slope`; returns the nodal values.
fn shoot(potential: &PotentialSpec, theta0: f64, slope: f64, grid: &Grid1D, refinement: usize) -> Result<Vec<f64>> {
    let dv = |x: f64| potential.slope_at(x, grid);
    let rhs = |x: f64, th: f64, dth: f64| -> Result<(f64, f64)> {
        if !(th > 0.0) {
            return Err(Error::SingularShot { slope, x });
        }
        Ok((dth, dth * dv(x)? / th))
    };
    let h = grid.spacing() / refinement as f64;
    let mut out = Vec::with_capacity(grid.len());
    let (mut th, mut dth) = (theta0, slope);
    out.push(th);
    for cell in 0..grid.len() - 1 {
        for sub in 0..refinement {
            let x = grid.nodes()[cell] + sub as f64 * h;
            let (a1, b1) = rhs(x, th, dth)?;
            let (a2, b2) = rhs(x + 0.5 * h, th + 0.5 * h * a1, dth + 0.5 * h * b1)?;
            let (a3, b3) = rhs(x + 0.5 * h, th + 0.5 * h * a2, dth + 0.5 * h * b2)?;
            let (a4, b4) = rhs(x + h, th + h * a3, dth + h * b3)?;
            th += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
            dth += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        }
        if !(th > 0.0) {
            return Err(Error::SingularShot {
                slope,
                x: grid.nodes()[cell + 1],
            });
        }
        out.push(th);
    }
    Ok(out)
}

/// Solves the two-point problem `theta theta'' - theta' V' = 0`,
/// `theta(0) = theta0`, `theta(1) = theta1`, by shooting on `theta'(0)`.
pub fn theta_from_potential(potential: &PotentialSpec, theta0: f64, theta1: f64, grid: &Grid1D) -> Result<Vec<f64>> {
    theta_from_potential_with(potential, theta0, theta1, grid, ShootingOptions::default())
}

pub fn theta_from_potential_with(
    potential: &PotentialSpec,
    theta0: f64,
    theta1: f64,
    grid: &Grid1D,
    opts: ShootingOptions,
) -> Result<Vec<f64>> {
    if !(theta0 > 0.0 && theta1 > 0.0) {
        return Err(invalid("boundary temperatures must be positive"));
    }
    if potential.is_time_dependent() {
        return Err(invalid("stationary solutions need a static potential"));
    }
    potential.validate(grid)?;
    if theta0 == theta1 {
        // theta' = theta'(0) exp(int V'/theta) keeps its sign, so equal end
        // temperatures force theta'(0) = 0 and a constant profile.
        return Ok(vec![theta0; grid.len()]);
    }

    let mismatch = |slope: f64| -> Result<f64> {
        let th = shoot(potential, theta0, slope, grid, opts.refinement)?;
        Ok(th[grid.len() - 1] - theta1)
    };

    let (lo, hi) = opts.slope_range;
    let step = (hi - lo) / opts.panels as f64;
    let mut singular = 0;
    let mut prev: Option<(f64, f64)> = None;
    let mut bracket = None;
    for i in 0..=opts.panels {
        let s = lo + i as f64 * step;
        match mismatch(s) {
            Ok(m) => {
                if m == 0.0 {
                    return shoot(potential, theta0, s, grid, opts.refinement);
                }
                if let Some((ps, pm)) = prev {
                    if pm.signum() != m.signum() {
                        bracket = Some((ps, pm, s));
                        break;
                    }
                }
                prev = Some((s, m));
            }
            Err(Error::SingularShot { .. }) => {
                singular += 1;
                prev = None;
            }
            Err(e) => return Err(e),
        }
    }
    let (mut a, mut fa, mut b) = bracket.ok_or(Error::NoBracket { lo, hi, singular })?;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let fm = mismatch(mid)?;
        if fm.abs() <= opts.mismatch_tol || (b - a) < 1e-15 * mid.abs().max(1.0) {
            return shoot(potential, theta0, mid, grid, opts.refinement);
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    shoot(potential, theta0, 0.5 * (a + b), grid, opts.refinement)
}

/// Stationary state for a prescribed monotone temperature profile.
pub fn from_theta(theta: Vec<f64>, k: f64, grid: &Grid1D) -> Result<StationarySolution> {
    let rho = rho_from_theta(&theta, k, grid)?;
    let potential = potential_from_theta(&theta, grid)?;
    let state = FieldState::new(grid.clone(), rho, theta, 0.0)?;
    Ok(StationarySolution::finish(
        state,
        potential,
        Some(k),
        None,
        Provenance::ThetaPrescribed,
    ))
}

/// Stationary state for a prescribed potential and bath temperatures.
pub fn from_potential(
    potential: PotentialSpec,
    theta0: f64,
    theta1: f64,
    k: f64,
    grid: &Grid1D,
) -> Result<StationarySolution> {
    let theta = theta_from_potential(&potential, theta0, theta1, grid)?;
    let rho = rho_from_theta(&theta, k, grid)?;
    let state = FieldState::new(grid.clone(), rho, theta, 0.0)?;
    Ok(StationarySolution::finish(
        state,
        potential,
        Some(k),
        None,
        Provenance::BvpSolved,
    ))
}

/// `rho = (x+1)^-3`, `theta = (x+1)^2`, `V = x + x^2/2`: a driven state with
/// no material flow and a uniform energy flux `-4 lambda`.
pub fn driven_example(lambda: f64, grid: &Grid1D) -> Result<StationarySolution> {
    if !(lambda > 0.0) {
        return Err(invalid("lambda must be positive"));
    }
    let state = FieldState::from_fns(grid.clone(), |x| (x + 1.0).powi(-3), |x| (x + 1.0).powi(2))?;
    let potential = PotentialSpec::Tabulated(grid.sample(|x| x + 0.5 * x * x));
    let mut sol = StationarySolution::finish(state, potential, Some(2.0), None, Provenance::DrivenExample);
    let params = sol.params(lambda);
    sol.residuals = stationarity_residual(&sol, &params);
    sol.tolerances = tolerances_for(&sol.state, &params);
    Ok(sol)
}
