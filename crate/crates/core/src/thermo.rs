//! Entropy functionals and entropy-production diagnostics.

use serde::Serialize;

use crate::currents::fluxes;
use crate::error::{Error, Result};
use crate::grid::reconstruct;
use crate::model::{FieldState, ModelParams};

/// Below this density `rho log rho` is taken as its limit 0.
const RHO_LOG_CUTOFF: f64 = 1e-30;

/// Relative size of `j_c` above which the omitted material-force term in the
/// production rate is no longer negligible.
pub const MATERIAL_FLUX_WARNING: f64 = 1e-6;

fn xlogx(x: f64) -> f64 {
    if x < RHO_LOG_CUTOFF {
        0.0
    } else {
        x * x.ln()
    }
}

/// Trapezoid quadrature of
/// `-rho log rho - (rho_max - rho) log(1 - rho/rho_max) + rho log theta`
/// (the middle term is absent for the rare gas).
pub fn entropy(state: &FieldState, params: &ModelParams) -> Result<f64> {
    let mut integrand = Vec::with_capacity(state.len());
    for (i, (&r, &th)) in state.rho.iter().zip(&state.theta).enumerate() {
        let mut s = -xlogx(r) + r * th.ln();
        if let Some(m) = params.rho_max {
            if r >= m {
                return Err(Error::Domain {
                    node: i,
                    rho: r,
                    rho_max: m,
                });
            }
            s -= (m - r) * (-r / m).ln_1p();
        }
        integrand.push(s);
    }
    Ok(state.grid.integrate(&integrand))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProductionRate {
    /// `int j_e d(1/theta)/dx dx`.
    pub rate: f64,
    pub max_material_flux: f64,
    /// Set when `j_c` is too large for the energy term alone to be the full
    /// production.
    pub material_flux_warning: bool,
}

/// Entropy production of the energy current, `int j_e grad(1/theta) dx`,
/// evaluated on the faces with the midpoint rule per cell.
///
/// Only the energy-force term is included, which is the whole production
/// when the material current vanishes; `material_flux_warning` flags states
/// where it does not.
pub fn entropy_production_rate(state: &FieldState, params: &ModelParams) -> ProductionRate {
    let grid = &state.grid;
    let f = fluxes(state, params);
    let inv: Vec<f64> = state.theta.iter().map(|th| 1.0 / th).collect();
    let force = reconstruct(&inv, grid, params.stencil).grad;
    let n = grid.len();
    let rate = grid.spacing() * (1..n).map(|k| f.energy[k] * force[k]).sum::<f64>();
    let max_material_flux = f.material.iter().fold(0.0_f64, |m, j| m.max(j.abs()));
    let theta_max = state.theta.iter().fold(0.0_f64, |m, t| m.max(*t));
    ProductionRate {
        rate,
        max_material_flux,
        material_flux_warning: max_material_flux > MATERIAL_FLUX_WARNING * params.lambda * theta_max,
    }
}

/// Heat and entropy exchanged with the baths at the two ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryEntropyRates {
    /// Heat entering through `x = 1`, `-j_e(1)`.
    pub heat_in_right: f64,
    /// Heat leaving through `x = 0`, `-j_e(0)`.
    pub heat_out_left: f64,
    /// `-j_e(1) / theta(1)`.
    pub entropy_in: f64,
    /// `-j_e(0) / theta(0)`.
    pub entropy_out: f64,
    /// `entropy_out - entropy_in`, the rate handed to the environment.
    pub net_export: f64,
}

pub fn boundary_entropy_rates(state: &FieldState, params: &ModelParams) -> BoundaryEntropyRates {
    let je = fluxes(state, params).energy;
    let n = state.len();
    let heat_in_right = -je[n];
    let heat_out_left = -je[0];
    let entropy_in = heat_in_right / state.theta[n - 1];
    let entropy_out = heat_out_left / state.theta[0];
    BoundaryEntropyRates {
        heat_in_right,
        heat_out_left,
        entropy_in,
        entropy_out,
        net_export: entropy_out - entropy_in,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1D;
    use crate::model::{BoundarySpec, PotentialSpec};

    fn rare() -> ModelParams {
        ModelParams::rare_gas(1.0, PotentialSpec::Zero, BoundarySpec::isolated())
    }

    #[test]
    fn entropy_of_constant_states() {
        let g = Grid1D::new(11).unwrap();
        let s = FieldState::from_fns(g.clone(), |_| 1.0, |_| 1.0).unwrap();
        assert_eq!(entropy(&s, &rare()).unwrap(), 0.0);
        let s = FieldState::from_fns(g, |_| 1.0, |_| std::f64::consts::E).unwrap();
        assert!((entropy(&s, &rare()).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_density_nodes_use_the_limit() {
        let g = Grid1D::new(11).unwrap();
        let s = FieldState::from_fns(g, |x| if x < 0.5 { 0.0 } else { 1.0 }, |_| 1.0).unwrap();
        assert!(entropy(&s, &rare()).unwrap().is_finite());
    }

    #[test]
    fn full_entropy_matches_taylor_expansion() {
        // -(m - r) ln(1 - r/m) = r - r^2/(2m) + O(r^3/m^2): the full entropy
        // exceeds the rare-gas one by the mass, up to (r/m)^2 m.
        let (rho0, rho_max) = (1.0, 1e3);
        let s = FieldState::from_fns(Grid1D::new(11).unwrap(), |_| rho0, |_| 1.7).unwrap();
        let full = entropy(&s, &rare().with_rho_max(rho_max)).unwrap();
        let rare_s = entropy(&s, &rare()).unwrap();
        let eps = rho0 / rho_max;
        let diff = (full - (rare_s + rho_max * eps)).abs();
        assert!(diff <= eps * eps * rho_max, "{diff}");
        assert!((diff - rho0 * rho0 / (2.0 * rho_max)).abs() < 1e-6);
    }

    #[test]
    fn full_entropy_rejects_saturated_density() {
        let s = FieldState::from_fns(Grid1D::new(11).unwrap(), |_| 2.0, |_| 1.0).unwrap();
        assert!(matches!(
            entropy(&s, &rare().with_rho_max(2.0)),
            Err(Error::Domain { node: 0, .. })
        ));
    }

    #[test]
    fn entropy_quadrature_is_second_order() {
        let exact = {
            // Reference from a much finer grid.
            let s = FieldState::from_fns(
                Grid1D::new(20001).unwrap(),
                |x| 1.0 + 0.5 * (3.0 * x).sin(),
                |x| 1.0 + x * x,
            )
            .unwrap();
            entropy(&s, &rare()).unwrap()
        };
        let err = |n| {
            let s = FieldState::from_fns(
                Grid1D::new(n).unwrap(),
                |x| 1.0 + 0.5 * (3.0 * x).sin(),
                |x| 1.0 + x * x,
            )
            .unwrap();
            (entropy(&s, &rare()).unwrap() - exact).abs()
        };
        let order = (err(41) / err(81)).log2();
        assert!((order - 2.0).abs() < 0.1, "{order}");
    }

    #[test]
    fn isothermal_state_produces_no_entropy() {
        let s = FieldState::from_fns(Grid1D::new(31).unwrap(), |_| 1.3, |_| 2.0).unwrap();
        let p = ModelParams::rare_gas(1.0, PotentialSpec::Zero, BoundarySpec::dirichlet(2.0, 2.0));
        let r = entropy_production_rate(&s, &p);
        assert!(r.rate.abs() < 1e-20);
        assert!(!r.material_flux_warning);
    }

    #[test]
    fn warning_flags_nonzero_material_flux() {
        let s = FieldState::from_fns(Grid1D::new(31).unwrap(), |x| 1.0 + x, |_| 2.0).unwrap();
        let p = ModelParams::rare_gas(1.0, PotentialSpec::Zero, BoundarySpec::dirichlet(2.0, 2.0));
        assert!(entropy_production_rate(&s, &p).material_flux_warning);
    }
}
