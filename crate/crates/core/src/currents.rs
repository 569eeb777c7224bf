//! Material and energy currents on cell faces.

use crate::grid::reconstruct;
use crate::model::{FieldState, ModelParams};

/// `j_c = -lambda (theta grad rho + m(rho) grad(theta + V))` with
/// `m(rho) = rho (1 - rho/rho_max)` (full model) or `rho` (rare gas).
///
/// Returns the `n + 1` face values; both boundary faces are exactly zero.
pub fn material_current(state: &FieldState, params: &ModelParams) -> Vec<f64> {
    let grid = &state.grid;
    let v = params.potential.values(grid, state.t);
    let total: Vec<f64> = state.theta.iter().zip(&v).map(|(th, v)| th + v).collect();
    let rho = reconstruct(&state.rho, grid, params.stencil);
    let theta = reconstruct(&state.theta, grid, params.stencil);
    let drive = reconstruct(&total, grid, params.stencil);

    let n = grid.len();
    let mut jc = vec![0.0; n + 1];
    for (f, j) in jc.iter_mut().enumerate().take(n).skip(1) {
        *j = -params.lambda * (theta.value[f] * rho.grad[f] + params.mobility(rho.value[f]) * drive.grad[f]);
    }
    jc
}

/// `j_e = 2 (theta j_c - lambda m(rho) theta grad theta) + V j_c` on faces.
///
/// In isolated mode the boundary faces are zero; with a heat bath they carry
/// the conductive flux into or out of the bath.
pub fn energy_current(state: &FieldState, params: &ModelParams, jc: &[f64]) -> Vec<f64> {
    let grid = &state.grid;
    let n = grid.len();
    debug_assert_eq!(jc.len(), n + 1);
    let v = params.potential.values(grid, state.t);
    let rho = reconstruct(&state.rho, grid, params.stencil);
    let theta = reconstruct(&state.theta, grid, params.stencil);
    let pot = reconstruct(&v, grid, params.stencil);

    let mut je: Vec<f64> = (0..=n)
        .map(|f| {
            let th = theta.value[f];
            2.0 * (th * jc[f] - params.lambda * params.mobility(rho.value[f]) * th * theta.grad[f])
                + pot.value[f] * jc[f]
        })
        .collect();
    if params.bc.is_isolated() {
        je[0] = 0.0;
        je[n] = 0.0;
    }
    je
}

/// Both currents evaluated together.
#[derive(Debug, Clone)]
pub struct Fluxes {
    pub material: Vec<f64>,
    pub energy: Vec<f64>,
}

pub fn fluxes(state: &FieldState, params: &ModelParams) -> Fluxes {
    let material = material_current(state, params);
    let energy = energy_current(state, params, &material);
    Fluxes { material, energy }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid1D, Stencil};
    use crate::model::{energy_density, BoundarySpec, PotentialSpec};

    fn sup(v: &[f64]) -> f64 {
        v.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    fn smooth_state(n: usize) -> FieldState {
        FieldState::from_fns(
            Grid1D::new(n).unwrap(),
            |x| 1.0 + 0.3 * (3.0 * x).sin() + 0.1 * x,
            |x| 1.2 + 0.4 * (2.0 * x).cos() * x,
        )
        .unwrap()
    }

    #[test]
    fn uniform_state_has_no_currents() {
        let s = FieldState::from_fns(Grid1D::new(33).unwrap(), |_| 0.8, |_| 1.7).unwrap();
        for stencil in [Stencil::Second, Stencil::Fourth] {
            let p = ModelParams::rare_gas(2.0, PotentialSpec::Zero, BoundarySpec::dirichlet(1.7, 1.7))
                .with_stencil(stencil);
            let f = fluxes(&s, &p);
            assert!(sup(&f.material) < 1e-11);
            assert!(sup(&f.energy) < 1e-11);
        }
    }

    #[test]
    fn boundary_material_flux_is_exactly_zero() {
        let s = smooth_state(40);
        let p = ModelParams::rare_gas(
            1.3,
            PotentialSpec::Linear { slope: 2.0 },
            BoundarySpec::dirichlet(1.0, 2.0),
        );
        let jc = material_current(&s, &p);
        assert_eq!(jc[0], 0.0);
        assert_eq!(jc[40], 0.0);
        assert!(sup(&jc) > 1e-3);
    }

    #[test]
    fn boltzmann_profile_has_no_material_flux() {
        // rho = C exp(-g x / theta0) balances gravity at fixed temperature.
        let (c, g, theta0) = (1.0, 1.0, 1.0);
        let errs: Vec<f64> = [51, 101]
            .iter()
            .map(|&n| {
                let s =
                    FieldState::from_fns(Grid1D::new(n).unwrap(), |x| c * (-g * x / theta0).exp(), |_| theta0).unwrap();
                let p = ModelParams::rare_gas(
                    1.0,
                    PotentialSpec::Linear { slope: g },
                    BoundarySpec::dirichlet(theta0, theta0),
                )
                .with_stencil(Stencil::Second);
                sup(&material_current(&s, &p))
            })
            .collect();
        assert!(errs[0] < 1e-4);
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 1.9, "order {order}");
    }

    #[test]
    fn full_model_tends_to_rare_gas() {
        let s = smooth_state(64);
        let rare = ModelParams::rare_gas(
            1.0,
            PotentialSpec::Linear { slope: 0.5 },
            BoundarySpec::dirichlet(1.2, 1.2),
        );
        let jr = material_current(&s, &rare);
        let rho_sq = s.rho.iter().fold(0.0_f64, |m, r| m.max(r * r));
        let mut prev = f64::INFINITY;
        for rho_max in [1e2, 1e4, 1e6] {
            let jf = material_current(&s, &rare.clone().with_rho_max(rho_max));
            let diff = sup(&jr.iter().zip(&jf).map(|(a, b)| a - b).collect::<Vec<_>>());
            // |m_full - m_rare| = rho^2/rho_max times |grad(theta + V)|.
            assert!(diff <= 10.0 * rho_sq / rho_max, "{rho_max}: {diff}");
            assert!(diff < prev / 50.0);
            prev = diff;
        }
    }

    #[test]
    fn energy_current_is_gradient_of_theta_e_without_potential() {
        // For V = 0 the energy current is -2 lambda grad(theta E).
        let lambda = 0.9;
        let err = |n: usize| {
            let s = smooth_state(n);
            let p = ModelParams::rare_gas(
                lambda,
                PotentialSpec::Zero,
                BoundarySpec::dirichlet(s.theta[0], s.theta[n - 1]),
            );
            let e = energy_density(&s, &p).values;
            let te: Vec<f64> = e.iter().zip(&s.theta).map(|(e, th)| e * th).collect();
            let grad = crate::grid::reconstruct(&te, &s.grid, p.stencil).grad;
            let je = fluxes(&s, &p).energy;
            // Boundary faces carry j_c = 0 and are excluded.
            sup(&je[1..n]
                .iter()
                .zip(&grad[1..n])
                .map(|(j, g)| j + 2.0 * lambda * g)
                .collect::<Vec<_>>())
        };
        let (e1, e2) = (err(41), err(81));
        assert!(e1 < 1e-3, "{e1}");
        assert!((e1 / e2).log2() > 1.9);
    }

    #[test]
    fn isolated_mode_zeroes_boundary_energy_flux() {
        let s = smooth_state(30);
        let p = ModelParams::rare_gas(1.0, PotentialSpec::Zero, BoundarySpec::isolated());
        let je = fluxes(&s, &p).energy;
        assert_eq!(je[0], 0.0);
        assert_eq!(je[30], 0.0);
    }
}
