use approx::assert_relative_eq;
use proptest::prelude::*;

use soret_core::evolution::{conserved_totals, rhs};
use soret_core::grid::Grid1D;
use soret_core::model::{BoundarySpec, FieldState, ModelParams, PotentialSpec};
use soret_core::spectral::{diagonalize, dispersion, CouplingMatrix, SimilarityKind};
use soret_core::stationary::{driven_example, from_theta};
use soret_core::thermo::entropy;

fn smooth_state(n: usize, a: f64, b: f64, k: f64) -> FieldState {
    FieldState::from_fns(
        Grid1D::new(n).unwrap(),
        move |x| 1.0 + a * (k * x).cos(),
        move |x| 1.5 + b * (k * x + 0.3).sin(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn isolated_rhs_conserves_mass_and_energy(
        a in -0.5..0.5f64, b in -0.5..0.5f64, k in 0.5..6.0f64, slope in -2.0..2.0f64, n in 8usize..60,
    ) {
        let s = smooth_state(n, a, b, k);
        let p = ModelParams::rare_gas(1.0, PotentialSpec::Linear { slope }, BoundarySpec::isolated());
        let r = rhs(&s, &p, 0.0);
        let w = s.grid.weights();
        let dm: f64 = r.drho_dt.iter().zip(&w).map(|(d, w)| d * w).sum();
        let de: f64 = r.de_dt.iter().zip(&w).map(|(d, w)| d * w).sum();
        let scale = r.de_dt.iter().chain(&r.drho_dt).fold(1.0_f64, |m, x| m.max(x.abs()));
        prop_assert!(dm.abs() <= 1e-12 * scale, "{dm}");
        prop_assert!(de.abs() <= 1e-12 * scale, "{de}");
    }

    #[test]
    fn entropy_is_finite_and_totals_positive(a in -0.9..0.9f64, b in -0.9..0.9f64, k in 0.5..6.0f64) {
        let s = smooth_state(33, a, b, k);
        let p = ModelParams::rare_gas(1.0, PotentialSpec::Zero, BoundarySpec::isolated());
        prop_assert!(entropy(&s, &p).unwrap().is_finite());
        let (mass, energy) = conserved_totals(&s, &p);
        prop_assert!(mass > 0.0 && energy > 0.0);
    }

    #[test]
    fn similarities_diagonalise_for_any_gamma(gamma in 0.05..20.0f64, alpha in 0.01..0.99f64, beta in 0.1..10.0f64) {
        let m = CouplingMatrix::new(gamma, alpha, 1.0, 1.0).unwrap();
        let (p, q) = m.eigenvalues();
        for kind in [SimilarityKind::Convenient, SimilarityKind::Symmetrizing, SimilarityKind::Custom { beta }] {
            let d = diagonalize(&m, kind).unwrap().conjugate(&m);
            let norm = 1.0 + gamma + alpha / gamma;
            prop_assert!(d[0][1].abs() <= 1e-12 * norm && d[1][0].abs() <= 1e-12 * norm);
            prop_assert!((d[0][0] - p).abs() <= 1e-12 * norm && (d[1][1] - q).abs() <= 1e-12 * norm);
        }
    }

    #[test]
    fn dispersion_invariant(omega in 0.0..1e4f64, lambda in 0.1..5.0f64, theta0 in 0.1..5.0f64) {
        let m = CouplingMatrix::physical(1.0, lambda, theta0).unwrap();
        let (k1, k2) = dispersion(omega, &m).unwrap();
        let (p, q) = m.eigenvalues();
        let w = omega / m.scale();
        if w > 0.0 {
            assert_relative_eq!(p * k1 * k1, w, max_relative = 1e-12);
            assert_relative_eq!(q * k2 * k2, w, max_relative = 1e-12);
        }
    }

    #[test]
    fn prescribed_quadratic_temperature_is_stationary(t0 in 0.5..2.0f64, c in 0.2..2.0f64, k in 0.5..3.0f64) {
        // Shifted so that theta' stays away from zero on [0, 1].
        let g = Grid1D::new(101).unwrap();
        let theta = g.sample(|x| t0 + c * (x + 0.5).powi(2));
        let sol = from_theta(theta, k, &g).unwrap();
        prop_assert!(sol.within_tolerance(), "{:?} vs {:?}", sol.residuals, sol.tolerances);
    }
}

#[test]
fn driven_example_energy_flux_is_uniform() {
    let lambda = 2.5;
    let sol = driven_example(lambda, &Grid1D::new(201).unwrap()).unwrap();
    let je = soret_core::fluxes(&sol.state, &sol.params(lambda)).energy;
    for j in je {
        assert_relative_eq!(j, -4.0 * lambda, max_relative = 1e-5);
    }
}
