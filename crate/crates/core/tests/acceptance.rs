//! Acceptance suite: one line per criterion, nonzero exit on any failure.

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use soret_core::evolution::{evolve, rhs, StepControl};
use soret_core::fluxes;
use soret_core::grid::Grid1D;
use soret_core::model::{BoundarySpec, FieldState, ModelParams, PotentialSpec};
use soret_core::spectral::{
    self, boundary_form_coefficient, diagonalize, eigenvalues_transcendental, fd_spectrum, log_spaced,
    semigroup_diagnostics, CouplingMatrix, FdSpectrum, SemigroupOptions, SimilarityKind,
};
use soret_core::stationary::{boltzmann_profile, driven_example, potential_from_theta, theta_from_potential};
use soret_core::thermo::{boundary_entropy_rates, entropy_production_rate};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn grid(n: usize) -> Grid1D {
    Grid1D::new(n).unwrap()
}

const LAMBDA: f64 = 0.7;
const GAMMAS: [f64; 3] = [0.5, 1.0, 2.0];
const SIZES: [usize; 3] = [200, 400, 800];

/// `2 lambda theta0 = 1`.
fn coupling(gamma: f64) -> CouplingMatrix {
    CouplingMatrix::physical(gamma, 0.5, 1.0).unwrap()
}

/// Matrix-oracle spectra for every `(n, gamma)`, computed once.
fn spectra() -> &'static HashMap<(usize, u64), FdSpectrum> {
    static CELL: OnceLock<HashMap<(usize, u64), FdSpectrum>> = OnceLock::new();
    CELL.get_or_init(|| {
        let jobs: Vec<(usize, f64)> = SIZES
            .iter()
            .flat_map(|&n| GAMMAS.iter().map(move |&g| (n, g)))
            .collect();
        std::thread::scope(|s| {
            let handles: Vec<_> = jobs
                .iter()
                .map(|&(n, g)| s.spawn(move || ((n, g.to_bits()), fd_spectrum(n, &coupling(g)).unwrap())))
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        })
    })
}

fn spectrum(n: usize, gamma: f64) -> &'static FdSpectrum {
    &spectra()[&(n, gamma.to_bits())]
}

fn driven_energy_error(n: usize) -> f64 {
    let sol = driven_example(LAMBDA, &grid(n)).unwrap();
    let je = fluxes(&sol.state, &sol.params(LAMBDA)).energy;
    je.iter().map(|j| (j + 4.0 * LAMBDA).abs()).fold(0.0, f64::max) / (4.0 * LAMBDA)
}

fn criterion_1() -> Outcome {
    let errs: Vec<f64> = [101, 201, 401].iter().map(|&n| driven_energy_error(n)).collect();
    let order = (errs[0] / errs[1]).log2();
    outcome(
        errs[2] <= 1e-4 && order >= 1.9,
        format!(
            "max |j_e + 4 lambda| / 4 lambda = {:.3e} at n = 401, observed order {order:.2}",
            errs[2]
        ),
    )
}

fn criterion_2() -> Outcome {
    let sol = driven_example(LAMBDA, &grid(401)).unwrap();
    let params = sol.params(LAMBDA);
    let p = entropy_production_rate(&sol.state, &params);
    let rel = (p.rate - 3.0 * LAMBDA).abs() / (3.0 * LAMBDA);
    let b = boundary_entropy_rates(&sol.state, &params);
    let export = (b.net_export - 3.0 * LAMBDA).abs() / (3.0 * LAMBDA);
    outcome(
        rel <= 1e-4 && !p.material_flux_warning,
        format!("production / 3 lambda - 1 = {rel:.3e}; boundary export / 3 lambda - 1 = {export:.3e}"),
    )
}

fn criterion_3() -> Outcome {
    let (lambda, g, theta0, mass) = (1.3, 1.5, 0.8, 1.0);
    let residual = |n: usize| {
        let sol = boltzmann_profile(g, theta0, mass, &grid(n)).unwrap();
        let c = sol.c.unwrap();
        let r = rhs(&sol.state, &sol.params(lambda), 0.0);
        (sup(&r.drho_dt).max(sup(&r.de_dt)), lambda * g * c / theta0)
    };
    let (r101, _) = residual(51);
    let (r201, _) = residual(101);
    let (r401, scale) = residual(401);
    let order = (r101 / r201).log2();

    let sol = boltzmann_profile(g, theta0, mass, &grid(101)).unwrap();
    let params = sol.params(lambda);
    let t_end = 1.0 / lambda;
    let times: Vec<f64> = (1..=20).map(|i| t_end * i as f64 / 20.0).collect();
    let ctl = StepControl::until(t_end).with_outputs(times);
    let traj = evolve(&sol.state, &params, &ctl).unwrap();
    let drift = traj
        .snapshots
        .iter()
        .map(|s| {
            let dr = s
                .rho
                .iter()
                .zip(&sol.state.rho)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let dt = s
                .theta
                .iter()
                .zip(&sol.state.theta)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            dr.max(dt)
        })
        .fold(0.0, f64::max);
    outcome(
        r401 <= 1e-3 * scale && order >= 1.9 && drift <= 1e-6,
        format!(
            "rhs sup = {:.3e} x (lambda g C / theta0) at n = 401, order {order:.2}; evolution drift {drift:.3e}",
            r401 / scale
        ),
    )
}

fn criterion_4() -> Outcome {
    let mut worst_imag: f64 = 0.0;
    let mut worst_real: f64 = f64::NEG_INFINITY;
    let mut pass = true;
    for n in SIZES {
        for g in GAMMAS {
            let s = spectrum(n, g);
            let imag = s.max_imag / s.max_abs_real;
            let real = s.max_real_of_l / s.operator_norm;
            worst_imag = worst_imag.max(imag);
            worst_real = worst_real.max(real);
            pass &= imag <= 1e-8 && real <= 1e-8;
        }
    }
    outcome(
        pass,
        format!("max |Im| / max |Re| = {worst_imag:.3e}; max Re / ||L|| = {worst_real:.3e} over 9 matrices"),
    )
}

fn pairwise_gap(a: &FdSpectrum, b: &FdSpectrum) -> f64 {
    let zero_floor = 1e-8 * a.operator_norm.max(b.operator_norm);
    a.omegas
        .iter()
        .zip(&b.omegas)
        .map(|(x, y)| {
            let scale = x.abs().max(y.abs());
            if scale <= zero_floor {
                0.0
            } else {
                (x - y).abs() / scale
            }
        })
        .fold(0.0, f64::max)
}

fn criterion_5() -> Outcome {
    let worst = SIZES
        .iter()
        .map(|&n| pairwise_gap(spectrum(n, 0.5), spectrum(n, 2.0)))
        .fold(0.0, f64::max);
    let trans_a = eigenvalues_transcendental(&coupling(0.5), 12, 400.0).unwrap().omegas();
    let trans_b = eigenvalues_transcendental(&coupling(2.0), 12, 400.0).unwrap().omegas();
    let trans_gap = trans_a
        .iter()
        .zip(&trans_b)
        .map(|(a, b)| (a - b).abs() / a.max(1.0))
        .fold(0.0, f64::max);
    outcome(
        worst <= 1e-8 && trans_gap <= 1e-8,
        format!("matrix lists: max relative gap {worst:.3e}; transcendental roots: {trans_gap:.3e}"),
    )
}

fn criterion_6() -> Outcome {
    let m = coupling(1.0);
    let oracle = spectral::richardson(spectrum(400, 1.0), spectrum(800, 1.0), 6)
        .unwrap()
        .omegas();
    let trans = eigenvalues_transcendental(&m, 6, 200.0).unwrap().omegas();
    let worst = (1..6)
        .map(|i| (trans[i] - oracle[i]).abs() / trans[i])
        .fold(0.0, f64::max);
    let fine = spectrum(800, 1.0);
    let zero_ok = trans[0] == 0.0 && fine.omegas[0].abs() <= 1e-8 * fine.operator_norm;
    outcome(
        worst <= 1e-6 && zero_ok,
        format!(
            "first 5 nonzero roots: max relative gap {worst:.3e}; zero mode: exact / {:.1e} x ||L||",
            fine.omegas[0].abs() / fine.operator_norm
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut form_ok = true;
    for g in GAMMAS {
        let m = coupling(g);
        let (p, q) = m.eigenvalues();
        for kind in [
            SimilarityKind::Convenient,
            SimilarityKind::Symmetrizing,
            SimilarityKind::Custom { beta: 0.5 },
            SimilarityKind::Custom { beta: 2.0 },
        ] {
            let s = diagonalize(&m, kind).unwrap();
            let d = s.conjugate(&m);
            let err = d[0][1]
                .abs()
                .max(d[1][0].abs())
                .max((d[0][0] - p).abs())
                .max((d[1][1] - q).abs());
            worst = worst.max(err);
            let form = boundary_form_coefficient(&s, &m).abs();
            form_ok &= if kind == SimilarityKind::Symmetrizing {
                form <= 1e-12
            } else {
                form > 1e-6
            };
        }
    }
    let kappa = diagonalize(&coupling(1.0), SimilarityKind::Convenient).unwrap().kappa;
    let kerr = (kappa - 2.0_f64.sqrt()).abs();
    outcome(
        worst <= 1e-12 && form_ok && kerr <= 1e-12,
        format!("S M S^-1 error {worst:.1e}; boundary form vanishes only when symmetrizing: {form_ok}; |kappa - sqrt 2| = {kerr:.1e}"),
    )
}

fn criterion_8() -> Outcome {
    let times = log_spaced(1e-3, 1.0, 50);
    let opts = SemigroupOptions::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for g in GAMMAS {
        let d = semigroup_diagnostics(100, &coupling(g), &times, &opts).unwrap();
        pass &= d.bound_holds;
        let probe = if g <= 1.0 {
            let p = d
                .numerical_range
                .iter()
                .map(|r| r.isolated_optimized_max)
                .fold(f64::NEG_INFINITY, f64::max);
            let exact = d
                .numerical_range
                .iter()
                .map(|r| r.isolated_exact_max)
                .fold(f64::NEG_INFINITY, f64::max);
            pass &= p <= 1e-8 && exact <= 1e-8;
            format!(", isolated probe {p:.1e} (exact {exact:.1e})")
        } else {
            String::new()
        };
        parts.push(format!(
            "gamma {g}: max norm e^(lambda1 t)/kappa {:.3}, sup norm {:.3}{probe}",
            d.worst_bound_ratio, d.sup_norm
        ));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_9() -> Outcome {
    let lambda = 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut coef = || -> [f64; 4] { [0; 4].map(|_| rng.gen_range(-0.2..0.2)) };
    let (a, b) = (coef(), coef());
    let smooth = |c: [f64; 4], x: f64| {
        c.iter()
            .enumerate()
            .map(|(k, c)| c * ((k + 1) as f64 * std::f64::consts::PI * x).cos())
            .sum::<f64>()
    };
    let g = grid(61);
    let state = FieldState::from_fns(g, |x| 1.0 + smooth(a, x), |x| 1.5 + smooth(b, x)).unwrap();
    let params = ModelParams::rare_gas(lambda, PotentialSpec::Linear { slope: 0.5 }, BoundarySpec::isolated());
    let ctl = StepControl::until(5.0 / lambda).recording_steps();
    let traj = evolve(&state, &params, &ctl).unwrap();
    let first = &traj.steps[0];
    let mass = traj
        .steps
        .iter()
        .map(|s| (s.mass - first.mass).abs() / first.mass)
        .fold(0.0, f64::max);
    let energy = traj
        .steps
        .iter()
        .map(|s| (s.energy - first.energy).abs() / first.energy.abs())
        .fold(0.0, f64::max);
    // Decreases smaller than a few ulps of the entropy are roundoff.
    let floor = 1e-14 * first.entropy.abs().max(1.0);
    let worst_drop = traj
        .steps
        .windows(2)
        .map(|w| w[0].entropy - w[1].entropy)
        .fold(f64::NEG_INFINITY, f64::max);
    let gain = traj.steps.last().unwrap().entropy - first.entropy;
    outcome(
        mass <= 1e-8 && energy <= 1e-8 && worst_drop <= floor && gain > 0.0,
        format!(
            "{} steps: mass drift {mass:.1e}, energy drift {energy:.1e}, largest entropy drop {worst_drop:.1e} (floor {floor:.0e}), entropy gain {gain:.3e}",
            traj.steps.len()
        ),
    )
}

fn criterion_10() -> Outcome {
    let n = 401;
    let g = grid(n);
    let v = PotentialSpec::Tabulated(g.sample(|x| x + 0.5 * x * x));
    let theta = theta_from_potential(&v, 1.0, 4.0, &g).unwrap();
    let err_theta = theta
        .iter()
        .zip(g.nodes())
        .map(|(t, x)| (t - (x + 1.0).powi(2)).abs())
        .fold(0.0, f64::max);
    let recovered = potential_from_theta(&g.sample(|x| (x + 1.0).powi(2)), &g)
        .unwrap()
        .values(&g, 0.0);
    let err_v = recovered
        .iter()
        .zip(g.nodes())
        .map(|(v, x)| (v - (x + 0.5 * x * x)).abs())
        .fold(0.0, f64::max);
    let h2 = g.spacing().powi(2);
    outcome(
        err_theta <= 1e-6 && err_v <= h2,
        format!("theta sup error {err_theta:.2e}; potential sup error {err_v:.2e} (h^2 = {h2:.1e})"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("driven-example energy flux", criterion_1),
        ("entropy production", criterion_2),
        ("Boltzmann stationarity", criterion_3),
        ("spectrum realness and sign", criterion_4),
        ("gamma independence", criterion_5),
        ("cross-method agreement", criterion_6),
        ("similarity algebra", criterion_7),
        ("semigroup bound", criterion_8),
        ("thermodynamic laws (isolated)", criterion_9),
        ("BVP round trip", criterion_10),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    // Panics are reported on the criterion line.
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = format!("{}", i + 1);
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let tag = if result.pass { "PASS" } else { "FAIL" };
        println!(
            "[{tag}] {id:>2}. {name}: {} ({:.1} s)",
            result.detail,
            start.elapsed().as_secs_f64()
        );
        if !result.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
