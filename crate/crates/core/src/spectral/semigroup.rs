//! Norm of `exp(Lt)` on the complement of the zero mode, and a probe of the
//! numerical range.
//!
//! The finite-difference operator satisfies `G K = A` with `G` symmetric
//! positive definite (trapezoid weights times the per-node block
//! `[[1, -m12], [-m12, m12/m21]]`) and `A` symmetric. The generalised
//! symmetric eigenproblem therefore diagonalises `K` with a `G`-orthonormal
//! basis, and `exp(Kt)` follows without a matrix exponential. Norms are the
//! discrete L2 norm with trapezoid weights.

use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::coupling::{condition_number, diagonalize, CouplingMatrix, SimilarityKind};
use super::fd::{fd_operator, fd_operator_isolated};
use crate::error::{invalid, Error, Result};

fn la(e: impl std::fmt::Debug) -> Error {
    Error::LinearAlgebra(format!("{e:?}"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemigroupOptions {
    /// Interval counts for the numerical-range table.
    pub probe_sizes: Vec<usize>,
    pub random_vectors: usize,
    /// Lanczos restarts on the symmetric part.
    pub restarts: usize,
    pub lanczos_steps: usize,
    pub seed: u64,
}

impl Default for SemigroupOptions {
    fn default() -> Self {
        Self {
            probe_sizes: vec![25, 50, 100, 200],
            random_vectors: 200,
            restarts: 4,
            lanczos_steps: 60,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NumericalRangeRow {
    pub n: usize,
    /// Max Rayleigh quotient of the symmetric part over random unit vectors.
    pub random_max: f64,
    /// Max after Lanczos restarts (includes `random_max`).
    pub optimized_max: f64,
    /// Largest eigenvalue of the symmetric part.
    pub exact_max: f64,
    pub isolated_random_max: f64,
    pub isolated_optimized_max: f64,
    pub isolated_exact_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemigroupDiagnostics {
    pub n: usize,
    pub gamma: f64,
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    /// Smallest nonzero eigenvalue of `-L` at this resolution.
    pub lambda1: f64,
    /// Eigenvalue of the discrete zero mode (roundoff only).
    pub zero_mode: f64,
    /// `||S|| ||S^-1||` for the convenient similarity.
    pub kappa_convenient: f64,
    /// `sqrt(cond G)` for the per-node Gram block, the constant a proof in
    /// the weighted norm delivers.
    pub kappa_gram: f64,
    pub bound_holds: bool,
    pub bound_gram_holds: bool,
    /// Largest `norms(t) e^{lambda1 t} / kappa_convenient`.
    pub worst_bound_ratio: f64,
    pub sup_norm: f64,
    pub sup_time: f64,
    /// `norms(t) e^{lambda1 t}` at the last sampled time.
    pub asymptotic_ratio: f64,
    /// Relative asymmetry of `G K` before symmetrisation.
    pub gram_asymmetry: f64,
    pub numerical_range: Vec<NumericalRangeRow>,
}

/// `count` points from `t0` to `t1` spaced evenly in `log t`.
pub fn log_spaced(t0: f64, t1: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![t0];
    }
    let (a, b) = (t0.ln(), t1.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

fn node_weights(n: usize) -> Vec<f64> {
    let h = 1.0 / n as f64;
    (0..=n).map(|i| if i == 0 || i == n { 0.5 * h } else { h }).collect()
}

fn symmetric_inverse_sqrt(a: &Mat<f64>) -> Result<Mat<f64>> {
    let eig = a.self_adjoint_eigen(Side::Lower).map_err(la)?;
    let u = eig.U();
    let d = eig.S().column_vector();
    let k = a.nrows();
    if (0..k).any(|i| !(d[i] > 0.0)) {
        return Err(Error::LinearAlgebra("Gram matrix is not positive definite".into()));
    }
    let scaled = Mat::from_fn(k, k, |i, j| u[(i, j)] / d[j].sqrt());
    Ok(&scaled * u.transpose())
}

fn symmetrize(a: &Mat<f64>) -> Mat<f64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
}

fn max_abs(a: &Mat<f64>) -> f64 {
    let mut m = 0.0_f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].abs());
        }
    }
    m
}

fn gram_matrix(n: usize, m: &CouplingMatrix) -> Mat<f64> {
    let w = node_weights(n);
    let h = 1.0 / n as f64;
    let ne = n + 1;
    Mat::from_fn(2 * n, 2 * n, |r, c| {
        let theta_r = r >= ne;
        let theta_c = c >= ne;
        match (theta_r, theta_c) {
            (false, false) if r == c => w[r],
            (true, true) if r == c => h * m.m12 / m.m21,
            (false, true) if c - ne + 1 == r => -h * m.m12,
            (true, false) if r - ne + 1 == c => -h * m.m12,
            _ => 0.0,
        }
    })
}

fn weighted_symmetric_part(k: &Mat<f64>, w: &[f64]) -> Mat<f64> {
    let kw = Mat::from_fn(k.nrows(), k.ncols(), |i, j| w[i].sqrt() * k[(i, j)] / w[j].sqrt());
    symmetrize(&kw)
}

struct ProbeResult {
    random_max: f64,
    optimized_max: f64,
    exact_max: f64,
}

fn rayleigh(h: &Mat<f64>, u: &[f64]) -> f64 {
    let k = u.len();
    let mut num = 0.0;
    for j in 0..k {
        let mut col = 0.0;
        for i in 0..k {
            col += h[(i, j)] * u[i];
        }
        num += col * u[j];
    }
    num / u.iter().map(|x| x * x).sum::<f64>()
}

/// Largest Ritz value after `steps` Lanczos steps with full
/// reorthogonalisation: the Rayleigh quotient of the best vector in the
/// Krylov space of `start`.
fn lanczos_top(h: &Mat<f64>, start: Vec<f64>, steps: usize) -> Result<f64> {
    let k = h.nrows();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let norm0 = dot(&start, &start).sqrt();
    let mut basis: Vec<Vec<f64>> = vec![start.into_iter().map(|x| x / norm0).collect()];
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    for j in 0..steps.min(k) {
        let v = &basis[j];
        let mut w = vec![0.0; k];
        for c in 0..k {
            for r in 0..k {
                w[r] += h[(r, c)] * v[c];
            }
        }
        alpha.push(dot(&w, v));
        for _ in 0..2 {
            for b in &basis {
                let p = dot(&w, b);
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
            }
        }
        let nb = dot(&w, &w).sqrt();
        if nb <= 1e-12 * alpha[j].abs().max(1.0) || j + 1 == steps.min(k) {
            break;
        }
        beta.push(nb);
        basis.push(w.into_iter().map(|x| x / nb).collect());
    }
    let m = alpha.len();
    let t = Mat::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    Ok(t.self_adjoint_eigenvalues(Side::Lower)
        .map_err(la)?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max))
}

fn probe(h: &Mat<f64>, opts: &SemigroupOptions, rng: &mut ChaCha8Rng) -> Result<ProbeResult> {
    let k = h.nrows();
    let random_vec = |rng: &mut ChaCha8Rng| (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
    let mut random_max = f64::NEG_INFINITY;
    for _ in 0..opts.random_vectors {
        random_max = random_max.max(rayleigh(h, &random_vec(rng)));
    }
    let mut optimized_max = random_max;
    for _ in 0..opts.restarts {
        optimized_max = optimized_max.max(lanczos_top(h, random_vec(rng), opts.lanczos_steps)?);
    }
    let exact_max = h
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(la)?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ProbeResult {
        random_max,
        optimized_max,
        exact_max,
    })
}

pub fn semigroup_diagnostics(
    n: usize,
    m: &CouplingMatrix,
    times: &[f64],
    opts: &SemigroupOptions,
) -> Result<SemigroupDiagnostics> {
    if times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(invalid("times must be finite and nonnegative"));
    }
    let k = fd_operator(n, m)?;
    let dim = k.nrows();
    let g = gram_matrix(n, m);
    let a_raw = &g * &k;
    let asym = {
        let at = a_raw.transpose().to_owned();
        max_abs(&(&a_raw - &at)) / max_abs(&a_raw)
    };
    let a = symmetrize(&a_raw);
    let g_isqrt = symmetric_inverse_sqrt(&g)?;
    let c = symmetrize(&(&(&g_isqrt * &a) * &g_isqrt));
    let eig = c.self_adjoint_eigen(Side::Lower).map_err(la)?;
    let lam = eig.S().column_vector();
    // Eigenvalues ascend; the zero mode is the last.
    let v = &g_isqrt * eig.U();
    let zero_mode = lam[dim - 1];
    let lambda1 = -lam[dim - 2];
    let nc = dim - 1;

    let mut w = node_weights(n);
    w.extend(std::iter::repeat_n(1.0 / n as f64, n - 1));
    let z = Mat::from_fn(dim, nc, |i, j| w[i].sqrt() * v[(i, j)]);
    let p = symmetrize(&(z.transpose() * &z));
    let p_isqrt = symmetric_inverse_sqrt(&p)?;

    let mut norms = Vec::with_capacity(times.len());
    for &t in times {
        let zt = Mat::from_fn(dim, nc, |i, j| z[(i, j)] * (lam[j] * t).exp());
        let x = &zt * &p_isqrt;
        let s = x.singular_values().map_err(la)?;
        norms.push(s.into_iter().fold(0.0, f64::max));
    }

    let kappa_convenient = diagonalize(m, SimilarityKind::Convenient)?.kappa;
    let block = [[1.0, -m.m12], [-m.m12, m.m12 / m.m21]];
    let kappa_gram = condition_number(&block).sqrt();
    let decay: Vec<f64> = times.iter().map(|t| (-lambda1 * t).exp()).collect();
    let bound_holds = norms.iter().zip(&decay).all(|(nm, d)| *nm <= kappa_convenient * d);
    let bound_gram_holds = norms.iter().zip(&decay).all(|(nm, d)| *nm <= kappa_gram * d);
    let worst_bound_ratio = norms
        .iter()
        .zip(&decay)
        .map(|(nm, d)| nm / (kappa_convenient * d))
        .fold(0.0, f64::max);
    let (sup_idx, sup_norm) =
        norms.iter().copied().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, x)| if x > acc.1 { (i, x) } else { acc },
        );
    let asymptotic_ratio = norms.last().zip(decay.last()).map_or(f64::NAN, |(nm, d)| nm / d);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut numerical_range = Vec::with_capacity(opts.probe_sizes.len());
    for &pn in &opts.probe_sizes {
        let mut wp = node_weights(pn);
        wp.extend(std::iter::repeat_n(1.0 / pn as f64, pn - 1));
        let mixed = probe(&weighted_symmetric_part(&fd_operator(pn, m)?, &wp), opts, &mut rng)?;
        let wi: Vec<f64> = node_weights(pn).into_iter().cycle().take(2 * (pn + 1)).collect();
        let iso = probe(
            &weighted_symmetric_part(&fd_operator_isolated(pn, m)?, &wi),
            opts,
            &mut rng,
        )?;
        numerical_range.push(NumericalRangeRow {
            n: pn,
            random_max: mixed.random_max,
            optimized_max: mixed.optimized_max,
            exact_max: mixed.exact_max,
            isolated_random_max: iso.random_max,
            isolated_optimized_max: iso.optimized_max,
            isolated_exact_max: iso.exact_max,
        });
    }

    Ok(SemigroupDiagnostics {
        n,
        gamma: m.gamma,
        times: times.to_vec(),
        norms,
        lambda1,
        zero_mode,
        kappa_convenient,
        kappa_gram,
        bound_holds,
        bound_gram_holds,
        worst_bound_ratio,
        sup_norm,
        sup_time: times.get(sup_idx).copied().unwrap_or(f64::NAN),
        asymptotic_ratio,
        gram_asymmetry: asym,
        numerical_range,
    })
}
