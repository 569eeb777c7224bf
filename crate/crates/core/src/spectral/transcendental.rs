//! Roots of the boundary determinant of the trigonometric mode ansatz.
//!
//! In the diagonal variables the modes are
//! `e = A cos k1 x + B sin k1 x`, `theta = C cos k2 x + D sin k2 x`, subject to
//! `e' - theta' = 0` and `e + theta = 0` at both ends.

use faer::Mat;
use serde::Serialize;

use super::coupling::{dispersion, CouplingMatrix};
use super::fd::{fd_spectrum, richardson};
use super::{Eigenvalue, SpectrumMethod, SpectrumResult};
use crate::error::{invalid, Error, Result};

const BISECTION_RTOL: f64 = 1e-12;
/// `|g|` below this at a local minimum without a sign change is a double root.
const DOUBLE_ROOT_TOL: f64 = 1e-10;

fn boundary_rows(omega: f64, m: &CouplingMatrix) -> Result<[[f64; 4]; 4]> {
    let (k1, k2) = dispersion(omega, m)?;
    let (s1, c1) = k1.sin_cos();
    let (s2, c2) = k2.sin_cos();
    let rows = [
        [0.0, k1, 0.0, -k2],
        [1.0, 0.0, 1.0, 0.0],
        [-k1 * s1, k1 * c1, k2 * s2, -k2 * c2],
        [c1, s1, c2, s2],
    ];
    Ok(rows)
}

/// Gaussian elimination with partial pivoting; exact zero for a zero column.
fn det4(mut a: [[f64; 4]; 4]) -> f64 {
    let mut det = 1.0;
    for col in 0..4 {
        let p = (col..4)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap_or(col);
        if a[p][col] == 0.0 {
            return 0.0;
        }
        if p != col {
            a.swap(p, col);
            det = -det;
        }
        det *= a[col][col];
        for r in col + 1..4 {
            let f = a[r][col] / a[col][col];
            let pivot = a[col];
            for (x, p) in a[r].iter_mut().zip(pivot).skip(col) {
                *x -= f * p;
            }
        }
    }
    det
}

/// Determinant of the 4x4 system in `(A, B, C, D)`.
pub fn mode_determinant(omega: f64, m: &CouplingMatrix) -> Result<f64> {
    Ok(det4(boundary_rows(omega, m)?))
}

/// `mode_determinant / (k1^2 + k2^2)`, bounded in `omega`; zero at `omega = 0`.
pub fn normalized_determinant(omega: f64, m: &CouplingMatrix) -> Result<f64> {
    let (k1, k2) = dispersion(omega, m)?;
    let norm = k1 * k1 + k2 * k2;
    if norm == 0.0 {
        return Ok(0.0);
    }
    Ok(mode_determinant(omega, m)? / norm)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeAnsatz {
    pub omega: f64,
    pub k1: f64,
    pub k2: f64,
    /// Unit null vector `(A, B, C, D)` of the boundary system.
    pub coefficients: [f64; 4],
    /// Smallest singular value of the boundary system.
    pub residual: f64,
}

pub fn mode_ansatz(omega: f64, m: &CouplingMatrix) -> Result<ModeAnsatz> {
    let (k1, k2) = dispersion(omega, m)?;
    let rows = boundary_rows(omega, m)?;
    let b = Mat::from_fn(4, 4, |i, j| rows[i][j]);
    let svd = b.svd().map_err(|e| Error::LinearAlgebra(format!("{e:?}")))?;
    let s = svd.S().column_vector();
    let j = (0..4).min_by(|&a, &b| s[a].abs().total_cmp(&s[b].abs())).unwrap_or(3);
    let v = svd.V();
    Ok(ModeAnsatz {
        omega,
        k1,
        k2,
        coefficients: [v[(0, j)], v[(1, j)], v[(2, j)], v[(3, j)]],
        residual: s[j].abs(),
    })
}

/// Default scan step `2 lambda theta0 min(1 +- sqrt a) (pi/4)^2`.
pub fn scan_step(m: &CouplingMatrix) -> f64 {
    let (_, small) = m.eigenvalues();
    let q = std::f64::consts::FRAC_PI_4;
    m.scale() * small * q * q
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    /// Multiplies the default scan step.
    pub step_factor: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { step_factor: 1.0 }
    }
}

fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, mut flo: f64) -> f64 {
    while hi - lo > BISECTION_RTOL * hi {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Root of the derivative of `f` inside `[lo, hi]`, located by bisection on
/// a central difference.
fn bisect_derivative(f: &impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let d = |x: f64| {
        let h = 1e-7 * x.max(1.0);
        f(x + h) - f(x - h)
    };
    let (mut a, mut b) = (lo, hi);
    let mut da = d(a);
    for _ in 0..200 {
        if b - a <= BISECTION_RTOL * b {
            break;
        }
        let mid = 0.5 * (a + b);
        let dm = d(mid);
        if (dm > 0.0) == (da > 0.0) {
            a = mid;
            da = dm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

pub fn eigenvalues_transcendental(m: &CouplingMatrix, count: usize, omega_max: f64) -> Result<SpectrumResult> {
    eigenvalues_transcendental_with(m, count, omega_max, ScanOptions::default())
}

/// Scans `(0, omega_max]`, bisects sign changes, and checks local minima of
/// `|g|` for double roots. `count` includes the zero mode; a double root
/// counts twice.
pub fn eigenvalues_transcendental_with(
    m: &CouplingMatrix,
    count: usize,
    omega_max: f64,
    opts: ScanOptions,
) -> Result<SpectrumResult> {
    if count == 0 {
        return Err(invalid("count must be at least 1"));
    }
    if !(omega_max > 0.0) || !(opts.step_factor > 0.0) {
        return Err(invalid("omega_max and step_factor must be positive"));
    }
    let g = |w: f64| normalized_determinant(w, m).unwrap_or(f64::NAN);
    let step = scan_step(m) * opts.step_factor;
    let steps = (omega_max / step).ceil() as usize;
    // Start just off zero: the zero mode is a simple root of g.
    let grid: Vec<f64> = std::iter::once(step * 1e-6)
        .chain((1..=steps).map(|i| (i as f64 * step).min(omega_max)))
        .collect();
    let vals: Vec<f64> = grid.iter().map(|&w| g(w)).collect();

    let mut found = vec![Eigenvalue {
        omega: 0.0,
        multiplicity: 1,
    }];
    let total = |f: &[Eigenvalue]| f.iter().map(|e| e.multiplicity as usize).sum::<usize>();
    for i in 0..grid.len() - 1 {
        if total(&found) >= count {
            break;
        }
        let (a, b, fa, fb) = (grid[i], grid[i + 1], vals[i], vals[i + 1]);
        if fa == 0.0 && i > 0 {
            found.push(Eigenvalue {
                omega: a,
                multiplicity: 1,
            });
        } else if fa * fb < 0.0 {
            found.push(Eigenvalue {
                omega: bisect(&g, a, b, fa),
                multiplicity: 1,
            });
        } else if i > 0 && i + 1 < grid.len() {
            let prev = vals[i - 1];
            let touching = fa.abs() < prev.abs() && fa.abs() < fb.abs() && prev * fa > 0.0 && fa * fb > 0.0;
            if touching {
                let w = bisect_derivative(&g, grid[i - 1], b);
                if g(w).abs() < DOUBLE_ROOT_TOL {
                    found.push(Eigenvalue {
                        omega: w,
                        multiplicity: 2,
                    });
                }
            }
        }
    }
    let n_found = total(&found);
    if n_found < count {
        return Err(Error::IncompleteSpectrum {
            found: n_found,
            requested: count,
            omega_max,
        });
    }
    let max_abs_real = found.last().map_or(0.0, |e| e.omega);
    Ok(SpectrumResult {
        eigenvalues: found,
        method: SpectrumMethod::Transcendental,
        max_imag: 0.0,
        max_abs_real,
        max_real_of_l: 0.0,
        gamma_used: m.gamma,
        agreement: None,
    })
}

/// Transcendental roots compared with the h^2-extrapolated matrix oracle at
/// `n` and `2n`. The scan step is halved while the scan finds fewer roots
/// below the largest compared eigenvalue than the oracle does.
pub fn cross_check(m: &CouplingMatrix, count: usize, n: usize) -> Result<(SpectrumResult, SpectrumResult)> {
    let coarse = fd_spectrum(n, m)?;
    let fine = fd_spectrum(2 * n, m)?;
    let oracle = richardson(&coarse, &fine, count)?;
    let omegas = oracle.omegas();
    let top = omegas[count - 1];
    let mut opts = ScanOptions::default();
    let mut trans = eigenvalues_transcendental_with(m, count, 1.5 * top + scan_step(m), opts)?;
    for _ in 0..4 {
        let below = trans
            .eigenvalues
            .iter()
            .filter(|e| e.omega <= top * (1.0 + 1e-3))
            .map(|e| e.multiplicity as usize)
            .sum::<usize>();
        if below >= count {
            break;
        }
        opts.step_factor *= 0.5;
        trans = eigenvalues_transcendental_with(m, count, 1.5 * top + scan_step(m), opts)?;
    }
    let t = trans.omegas();
    let agreement: Vec<f64> = t.iter().zip(&omegas).map(|(a, b)| (a - b).abs()).collect();
    trans.agreement = Some(agreement);
    Ok((trans, oracle))
}
