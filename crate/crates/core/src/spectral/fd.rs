//! Finite-difference matrix for the linearised operator.
//!
//! With `n` intervals of width `h = 1/n`, `e` lives on the nodes `0..=n`
//! (ghost-point Neumann closure) and `theta` on the interior nodes `1..n`
//! (Dirichlet elimination), giving a `2n x 2n` matrix. At the two boundary
//! nodes `theta` is pinned, so `theta'' = -m21 e''` there and the `e` row
//! becomes `(1 - m12 m21) e''`.

use faer::Mat;

use super::coupling::CouplingMatrix;
use super::{Eigenvalue, SpectrumMethod, SpectrumResult};
use crate::error::{invalid, Error, Result};

pub const MIN_INTERVALS: usize = 8;

fn neumann_entry(n: usize, i: usize, j: usize) -> f64 {
    let mut v = 0.0;
    if i == j {
        v = -2.0;
    } else if j + 1 == i || i + 1 == j {
        v = 1.0;
        // Mirrored ghost point doubles the inward neighbour.
        if (i == 0 && j == 1) || (i == n && j == n - 1) {
            v = 2.0;
        }
    }
    v
}

pub fn fd_operator(n: usize, m: &CouplingMatrix) -> Result<Mat<f64>> {
    if n < MIN_INTERVALS {
        return Err(invalid(format!("need at least {MIN_INTERVALS} intervals, got {n}")));
    }
    let inv_h2 = (n * n) as f64;
    let s = m.scale() * inv_h2;
    let ne = n + 1;
    let pinned = 1.0 - m.m12 * m.m21;
    Ok(Mat::from_fn(2 * n, 2 * n, |r, c| {
        if r < ne {
            let boundary = r == 0 || r == n;
            if c < ne {
                let w = if boundary { pinned } else { m.m11 };
                s * w * neumann_entry(n, r, c)
            } else if boundary {
                0.0
            } else {
                // theta column for node c - ne + 1, Dirichlet stencil at node r.
                let node = c - ne + 1;
                s * m.m12 * dirichlet_entry(r, node)
            }
        } else {
            let node = r - ne + 1;
            if c < ne {
                s * m.m21 * neumann_entry(n, node, c)
            } else {
                s * m.m22 * dirichlet_entry(node, c - ne + 1)
            }
        }
    }))
}

fn dirichlet_entry(i: usize, j: usize) -> f64 {
    if i == j {
        -2.0
    } else if i + 1 == j || j + 1 == i {
        1.0
    } else {
        0.0
    }
}

/// Both blocks with the ghost-point Neumann closure on nodes `0..=n`:
/// `2 lambda theta0 (M kron Delta_N)`, size `2(n + 1)`.
pub fn fd_operator_isolated(n: usize, m: &CouplingMatrix) -> Result<Mat<f64>> {
    if n < MIN_INTERVALS {
        return Err(invalid(format!("need at least {MIN_INTERVALS} intervals, got {n}")));
    }
    let ne = n + 1;
    let s = m.scale() * (n * n) as f64;
    let mm = m.entries();
    Ok(Mat::from_fn(2 * ne, 2 * ne, |r, c| {
        s * mm[r / ne][c / ne] * neumann_entry(n, r % ne, c % ne)
    }))
}

/// Full spectrum of `fd_operator`.
#[derive(Debug, Clone, PartialEq)]
pub struct FdSpectrum {
    pub n: usize,
    pub gamma: f64,
    /// `-Re` of every eigenvalue, ascending.
    pub omegas: Vec<f64>,
    pub max_imag: f64,
    pub max_abs_real: f64,
    pub max_real_of_l: f64,
    /// Max-row-sum norm of the matrix.
    pub operator_norm: f64,
}

pub fn fd_spectrum(n: usize, m: &CouplingMatrix) -> Result<FdSpectrum> {
    let k = fd_operator(n, m)?;
    let operator_norm = (0..k.nrows())
        .map(|i| (0..k.ncols()).map(|j| k[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let ev = k.eigenvalues().map_err(|e| Error::LinearAlgebra(format!("{e:?}")))?;
    let mut max_imag = 0.0_f64;
    let mut max_abs_real = 0.0_f64;
    let mut max_real_of_l = f64::NEG_INFINITY;
    let mut omegas = Vec::with_capacity(ev.len());
    for z in ev {
        max_imag = max_imag.max(z.im.abs());
        max_abs_real = max_abs_real.max(z.re.abs());
        max_real_of_l = max_real_of_l.max(z.re);
        omegas.push(-z.re);
    }
    omegas.sort_by(f64::total_cmp);
    Ok(FdSpectrum {
        n,
        gamma: m.gamma,
        omegas,
        max_imag,
        max_abs_real,
        max_real_of_l,
        operator_norm,
    })
}

impl FdSpectrum {
    fn result(&self, count: usize, method: SpectrumMethod, omegas: Vec<f64>) -> SpectrumResult {
        SpectrumResult {
            eigenvalues: omegas
                .into_iter()
                .take(count)
                .map(|omega| Eigenvalue { omega, multiplicity: 1 })
                .collect(),
            method,
            max_imag: self.max_imag,
            max_abs_real: self.max_abs_real,
            max_real_of_l: self.max_real_of_l,
            gamma_used: self.gamma,
            agreement: None,
        }
    }

    pub fn smallest(&self, count: usize) -> SpectrumResult {
        self.result(count, SpectrumMethod::MatrixOracle { n: self.n }, self.omegas.clone())
    }
}

/// Dense nonsymmetric eigensolve; the `count` smallest `omega`.
pub fn eigenvalues_fd(n: usize, m: &CouplingMatrix, count: usize) -> Result<SpectrumResult> {
    if count > n {
        return Err(invalid(format!("count {count} exceeds n = {n}")));
    }
    Ok(fd_spectrum(n, m)?.smallest(count))
}

/// `(4 omega_fine - omega_coarse) / 3` for the `count` smallest eigenvalues;
/// `fine` must have twice the intervals of `coarse`.
pub fn richardson(coarse: &FdSpectrum, fine: &FdSpectrum, count: usize) -> Result<SpectrumResult> {
    if fine.n != 2 * coarse.n {
        return Err(invalid("fine grid must halve the coarse spacing"));
    }
    if count > coarse.n {
        return Err(invalid(format!("count {count} exceeds n = {}", coarse.n)));
    }
    let omegas = coarse
        .omegas
        .iter()
        .zip(&fine.omegas)
        .take(count)
        .map(|(c, f)| (4.0 * f - c) / 3.0)
        .collect();
    let mut r = fine.result(
        count,
        SpectrumMethod::Extrapolated {
            coarse: coarse.n,
            fine: fine.n,
        },
        omegas,
    );
    r.max_imag = coarse.max_imag.max(fine.max_imag);
    Ok(r)
}
