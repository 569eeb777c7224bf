//! The 2x2 coupling matrix of the linearised system and its diagonalising
//! similarities.

use serde::Serialize;

use crate::error::{invalid, Result};

pub type Mat2 = [[f64; 2]; 2];

/// `M = [[1, gamma], [alpha/gamma, 1]]`, acting on `(e'', theta'')` with the
/// prefactor `2 lambda theta0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingMatrix {
    /// `E0 / theta0`.
    pub gamma: f64,
    /// Product of the off-diagonal entries; 1/2 for the physical model.
    pub alpha: f64,
    pub lambda: f64,
    pub theta0: f64,
    pub m11: f64,
    pub m12: f64,
    pub m21: f64,
    pub m22: f64,
}

pub const PHYSICAL_ALPHA: f64 = 0.5;

impl CouplingMatrix {
    pub fn new(gamma: f64, alpha: f64, lambda: f64, theta0: f64) -> Result<Self> {
        if !(gamma > 0.0) || !(lambda > 0.0) || !(theta0 > 0.0) {
            return Err(invalid("gamma, lambda and theta0 must be positive"));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid(format!("alpha = {alpha} must lie in (0, 1)")));
        }
        Ok(Self {
            gamma,
            alpha,
            lambda,
            theta0,
            m11: 1.0,
            m12: gamma,
            m21: alpha / gamma,
            m22: 1.0,
        })
    }

    pub fn physical(gamma: f64, lambda: f64, theta0: f64) -> Result<Self> {
        Self::new(gamma, PHYSICAL_ALPHA, lambda, theta0)
    }

    /// Off-diagonal coupling switched off: two independent heat equations,
    /// Neumann for `e` and Dirichlet for `theta`.
    pub fn decoupled(lambda: f64, theta0: f64) -> Self {
        Self {
            gamma: 1.0,
            alpha: 0.0,
            lambda,
            theta0,
            m11: 1.0,
            m12: 0.0,
            m21: 0.0,
            m22: 1.0,
        }
    }

    /// `2 lambda theta0`.
    pub fn scale(&self) -> f64 {
        2.0 * self.lambda * self.theta0
    }

    pub fn entries(&self) -> Mat2 {
        [[self.m11, self.m12], [self.m21, self.m22]]
    }

    pub fn det(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    /// `1 +- sqrt(alpha)`, larger first.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let r = self.alpha.sqrt();
        (1.0 + r, 1.0 - r)
    }
}

/// Same as [`CouplingMatrix::new`].
pub fn coupling_matrix(gamma: f64, alpha: f64, lambda: f64, theta0: f64) -> Result<CouplingMatrix> {
    CouplingMatrix::new(gamma, alpha, lambda, theta0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SimilarityKind {
    /// Rows scaled so that the boundary form of the transformed operator
    /// vanishes.
    Symmetrizing,
    /// `[[1, gamma/sqrt(alpha)], [-1, gamma/sqrt(alpha)]]`.
    Convenient,
    /// `diag(beta, 1/beta)` times the convenient matrix.
    Custom { beta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Similarity {
    pub matrix: Mat2,
    pub inverse: Mat2,
    pub kind: SimilarityKind,
    /// `||S|| ||S^-1||` in the spectral norm.
    pub kappa: f64,
}

pub(crate) fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn inverse(a: &Mat2) -> Mat2 {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]]
}

/// Ratio of the singular values of a 2x2 matrix.
pub fn condition_number(a: &Mat2) -> f64 {
    // Singular values squared are the eigenvalues of A^T A.
    let p = a[0][0] * a[0][0] + a[1][0] * a[1][0];
    let r = a[0][1] * a[0][1] + a[1][1] * a[1][1];
    let q = a[0][0] * a[0][1] + a[1][0] * a[1][1];
    let mean = 0.5 * (p + r);
    let spread = (0.25 * (p - r) * (p - r) + q * q).sqrt();
    let det = (a[0][0] * a[1][1] - a[0][1] * a[1][0]).abs();
    // The smaller eigenvalue via det^2 / larger avoids cancellation.
    let big = mean + spread;
    (big / (det * det / big)).sqrt()
}

impl Similarity {
    fn from_matrix(matrix: Mat2, kind: SimilarityKind) -> Self {
        Self {
            matrix,
            inverse: inverse(&matrix),
            kind,
            kappa: condition_number(&matrix),
        }
    }

    /// `S M S^-1`.
    pub fn conjugate(&self, m: &CouplingMatrix) -> Mat2 {
        mul(&mul(&self.matrix, &m.entries()), &self.inverse)
    }
}

pub fn diagonalize(m: &CouplingMatrix, kind: SimilarityKind) -> Result<Similarity> {
    if !(m.alpha > 0.0) {
        return Err(invalid("a coupled matrix (alpha > 0) is required"));
    }
    let r = m.gamma / m.alpha.sqrt();
    let base = [[1.0, r], [-1.0, r]];
    let scale_rows = |p: f64, q: f64| [[p * base[0][0], p * base[0][1]], [q * base[1][0], q * base[1][1]]];
    let matrix = match kind {
        SimilarityKind::Convenient => base,
        SimilarityKind::Symmetrizing => {
            // (1 + sqrt a) p^2 = (1 - sqrt a) q^2
            let s = m.alpha.sqrt();
            scale_rows((1.0 - s).sqrt(), (1.0 + s).sqrt())
        }
        SimilarityKind::Custom { beta } => {
            if beta == 0.0 || !beta.is_finite() {
                return Err(invalid("beta must be finite and nonzero"));
            }
            scale_rows(beta, 1.0 / beta)
        }
    };
    Ok(Similarity::from_matrix(matrix, kind))
}

/// Coefficient of `[e theta']_0^1` in the boundary terms of the transformed
/// quadratic form, `(1 + sqrt a) g a^2 / sqrt a - (1 - sqrt a) g c^2 / sqrt a`
/// with `a = S_11`, `c = S_21`.
pub fn boundary_form_coefficient(s: &Similarity, m: &CouplingMatrix) -> f64 {
    let root = m.alpha.sqrt();
    let a = s.matrix[0][0];
    let c = s.matrix[1][0];
    (1.0 + root) * m.gamma / root * a * a - (1.0 - root) * m.gamma / root * c * c
}

/// Wavenumbers with `omega / (2 lambda theta0) = (1 + sqrt a) k1^2 = (1 - sqrt a) k2^2`.
pub fn dispersion(omega: f64, m: &CouplingMatrix) -> Result<(f64, f64)> {
    if !(omega >= 0.0) {
        return Err(invalid(format!("omega = {omega} must be nonnegative")));
    }
    let (p, q) = m.eigenvalues();
    let w = omega / m.scale();
    Ok(((w / p).sqrt(), (w / q).sqrt()))
}
