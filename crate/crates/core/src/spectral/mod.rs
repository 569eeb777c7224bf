//! Spectrum of the linearised operator about a uniform state.
//!
//! Two independent routes give the eigenvalues `omega` of `-L`: roots of the
//! boundary determinant of the trigonometric mode ansatz, and a dense
//! finite-difference matrix.

mod coupling;
mod fd;
mod semigroup;
mod transcendental;

use serde::Serialize;

pub use coupling::{
    boundary_form_coefficient, condition_number, coupling_matrix, diagonalize, dispersion, CouplingMatrix, Mat2,
    Similarity, SimilarityKind, PHYSICAL_ALPHA,
};
pub use fd::{eigenvalues_fd, fd_operator, fd_operator_isolated, fd_spectrum, richardson, FdSpectrum};
pub use semigroup::{log_spaced, semigroup_diagnostics, NumericalRangeRow, SemigroupDiagnostics, SemigroupOptions};
pub use transcendental::{
    cross_check, eigenvalues_transcendental, eigenvalues_transcendental_with, mode_ansatz, mode_determinant,
    normalized_determinant, scan_step, ModeAnsatz, ScanOptions,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Eigenvalue {
    pub omega: f64,
    /// 2 for a double root of the boundary determinant.
    pub multiplicity: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SpectrumMethod {
    Transcendental,
    MatrixOracle {
        n: usize,
    },
    /// h^2 extrapolation of two matrix-oracle resolutions.
    Extrapolated {
        coarse: usize,
        fine: usize,
    },
}

/// Eigenvalues of `-L`, ascending, the zero mode first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<Eigenvalue>,
    pub method: SpectrumMethod,
    /// Largest `|Im|` seen before the imaginary parts were dropped.
    pub max_imag: f64,
    /// Largest `|Re|` over the whole computed spectrum.
    pub max_abs_real: f64,
    /// Largest real part of the eigenvalues of `L` itself.
    pub max_real_of_l: f64,
    pub gamma_used: f64,
    /// `|omega_trans - omega_matrix|` per eigenvalue, when compared.
    pub agreement: Option<Vec<f64>>,
}

impl SpectrumResult {
    pub fn omegas(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|e| e.omega).collect()
    }

    /// Smallest nonzero eigenvalue.
    pub fn lambda1(&self) -> Option<f64> {
        self.eigenvalues.get(1).map(|e| e.omega)
    }
}
