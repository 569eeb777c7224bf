use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A full-model quantity was requested where the density reaches the ceiling.
    #[error("density {rho} at node {node} is not below rho_max = {rho_max}")]
    Domain { node: usize, rho: f64, rho_max: f64 },

    #[error("step size {dt:e} fell below the minimum {dt_min:e} at t = {t}")]
    Stiffness { t: f64, dt: f64, dt_min: f64 },

    #[error("{field} = {value} left the positive cone at node {node}, t = {t}")]
    Positivity {
        field: &'static str,
        node: usize,
        t: f64,
        value: f64,
    },

    #[error("maximum number of steps ({0}) exceeded")]
    MaxSteps(usize),

    /// The discrete temperature derivative vanishes or changes sign.
    #[error("singular profile: temperature derivative vanishes or changes sign near node {node}")]
    SingularProfile { node: usize },

    #[error("shooting could not bracket a solution for theta'(0) in [{lo}, {hi}] ({singular} singular shots)")]
    NoBracket { lo: f64, hi: f64, singular: usize },

    #[error("shot with theta'(0) = {slope} reached theta <= 0 at x = {x}")]
    SingularShot { slope: f64, x: f64 },

    #[error("found {found} of {requested} eigenvalues below omega_max = {omega_max}")]
    IncompleteSpectrum {
        found: usize,
        requested: usize,
        omega_max: f64,
    },

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        !matches!(self, Error::InvalidInput(_))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::Domain { .. } => "domain",
            Error::Stiffness { .. } => "stiffness",
            Error::Positivity { .. } => "positivity",
            Error::MaxSteps(_) => "max_steps",
            Error::SingularProfile { .. } => "singular_profile",
            Error::NoBracket { .. } => "no_bracket",
            Error::SingularShot { .. } => "singular_shot",
            Error::IncompleteSpectrum { .. } => "incomplete_spectrum",
            Error::LinearAlgebra(_) => "linear_algebra",
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
