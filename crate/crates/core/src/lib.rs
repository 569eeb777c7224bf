//! Coupled density and temperature transport in one dimension with
//! thermodiffusion and its reciprocal heat flux.
//!
//! * [`model`] and [`currents`]: fields, parameters, face currents.
//! * [`thermo`]: entropy and its production.
//! * [`evolution`]: method-of-lines time integration.
//! * [`stationary`]: closed-form and shooting stationary states.
//! * [`spectral`]: spectrum of the linearised operator.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod currents;
pub mod error;
pub mod evolution;
pub mod grid;
pub mod model;
pub mod spectral;
pub mod stationary;
pub mod thermo;

pub use currents::{energy_current, fluxes, material_current, Fluxes};
pub use error::{Error, Result};
pub use evolution::{conserved_totals, evolve, rhs, Diagnostics, Rhs, StepControl, StepRecord, StepStats, Trajectory};
pub use grid::{Grid1D, Stencil};
pub use model::{
    energy_density, BoundarySpec, EnergyDensityField, FieldState, ModelParams, PotentialSpec, ThermalMode,
    TimePotential,
};
pub use spectral::{CouplingMatrix, Similarity, SimilarityKind, SpectrumResult};
pub use stationary::{Provenance, StationarySolution};
pub use thermo::{boundary_entropy_rates, entropy, entropy_production_rate, BoundaryEntropyRates, ProductionRate};

pub use faer::Mat;
