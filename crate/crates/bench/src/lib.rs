//! Fixtures shared by the benchmarks in `benches/`.

use soret_core::model::{BoundarySpec, FieldState, ModelParams, PotentialSpec};
use soret_core::Grid1D;

/// A smooth, strictly positive state on `n` nodes.
pub fn smooth_state(n: usize) -> FieldState {
    let grid = Grid1D::new(n).expect("n >= minimum grid size");
    FieldState::from_fns(
        grid,
        |x| 1.0 + 0.3 * (3.0 * x).cos(),
        |x| 1.5 + 0.2 * (2.0 * x + 0.4).sin(),
    )
    .expect("positive fields")
}

pub fn isolated_params() -> ModelParams {
    ModelParams::rare_gas(1.0, PotentialSpec::Linear { slope: 0.5 }, BoundarySpec::isolated())
}
