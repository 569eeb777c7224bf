//! Physical fields and model parameters.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::{interpolate, Grid1D, Stencil};

/// Grid-sampled density and temperature at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub grid: Grid1D,
    pub rho: Vec<f64>,
    pub theta: Vec<f64>,
    pub t: f64,
}

impl FieldState {
    pub fn new(grid: Grid1D, rho: Vec<f64>, theta: Vec<f64>, t: f64) -> Result<Self> {
        let state = Self { grid, rho, theta, t };
        state.validate()?;
        Ok(state)
    }

    pub fn from_fns(grid: Grid1D, rho: impl Fn(f64) -> f64, theta: impl Fn(f64) -> f64) -> Result<Self> {
        let r = grid.sample(rho);
        let th = grid.sample(theta);
        Self::new(grid, r, th, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.check_len("rho", self.rho.len())?;
        self.grid.check_len("theta", self.theta.len())?;
        if let Some(i) = self.rho.iter().position(|r| !(*r >= 0.0) || !r.is_finite()) {
            return Err(invalid(format!(
                "rho[{i}] = {} is not a finite nonnegative value",
                self.rho[i]
            )));
        }
        if let Some(i) = self.theta.iter().position(|th| !(*th > 0.0) || !th.is_finite()) {
            return Err(invalid(format!(
                "theta[{i}] = {} is not a finite positive value",
                self.theta[i]
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Spatial and time derivative of a time-dependent potential.
pub type PotentialFn = dyn Fn(f64, f64) -> (f64, f64) + Send + Sync;

/// `x, t -> (V, dV/dt)`.
#[derive(Clone)]
pub struct TimePotential(Arc<PotentialFn>);

impl TimePotential {
    pub fn new(f: impl Fn(f64, f64) -> (f64, f64) + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }

    pub fn eval(&self, x: f64, t: f64) -> (f64, f64) {
        (self.0)(x, t)
    }
}

impl fmt::Debug for TimePotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("TimePotential(..)")
    }
}

#[derive(Debug, Clone, Default)]
pub enum PotentialSpec {
    #[default]
    Zero,
    /// `V(x) = slope * x`.
    Linear {
        slope: f64,
    },
    /// Nodal values on the simulation grid.
    Tabulated(Vec<f64>),
    TimeDependent(TimePotential),
}

impl PotentialSpec {
    pub fn is_time_dependent(&self) -> bool {
        matches!(self, PotentialSpec::TimeDependent(_))
    }

    pub fn validate(&self, grid: &Grid1D) -> Result<()> {
        match self {
            PotentialSpec::Tabulated(v) => {
                grid.check_len("tabulated potential", v.len())?;
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(invalid("tabulated potential has non-finite values"));
                }
                Ok(())
            }
            PotentialSpec::Linear { slope } if !slope.is_finite() => {
                Err(invalid("linear potential slope must be finite"))
            }
            _ => Ok(()),
        }
    }

    pub fn values(&self, grid: &Grid1D, t: f64) -> Vec<f64> {
        match self {
            PotentialSpec::Zero => vec![0.0; grid.len()],
            PotentialSpec::Linear { slope } => grid.sample(|x| slope * x),
            PotentialSpec::Tabulated(v) => v.clone(),
            PotentialSpec::TimeDependent(f) => grid.sample(|x| f.eval(x, t).0),
        }
    }

    /// `dV/dt` at the nodes, or `None` for a static potential.
    pub fn time_derivative(&self, grid: &Grid1D, t: f64) -> Option<Vec<f64>> {
        match self {
            PotentialSpec::TimeDependent(f) => Some(grid.sample(|x| f.eval(x, t).1)),
            _ => None,
        }
    }

    /// `V'(x)` for a static potential; tabulated data use the local cubic
    /// interpolant.
    pub fn slope_at(&self, x: f64, grid: &Grid1D) -> Result<f64> {
        match self {
            PotentialSpec::Zero => Ok(0.0),
            PotentialSpec::Linear { slope } => Ok(*slope),
            PotentialSpec::Tabulated(v) => Ok(interpolate(v, grid, x).1),
            PotentialSpec::TimeDependent(_) => Err(invalid("a static potential is required here")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThermalMode {
    /// Temperature fixed at both ends (heat bath).
    #[default]
    Dirichlet,
    /// No heat or material crosses the boundary.
    Isolated,
}

/// Material is always confined (`j_c = 0` at both ends).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    #[serde(default = "unit_temperature")]
    pub theta_left: f64,
    #[serde(default = "unit_temperature")]
    pub theta_right: f64,
    #[serde(default)]
    pub thermal_mode: ThermalMode,
}

fn unit_temperature() -> f64 {
    1.0
}

impl BoundarySpec {
    pub fn dirichlet(theta_left: f64, theta_right: f64) -> Self {
        Self {
            theta_left,
            theta_right,
            thermal_mode: ThermalMode::Dirichlet,
        }
    }

    pub fn isolated() -> Self {
        Self {
            theta_left: 1.0,
            theta_right: 1.0,
            thermal_mode: ThermalMode::Isolated,
        }
    }

    pub fn is_isolated(&self) -> bool {
        self.thermal_mode == ThermalMode::Isolated
    }

    pub fn validate(&self) -> Result<()> {
        if self.thermal_mode == ThermalMode::Dirichlet && !(self.theta_left > 0.0 && self.theta_right > 0.0) {
            return Err(invalid("boundary temperatures must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ModelParams {
    pub lambda: f64,
    /// `Some` selects the full model with a density ceiling, `None` the
    /// rare-gas limit.
    pub rho_max: Option<f64>,
    pub potential: PotentialSpec,
    pub bc: BoundarySpec,
    pub stencil: Stencil,
}

impl ModelParams {
    pub fn rare_gas(lambda: f64, potential: PotentialSpec, bc: BoundarySpec) -> Self {
        Self {
            lambda,
            rho_max: None,
            potential,
            bc,
            stencil: Stencil::default(),
        }
    }

    pub fn with_rho_max(mut self, rho_max: f64) -> Self {
        self.rho_max = Some(rho_max);
        self
    }

    pub fn with_stencil(mut self, stencil: Stencil) -> Self {
        self.stencil = stencil;
        self
    }

    pub fn validate(&self, grid: &Grid1D) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(invalid("lambda must be positive"));
        }
        if let Some(m) = self.rho_max {
            if !(m > 0.0) {
                return Err(invalid("rho_max must be positive"));
            }
        }
        self.bc.validate()?;
        self.potential.validate(grid)
    }

    /// Crowding factor `rho (1 - rho/rho_max)`, or `rho` for the rare gas.
    pub fn mobility(&self, rho: f64) -> f64 {
        match self.rho_max {
            Some(m) => rho * (1.0 - rho / m),
            None => rho,
        }
    }
}

/// `E_i = rho_i (theta_i + V_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyDensityField {
    pub values: Vec<f64>,
}

pub fn energy_density(state: &FieldState, params: &ModelParams) -> EnergyDensityField {
    let v = params.potential.values(&state.grid, state.t);
    let values = state
        .rho
        .iter()
        .zip(&state.theta)
        .zip(&v)
        .map(|((r, th), v)| r * (th + v))
        .collect();
    EnergyDensityField { values }
}
