//! Turns a config into a grid, model parameters and an initial state.

use std::f64::consts::PI;

use soret_core::model::{BoundarySpec, FieldState, ModelParams, PotentialSpec};
use soret_core::stationary::{self, StationarySolution};
use soret_core::{Error, Grid1D};

use crate::config::{InitialConfig, Job, Profile, StationaryConfig, DEFAULT_NODES};
use crate::output::Table;

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Model(Error),
    Io(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Model(e) if !e.is_numerical() => 2,
            Failure::Model(_) => 3,
            Failure::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "config error: {m}"),
            Failure::Model(e) => write!(f, "{e}"),
            Failure::Io(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Model(e)
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Io(e)
    }
}

pub fn config_err(msg: impl Into<String>) -> Failure {
    Failure::Config(msg.into())
}

/// Node count, from `grid.n` or the rows of a tabulated initial state.
pub fn grid_for(job: &Job) -> Result<(Grid1D, Option<Table>), Failure> {
    let table = match &job.config.initial {
        Some(InitialConfig::Tabulated { path }) => {
            let p = job.resolve(path);
            Some(Table::read(&p).map_err(config_err)?)
        }
        _ => None,
    };
    let n = match (job.config.grid.n, &table) {
        (Some(n), Some(t)) if n != t.len() => {
            return Err(config_err(format!(
                "grid.n = {n} but the initial table has {} rows",
                t.len()
            )));
        }
        (Some(n), _) => n,
        (None, Some(t)) => t.len(),
        (None, None) => DEFAULT_NODES,
    };
    Ok((Grid1D::new(n)?, table))
}

pub fn profile_values(profile: &Profile, grid: &Grid1D, job: &Job, column: &str) -> Result<Vec<f64>, Failure> {
    let values = match profile {
        Profile::Zero => vec![0.0; grid.len()],
        Profile::Linear { slope } => grid.sample(|x| slope * x),
        Profile::Polynomial { coefficients } => {
            grid.sample(|x| coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c))
        }
        Profile::Tabulated { values } => values.clone(),
        Profile::File { path, column: col } => {
            let p = job.resolve(path);
            let t = Table::read(&p).map_err(config_err)?;
            let name = col.as_deref().unwrap_or(column);
            t.column(name)
                .map_err(|e| config_err(format!("{}: {e}", p.display())))?
        }
    };
    if values.len() != grid.len() {
        return Err(config_err(format!(
            "profile has {} values, grid has {} nodes",
            values.len(),
            grid.len()
        )));
    }
    Ok(values)
}

pub fn potential_spec(profile: &Profile, grid: &Grid1D, job: &Job) -> Result<PotentialSpec, Failure> {
    Ok(match profile {
        Profile::Zero => PotentialSpec::Zero,
        Profile::Linear { slope } => PotentialSpec::Linear { slope: *slope },
        _ => PotentialSpec::Tabulated(profile_values(profile, grid, job, "V")?),
    })
}

fn driven_potential() -> Profile {
    Profile::Polynomial {
        coefficients: vec![0.0, 1.0, 0.5],
    }
}

/// Potential and boundary data implied by an initial family.
fn natural(initial: &InitialConfig) -> (Profile, BoundarySpec) {
    match initial {
        InitialConfig::DrivenExample {} => (driven_potential(), BoundarySpec::dirichlet(1.0, 4.0)),
        InitialConfig::Boltzmann { g, theta0, .. } => {
            (Profile::Linear { slope: *g }, BoundarySpec::dirichlet(*theta0, *theta0))
        }
        _ => (Profile::Zero, BoundarySpec::isolated()),
    }
}

pub fn model_params(job: &Job, potential: PotentialSpec, bc: BoundarySpec) -> ModelParams {
    let m = &job.config.model;
    let mut p = ModelParams::rare_gas(m.lambda, potential, bc).with_stencil(m.stencil);
    p.rho_max = m.rho_max;
    p
}

pub fn stationary_solution(job: &Job, grid: &Grid1D) -> Result<StationarySolution, Failure> {
    let cfg = &job.config;
    let Some(method) = &cfg.stationary else {
        return Err(config_err("missing `stationary` section"));
    };
    if cfg.model.rho_max.is_some() {
        return Err(config_err(
            "stationary solutions use the rare-gas model; remove model.rho_max",
        ));
    }
    let implied = !matches!(method, StationaryConfig::FromPotential { .. });
    if implied && cfg.model.potential.is_some() {
        return Err(config_err("model.potential is fixed by the stationary method"));
    }
    Ok(match method {
        StationaryConfig::Boltzmann { g, theta0, mass } => stationary::boltzmann_profile(*g, *theta0, *mass, grid)?,
        StationaryConfig::DrivenExample {} => stationary::driven_example(cfg.model.lambda, grid)?,
        StationaryConfig::FromPotential { theta0, theta1, k } => {
            let v = cfg.model.potential.clone().unwrap_or(Profile::Zero);
            let v = potential_spec(&v, grid, job)?;
            stationary::from_potential(v, *theta0, *theta1, *k, grid)?
        }
        StationaryConfig::FromTheta { theta, k } => {
            let th = profile_values(theta, grid, job, "theta")?;
            stationary::from_theta(th, *k, grid)?
        }
    })
}

/// Initial state and model for `evolve` and `diagnose`.
pub fn initial_problem(job: &Job) -> Result<(FieldState, ModelParams), Failure> {
    let cfg = &job.config;
    let (grid, table) = grid_for(job)?;
    match (&cfg.initial, &cfg.stationary) {
        (Some(_), Some(_)) => Err(config_err("give either `initial` or `stationary`, not both")),
        (None, None) => Err(config_err("missing `initial` section")),
        (None, Some(_)) => {
            let sol = stationary_solution(job, &grid)?;
            let mut params = sol.params(cfg.model.lambda).with_stencil(cfg.model.stencil);
            if let Some(bc) = cfg.model.boundary {
                params.bc = bc;
            }
            Ok((sol.state, params))
        }
        (Some(init), None) => {
            let (profile, bc) = natural(init);
            let potential = cfg.model.potential.as_ref().unwrap_or(&profile);
            let potential = potential_spec(potential, &grid, job)?;
            let params = model_params(job, potential, cfg.model.boundary.unwrap_or(bc));
            let state = initial_state(init, &grid, table, job)?;
            Ok((state, params))
        }
    }
}

fn initial_state(init: &InitialConfig, grid: &Grid1D, table: Option<Table>, job: &Job) -> Result<FieldState, Failure> {
    let g = grid.clone();
    Ok(match init {
        InitialConfig::Uniform { rho, theta } => FieldState::from_fns(g, |_| *rho, |_| *theta)?,
        InitialConfig::Boltzmann { g: slope, theta0, mass } => {
            stationary::boltzmann_profile(*slope, *theta0, *mass, grid)?.state
        }
        InitialConfig::CosinePerturbation {
            rho0,
            theta0,
            amplitude,
            theta_amplitude,
            mode,
        } => {
            let k = *mode as f64 * PI;
            FieldState::from_fns(
                g,
                |x| rho0 * (1.0 + amplitude * (k * x).cos()),
                |x| theta0 * (1.0 + theta_amplitude * (k * x).cos()),
            )?
        }
        InitialConfig::DrivenExample {} => stationary::driven_example(job.config.model.lambda, grid)?.state,
        InitialConfig::Tabulated { path } => {
            let t = table.expect("table is read with the grid");
            let name = job.resolve(path).display().to_string();
            let col = |c: &str| t.column(c).map_err(|e| config_err(format!("{name}: {e}")));
            let x = col("x")?;
            let h = grid.spacing();
            if let Some(i) = x.iter().zip(grid.nodes()).position(|(a, b)| (a - b).abs() > 1e-9 * h) {
                return Err(config_err(format!(
                    "{name}: x[{i}] = {} is not on the uniform grid of {} nodes",
                    x[i],
                    grid.len()
                )));
            }
            FieldState::new(g, col("rho")?, col("theta")?, 0.0)?
        }
    })
}
