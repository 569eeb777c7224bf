//! JSON run configuration.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Deserialize;
use serde_json::Value;

use soret_core::model::BoundarySpec;
use soret_core::spectral::PHYSICAL_ALPHA;
use soret_core::Stencil;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Evolve,
    Stationary,
    Spectrum,
    Diagnose,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Evolve => "evolve",
            Command::Stationary => "stationary",
            Command::Spectrum => "spectrum",
            Command::Diagnose => "diagnose",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Must agree with the command line when present.
    pub command: Option<Command>,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub grid: GridConfig,
    pub initial: Option<InitialConfig>,
    pub evolution: Option<EvolutionConfig>,
    pub stationary: Option<StationaryConfig>,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "one")]
    pub lambda: f64,
    pub rho_max: Option<f64>,
    /// Defaults to the natural potential of the initial condition.
    pub potential: Option<Profile>,
    /// Defaults to the natural boundary data of the initial condition.
    pub boundary: Option<BoundarySpec>,
    #[serde(default)]
    pub stencil: Stencil,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            rho_max: None,
            potential: None,
            boundary: None,
            stencil: Stencil::default(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Node count. Taken from the file for tabulated initial data.
    pub n: Option<usize>,
}

pub const DEFAULT_NODES: usize = 101;

/// A static function of `x`, used for potentials and prescribed temperatures.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Zero,
    Linear {
        slope: f64,
    },
    /// `sum c_i x^i`.
    Polynomial {
        coefficients: Vec<f64>,
    },
    /// Nodal values.
    Tabulated {
        values: Vec<f64>,
    },
    /// One column of a CSV file with a header row.
    File {
        path: PathBuf,
        column: Option<String>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    Uniform {
        #[serde(default = "one")]
        rho: f64,
        #[serde(default = "one")]
        theta: f64,
    },
    Boltzmann {
        g: f64,
        #[serde(default = "one")]
        theta0: f64,
        #[serde(default = "one")]
        mass: f64,
    },
    /// `rho0 (1 + amplitude cos(mode pi x))`, and likewise for theta with
    /// `theta_amplitude`.
    CosinePerturbation {
        #[serde(default = "one")]
        rho0: f64,
        #[serde(default = "one")]
        theta0: f64,
        amplitude: f64,
        #[serde(default)]
        theta_amplitude: f64,
        mode: u32,
    },
    DrivenExample {},
    /// CSV with columns `x`, `rho`, `theta`.
    Tabulated {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    pub t_end: f64,
    /// Evenly spaced snapshots on `[0, t_end]`, ignored when `output_times`
    /// is given.
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
    pub output_times: Option<Vec<f64>>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub dt_initial: Option<f64>,
    pub dt_max: Option<f64>,
    pub max_steps: Option<usize>,
    #[serde(default)]
    pub record_steps: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum StationaryConfig {
    Boltzmann {
        g: f64,
        #[serde(default = "one")]
        theta0: f64,
        #[serde(default = "one")]
        mass: f64,
    },
    DrivenExample {},
    /// Solves for theta given `model.potential` and the bath temperatures.
    FromPotential {
        theta0: f64,
        theta1: f64,
        k: f64,
    },
    FromTheta {
        theta: Profile,
        k: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumMethodConfig {
    #[default]
    Transcendental,
    /// Dense matrix at every size in `oracle_n`.
    Matrix,
    /// `h^2` extrapolation from `n` and `2n`, `n = oracle_n[0]`.
    Extrapolated,
    /// Transcendental roots compared against the extrapolated matrix.
    CrossCheck,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default = "physical_alpha")]
    pub alpha: f64,
    /// Defaults to `model.lambda`.
    pub lambda: Option<f64>,
    #[serde(default = "one")]
    pub theta0: f64,
    /// Number of eigenvalues, the zero mode included.
    #[serde(default = "default_count")]
    pub count: usize,
    pub omega_max: Option<f64>,
    #[serde(default)]
    pub method: SpectrumMethodConfig,
    #[serde(default = "default_oracle_n")]
    pub oracle_n: Vec<usize>,
    pub semigroup: Option<SemigroupConfig>,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            alpha: PHYSICAL_ALPHA,
            lambda: None,
            theta0: 1.0,
            count: default_count(),
            omega_max: None,
            method: SpectrumMethodConfig::default(),
            oracle_n: default_oracle_n(),
            semigroup: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemigroupConfig {
    #[serde(default = "default_semigroup_n")]
    pub n: usize,
    #[serde(default = "default_t_min")]
    pub t_min: f64,
    #[serde(default = "one")]
    pub t_max: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    pub seed: Option<u64>,
    pub random_vectors: Option<usize>,
    pub probe_sizes: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Relative to the config file.
    pub dir: Option<PathBuf>,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            formats: default_formats(),
        }
    }
}

impl OutputConfig {
    pub fn csv(&self) -> bool {
        self.formats.contains(&Format::Csv)
    }

    pub fn json(&self) -> bool {
        self.formats.contains(&Format::Json)
    }
}

/// Replaces the value at a JSON pointer for each entry of `values`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub path: String,
    pub values: Vec<Value>,
}

fn one() -> f64 {
    1.0
}

fn physical_alpha() -> f64 {
    PHYSICAL_ALPHA
}

fn default_snapshots() -> usize {
    11
}

fn default_count() -> usize {
    6
}

fn default_oracle_n() -> Vec<usize> {
    vec![200]
}

fn default_semigroup_n() -> usize {
    100
}

fn default_t_min() -> f64 {
    1e-3
}

fn default_samples() -> usize {
    50
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

/// A parsed config together with where it came from.
#[derive(Debug, Clone)]
pub struct Job {
    pub config: RunConfig,
    /// Directory that relative paths in the config refer to.
    pub base: PathBuf,
    pub out: PathBuf,
    /// Sweep value that produced this job, if any.
    pub sweep_value: Option<Value>,
}

impl Job {
    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base.join(path)
        }
    }
}

/// Reads a config file and expands a sweep into one job per value.
///
/// `out` overrides `output.dir`; sweep jobs write to `run_000`, `run_001`, ...
/// below the output directory.
pub fn load(command: Command, path: &Path, out: Option<&Path>) -> Result<Vec<Job>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut raw: Value = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let sweep = match raw.as_object_mut().and_then(|o| o.remove("sweep")) {
        Some(v) => Some(serde_json::from_value::<SweepConfig>(v).map_err(|e| format!("sweep: {e}"))?),
        None => None,
    };
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();

    let parse = |raw: Value| -> Result<RunConfig, String> {
        let config: RunConfig = serde_json::from_value(raw).map_err(|e| format!("{}: {e}", path.display()))?;
        if let Some(c) = config.command {
            if c != command {
                return Err(format!("config is for `{}`, not `{}`", c.name(), command.name()));
            }
        }
        Ok(config)
    };

    let root = |config: &RunConfig| match (out, &config.output.dir) {
        (Some(o), _) => o.to_path_buf(),
        (None, Some(d)) => base.join(d),
        (None, None) => base.join("out"),
    };

    let Some(sweep) = sweep else {
        let config = parse(raw)?;
        let out = root(&config);
        return Ok(vec![Job {
            config,
            base,
            out,
            sweep_value: None,
        }]);
    };
    if sweep.values.is_empty() {
        return Err("sweep needs at least one value".into());
    }
    sweep
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mut r = raw.clone();
            set_pointer(&mut r, &sweep.path, v.clone())?;
            let config = parse(r)?;
            Ok(Job {
                out: root(&config).join(format!("run_{i:03}")),
                config,
                base: base.clone(),
                sweep_value: Some(v.clone()),
            })
        })
        .collect()
}

/// Sets `pointer` in `root`, creating missing objects along the way.
fn set_pointer(root: &mut Value, pointer: &str, value: Value) -> Result<(), String> {
    let rest = pointer
        .strip_prefix('/')
        .ok_or_else(|| format!("sweep path `{pointer}` must start with '/'"))?;
    let mut node = root;
    let parts: Vec<String> = rest
        .split('/')
        .map(|p| p.replace("~1", "/").replace("~0", "~"))
        .collect();
    for (i, key) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        node = match node {
            Value::Object(map) => {
                if last {
                    map.insert(key.clone(), value);
                    return Ok(());
                }
                map.entry(key.clone())
                    .or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = key
                    .parse()
                    .map_err(|_| format!("sweep path `{pointer}`: bad index `{key}`"))?;
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| format!("sweep path `{pointer}`: index {idx} out of range"))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(format!("sweep path `{pointer}` runs through a scalar")),
        };
    }
    Err("sweep path must not be empty".into())
}
