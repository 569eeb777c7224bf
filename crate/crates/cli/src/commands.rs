//! The four subcommands. Each writes its files into `job.out` and returns the
//! one-line summary for standard output.

use std::fmt::Write as _;
use std::fs;

use serde::Serialize;
use serde_json::Value;

use soret_core::evolution::{evolve, Diagnostics, StepControl, StepStats};
use soret_core::grid::divergence;
use soret_core::model::{energy_density, FieldState, ModelParams};
use soret_core::spectral::{
    cross_check, eigenvalues_fd, eigenvalues_transcendental, fd_spectrum, log_spaced, richardson,
    semigroup_diagnostics, CouplingMatrix, SemigroupDiagnostics, SemigroupOptions, SpectrumResult,
};
use soret_core::stationary::{stationarity_residual, Provenance, ResidualTolerances, StationarityResiduals};
use soret_core::{
    boundary_entropy_rates, conserved_totals, entropy, entropy_production_rate, fluxes, rhs, BoundaryEntropyRates,
    ProductionRate,
};

use crate::config::{Command, Job, SpectrumMethodConfig};
use crate::output::{floats, num, write_csv, write_json};
use crate::setup::{config_err, grid_for, initial_problem, stationary_solution, Failure};

pub fn run(command: Command, job: &Job) -> Result<String, Failure> {
    match command {
        Command::Evolve => run_evolve(job),
        Command::Stationary => run_stationary(job),
        Command::Spectrum => run_spectrum(job),
        Command::Diagnose => run_diagnose(job),
    }
}

fn prepare_dir(job: &Job) -> Result<(), Failure> {
    fs::create_dir_all(&job.out).map_err(|e| Failure::Io(anyhow::anyhow!("cannot create {}: {e}", job.out.display())))
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn relative_change(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        (b - a).abs()
    } else {
        ((b - a) / a).abs()
    }
}

fn state_rows(s: &FieldState, params: &ModelParams, with_t: bool) -> Vec<Vec<String>> {
    let e = energy_density(s, params).values;
    let v = params.potential.values(&s.grid, s.t);
    (0..s.len())
        .map(|i| {
            let mut row = Vec::with_capacity(6);
            if with_t {
                row.push(num(s.t));
            }
            row.extend(floats(&[s.grid.nodes()[i], s.rho[i], s.theta[i]]));
            if !with_t {
                row.push(num(v[i]));
            }
            row.push(num(e[i]));
            row
        })
        .collect()
}

fn write_state(job: &Job, name: &str, s: &FieldState, params: &ModelParams) -> Result<(), Failure> {
    write_csv(
        &job.out.join(name),
        &["x", "rho", "theta", "V", "E"],
        state_rows(s, params, false),
    )?;
    Ok(())
}

fn write_fluxes(job: &Job, s: &FieldState, params: &ModelParams) -> Result<(), Failure> {
    let f = fluxes(s, params);
    let faces = s.grid.faces();
    let rows = (0..faces.len()).map(|k| floats(&[faces[k], f.material[k], f.energy[k]]));
    write_csv(&job.out.join("fluxes.csv"), &["x", "j_c", "j_e"], rows)?;
    Ok(())
}

#[derive(Serialize)]
struct EvolveSummary<'a> {
    command: &'static str,
    n: usize,
    lambda: f64,
    t_end: f64,
    stats: StepStats,
    initial: Diagnostics,
    #[serde(rename = "final")]
    last: Diagnostics,
    relative_mass_change: f64,
    relative_energy_change: f64,
    /// Largest decrease of the entropy between consecutive records.
    max_entropy_drop: f64,
    sweep_value: Option<&'a Value>,
}

fn run_evolve(job: &Job) -> Result<String, Failure> {
    let cfg = &job.config;
    let ev = cfg
        .evolution
        .as_ref()
        .ok_or_else(|| config_err("missing `evolution` section"))?;
    if !(ev.t_end > 0.0 && ev.t_end.is_finite()) {
        return Err(config_err("evolution.t_end must be positive"));
    }
    let (state, params) = initial_problem(job)?;
    let times = match &ev.output_times {
        Some(t) => t.clone(),
        None if ev.snapshots == 0 => return Err(config_err("evolution.snapshots must be at least 1")),
        None if ev.snapshots == 1 => vec![ev.t_end],
        None => {
            let k = ev.snapshots - 1;
            (0..=k).map(|i| ev.t_end * i as f64 / k as f64).collect()
        }
    };
    let mut ctl = StepControl::until(ev.t_end).with_outputs(times);
    if let Some(v) = ev.rtol {
        ctl.rtol = v;
    }
    if let Some(v) = ev.atol {
        ctl.atol = v;
    }
    if let Some(v) = ev.dt_initial {
        ctl.dt_initial = v;
    }
    if let Some(v) = ev.dt_max {
        ctl.dt_max = v;
    }
    if let Some(v) = ev.max_steps {
        ctl.max_steps = v;
    }
    ctl.record_steps = ev.record_steps;

    prepare_dir(job)?;
    let initial = Diagnostics::of(&state, &params)?;
    let traj = evolve(&state, &params, &ctl)?;
    let last = *traj.diagnostics.last().expect("at least one output time");

    let mut entropies: Vec<f64> = traj.diagnostics.iter().map(|d| d.entropy).collect();
    if !traj.steps.is_empty() {
        entropies = std::iter::once(initial.entropy)
            .chain(traj.steps.iter().map(|s| s.entropy))
            .collect();
    }
    let max_entropy_drop = entropies.windows(2).map(|w| w[0] - w[1]).fold(0.0_f64, f64::max);

    if cfg.output.csv() {
        let rows = traj.snapshots.iter().flat_map(|s| state_rows(s, &params, true));
        write_csv(&job.out.join("trajectory.csv"), &["t", "x", "rho", "theta", "E"], rows)?;
        let rows = traj.diagnostics.iter().map(|d| {
            floats(&[
                d.t,
                d.mass,
                d.energy,
                d.entropy,
                d.entropy_production,
                d.max_boundary_material_flux,
            ])
        });
        let header = [
            "t",
            "mass",
            "energy",
            "entropy",
            "entropy_production",
            "max_boundary_material_flux",
        ];
        write_csv(&job.out.join("diagnostics.csv"), &header, rows)?;
        if ctl.record_steps {
            let rows = traj
                .steps
                .iter()
                .map(|s| floats(&[s.t, s.dt, s.mass, s.energy, s.entropy]));
            write_csv(
                &job.out.join("steps.csv"),
                &["t", "dt", "mass", "energy", "entropy"],
                rows,
            )?;
        }
        write_state(job, "final_state.csv", traj.last(), &params)?;
    }
    let summary = EvolveSummary {
        command: "evolve",
        n: state.len(),
        lambda: params.lambda,
        t_end: ev.t_end,
        stats: traj.stats,
        initial,
        last,
        relative_mass_change: relative_change(initial.mass, last.mass),
        relative_energy_change: relative_change(initial.energy, last.energy),
        max_entropy_drop,
        sweep_value: job.sweep_value.as_ref(),
    };
    if cfg.output.json() {
        write_json(&job.out.join("summary.json"), &summary)?;
    }
    Ok(format!(
        "evolve: t = {}, entropy = {}, relative mass change = {:.3e}, {} steps",
        num(ev.t_end),
        num(last.entropy),
        summary.relative_mass_change,
        traj.stats.accepted
    ))
}

#[derive(Serialize)]
struct StationarySummary<'a> {
    command: &'static str,
    n: usize,
    lambda: f64,
    provenance: Provenance,
    k: Option<f64>,
    c: Option<f64>,
    theta_left: f64,
    theta_right: f64,
    /// At `lambda = 1`, the scale of the tolerances.
    residuals: StationarityResiduals,
    tolerances: ResidualTolerances,
    within_tolerance: bool,
    residuals_at_lambda: StationarityResiduals,
    sweep_value: Option<&'a Value>,
}

fn run_stationary(job: &Job) -> Result<String, Failure> {
    let cfg = &job.config;
    if cfg.initial.is_some() || cfg.evolution.is_some() {
        return Err(config_err("`stationary` takes no `initial` or `evolution` section"));
    }
    let (grid, _) = grid_for(job)?;
    let sol = stationary_solution(job, &grid)?;
    let params = sol.params(cfg.model.lambda).with_stencil(cfg.model.stencil);
    prepare_dir(job)?;
    if cfg.output.csv() {
        write_state(job, "state.csv", &sol.state, &params)?;
        write_fluxes(job, &sol.state, &params)?;
    }
    let n = sol.state.len();
    let summary = StationarySummary {
        command: "stationary",
        n,
        lambda: params.lambda,
        provenance: sol.provenance,
        k: sol.k,
        c: sol.c,
        theta_left: sol.state.theta[0],
        theta_right: sol.state.theta[n - 1],
        residuals: sol.residuals,
        tolerances: sol.tolerances,
        within_tolerance: sol.within_tolerance(),
        residuals_at_lambda: stationarity_residual(&sol, &params),
        sweep_value: job.sweep_value.as_ref(),
    };
    if cfg.output.json() {
        write_json(&job.out.join("summary.json"), &summary)?;
    }
    let worst = sol.residuals.max_material.max(sol.residuals.max_div_energy);
    Ok(format!(
        "stationary: {} profile, n = {n}, max residual = {:.3e} ({})",
        serde_json::to_value(sol.provenance)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default(),
        worst,
        if summary.within_tolerance {
            "within tolerance"
        } else {
            "OUTSIDE tolerance"
        }
    ))
}

#[derive(Serialize)]
struct OracleRow {
    n: usize,
    omegas: Vec<f64>,
}

#[derive(Serialize)]
struct SpectrumSummary<'a> {
    command: &'static str,
    coupling: CouplingMatrix,
    omega_max: Option<f64>,
    result: &'a SpectrumResult,
    oracles: Vec<OracleRow>,
    semigroup: Option<SemigroupDiagnostics>,
    sweep_value: Option<&'a Value>,
}

fn run_spectrum(job: &Job) -> Result<String, Failure> {
    let cfg = &job.config;
    let sc = &cfg.spectrum;
    let lambda = sc.lambda.unwrap_or(cfg.model.lambda);
    let m = CouplingMatrix::new(sc.gamma, sc.alpha, lambda, sc.theta0)?;
    if sc.count == 0 {
        return Err(config_err("spectrum.count must be at least 1"));
    }
    let oracle_n = |i: usize| -> Result<usize, Failure> {
        sc.oracle_n
            .get(i)
            .copied()
            .ok_or_else(|| config_err("spectrum.oracle_n is empty"))
    };

    let mut omega_max = None;
    let mut oracles = Vec::new();
    let result = match sc.method {
        SpectrumMethodConfig::Transcendental => {
            // The stiffer branch alone has `count` roots below this bound.
            let (p, _) = m.eigenvalues();
            let bound = sc
                .omega_max
                .unwrap_or_else(|| m.scale() * p * (std::f64::consts::PI * sc.count as f64).powi(2));
            omega_max = Some(bound);
            eigenvalues_transcendental(&m, sc.count, bound)?
        }
        SpectrumMethodConfig::Matrix => {
            let mut last = None;
            for &n in &sc.oracle_n {
                let r = eigenvalues_fd(n, &m, sc.count)?;
                oracles.push(OracleRow { n, omegas: r.omegas() });
                last = Some(r);
            }
            last.ok_or_else(|| config_err("spectrum.oracle_n is empty"))?
        }
        SpectrumMethodConfig::Extrapolated => {
            let n = oracle_n(0)?;
            let (coarse, fine) = (fd_spectrum(n, &m)?, fd_spectrum(2 * n, &m)?);
            for s in [&coarse, &fine] {
                oracles.push(OracleRow {
                    n: s.n,
                    omegas: s.omegas.iter().take(sc.count).copied().collect(),
                });
            }
            richardson(&coarse, &fine, sc.count)?
        }
        SpectrumMethodConfig::CrossCheck => {
            let n = oracle_n(0)?;
            let (trans, oracle) = cross_check(&m, sc.count, n)?;
            oracles.push(OracleRow {
                n,
                omegas: oracle.omegas(),
            });
            trans
        }
    };

    let semigroup = match &sc.semigroup {
        None => None,
        Some(sg) => {
            if !(sg.t_min > 0.0 && sg.t_max > sg.t_min) || sg.samples == 0 {
                return Err(config_err("semigroup needs 0 < t_min < t_max and samples >= 1"));
            }
            let mut opts = SemigroupOptions::default();
            if let Some(s) = sg.seed {
                opts.seed = s;
            }
            if let Some(r) = sg.random_vectors {
                opts.random_vectors = r;
            }
            if let Some(p) = &sg.probe_sizes {
                opts.probe_sizes = p.clone();
            }
            let times = log_spaced(sg.t_min, sg.t_max, sg.samples);
            Some(semigroup_diagnostics(sg.n, &m, &times, &opts)?)
        }
    };

    prepare_dir(job)?;
    if cfg.output.csv() {
        let mut header = vec!["index", "omega", "multiplicity"];
        if result.agreement.is_some() {
            header.push("agreement");
        }
        let rows = result.eigenvalues.iter().enumerate().map(|(i, e)| {
            let mut row = vec![i.to_string(), num(e.omega), e.multiplicity.to_string()];
            if let Some(a) = &result.agreement {
                row.push(a.get(i).map_or_else(String::new, |v| num(*v)));
            }
            row
        });
        write_csv(&job.out.join("eigenvalues.csv"), &header, rows)?;
        if !oracles.is_empty() {
            let rows = oracles.iter().flat_map(|o| {
                o.omegas
                    .iter()
                    .enumerate()
                    .map(|(i, w)| vec![o.n.to_string(), i.to_string(), num(*w)])
            });
            write_csv(&job.out.join("oracle.csv"), &["n", "index", "omega"], rows)?;
        }
        if let Some(sg) = &semigroup {
            let rows = sg.times.iter().zip(&sg.norms).map(|(&t, &norm)| {
                let bound = sg.kappa_convenient * (-sg.lambda1 * t).exp();
                floats(&[t, norm, bound, norm / bound])
            });
            write_csv(&job.out.join("semigroup.csv"), &["t", "norm", "bound", "ratio"], rows)?;
            let header = [
                "n",
                "random_max",
                "optimized_max",
                "exact_max",
                "isolated_random_max",
                "isolated_optimized_max",
                "isolated_exact_max",
            ];
            let rows = sg.numerical_range.iter().map(|r| {
                let mut row = vec![r.n.to_string()];
                row.extend(floats(&[
                    r.random_max,
                    r.optimized_max,
                    r.exact_max,
                    r.isolated_random_max,
                    r.isolated_optimized_max,
                    r.isolated_exact_max,
                ]));
                row
            });
            write_csv(&job.out.join("numerical_range.csv"), &header, rows)?;
        }
    }
    if cfg.output.json() {
        let summary = SpectrumSummary {
            command: "spectrum",
            coupling: m,
            omega_max,
            result: &result,
            oracles,
            semigroup,
            sweep_value: job.sweep_value.as_ref(),
        };
        write_json(&job.out.join("spectrum.json"), &summary)?;
    }
    let lambda1 = result.lambda1().map_or_else(|| "none".to_string(), num);
    Ok(format!(
        "spectrum: lambda1 = {lambda1}, {} eigenvalues including zero",
        result.eigenvalues.len()
    ))
}

#[derive(Serialize)]
struct DiagnoseSummary<'a> {
    command: &'static str,
    n: usize,
    lambda: f64,
    mass: f64,
    energy: f64,
    entropy: f64,
    energy_flux_mean: f64,
    energy_flux_min: f64,
    energy_flux_max: f64,
    max_material_flux: f64,
    production: ProductionRate,
    boundary: BoundaryEntropyRates,
    max_div_material: f64,
    max_div_energy: f64,
    max_drho_dt: f64,
    max_de_dt: f64,
    sweep_value: Option<&'a Value>,
}

fn run_diagnose(job: &Job) -> Result<String, Failure> {
    let cfg = &job.config;
    let (state, params) = initial_problem(job)?;
    params.validate(&state.grid)?;
    let f = fluxes(&state, &params);
    let (mass, energy) = conserved_totals(&state, &params);
    let je = &f.energy;
    let r = rhs(&state, &params, state.t);
    let summary = DiagnoseSummary {
        command: "diagnose",
        n: state.len(),
        lambda: params.lambda,
        mass,
        energy,
        entropy: entropy(&state, &params)?,
        energy_flux_mean: je.iter().sum::<f64>() / je.len() as f64,
        energy_flux_min: je.iter().copied().fold(f64::INFINITY, f64::min),
        energy_flux_max: je.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        max_material_flux: sup(&f.material),
        production: entropy_production_rate(&state, &params),
        boundary: boundary_entropy_rates(&state, &params),
        max_div_material: sup(&divergence(&f.material, &state.grid)),
        max_div_energy: sup(&divergence(&f.energy, &state.grid)),
        max_drho_dt: sup(&r.drho_dt),
        max_de_dt: sup(&r.de_dt),
        sweep_value: job.sweep_value.as_ref(),
    };

    prepare_dir(job)?;
    if cfg.output.csv() {
        write_state(job, "state.csv", &state, &params)?;
        write_fluxes(job, &state, &params)?;
    }
    if cfg.output.json() {
        write_json(&job.out.join("summary.json"), &summary)?;
    }
    let s = &summary;
    let l = s.lambda;
    let mut report = String::new();
    let mut line = |label: &str, value: String| {
        let _ = writeln!(report, "{label:<34}{value}");
    };
    line("nodes", s.n.to_string());
    line("lambda", num(l));
    line("mass", num(s.mass));
    line("energy", num(s.energy));
    line("entropy", num(s.entropy));
    line("energy flux j_e (mean)", num(s.energy_flux_mean));
    line("energy flux j_e (min)", num(s.energy_flux_min));
    line("energy flux j_e (max)", num(s.energy_flux_max));
    line("j_e / lambda", num(s.energy_flux_mean / l));
    line("max |j_c|", num(s.max_material_flux));
    line("entropy production", num(s.production.rate));
    line("production / lambda", num(s.production.rate / l));
    line("boundary entropy export", num(s.boundary.net_export));
    line("export / lambda", num(s.boundary.net_export / l));
    line("max |div j_c|", num(s.max_div_material));
    line("max |div j_e|", num(s.max_div_energy));
    line("max |d rho/dt|", num(s.max_drho_dt));
    line("max |dE/dt|", num(s.max_de_dt));
    if s.production.material_flux_warning {
        line(
            "warning",
            "material current is not negligible; production omits its term".into(),
        );
    }
    fs::write(job.out.join("report.txt"), report)
        .map_err(|e| Failure::Io(anyhow::anyhow!("cannot write report.txt: {e}")))?;
    Ok(format!(
        "diagnose: j_e / lambda = {}, production / lambda = {}",
        num(s.energy_flux_mean / l),
        num(s.production.rate / l)
    ))
}
