//! The `reggeon` command line: one config file in, a directory of CSV/JSON out.
//!
//! `manifest.json` is byte-identical across runs of the same config; wall-clock
//! timings go to `timings.json` next to it.

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::bethe::{self, ModelParams, QuantumNumbers, SolverOptions};
use crate::chain::ChainModel;
use crate::config::{CentralChargeConfig, DisConfig, OperatorKind, RunConfig};
use crate::dis::{self, DisKinematics};
use crate::entropy::ChainOperator;
use crate::finite_size::{self, FitOptions, SeriesOptions};
use crate::io::{Format, OutputDir, Table};
use crate::krylov::PropagationOptions;
use crate::quench::{self, QuenchOptions};
use crate::thermo;
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "reggeon", version, about = "Integrable spin chains, entanglement growth and small-x DIS")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true, default_value = "configs/default.toml")]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Both)]
    pub format: FormatArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
    Both,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
            FormatArg::Both => Format::Both,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Solve the Bethe equations for one state.
    Bethe,
    /// Solve the exterior density and dressed-energy equations.
    Thermo,
    /// Finite-size ground energies and the central charge.
    CentralCharge,
    /// Local quench: entanglement growth after joining two half chains.
    Quench,
    /// Operator-space entanglement of a Heisenberg-evolved local operator.
    Osee,
    /// DIS probe geometry, entropy and structure-function exponent.
    Dis,
    /// Bethe roots to central charge to DIS exponent.
    Pipeline,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Bethe => "bethe",
            Command::Thermo => "thermo",
            Command::CentralCharge => "central-charge",
            Command::Quench => "quench",
            Command::Osee => "osee",
            Command::Dis => "dis",
            Command::Pipeline => "pipeline",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ResultManifest {
    pub artifact: &'static str,
    pub version: &'static str,
    pub subcommand: &'static str,
    pub format: Format,
    pub config: RunConfig,
    /// Files written, relative to the output directory.
    pub outputs: Vec<String>,
    pub results: Value,
    pub timings_file: &'static str,
}

#[derive(Debug, Default, Serialize)]
pub struct Timings {
    pub stages: Vec<(String, f64)>,
    pub total_seconds: f64,
}

impl Timings {
    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f();
        self.stages.push((stage.to_string(), start.elapsed().as_secs_f64()));
        out
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e.root() {
        Error::Config { .. } => EXIT_CONFIG,
        Error::Io(_) | Error::Json(_) => EXIT_IO,
        _ => EXIT_SOLVER,
    }
}

/// Runs one subcommand and writes its outputs, the manifest and the timings.
pub fn run(command: Command, cfg: &RunConfig, out: &Path, format: Format) -> Result<ResultManifest> {
    cfg.validate_for(command.name())?;
    let start = Instant::now();
    let mut dir = OutputDir::new(out, format)?;
    let mut timings = Timings::default();
    let results = match command {
        Command::Bethe => run_bethe(cfg, &mut dir, &mut timings),
        Command::Thermo => run_thermo(cfg, &mut dir, &mut timings),
        Command::CentralCharge => {
            run_central_charge(cfg.central_charge.as_ref().unwrap(), &mut dir, &mut timings).map(|(v, _)| v)
        }
        Command::Quench => run_quench(cfg, &mut dir, &mut timings),
        Command::Osee => run_osee(cfg, &mut dir, &mut timings),
        Command::Dis => run_dis(cfg.dis.as_ref().unwrap(), cfg.dis.as_ref().unwrap().c, &mut dir, &mut timings),
        Command::Pipeline => run_pipeline(cfg, &mut dir, &mut timings),
    }?;
    let manifest = ResultManifest {
        artifact: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        subcommand: command.name(),
        format,
        config: cfg.clone(),
        outputs: dir.written().to_vec(),
        results,
        timings_file: "timings.json",
    };
    dir.always_json("manifest.json", &manifest)?;
    timings.total_seconds = start.elapsed().as_secs_f64();
    dir.always_json("timings.json", &timings)?;
    Ok(manifest)
}

fn run_bethe(cfg: &RunConfig, dir: &mut OutputDir, t: &mut Timings) -> Result<Value> {
    let c = cfg.bethe.as_ref().unwrap();
    let opts = SolverOptions { tol: c.tol, max_iter: c.max_iter, ..SolverOptions::default() };
    let state = t.time("solve", || match &c.quantum_numbers {
        Some(q) => {
            let qn = QuantumNumbers::new(q).map_err(|e| Error::config("bethe.quantum_numbers", e.to_string()))?;
            bethe::solve_bethe_with(&ModelParams::holomorphic(c.length, c.roots), &qn, None, &opts)
        }
        None => bethe::ground_state_with(c.length, c.roots, &opts),
    })
    .map_err(|e| e.in_stage("bethe solver"))?;
    let tq = if state.roots.is_empty() { 0.0 } else { bethe::tq_polynomiality_residual(&state)? };
    let mut table = Table::new(&["k", "lambda"]);
    for (k, &l) in state.roots.iter().enumerate() {
        table.push(vec![k as f64, l]);
    }
    dir.table("roots.csv", &table)?;
    let summary = json!({
        "length": c.length,
        "roots": c.roots,
        "quantum_numbers": state.quantum_numbers,
        "energy": state.energy(),
        "residual": state.residual,
        "iterations": state.iterations,
        "tq_polynomiality_residual": tq,
    });
    dir.record("bethe.json", &json!({ "state": state, "summary": summary }))?;
    Ok(summary)
}

fn run_thermo(cfg: &RunConfig, dir: &mut OutputDir, t: &mut Timings) -> Result<Value> {
    let c = cfg.thermo.as_ref().unwrap();
    let sea = t
        .time("fermi sea", || match c.q {
            Some(q) => thermo::sea_at(q, c.h, c.resolution),
            None => thermo::fermi_sea(c.h, c.resolution),
        })
        .map_err(|e| e.in_stage("thermodynamics"))?;
    let dens = thermo::solve_density(sea.q, c.resolution)?;
    let eps = thermo::solve_dressed_energy(sea.q, c.h, c.resolution)?;
    let mut d = Table::new(&["lambda", "rho_p", "rho_h"]);
    for ((x, p), hh) in dens.grid.nodes().into_iter().zip(dens.rho_p()).zip(dens.rho_h()) {
        d.push(vec![x, p, hh]);
    }
    dir.table("density.csv", &d)?;
    let mut e = Table::new(&["lambda", "eps"]);
    for (x, v) in eps.grid.nodes().into_iter().zip(eps.eps()) {
        e.push(vec![x, v]);
    }
    dir.table("dressed_energy.csv", &e)?;
    dir.record("thermo.json", &sea)?;
    Ok(serde_json::to_value(&sea)?)
}

fn run_central_charge(c: &CentralChargeConfig, dir: &mut OutputDir, t: &mut Timings) -> Result<(Value, f64)> {
    let opts = SeriesOptions { resolution: c.resolution, ..SeriesOptions::default() };
    let series = t
        .time("ground energy series", || finite_size::ground_energy_series(c.h, &c.lengths, &opts))
        .map_err(|e| e.in_stage("finite-size series"))?;
    let mut table = Table::new(&["L", "N", "energy", "bethe_energy", "residual"]);
    for e in &series.entries {
        table.push(vec![e.length as f64, e.roots as f64, e.energy, e.bethe_energy, e.residual]);
    }
    dir.table("series.csv", &table)?;
    let fit = FitOptions { nuisance: c.nuisance, min_length: c.min_length, max_length: c.max_length };
    let est = t
        .time("central charge fit", || finite_size::extract_central_charge(&series, &fit))
        .map_err(|e| e.in_stage("central charge fit"))?;
    dir.record("central_charge.json", &json!({ "series": series, "estimate": est }))?;
    let summary = json!({
        "h": c.h,
        "c": est.c,
        "stderr": est.stderr,
        "fit_window": est.fit_window,
        "fermi_velocity": est.fermi_velocity,
        "bulk_fit": est.bulk_fit,
    });
    Ok((summary, est.c))
}

fn run_quench(cfg: &RunConfig, dir: &mut OutputDir, t: &mut Timings) -> Result<Value> {
    let c = cfg.quench.as_ref().unwrap();
    let model = c.chain_model();
    let mut opts = QuenchOptions::halves(&model, quench::uniform_times(c.t_max, c.dt));
    if let Some(cut) = c.cut {
        opts.cut = cut;
    }
    if let Some(q) = c.left_charge {
        opts.left_charge = q;
    }
    if let Some(q) = c.right_charge {
        opts.right_charge = q;
    }
    opts.window = c.window.map(|w| (w[0], w[1]));
    opts.saturation_eps = c.saturation_eps;
    let run = t.time("local quench", || quench::local_quench(&model, &opts)).map_err(|e| e.in_stage("local quench"))?;
    let mut table = Table::new(&["t", "S"]);
    for (&tt, &s) in run.trace.times.iter().zip(&run.trace.values) {
        table.push(vec![tt, s]);
    }
    dir.table("entropy.csv", &table)?;
    let blocks = match &c.block_lengths {
        Some(ells) => {
            let scan = t
                .time("static block scan", || {
                    let full = ChainModel::HeisenbergProxy { sites: c.sites, periodic: true };
                    let charge = match model {
                        ChainModel::HeisenbergProxy { .. } => Some(c.sites / 2),
                        ChainModel::BosonSMinus1 { .. } => Some(opts.left_charge + opts.right_charge),
                    };
                    let h = match model {
                        ChainModel::HeisenbergProxy { .. } => full.hamiltonian(charge)?,
                        ChainModel::BosonSMinus1 { sites, n_max, .. } => {
                            ChainModel::BosonSMinus1 { sites, n_max, periodic: true }.hamiltonian(charge)?
                        }
                    };
                    let gs = quench::ground_state(&h)?;
                    quench::static_block_entropy_scan(&gs.state, ells)
                })
                .map_err(|e| e.in_stage("static block scan"))?;
            let mut bt = Table::new(&["ell", "S"]);
            for (&l, &s) in scan.ells.iter().zip(&scan.values) {
                bt.push(vec![l as f64, s]);
            }
            dir.table("blocks.csv", &bt)?;
            Some(scan)
        }
        None => None,
    };
    dir.record("quench.json", &json!({ "run": run, "block_scan": blocks }))?;
    Ok(json!({
        "model": model,
        "cut": run.trace.cut,
        "fit": run.fit,
        "window": run.window,
        "saturation_time": run.saturation_time,
        "envelope": run.envelope,
        "checks": run.trace.checks,
        "invariants_hold": run.trace.checks.passed(),
        "analysis_errors": run.analysis_errors,
        "block_scan_c": blocks.as_ref().map(|b| b.fit.c_eff),
    }))
}

fn run_osee(cfg: &RunConfig, dir: &mut OutputDir, t: &mut Timings) -> Result<Value> {
    let c = cfg.osee.as_ref().unwrap();
    let site = c.site.unwrap_or(c.sites / 2);
    let cut = c.cut.unwrap_or(c.sites / 2);
    let op = match c.operator {
        OperatorKind::HalfMinusSz => ChainOperator::site_diagonal(c.sites, 2, site, &[1.0, 0.0])?,
        OperatorKind::Sz => ChainOperator::site_diagonal(c.sites, 2, site, &[-0.5, 0.5])?,
        OperatorKind::Identity => ChainOperator::identity(c.sites, 2)?,
    };
    let model = ChainModel::HeisenbergProxy { sites: c.sites, periodic: c.periodic };
    let times = quench::uniform_times(c.t_max, c.dt);
    let trace = t
        .time("operator evolution", || quench::operator_entropy_trace(&model, &op, &times, cut, &PropagationOptions::default()))
        .map_err(|e| e.in_stage("operator evolution"))?;
    let mut table = Table::new(&["t", "S"]);
    for (&tt, &s) in trace.times.iter().zip(&trace.values) {
        table.push(vec![tt, s]);
    }
    dir.table("osee.csv", &table)?;
    let window = c.window.map(|w| (w[0], w[1])).unwrap_or((1.0, c.t_max));
    let fit = quench::fit_log_growth(&trace, window).map_err(|e| e.to_string());
    let envelope = quench::linear_envelope_check(&trace, (c.dt, window.0.max(3.0 * c.dt))).map_err(|e| e.to_string());
    let summary = json!({
        "operator": c.operator,
        "site": site,
        "cut": cut,
        "window": window,
        "log_prefactor": fit.as_ref().ok().map(|f| f.c_eff / 3.0),
        "fit": fit.as_ref().ok(),
        "fit_error": fit.as_ref().err(),
        "envelope": envelope.as_ref().ok(),
        "envelope_error": envelope.as_ref().err(),
        "hs_norm_drift": trace.checks.norm_drift,
        "monotone": trace.values.windows(2).all(|w| w[1] >= w[0] - 1e-12),
    });
    dir.record("osee.json", &json!({ "trace": trace, "summary": summary }))?;
    Ok(summary)
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
}

fn run_dis(c: &DisConfig, central_charge: f64, dir: &mut OutputDir, t: &mut Timings) -> Result<Value> {
    let k = DisKinematics::new(c.m, c.x, c.q).map_err(|e| e.in_stage("kinematics"))?;
    let pred = t.time("prediction", || dis::predict(&k, central_charge)).map_err(|e| e.in_stage("dis map"))?;
    let xs = c.x_grid.clone().unwrap_or_else(|| log_grid(1e-5, 1.0, 51));
    let mut sx = Table::new(&["x", "S"]);
    for &x in &xs {
        sx.push(vec![x, dis::entropy_at_x(central_charge, x)?]);
    }
    dir.table("entropy_vs_x.csv", &sx)?;
    let tau = pred.geometry.tau;
    let mut st = Table::new(&["t", "S"]);
    for tt in log_grid(tau, 2.0 * pred.geometry.t_c, c.time_points) {
        st.push(vec![tt, dis::entropy_vs_time(central_charge, c.m, tt.max(tau), c.x)?]);
    }
    dir.table("entropy_vs_time.csv", &st)?;
    dir.record("dis.json", &pred)?;
    Ok(serde_json::to_value(&pred)?)
}

fn run_pipeline(cfg: &RunConfig, dir: &mut OutputDir, t: &mut Timings) -> Result<Value> {
    let (cc, c) = run_central_charge(cfg.central_charge.as_ref().unwrap(), dir, t)?;
    let dis = run_dis(cfg.dis.as_ref().unwrap(), c, dir, t)?;
    let summary = json!({
        "central_charge": cc,
        "dis": dis,
        "delta": c / 3.0,
        "delta_experimental": dis::EXPERIMENTAL_DELTA,
    });
    dir.record("pipeline.json", &summary)?;
    Ok(summary)
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let cfg = match RunConfig::load(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start {} worker threads: {e}", cli.threads);
            return EXIT_IO;
        }
    };
    let out = cli.out.clone();
    match pool.install(|| run(cli.command, &cfg, &out, cli.format.into())) {
        Ok(m) => {
            println!("{}", serde_json::to_string_pretty(&m.results).unwrap_or_default());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

