//! Command-line front end. Every command writes its outputs plus a
//! `<output>.config.json` echo of the parsed arguments.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::analysis::{self, ReportOptions, WignerGridSpec};
use crate::error::{Error, Result};
use crate::fock::{self, DensityMatrix, SqueezedStateParams, DEFAULT_DIM};
use crate::homodyne::{self, PhaseSchedule, DEFAULT_SAMPLES};
use crate::io;
use crate::mle::{self, TomographySettings, DEFAULT_PHASE_BINS, DEFAULT_VALUE_BINS};

pub const OUT_DIR_ENV: &str = "CVTOMO_OUT_DIR";

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "cvtomo",
    version,
    about = "Squeezed-light homodyne tomography toolkit"
)]
pub struct Cli {
    /// Directory for outputs given without an explicit path.
    #[arg(long, global = true, env = OUT_DIR_ENV)]
    pub out_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Build a state and write it as density-matrix JSON.
    GenState(GenStateArgs),
    /// Sample homodyne records from a state file.
    Simulate(SimulateArgs),
    /// Maximum-likelihood reconstruction from a dataset.
    Reconstruct(ReconstructArgs),
    /// Fit a loss channel between two states by sweeping η.
    ChannelFit(ChannelFitArgs),
    /// Metrics, noise curves and an optional Wigner grid.
    Report(ReportArgs),
}

#[derive(Debug, Args, Serialize)]
#[command(group(clap::ArgGroup::new("kind").required(true).args(["sq_db", "vacuum", "r"])))]
pub struct GenStateArgs {
    /// Squeezed quadrature variance in dB relative to shot noise.
    #[arg(long, allow_hyphen_values = true, requires = "antisq_db")]
    pub sq_db: Option<f64>,
    /// Anti-squeezed quadrature variance in dB.
    #[arg(long, allow_hyphen_values = true)]
    pub antisq_db: Option<f64>,
    /// Pure squeezed vacuum with this squeezing parameter.
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub vacuum: bool,
    /// Phase of the squeezed quadrature in radians.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub theta0: f64,
    /// Apply a pure loss channel of this transmission afterwards.
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_DIM)]
    pub dim: usize,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub state: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Transmission of a loss channel applied before detection.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Signal/local-oscillator visibility, modelled as loss `vis²`.
    #[arg(long)]
    pub visibility: Option<f64>,
    /// Digitizer resolution in bits.
    #[arg(long)]
    pub digitize: Option<u32>,
    /// Digitizer full scale ±range; defaults to the sampling grid half-width.
    #[arg(long, requires = "digitize")]
    pub digitize_range: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub phase_start: f64,
    #[arg(long, default_value_t = TAU, allow_hyphen_values = true)]
    pub phase_end: f64,
    #[arg(long, default_value_t = 1)]
    pub sweeps: usize,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = DEFAULT_DIM)]
    pub dim: usize,
    #[arg(long, default_value_t = DEFAULT_PHASE_BINS)]
    pub phase_bins: usize,
    #[arg(long, default_value_t = DEFAULT_VALUE_BINS)]
    pub value_bins: usize,
    #[arg(long, default_value_t = 2000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub rel_ll_tol: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub prob_floor: f64,
    #[arg(long, default_value_t = 0.5)]
    pub dilution: f64,
    /// Evaluate POVM elements at phase-bin centres instead of averaging.
    #[arg(long)]
    pub point_phase: bool,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ChannelFitArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long, default_value_t = analysis::DEFAULT_ETA_STEP)]
    pub grid_step: f64,
    /// Skip rotating the input onto the target's squeezing axis.
    #[arg(long)]
    pub no_align: bool,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    #[arg(long)]
    pub state: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Apply a loss channel to the state before analysis.
    #[arg(long, requires = "state")]
    pub eta: Option<f64>,
    #[arg(long, default_value_t = 181)]
    pub noise_points: usize,
    #[arg(long, default_value_t = 50)]
    pub phase_bins: usize,
    /// Include a Wigner grid in the report.
    #[arg(long, requires = "state")]
    pub wigner: bool,
    #[arg(long, default_value_t = 5.0)]
    pub wigner_range: f64,
    #[arg(long, default_value_t = 201)]
    pub wigner_points: usize,
    /// Also write the Wigner grid as x,p,w rows.
    #[arg(long, requires = "wigner")]
    pub wigner_csv: Option<PathBuf>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

fn resolve(out: &Option<PathBuf>, out_dir: &Option<PathBuf>, default_name: &str) -> PathBuf {
    match (out, out_dir) {
        (Some(p), _) => p.clone(),
        (None, Some(dir)) => dir.join(default_name),
        (None, None) => PathBuf::from(default_name),
    }
}

/// `rho.json` → `rho.json.config.json`.
pub fn config_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".config.json");
    output.with_file_name(name)
}

fn write_config<T: Serialize>(output: &Path, command: &str, args: &T) -> Result<()> {
    let echo = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "args": args,
    });
    io::write_json(&echo, &config_path(output))
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    Ok(())
}

fn print_metrics(rho: &DensityMatrix) {
    let m = analysis::squeezing_metrics(rho);
    println!("dim          {}", rho.dim());
    println!("db_min       {:.4}", m.db_min);
    println!("db_max       {:.4}", m.db_max);
    println!("theta_min    {:.6}", m.theta_min);
    println!("purity       {:.6}", m.purity);
    println!("mean_n       {:.6}", m.mean_n);
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::GenState(a) => gen_state(a, &cli.out_dir),
        Command::Simulate(a) => simulate(a, &cli.out_dir),
        Command::Reconstruct(a) => reconstruct(a, &cli.out_dir),
        Command::ChannelFit(a) => channel_fit(a, &cli.out_dir),
        Command::Report(a) => report(a, &cli.out_dir),
    }
}

fn gen_state(a: &GenStateArgs, out_dir: &Option<PathBuf>) -> Result<()> {
    let out = resolve(&a.out, out_dir, "state.json");
    let built = if a.vacuum {
        fock::BuiltState {
            rho: fock::vacuum(a.dim)?,
            truncation_deficit: 0.0,
        }
    } else if let Some(r) = a.r {
        fock::squeezed_vacuum_pure(r, a.theta0, a.dim)?
    } else {
        let (sq, anti) = (a.sq_db.unwrap_or_default(), a.antisq_db.unwrap_or_default());
        fock::squeezed_thermal(&SqueezedStateParams::from_db(sq, anti, a.theta0)?, a.dim)?
    };
    if built.truncation_flagged() {
        eprintln!(
            "warning: truncation at dim {} dropped {:.3e} of the norm",
            a.dim, built.truncation_deficit
        );
    }
    let rho = match a.eta {
        Some(eta) => crate::channel::apply_loss(&built.rho, eta)?,
        None => built.rho,
    };
    ensure_parent(&out)?;
    let mut value = io::density_matrix_value(&rho);
    value["truncation_deficit"] = json!(built.truncation_deficit);
    io::write_json(&value, &out)?;
    write_config(&out, "gen-state", a)?;
    print_metrics(&rho);
    println!("wrote        {}", out.display());
    Ok(())
}

fn simulate(a: &SimulateArgs, out_dir: &Option<PathBuf>) -> Result<()> {
    let out = resolve(&a.out, out_dir, "data.csv");
    let mut rho = io::read_density_matrix(&a.state)?;
    if let Some(eta) = a.eta {
        rho = crate::channel::apply_loss(&rho, eta)?;
    }
    if let Some(vis) = a.visibility {
        rho = homodyne::detection_efficiency(&rho, vis)?;
    }
    let schedule = PhaseSchedule::new(a.phase_start, a.phase_end, a.sweeps)?;
    let mut ds = homodyne::sample(&rho, &schedule, a.samples, a.seed)?;
    if let Some(bits) = a.digitize {
        let range = a
            .digitize_range
            .unwrap_or_else(|| homodyne::sampling_half_width(&rho));
        ds = homodyne::digitize(&ds, bits, range)?;
    }
    ensure_parent(&out)?;
    homodyne::write_dataset(&ds, &out)?;
    write_config(&out, "simulate", a)?;
    println!("records      {}", ds.len());
    println!("wrote        {}", out.display());
    Ok(())
}

fn reconstruct(a: &ReconstructArgs, out_dir: &Option<PathBuf>) -> Result<()> {
    let out = resolve(&a.out, out_dir, "reconstructed.json");
    let ds = homodyne::read_dataset(&a.data)?;
    let hist = mle::bin(&ds, a.phase_bins, a.value_bins)?;
    let settings = TomographySettings {
        dim: a.dim,
        max_iters: a.max_iters,
        rel_ll_tol: a.rel_ll_tol,
        prob_floor: a.prob_floor,
        dilution: a.dilution,
        phase_averaging: !a.point_phase,
        validate_iterates: false,
    };
    let res = mle::reconstruct(&hist, &settings)?;
    let mut value = io::density_matrix_value(&res.rho);
    value["diagnostics"] = json!({
        "iterations": res.iterations,
        "final_log_likelihood": res.final_log_likelihood,
        "converged": res.converged,
        "records": ds.len(),
        "log_likelihood_trace": res.log_likelihood_trace,
    });
    ensure_parent(&out)?;
    io::write_json(&value, &out)?;
    write_config(&out, "reconstruct", a)?;
    println!("iterations   {}", res.iterations);
    println!("converged    {}", res.converged);
    println!("log_lik      {:.10e}", res.final_log_likelihood);
    print_metrics(&res.rho);
    println!("wrote        {}", out.display());
    Ok(())
}

fn channel_fit(a: &ChannelFitArgs, out_dir: &Option<PathBuf>) -> Result<()> {
    let out = resolve(&a.out, out_dir, "sweep.json");
    let rho_in = io::read_density_matrix(&a.input)?;
    let target = io::read_density_matrix(&a.target)?;
    if rho_in.dim() != target.dim() {
        return Err(Error::DimensionMismatch(rho_in.dim(), target.dim()));
    }
    let grid = analysis::eta_grid(a.grid_step)?;
    let res = analysis::eta_sweep(&rho_in, &target, &grid, !a.no_align)?;
    ensure_parent(&out)?;
    io::write_json(&res, &out)?;
    write_config(&out, "channel-fit", a)?;
    println!("best_eta      {:.6}", res.best_eta);
    println!("best_fidelity {:.6}", res.best_fidelity);
    println!("wrote         {}", out.display());
    Ok(())
}

fn report(a: &ReportArgs, out_dir: &Option<PathBuf>) -> Result<()> {
    if a.state.is_none() && a.data.is_none() {
        return Err(Error::InvalidParameter(
            "report needs --state and/or --data".into(),
        ));
    }
    let out = resolve(&a.out, out_dir, "report.json");
    let mut rho = a
        .state
        .as_deref()
        .map(io::read_density_matrix)
        .transpose()?;
    if let (Some(r), Some(eta)) = (rho.as_ref(), a.eta) {
        rho = Some(crate::channel::apply_loss(r, eta)?);
    }
    let ds = a.data.as_deref().map(homodyne::read_dataset).transpose()?;
    let options = ReportOptions {
        noise_points: a.noise_points,
        data_phase_bins: a.phase_bins,
        wigner: a
            .wigner
            .then(|| WignerGridSpec::square(a.wigner_range, a.wigner_points)),
    };
    let rep = analysis::build_report(rho.as_ref(), ds.as_ref(), &options)?;
    ensure_parent(&out)?;
    analysis::write_report(&rep, &out)?;
    if let (Some(path), Some(grid)) = (&a.wigner_csv, &rep.wigner) {
        ensure_parent(path)?;
        grid.write_csv(path)?;
    }
    write_config(&out, "report", a)?;
    if let Some(m) = &rep.metrics {
        println!("db_min       {:.4}", m.db_min);
        println!("db_max       {:.4}", m.db_max);
    }
    if let Some(c) = &rep.noise_curve_data {
        println!("data db_min  {:.4}", c.min_db());
        println!("data db_max  {:.4}", c.max_db());
    }
    println!("wrote        {}", out.display());
    Ok(())
}
