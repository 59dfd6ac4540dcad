//! Argument definitions and subcommand handlers.

use std::path::{Path, PathBuf};

use canham_core::canonical::{ab_ratio, Route};
use canham_core::fields::{FieldKind, FieldSet};
use canham_core::fredholm::{hamiltonian_curve, spectrum_at};
use canham_core::kernels::FOURIER_TOL;
use canham_core::modelspace::{decay_scan, energy_identity, j_kernel};
use canham_core::{Kernel, Resolution};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{load_kernel, parse_complex, RunConfig, TRange, ToleranceProfile};
use crate::error::{CliError, ExitStatus};
use crate::output::{num, write_csv, write_json};
use crate::refine::refine;
use crate::report::VerificationReport;
use crate::suite::Suite;

#[derive(Debug, Parser)]
#[command(name = "canham", version, about = "Hamiltonians of canonical systems from Hankel kernels")]
pub struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, env = "CANHAM_THREADS", global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Inspect a kernel spec.
    #[command(subcommand)]
    Kernel(KernelCmd),
    /// Write the Hamiltonian curve as CSV.
    Hamiltonian(HamiltonianArgs),
    /// Write the four field solutions at one `t` as CSV.
    Fields(FieldsArgs),
    /// Write spectra of the truncated operator as JSON.
    Spectrum(SpectrumArgs),
    /// Write the normalized ratios `(a, b)` along a `t` grid as CSV.
    Canonical(CanonicalArgs),
    /// Run the identity suite (`all` or one identity) and write a report.
    Verify(VerifyArgs),
    /// Rerun one identity over increasing resolutions.
    Refine(RefineArgs),
    /// Reproducing-kernel computations.
    #[command(subcommand)]
    Modelspace(ModelspaceCmd),
}

#[derive(Debug, Args)]
pub struct SpecArg {
    /// Kernel spec (JSON).
    #[arg(long)]
    pub spec: PathBuf,
}

#[derive(Debug, Args)]
pub struct ResolutionArgs {
    /// Gauss nodes per panel.
    #[arg(long, default_value_t = 64)]
    pub nodes: usize,
    #[arg(long, default_value_t = 2)]
    pub min_panels: usize,
}

impl ResolutionArgs {
    fn resolution(&self) -> Result<Resolution, CliError> {
        if self.nodes == 0 || self.min_panels == 0 {
            return Err(CliError::Usage("--nodes and --min-panels must be positive".into()));
        }
        Ok(Resolution::new(self.nodes, self.min_panels))
    }
}

#[derive(Debug, Args)]
pub struct TRangeArgs {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub t0: f64,
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub t1: f64,
    #[arg(long, default_value_t = 64)]
    pub steps: usize,
}

impl TRangeArgs {
    fn points(&self) -> Result<Vec<f64>, CliError> {
        if !(self.t1 >= self.t0) {
            return Err(CliError::Usage("--t1 must not be below --t0".into()));
        }
        Ok(TRange {
            t0: self.t0,
            t1: self.t1,
            steps: self.steps,
        }
        .points())
    }
}

#[derive(Debug, Subcommand)]
pub enum KernelCmd {
    /// Print the validation report; exit 1 if the support check fails.
    Validate {
        #[command(flatten)]
        spec: SpecArg,
        /// Probe points per check.
        #[arg(long, default_value_t = 200)]
        probe: usize,
    },
    /// Print `Θ(z)`.
    Fourier {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long, allow_hyphen_values = true)]
        z: String,
    },
}

#[derive(Debug, Args)]
pub struct HamiltonianArgs {
    #[command(flatten)]
    pub spec: SpecArg,
    #[command(flatten)]
    pub range: TRangeArgs,
    #[command(flatten)]
    pub res: ResolutionArgs,
    /// Output CSV (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FieldsArgs {
    #[command(flatten)]
    pub spec: SpecArg,
    #[arg(long, allow_negative_numbers = true)]
    pub t: f64,
    /// Sample points on `[-t, t]`.
    #[arg(long, default_value_t = 101)]
    pub points: usize,
    #[command(flatten)]
    pub res: ResolutionArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub spec: SpecArg,
    #[command(flatten)]
    pub range: TRangeArgs,
    #[command(flatten)]
    pub res: ResolutionArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CanonicalArgs {
    #[command(flatten)]
    pub spec: SpecArg,
    #[command(flatten)]
    pub range: TRangeArgs,
    #[arg(long, default_value = "0+2i", allow_hyphen_values = true)]
    pub z: String,
    #[command(flatten)]
    pub res: ResolutionArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// `all` or an identity name.
    #[arg(default_value = "all")]
    pub selection: String,
    /// Kernel spec; overrides the config's `kernel`.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Run configuration (JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub tmax: Option<f64>,
    /// default, kinked or auto.
    #[arg(long)]
    pub tol_profile: Option<String>,
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub min_panels: Option<usize>,
    /// Finite-difference step.
    #[arg(long)]
    pub h: Option<f64>,
    /// Report path (stdout if omitted).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RefineArgs {
    /// Identity to refine.
    pub identity: String,
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Nodes per panel at each level, e.g. `8,16,32`.
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<usize>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum ModelspaceCmd {
    /// Print `ĵ_t(z, w)`.
    J {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        #[arg(long, allow_hyphen_values = true)]
        w: String,
        #[command(flatten)]
        res: ResolutionArgs,
    },
    /// Print both sides of the energy identity on `(t, s)`.
    Energy {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
        #[arg(long, allow_negative_numbers = true)]
        s: f64,
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        #[arg(long, allow_hyphen_values = true)]
        w: String,
        #[arg(long, default_value_t = 64)]
        r_nodes: usize,
        #[command(flatten)]
        res: ResolutionArgs,
    },
    /// Write `ĵ_t(z, z)` along a `t` grid as CSV.
    Decay {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        range: TRangeArgs,
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        /// Allowed increase between neighbouring samples.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[command(flatten)]
        res: ResolutionArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Installs the global thread pool if a cap was requested.
pub fn init_threads(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Usage("CANHAM_THREADS must be positive".into()));
        }
        // A second initialization (tests calling `run` twice) is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<ExitStatus, CliError> {
    init_threads(cli.threads)?;
    match cli.command {
        Command::Kernel(cmd) => cmd_kernel(cmd),
        Command::Hamiltonian(a) => cmd_hamiltonian(a),
        Command::Fields(a) => cmd_fields(a),
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::Canonical(a) => cmd_canonical(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Refine(a) => cmd_refine(a),
        Command::Modelspace(cmd) => cmd_modelspace(cmd),
    }
}

fn kernel(path: &Path) -> Result<Kernel, CliError> {
    Ok(load_kernel(path)?.1)
}

fn pretty(value: &serde_json::Value) -> Result<(), CliError> {
    write_json(None, value)
}

pub fn cmd_kernel(cmd: KernelCmd) -> Result<ExitStatus, CliError> {
    match cmd {
        KernelCmd::Validate { spec, probe } => {
            let k = kernel(&spec.spec)?;
            let report = k.validate(probe);
            pretty(&serde_json::to_value(&report)?)?;
            Ok(if report.passed() { ExitStatus::Pass } else { ExitStatus::Failure })
        }
        KernelCmd::Fourier { spec, z } => {
            let k = kernel(&spec.spec)?;
            let z = parse_complex(&z)?;
            let theta = k.fourier(z, FOURIER_TOL)?;
            pretty(&json!({ "z": [z.re, z.im], "theta": [theta.re, theta.im] }))?;
            Ok(ExitStatus::Pass)
        }
    }
}

pub fn cmd_hamiltonian(a: HamiltonianArgs) -> Result<ExitStatus, CliError> {
    let k = kernel(&a.spec.spec)?;
    let ts = a.range.points()?;
    let curve = hamiltonian_curve(&k, &ts, &a.res.resolution()?)?;
    let rows: Vec<Vec<String>> = curve
        .samples
        .iter()
        .map(|s| {
            vec![
                num(s.t),
                num(s.det_plus),
                num(s.det_minus),
                num(s.m),
                num(s.gamma),
                num(s.h11),
                num(s.h22),
                s.nodes.to_string(),
                s.panels.to_string(),
            ]
        })
        .collect();
    write_csv(
        a.out.as_deref(),
        &["t", "det_plus", "det_minus", "m", "gamma", "h11", "h22", "nodes", "panels"],
        &rows,
    )?;
    Ok(ExitStatus::Pass)
}

pub fn cmd_fields(a: FieldsArgs) -> Result<ExitStatus, CliError> {
    let k = kernel(&a.spec.spec)?;
    if a.points < 2 {
        return Err(CliError::Usage("--points must be at least 2".into()));
    }
    let set = FieldSet::solve(&k, a.t, &a.res.resolution()?)?;
    let half = a.t.abs();
    let rows: Vec<Vec<String>> = (0..a.points)
        .map(|i| {
            let x = -half + 2.0 * half * i as f64 / (a.points - 1) as f64;
            let mut row = vec![num(x)];
            row.extend(FieldKind::ALL.iter().map(|&f| num(set.get(f).eval(x))));
            row
        })
        .collect();
    write_csv(a.out.as_deref(), &["x", "Phi", "Psi", "PhiPlus", "PhiMinus"], &rows)?;
    Ok(ExitStatus::Pass)
}

pub fn cmd_spectrum(a: SpectrumArgs) -> Result<ExitStatus, CliError> {
    let k = kernel(&a.spec.spec)?;
    let res = a.res.resolution()?;
    let reports: Vec<_> = a.range.points()?.par_iter().map(|&t| spectrum_at(&k, t, &res)).collect();
    write_json(a.out.as_deref(), &reports)?;
    Ok(ExitStatus::Pass)
}

pub fn cmd_canonical(a: CanonicalArgs) -> Result<ExitStatus, CliError> {
    let k = kernel(&a.spec.spec)?;
    let z = parse_complex(&a.z)?;
    let res = a.res.resolution()?;
    let points = a
        .range
        .points()?
        .par_iter()
        .map(|&t| ab_ratio(&k, t, z, Route::PsiPhiTail, &res))
        .collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| vec![num(p.t), num(p.a.re), num(p.a.im), num(p.b.re), num(p.b.im)])
        .collect();
    write_csv(a.out.as_deref(), &["t", "a_re", "a_im", "b_re", "b_im"], &rows)?;
    Ok(ExitStatus::Pass)
}

/// Config file (or defaults) with the kernel path resolved.
fn config_and_kernel(config: Option<&Path>, spec: Option<&Path>) -> Result<(RunConfig, PathBuf), CliError> {
    let mut cfg = match config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = spec {
        cfg.kernel = Some(s.to_path_buf());
    }
    let path = cfg
        .kernel
        .clone()
        .ok_or_else(|| CliError::Usage("no kernel: pass --spec or set `kernel` in the config".into()))?;
    Ok((cfg, path))
}

pub fn cmd_verify(a: VerifyArgs) -> Result<ExitStatus, CliError> {
    let (mut cfg, path) = config_and_kernel(a.config.as_deref(), a.spec.as_deref())?;
    if let Some(v) = a.tmax {
        cfg.tmax = v;
    }
    if let Some(p) = &a.tol_profile {
        cfg.tol_profile = ToleranceProfile::parse(p)?;
    }
    if let Some(n) = a.nodes {
        cfg.resolution.nodes_per_panel = n;
    }
    if let Some(n) = a.min_panels {
        cfg.resolution.min_panels = n;
    }
    if let Some(h) = a.h {
        cfg.h = h;
    }
    let (file, k) = load_kernel(&path)?;
    let suite = Suite::new(&k, &cfg)?;
    let entries = suite.run(&a.selection)?;
    for e in &entries {
        eprintln!(
            "{} {}.{} residual {:.3e} tol {:.1e}",
            if e.pass { "PASS" } else { "FAIL" },
            e.identity,
            e.name,
            e.residual,
            e.tolerance
        );
    }
    let profile = serde_json::to_value(suite.profile())?;
    let report = VerificationReport::new(
        cfg.clone(),
        serde_json::to_value(&file)?,
        &a.selection,
        profile.as_str().unwrap_or_default(),
        entries,
    );
    let out = a
        .report
        .or_else(|| cfg.output_dir.as_ref().map(|d| d.join("report.json")));
    write_json(out.as_deref(), &report)?;
    Ok(if report.all_passed { ExitStatus::Pass } else { ExitStatus::Failure })
}

pub fn cmd_refine(a: RefineArgs) -> Result<ExitStatus, CliError> {
    let (cfg, path) = config_and_kernel(a.config.as_deref(), a.spec.as_deref())?;
    let k = kernel(&path)?;
    let levels = a.levels.unwrap_or_else(|| cfg.refinement_levels.clone());
    let zs = cfg.z_values()?;
    let w = *zs.get(1).unwrap_or(&zs[0]);
    let study = refine(&k, &a.identity, &levels, cfg.resolution.min_panels, zs[0], w, cfg.r_nodes)?;
    let rows: Vec<Vec<String>> = study
        .levels
        .iter()
        .map(|l| {
            vec![
                l.nodes_per_panel.to_string(),
                num(l.residual),
                num(l.drift),
                num(l.error),
                l.observed_order.map(num).unwrap_or_default(),
            ]
        })
        .collect();
    write_csv(
        a.out.as_deref(),
        &["nodes_per_panel", "residual", "drift", "error", "observed_order"],
        &rows,
    )?;
    let slow = study.slow_orders();
    if !slow.is_empty() {
        eprintln!(
            "observed orders {slow:?} fall below the floor {} for this kernel",
            study.order_floor
        );
        return Ok(ExitStatus::Failure);
    }
    Ok(ExitStatus::Pass)
}

pub fn cmd_modelspace(cmd: ModelspaceCmd) -> Result<ExitStatus, CliError> {
    match cmd {
        ModelspaceCmd::J { spec, t, z, w, res } => {
            let k = kernel(&spec.spec)?;
            let v = j_kernel(&k, t, parse_complex(&z)?, parse_complex(&w)?, &res.resolution()?)?;
            pretty(&serde_json::to_value(v)?)?;
            Ok(ExitStatus::Pass)
        }
        ModelspaceCmd::Energy {
            spec,
            t,
            s,
            z,
            w,
            r_nodes,
            res,
        } => {
            let k = kernel(&spec.spec)?;
            if r_nodes == 0 {
                return Err(CliError::Usage("--r-nodes must be positive".into()));
            }
            let e = energy_identity(&k, t, s, parse_complex(&z)?, parse_complex(&w)?, r_nodes, &res.resolution()?)?;
            pretty(&serde_json::to_value(e)?)?;
            Ok(ExitStatus::Pass)
        }
        ModelspaceCmd::Decay {
            spec,
            range,
            z,
            tol,
            res,
            out,
        } => {
            let k = kernel(&spec.spec)?;
            let scan = decay_scan(&k, parse_complex(&z)?, &range.points()?, tol, &res.resolution()?)?;
            let rows: Vec<Vec<String>> = scan.values.iter().map(|&(t, v)| vec![num(t), num(v)]).collect();
            write_csv(out.as_deref(), &["t", "j_zz"], &rows)?;
            eprintln!("increases beyond tolerance: {}", scan.increases.len());
            Ok(ExitStatus::Pass)
        }
    }
}
