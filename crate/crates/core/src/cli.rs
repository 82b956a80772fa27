//! `geoflow` command-line front end.
//!
//! Exit codes: 0 success, 1 a verdict failed, 2 invalid configuration or
//! unknown surface, 3 numerical or domain failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::catalog;
use crate::config::{RunConfig, SurfaceSpec, SCHEMA};
use crate::error::{GeoError, Result};
use crate::flow::{self, TangentVector};
use crate::io;
use crate::jacobi::{self, FlowDifferentialReport};
use crate::minimality;
use crate::ode::ExitReason;
use crate::regularity;
use crate::suite;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "geoflow", version, about = "Geodesic flows and flow differentials on low-regularity graph surfaces")]
pub struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct SurfaceArgs {
    /// Catalog surface name.
    #[arg(long)]
    pub surface: Option<String>,
    /// Surface definition file (JSON).
    #[arg(long, conflicts_with = "surface")]
    pub surface_file: Option<PathBuf>,
    /// Exponent for `c2alpha`.
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct ToleranceArgs {
    /// Relative tolerance of the adaptive integrator.
    #[arg(long = "tol")]
    pub rtol: Option<f64>,
    #[arg(long)]
    pub atol: Option<f64>,
    /// Fixed RK4 step instead of adaptive stepping.
    #[arg(long)]
    pub rk4_step: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct StartArgs {
    /// Start point, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    /// Start velocity, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub y0: Option<Vec<f64>>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Catalog listing and entry details.
    Surface {
        #[command(subcommand)]
        action: SurfaceAction,
    },
    /// Integrate one geodesic; writes a summary JSON and optionally a trajectory CSV.
    Geodesic {
        #[command(flatten)]
        surface: SurfaceArgs,
        #[command(flatten)]
        start: StartArgs,
        #[command(flatten)]
        tol: ToleranceArgs,
        #[arg(long, allow_hyphen_values = true)]
        t_end: Option<f64>,
        /// Uniform output samples (0 records every accepted step).
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Flow differential by Jacobi propagation, optionally checked by finite differences.
    Jacobian {
        #[command(flatten)]
        surface: SurfaceArgs,
        #[command(flatten)]
        start: StartArgs,
        #[command(flatten)]
        tol: ToleranceArgs,
        #[arg(long, allow_hyphen_values = true)]
        t: Option<f64>,
        #[arg(long)]
        fd_check: bool,
        #[arg(long)]
        fd_eps: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mollify at several widths and measure convergence of flows and differentials.
    SmoothConverge {
        #[command(flatten)]
        surface: SurfaceArgs,
        #[arg(long, value_delimiter = ',')]
        scales: Option<Vec<f64>>,
        #[arg(long)]
        probes: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// `delta-vs-level` CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Minimality margin of one geodesic (unit time) against the mesh oracle.
    Minimality {
        #[command(flatten)]
        surface: SurfaceArgs,
        #[command(flatten)]
        start: StartArgs,
        #[command(flatten)]
        tol: ToleranceArgs,
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run acceptance criteria; exit 0 iff all pass.
    Report {
        /// Criterion ids (ac01..ac11) or `all`, comma separated.
        #[arg(long, value_delimiter = ',')]
        suite: Option<Vec<String>>,
        /// Multiplies upper tolerances and divides lower floors.
        #[arg(long)]
        tolerance_scale: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the effective configuration.
    Config {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum SurfaceAction {
    List,
    Info { name: String },
}

fn apply_surface(cfg: &mut RunConfig, a: &SurfaceArgs) -> Result<()> {
    if let Some(path) = &a.surface_file {
        cfg.surface = SurfaceSpec::load(path)?;
    }
    if let Some(name) = &a.surface {
        cfg.surface = SurfaceSpec::catalog(name);
    }
    if let Some(alpha) = a.alpha {
        match &mut cfg.surface {
            SurfaceSpec::Catalog { alpha: slot, .. } | SurfaceSpec::Grid { alpha: slot, .. } => *slot = Some(alpha),
        }
    }
    Ok(())
}

fn apply_tol(cfg: &mut RunConfig, t: &ToleranceArgs) {
    if t.rtol.is_some() {
        cfg.tolerances.rtol = t.rtol;
    }
    if t.atol.is_some() {
        cfg.tolerances.atol = t.atol;
    }
    if t.rk4_step.is_some() {
        cfg.tolerances.rk4_step = t.rk4_step;
    }
}

fn set<T: Clone>(slot: &mut T, v: &Option<T>) {
    if let Some(v) = v {
        *slot = v.clone();
    }
}

fn emit(out: &Option<PathBuf>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(p) => io::write_text(p, text),
        None => Ok(stdout.write_all(text.as_bytes())?),
    }
}

fn surface_name(cfg: &RunConfig) -> String {
    match &cfg.surface {
        SurfaceSpec::Catalog { name, .. } | SurfaceSpec::Grid { name, .. } => name.clone(),
    }
}

/// Caps the global thread pool from `GEOFLOW_THREADS`.
pub fn init_threads() {
    if let Some(n) = std::env::var("GEOFLOW_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // a pool built earlier in the process is kept
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

pub fn exit_code(e: &GeoError) -> i32 {
    match e {
        GeoError::UnknownSurface(_) | GeoError::Config(_) | GeoError::DimensionMismatch { .. } | GeoError::Io(_) => {
            EXIT_CONFIG
        }
        _ => EXIT_NUMERIC,
    }
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = write!(stderr, "{e}");
            return code;
        }
    };
    init_threads();
    match run(cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    match &cli.command {
        Command::Surface { action } => surface_cmd(action, stdout),
        Command::Geodesic {
            surface,
            start,
            tol,
            t_end,
            samples,
            out,
            csv,
        } => {
            apply_surface(&mut cfg, surface)?;
            apply_tol(&mut cfg, tol);
            set(&mut cfg.geodesic.x0, &start.x0);
            set(&mut cfg.geodesic.y0, &start.y0);
            set(&mut cfg.geodesic.t_end, t_end);
            set(&mut cfg.geodesic.samples, samples);
            if out.is_some() {
                cfg.output.out = out.clone();
            }
            if csv.is_some() {
                cfg.output.csv = csv.clone();
            }
            geodesic_cmd(&cfg, stdout)
        }
        Command::Jacobian {
            surface,
            start,
            tol,
            t,
            fd_check,
            fd_eps,
            out,
        } => {
            apply_surface(&mut cfg, surface)?;
            apply_tol(&mut cfg, tol);
            set(&mut cfg.jacobian.x0, &start.x0);
            set(&mut cfg.jacobian.y0, &start.y0);
            set(&mut cfg.jacobian.t, t);
            cfg.jacobian.fd_check |= *fd_check;
            if fd_eps.is_some() {
                cfg.jacobian.fd_eps = *fd_eps;
            }
            if out.is_some() {
                cfg.output.out = out.clone();
            }
            jacobian_cmd(&cfg, stdout)
        }
        Command::SmoothConverge {
            surface,
            scales,
            probes,
            seed,
            out,
            csv,
        } => {
            apply_surface(&mut cfg, surface)?;
            set(&mut cfg.smoothing.scales, scales);
            set(&mut cfg.smoothing.probes, probes);
            set(&mut cfg.seed, seed);
            if out.is_some() {
                cfg.output.out = out.clone();
            }
            if csv.is_some() {
                cfg.output.csv = csv.clone();
            }
            smooth_cmd(&cfg, stdout, stderr)
        }
        Command::Minimality {
            surface,
            start,
            tol,
            resolution,
            out,
        } => {
            apply_surface(&mut cfg, surface)?;
            apply_tol(&mut cfg, tol);
            set(&mut cfg.minimality.x0, &start.x0);
            set(&mut cfg.minimality.y0, &start.y0);
            set(&mut cfg.minimality.resolution, resolution);
            if out.is_some() {
                cfg.output.out = out.clone();
            }
            minimality_cmd(&cfg, stdout)
        }
        Command::Report {
            suite,
            tolerance_scale,
            seed,
            out,
        } => {
            if let Some(s) = suite {
                cfg.report.suites = s.iter().filter(|x| !x.trim().is_empty()).cloned().collect();
            }
            set(&mut cfg.report.tolerance_scale, tolerance_scale);
            set(&mut cfg.seed, seed);
            if out.is_some() {
                cfg.output.out = out.clone();
            }
            report_cmd(&cfg, stdout, stderr)
        }
        Command::Config { out } => {
            emit(out, &(cfg.to_json() + "\n"), stdout)?;
            Ok(EXIT_OK)
        }
    }
}

fn surface_cmd(action: &SurfaceAction, stdout: &mut dyn Write) -> Result<i32> {
    match action {
        SurfaceAction::List => {
            for e in catalog::CATALOG {
                writeln!(stdout, "{:<12} {:<10} {}", e.name, e.regularity, e.formula)?;
            }
        }
        SurfaceAction::Info { name } => {
            let entry = catalog::entry(name).ok_or_else(|| GeoError::UnknownSurface(name.clone()))?;
            let s = catalog::surface(name)?;
            let b = s.bounds();
            let info = json!({
                "schema": SCHEMA,
                "name": entry.name,
                "formula": entry.formula,
                "regularity": s.regularity().tag(),
                "parameters": entry.parameters,
                "domain": s.domain(),
                "sup_grad": b.grad_sup,
                "sup_hess": b.hess_sup,
                "facts": entry.facts,
            });
            stdout.write_all(io::to_json(&info)?.as_bytes())?;
        }
    }
    Ok(EXIT_OK)
}

fn start_vector(x0: &[f64], y0: &[f64], m: usize) -> Result<TangentVector> {
    for v in [x0, y0] {
        if v.len() != m {
            return Err(GeoError::DimensionMismatch { expected: m, got: v.len() });
        }
    }
    Ok(TangentVector::new(x0.to_vec(), y0.to_vec()))
}

fn exit_reason_tag(e: ExitReason) -> &'static str {
    match e {
        ExitReason::Completed => "completed",
        ExitReason::LeftChart => "left_chart",
        ExitReason::StepFailure => "step_failure",
    }
}

fn geodesic_cmd(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<i32> {
    let s = cfg.surface.build()?;
    let p = &cfg.geodesic;
    let v = start_vector(&p.x0, &p.y0, s.dim())?;
    let opts = cfg.tolerances.flow_options(&s);
    let traj = if p.samples > 0 {
        let times = regularity::uniform_times(p.t_end, p.samples);
        flow::integrate_geodesic_at(&s, &v, &times, p.t_end, &opts)?
    } else {
        flow::integrate_geodesic(&s, &v, p.t_end, &opts)?
    };
    if let Some(path) = &cfg.output.csv {
        let mut buf = Vec::new();
        traj.write_csv(&mut buf)?;
        io::write_text(path, &String::from_utf8_lossy(&buf))?;
    }
    let last = traj.last();
    let summary = json!({
        "schema": SCHEMA,
        "command": "geodesic",
        "surface": surface_name(cfg),
        "x0": p.x0,
        "y0": p.y0,
        "t_end": p.t_end,
        "end_time": traj.end_time(),
        "final_x": last.x,
        "final_y": last.y,
        "exit_reason": exit_reason_tag(traj.exit_reason),
        "speed": traj.speed,
        "speed_drift": traj.speed_drift(),
        "samples": traj.times.len(),
    });
    emit(&cfg.output.out, &io::to_json(&summary)?, stdout)?;
    Ok(EXIT_OK)
}

fn jacobian_cmd(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<i32> {
    let s = cfg.surface.build()?;
    let p = &cfg.jacobian;
    let v = start_vector(&p.x0, &p.y0, s.dim())?;
    let d = jacobi::flow_differential(&s, p.t, &v, &cfg.tolerances.flow_options(&s))?;
    let mut out = if p.fd_check {
        let fd = jacobi::fd_flow_differential(&s, p.t, &v, p.fd_eps.unwrap_or(1e-5))?;
        serde_json::to_value(FlowDifferentialReport::new(&d, &fd))?
    } else {
        json!({ "t": d.t, "v": d.v, "matrix": io::matrix_rows(&d.matrix) })
    };
    out["schema"] = json!(SCHEMA);
    out["surface"] = json!(surface_name(cfg));
    emit(&cfg.output.out, &io::to_json(&out)?, stdout)?;
    Ok(EXIT_OK)
}

fn smooth_cmd(cfg: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let s = cfg.surface.build()?;
    if s.regularity().at_least_c3() {
        writeln!(stderr, "warning: {} is already C3 or smoother", s.name())?;
    }
    let seq = regularity::approximation_sequence(&s, &cfg.smoothing.scales)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let probes = regularity::default_probes(&s, cfg.smoothing.probes, &mut rng);
    let rep = regularity::flow_convergence_report(&seq, &probes)?;
    if let Some(path) = &cfg.output.csv {
        io::write_text(path, &rep.level_csv())?;
    }
    let mut out = serde_json::to_value(&rep)?;
    out["schema"] = json!(SCHEMA);
    out["surface"] = json!(surface_name(cfg));
    out["seed"] = json!(cfg.seed);
    emit(&cfg.output.out, &io::to_json(&out)?, stdout)?;
    Ok(EXIT_OK)
}

fn minimality_cmd(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<i32> {
    let s = cfg.surface.build()?;
    let p = &cfg.minimality;
    let v = start_vector(&p.x0, &p.y0, s.dim())?;
    let times = regularity::uniform_times(1.0, p.samples.max(2));
    let traj = flow::integrate_geodesic_at(&s, &v, &times, 1.0, &cfg.tolerances.flow_options(&s))?;
    if traj.exit_reason != ExitReason::Completed {
        return Err(GeoError::OutOfDomain {
            t: 1.0,
            exit_time: traj.end_time(),
        });
    }
    let oracle = minimality::build_mesh_oracle(&s, p.resolution)?;
    let rep = minimality::minimality_margin(&s, &traj, &oracle)?;
    let mut out = serde_json::to_value(&rep)?;
    out["schema"] = json!(SCHEMA);
    out["surface"] = json!(surface_name(cfg));
    out["resolution"] = json!(p.resolution);
    out["minimizing_length"] = json!(minimality::minimizing_length(&s));
    emit(&cfg.output.out, &io::to_json(&out)?, stdout)?;
    Ok(EXIT_OK)
}

fn report_cmd(cfg: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let rep = suite::run_suite(&cfg.report.suites, cfg.seed, cfg.report.tolerance_scale)?;
    for r in &rep.results {
        writeln!(stderr, "{}", r.line())?;
    }
    emit(&cfg.output.out, &io::to_json(&rep)?, stdout)?;
    Ok(if rep.passed { EXIT_OK } else { EXIT_FAILED })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = main_with_args(std::iter::once("geoflow").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn surface_commands() {
        let (code, out, _) = run_args(&["surface", "list"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().count(), 6);
        let (code, out, _) = run_args(&["surface", "info", "vee"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["regularity"], "C11");
        assert!((v["sup_hess"].as_f64().unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(run_args(&["surface", "info", "nosuch"]).0, 2);
    }

    #[test]
    fn bad_flags_exit_2() {
        assert_eq!(run_args(&["geodesic", "--t-end", "abc"]).0, 2);
        assert_eq!(run_args(&["geodesic", "--x0", "1,2,3"]).0, 2);
        assert_eq!(run_args(&["report", "--suite", ""]).0, 2);
        assert_eq!(run_args(&["--help"]).0, 0);
    }

    #[test]
    fn jacobian_at_zero_is_identity() {
        let (code, out, _) = run_args(&["jacobian", "--surface", "hemisphere", "--t", "0", "--x0", "0.1,-0.2"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(v["matrix"][i][j].as_f64().unwrap(), if i == j { 1.0 } else { 0.0 });
            }
        }
    }
}
