//! Command-line front end.
//!
//! Every command is a function from a merged [`RunConfig`] to a [`CliOutcome`]
//! (text for stdout and an exit code), so the binary is a thin shell and the
//! commands are testable in-process.
//!
//! Exit codes: 0 success, 1 verification failure, 2 invalid input, 3 runtime
//! failure or a contradiction found by `scan`.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::collision::predict;
use crate::error::PeakonError;
use crate::geometry::curvature_report;
use crate::integrator::{integrate, IntegratorOptions, Status};
use crate::io::{render_trajectory, Format};
use crate::model::{PeakonState, TangentVector};
use crate::par::Exec;
use crate::scan::{render_scan, run_scan, ScanConfig, ScanFilter};
use crate::verify::{run_verify, VerifyOptions, VerifyReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "peakon", version, about = "Simulate and analyse two- and threepeakon dynamics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the flow and write the trajectory
    Simulate(Flags),
    /// Predict collision or escape from the momentum signs
    Predict(Flags),
    /// Curvature of the metric at a point
    Curvature(Flags),
    /// Compare predictions against simulations over random initial states
    Scan(Flags),
    /// Run the oracle suites
    Verify(Flags),
}

impl Command {
    fn flags(&self) -> &Flags {
        match self {
            Command::Simulate(f)
            | Command::Predict(f)
            | Command::Curvature(f)
            | Command::Scan(f)
            | Command::Verify(f) => f,
        }
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"))).collect()
}

/// Flags shared by all subcommands. Unset flags fall back to the config file, then to defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// TOML file with any of the options below
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Peak positions, strictly decreasing
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
    pub q: Option<::std::vec::Vec<f64>>,
    /// Peak momenta
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
    pub p: Option<::std::vec::Vec<f64>>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub rtol: Option<f64>,
    #[arg(long)]
    pub atol: Option<f64>,
    /// Collision threshold on the smallest gap
    #[arg(long)]
    pub gap_eps: Option<f64>,
    /// Output cadence of trajectory samples
    #[arg(long)]
    pub sample_dt: Option<f64>,
    #[arg(long)]
    pub max_step: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Number of peaks for `scan`
    #[arg(long)]
    pub n: Option<usize>,
    /// Two tangent vectors spanning a plane: a1,a2,a3,b1,b2,b3
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
    pub plane: Option<::std::vec::Vec<f64>>,
    #[arg(long)]
    pub format: Option<Format>,
    /// `scan` population: all or excluded
    #[arg(long)]
    pub filter: Option<ScanFilter>,
    /// Comma-separated suite names for `verify`
    #[arg(long, value_delimiter = ',')]
    pub only: Option<Vec<String>>,
    /// Disable the thread pool
    #[arg(long)]
    pub sequential: bool,
}

/// Options after merging the config file with the command line.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub q: Option<Vec<f64>>,
    pub p: Option<Vec<f64>>,
    pub horizon: Option<f64>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub gap_eps: Option<f64>,
    pub sample_dt: Option<f64>,
    pub max_step: Option<f64>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub n: Option<usize>,
    pub plane: Option<Vec<f64>>,
    pub format: Option<Format>,
    pub filter: Option<ScanFilter>,
    pub only: Option<Vec<String>>,
    #[serde(default)]
    pub sequential: bool,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, PeakonError> {
        toml::from_str(text).map_err(|e| PeakonError::InvalidInput(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, PeakonError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PeakonError::InvalidInput(format!("config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Values present in `flags` replace those from the file.
    pub fn overlay(mut self, flags: &Flags) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if flags.$f.is_some() { self.$f = flags.$f.clone(); } )* };
        }
        take!(
            q, p, horizon, rtol, atol, gap_eps, sample_dt, max_step, out, seed, samples, n, plane, format, filter, only
        );
        self.sequential |= flags.sequential;
        self
    }

    pub fn exec(&self) -> Exec {
        if self.sequential {
            Exec::Sequential
        } else {
            Exec::default()
        }
    }

    pub fn integrator(&self) -> IntegratorOptions {
        let d = IntegratorOptions::default();
        IntegratorOptions {
            rel_tol: self.rtol.unwrap_or(d.rel_tol),
            abs_tol: self.atol.unwrap_or(d.abs_tol),
            horizon: self.horizon.unwrap_or(d.horizon),
            gap_eps: self.gap_eps.unwrap_or(d.gap_eps),
            max_step: self.max_step.unwrap_or(d.max_step),
            sample_dt: self.sample_dt.unwrap_or(d.sample_dt),
        }
    }

    pub fn state(&self) -> Result<PeakonState, PeakonError> {
        let q = self.q.clone().ok_or_else(|| PeakonError::InvalidInput("--q is required".into()))?;
        let p = self.p.clone().ok_or_else(|| PeakonError::InvalidInput("--p is required".into()))?;
        PeakonState::new(q, p)
    }

    fn positions(&self) -> Result<Vec<f64>, PeakonError> {
        self.q.clone().ok_or_else(|| PeakonError::InvalidInput("--q is required".into()))
    }

    fn output_format(&self) -> Format {
        self.format.unwrap_or_else(|| self.out.as_deref().map(Format::from_path).unwrap_or_default())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliOutcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

impl CliOutcome {
    fn ok(stdout: String) -> Self {
        Self { stdout, stderr: String::new(), code: EXIT_OK }
    }

    fn with_code(stdout: String, code: i32) -> Self {
        Self { stdout, stderr: String::new(), code }
    }

    fn error(err: &PeakonError) -> Self {
        Self { stdout: String::new(), stderr: format!("error: {err}\n"), code: exit_code_for(err) }
    }
}

pub fn exit_code_for(err: &PeakonError) -> i32 {
    match err {
        PeakonError::StepFailure { .. } | PeakonError::LeftDomain { .. } | PeakonError::EigenResidual { .. } => {
            EXIT_RUNTIME
        }
        _ => EXIT_INVALID,
    }
}

pub fn verify_exit_code(report: &VerifyReport) -> i32 {
    if report.all_passed() {
        EXIT_OK
    } else {
        EXIT_VERIFY_FAILED
    }
}

fn pretty(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn write_file(path: &Path, contents: &str) -> Result<(), PeakonError> {
    std::fs::write(path, contents).map_err(|e| PeakonError::InvalidInput(format!("{}: {e}", path.display())))
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<CliOutcome, PeakonError> {
    let state = cfg.state()?;
    let traj = integrate(&state, &cfg.integrator())?;
    if let Some(path) = &cfg.out {
        write_file(path, &render_trajectory(&traj, cfg.output_format())?)?;
    }
    let last = traj.last();
    let drift = traj.drift();
    let summary = json!({
        "status": traj.status.as_str(),
        "n": traj.n,
        "samples": traj.samples.len(),
        "final": { "t": last.t, "q": last.state.q(), "p": last.state.p() },
        "event": traj.first_event().map(|e| json!({
            "t_lo": e.t_lo,
            "t_hi": e.t_hi,
            "pair": [e.pair.0 + 1, e.pair.1 + 1],
            "point": e.point,
        })),
        "drift": drift,
        "steps": traj.stats,
    });
    let code = if traj.status == Status::StepFailure { EXIT_RUNTIME } else { EXIT_OK };
    Ok(CliOutcome::with_code(pretty(&summary), code))
}

pub fn cmd_predict(cfg: &RunConfig) -> Result<CliOutcome, PeakonError> {
    Ok(CliOutcome::ok(pretty(&predict(&cfg.state()?)?)))
}

pub fn cmd_curvature(cfg: &RunConfig) -> Result<CliOutcome, PeakonError> {
    let q = cfg.positions()?;
    let plane = match &cfg.plane {
        None => None,
        Some(v) if v.len() == 6 => Some((TangentVector(v[..3].to_vec()), TangentVector(v[3..].to_vec()))),
        Some(v) => {
            return Err(PeakonError::InvalidInput(format!("--plane needs 6 numbers, got {}", v.len())));
        }
    };
    let report = curvature_report(&q, plane.as_ref().map(|(a, b)| (a, b)))?;
    Ok(CliOutcome::ok(pretty(&report)))
}

pub fn scan_config(cfg: &RunConfig) -> ScanConfig {
    let d = ScanConfig::default();
    let mut integrator = cfg.integrator();
    integrator.horizon = d.escape_horizon;
    ScanConfig {
        n: cfg.n.or(cfg.q.as_ref().map(Vec::len)).unwrap_or(d.n),
        samples: cfg.samples.unwrap_or(d.samples),
        seed: cfg.seed.unwrap_or(d.seed),
        escape_horizon: cfg.horizon.unwrap_or(d.escape_horizon),
        filter: cfg.filter.unwrap_or(d.filter),
        integrator,
        ..d
    }
}

pub fn cmd_scan(cfg: &RunConfig) -> Result<CliOutcome, PeakonError> {
    let sc = scan_config(cfg);
    let report = run_scan(&sc, cfg.exec())?;
    let body = render_scan(&report, cfg.output_format())?;
    let summary = json!({
        "n": sc.n,
        "samples": report.rows.len(),
        "seed": sc.seed,
        "collisions": report.collisions(),
        "contradictions": report.contradictions(),
    });
    let stdout = match &cfg.out {
        Some(path) => {
            write_file(path, &body)?;
            pretty(&summary)
        }
        None => body,
    };
    let mut outcome = CliOutcome::ok(stdout);
    if report.contradictions() > 0 {
        outcome.code = EXIT_RUNTIME;
        outcome.stderr = format!("{} contradicting rows\n", report.contradictions());
    }
    Ok(outcome)
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<CliOutcome, PeakonError> {
    let mut opts = VerifyOptions { exec: cfg.exec(), ..Default::default() };
    if let Some(seed) = cfg.seed {
        opts.seed = seed;
    }
    if let Some(only) = &cfg.only {
        opts.only = only.clone();
    }
    let report = run_verify(&opts)?;
    if let Some(path) = &cfg.out {
        write_file(path, &pretty(&report))?;
    }
    Ok(CliOutcome::with_code(report.table(), verify_exit_code(&report)))
}

pub fn execute(command: &Command) -> CliOutcome {
    let flags = command.flags();
    let base = match &flags.config {
        Some(path) => match RunConfig::load(path) {
            Ok(c) => c,
            Err(e) => return CliOutcome::error(&e),
        },
        None => RunConfig::default(),
    };
    let cfg = base.overlay(flags);
    let result = match command {
        Command::Simulate(_) => cmd_simulate(&cfg),
        Command::Predict(_) => cmd_predict(&cfg),
        Command::Curvature(_) => cmd_curvature(&cfg),
        Command::Scan(_) => cmd_scan(&cfg),
        Command::Verify(_) => cmd_verify(&cfg),
    };
    result.unwrap_or_else(|e| CliOutcome::error(&e))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> CliOutcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli.command),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let text = e.render().to_string();
            if code == EXIT_OK {
                CliOutcome::ok(text)
            } else {
                CliOutcome { stdout: String::new(), stderr: text, code }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> CliOutcome {
        run(std::iter::once("peakon").chain(args.iter().copied()))
    }

    #[test]
    fn predict_collides() {
        let out = run_args(&["predict", "--q", "1,0", "--p", "-1,1"]);
        assert_eq!(out.code, 0, "{}", out.stderr);
        let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!(v["outcome"], "Collides");
        assert!((v["bound_time"].as_f64().unwrap() - 3.2868).abs() < 1e-4);
    }

    #[test]
    fn predict_boundary_is_invalid_input() {
        assert_eq!(run_args(&["predict", "--q", "1,0", "--p", "0,1"]).code, EXIT_INVALID);
        assert_eq!(run_args(&["predict", "--q", "0,1", "--p", "1,1"]).code, EXIT_INVALID);
        assert_eq!(run_args(&["predict", "--q", "1,0"]).code, EXIT_INVALID);
        assert_eq!(run_args(&["predict", "--q", "1,x", "--p", "1,1"]).code, EXIT_INVALID);
    }

    #[test]
    fn flags_override_config() {
        let file = RunConfig::from_toml("q = [1.0, 0.0]\np = [1.0, 1.0]\nhorizon = 3.0\n").unwrap();
        let flags = Flags { p: Some(vec![-1.0, 1.0]), ..Default::default() };
        let merged = file.overlay(&flags);
        assert_eq!(merged.p, Some(vec![-1.0, 1.0]));
        assert_eq!(merged.q, Some(vec![1.0, 0.0]));
        assert_eq!(merged.integrator().horizon, 3.0);
        assert!(RunConfig::from_toml("bogus = 1").is_err());
    }

    #[test]
    fn curvature_bad_plane() {
        assert_eq!(run_args(&["curvature", "--q", "1,0,-1", "--plane", "1,0,0,2,0,0"]).code, EXIT_INVALID);
        assert_eq!(run_args(&["curvature", "--q", "1,0,-1", "--plane", "1,0,0"]).code, EXIT_INVALID);
    }

    #[test]
    fn help_exits_zero() {
        let out = run_args(&["--help"]);
        assert_eq!(out.code, 0);
        assert!(out.stdout.contains("simulate"));
    }
}
