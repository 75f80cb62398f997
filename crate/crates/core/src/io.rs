//! Trajectory serialization.
//!
//! CSV layout:
//!
//! ```text
//! # status CollisionStop
//! t,q1,q2,p1,p2,H0,H1
//! 0.0000000000000000e0,1.0000000000000000e0,...
//! # event 3.1e0 3.1e0 1-2
//! ```
//!
//! Reals are written with 17 significant digits, which reproduces every `f64`
//! bit for bit. Event lines use one-based peak indices; the collision point is
//! the position part of the final sample.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{PeakonError, Result};
use crate::integrator::{CollisionEvent, Sample, Status, StepStats, Trajectory};
use crate::invariants::InvariantVector;
use crate::model::PeakonState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = PeakonError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(PeakonError::InvalidInput(format!("unknown format {other:?} (csv or json)"))),
        }
    }
}

impl Format {
    /// Guess from a file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

/// Formats a real with 17 significant digits.
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_header(n: usize) -> String {
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=n).map(|i| format!("q{i}")));
    cols.extend((1..=n).map(|i| format!("p{i}")));
    cols.push("H0".into());
    cols.push("H1".into());
    if n == 3 {
        cols.push("H2".into());
    }
    cols.join(",")
}

pub fn trajectory_to_csv(traj: &Trajectory) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# status {}", traj.status.as_str());
    let _ = writeln!(out, "{}", csv_header(traj.n));
    for s in &traj.samples {
        let mut fields = vec![real(s.t)];
        fields.extend(s.state.q().iter().map(|&x| real(x)));
        fields.extend(s.state.p().iter().map(|&x| real(x)));
        fields.push(real(s.invariants.h0));
        fields.push(real(s.invariants.h1));
        if let Some(h2) = s.invariants.h2 {
            fields.push(real(h2));
        }
        let _ = writeln!(out, "{}", fields.join(","));
    }
    for e in &traj.events {
        let _ = writeln!(out, "# event {} {} {}-{}", real(e.t_lo), real(e.t_hi), e.pair.0 + 1, e.pair.1 + 1);
    }
    out
}

fn bad(line: usize, msg: impl std::fmt::Display) -> PeakonError {
    PeakonError::InvalidInput(format!("trajectory CSV line {line}: {msg}"))
}

fn parse_real(s: &str, line: usize) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| bad(line, format!("{s:?}: {e}")))
}

pub fn trajectory_from_csv(text: &str) -> Result<Trajectory> {
    let mut status = None;
    let mut n = None;
    let mut samples = Vec::new();
    let mut raw_events = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let parts: Vec<&str> = rest.split_whitespace().collect();
            match parts.as_slice() {
                ["status", s] => status = Some(s.parse::<Status>()?),
                ["event", lo, hi, pair] => {
                    let (a, b) = pair.split_once('-').ok_or_else(|| bad(lineno, "pair must look like i-j"))?;
                    let a: usize = a.parse().map_err(|e| bad(lineno, e))?;
                    let b: usize = b.parse().map_err(|e| bad(lineno, e))?;
                    if a == 0 || b != a + 1 {
                        return Err(bad(lineno, "pair must be adjacent one-based indices"));
                    }
                    raw_events.push((parse_real(lo, lineno)?, parse_real(hi, lineno)?, (a - 1, b - 1)));
                }
                _ => {}
            }
            continue;
        }
        if line.starts_with('t') {
            let count = (1..=3).find(|&k| line == csv_header(k)).ok_or_else(|| bad(lineno, "unrecognized header"))?;
            n = Some(count);
            continue;
        }
        let n = n.ok_or_else(|| bad(lineno, "data before header"))?;
        let vals: Vec<f64> = line.split(',').map(|s| parse_real(s, lineno)).collect::<Result<_>>()?;
        let expected = 1 + 2 * n + 2 + usize::from(n == 3);
        if vals.len() != expected {
            return Err(bad(lineno, format!("expected {expected} fields, got {}", vals.len())));
        }
        let state = PeakonState::new(vals[1..=n].to_vec(), vals[n + 1..=2 * n].to_vec())?;
        let mut invariants = InvariantVector::of(&state);
        invariants.h0 = vals[2 * n + 1];
        invariants.h1 = vals[2 * n + 2];
        if n == 3 {
            invariants.h2 = Some(vals[2 * n + 3]);
        }
        samples.push(Sample { t: vals[0], state, invariants });
    }
    let n = n.ok_or_else(|| PeakonError::InvalidInput("trajectory CSV has no header".into()))?;
    let status = status.ok_or_else(|| PeakonError::InvalidInput("trajectory CSV has no status line".into()))?;
    if samples.is_empty() {
        return Err(PeakonError::InvalidInput("trajectory CSV has no samples".into()));
    }
    let point = samples.last().expect("nonempty").state.q().to_vec();
    let events = raw_events
        .into_iter()
        .map(|(t_lo, t_hi, pair)| CollisionEvent { t_lo, t_hi, pair, point: point.clone() })
        .collect();
    Ok(Trajectory { n, samples, events, status, stats: StepStats::default() })
}

pub fn trajectory_to_json(traj: &Trajectory) -> Result<String> {
    serde_json::to_string_pretty(traj).map_err(|e| PeakonError::InvalidInput(e.to_string()))
}

pub fn trajectory_from_json(text: &str) -> Result<Trajectory> {
    serde_json::from_str(text).map_err(|e| PeakonError::InvalidInput(format!("trajectory JSON: {e}")))
}

pub fn render_trajectory(traj: &Trajectory, format: Format) -> Result<String> {
    match format {
        Format::Csv => Ok(trajectory_to_csv(traj)),
        Format::Json => trajectory_to_json(traj),
    }
}

pub fn parse_trajectory(text: &str, format: Format) -> Result<Trajectory> {
    match format {
        Format::Csv => trajectory_from_csv(text),
        Format::Json => trajectory_from_json(text),
    }
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    let text =
        std::fs::read_to_string(path).map_err(|e| PeakonError::InvalidInput(format!("{}: {e}", path.display())))?;
    parse_trajectory(&text, Format::from_path(path))
}
