//! Randomized prediction-versus-simulation scans.
//!
//! Initial states are drawn sequentially from a seeded ChaCha stream, so the
//! sample set depends only on the seed and the configuration. Each state is
//! then predicted and simulated independently; rows come back in draw order.
//!
//! A row is a contradiction when the simulation disagrees with a proven
//! implication: a twopeakon predicted to collide that does not collide before
//! `2 t*` (or collides after `t*`), or any state predicted to escape that
//! collides before the escape horizon.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::collision::{predict, Outcome, Verdict};
use crate::error::{PeakonError, Result};
use crate::integrator::{integrate, IntegratorOptions, Status};
use crate::io::{real, Format};
use crate::model::PeakonState;
use crate::par::{map_ordered, Exec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanFilter {
    /// Every drawn state.
    #[default]
    All,
    /// Only states for which collision is excluded by the sign criteria.
    Excluded,
}

impl std::str::FromStr for ScanFilter {
    type Err = PeakonError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(ScanFilter::All),
            "excluded" => Ok(ScanFilter::Excluded),
            other => Err(PeakonError::InvalidInput(format!("unknown filter {other:?} (all or excluded)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub gap_range: (f64, f64),
    pub momentum_range: (f64, f64),
    /// Horizon for states not predicted to collide.
    pub escape_horizon: f64,
    /// Allowed excess of an observed collision time over `t*`.
    pub bound_slack: f64,
    pub filter: ScanFilter,
    pub integrator: IntegratorOptions,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            n: 2,
            samples: 200,
            seed: 7,
            gap_range: (0.2, 3.0),
            momentum_range: (0.2, 2.0),
            escape_horizon: 50.0,
            bound_slack: 1e-6,
            filter: ScanFilter::All,
            integrator: IntegratorOptions::default(),
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if !(2..=3).contains(&self.n) {
            return Err(PeakonError::WrongArity { expected: "2 or 3", got: self.n });
        }
        let ok_range = |(lo, hi): (f64, f64)| lo > 0.0 && hi >= lo && hi.is_finite();
        if !ok_range(self.gap_range) || !ok_range(self.momentum_range) {
            return Err(PeakonError::InvalidInput("sampling ranges must satisfy 0 < lo <= hi < inf".into()));
        }
        if !(self.escape_horizon > 0.0 && self.escape_horizon.is_finite()) {
            return Err(PeakonError::InvalidInput("escape horizon must be positive".into()));
        }
        self.integrator.validate()
    }
}

fn draw_state(rng: &mut ChaCha8Rng, cfg: &ScanConfig) -> PeakonState {
    let n = cfg.n;
    let mut q = vec![0.0; n];
    for i in (0..n - 1).rev() {
        q[i] = q[i + 1] + rng.random_range(cfg.gap_range.0..=cfg.gap_range.1);
    }
    let p: Vec<f64> = (0..n)
        .map(|_| {
            let m = rng.random_range(cfg.momentum_range.0..=cfg.momentum_range.1);
            if rng.random_bool(0.5) {
                m
            } else {
                -m
            }
        })
        .collect();
    PeakonState::new(q, p).expect("sampled states are ordered with nonzero momenta")
}

/// Draws `cfg.samples` states, rejecting those outside the filter.
pub fn sample_states(cfg: &ScanConfig) -> Result<Vec<PeakonState>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::with_capacity(cfg.samples);
    let mut attempts = 0usize;
    while out.len() < cfg.samples {
        attempts += 1;
        if attempts > 1000 * cfg.samples.max(1) {
            return Err(PeakonError::InvalidInput("filter rejects nearly every sample".into()));
        }
        let s = draw_state(&mut rng, cfg);
        let keep = match cfg.filter {
            ScanFilter::All => true,
            ScanFilter::Excluded => predict(&s)?.outcome == Outcome::Escapes,
        };
        if keep {
            out.push(s);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub index: usize,
    pub state: PeakonState,
    pub verdict: Verdict,
    pub observed: Status,
    pub collision_time: Option<f64>,
    pub horizon: f64,
    pub contradiction: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub config: ScanConfig,
    pub rows: Vec<ScanRow>,
}

impl ScanReport {
    pub fn contradictions(&self) -> usize {
        self.rows.iter().filter(|r| r.contradiction).count()
    }

    pub fn collisions(&self) -> usize {
        self.rows.iter().filter(|r| r.observed == Status::CollisionStop).count()
    }
}

/// Predicts and simulates one state.
pub fn evaluate(index: usize, state: &PeakonState, cfg: &ScanConfig) -> Result<ScanRow> {
    let verdict = predict(state)?;
    let horizon = match verdict.bound_time {
        Some(t) => 2.0 * t,
        None => cfg.escape_horizon,
    };
    let opts = IntegratorOptions { horizon, sample_dt: horizon, ..cfg.integrator.clone() };
    let traj = integrate(state, &opts)?;
    let collision_time = traj.first_event().map(|e| e.t_hi);
    let contradiction = match (verdict.outcome, traj.status) {
        (Outcome::Collides, Status::CollisionStop) => {
            collision_time.unwrap_or(f64::INFINITY) > verdict.bound_time.unwrap_or(0.0) + cfg.bound_slack
        }
        (Outcome::Collides, _) => true,
        (Outcome::Escapes, Status::ReachedHorizon) => false,
        (Outcome::Escapes, _) => true,
        (Outcome::PossibleCollision, _) => false,
    };
    Ok(ScanRow { index, state: state.clone(), verdict, observed: traj.status, collision_time, horizon, contradiction })
}

pub fn run_scan(cfg: &ScanConfig, exec: Exec) -> Result<ScanReport> {
    let states = sample_states(cfg)?;
    let indexed: Vec<(usize, PeakonState)> = states.into_iter().enumerate().collect();
    let rows = map_ordered(&indexed, exec, |(i, s)| evaluate(*i, s, cfg)).into_iter().collect::<Result<Vec<_>>>()?;
    Ok(ScanReport { config: cfg.clone(), rows })
}

fn opt_real(x: Option<f64>) -> String {
    x.map(real).unwrap_or_default()
}

pub fn scan_to_csv(report: &ScanReport) -> String {
    let n = report.config.n;
    let mut out = String::new();
    let mut header = vec!["index".to_string()];
    header.extend((1..=n).map(|i| format!("q{i}")));
    header.extend((1..=n).map(|i| format!("p{i}")));
    header.extend(
        ["predicted", "condition", "observed", "collision_time", "bound_time", "horizon", "contradiction"]
            .map(String::from),
    );
    let _ = writeln!(out, "{}", header.join(","));
    for r in &report.rows {
        let mut f = vec![r.index.to_string()];
        f.extend(r.state.q().iter().map(|&x| real(x)));
        f.extend(r.state.p().iter().map(|&x| real(x)));
        f.push(r.verdict.outcome.as_str().into());
        f.push(r.verdict.condition_fired.map(|c| c.as_str().to_string()).unwrap_or_default());
        f.push(r.observed.as_str().into());
        f.push(opt_real(r.collision_time));
        f.push(opt_real(r.verdict.bound_time));
        f.push(real(r.horizon));
        f.push(r.contradiction.to_string());
        let _ = writeln!(out, "{}", f.join(","));
    }
    out
}

pub fn render_scan(report: &ScanReport, format: Format) -> Result<String> {
    match format {
        Format::Csv => Ok(scan_to_csv(report)),
        Format::Json => serde_json::to_string_pretty(report).map_err(|e| PeakonError::InvalidInput(e.to_string())),
    }
}
