//! Adaptive integration of the peakon flow.
//!
//! Dormand–Prince 5(4) with an embedded error estimate and FSAL reuse. Steps
//! are clipped so that every output sample falls exactly on an accepted step
//! (no interpolation). After each accepted step the smallest adjacent gap is
//! compared against `gap_eps`; the first crossing is bracketed by bisection,
//! re-integrating a single step from the last accepted state, and ends the run.

use serde::{Deserialize, Serialize};

use crate::error::{PeakonError, Result};
use crate::invariants::{invariant_drift, DriftReport, InvariantVector};
use crate::model::{min_adjacent_gap, momentum_from_velocity, rhs_into, PeakonState, TangentVector};

/// Steps below this size are reported as a failure.
pub const MIN_STEP: f64 = 1e-14;
/// Relative width of the collision bracket.
pub const EVENT_REL_WIDTH: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub horizon: f64,
    /// Collision threshold on the smallest adjacent gap.
    pub gap_eps: f64,
    pub max_step: f64,
    /// Output cadence.
    pub sample_dt: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-12, horizon: 10.0, gap_eps: 1e-6, max_step: f64::INFINITY, sample_dt: 0.1 }
    }
}

impl IntegratorOptions {
    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_sample_dt(mut self, dt: f64) -> Self {
        self.sample_dt = dt;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && !v.is_nan() {
                Ok(())
            } else {
                Err(PeakonError::InvalidInput(format!("{name} must be positive, got {v}")))
            }
        };
        positive("rel_tol", self.rel_tol)?;
        positive("abs_tol", self.abs_tol)?;
        positive("gap_eps", self.gap_eps)?;
        positive("max_step", self.max_step)?;
        positive("sample_dt", self.sample_dt)?;
        positive("horizon", self.horizon)?;
        if !self.horizon.is_finite() {
            return Err(PeakonError::InvalidInput("horizon must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    ReachedHorizon,
    CollisionStop,
    StepFailure,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::ReachedHorizon => "ReachedHorizon",
            Status::CollisionStop => "CollisionStop",
            Status::StepFailure => "StepFailure",
        }
    }
}

impl std::str::FromStr for Status {
    type Err = PeakonError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ReachedHorizon" => Ok(Status::ReachedHorizon),
            "CollisionStop" => Ok(Status::CollisionStop),
            "StepFailure" => Ok(Status::StepFailure),
            other => Err(PeakonError::InvalidInput(format!("unknown status {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub state: PeakonState,
    pub invariants: InvariantVector,
}

impl Sample {
    fn new(t: f64, state: PeakonState) -> Self {
        let invariants = InvariantVector::of(&state);
        Self { t, state, invariants }
    }
}

/// First time the smallest adjacent gap reaches `gap_eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub t_lo: f64,
    pub t_hi: f64,
    /// Zero-based adjacent pair `(i, i + 1)`.
    pub pair: (usize, usize),
    /// Positions at `t_hi`.
    pub point: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: u64,
    pub rejected: u64,
    pub rhs_evals: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub n: usize,
    pub samples: Vec<Sample>,
    pub events: Vec<CollisionEvent>,
    pub status: Status,
    #[serde(default)]
    pub stats: StepStats,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectories always hold the initial sample")
    }

    pub fn drift(&self) -> DriftReport {
        invariant_drift(self).expect("nonempty")
    }

    pub fn first_event(&self) -> Option<&CollisionEvent> {
        self.events.first()
    }
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Fifth-order weights minus fourth-order weights.
const E_ERR: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

/// Stage storage for one system size; the state vector is `[q..., p...]`.
struct Stepper {
    n: usize,
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    evals: u64,
}

impl Stepper {
    fn new(n: usize) -> Self {
        let dim = 2 * n;
        Self { n, k: std::array::from_fn(|_| vec![0.0; dim]), tmp: vec![0.0; dim], evals: 0 }
    }

    fn rhs(&mut self, y: &[f64], out: &mut [f64]) {
        let n = self.n;
        let (dq, dp) = out.split_at_mut(n);
        rhs_into(&y[..n], &y[n..], dq, dp);
        self.evals += 1;
    }

    /// One trial step from `y` (with `f0 = f(y)`) of size `h`. Writes the fifth-order
    /// solution to `y_out` and returns the scaled RMS error. `k[6]` then holds `f(y_out)`.
    fn step(&mut self, y: &[f64], f0: &[f64], h: f64, y_out: &mut [f64], opts: &IntegratorOptions) -> f64 {
        let dim = y.len();
        self.k[0].copy_from_slice(f0);
        for s in 1..7 {
            for i in 0..dim {
                let mut acc = 0.0;
                for (j, a) in A[s].iter().enumerate().take(s) {
                    acc += a * self.k[j][i];
                }
                self.tmp[i] = y[i] + h * acc;
            }
            let tmp = std::mem::take(&mut self.tmp);
            let mut ks = std::mem::take(&mut self.k[s]);
            self.rhs(&tmp, &mut ks);
            self.k[s] = ks;
            self.tmp = tmp;
            if s == 6 {
                y_out.copy_from_slice(&self.tmp);
            }
        }
        let _ = C;
        let mut sum = 0.0;
        for i in 0..dim {
            let mut e = 0.0;
            for (s, w) in E_ERR.iter().enumerate() {
                e += w * self.k[s][i];
            }
            let sc = opts.abs_tol + opts.rel_tol * y[i].abs().max(y_out[i].abs());
            let r = h * e / sc;
            sum += r * r;
        }
        if y_out.iter().any(|v| !v.is_finite()) {
            return f64::INFINITY;
        }
        (sum / dim as f64).sqrt()
    }

    fn initial_step(&mut self, y0: &[f64], f0: &[f64], opts: &IntegratorOptions) -> f64 {
        let dim = y0.len() as f64;
        let sc: Vec<f64> = y0.iter().map(|v| opts.abs_tol + opts.rel_tol * v.abs()).collect();
        let rms = |v: &[f64]| (v.iter().zip(&sc).map(|(x, s)| (x / s).powi(2)).sum::<f64>() / dim).sqrt();
        let d0 = rms(y0);
        let d1 = rms(f0);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, f)| y + h0 * f).collect();
        let mut f1 = vec![0.0; y0.len()];
        self.rhs(&y1, &mut f1);
        let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
        let d2 = rms(&diff) / h0;
        let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
        (100.0 * h0).min(h1)
    }
}

fn split(y: &[f64], n: usize) -> PeakonState {
    PeakonState::from_parts_unchecked(y[..n].to_vec(), y[n..].to_vec())
}

fn argmin_gap(q: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..q.len().saturating_sub(1) {
        if q[i] - q[i + 1] < q[best] - q[best + 1] {
            best = i;
        }
    }
    best
}

/// Integrates Hamilton's equations from `state0` until the horizon or the first collision event.
///
/// Step-size underflow is not an `Err`: the partial trajectory is returned with
/// [`Status::StepFailure`].
pub fn integrate(state0: &PeakonState, opts: &IntegratorOptions) -> Result<Trajectory> {
    opts.validate()?;
    let n = state0.n();
    if state0.min_gap() <= opts.gap_eps {
        return Err(PeakonError::OutOfDomain(format!(
            "initial gap {} does not exceed gap_eps {}",
            state0.min_gap(),
            opts.gap_eps
        )));
    }
    let dim = 2 * n;
    let mut stepper = Stepper::new(n);
    let mut y: Vec<f64> = state0.q().iter().chain(state0.p()).copied().collect();
    let mut f = vec![0.0; dim];
    stepper.rhs(&y, &mut f);
    let mut y_new = vec![0.0; dim];

    let mut samples = vec![Sample::new(0.0, state0.clone())];
    let mut events = Vec::new();
    let mut stats = StepStats::default();

    let mut t = 0.0_f64;
    let mut h = stepper.initial_step(&y, &f, opts).min(opts.max_step);
    let mut sample_index: u64 = 1;
    let status = loop {
        if t >= opts.horizon {
            break Status::ReachedHorizon;
        }
        let target = (sample_index as f64 * opts.sample_dt).min(opts.horizon);
        let h_free = h.min(opts.max_step);
        let remaining = target - t;
        let landing = h_free >= remaining * (1.0 - 1e-12);
        let h_try = if landing { remaining } else { h_free };

        let err = stepper.step(&y, &f, h_try, &mut y_new, opts);
        let factor = if err == 0.0 {
            MAX_FACTOR
        } else if err.is_finite() {
            (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
        } else {
            MIN_FACTOR
        };

        if err <= 1.0 {
            stats.accepted += 1;
            let t_new = if landing { target } else { t + h_try };
            if min_adjacent_gap(&y_new[..n]) <= opts.gap_eps {
                let (event, y_hi) = refine_event(&mut stepper, &y, &f, t, h_try, opts);
                samples.push(Sample::new(event.t_hi, split(&y_hi, n)));
                events.push(event);
                break Status::CollisionStop;
            }
            t = t_new;
            std::mem::swap(&mut y, &mut y_new);
            f.copy_from_slice(&stepper.k[6]);
            if landing {
                samples.push(Sample::new(t, split(&y, n)));
                sample_index += 1;
            }
            h = h_try * factor;
            if landing {
                h = h.max(h_free);
            }
        } else {
            stats.rejected += 1;
            h = h_try * factor;
            if h < MIN_STEP {
                samples.push(Sample::new(t, split(&y, n)).clone());
                // The last accepted state is already the final sample unless it was not a landing point.
                dedup_last(&mut samples);
                break Status::StepFailure;
            }
        }
    };
    stats.rhs_evals = stepper.evals;
    Ok(Trajectory { n, samples, events, status, stats })
}

fn dedup_last(samples: &mut Vec<Sample>) {
    let len = samples.len();
    if len >= 2 && samples[len - 1].t == samples[len - 2].t {
        samples.pop();
    }
}

/// Bisects the first crossing of `min gap = gap_eps` inside an accepted step `[t, t + h]`.
fn refine_event(
    stepper: &mut Stepper,
    y: &[f64],
    f: &[f64],
    t: f64,
    h: f64,
    opts: &IntegratorOptions,
) -> (CollisionEvent, Vec<f64>) {
    let n = stepper.n;
    let mut lo = 0.0_f64;
    let mut hi = h;
    let mut y_hi = vec![0.0; y.len()];
    stepper.step(y, f, hi, &mut y_hi, opts);
    let mut y_mid = vec![0.0; y.len()];
    while hi - lo > EVENT_REL_WIDTH * (t + hi).max(1.0) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        stepper.step(y, f, mid, &mut y_mid, opts);
        if min_adjacent_gap(&y_mid[..n]) <= opts.gap_eps {
            hi = mid;
            y_hi.copy_from_slice(&y_mid);
        } else {
            lo = mid;
        }
    }
    let q_hi = y_hi[..n].to_vec();
    let i = argmin_gap(&q_hi);
    let event = CollisionEvent { t_lo: t + lo, t_hi: t + hi, pair: (i, i + 1), point: q_hi };
    (event, y_hi)
}

/// Riemannian exponential map of the peakon metric: follows the geodesic with
/// initial velocity `v` for time `t` (`t = 1` gives `exp_{q0}(v)`).
pub fn exp_map(q0: &[f64], v: &TangentVector, t: f64) -> Result<PeakonState> {
    exp_map_with(q0, v, t, &IntegratorOptions::default())
}

/// [`exp_map`] with explicit tolerances; `horizon` and `sample_dt` are overridden by `t`.
pub fn exp_map_with(q0: &[f64], v: &TangentVector, t: f64, opts: &IntegratorOptions) -> Result<PeakonState> {
    if v.0.iter().any(|x| !x.is_finite()) {
        return Err(PeakonError::InvalidInput("non-finite tangent vector".into()));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(PeakonError::InvalidInput(format!("geodesic time must be finite and >= 0, got {t}")));
    }
    let p0 = momentum_from_velocity(q0, v)?;
    let state0 = PeakonState::new(q0.to_vec(), p0.0)?;
    if t == 0.0 {
        return Ok(state0);
    }
    let opts = IntegratorOptions { horizon: t, sample_dt: t, ..opts.clone() };
    let traj = integrate(&state0, &opts)?;
    let last = traj.last();
    match traj.status {
        Status::ReachedHorizon => Ok(last.state.clone()),
        Status::CollisionStop => Err(PeakonError::LeftDomain { t: last.t, partial: Box::new(last.state.clone()) }),
        Status::StepFailure => Err(PeakonError::StepFailure { t: last.t, partial: Box::new(last.state.clone()) }),
    }
}
