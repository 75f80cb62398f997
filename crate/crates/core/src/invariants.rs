//! First integrals of the peakon flow and drift monitoring.
//!
//! `H0` is the momentum sum (the pairing with the translation Killing field),
//! `H1` the Hamiltonian, `H2` the cubic integral of the threepeakon. The
//! combination `Ĥ` vanishes exactly on the zero-momentum set and on the
//! collision set, and has a factored product form that is computed here along a
//! second, independent path.

use serde::{Deserialize, Serialize};

use crate::error::{PeakonError, Result};
use crate::integrator::Trajectory;
use crate::matrix::SmallMatrix;
use crate::model::{e_matrix_unchecked, hamiltonian, metric_matrix, PeakonState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantVector {
    pub h0: f64,
    pub h1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hhat: Option<f64>,
}

impl InvariantVector {
    /// `hhat` here is the defining combination of the integrals, not the product form.
    pub fn of(state: &PeakonState) -> Self {
        let h0 = h0(state);
        let h1 = hamiltonian(state);
        let h2 = (state.n() == 3).then(|| h2_raw(state.q(), state.p()));
        let hhat = match state.n() {
            2 => Some(h1 - 0.5 * h0 * h0),
            3 => h2.map(|h2| h2 - h0 * h1 + h0.powi(3) / 6.0),
            _ => None,
        };
        Self { h0, h1, h2, hhat }
    }
}

pub fn h0(state: &PeakonState) -> f64 {
    state.p().iter().sum()
}

/// Cubic first integral of the threepeakon:
///
/// `H2 = ⅓Σp_i³ + Σ_{i<j} e^{-(q_i-q_j)} (p_i²p_j + p_i p_j²) + 2 e^{-(q_1-q_3)} p_1 p_2 p_3`.
pub fn h2_threepeakon(state: &PeakonState) -> Result<f64> {
    if state.n() != 3 {
        return Err(PeakonError::WrongArity { expected: "3", got: state.n() });
    }
    Ok(h2_raw(state.q(), state.p()))
}

fn h2_raw(q: &[f64], p: &[f64]) -> f64 {
    let (p1, p2, p3) = (p[0], p[1], p[2]);
    let e12 = (-(q[0] - q[1])).exp();
    let e23 = (-(q[1] - q[2])).exp();
    let e13 = (-(q[0] - q[2])).exp();
    (p1 * p1 * p1 + p2 * p2 * p2 + p3 * p3 * p3) / 3.0
        + e12 * p1 * p2 * (p1 + p2)
        + e23 * p2 * p3 * (p2 + p3)
        + e13 * p1 * p3 * (p1 + p3)
        + 2.0 * e13 * p1 * p2 * p3
}

/// `Ĥ` in factored form: `p1 p2 (e^{-|q1-q2|} - 1)` for two peaks,
/// `p1 p2 p3 (1 + e^{-(q1-q3)} - e^{-(q1-q2)} - e^{-(q2-q3)})` for three.
pub fn hhat(state: &PeakonState) -> Result<f64> {
    let (q, p) = (state.q(), state.p());
    match state.n() {
        2 => Ok(p[0] * p[1] * (-(q[0] - q[1]).abs()).exp_m1()),
        3 => {
            let a = q[0] - q[1];
            let b = q[1] - q[2];
            // 1 + e^{-(a+b)} - e^{-a} - e^{-b} = (1 - e^{-a})(1 - e^{-b})
            Ok(p[0] * p[1] * p[2] * (-a).exp_m1() * (-b).exp_m1())
        }
        n => Err(PeakonError::WrongArity { expected: "2 or 3", got: n }),
    }
}

/// `Ĥ` from its definition: `H1 - ½H0²` (two peaks) or `H2 - H0 H1 + H0³/6` (three).
pub fn hhat_from_integrals(state: &PeakonState) -> Result<f64> {
    match state.n() {
        2 | 3 => Ok(InvariantVector::of(state).hhat.expect("defined for n = 2, 3")),
        n => Err(PeakonError::WrongArity { expected: "2 or 3", got: n }),
    }
}

/// `g(q̇, X)` for the translation field `X = ∂_1 + ... + ∂_n`, with `q̇ = E p`.
pub fn killing_pairing(state: &PeakonState) -> Result<f64> {
    let g: SmallMatrix = metric_matrix(state.q())?;
    let qdot = e_matrix_unchecked(state.q()).mul_vec(state.p());
    Ok(g.mul_vec(&qdot).iter().sum())
}

/// Maximum relative deviation of each invariant from its initial value,
/// `max_t |H(t) - H(0)| / max(1, |H(0)|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub h0: f64,
    pub h1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h2: Option<f64>,
}

impl DriftReport {
    pub fn max(&self) -> f64 {
        self.h0.max(self.h1).max(self.h2.unwrap_or(0.0))
    }
}

pub fn invariant_drift(traj: &Trajectory) -> Result<DriftReport> {
    let values: Vec<InvariantVector> = traj.samples.iter().map(|s| s.invariants).collect();
    drift_of(&values)
}

pub fn drift_of(values: &[InvariantVector]) -> Result<DriftReport> {
    let first = values.first().ok_or_else(|| PeakonError::InvalidInput("drift of an empty trajectory".into()))?;
    let rel = |h0: f64, h: f64| (h - h0).abs() / h0.abs().max(1.0);
    let mut report = DriftReport { h0: 0.0, h1: 0.0, h2: first.h2.map(|_| 0.0) };
    for v in values {
        report.h0 = report.h0.max(rel(first.h0, v.h0));
        report.h1 = report.h1.max(rel(first.h1, v.h1));
        if let (Some(a), Some(b), Some(d)) = (first.h2, v.h2, report.h2.as_mut()) {
            *d = d.max(rel(a, b));
        }
    }
    Ok(report)
}
