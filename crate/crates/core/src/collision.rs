//! Collision criteria.
//!
//! A twopeakon collides in finite time exactly when `p1 < 0 < p2` (sector I),
//! and then no later than the explicit bound `t*`. For three peaks the sign
//! conditions `p1 < 0 < p2` or `p2 < 0 < p3` are only necessary, so the
//! predictor answers `PossibleCollision` rather than `Collides` when one holds.
//!
//! The second half of the module concerns the distributions `D_i` on which
//! `p_i` vanishes. `D_i` is annihilated by the one-form `Σ_j g_ij dq_j`; for the
//! middle peak a rescaled version `α` is used, and the Frobenius defect
//! `α ∧ dα` decides integrability.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{PeakonError, Result};
use crate::invariants::{h0, hhat};
use crate::model::{check_positions, hamiltonian, metric_matrix, Covector, PeakonState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Collides,
    Escapes,
    PossibleCollision,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Collides => "Collides",
            Outcome::Escapes => "Escapes",
            Outcome::PossibleCollision => "PossibleCollision",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which sign condition triggered the verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Condition {
    #[serde(rename = "cond2D")]
    TwoPeak,
    #[serde(rename = "cond3D1")]
    LeftPair,
    #[serde(rename = "cond3D2")]
    RightPair,
    #[serde(rename = "cond3D1+cond3D2")]
    BothPairs,
}

impl Condition {
    pub fn as_str(self) -> &'static str {
        match self {
            Condition::TwoPeak => "cond2D",
            Condition::LeftPair => "cond3D1",
            Condition::RightPair => "cond3D2",
            Condition::BothPairs => "cond3D1+cond3D2",
        }
    }
}

/// Prediction together with the quantities it was derived from.
///
/// `h = p1 - p2` and `a_sq = 4H1 - H0²` are recorded for twopeakons only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition_fired: Option<Condition>,
    pub h: Option<f64>,
    pub a_sq: Option<f64>,
    pub hhat: f64,
    pub signs: Vec<i8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SectorLabel {
    I,
    II,
    III,
    IV,
}

fn require_arity(state: &PeakonState, n: usize) -> Result<()> {
    if state.n() != n {
        let expected = if n == 2 { "2" } else { "3" };
        return Err(PeakonError::WrongArity { expected, got: state.n() });
    }
    Ok(())
}

fn signs_nonzero(state: &PeakonState) -> Result<Vec<i8>> {
    state
        .p()
        .iter()
        .enumerate()
        .map(|(index, &p)| {
            if p == 0.0 {
                Err(PeakonError::OnBoundary { index })
            } else if p > 0.0 {
                Ok(1)
            } else {
                Ok(-1)
            }
        })
        .collect()
}

/// Leaf invariants `(e^{q1} - e^{q2}, e^{-q1} - e^{-q2})` of the two foliations of the half-plane.
pub fn foliation_invariants_2d(q: &[f64]) -> Result<(f64, f64)> {
    if q.len() != 2 {
        return Err(PeakonError::WrongArity { expected: "2", got: q.len() });
    }
    Ok((q[0].exp() - q[1].exp(), (-q[0]).exp() - (-q[1]).exp()))
}

pub fn classify_sector_2d(state: &PeakonState) -> Result<SectorLabel> {
    require_arity(state, 2)?;
    let s = signs_nonzero(state)?;
    Ok(match (s[0], s[1]) {
        (-1, 1) => SectorLabel::I,
        (1, 1) => SectorLabel::II,
        (-1, -1) => SectorLabel::III,
        _ => SectorLabel::IV,
    })
}

/// Upper bound on the collision time of a sector I twopeakon,
/// `t* = 2√(1-y) / (y √((1+y)(2H1 - H0²)))` with `y = e^{q2-q1}`.
pub fn collision_bound_2d(state: &PeakonState) -> Result<f64> {
    require_arity(state, 2)?;
    let (q, p) = (state.q(), state.p());
    if !(p[0] < 0.0 && 0.0 < p[1]) {
        return Err(PeakonError::NotColliding);
    }
    let y = (q[1] - q[0]).exp();
    let one_minus_y = -(q[1] - q[0]).exp_m1();
    // 2H1 - H0² = 2Ĥ, in product form.
    let d = 2.0 * hhat(state)?;
    if !(d > 1e-15) {
        return Err(PeakonError::Degenerate(d));
    }
    Ok(2.0 * one_minus_y.sqrt() / (y * ((1.0 + y) * d).sqrt()))
}

pub fn predict_2d(state: &PeakonState) -> Result<Verdict> {
    require_arity(state, 2)?;
    let signs = signs_nonzero(state)?;
    let (p, a0, a1) = (state.p(), h0(state), hamiltonian(state));
    let collides = p[0] < 0.0 && 0.0 < p[1];
    let bound_time = if collides { Some(collision_bound_2d(state)?) } else { None };
    Ok(Verdict {
        outcome: if collides { Outcome::Collides } else { Outcome::Escapes },
        bound_time,
        condition_fired: collides.then_some(Condition::TwoPeak),
        h: Some(p[0] - p[1]),
        a_sq: Some(4.0 * a1 - a0 * a0),
        hhat: hhat(state)?,
        signs,
    })
}

pub fn necessary_3d(state: &PeakonState) -> Result<Verdict> {
    require_arity(state, 3)?;
    let signs = signs_nonzero(state)?;
    let p = state.p();
    let left = p[0] < 0.0 && 0.0 < p[1];
    let right = p[1] < 0.0 && 0.0 < p[2];
    let condition_fired = match (left, right) {
        (true, true) => Some(Condition::BothPairs),
        (true, false) => Some(Condition::LeftPair),
        (false, true) => Some(Condition::RightPair),
        (false, false) => None,
    };
    Ok(Verdict {
        outcome: if condition_fired.is_some() { Outcome::PossibleCollision } else { Outcome::Escapes },
        bound_time: None,
        condition_fired,
        h: None,
        a_sq: None,
        hhat: hhat(state)?,
        signs,
    })
}

/// Dispatches on the number of peaks.
pub fn predict(state: &PeakonState) -> Result<Verdict> {
    match state.n() {
        2 => predict_2d(state),
        3 => necessary_3d(state),
        n => Err(PeakonError::WrongArity { expected: "2 or 3", got: n }),
    }
}

fn check_three_positions(q: &[f64]) -> Result<()> {
    if q.len() != 3 {
        return Err(PeakonError::WrongArity { expected: "3", got: q.len() });
    }
    check_positions(q, 0.0)
}

/// One-form annihilating `D_2`:
/// `α = (e^{-(q1-q2)} - e^{-(q1+q2-2q3)}) dq1 - (1 - e^{-2(q1-q3)}) dq2 + (e^{-(q2-q3)} - e^{-(2q1-q2-q3)}) dq3`.
pub fn alpha_form_3d(q: &[f64]) -> Result<Covector> {
    check_three_positions(q)?;
    Ok(Covector(alpha_raw(q).to_vec()))
}

fn alpha_raw(q: &[f64]) -> [f64; 3] {
    let (q1, q2, q3) = (q[0], q[1], q[2]);
    [
        (-(q1 - q2)).exp() - (-(q1 + q2 - 2.0 * q3)).exp(),
        (-2.0 * (q1 - q3)).exp_m1(),
        (-(q2 - q3)).exp() - (-(2.0 * q1 - q2 - q3)).exp(),
    ]
}

/// `J[i][j] = ∂α_i/∂q_j`, differentiated by hand.
pub fn alpha_jacobian_3d(q: &[f64]) -> Result<[[f64; 3]; 3]> {
    check_three_positions(q)?;
    let (q1, q2, q3) = (q[0], q[1], q[2]);
    let e12 = (-(q1 - q2)).exp();
    let e123 = (-(q1 + q2 - 2.0 * q3)).exp();
    let e13 = (-2.0 * (q1 - q3)).exp();
    let e23 = (-(q2 - q3)).exp();
    let e213 = (-(2.0 * q1 - q2 - q3)).exp();
    Ok([[-e12 + e123, e12 + e123, -2.0 * e123], [-2.0 * e13, 0.0, 2.0 * e13], [2.0 * e213, -e23 - e213, e23 - e213]])
}

/// Central-difference Jacobian of any one-form on the three-dimensional domain.
pub fn form_jacobian_fd(form: impl Fn(&[f64]) -> [f64; 3], q: &[f64], step: f64) -> [[f64; 3]; 3] {
    let mut jac = [[0.0; 3]; 3];
    for j in 0..3 {
        let mut qp = q.to_vec();
        let mut qm = q.to_vec();
        qp[j] += step;
        qm[j] -= step;
        let (fp, fm) = (form(&qp), form(&qm));
        for i in 0..3 {
            jac[i][j] = (fp[i] - fm[i]) / (2.0 * step);
        }
    }
    jac
}

/// Coefficient of `α ∧ dα` against `dq1 ∧ dq2 ∧ dq3`, i.e. `α · curl α`.
pub fn frobenius_defect(a: &[f64; 3], jac: &[[f64; 3]; 3]) -> f64 {
    let curl = [jac[2][1] - jac[1][2], jac[0][2] - jac[2][0], jac[1][0] - jac[0][1]];
    a[0] * curl[0] + a[1] * curl[1] + a[2] * curl[2]
}

/// Integrability defect of `D_2` from the analytic exterior derivative.
pub fn integrability_defect_3d(q: &[f64]) -> Result<f64> {
    let jac = alpha_jacobian_3d(q)?;
    Ok(frobenius_defect(&alpha_raw(q), &jac))
}

/// The same defect with `dα` from central differences.
pub fn integrability_defect_fd(q: &[f64], step: f64) -> Result<f64> {
    check_three_positions(q)?;
    let jac = form_jacobian_fd(alpha_raw, q, step);
    Ok(frobenius_defect(&alpha_raw(q), &jac))
}

/// Row `i` (zero-based) of the metric, the one-form whose kernel is `D_{i+1}`.
pub fn annihilator_3d(q: &[f64], i: usize) -> Result<[f64; 3]> {
    check_three_positions(q)?;
    if i > 2 {
        return Err(PeakonError::InvalidInput(format!("no distribution with index {}", i + 1)));
    }
    let g = metric_matrix(q)?;
    Ok([g.get(i, 0), g.get(i, 1), g.get(i, 2)])
}

/// Integrability defect of `D_{i+1}` through its metric-row annihilator, differentiated numerically.
pub fn annihilator_defect_fd(q: &[f64], i: usize, step: f64) -> Result<f64> {
    let a = annihilator_3d(q, i)?;
    let form = |x: &[f64]| annihilator_3d(x, i).unwrap_or([f64::NAN; 3]);
    Ok(frobenius_defect(&a, &form_jacobian_fd(form, q, step)))
}

/// One-based indices of the momenta with `|p_i| <= tol`, i.e. the distributions the velocity lies in.
pub fn distribution_flag(state: &PeakonState, tol: f64) -> Vec<usize> {
    state.p().iter().enumerate().filter(|(_, p)| p.abs() <= tol).map(|(i, _)| i + 1).collect()
}

/// Rate of `s = q1 - q2` along a threepeakon with `p1 = 0`: `(e^{-s} - 1)(p2 + p3 e^{q3-q2})`.
pub fn d1_gap_rate(state: &PeakonState) -> Result<f64> {
    require_arity(state, 3)?;
    let (q, p) = (state.q(), state.p());
    Ok((-(q[0] - q[1])).exp_m1() * (p[1] + p[2] * (q[2] - q[1]).exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TangentVector;
    use std::f64::consts::E;

    fn st(q: &[f64], p: &[f64]) -> PeakonState {
        PeakonState::new(q.to_vec(), p.to_vec()).unwrap()
    }

    #[test]
    fn foliation_invariants_example() {
        let (a, b) = foliation_invariants_2d(&[3f64.ln(), 2f64.ln()]).unwrap();
        assert!((a - 1.0).abs() < 1e-15);
        assert!((b + 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn sectors() {
        assert_eq!(classify_sector_2d(&st(&[1.0, 0.0], &[-1.0, 1.0])).unwrap(), SectorLabel::I);
        assert_eq!(classify_sector_2d(&st(&[1.0, 0.0], &[1.0, -1.0])).unwrap(), SectorLabel::IV);
        assert_eq!(classify_sector_2d(&st(&[1.0, 0.0], &[1.0, 1.0])).unwrap(), SectorLabel::II);
        assert_eq!(classify_sector_2d(&st(&[1.0, 0.0], &[-1.0, -1.0])).unwrap(), SectorLabel::III);
        assert!(matches!(classify_sector_2d(&st(&[1.0, 0.0], &[0.0, 1.0])), Err(PeakonError::OnBoundary { index: 0 })));
    }

    #[test]
    fn bound_reference_value_and_scaling() {
        let t = collision_bound_2d(&st(&[1.0, 0.0], &[-1.0, 1.0])).unwrap();
        assert!((t - 3.286893015935143).abs() < 1e-12);
        let t2 = collision_bound_2d(&st(&[1.0, 0.0], &[-2.0, 2.0])).unwrap();
        assert!((t2 - t / 2.0).abs() < 1e-12);
        // With 2H1 - H0² held at 1 the bound closes as y(0) -> 1.
        let z: f64 = 1e-9;
        let c = 1.0 / (2.0 * -(-z).exp_m1()).sqrt();
        let near = collision_bound_2d(&st(&[z, 0.0], &[-c, c])).unwrap();
        assert!(near < 1e-4, "{near}");
        // With fixed momenta it tends to 1/sqrt(-p1 p2) instead.
        let fixed = collision_bound_2d(&st(&[z, 0.0], &[-1.0, 1.0])).unwrap();
        assert!((fixed - 1.0).abs() < 1e-4, "{fixed}");
        assert!(matches!(collision_bound_2d(&st(&[1.0, 0.0], &[1.0, 1.0])), Err(PeakonError::NotColliding)));
    }

    #[test]
    fn predictions_2d() {
        let v = predict_2d(&st(&[1.0, 0.0], &[-1.0, 1.0])).unwrap();
        assert_eq!(v.outcome, Outcome::Collides);
        assert_eq!(v.condition_fired, Some(Condition::TwoPeak));
        let v = predict_2d(&st(&[1.0, 0.0], &[1.0, 2.0])).unwrap();
        assert_eq!(v.outcome, Outcome::Escapes);
        assert_eq!(v.h, Some(-1.0));
        assert!((v.a_sq.unwrap() - (2.0 * (5.0 + 4.0 / E) - 9.0)).abs() < 1e-14);
        assert!((v.a_sq.unwrap() - 3.9430355293715387).abs() < 1e-14);
        assert_eq!(predict_2d(&st(&[1.0, 0.0], &[1.0, -1.0])).unwrap().outcome, Outcome::Escapes);
    }

    #[test]
    fn predictions_3d() {
        let q = [1.0, 0.0, -1.0];
        assert_eq!(necessary_3d(&st(&q, &[1.0, 1.0, 1.0])).unwrap().outcome, Outcome::Escapes);
        let v = necessary_3d(&st(&q, &[-1.0, 1.0, 1.0])).unwrap();
        assert_eq!(v.outcome, Outcome::PossibleCollision);
        assert_eq!(v.condition_fired, Some(Condition::LeftPair));
        let v = necessary_3d(&st(&q, &[1.0, -1.0, 1.0])).unwrap();
        assert_eq!(v.condition_fired, Some(Condition::RightPair));
        let v = necessary_3d(&st(&q, &[-1.0, 1.0, -1.0])).unwrap();
        assert_eq!(v.condition_fired, Some(Condition::LeftPair));
        assert!(matches!(necessary_3d(&st(&q, &[1.0, 0.0, 1.0])), Err(PeakonError::OnBoundary { index: 1 })));
    }

    #[test]
    fn verdict_json_shape() {
        let v = predict_2d(&st(&[1.0, 0.0], &[-1.0, 1.0])).unwrap();
        let json = serde_json::to_value(&v).unwrap();
        assert_eq!(json["outcome"], "Collides");
        assert_eq!(json["condition_fired"], "cond2D");
        assert_eq!(json["signs"], serde_json::json!([-1, 1]));
        let v = necessary_3d(&st(&[1.0, 0.0, -1.0], &[1.0, 1.0, 1.0])).unwrap();
        let json = serde_json::to_value(&v).unwrap();
        assert!(json.get("bound_time").is_none());
        assert!(json["h"].is_null());
    }

    #[test]
    fn alpha_annihilates_spanning_fields() {
        let q = [0.7, -0.2, -1.5];
        let a = alpha_form_3d(&q).unwrap();
        let v: Vec<f64> = q.iter().map(|x| (-x).exp()).collect();
        let w: Vec<f64> = q.iter().map(|x| x.exp()).collect();
        assert!(a.apply(&v).abs() < 1e-12);
        assert!(a.apply(&w).abs() < 1e-12);
        assert!(a.0[1] < 0.0);
        // α is a multiple of the middle metric row.
        let row = annihilator_3d(&q, 1).unwrap();
        let ratio = a.0[0] / row[0];
        for k in 0..3 {
            assert!((a.0[k] - ratio * row[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn alpha_jacobian_matches_finite_differences() {
        let q = [1.3, 0.2, -0.4];
        let exact = alpha_jacobian_3d(&q).unwrap();
        let fd = form_jacobian_fd(alpha_raw, &q, 1e-5);
        for i in 0..3 {
            for j in 0..3 {
                assert!((exact[i][j] - fd[i][j]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn integrability() {
        let q = [1.0, 0.0, -1.0];
        let d = integrability_defect_3d(&q).unwrap();
        assert!(d.abs() > 1e-10);
        assert!((d - integrability_defect_fd(&q, 1e-5).unwrap()).abs() < 1e-6);
        assert!(annihilator_defect_fd(&q, 0, 1e-5).unwrap().abs() < 1e-10);
        assert!(annihilator_defect_fd(&q, 2, 1e-5).unwrap().abs() < 1e-10);
    }

    #[test]
    fn flags() {
        assert_eq!(distribution_flag(&st(&[1.0, 0.0, -1.0], &[0.0, 1.0, 1.0]), 1e-12), vec![1]);
        assert!(distribution_flag(&st(&[1.0, 0.0], &[1.0, 1.0]), 1e-12).is_empty());
    }

    #[test]
    fn d1_plane_spanning_fields_are_horizontal() {
        // Vectors in D_1 have vanishing first momentum.
        let q = [0.5, 0.0, -0.8];
        let row = annihilator_3d(&q, 0).unwrap();
        let x = TangentVector(vec![(-q[0]).exp(), (-q[1]).exp(), 0.0]);
        assert!((row[0] * x.0[0] + row[1] * x.0[1]).abs() < 1e-12);
    }
}
