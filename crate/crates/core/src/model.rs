//! Phase-space model: peak positions and momenta, the Gram matrix `E(q)`, the
//! peakon metric `g = E^{-1}`, the Hamiltonian and its equations of motion.
//!
//! Positions are indexed right to left, so a valid configuration is strictly
//! decreasing: `q[0] > q[1] > ... > q[n-1]`.

use serde::{Deserialize, Serialize};

use crate::error::{PeakonError, Result};
use crate::matrix::{dot, SmallMatrix};

/// Largest peak count supported by [`PeakonState`].
pub const MAX_PEAKS: usize = 3;

/// Residual tolerance of the metric inverse, relative to `max(1, max|g_ij|)`.
pub const METRIC_RESIDUAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawState")]
pub struct PeakonState {
    q: Vec<f64>,
    p: Vec<f64>,
}

#[derive(Deserialize)]
struct RawState {
    q: Vec<f64>,
    p: Vec<f64>,
}

impl TryFrom<RawState> for PeakonState {
    type Error = PeakonError;

    fn try_from(raw: RawState) -> Result<Self> {
        PeakonState::new(raw.q, raw.p)
    }
}

impl PeakonState {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        Self::with_min_gap(q, p, 0.0)
    }

    /// Like [`PeakonState::new`] but additionally requires every adjacent gap to exceed `min_gap`.
    pub fn with_min_gap(q: Vec<f64>, p: Vec<f64>, min_gap: f64) -> Result<Self> {
        if q.is_empty() || q.len() > MAX_PEAKS {
            return Err(PeakonError::WrongArity { expected: "1..=3", got: q.len() });
        }
        if p.len() != q.len() {
            return Err(PeakonError::InvalidInput(format!("{} positions but {} momenta", q.len(), p.len())));
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(PeakonError::OutOfDomain("non-finite momentum".into()));
        }
        check_positions(&q, min_gap)?;
        Ok(Self { q, p })
    }

    /// No validation; the integrator uses this for intermediate states it has already checked.
    pub(crate) fn from_parts_unchecked(q: Vec<f64>, p: Vec<f64>) -> Self {
        Self { q, p }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.q.len()
    }

    #[inline]
    pub fn q(&self) -> &[f64] {
        &self.q
    }

    #[inline]
    pub fn p(&self) -> &[f64] {
        &self.p
    }

    /// Smallest adjacent gap `q[i] - q[i+1]`; infinite for a single peak.
    pub fn min_gap(&self) -> f64 {
        min_adjacent_gap(&self.q)
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.q, self.p)
    }
}

/// A tangent vector at a configuration (a velocity `q̇`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentVector(pub Vec<f64>);

/// A cotangent vector at a configuration (momentum coefficients of `p_1 dq_1 + ... + p_n dq_n`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Covector(pub Vec<f64>);

impl TangentVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl Covector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Pairing with a tangent vector.
    pub fn apply(&self, v: &[f64]) -> f64 {
        dot(&self.0, v)
    }
}

pub fn min_adjacent_gap(q: &[f64]) -> f64 {
    q.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min)
}

/// Checks membership in the ordered domain with every gap strictly above `min_gap`.
pub fn check_positions(q: &[f64], min_gap: f64) -> Result<()> {
    if q.is_empty() {
        return Err(PeakonError::WrongArity { expected: ">= 1", got: 0 });
    }
    if let Some(x) = q.iter().find(|x| !x.is_finite()) {
        return Err(PeakonError::OutOfDomain(format!("non-finite position {x}")));
    }
    for (i, w) in q.windows(2).enumerate() {
        let gap = w[0] - w[1];
        if !(gap > 0.0 && gap > min_gap) {
            return Err(PeakonError::OutOfDomain(format!(
                "q{} - q{} = {gap} (positions must be strictly decreasing)",
                i + 1,
                i + 2
            )));
        }
    }
    Ok(())
}

#[inline]
fn kernel(a: f64, b: f64) -> f64 {
    (-(a - b).abs()).exp()
}

/// Gram matrix `E_ij = exp(-|q_i - q_j|)`.
pub fn e_matrix(q: &[f64]) -> Result<SmallMatrix> {
    check_positions(q, 0.0)?;
    Ok(e_matrix_unchecked(q))
}

pub(crate) fn e_matrix_unchecked(q: &[f64]) -> SmallMatrix {
    SmallMatrix::from_symmetric_fn(q.len(), |i, j| if i == j { 1.0 } else { kernel(q[i], q[j]) })
}

/// The peakon metric `g = E^{-1}`, closed form for `n <= 3`, LU otherwise.
///
/// The result is checked against `E`: the max-norm of `g E - I` must stay below
/// [`METRIC_RESIDUAL_TOL`] times `max(1, max|g_ij|)`. Closer to the singular set
/// than that, double precision cannot represent the inverse and
/// [`PeakonError::SingularMatrix`] is returned.
pub fn metric_matrix(q: &[f64]) -> Result<SmallMatrix> {
    check_positions(q, 0.0)?;
    let g = match q.len() {
        1 => SmallMatrix::identity(1),
        2 => metric_2(q[0] - q[1]),
        3 => metric_3(q[0] - q[1], q[1] - q[2]),
        _ => e_matrix_unchecked(q).inverse_lu()?,
    };
    let e = e_matrix_unchecked(q);
    let residual = g.inverse_residual(&e);
    let scale = (0..g.dim()).flat_map(|i| g.row(i).to_vec()).fold(1.0_f64, |m, v| m.max(v.abs()));
    if !(residual <= METRIC_RESIDUAL_TOL * scale) {
        return Err(PeakonError::SingularMatrix { residual });
    }
    Ok(g)
}

/// `1 - exp(-2x)` without cancellation for small `x`.
#[inline]
fn one_minus_exp_neg2(x: f64) -> f64 {
    -(-2.0 * x).exp_m1()
}

fn metric_2(z: f64) -> SmallMatrix {
    let d = one_minus_exp_neg2(z);
    let w = (-z).exp();
    SmallMatrix::from_symmetric_fn(2, |i, j| if i == j { 1.0 / d } else { -w / d })
}

fn metric_3(a: f64, b: f64) -> SmallMatrix {
    let da = one_minus_exp_neg2(a);
    let db = one_minus_exp_neg2(b);
    let dab = one_minus_exp_neg2(a + b);
    let (ea, eb) = ((-a).exp(), (-b).exp());
    SmallMatrix::from_symmetric_fn(3, |i, j| match (i, j) {
        (0, 0) => 1.0 / da,
        (0, 1) => -ea / da,
        (0, 2) => 0.0,
        (1, 1) => dab / (da * db),
        (1, 2) => -eb / db,
        (2, 2) => 1.0 / db,
        _ => unreachable!(),
    })
}

/// `H = ½ Σ p_i p_j exp(-|q_i - q_j|)`.
pub fn hamiltonian(state: &PeakonState) -> f64 {
    hamiltonian_raw(state.q(), state.p())
}

pub(crate) fn hamiltonian_raw(q: &[f64], p: &[f64]) -> f64 {
    let n = q.len();
    let mut h = 0.0;
    for i in 0..n {
        h += 0.5 * p[i] * p[i];
        for j in i + 1..n {
            h += p[i] * p[j] * kernel(q[i], q[j]);
        }
    }
    h
}

/// Right-hand side of Hamilton's equations, `(q̇, ṗ)`.
///
/// `q̇_i = Σ_j p_j e^{-|q_i-q_j|}`, `ṗ_i = p_i Σ_{j≠i} p_j sign(q_i-q_j) e^{-|q_i-q_j|}`.
pub fn eom_rhs(state: &PeakonState) -> (Vec<f64>, Vec<f64>) {
    let n = state.n();
    let mut dq = vec![0.0; n];
    let mut dp = vec![0.0; n];
    rhs_into(state.q(), state.p(), &mut dq, &mut dp);
    (dq, dp)
}

/// Allocation-free form of [`eom_rhs`]. No domain check: for crossed positions the
/// sign factor simply follows the actual ordering.
#[inline]
pub(crate) fn rhs_into(q: &[f64], p: &[f64], dq: &mut [f64], dp: &mut [f64]) {
    let n = q.len();
    for i in 0..n {
        let mut vel = p[i];
        let mut force = 0.0;
        for j in 0..n {
            if j == i {
                continue;
            }
            let d = q[i] - q[j];
            let k = (-d.abs()).exp();
            vel += p[j] * k;
            force += p[j] * d.signum() * k;
        }
        dq[i] = vel;
        dp[i] = p[i] * force;
    }
}

/// The multipeakon profile `u(x) = Σ p_i exp(-|x - q_i|)` of a frozen state.
pub fn peakon_field(state: &PeakonState, x: f64) -> f64 {
    state.q().iter().zip(state.p()).map(|(&qi, &pi)| pi * kernel(x, qi)).sum()
}

/// `p = g(q) v`
pub fn momentum_from_velocity(q: &[f64], v: &TangentVector) -> Result<Covector> {
    if v.0.len() != q.len() {
        return Err(PeakonError::InvalidInput("velocity length does not match positions".into()));
    }
    Ok(Covector(metric_matrix(q)?.mul_vec(&v.0)))
}

/// `v = E(q) p`
pub fn velocity_from_momentum(q: &[f64], p: &Covector) -> Result<TangentVector> {
    if p.0.len() != q.len() {
        return Err(PeakonError::InvalidInput("momentum length does not match positions".into()));
    }
    Ok(TangentVector(e_matrix(q)?.mul_vec(&p.0)))
}
