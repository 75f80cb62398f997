//! Christoffel symbols of the peakon metric.

use serde::{Deserialize, Serialize};

use crate::error::{PeakonError, Result};
use crate::model::check_positions;

use super::oracle::christoffel_values;

pub const CHRISTOFFEL_STEP: f64 = 1e-5;

/// `Γ^k_ij`, stored as `[k][i][j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Christoffel {
    n: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Zero-based `Γ^k_ij`.
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.n + i) * self.n + j]
    }

    pub fn max_abs_diff(&self, other: &Christoffel) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Central-difference Christoffel symbols of `metric_matrix` with the default step.
pub fn christoffel_fd(q: &[f64]) -> Result<Christoffel> {
    christoffel_fd_with_step(q, CHRISTOFFEL_STEP)
}

/// Fails with [`PeakonError::StepTooLarge`] unless every gap is at least `10 * step`.
pub fn christoffel_fd_with_step(q: &[f64], step: f64) -> Result<Christoffel> {
    let data = christoffel_values(q, step)?;
    Ok(Christoffel { n: q.len(), data })
}

/// Exact twopeakon symbols in `q` coordinates.
///
/// In `s1 = (q1+q2)/2`, `s2 = (q1-q2)/2` with `w = e^{-2 s2}` the nonzero symbols are
/// `Γ^1_12 = w/(1+w)`, `Γ^2_11 = -w(1-w)/(1+w)^2` and `Γ^2_22 = -w/(1-w)`; the change of
/// coordinates is linear, so the symbols transform as a tensor.
pub fn christoffel_2d(q: &[f64]) -> Result<Christoffel> {
    if q.len() != 2 {
        return Err(PeakonError::WrongArity { expected: "2", got: q.len() });
    }
    check_positions(q, 0.0)?;
    let w = (-(q[0] - q[1])).exp();
    let one_minus_w = -(-(q[0] - q[1])).exp_m1();
    let mut s = [[[0.0; 2]; 2]; 2];
    s[0][0][1] = w / (1.0 + w);
    s[0][1][0] = s[0][0][1];
    s[1][0][0] = -w * one_minus_w / ((1.0 + w) * (1.0 + w));
    s[1][1][1] = -w / one_minus_w;

    let dq_ds = [[1.0, 1.0], [1.0, -1.0]];
    let ds_dq = [[0.5, 0.5], [0.5, -0.5]];
    let mut data = vec![0.0; 8];
    for k in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                let mut v = 0.0;
                for c in 0..2 {
                    for a in 0..2 {
                        for b in 0..2 {
                            v += dq_ds[k][c] * s[c][a][b] * ds_dq[a][i] * ds_dq[b][j];
                        }
                    }
                }
                data[(k * 2 + i) * 2 + j] = v;
            }
        }
    }
    Ok(Christoffel { n: 2, data })
}
