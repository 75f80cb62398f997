//! Small dense symmetric matrices.
//!
//! Dimensions here never exceed a handful, so storage is a flat row-major
//! `Vec<f64>`. Decompositions that are not worth hand-rolling (generic
//! inverse, symmetric eigen) go through `nalgebra`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{PeakonError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl SmallMatrix {
    /// Builds a symmetric matrix from the upper triangle produced by `f(i, j)`, `i <= j`.
    pub fn from_symmetric_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                entries[i * n + j] = v;
                entries[j * n + i] = v;
            }
        }
        Self { n, entries }
    }

    /// Row-major input; fails unless exactly symmetric.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(PeakonError::InvalidInput("matrix rows must be square".into()));
        }
        for i in 0..n {
            for j in 0..i {
                if rows[i][j] != rows[j][i] {
                    return Err(PeakonError::InvalidInput(format!("matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { n, entries: rows.iter().flatten().copied().collect() })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_symmetric_fn(n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn diagonal(d: &[f64]) -> Self {
        Self::from_symmetric_fn(d.len(), |i, j| if i == j { d[i] } else { 0.0 })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n, "dimension mismatch");
        (0..self.n).map(|i| dot(self.row(i), v)).collect()
    }

    /// `<A v, v>`
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        dot(&self.mul_vec(v), v)
    }

    /// Plain (not necessarily symmetric) product, returned as rows.
    pub fn matmul_rows(&self, other: &SmallMatrix) -> Vec<Vec<f64>> {
        let n = self.n;
        (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| self.get(i, k) * other.get(k, j)).sum()).collect()).collect()
    }

    /// `max |(self * other - I)_ij|`
    pub fn inverse_residual(&self, other: &SmallMatrix) -> f64 {
        let prod = self.matmul_rows(other);
        let mut worst = 0.0_f64;
        for (i, row) in prod.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((v - target).abs());
            }
        }
        worst
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.entries)
    }

    /// Symmetrizes `m` by averaging with its transpose.
    pub fn from_nalgebra(m: &DMatrix<f64>) -> Self {
        Self::from_symmetric_fn(m.nrows(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
    }

    /// Generic inverse via LU. Used as the fallback for dimensions without a closed form.
    pub fn inverse_lu(&self) -> Result<SmallMatrix> {
        let inv = self.to_nalgebra().try_inverse().ok_or(PeakonError::SingularMatrix { residual: f64::INFINITY })?;
        Ok(Self::from_nalgebra(&inv))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn cross(a: &[f64], b: &[f64]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
