//! Finite-difference curvature oracle.
//!
//! Curvature components of the threepeakon metric can be as small as `1e-8`
//! while the metric entries are of order one, so nested central differences in
//! plain `f64` lose every significant digit. The oracle therefore runs in
//! double-double arithmetic (about 32 significant digits): the metric is
//! inverted, differentiated and assembled into Christoffel symbols and the
//! Riemann tensor without ever touching the closed forms.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{PeakonError, Result};
use crate::model::{check_positions, min_adjacent_gap};

use super::RiemannComponents3D;

/// Inner step: metric derivatives inside each Christoffel evaluation.
pub const RIEMANN_INNER_STEP: f64 = 1e-9;
/// Outer step: derivatives of the Christoffel symbols.
pub const RIEMANN_OUTER_STEP: f64 = 1e-6;

/// An unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub(crate) struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

const LN2: Dd = Dd { hi: std::f64::consts::LN_2, lo: 2.319_046_813_846_299_6e-17 };

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    fn scale_pow2(self, k: i32) -> Self {
        let s = 2f64.powi(k);
        Self { hi: self.hi * s, lo: self.lo * s }
    }

    fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p, e + self.lo * b);
        Self { hi, lo }
    }

    pub fn exp(self) -> Self {
        if self.hi < -745.0 {
            return Self::ZERO;
        }
        if self.hi > 709.0 {
            return Self::from_f64(f64::INFINITY);
        }
        let k = (self.hi / LN2.hi).round();
        let r = (self - LN2.mul_f64(k)).scale_pow2(-9);
        // expm1(r) by Taylor series, then expm1(2x) = 2 expm1(x) + expm1(x)^2 nine times.
        let mut s = r;
        let mut term = r;
        for i in 2..=24 {
            term = term * r / Dd::from_f64(i as f64);
            s = s + term;
            if term.hi.abs() < 1e-36 {
                break;
            }
        }
        for _ in 0..9 {
            s = s.scale_pow2(1) + s * s;
        }
        (s + Dd::ONE).scale_pow2(k as i32)
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Self {
        Self::from_f64(x)
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        let (hi, lo) = quick_two_sum(p, e + (self.hi * b.lo + self.lo * b.hi));
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from_f64(q3)
    }
}

fn e_matrix_dd(q: &[Dd]) -> Vec<Dd> {
    let n = q.len();
    let mut e = vec![Dd::ZERO; n * n];
    for i in 0..n {
        for j in 0..n {
            e[i * n + j] = if i == j { Dd::ONE } else { (-(q[i] - q[j]).abs()).exp() };
        }
    }
    e
}

/// Gauss–Jordan inverse; `E` is positive definite so no pivoting is needed.
fn invert_dd(m: &[Dd], n: usize) -> Vec<Dd> {
    let mut a = m.to_vec();
    let mut inv = vec![Dd::ZERO; n * n];
    for i in 0..n {
        inv[i * n + i] = Dd::ONE;
    }
    for c in 0..n {
        let piv = a[c * n + c];
        for j in 0..n {
            a[c * n + j] = a[c * n + j] / piv;
            inv[c * n + j] = inv[c * n + j] / piv;
        }
        for r in 0..n {
            if r == c {
                continue;
            }
            let f = a[r * n + c];
            for j in 0..n {
                a[r * n + j] = a[r * n + j] - f * a[c * n + j];
                inv[r * n + j] = inv[r * n + j] - f * inv[c * n + j];
            }
        }
    }
    inv
}

fn shifted(q: &[Dd], r: usize, h: f64) -> Vec<Dd> {
    let mut out = q.to_vec();
    out[r] = out[r] + Dd::from_f64(h);
    out
}

/// `Γ^k_ij` stored at `[k][i][j]`, metric derivatives by central differences of step `h`.
fn christoffel_dd(q: &[Dd], h: f64) -> Vec<Dd> {
    let n = q.len();
    let two_h = Dd::from_f64(2.0 * h);
    // dg[r][i][j] = ∂_r g_ij
    let mut dg = vec![Dd::ZERO; n * n * n];
    for r in 0..n {
        let gp = invert_dd(&e_matrix_dd(&shifted(q, r, h)), n);
        let gm = invert_dd(&e_matrix_dd(&shifted(q, r, -h)), n);
        for ij in 0..n * n {
            dg[r * n * n + ij] = (gp[ij] - gm[ij]) / two_h;
        }
    }
    let ginv = e_matrix_dd(q);
    let half = Dd::from_f64(0.5);
    let mut gamma = vec![Dd::ZERO; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in i..n {
                let mut acc = Dd::ZERO;
                for r in 0..n {
                    let first = dg[j * n * n + i * n + r] + dg[i * n * n + j * n + r] - dg[r * n * n + i * n + j];
                    acc = acc + ginv[k * n + r] * first;
                }
                let v = half * acc;
                gamma[k * n * n + i * n + j] = v;
                gamma[k * n * n + j * n + i] = v;
            }
        }
    }
    gamma
}

/// Fully covariant `R_ijkl` at `[i][j][k][l]` with
/// `R^m_jkl = ∂_k Γ^m_lj − ∂_l Γ^m_kj + Γ^m_kr Γ^r_lj − Γ^m_lr Γ^r_kj` and `R_ijkl = g_im R^m_jkl`.
fn riemann_dd(q: &[Dd], inner: f64, outer: f64) -> Vec<Dd> {
    let n = q.len();
    let n3 = n * n * n;
    let two_h = Dd::from_f64(2.0 * outer);
    let gamma = christoffel_dd(q, inner);
    // dgamma[a][m][i][j] = ∂_a Γ^m_ij
    let mut dgamma = vec![Dd::ZERO; n * n3];
    for a in 0..n {
        let gp = christoffel_dd(&shifted(q, a, outer), inner);
        let gm = christoffel_dd(&shifted(q, a, -outer), inner);
        for idx in 0..n3 {
            dgamma[a * n3 + idx] = (gp[idx] - gm[idx]) / two_h;
        }
    }
    let g = invert_dd(&e_matrix_dd(q), n);
    let gam = |m: usize, i: usize, j: usize| gamma[m * n * n + i * n + j];
    let dgam = |a: usize, m: usize, i: usize, j: usize| dgamma[a * n3 + m * n * n + i * n + j];
    let mut mixed = vec![Dd::ZERO; n * n3];
    for m in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut v = dgam(k, m, l, j) - dgam(l, m, k, j);
                    for r in 0..n {
                        v = v + gam(m, k, r) * gam(r, l, j) - gam(m, l, r) * gam(r, k, j);
                    }
                    mixed[m * n3 + j * n * n + k * n + l] = v;
                }
            }
        }
    }
    let mut lowered = vec![Dd::ZERO; n * n3];
    for i in 0..n {
        for jkl in 0..n3 {
            let mut v = Dd::ZERO;
            for m in 0..n {
                v = v + g[i * n + m] * mixed[m * n3 + jkl];
            }
            lowered[i * n3 + jkl] = v;
        }
    }
    lowered
}

fn check_steps(q: &[f64], steps: &[f64]) -> Result<()> {
    check_positions(q, 0.0)?;
    let total: f64 = steps.iter().sum();
    if steps.iter().any(|s| !(*s > 0.0)) {
        return Err(PeakonError::InvalidInput("finite-difference steps must be positive".into()));
    }
    let gap = min_adjacent_gap(q);
    if q.len() > 1 && gap < 10.0 * total {
        return Err(PeakonError::StepTooLarge { step: total, min_gap: gap });
    }
    Ok(())
}

fn to_dd(q: &[f64]) -> Vec<Dd> {
    q.iter().map(|&x| Dd::from_f64(x)).collect()
}

/// Christoffel symbols `[k][i][j]` from central differences of the metric.
pub(crate) fn christoffel_values(q: &[f64], step: f64) -> Result<Vec<f64>> {
    check_steps(q, &[step])?;
    Ok(christoffel_dd(&to_dd(q), step).into_iter().map(Dd::to_f64).collect())
}

/// All `n^4` covariant Riemann components `[i][j][k][l]`, by nested central differences.
pub fn riemann_tensor_fd(q: &[f64], inner: f64, outer: f64) -> Result<Vec<f64>> {
    check_steps(q, &[inner, outer])?;
    Ok(riemann_dd(&to_dd(q), inner, outer).into_iter().map(Dd::to_f64).collect())
}

/// Finite-difference oracle for the six independent threepeakon components.
pub fn riemann_fd(q: &[f64]) -> Result<RiemannComponents3D> {
    riemann_fd_with_steps(q, RIEMANN_INNER_STEP, RIEMANN_OUTER_STEP)
}

pub fn riemann_fd_with_steps(q: &[f64], inner: f64, outer: f64) -> Result<RiemannComponents3D> {
    if q.len() != 3 {
        return Err(PeakonError::WrongArity { expected: "3", got: q.len() });
    }
    let r = riemann_tensor_fd(q, inner, outer)?;
    let at = |i: usize, j: usize, k: usize, l: usize| r[((i * 3 + j) * 3 + k) * 3 + l];
    Ok(RiemannComponents3D {
        r1212: at(0, 1, 0, 1),
        r2323: at(1, 2, 1, 2),
        r1313: at(0, 2, 0, 2),
        r1213: at(0, 1, 0, 2),
        r1223: at(0, 1, 1, 2),
        r1323: at(0, 2, 1, 2),
    })
}

/// Gauss curvature of the twopeakon metric as `R_1212 / det g`, entirely from finite differences.
pub fn gauss_curvature_fd(q: &[f64]) -> Result<f64> {
    if q.len() != 2 {
        return Err(PeakonError::WrongArity { expected: "2", got: q.len() });
    }
    check_steps(q, &[RIEMANN_INNER_STEP, RIEMANN_OUTER_STEP])?;
    let qd = to_dd(q);
    let r = riemann_dd(&qd, RIEMANN_INNER_STEP, RIEMANN_OUTER_STEP);
    let g = invert_dd(&e_matrix_dd(&qd), 2);
    let det = g[0] * g[3] - g[1] * g[2];
    let r1212 = r[0b0101];
    Ok((r1212 / det).to_f64())
}
