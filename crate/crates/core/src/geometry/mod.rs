//! Curvature of the peakon metric.
//!
//! Closed forms are written in the gap variables `u = e^{q2-q1}` and
//! `v = e^{q3-q2}`, both in `(0, 1)` on the ordered domain, so no term grows
//! with the absolute position of the peaks. With `Δ3 = (1+u)(1+v)` the
//! covariant components are `R_ijkl = Q_ijkl / ((1-u²)(1-v²))`, and the
//! denominator is exactly `det E`. The sectional curvature of the plane with
//! normal bivector `ζ = a × b` is then the Rayleigh quotient `<Qζ,ζ>/<Eζ,ζ>`.

mod christoffel;
mod oracle;
mod rayleigh;

pub use christoffel::{christoffel_2d, christoffel_fd, christoffel_fd_with_step, Christoffel, CHRISTOFFEL_STEP};
pub use oracle::{
    gauss_curvature_fd, riemann_fd, riemann_fd_with_steps, riemann_tensor_fd, RIEMANN_INNER_STEP, RIEMANN_OUTER_STEP,
};
pub use rayleigh::rayleigh_max;

use serde::{Deserialize, Serialize};

use crate::error::{PeakonError, Result};
use crate::matrix::{cross, dot, norm, SmallMatrix};
use crate::model::{check_positions, e_matrix_unchecked, metric_matrix, TangentVector};

/// Positions beyond this magnitude are refused by the threepeakon closed forms.
pub const OVERFLOW_GUARD: f64 = 300.0;
/// Tolerance of the eigenvector residual `‖E⁻¹Qv − λv‖`.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-8;

/// The six independent covariant components of the threepeakon curvature tensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiemannComponents3D {
    pub r1212: f64,
    pub r2323: f64,
    pub r1313: f64,
    pub r1213: f64,
    pub r1223: f64,
    pub r1323: f64,
}

impl RiemannComponents3D {
    /// Zero-based `R_ijkl`, expanded through `R_ijkl = -R_jikl = -R_ijlk = R_klij`.
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let (Some((a, sa)), Some((b, sb))) = (pair_index(i, j), pair_index(k, l)) else {
            return 0.0;
        };
        sa * sb * self.pair_matrix()[a][b]
    }

    /// Components on the bivector basis `(12, 13, 23)`.
    pub fn pair_matrix(&self) -> [[f64; 3]; 3] {
        [
            [self.r1212, self.r1213, self.r1223],
            [self.r1213, self.r1313, self.r1323],
            [self.r1223, self.r1323, self.r2323],
        ]
    }

    pub fn as_array(&self) -> [f64; 6] {
        [self.r1212, self.r2323, self.r1313, self.r1213, self.r1223, self.r1323]
    }

    pub const NAMES: [&'static str; 6] = ["R1212", "R2323", "R1313", "R1213", "R1223", "R1323"];

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            r1212: self.r1212 * s,
            r2323: self.r2323 * s,
            r1313: self.r1313 * s,
            r1213: self.r1213 * s,
            r1223: self.r1223 * s,
            r1323: self.r1323 * s,
        }
    }
}

fn pair_index(i: usize, j: usize) -> Option<(usize, f64)> {
    match (i, j) {
        (0, 1) => Some((0, 1.0)),
        (1, 0) => Some((0, -1.0)),
        (0, 2) => Some((1, 1.0)),
        (2, 0) => Some((1, -1.0)),
        (1, 2) => Some((2, 1.0)),
        (2, 1) => Some((2, -1.0)),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureEigenvalues {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
}

impl CurvatureEigenvalues {
    pub fn max(&self) -> f64 {
        self.lambda1.max(self.lambda2).max(self.lambda3)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.lambda1, self.lambda2, self.lambda3]
    }
}

/// `κ(z) = (w - 2w²) / (1 + w)²` with `w = e^{-z}`; shared by the twopeakon and the
/// edge eigenvalues of the threepeakon.
#[inline]
fn kappa_of_gap(z: f64) -> f64 {
    let w = (-z).exp();
    w * (1.0 - 2.0 * w) / ((1.0 + w) * (1.0 + w))
}

/// Gauss curvature of the twopeakon metric. Negative for `q1 - q2 < ln 2`,
/// zero at `ln 2`, positive beyond; tends to `-1/4` at the singular set.
pub fn gauss_curvature_2d(q: &[f64]) -> Result<f64> {
    if q.len() != 2 {
        return Err(PeakonError::WrongArity { expected: "2", got: q.len() });
    }
    check_positions(q, 0.0)?;
    Ok(kappa_of_gap(q[0] - q[1]))
}

fn check_three(q: &[f64]) -> Result<()> {
    if q.len() != 3 {
        return Err(PeakonError::WrongArity { expected: "3", got: q.len() });
    }
    check_positions(q, 0.0)?;
    if let Some(x) = q.iter().find(|x| x.abs() > OVERFLOW_GUARD) {
        return Err(PeakonError::Overflow(*x));
    }
    Ok(())
}

struct GapVars {
    u: f64,
    v: f64,
    delta3: f64,
}

impl GapVars {
    fn new(q: &[f64]) -> Self {
        let u = (q[1] - q[0]).exp();
        let v = (q[2] - q[1]).exp();
        Self { u, v, delta3: (1.0 + u) * (1.0 + v) }
    }

    /// The six numerators `Q_ijkl` in the order of [`RiemannComponents3D`].
    fn q_components(&self) -> RiemannComponents3D {
        let (u, v, d) = (self.u, self.v, self.delta3);
        let (u2, v2) = (u * u, v * v);
        RiemannComponents3D {
            r1212: (3.0 * u2 * v2 * v + 2.0 * u2 * v2 - 2.0 * u2 * v - 2.0 * u2 - u * v2 + u * v + u) / ((1.0 + u) * d),
            r2323: (3.0 * u2 * u * v2 + 2.0 * u2 * v2 - 2.0 * u * v2 - 2.0 * v2 - u2 * v + u * v + v) / ((1.0 + v) * d),
            r1313: u * v / d,
            r1213: -u * v2 / d,
            r1223: u2 * v2 / d,
            r1323: -u2 * v / d,
        }
    }
}

/// `det E = (1 - u²)(1 - v²)` for the threepeakon, free of cancellation.
fn det_e(q: &[f64]) -> f64 {
    (2.0 * (q[1] - q[0])).exp_m1() * (2.0 * (q[2] - q[1])).exp_m1()
}

/// Closed-form covariant curvature components of the threepeakon metric.
pub fn riemann_3d(q: &[f64]) -> Result<RiemannComponents3D> {
    check_three(q)?;
    let qc = GapVars::new(q).q_components();
    Ok(qc.scaled(1.0 / det_e(q)))
}

/// The symmetric matrix `Q` acting on `ζ = a × b`, so that `Σ R_ijkl a_i b_j a_k b_l = <Qζ,ζ>/det E`.
pub fn q_matrix(q: &[f64]) -> Result<SmallMatrix> {
    check_three(q)?;
    let c = GapVars::new(q).q_components();
    let rows = [[c.r2323, -c.r1323, c.r1223], [-c.r1323, c.r1313, -c.r1213], [c.r1223, -c.r1213, c.r1212]];
    Ok(SmallMatrix::from_symmetric_fn(3, |i, j| rows[i][j]))
}

/// Normal bivector of the plane, after Euclidean orthonormalization of the spanning pair.
fn plane_normal(a: &[f64], b: &[f64]) -> Result<[f64; 3]> {
    let na = norm(a);
    if !(na > 0.0) || !na.is_finite() || !norm(b).is_finite() {
        return Err(PeakonError::DegeneratePlane);
    }
    let e1: Vec<f64> = a.iter().map(|x| x / na).collect();
    let proj = dot(b, &e1);
    let rest: Vec<f64> = b.iter().zip(&e1).map(|(x, y)| x - proj * y).collect();
    let nr = norm(&rest);
    if !(nr > 1e-12 * norm(b).max(f64::MIN_POSITIVE)) {
        return Err(PeakonError::DegeneratePlane);
    }
    let e2: Vec<f64> = rest.iter().map(|x| x / nr).collect();
    let zeta = cross(&e1, &e2);
    if norm(&zeta) < 1e-12 {
        return Err(PeakonError::DegeneratePlane);
    }
    Ok(zeta)
}

fn check_plane(q: &[f64], a: &TangentVector, b: &TangentVector) -> Result<()> {
    if a.0.len() != q.len() || b.0.len() != q.len() {
        return Err(PeakonError::InvalidInput("plane vectors must have one entry per peak".into()));
    }
    Ok(())
}

/// Sectional curvature of `span{a, b}` through the bivector reduction `<Qζ,ζ>/<Eζ,ζ>`.
pub fn sectional_curvature_3d(q: &[f64], a: &TangentVector, b: &TangentVector) -> Result<f64> {
    check_three(q)?;
    check_plane(q, a, b)?;
    let zeta = plane_normal(&a.0, &b.0)?;
    let qm = q_matrix(q)?;
    let e = e_matrix_unchecked(q);
    Ok(qm.quadratic_form(&zeta) / e.quadratic_form(&zeta))
}

/// Sectional curvature by the full contraction `Σ R_ijkl a_i b_j a_k b_l` over the Gram determinant of `g`.
pub fn sectional_curvature_direct(q: &[f64], a: &TangentVector, b: &TangentVector) -> Result<f64> {
    check_three(q)?;
    check_plane(q, a, b)?;
    plane_normal(&a.0, &b.0)?;
    let r = riemann_3d(q)?;
    let g = metric_matrix(q)?;
    let (a, b) = (&a.0, &b.0);
    let mut num = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    num += r.get(i, j, k, l) * a[i] * b[j] * a[k] * b[l];
                }
            }
        }
    }
    let (gaa, gbb, gab) = (g.quadratic_form(a), g.quadratic_form(b), dot(&g.mul_vec(a), b));
    Ok(num / (gaa * gbb - gab * gab))
}

/// Closed-form eigenvalues of `E⁻¹Q`:
/// `λ1 = κ(q2-q3)`, `λ2 = uv/((1+u)(1+v))`, `λ3 = κ(q1-q2)`.
///
/// Each value is confirmed by constructing a null vector of `Q - λE` and checking
/// `‖E⁻¹Qv − λv‖ < 1e-8 · max(1, max|g|)`.
pub fn curvature_eigenvalues(q: &[f64]) -> Result<CurvatureEigenvalues> {
    let ev = curvature_eigenvalues_unchecked(q)?;
    let qm = q_matrix(q)?;
    let e = e_matrix_unchecked(q);
    let g = metric_matrix(q)?;
    let scale = g.to_rows().iter().flatten().fold(1.0_f64, |m, x| m.max(x.abs()));
    for lambda in ev.as_array() {
        let residual = eigen_residual(&qm, &e, &g, lambda);
        if !(residual < EIGEN_RESIDUAL_TOL * scale) {
            return Err(PeakonError::EigenResidual { value: lambda, residual });
        }
    }
    Ok(ev)
}

/// The closed forms without the residual check.
pub fn curvature_eigenvalues_unchecked(q: &[f64]) -> Result<CurvatureEigenvalues> {
    check_three(q)?;
    let gv = GapVars::new(q);
    Ok(CurvatureEigenvalues {
        lambda1: kappa_of_gap(q[1] - q[2]),
        lambda2: gv.u * gv.v / gv.delta3,
        lambda3: kappa_of_gap(q[0] - q[1]),
    })
}

/// `‖g Q v − λ v‖` for a unit null vector `v` of `Q − λE`.
pub(crate) fn eigen_residual(qm: &SmallMatrix, e: &SmallMatrix, g: &SmallMatrix, lambda: f64) -> f64 {
    let m = SmallMatrix::from_symmetric_fn(3, |i, j| qm.get(i, j) - lambda * e.get(i, j));
    let v = null_vector(&m);
    let gqv = g.mul_vec(&qm.mul_vec(&v));
    let diff: Vec<f64> = gqv.iter().zip(&v).map(|(x, y)| x - lambda * y).collect();
    norm(&diff)
}

/// Unit vector spanning (part of) the kernel of a singular symmetric 3×3 matrix.
fn null_vector(m: &SmallMatrix) -> Vec<f64> {
    let rows: Vec<&[f64]> = (0..3).map(|i| m.row(i)).collect();
    let mut best = [0.0; 3];
    let mut best_norm = 0.0;
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let c = cross(rows[i], rows[j]);
        let nc = norm(&c);
        if nc > best_norm {
            best = c;
            best_norm = nc;
        }
    }
    let scale = rows.iter().map(|r| norm(r)).fold(0.0, f64::max);
    if best_norm > 1e-10 * scale * scale && best_norm > 0.0 {
        return best.iter().map(|x| x / best_norm).collect();
    }
    // Rank at most one: anything orthogonal to the dominant row.
    let r = rows.iter().max_by(|a, b| norm(a).total_cmp(&norm(b))).copied().unwrap();
    if norm(r) == 0.0 {
        return vec![1.0, 0.0, 0.0];
    }
    let axis = (0..3).min_by(|&a, &b| r[a].abs().total_cmp(&r[b].abs())).unwrap();
    let mut e = [0.0; 3];
    e[axis] = 1.0;
    let c = cross(r, &e);
    let nc = norm(&c);
    c.iter().map(|x| x / nc).collect()
}

/// Everything the `curvature` command reports at a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub n: usize,
    pub q: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_g: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub riemann: Option<RiemannComponents3D>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenvalues: Option<CurvatureEigenvalues>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sectional: Option<f64>,
}

pub fn curvature_report(q: &[f64], plane: Option<(&TangentVector, &TangentVector)>) -> Result<CurvatureReport> {
    let mut report =
        CurvatureReport { n: q.len(), q: q.to_vec(), kappa_g: None, riemann: None, eigenvalues: None, sectional: None };
    match q.len() {
        2 => {
            if plane.is_some() {
                return Err(PeakonError::InvalidInput("planes are only meaningful for three peaks".into()));
            }
            report.kappa_g = Some(gauss_curvature_2d(q)?);
        }
        3 => {
            report.riemann = Some(riemann_3d(q)?);
            report.eigenvalues = Some(curvature_eigenvalues(q)?);
            if let Some((a, b)) = plane {
                report.sectional = Some(sectional_curvature_3d(q, a, b)?);
            }
        }
        n => return Err(PeakonError::WrongArity { expected: "2 or 3", got: n }),
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, LN_2};

    fn tv(v: &[f64]) -> TangentVector {
        TangentVector(v.to_vec())
    }

    #[test]
    fn gauss_curvature_examples() {
        assert!(gauss_curvature_2d(&[LN_2, 0.0]).unwrap().abs() < 1e-15);
        assert!((gauss_curvature_2d(&[1e-8, 0.0]).unwrap() + 0.25).abs() < 1e-6);
        assert!((gauss_curvature_2d(&[4f64.ln(), 0.0]).unwrap() - 0.08).abs() < 1e-15);
        assert!(gauss_curvature_2d(&[0.3, 0.0]).unwrap() < 0.0);
        assert!(gauss_curvature_2d(&[1.3, 0.0]).unwrap() > 0.0);
        assert!(matches!(gauss_curvature_2d(&[1.0, 0.0, -1.0]), Err(PeakonError::WrongArity { .. })));
    }

    #[test]
    fn r1313_at_reference_point() {
        let r = riemann_3d(&[1.0, 0.0, -1.0]).unwrap();
        let delta1 = (1.0 - E) * (1.0 / E - 1.0) * (1.0 + E).powi(2) * (1.0 / E + 1.0).powi(2);
        assert!((r.r1313 - E / delta1).abs() < 1e-14);
        assert!(r.r1313 > 0.0);
        assert!(r.r1213 < 0.0);
    }

    #[test]
    fn closed_forms_match_oracle_at_a_point() {
        let q = [1.7, 0.4, -0.6];
        let exact = riemann_3d(&q).unwrap();
        let fd = riemann_fd(&q).unwrap();
        for (a, b) in exact.as_array().iter().zip(fd.as_array()) {
            assert!((a - b).abs() <= 1e-8 * a.abs(), "{a} vs {b}");
        }
    }

    #[test]
    fn components_decay_far_apart() {
        let r = riemann_3d(&[20.0, 0.0, -20.0]).unwrap();
        assert!(r.as_array().iter().all(|x| x.abs() < 1e-6));
    }

    #[test]
    fn overflow_guard() {
        assert!(matches!(riemann_3d(&[301.0, 300.5, 300.0]), Err(PeakonError::Overflow(_))));
    }

    #[test]
    fn tensor_lookup_symmetries() {
        let r = riemann_3d(&[1.0, 0.2, -0.5]).unwrap();
        assert_eq!(r.get(0, 0, 1, 2), 0.0);
        assert_eq!(r.get(0, 1, 0, 2), r.get(0, 2, 0, 1));
        assert_eq!(r.get(1, 0, 0, 2), -r.r1213);
        assert_eq!(r.get(0, 1, 2, 0), -r.r1213);
    }

    #[test]
    fn eigenvalues_at_reference_point() {
        let ev = curvature_eigenvalues(&[1.0, 0.0, -1.0]).unwrap();
        assert!((ev.lambda1 - 0.05195295698445531).abs() < 1e-14);
        assert!((ev.lambda3 - ev.lambda1).abs() < 1e-15);
        assert!((ev.lambda2 - 0.07232948812851328).abs() < 1e-14);
    }

    #[test]
    fn edge_eigenvalue_peaks_at_one_twelfth() {
        let gap = 5f64.ln();
        let ev = curvature_eigenvalues(&[3.0, 1.0, 1.0 - gap]).unwrap();
        assert!((ev.lambda1 - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn d1_plane_matches_gauss_curvature() {
        let q: [f64; 3] = [0.8, -0.1, -1.3];
        let a = tv(&[(-q[0]).exp(), (-q[1]).exp(), 0.0]);
        let b = tv(&[0.0, 0.0, 1.0]);
        let k = sectional_curvature_3d(&q, &a, &b).unwrap();
        assert!((k - gauss_curvature_2d(&[q[1], q[2]]).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn plane_invariance_and_two_routes() {
        let q = [1.1, 0.3, -0.4];
        let a = tv(&[0.3, -1.0, 0.7]);
        let b = tv(&[1.2, 0.5, -0.2]);
        let ab = tv(&[1.5, -0.5, 0.5]);
        let k1 = sectional_curvature_3d(&q, &a, &b).unwrap();
        let k2 = sectional_curvature_3d(&q, &ab, &b).unwrap();
        let k3 = sectional_curvature_direct(&q, &a, &b).unwrap();
        assert!((k1 - k2).abs() < 1e-10);
        assert!((k1 - k3).abs() < 1e-10);
        assert!(k1 <= curvature_eigenvalues(&q).unwrap().max() + 1e-9);
    }

    #[test]
    fn degenerate_plane() {
        let q = [1.0, 0.0, -1.0];
        let a = tv(&[1.0, 2.0, 3.0]);
        let b = tv(&[2.0, 4.0, 6.0]);
        assert!(matches!(sectional_curvature_3d(&q, &a, &b), Err(PeakonError::DegeneratePlane)));
        assert!(sectional_curvature_3d(&q, &tv(&[0.0; 3]), &b).is_err());
    }

    #[test]
    fn report_shapes() {
        let r2 = curvature_report(&[LN_2, 0.0], None).unwrap();
        assert!(r2.kappa_g.is_some() && r2.riemann.is_none());
        let a = tv(&[1.0, 0.0, 0.0]);
        let b = tv(&[0.0, 1.0, 0.0]);
        let r3 = curvature_report(&[1.0, 0.0, -1.0], Some((&a, &b))).unwrap();
        assert!(r3.sectional.unwrap() < 0.25);
    }
}
