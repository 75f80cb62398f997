use nalgebra::{Cholesky, SymmetricEigen};

use crate::error::{PeakonError, Result};
use crate::matrix::SmallMatrix;

/// Largest eigenvalue of `B^{-1} A` and a vector attaining `max <Aζ,ζ>/<Bζ,ζ>`.
///
/// Reduces to a standard symmetric problem through the Cholesky factor `B = L Lᵀ`.
/// The returned vector has unit Euclidean norm.
pub fn rayleigh_max(a: &SmallMatrix, b: &SmallMatrix) -> Result<(f64, Vec<f64>)> {
    let n = a.dim();
    if b.dim() != n {
        return Err(PeakonError::InvalidInput(format!("dimension mismatch {n} vs {}", b.dim())));
    }
    if n == 0 {
        return Err(PeakonError::InvalidInput("empty matrix".into()));
    }
    let chol = Cholesky::new(b.to_nalgebra()).ok_or(PeakonError::NotPositiveDefinite)?;
    let l = chol.l();
    let l_inv = l.clone().try_inverse().ok_or(PeakonError::NotPositiveDefinite)?;
    let c = &l_inv * a.to_nalgebra() * l_inv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let (idx, &lambda) = eig.eigenvalues.iter().enumerate().max_by(|x, y| x.1.total_cmp(y.1)).expect("nonempty");
    let y = eig.eigenvectors.column(idx).into_owned();
    let zeta = l_inv.transpose() * y;
    let norm = zeta.norm();
    Ok((lambda, zeta.iter().map(|v| v / norm).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_matrices_give_one() {
        let b = SmallMatrix::from_rows(&[vec![2.0, 0.3], vec![0.3, 1.0]]).unwrap();
        let (l, _) = rayleigh_max(&b, &b).unwrap();
        assert!((l - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_case() {
        let (l, v) = rayleigh_max(&SmallMatrix::diagonal(&[2.0, 1.0]), &SmallMatrix::identity(2)).unwrap();
        assert!((l - 2.0).abs() < 1e-14);
        assert!((v[0].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn indefinite_b_is_rejected() {
        let b = SmallMatrix::diagonal(&[1.0, -1.0]);
        assert!(matches!(rayleigh_max(&SmallMatrix::identity(2), &b), Err(PeakonError::NotPositiveDefinite)));
    }
}
