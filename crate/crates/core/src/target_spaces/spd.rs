//! Affine-invariant geometry on symmetric positive-definite matrices.
//!
//! All matrix functions go through a symmetric eigendecomposition followed by
//! symmetrization `X <- (X + X^T) / 2`. The dimensions in scope are small
//! (d <= 8), where this is accurate to a few ulps.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Applies a scalar function to the spectrum of a symmetric matrix.
pub(crate) fn sym_apply(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(symmetrize(m));
    let mapped = DVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|&l| f(l)));
    let out = &eig.eigenvectors * DMatrix::from_diagonal(&mapped) * eig.eigenvectors.transpose();
    symmetrize(&out)
}

pub(crate) fn sym_eigenvalues(m: &DMatrix<f64>) -> DVector<f64> {
    SymmetricEigen::new(symmetrize(m)).eigenvalues
}

/// Square root and inverse square root of an SPD matrix, from one decomposition.
pub(crate) fn sqrt_and_inv_sqrt(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(symmetrize(a));
    let v = &eig.eigenvectors;
    let n = eig.eigenvalues.len();
    let s = DVector::from_iterator(n, eig.eigenvalues.iter().map(|l| l.sqrt()));
    let si = DVector::from_iterator(n, eig.eigenvalues.iter().map(|l| 1.0 / l.sqrt()));
    let sqrt = v * DMatrix::from_diagonal(&s) * v.transpose();
    let inv_sqrt = v * DMatrix::from_diagonal(&si) * v.transpose();
    (symmetrize(&sqrt), symmetrize(&inv_sqrt))
}

/// `A^{-1/2} B A^{-1/2}`, symmetrized.
fn whiten(inv_sqrt: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    symmetrize(&(inv_sqrt * b * inv_sqrt))
}

pub(crate) fn distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let (_, inv_sqrt) = sqrt_and_inv_sqrt(a);
    let c = whiten(&inv_sqrt, b);
    sym_eigenvalues(&c)
        .iter()
        .map(|l| {
            let g = l.ln();
            g * g
        })
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn geodesic(a: &DMatrix<f64>, b: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let (sqrt, inv_sqrt) = sqrt_and_inv_sqrt(a);
    let c = whiten(&inv_sqrt, b);
    let ct = sym_apply(&c, |l| l.powf(t));
    symmetrize(&(&sqrt * ct * &sqrt))
}

pub(crate) fn log_map(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (sqrt, inv_sqrt) = sqrt_and_inv_sqrt(a);
    let c = whiten(&inv_sqrt, b);
    let lc = sym_apply(&c, f64::ln);
    symmetrize(&(&sqrt * lc * &sqrt))
}

pub(crate) fn exp_map(a: &DMatrix<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
    let (sqrt, inv_sqrt) = sqrt_and_inv_sqrt(a);
    let w = whiten(&inv_sqrt, v);
    let ew = sym_apply(&w, f64::exp);
    symmetrize(&(&sqrt * ew * &sqrt))
}

pub(crate) fn tangent_norm(a: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    let (_, inv_sqrt) = sqrt_and_inv_sqrt(a);
    whiten(&inv_sqrt, v).norm()
}

pub(crate) fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).amax()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_squares_back() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let (s, si) = sqrt_and_inv_sqrt(&a);
        assert!((&s * &s - &a).amax() < 1e-14);
        assert!((&s * &si - DMatrix::identity(2, 2)).amax() < 1e-14);
    }

    #[test]
    fn log_and_exp_are_inverse_spectral_maps() {
        let a = DMatrix::from_row_slice(3, 3, &[3.0, 0.2, 0.1, 0.2, 2.0, -0.3, 0.1, -0.3, 1.5]);
        let back = sym_apply(&sym_apply(&a, f64::ln), f64::exp);
        assert!((back - a).amax() < 1e-13);
    }
}
