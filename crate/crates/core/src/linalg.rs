//! Dense Hermitian helpers shared by the samplers and the chain builder.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::field::Field;

/// Relative tolerance of the Hermitian check.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Largest `|h_ij - conj(h_ji)|`.
pub fn hermitian_deviation<T: Field>(h: &DMatrix<T>) -> f64 {
    let n = h.nrows();
    let mut dev = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            dev = dev.max((h[(i, j)] - h[(j, i)].conjugate()).modulus());
        }
    }
    dev
}

pub fn max_abs<T: Field>(h: &DMatrix<T>) -> f64 {
    h.iter().fold(0.0f64, |acc, x| acc.max(x.modulus()))
}

pub fn check_hermitian<T: Field>(h: &DMatrix<T>) -> Result<()> {
    if !h.is_square() {
        return Err(Error::InvalidDimension(format!("{}x{} matrix is not square", h.nrows(), h.ncols())));
    }
    let dev = hermitian_deviation(h);
    if dev > HERMITIAN_TOL * max_abs(h).max(1.0) {
        return Err(Error::NotHermitian { deviation: dev });
    }
    Ok(())
}

/// `(H + H^†) / 2` in place.
pub fn symmetrize<T: Field>(h: &mut DMatrix<T>) {
    let n = h.nrows();
    let half = T::from_real(0.5);
    for j in 0..n {
        for i in 0..j {
            let v = (h[(i, j)] + h[(j, i)].conjugate()) * half;
            h[(i, j)] = v;
            h[(j, i)] = v.conjugate();
        }
        h[(j, j)] = T::from_real(h[(j, j)].real());
    }
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn eigenvalues<T: Field>(h: &DMatrix<T>) -> Result<Vec<f64>> {
    into_eigenvalues(h.clone())
}

/// [`eigenvalues`] consuming its input.
pub fn into_eigenvalues<T: Field>(h: DMatrix<T>) -> Result<Vec<f64>> {
    check_hermitian(&h)?;
    let mut v: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::EigenFailure);
    }
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Ascending eigenvalues with matching eigenvector columns.
pub fn eigen<T: Field>(h: &DMatrix<T>) -> Result<(Vec<f64>, DMatrix<T>)> {
    check_hermitian(h)?;
    let n = h.nrows();
    let eig = SymmetricEigen::try_new(h.clone(), f64::EPSILON, 0).ok_or(Error::EigenFailure)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// `V diag(lambda) V^†`, symmetrized.
pub fn compose<T: Field>(vectors: &DMatrix<T>, lambda: &[f64]) -> DMatrix<T> {
    let mut scaled = vectors.clone();
    for (j, &l) in lambda.iter().enumerate() {
        scaled.column_mut(j).scale_mut(l);
    }
    let mut h = scaled * vectors.adjoint();
    symmetrize(&mut h);
    h
}

/// `R diag(b) R^†`, symmetrized.
pub fn conjugate_diag<T: Field>(r: &DMatrix<T>, b: &[f64]) -> DMatrix<T> {
    compose(r, b)
}

pub fn diag<T: Field>(v: &[f64]) -> DMatrix<T> {
    DMatrix::from_diagonal(&DVector::from_iterator(v.len(), v.iter().map(|&x| T::from_real(x))))
}

/// `max |U^† U - I|`.
pub fn unitarity_error<T: Field>(u: &DMatrix<T>) -> f64 {
    let g = u.adjoint() * u;
    let n = g.nrows();
    let mut err = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let target = if i == j { T::one() } else { T::zero() };
            err = err.max((g[(i, j)] - target).modulus());
        }
    }
    err
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Complex;

    #[test]
    fn diagonal_spectrum_is_sorted_diagonal() {
        let h = diag::<f64>(&[3.0, -1.0, 2.0]);
        assert_eq!(eigenvalues(&h).unwrap(), vec![-1.0, 2.0, 3.0]);
    }

    #[test]
    fn rejects_non_hermitian() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(eigenvalues(&h), Err(Error::NotHermitian { .. })));
        let z = DMatrix::from_row_slice(1, 1, &[Complex::new(1.0, 0.5)]);
        assert!(eigenvalues(&z).is_err());
    }

    #[test]
    fn eigen_residuals_are_small() {
        let h = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.5, 1.0, -1.0, 0.25, 0.5, 0.25, 4.0]);
        let (vals, vecs) = eigen(&h).unwrap();
        let norm = h.norm();
        for (j, &l) in vals.iter().enumerate() {
            let v = vecs.column(j);
            assert!((&h * v - v * l).norm() <= 1e-8 * norm);
        }
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn compose_roundtrip() {
        let h = DMatrix::from_row_slice(
            2,
            2,
            &[Complex::new(1.0, 0.0), Complex::new(0.5, 0.5), Complex::new(0.5, -0.5), Complex::new(-2.0, 0.0)],
        );
        let (vals, vecs) = eigen(&h).unwrap();
        let back = compose(&vecs, &vals);
        assert!((back - h).norm() < 1e-12);
    }
}
