//! Haar matrices and random local interaction terms.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Beta, Field};
use crate::linalg;

/// Haar-distributed orthogonal (`f64`) or unitary (`Complex<f64>`) matrix.
#[derive(Clone, Debug)]
pub struct HaarMatrix<T: Field> {
    matrix: DMatrix<T>,
}

impl<T: Field> HaarMatrix<T> {
    pub fn beta(&self) -> Beta {
        T::BETA
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.matrix
    }
}

/// Haar sample from the QR factorization of a Gaussian matrix.
///
/// Columns of `Q` are multiplied by the phases of `diag(R)`, which makes the
/// triangular factor's diagonal positive; without that step the law is not Haar.
pub fn haar<T: Field, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<HaarMatrix<T>> {
    if dim == 0 {
        return Err(Error::InvalidDimension("Haar matrix of order 0".into()));
    }
    let g = DMatrix::<T>::from_fn(dim, dim, |_, _| T::gaussian(rng));
    let (mut q, r) = g.qr().unpack();
    for j in 0..dim {
        let phase = r[(j, j)].unit_phase();
        for x in q.column_mut(j).iter_mut() {
            *x *= phase;
        }
    }
    Ok(HaarMatrix { matrix: q })
}

/// One dense Hermitian local term, with its ascending eigendecomposition.
#[derive(Clone, Debug)]
pub struct LocalTerm<T: Field> {
    matrix: DMatrix<T>,
    eigenvalues: Option<Vec<f64>>,
    eigenvectors: Option<DMatrix<T>>,
}

impl<T: Field> LocalTerm<T> {
    /// Wraps a Hermitian matrix without decomposing it.
    pub fn new(matrix: DMatrix<T>) -> Result<Self> {
        linalg::check_hermitian(&matrix)?;
        let mut matrix = matrix;
        linalg::symmetrize(&mut matrix);
        Ok(Self { matrix, eigenvalues: None, eigenvectors: None })
    }

    /// Wraps and diagonalizes.
    pub fn decomposed(matrix: DMatrix<T>) -> Result<Self> {
        let mut t = Self::new(matrix)?;
        t.decompose()?;
        Ok(t)
    }

    pub fn decompose(&mut self) -> Result<()> {
        if self.eigenvalues.is_none() {
            let (vals, vecs) = linalg::eigen(&self.matrix)?;
            self.eigenvalues = Some(vals);
            self.eigenvectors = Some(vecs);
        }
        Ok(())
    }

    /// Multiplies each eigenvector by an independent uniform sign (phase).
    ///
    /// Solvers fix eigenvector signs deterministically; for orthogonally
    /// invariant ensembles this restores Haar-distributed eigenvectors.
    pub fn randomize_phases<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        if let Some(v) = self.eigenvectors.as_mut() {
            for mut col in v.column_iter_mut() {
                let phase = T::gaussian(rng).unit_phase();
                for x in col.iter_mut() {
                    *x *= phase;
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> Option<&[f64]> {
        self.eigenvalues.as_deref()
    }

    pub fn eigenvectors(&self) -> Option<&DMatrix<T>> {
        self.eigenvectors.as_ref()
    }
}

/// `W^† W` with `W` a `rank x dim` Gaussian matrix.
pub fn wishart_local<T: Field, R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> Result<LocalTerm<T>> {
    if rank == 0 || rank > dim {
        return Err(Error::InvalidRank { rank, max: dim });
    }
    let w = DMatrix::<T>::from_fn(rank, dim, |_, _| T::gaussian(rng));
    let mut t = LocalTerm::decomposed(w.adjoint() * w)?;
    t.randomize_phases(rng);
    Ok(t)
}

/// `(G + G^†) / 2` with iid Gaussian `G`.
pub fn goe_local<T: Field, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<LocalTerm<T>> {
    if dim == 0 {
        return Err(Error::InvalidDimension("local term of order 0".into()));
    }
    let g = DMatrix::<T>::from_fn(dim, dim, |_, _| T::gaussian(rng));
    let mut h = (&g + g.adjoint()) * T::from_real(0.5);
    linalg::symmetrize(&mut h);
    let mut t = LocalTerm::decomposed(h)?;
    t.randomize_phases(rng);
    Ok(t)
}

/// `Q diag(lambda) Q^†` with Haar `Q`.
pub fn fixed_spectrum_local<T: Field, R: Rng + ?Sized>(
    dim: usize,
    eigenvalues: &[f64],
    rng: &mut R,
) -> Result<LocalTerm<T>> {
    if eigenvalues.len() != dim {
        return Err(Error::SpectrumLength { expected: dim, got: eigenvalues.len() });
    }
    if eigenvalues.iter().any(|x| !x.is_finite()) {
        return Err(Error::Config("eigenvalues must be finite".into()));
    }
    let q = haar::<T, R>(dim, rng)?.into_matrix();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| eigenvalues[i].total_cmp(&eigenvalues[j]));
    let vals: Vec<f64> = order.iter().map(|&i| eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(dim, dim, |r, c| q[(r, order[c])]);
    let matrix = linalg::compose(&vecs, &vals);
    Ok(LocalTerm { matrix, eigenvalues: Some(vals), eigenvectors: Some(vecs) })
}

/// Local-term ensembles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Ensemble {
    Wishart {
        rank: usize,
    },
    Goe,
    /// iid `+1`/`-1` eigenvalues with Haar eigenvectors.
    Pm1,
    /// A fixed spectrum with Haar eigenvectors.
    Fixed {
        eigenvalues: Vec<f64>,
    },
}

impl Ensemble {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Ensemble::Wishart { rank } if *rank == 0 || *rank > dim => {
                Err(Error::InvalidRank { rank: *rank, max: dim })
            }
            Ensemble::Fixed { eigenvalues } if eigenvalues.len() != dim => {
                Err(Error::SpectrumLength { expected: dim, got: eigenvalues.len() })
            }
            _ => Ok(()),
        }
    }

    /// Draws one decomposed term of order `dim`.
    pub fn sample<T: Field, R: Rng + ?Sized>(&self, dim: usize, rng: &mut R) -> Result<LocalTerm<T>> {
        match self {
            Ensemble::Wishart { rank } => wishart_local(dim, *rank, rng),
            Ensemble::Goe => goe_local(dim, rng),
            Ensemble::Pm1 => {
                let signs: Vec<f64> = (0..dim).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
                fixed_spectrum_local(dim, &signs, rng)
            }
            Ensemble::Fixed { eigenvalues } => fixed_spectrum_local(dim, eigenvalues, rng),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Ensemble::Wishart { .. } => "wishart",
            Ensemble::Goe => "goe",
            Ensemble::Pm1 => "pm1",
            Ensemble::Fixed { .. } => "fixed",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamRng;
    use nalgebra::Complex;

    type C = Complex<f64>;

    fn mean_se(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (v / n).sqrt())
    }

    #[test]
    fn haar_order_one_is_a_sign() {
        let mut rng = StreamRng::new(1, 0);
        let mut plus = 0;
        for _ in 0..2000 {
            let q = haar::<f64, _>(1, &mut rng).unwrap();
            let x = q.matrix()[(0, 0)];
            assert_eq!(x.abs(), 1.0);
            if x > 0.0 {
                plus += 1;
            }
        }
        assert!((plus as f64 - 1000.0).abs() < 3.0 * 22.4);
    }

    #[test]
    fn haar_is_orthogonal() {
        let mut rng = StreamRng::new(2, 0);
        for dim in [1, 2, 5, 16] {
            let q = haar::<f64, _>(dim, &mut rng).unwrap();
            assert!(linalg::unitarity_error(q.matrix()) < 1e-12);
            let u = haar::<C, _>(dim, &mut rng).unwrap();
            assert!(linalg::unitarity_error(u.matrix()) < 1e-12);
            for j in 0..dim {
                assert!((u.matrix().column(j).norm() - 1.0).abs() < 1e-12);
            }
        }
        assert!(haar::<f64, _>(0, &mut rng).is_err());
    }

    #[test]
    fn haar_q11_fourth_moment_m2_real() {
        let mut rng = StreamRng::new(3, 0);
        let xs: Vec<f64> =
            (0..100_000).map(|_| haar::<f64, _>(2, &mut rng).unwrap().matrix()[(0, 0)].powi(4)).collect();
        let (m, se) = mean_se(&xs);
        assert!((m - 3.0 / 8.0).abs() < 3.0 * se, "{m} {se}");
    }

    #[test]
    fn haar_first_row_is_not_sign_biased() {
        // Without the phase correction q_11 is biased toward one sign.
        let mut rng = StreamRng::new(4, 0);
        let xs: Vec<f64> = (0..50_000).map(|_| haar::<f64, _>(3, &mut rng).unwrap().matrix()[(0, 0)]).collect();
        let (m, se) = mean_se(&xs);
        assert!(m.abs() < 3.5 * se, "{m} {se}");
    }

    #[test]
    fn local_eigenvectors_are_not_sign_biased() {
        let mut rng = StreamRng::new(40, 0);
        for goe in [false, true] {
            let xs: Vec<f64> = (0..20_000)
                .map(|_| {
                    let t =
                        if goe { goe_local::<f64, _>(4, &mut rng) } else { wishart_local::<f64, _>(4, 4, &mut rng) };
                    t.unwrap().eigenvectors().unwrap()[(0, 3)]
                })
                .collect();
            let (m, se) = mean_se(&xs);
            assert!(m.abs() < 3.5 * se, "{goe} {m} {se}");
        }
        let mut t = wishart_local::<C, _>(4, 2, &mut rng).unwrap();
        let before = t.matrix().clone();
        t.randomize_phases(&mut rng);
        let back = linalg::compose(t.eigenvectors().unwrap(), t.eigenvalues().unwrap());
        assert!((back - before).camax() < 1e-10);
    }

    #[test]
    fn wishart_mean_eigenvalue_is_rank() {
        let mut rng = StreamRng::new(5, 0);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| {
                let t = wishart_local::<f64, _>(4, 4, &mut rng).unwrap();
                t.eigenvalues().unwrap().iter().sum::<f64>() / 4.0
            })
            .collect();
        let (m, se) = mean_se(&xs);
        assert!((m - 4.0).abs() < 3.0 * se, "{m} {se}");
    }

    #[test]
    fn wishart_second_moment() {
        let mut rng = StreamRng::new(6, 0);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| {
                let t = wishart_local::<f64, _>(4, 4, &mut rng).unwrap();
                t.eigenvalues().unwrap().iter().map(|l| l * l).sum::<f64>() / 4.0
            })
            .collect();
        let (m, se) = mean_se(&xs);
        assert!((m - 36.0).abs() < 3.0 * se, "{m} {se}");
    }

    #[test]
    fn wishart_rank_deficiency() {
        let mut rng = StreamRng::new(7, 0);
        for _ in 0..100 {
            let t = wishart_local::<f64, _>(4, 2, &mut rng).unwrap();
            let ev = t.eigenvalues().unwrap();
            let scale = ev[3];
            assert!(ev[..2].iter().all(|l| l.abs() < 1e-12 * scale));
            assert!(ev[2] > 1e-8 * scale);
            let u = wishart_local::<C, _>(4, 1, &mut rng).unwrap();
            assert!(u.eigenvalues().unwrap()[..3].iter().all(|l| l.abs() < 1e-12 * u.eigenvalues().unwrap()[3]));
        }
        assert!(matches!(wishart_local::<f64, _>(4, 5, &mut rng), Err(Error::InvalidRank { .. })));
        assert!(wishart_local::<f64, _>(4, 0, &mut rng).is_err());
    }

    #[test]
    fn goe_is_hermitian_and_centered() {
        let mut rng = StreamRng::new(8, 0);
        let t = goe_local::<C, _>(4, &mut rng).unwrap();
        assert_eq!(linalg::hermitian_deviation(t.matrix()), 0.0);
        let xs: Vec<f64> =
            (0..100_000).map(|_| goe_local::<f64, _>(4, &mut rng).unwrap().matrix().trace() / 4.0).collect();
        let (m, se) = mean_se(&xs);
        assert!(m.abs() < 3.0 * se);
    }

    #[test]
    fn goe_second_moment_matches_direct_sampling() {
        // Oracle: (1/n) E Tr H^2 with H = (G + G^T)/2 sampled entrywise:
        // diagonal entries N(0,1), off-diagonal N(0,1/2), so (n + n(n-1)/2)/n = 5/2 at n = 4.
        let mut rng = StreamRng::new(9, 0);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| {
                let t = goe_local::<f64, _>(4, &mut rng).unwrap();
                t.matrix().iter().map(|x| x * x).sum::<f64>() / 4.0
            })
            .collect();
        let (m, se) = mean_se(&xs);
        assert!((m - 2.5).abs() < 3.0 * se, "{m} {se}");
    }

    #[test]
    fn pm1_is_an_involution() {
        let mut rng = StreamRng::new(10, 0);
        for _ in 0..50 {
            let t = Ensemble::Pm1.sample::<f64, _>(4, &mut rng).unwrap();
            let h2 = t.matrix() * t.matrix();
            assert!((h2 - DMatrix::<f64>::identity(4, 4)).amax() < 1e-10);
        }
    }

    #[test]
    fn unit_spectrum_gives_identity() {
        let mut rng = StreamRng::new(11, 0);
        let t = fixed_spectrum_local::<C, _>(4, &[1.0; 4], &mut rng).unwrap();
        assert!((t.matrix() - DMatrix::<C>::identity(4, 4)).camax() < 1e-12);
    }

    #[test]
    fn fixed_spectrum_is_preserved() {
        let mut rng = StreamRng::new(12, 0);
        let lambda = [3.0, -1.5, 0.25, 2.0];
        let t = fixed_spectrum_local::<f64, _>(4, &lambda, &mut rng).unwrap();
        assert!((t.matrix().trace() - lambda.iter().sum::<f64>()).abs() < 1e-10);
        let spec = linalg::eigenvalues(t.matrix()).unwrap();
        let mut sorted = lambda.to_vec();
        sorted.sort_by(f64::total_cmp);
        for (a, b) in spec.iter().zip(&sorted) {
            assert!((a - b).abs() < 1e-10);
        }
        assert_eq!(t.eigenvalues().unwrap(), &sorted[..]);
        let back = linalg::compose(t.eigenvectors().unwrap(), t.eigenvalues().unwrap());
        assert!((back - t.matrix()).amax() < 1e-10);
        assert!(matches!(
            fixed_spectrum_local::<f64, _>(4, &[1.0; 3], &mut rng),
            Err(Error::SpectrumLength { expected: 4, got: 3 })
        ));
    }

    #[test]
    fn decomposition_reconstructs() {
        let mut rng = StreamRng::new(13, 0);
        let t = wishart_local::<C, _>(9, 5, &mut rng).unwrap();
        let back = linalg::compose(t.eigenvectors().unwrap(), t.eigenvalues().unwrap());
        assert!((back - t.matrix()).camax() <= 1e-10 * linalg::max_abs(t.matrix()).max(1.0));
        assert!(linalg::hermitian_deviation(t.matrix()) <= 1e-12);
    }

    #[test]
    fn sampling_is_reproducible() {
        let a = wishart_local::<C, _>(4, 3, &mut StreamRng::new(99, 4)).unwrap();
        let b = wishart_local::<C, _>(4, 3, &mut StreamRng::new(99, 4)).unwrap();
        assert_eq!(a.matrix(), b.matrix());
        let c = wishart_local::<C, _>(4, 3, &mut StreamRng::new(99, 5)).unwrap();
        assert_ne!(a.matrix(), c.matrix());
    }
}
