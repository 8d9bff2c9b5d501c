//! Closed-form mixture weight `p` and the moment algebra behind it.
//!
//! The quantum chain spectrum is matched by `p·classical + (1-p)·isotropic`,
//! where `p` is fixed by the fourth moment. The first three moments of the
//! three convolutions coincide; their fourth moments differ only through
//! `Tr(A R B R^† A R B R^†)`, whose gaps against the classical value are
//! [`iso_gap`] and [`quantum_gap`].

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::linalg;
use crate::matgen::{haar, Ensemble};
use crate::rng::StreamRng;
use crate::spectra::{run_trials, DensityEstimate, EmpiricalMeasure, MomentSummary};

fn check_beta(beta: f64) -> Result<()> {
    if !beta.is_finite() || beta < 1.0 {
        return Err(Error::InvalidBeta(beta));
    }
    Ok(())
}

/// Odd or even bond family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Odd,
    Even,
}

/// Sizes entering the moment algebra of an `N`-site chain with `L = 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SliderDims {
    pub n_sites: usize,
    pub d: usize,
    pub beta: f64,
    /// `d^2`.
    pub n: f64,
    /// `d^N`; infinite when it overflows.
    pub m: f64,
    pub k_odd: usize,
    pub k_even: usize,
    /// Copy multiplicities, `t·n^k = m` on each side.
    pub t_odd: f64,
    pub t_even: f64,
}

impl SliderDims {
    pub fn new(n_sites: usize, d: usize, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        if n_sites < 3 {
            return Err(Error::InvalidChain(format!("need N >= 3, got {n_sites}")));
        }
        if d < 2 {
            return Err(Error::InvalidChain(format!("need d >= 2, got {d}")));
        }
        let df = d as f64;
        let (t_odd, t_even) = if n_sites % 2 == 1 { (df, df) } else { (1.0, df * df) };
        Ok(Self {
            n_sites,
            d,
            beta,
            n: df * df,
            m: df.powi(n_sites as i32),
            k_odd: n_sites / 2,
            k_even: (n_sites - 1) / 2,
            t_odd,
            t_even,
        })
    }

    /// `(N-1)/2` for odd `N`; `N/2` for even `N`.
    pub fn k(&self) -> usize {
        self.k_odd
    }

    pub fn side(&self, side: Side) -> (usize, f64) {
        match side {
            Side::Odd => (self.k_odd, self.t_odd),
            Side::Even => (self.k_even, self.t_even),
        }
    }

    /// `m / (m - 1)`, finite for overflowing `m`.
    fn m_ratio(&self) -> f64 {
        1.0 / (1.0 - 1.0 / self.m)
    }

    /// Number of adjacent odd/even bond pairs, `N - 2`.
    pub fn entangled_pairs(&self) -> usize {
        self.n_sites - 2
    }
}

/// Raw eigenvalue moments of one local term; `m11 = E(λ_i λ_j)`, `i != j`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LocalMoments {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
    pub m11: f64,
}

impl LocalMoments {
    /// Moments of a fixed spectrum with exchangeable (Haar) eigenvector order.
    pub fn fixed_spectrum(lambda: &[f64]) -> Result<Self> {
        let n = lambda.len();
        if n < 2 {
            return Err(Error::InvalidDimension("need at least two eigenvalues".into()));
        }
        let nf = n as f64;
        let p = |j: i32| lambda.iter().map(|x| x.powi(j)).sum::<f64>() / nf;
        let s1: f64 = lambda.iter().sum();
        let s2: f64 = lambda.iter().map(|x| x * x).sum();
        Ok(Self { m1: p(1), m2: p(2), m3: p(3), m4: p(4), m11: (s1 * s1 - s2) / (nf * (nf - 1.0)) })
    }

    /// iid `±1` eigenvalues.
    pub fn pm1() -> Self {
        Self { m1: 0.0, m2: 1.0, m3: 0.0, m4: 1.0, m11: 0.0 }
    }

    /// `(G + G^†)/2` with unit variance per real component of `G`.
    pub fn goe(n: usize, beta: f64) -> Result<Self> {
        let nf = n as f64;
        if beta == 1.0 {
            Ok(Self { m1: 0.0, m2: (nf + 1.0) / 2.0, m3: 0.0, m4: (2.0 * nf * nf + 5.0 * nf + 5.0) / 4.0, m11: -0.5 })
        } else if beta == 2.0 {
            Ok(Self { m1: 0.0, m2: nf, m3: 0.0, m4: 2.0 * nf * nf + 1.0, m11: -1.0 })
        } else {
            Err(Error::UnsupportedBeta(beta))
        }
    }

    pub fn for_ensemble(ensemble: &Ensemble, n: usize, beta: f64) -> Result<Self> {
        match ensemble {
            Ensemble::Wishart { rank } => wishart_moments(*rank, n, beta),
            Ensemble::Goe => Self::goe(n, beta),
            Ensemble::Pm1 => Ok(Self::pm1()),
            Ensemble::Fixed { eigenvalues } => Self::fixed_spectrum(eigenvalues),
        }
    }

    /// `m2 - m11`, the variance of one eigenvalue about the others.
    pub fn spread(&self) -> f64 {
        self.m2 - self.m11
    }

    pub fn kappa2(&self) -> f64 {
        self.m2 - self.m1 * self.m1
    }

    pub fn kappa4(&self) -> f64 {
        let m1 = self.m1;
        self.m4 - 4.0 * self.m3 * m1 - 3.0 * self.m2 * self.m2 + 12.0 * self.m2 * m1 * m1 - 6.0 * m1.powi(4)
    }

    /// Unit spread, zero mean: the normalization of [`p_universal`]'s gaps.
    fn unit() -> Self {
        Self { m1: 0.0, m2: 1.0, m3: 0.0, m4: 1.0, m11: 0.0 }
    }
}

/// `E|q_ij|^4 = (β+2)/(m(mβ+2))` for a β-Haar matrix of order `m`.
pub fn haar_q4(m: f64, beta: f64) -> f64 {
    (beta + 2.0) / (m * (m * beta + 2.0))
}

/// `1 - m·E|q_ij|^4`, safe for overflowing `m`.
fn haar_gap_factor(m: f64, beta: f64) -> f64 {
    1.0 - (beta + 2.0) / (m * beta + 2.0)
}

/// `E a_i^2` for the diagonal of `A` (odd side) or `B` (even side): `k·m2 + k(k-1)·m1^2`.
pub fn chain_m2(local: &LocalMoments, dims: &SliderDims, side: Side) -> f64 {
    let k = dims.side(side).0 as f64;
    k * local.m2 + k * (k - 1.0) * local.m1 * local.m1
}

/// `E a_i a_j`, `i != j`:
/// `k(k-1)·m1^2 + k/(m-1)·[(t n^(k-1) - 1)·m2 + t n^(k-1) (n-1)·m11]`.
///
/// Two distinct positions share a given bond's eigenvalue with probability
/// `(t n^(k-1) - 1)/(m - 1)`; distinct bonds contribute independent means.
pub fn chain_m11(local: &LocalMoments, dims: &SliderDims, side: Side) -> Result<f64> {
    if dims.m <= 1.0 {
        return Err(Error::InvalidDimension("m = 1".into()));
    }
    let (k, t) = dims.side(side);
    let k = k as f64;
    if k == 0.0 {
        return Ok(0.0);
    }
    let (n, m) = (dims.n, dims.m);
    // t n^(k-1) = m/n
    let same = m / n;
    let ratio = k / (m - 1.0);
    let _ = t;
    Ok(k * (k - 1.0) * local.m1 * local.m1 + ratio * ((same - 1.0) * local.m2 + same * (n - 1.0) * local.m11))
}

/// `m2^A - m11^A = t k (n-1) n^(k-1)/(m-1) · (m2 - m11)`.
pub fn chain_spread(local: &LocalMoments, dims: &SliderDims, side: Side) -> f64 {
    let k = dims.side(side).0 as f64;
    k * (dims.n - 1.0) / dims.n * dims.m_ratio() * local.spread()
}

/// `(1/m) E[Tr(AΠBΠ^†)^2 - Tr(AQBQ^†)^2]`.
pub fn iso_gap(odd: &LocalMoments, even: &LocalMoments, dims: &SliderDims) -> f64 {
    chain_spread(odd, dims, Side::Odd) * chain_spread(even, dims, Side::Even) * haar_gap_factor(dims.m, dims.beta)
}

/// `E‖uv‖_F^2 = 1/d` for independent uniform unit vectors reshaped `d x d`.
pub fn frob_uv_classical(d: usize, _beta: f64) -> f64 {
    1.0 / d as f64
}

/// `E‖uv(uv)^†‖_F^2` for two independent β-Haar columns of order `d^2`
/// reshaped `d x d`.
pub fn frob_uv_quantum(d: usize, beta: f64) -> f64 {
    let d = d as f64;
    let b = beta;
    (b * b * (3.0 * d * (d - 1.0) + 1.0) + 2.0 * b * (3.0 * d - 1.0) + 4.0) / (d * (b * d * d + 2.0).powi(2))
}

/// `(1/m) E[Tr(AΠBΠ^†)^2 - Tr(AQ_qBQ_q^†)^2] = d (N-2) (m2-m11)^odd (m2-m11)^even (1/d - E‖uv(uv)^†‖^2)`.
pub fn quantum_gap(odd: &LocalMoments, even: &LocalMoments, dims: &SliderDims) -> f64 {
    dims.d as f64
        * dims.entangled_pairs() as f64
        * odd.spread()
        * even.spread()
        * (frob_uv_classical(dims.d, dims.beta) - frob_uv_quantum(dims.d, dims.beta))
}

/// Mixture weight and the quantities that define it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SliderResult {
    pub p: f64,
    pub one_minus_p: f64,
    pub gamma2_classical: Option<f64>,
    pub gamma2_iso: Option<f64>,
    pub gamma2_quantum: Option<f64>,
    pub gap_iso: f64,
    pub gap_quantum: f64,
}

fn clamp_unit(x: f64) -> f64 {
    if (-1e-12..0.0).contains(&x) {
        0.0
    } else if x > 1.0 && x < 1.0 + 1e-12 {
        1.0
    } else {
        x
    }
}

/// `1 - p` in closed form for odd `N`, `k = (N-1)/2`.
fn one_minus_p_closed(k: f64, d: f64, beta: f64) -> f64 {
    (1.0 - d.powf(-2.0 * k - 1.0))
        * (1.0 - ((k - 1.0) / k).powi(2))
        * (1.0 - (1.0 - d.powf(-2.0 * k + 1.0)) / (1.0 + beta * d * d / 2.0))
        * (d / (d + 1.0)).powi(2)
        * (beta * (d.powi(3) + d * d - 2.0 * d + 1.0) + 4.0 * d - 2.0)
        / ((d - 1.0) * (beta * d * d + 2.0))
}

/// Distribution-free `p` for odd `N`.
///
/// The gaps are reported per unit local spread, i.e. for
/// `(m2 - m11)^odd = (m2 - m11)^even = 1`; their ratio is `1 - p`.
pub fn p_universal(n_sites: usize, d: usize, beta: f64) -> Result<SliderResult> {
    if n_sites >= 3 && n_sites % 2 == 0 {
        return Err(Error::EvenChain(n_sites));
    }
    let dims = SliderDims::new(n_sites, d, beta)?;
    let one_minus_p = clamp_unit(one_minus_p_closed(dims.k() as f64, d as f64, beta));
    let unit = LocalMoments::unit();
    Ok(SliderResult {
        p: clamp_unit(1.0 - one_minus_p),
        one_minus_p,
        gamma2_classical: None,
        gamma2_iso: None,
        gamma2_quantum: None,
        gap_iso: iso_gap(&unit, &unit, &dims),
        gap_quantum: quantum_gap(&unit, &unit, &dims),
    })
}

/// `p` from the gap ratio, valid for either parity of `N`.
pub fn p_gap_ratio(n_sites: usize, d: usize, beta: f64) -> Result<SliderResult> {
    let dims = SliderDims::new(n_sites, d, beta)?;
    let unit = LocalMoments::unit();
    let (gi, gq) = (iso_gap(&unit, &unit, &dims), quantum_gap(&unit, &unit, &dims));
    let one_minus_p = clamp_unit(gq / gi);
    Ok(SliderResult {
        p: clamp_unit(1.0 - one_minus_p),
        one_minus_p,
        gamma2_classical: None,
        gamma2_iso: None,
        gamma2_quantum: None,
        gap_iso: gi,
        gap_quantum: gq,
    })
}

/// Closed form for odd `N`, gap ratio for even `N`.
pub fn analytic_p(n_sites: usize, d: usize, beta: f64) -> Result<SliderResult> {
    if n_sites % 2 == 1 {
        p_universal(n_sites, d, beta)
    } else {
        p_gap_ratio(n_sites, d, beta)
    }
}

/// Full slider for given local moments: gaps and the three excess kurtoses.
///
/// The classical convolution is the `(N-1)`-fold convolution of the local
/// densities, so its cumulants add; the iso and quantum kurtoses subtract
/// `2·gap/σ^4` (the departing word appears twice in the fourth moment).
pub fn slider_for_moments(odd: &LocalMoments, even: &LocalMoments, dims: &SliderDims) -> Result<SliderResult> {
    let (ko, ke) = (dims.k_odd as f64, dims.k_even as f64);
    let sigma2 = ko * odd.kappa2() + ke * even.kappa2();
    if sigma2 <= 0.0 {
        return Err(Error::DegenerateKurtosis);
    }
    let kappa4 = ko * odd.kappa4() + ke * even.kappa4();
    let s4 = sigma2 * sigma2;
    let gc = kappa4 / s4;
    let (gi, gq) = (iso_gap(odd, even, dims), quantum_gap(odd, even, dims));
    if gi == 0.0 {
        return Err(Error::DegenerateKurtosis);
    }
    let one_minus_p = clamp_unit(gq / gi);
    Ok(SliderResult {
        p: clamp_unit(1.0 - one_minus_p),
        one_minus_p,
        gamma2_classical: Some(gc),
        gamma2_iso: Some(gc - 2.0 * gi / s4),
        gamma2_quantum: Some(gc - 2.0 * gq / s4),
        gap_iso: gi,
        gap_quantum: gq,
    })
}

/// `(γq - γiso)/(γc - γiso)`, unclamped.
pub fn p_from_kurtoses(g2q: f64, g2c: f64, g2iso: f64) -> Result<f64> {
    let den = g2c - g2iso;
    if den == 0.0 || !den.is_finite() {
        return Err(Error::DegenerateKurtosis);
    }
    Ok((g2q - g2iso) / den)
}

/// `p·classical + (1-p)·iso`, bin by bin.
pub fn ie_mixture(p: f64, classical: &DensityEstimate, iso: &DensityEstimate) -> Result<DensityEstimate> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Config(format!("mixture weight {p} outside [0, 1]")));
    }
    if classical.edges() != iso.edges() {
        return Err(Error::MismatchedEdges);
    }
    let masses = classical.masses().iter().zip(iso.masses()).map(|(c, i)| p * c + (1.0 - p) * i).collect();
    DensityEstimate::new(classical.edges().to_vec(), masses)
}

/// Classification of the `(odd, even, odd, even)` bond 4-tuples in the departing word.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TermCounts {
    /// Both odd bonds distinct and both even bonds distinct.
    pub four: u64,
    /// Exactly one of the two pairs repeats.
    pub three: u64,
    /// Both pairs repeat on non-adjacent bonds.
    pub two_not_entangled: u64,
    /// Both pairs repeat on adjacent bonds.
    pub two_entangled: u64,
}

impl TermCounts {
    pub fn total(&self) -> u64 {
        self.four + self.three + self.two_not_entangled + self.two_entangled
    }
}

pub fn term_counts(n_sites: usize) -> Result<TermCounts> {
    if n_sites < 3 {
        return Err(Error::InvalidChain(format!("need N >= 3, got {n_sites}")));
    }
    if n_sites % 2 == 1 {
        let k = ((n_sites - 1) / 2) as u64;
        Ok(TermCounts {
            four: k * k * (k - 1) * (k - 1),
            three: 2 * k * k * (k - 1),
            two_not_entangled: (k - 1) * (k - 1),
            two_entangled: 2 * k - 1,
        })
    } else {
        let k = (n_sites / 2) as u64;
        Ok(TermCounts {
            four: k * (k - 1) * (k - 1) * (k - 2),
            three: k * (k - 1) * (2 * k - 3),
            two_not_entangled: (k - 1) * (k - 2),
            two_entangled: 2 * (k - 1),
        })
    }
}

/// Eigenvalue moments of `W^† W`, `W` an `r x n` Gaussian matrix with
/// unit variance per real component; `β ∈ {1, 2}`.
pub fn wishart_moments(r: usize, n: usize, beta: f64) -> Result<LocalMoments> {
    check_beta(beta)?;
    if r == 0 || r > n {
        return Err(Error::InvalidRank { rank: r, max: n });
    }
    let (r, n) = (r as f64, n as f64);
    let (m3, m4) = if beta == 1.0 {
        (
            r * (n * n + 3.0 * n + 3.0 * r * n + 3.0 * r + r * r + 4.0),
            r * (6.0 * n * n
                + 21.0 * n
                + 6.0 * r * n * n
                + 17.0 * r * n
                + 21.0 * r
                + 6.0 * n * r * r
                + 6.0 * r * r
                + n.powi(3)
                + r.powi(3)
                + 20.0),
        )
    } else if beta == 2.0 {
        // Genus expansion of E Tr (G^† G)^j for standard complex G, scaled by 2^j.
        (
            8.0 * r * (r * r + n * n + 3.0 * r * n + 1.0),
            16.0 * r * (r.powi(3) + n.powi(3) + 6.0 * r * n * (r + n) + 5.0 * (r + n)),
        )
    } else {
        return Err(Error::UnsupportedBeta(beta));
    };
    Ok(LocalMoments {
        m1: beta * r,
        m2: beta * r * (beta * (r + n - 1.0) + 2.0),
        m3,
        m4,
        m11: beta * beta * r * (r - 1.0),
    })
}

/// Chain-level mean, variance, skewness and classical excess kurtosis for
/// real Wishart terms of rank `r` (the iso and quantum chains share the
/// first three).
pub fn wishart_chain_stats(n_sites: usize, d: usize, r: usize) -> MomentSummary {
    let (nn, n, r) = ((n_sites - 1) as f64, (d * d) as f64, r as f64);
    let mu = nn * r;
    let sigma2 = r * nn * (n + 1.0);
    let gamma1 = (n * n + 3.0 * n + 4.0) / ((n + 1.0).powf(1.5) * (r * nn).sqrt());
    let gamma2 = (n * n * (n + 6.0) - r * n * (n + 1.0) + 21.0 * n + 2.0 * r + 20.0) / (r * nn * (n + 1.0).powi(2));
    MomentSummary::from_central(mu, sigma2, gamma1 * sigma2.powf(1.5), (gamma2 + 3.0) * sigma2 * sigma2)
}

/// `(1/m) E Tr(AQBQ^†)^2` by counting index collisions of a β-Haar `Q`,
/// given chain-level `(m2, m11)` of `A` and of `B`.
pub fn appendix_iso_expectation(a: (f64, f64), b: (f64, f64), m: f64, beta: f64) -> f64 {
    let ((m2a, m11a), (m2b, m11b)) = (a, b);
    ((beta + 2.0) * m2a * m2b + beta * (m - 1.0) * (m2b * m11a + m2a * m11b - m11a * m11b)) / (m * beta + 2.0)
}

/// Pooled spectra of `Σ_l Q_l M_l Q_l^†` with independent Haar `Q_l` per trial.
pub fn iso_multi<T: Field>(terms: &[DMatrix<T>], trials: u64, rng: &StreamRng) -> Result<EmpiricalMeasure> {
    let first = terms.first().ok_or(Error::EmptyMeasure)?;
    let m = first.nrows();
    if let Some(t) = terms.iter().find(|t| t.nrows() != m || !t.is_square()) {
        return Err(Error::InvalidDimension(format!("term of shape {}x{}, expected {m}x{m}", t.nrows(), t.ncols())));
    }
    if trials == 0 {
        return Err(Error::Config("need at least one trial".into()));
    }
    let spectra: Vec<Vec<f64>> = terms.iter().map(linalg::eigenvalues).collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(trials as usize * m);
    run_trials(
        trials,
        rng,
        |_, r| {
            let mut h = DMatrix::<T>::zeros(m, m);
            for lambda in &spectra {
                let q = haar::<T, _>(m, r)?.into_matrix();
                h += linalg::conjugate_diag(&q, lambda);
            }
            linalg::into_eigenvalues(h)
        },
        |_, v| {
            out.extend(v);
            Ok(())
        },
    )?;
    EmpiricalMeasure::from_values(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn haar_q4_values() {
        assert_eq!(haar_q4(2.0, 1.0), 3.0 / 8.0);
        assert_eq!(haar_q4(4.0, 2.0), 0.1);
        assert_eq!(haar_q4(1.0, 1.0), 1.0);
        assert_eq!(haar_q4(1.0, 4.0), 1.0);
        assert!((haar_gap_factor(1e12, 1.0) - 1.0).abs() < 1e-11);
        assert_eq!(haar_gap_factor(f64::INFINITY, 2.0), 1.0);
    }

    #[test]
    fn dims_table() {
        let d = SliderDims::new(5, 2, 1.0).unwrap();
        assert_eq!((d.k(), d.n, d.m, d.t_odd), (2, 4.0, 32.0, 2.0));
        assert_eq!(d.t_odd * d.n.powi(d.k_odd as i32), d.m);
        let e = SliderDims::new(6, 3, 2.0).unwrap();
        assert_eq!((e.k_odd, e.k_even, e.t_odd, e.t_even), (3, 2, 1.0, 9.0));
        assert_eq!(e.t_odd * e.n.powi(3), e.m);
        assert_eq!(e.t_even * e.n.powi(2), e.m);
        assert!(SliderDims::new(2, 2, 1.0).is_err());
        assert!(SliderDims::new(3, 1, 1.0).is_err());
        assert!(SliderDims::new(3, 2, 0.5).is_err());
    }

    #[test]
    fn chain_moments_wishart_n3() {
        let w = wishart_moments(4, 4, 1.0).unwrap();
        let dims = SliderDims::new(3, 2, 1.0).unwrap();
        assert_eq!(chain_m2(&w, &dims, Side::Odd), 36.0);
        assert!(close(chain_m11(&w, &dims, Side::Odd).unwrap(), 108.0 / 7.0, 1e-14));
    }

    #[test]
    fn constant_spectrum_has_no_spread() {
        let one = LocalMoments { m1: 1.0, m2: 1.0, m3: 1.0, m4: 1.0, m11: 1.0 };
        for n in [3, 4, 5, 6, 7] {
            let dims = SliderDims::new(n, 2, 1.0).unwrap();
            for side in [Side::Odd, Side::Even] {
                let k = dims.side(side).0 as f64;
                assert!(close(chain_m2(&one, &dims, side), k * k, 1e-14));
                assert!(close(chain_m11(&one, &dims, side).unwrap(), k * k, 1e-12));
            }
            assert_eq!(iso_gap(&one, &one, &dims), 0.0);
            assert_eq!(quantum_gap(&one, &one, &dims), 0.0);
        }
    }

    proptest! {
        #[test]
        fn spread_identity(
            n_sites in 3usize..12, d in 2usize..4, beta in prop::sample::select(vec![1.0, 2.0, 4.0]),
            m1 in -3.0f64..3.0, m2 in 0.0f64..20.0, m11 in -5.0f64..5.0,
        ) {
            let local = LocalMoments { m1, m2, m3: 0.0, m4: 0.0, m11 };
            let dims = SliderDims::new(n_sites, d, beta).unwrap();
            for side in [Side::Odd, Side::Even] {
                let (k, t) = dims.side(side);
                let lhs = chain_m2(&local, &dims, side) - chain_m11(&local, &dims, side).unwrap();
                let k = k as f64;
                let rhs = t * k * (dims.n - 1.0) * dims.n.powf(k - 1.0) / (dims.m - 1.0) * (m2 - m11);
                let scale = chain_m2(&local, &dims, side).abs() + chain_m11(&local, &dims, side).unwrap().abs() + 1.0;
                prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
                prop_assert!((chain_spread(&local, &dims, side) - rhs).abs() <= 1e-12 * scale);
            }
        }

        #[test]
        fn slider_bounds(k in 1usize..=10, d in 2usize..=6, beta in prop::sample::select(vec![1.0, 2.0, 4.0])) {
            let r = p_universal(2 * k + 1, d, beta).unwrap();
            prop_assert!((0.0..=1.0).contains(&r.p));
            prop_assert!((r.p + r.one_minus_p - 1.0).abs() <= 1e-14);
        }

        #[test]
        fn frobenius_ordering(d in 1usize..=50, beta in prop::sample::select(vec![1.0, 2.0, 4.0])) {
            prop_assert!(frob_uv_quantum(d, beta) <= frob_uv_classical(d, beta) + 1e-15);
        }

        #[test]
        fn counts_sum(n_sites in 3usize..=41) {
            let c = term_counts(n_sites).unwrap();
            let total = if n_sites % 2 == 1 {
                let k = ((n_sites - 1) / 2) as u64;
                k.pow(4)
            } else {
                let k = (n_sites / 2) as u64;
                (k * (k - 1)).pow(2)
            };
            prop_assert_eq!(c.total(), total);
            prop_assert_eq!(c.two_entangled, (n_sites - 2) as u64);
        }

        #[test]
        fn wishart_beta_one_specialization(r in 1usize..=12, extra in 0usize..=8) {
            let n = r + extra;
            let w = wishart_moments(r, n, 1.0).unwrap();
            let (r, n) = (r as f64, n as f64);
            prop_assert!(close(w.m1, r, 1e-14));
            prop_assert!(close(w.m2, r * (r + n + 1.0), 1e-14));
            prop_assert!(close(w.m3, r * (n * n + 3.0 * n + 3.0 * r * n + 3.0 * r + r * r + 4.0), 1e-13));
            let m4 = r * (6.0 * n * n + 21.0 * n + 6.0 * r * n * n + 17.0 * r * n + 21.0 * r + 6.0 * n * r * r
                + 6.0 * r * r + n.powi(3) + r.powi(3) + 20.0);
            prop_assert!(close(w.m4, m4, 1e-13));
            prop_assert!(close(w.m11, r * (r - 1.0), 1e-14));
        }

        #[test]
        fn appendix_matches_main_path(
            m2a in 0.0f64..50.0, m11a in -10.0f64..10.0, m2b in 0.0f64..50.0, m11b in -10.0f64..10.0,
            m in 2.0f64..1e4, beta in 1.0f64..6.0,
        ) {
            let v = appendix_iso_expectation((m2a, m11a), (m2b, m11b), m, beta);
            let gap = beta * (m - 1.0) / (m * beta + 2.0) * (m2a - m11a) * (m2b - m11b);
            let scale = m2a * m2b + gap.abs() + 1.0;
            prop_assert!((m2a * m2b - v - gap).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn frobenius_values() {
        assert_eq!(frob_uv_classical(1, 2.0), 1.0);
        assert!(close(frob_uv_quantum(1, 1.0), 1.0, 1e-15));
        assert!(close(frob_uv_quantum(1, 2.0), 1.0, 1e-15));
        assert!(close(frob_uv_quantum(2, 1.0), 7.0 / 24.0, 1e-15));
    }

    #[test]
    fn closed_form_values() {
        assert!((p_universal(5, 2, 1.0).unwrap().one_minus_p - 2635.0 / 4608.0).abs() < 1e-15);
        assert!((p_universal(5, 2, 2.0).unwrap().one_minus_p - 0.639375).abs() < 1e-6);
        let r3 = p_universal(3, 2, 1.0).unwrap();
        assert!((r3.one_minus_p - 175.0 / 216.0).abs() < 1e-15);
        assert!((r3.p - 41.0 / 216.0).abs() < 1e-15);
        assert!((p_universal(3, 10_000, 1.0).unwrap().one_minus_p - 1.0).abs() < 1e-3);
        assert!(matches!(p_universal(4, 2, 1.0), Err(Error::EvenChain(4))));
        assert!(p_universal(1, 2, 1.0).is_err());
    }

    #[test]
    fn table_ratio_cross_check() {
        assert!(close((0.960 - 0.660) / (0.960 - 516.0 / 875.0), 175.0 / 216.0, 1e-12));
    }

    #[test]
    fn gap_ratio_equals_closed_form() {
        for beta in [1.0, 2.0] {
            for d in [2, 3] {
                for k in [1, 2, 3] {
                    let n = 2 * k + 1;
                    let closed = p_universal(n, d, beta).unwrap();
                    let ratio = p_gap_ratio(n, d, beta).unwrap();
                    assert!((closed.one_minus_p - ratio.one_minus_p).abs() < 1e-12, "{n} {d} {beta}");
                    assert!((closed.gap_quantum / closed.gap_iso - closed.one_minus_p).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn odd_iso_gap_closed_form() {
        let w = wishart_moments(3, 4, 1.0).unwrap();
        for n_sites in [3, 5, 7, 9] {
            let dims = SliderDims::new(n_sites, 2, 1.0).unwrap();
            let (k, n, m) = (dims.k() as f64, dims.n, dims.m);
            let expected =
                w.spread().powi(2) * (k * m * (n - 1.0) / (n * (m - 1.0))).powi(2) * (1.0 - m * haar_q4(m, 1.0));
            assert!(close(iso_gap(&w, &w, &dims), expected, 1e-13));
        }
    }

    #[test]
    fn wishart_table_kurtoses() {
        let w = wishart_moments(4, 4, 1.0).unwrap();
        let cases = [
            (3, 0.960, 516.0 / 875.0, 0.660),
            (5, 0.48, 228.0 / 2635.0, 0.255),
            (9, 0.24, -539142.0 / 3283175.0, 0.10875),
        ];
        for (n_sites, gc, gi, gq) in cases {
            let dims = SliderDims::new(n_sites, 2, 1.0).unwrap();
            let s = slider_for_moments(&w, &w, &dims).unwrap();
            assert!((s.gamma2_classical.unwrap() - gc).abs() < 1e-12, "{n_sites}");
            assert!((s.gamma2_iso.unwrap() - gi).abs() < 1e-12, "{n_sites} {:?}", s.gamma2_iso);
            assert!((s.gamma2_quantum.unwrap() - gq).abs() < 1e-12, "{n_sites} {:?}", s.gamma2_quantum);
            let mix = s.p * s.gamma2_classical.unwrap() + s.one_minus_p * s.gamma2_iso.unwrap();
            assert!((mix - s.gamma2_quantum.unwrap()).abs() < 1e-10);
            let c = wishart_chain_stats(n_sites, 2, 4);
            assert!((c.gamma2.unwrap() - gc).abs() < 1e-12);
        }
        let n3 = slider_for_moments(&w, &w, &SliderDims::new(3, 2, 1.0).unwrap()).unwrap();
        assert!((n3.gamma2_iso.unwrap() - 516.0 / 875.0).abs() < 1e-12);
        assert!((n3.gamma2_classical.unwrap() - n3.gamma2_quantum.unwrap() - 0.30).abs() < 1e-12);
    }

    #[test]
    fn kurtosis_gap_r3() {
        let w = wishart_moments(3, 4, 1.0).unwrap();
        let dims = SliderDims::new(5, 2, 1.0).unwrap();
        let s = slider_for_moments(&w, &w, &dims).unwrap();
        let diff = s.gamma2_classical.unwrap() - s.gamma2_iso.unwrap();
        assert!((diff - 0.39347).abs() < 5e-6, "{diff}");
        let sigma2 = 4.0 * w.kappa2();
        assert!((2.0 * iso_gap(&w, &w, &dims) / (sigma2 * sigma2) - diff).abs() < 1e-14);
    }

    #[test]
    fn chain_stats_values() {
        let s = wishart_chain_stats(3, 2, 4);
        assert_eq!((s.mu, s.sigma2), (8.0, 40.0));
        assert!((s.gamma1.unwrap() - 1.01192).abs() < 1e-5);
        assert!((s.gamma2.unwrap() - 0.96).abs() < 1e-12);
        let s = wishart_chain_stats(5, 2, 4);
        assert_eq!((s.mu, s.sigma2), (16.0, 80.0));
        assert!((s.gamma1.unwrap() - 0.716).abs() < 1e-3);
        assert!((s.gamma2.unwrap() - 0.48).abs() < 1e-12);
        assert!((wishart_chain_stats(11, 2, 4).gamma2.unwrap() - 0.192).abs() < 1e-12);
    }

    #[test]
    fn cumulant_route_matches_chain_closed_forms() {
        for (n_sites, d, r) in [(3, 2, 1), (5, 2, 3), (7, 3, 5), (4, 2, 2)] {
            let w = wishart_moments(r, d * d, 1.0).unwrap();
            let dims = SliderDims::new(n_sites, d, 1.0).unwrap();
            let s = slider_for_moments(&w, &w, &dims).unwrap();
            let c = wishart_chain_stats(n_sites, d, r);
            assert!(close(s.gamma2_classical.unwrap(), c.gamma2.unwrap(), 1e-12));
            let nn = (n_sites - 1) as f64;
            assert!(close(nn * w.kappa2(), c.sigma2, 1e-14));
        }
    }

    #[test]
    fn wishart_small_cases() {
        let w = wishart_moments(4, 4, 1.0).unwrap();
        assert_eq!((w.m1, w.m2, w.m11), (4.0, 36.0, 12.0));
        assert_eq!(wishart_moments(1, 4, 1.0).unwrap().m11, 0.0);
        assert_eq!(wishart_moments(3, 4, 2.0).unwrap().m1, 6.0);
        assert!(wishart_moments(3, 4, 4.0).is_err());
        assert!(wishart_moments(5, 4, 1.0).is_err());
    }

    #[test]
    fn local_moment_constructors() {
        let pm = LocalMoments::fixed_spectrum(&[1.0, 1.0, -1.0, -1.0]).unwrap();
        assert_eq!((pm.m1, pm.m2, pm.m11), (0.0, 1.0, -1.0 / 3.0));
        assert_eq!(LocalMoments::pm1().m11, 0.0);
        assert_eq!(LocalMoments::goe(4, 1.0).unwrap().m2, 2.5);
        assert!(LocalMoments::goe(4, 4.0).is_err());
    }

    #[test]
    fn p_from_kurtoses_cases() {
        assert!((p_from_kurtoses(0.660, 0.960, 0.590).unwrap() - 0.189_189_189_189).abs() < 1e-9);
        assert_eq!(p_from_kurtoses(0.96, 0.96, 0.59).unwrap(), 1.0);
        assert_eq!(p_from_kurtoses(0.59, 0.96, 0.59).unwrap(), 0.0);
        assert!(matches!(p_from_kurtoses(0.5, 0.7, 0.7), Err(Error::DegenerateKurtosis)));
    }

    #[test]
    fn mixture_endpoints() {
        let c = DensityEstimate::new(vec![0.0, 1.0, 2.0], vec![0.25, 0.75]).unwrap();
        let i = DensityEstimate::new(vec![0.0, 1.0, 2.0], vec![0.5, 0.5]).unwrap();
        assert_eq!(ie_mixture(1.0, &c, &i).unwrap(), c);
        assert_eq!(ie_mixture(0.0, &c, &i).unwrap(), i);
        let mid = ie_mixture(0.3, &c, &i).unwrap();
        assert!((mid.masses().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let other = DensityEstimate::new(vec![0.0, 1.5, 2.0], vec![0.5, 0.5]).unwrap();
        assert!(matches!(ie_mixture(0.5, &c, &other), Err(Error::MismatchedEdges)));
        assert!(ie_mixture(1.5, &c, &i).is_err());
    }

    #[test]
    fn term_count_values() {
        let t = |n| {
            let c = term_counts(n).unwrap();
            (c.four, c.three, c.two_not_entangled, c.two_entangled)
        };
        assert_eq!(t(3), (0, 0, 0, 1));
        assert_eq!(t(5), (4, 8, 1, 3));
        assert_eq!(t(6), (12, 18, 2, 4));
        assert!(term_counts(2).is_err());
    }

    #[test]
    fn thermodynamic_limit() {
        // N (1 - p) -> 80/27 for d = 2, beta = 1; it approaches from below,
        // so it is asymptotically flat rather than bounded by its N = 101 value.
        let c = |n: usize| n as f64 * p_universal(n, 2, 1.0).unwrap().one_minus_p;
        let (c101, c1001) = (c(101), c(1001));
        assert!(((c1001 - c101) / c101).abs() < 1e-3, "{c101} {c1001}");
        assert!(c1001 <= 80.0 / 27.0 && (c1001 - 80.0 / 27.0).abs() < 1e-3);
        assert!(p_universal(1001, 2, 1.0).unwrap().one_minus_p < 3.0 / 1001.0);
        let far = p_gap_ratio(4001, 2, 1.0).unwrap();
        assert!(far.one_minus_p.is_finite() && far.one_minus_p > 0.0);
    }

    #[test]
    fn beta_cancels_at_large_beta() {
        let a = p_universal(5, 2, 1e6).unwrap().p;
        let b = p_universal(5, 2, 1e7).unwrap().p;
        assert!((a - b).abs() <= 1e-6);
    }

    #[test]
    fn even_chain_limits() {
        let r = p_gap_ratio(4, 2, 1.0).unwrap();
        assert!((r.one_minus_p - 0.78125).abs() < 1e-14);
        for n in [4, 6, 8, 10, 20] {
            for d in 2..5 {
                let r = analytic_p(n, d, 2.0).unwrap();
                assert!((0.0..=1.0).contains(&r.p));
            }
        }
    }

    #[test]
    fn iso_multi_single_term_is_exact() {
        let h = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 0.5, 0.0, 0.5, -1.0]);
        let ev = linalg::eigenvalues(&h).unwrap();
        let out = iso_multi(&[h], 5, &StreamRng::new(1, 0)).unwrap();
        let expected: Vec<f64> = ev.iter().flat_map(|&x| [x; 5]).collect();
        for (a, b) in out.values().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
        let z = DMatrix::<f64>::zeros(4, 4);
        let atoms = iso_multi(&[z.clone(), z], 3, &StreamRng::new(1, 0)).unwrap();
        assert!(atoms.values().iter().all(|x| x.abs() < 1e-15));
        assert!(iso_multi(&[DMatrix::<f64>::zeros(2, 2), DMatrix::zeros(3, 3)], 1, &StreamRng::new(1, 0)).is_err());
    }
}
