//! Chain Hamiltonians: Kronecker embedding, odd/even split, `A`, `B` and `Q_q`.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Beta, Field};
use crate::linalg;
use crate::matgen::{Ensemble, LocalTerm};

pub const DEFAULT_MAX_DIM: usize = 4096;

/// Dense cap: `IE_MAX_DIM` if set to a positive integer, else [`DEFAULT_MAX_DIM`].
pub fn default_max_dim() -> usize {
    std::env::var("IE_MAX_DIM")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&v| v > 0)
        .unwrap_or(DEFAULT_MAX_DIM)
}

/// Open chain of `n_sites` sites of dimension `site_dim` with iid terms on
/// every window of `range` adjacent sites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    n_sites: usize,
    site_dim: usize,
    range: usize,
    beta: Beta,
    ensemble: Ensemble,
    max_dim: usize,
}

impl ChainSpec {
    /// Nearest-neighbour chain (`range = 2`) with the default dense cap.
    pub fn new(n_sites: usize, site_dim: usize, beta: Beta, ensemble: Ensemble) -> Result<Self> {
        Self::with_range(n_sites, site_dim, 2, beta, ensemble)
    }

    pub fn with_range(n_sites: usize, site_dim: usize, range: usize, beta: Beta, ensemble: Ensemble) -> Result<Self> {
        let spec = Self { n_sites, site_dim, range, beta, ensemble, max_dim: default_max_dim() };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_max_dim(mut self, max_dim: usize) -> Result<Self> {
        self.max_dim = max_dim;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if self.n_sites < 2 {
            return Err(Error::InvalidChain(format!("need N >= 2, got {}", self.n_sites)));
        }
        if self.site_dim < 2 {
            return Err(Error::InvalidChain(format!("need d >= 2, got {}", self.site_dim)));
        }
        if self.range < 2 || self.range > self.n_sites {
            return Err(Error::InvalidChain(format!("need 2 <= L <= N, got L = {}", self.range)));
        }
        let m = (self.site_dim as u128).checked_pow(self.n_sites as u32).unwrap_or(u128::MAX);
        if m > self.max_dim as u128 {
            return Err(Error::DimensionCap { dim: m, cap: self.max_dim });
        }
        self.ensemble.validate(self.local_dim())
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn site_dim(&self) -> usize {
        self.site_dim
    }

    pub fn range(&self) -> usize {
        self.range
    }

    pub fn beta(&self) -> Beta {
        self.beta
    }

    pub fn ensemble(&self) -> &Ensemble {
        &self.ensemble
    }

    pub fn max_dim(&self) -> usize {
        self.max_dim
    }

    /// `m = d^N`.
    pub fn dim(&self) -> usize {
        self.site_dim.pow(self.n_sites as u32)
    }

    /// `d^L`, the order of one local term (`n` when `L = 2`).
    pub fn local_dim(&self) -> usize {
        self.site_dim.pow(self.range as u32)
    }

    pub fn n_bonds(&self) -> usize {
        self.n_sites - self.range + 1
    }

    /// Number of odd bonds, the `k` of `A`.
    pub fn k_odd(&self) -> usize {
        self.n_sites / 2
    }

    /// Number of even bonds, the `k` of `B`.
    pub fn k_even(&self) -> usize {
        (self.n_sites - 1) / 2
    }

    fn require_pairs(&self) -> Result<()> {
        if self.range != 2 {
            return Err(Error::Unsupported(format!("odd/even split needs L = 2, got L = {}", self.range)));
        }
        Ok(())
    }
}

/// `H = H_odd + H_even` together with the local terms in bond order.
#[derive(Clone, Debug)]
pub struct Chain<T: Field> {
    pub h: DMatrix<T>,
    pub h_odd: DMatrix<T>,
    pub h_even: DMatrix<T>,
    pub terms: Vec<LocalTerm<T>>,
}

/// Diagonals of `A` (odd bonds) and `B` (even bonds) in the product eigenbasis.
#[derive(Clone, Debug, PartialEq)]
pub struct OddEvenDiagonals {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

/// `Q_q = (Q^(A))^† Q^(B)`.
#[derive(Clone, Debug)]
pub struct QuantumRotation<T: Field> {
    matrix: DMatrix<T>,
}

impl<T: Field> QuantumRotation<T> {
    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.matrix
    }
}

fn bond_padding(bond: usize, spec: &ChainSpec) -> Result<(usize, usize)> {
    let max = spec.n_bonds();
    if bond == 0 || bond > max {
        return Err(Error::BondOutOfRange { bond, max });
    }
    let d = spec.site_dim;
    Ok((d.pow(bond as u32 - 1), d.pow((spec.n_sites + 1 - bond - spec.range) as u32)))
}

/// `target += I_left ⊗ term ⊗ I_right`.
fn add_embedded<T: Field>(target: &mut DMatrix<T>, term: &DMatrix<T>, left: usize, right: usize) {
    let n = term.nrows();
    for l in 0..left {
        for q in 0..n {
            for p in 0..n {
                let v = term[(p, q)];
                if v == T::zero() {
                    continue;
                }
                for r in 0..right {
                    target[((l * n + p) * right + r, (l * n + q) * right + r)] += v;
                }
            }
        }
    }
}

/// `I_{d^(l-1)} ⊗ H ⊗ I_{d^(N-l-L+1)}` for 1-based bond `l`.
pub fn embed_local<T: Field>(term: &DMatrix<T>, bond: usize, spec: &ChainSpec) -> Result<DMatrix<T>> {
    if term.nrows() != spec.local_dim() || !term.is_square() {
        return Err(Error::InvalidDimension(format!(
            "local term is {}x{}, expected order {}",
            term.nrows(),
            term.ncols(),
            spec.local_dim()
        )));
    }
    let (left, right) = bond_padding(bond, spec)?;
    let m = spec.dim();
    let mut out = DMatrix::zeros(m, m);
    add_embedded(&mut out, term, left, right);
    Ok(out)
}

/// Draws `N - L + 1` decomposed terms in bond order.
pub fn sample_terms<T: Field, R: Rng + ?Sized>(spec: &ChainSpec, rng: &mut R) -> Result<Vec<LocalTerm<T>>> {
    check_beta::<T>(spec)?;
    (0..spec.n_bonds()).map(|_| spec.ensemble.sample(spec.local_dim(), rng)).collect()
}

fn check_beta<T: Field>(spec: &ChainSpec) -> Result<()> {
    if spec.beta != T::BETA {
        return Err(Error::Config(format!(
            "field has beta {} but the chain asks for {}",
            T::BETA.value(),
            spec.beta.value()
        )));
    }
    Ok(())
}

/// `Σ_l` of the embedded terms, for any range.
pub fn hamiltonian<T: Field>(terms: &[LocalTerm<T>], spec: &ChainSpec) -> Result<DMatrix<T>> {
    check_terms(terms, spec)?;
    let m = spec.dim();
    let mut h = DMatrix::zeros(m, m);
    for (i, t) in terms.iter().enumerate() {
        let (left, right) = bond_padding(i + 1, spec)?;
        add_embedded(&mut h, t.matrix(), left, right);
    }
    Ok(h)
}

fn check_terms<T: Field>(terms: &[LocalTerm<T>], spec: &ChainSpec) -> Result<()> {
    if terms.len() != spec.n_bonds() {
        return Err(Error::FactorCount { expected: spec.n_bonds(), got: terms.len() });
    }
    if let Some(t) = terms.iter().find(|t| t.dim() != spec.local_dim()) {
        return Err(Error::InvalidDimension(format!("local term of order {}, expected {}", t.dim(), spec.local_dim())));
    }
    Ok(())
}

/// Draws a nearest-neighbour chain and its odd/even parts.
pub fn assemble_chain<T: Field, R: Rng + ?Sized>(spec: &ChainSpec, rng: &mut R) -> Result<Chain<T>> {
    spec.require_pairs()?;
    let terms = sample_terms(spec, rng)?;
    let m = spec.dim();
    let mut h_odd = DMatrix::zeros(m, m);
    let mut h_even = DMatrix::zeros(m, m);
    for (i, t) in terms.iter().enumerate() {
        let bond = i + 1;
        let (left, right) = bond_padding(bond, spec)?;
        let part = if bond % 2 == 1 { &mut h_odd } else { &mut h_even };
        add_embedded(part, t.matrix(), left, right);
    }
    let h = &h_odd + &h_even;
    Ok(Chain { h, h_odd, h_even, terms })
}

fn add_embedded_diag(target: &mut [f64], lambda: &[f64], left: usize, right: usize) {
    let n = lambda.len();
    for l in 0..left {
        for (p, &v) in lambda.iter().enumerate() {
            let base = (l * n + p) * right;
            for x in &mut target[base..base + right] {
                *x += v;
            }
        }
    }
}

/// Sums of local eigenvalues on odd (`a`) and even (`b`) bonds.
pub fn odd_even_diagonals<T: Field>(terms: &[LocalTerm<T>], spec: &ChainSpec) -> Result<OddEvenDiagonals> {
    spec.require_pairs()?;
    check_terms(terms, spec)?;
    let m = spec.dim();
    let mut a = vec![0.0; m];
    let mut b = vec![0.0; m];
    for (i, t) in terms.iter().enumerate() {
        let bond = i + 1;
        let lambda =
            t.eigenvalues().ok_or_else(|| Error::Config("local terms must carry their eigendecomposition".into()))?;
        let (left, right) = bond_padding(bond, spec)?;
        add_embedded_diag(if bond % 2 == 1 { &mut a } else { &mut b }, lambda, left, right);
    }
    Ok(OddEvenDiagonals { a, b })
}

fn kron_all<T: Field>(factors: &[&DMatrix<T>]) -> DMatrix<T> {
    factors.iter().fold(DMatrix::identity(1, 1), |acc, f| acc.kronecker(*f))
}

/// Assembles `Q_q` from per-bond eigenvector factors given in bond order.
///
/// Odd N: `Q^(A) = [⊗ Q_odd] ⊗ I_d`, `Q^(B) = I_d ⊗ [⊗ Q_even]`.
/// Even N: `Q^(A) = ⊗ Q_odd`, `Q^(B) = I_d ⊗ [⊗ Q_even] ⊗ I_d`.
/// With these factors `H` is unitarily equivalent to `A + Q_q B Q_q^†`.
pub fn build_quantum_rotation<T: Field>(factors: &[&DMatrix<T>], spec: &ChainSpec) -> Result<QuantumRotation<T>> {
    spec.require_pairs()?;
    if spec.n_sites < 3 {
        return Err(Error::InvalidChain("Q_q needs N >= 3".into()));
    }
    if factors.len() != spec.n_bonds() {
        return Err(Error::FactorCount { expected: spec.n_bonds(), got: factors.len() });
    }
    let n = spec.local_dim();
    if let Some(f) = factors.iter().find(|f| f.nrows() != n || f.ncols() != n) {
        return Err(Error::InvalidDimension(format!("factor is {}x{}, expected {n}x{n}", f.nrows(), f.ncols())));
    }
    let id = DMatrix::<T>::identity(spec.site_dim, spec.site_dim);
    let mut qa: Vec<&DMatrix<T>> = factors.iter().step_by(2).copied().collect();
    let mut qb: Vec<&DMatrix<T>> = vec![&id];
    qb.extend(factors.iter().skip(1).step_by(2).copied());
    if spec.n_sites % 2 == 1 {
        qa.push(&id);
    } else {
        qb.push(&id);
    }
    let matrix = kron_all(&qa).adjoint() * kron_all(&qb);
    Ok(QuantumRotation { matrix })
}

/// `Q_q` from the eigenvectors of decomposed local terms.
pub fn quantum_rotation_from_terms<T: Field>(terms: &[LocalTerm<T>], spec: &ChainSpec) -> Result<QuantumRotation<T>> {
    let factors: Vec<&DMatrix<T>> = terms
        .iter()
        .map(|t| t.eigenvectors().ok_or_else(|| Error::Config("local terms must carry eigenvectors".into())))
        .collect::<Result<_>>()?;
    build_quantum_rotation(&factors, spec)
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn exact_spectrum<T: Field>(h: &DMatrix<T>) -> Result<Vec<f64>> {
    linalg::eigenvalues(h)
}

/// Uniform permutation of `0..m` by Fisher-Yates.
pub fn random_permutation<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Vec<usize> {
    let mut p: Vec<usize> = (0..m).collect();
    p.shuffle(rng);
    p
}
