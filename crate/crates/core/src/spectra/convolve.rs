use nalgebra::{Complex, DMatrix};

use super::engine::{run_joint, run_trials, RunOptions, Source, Sources};
use super::measure::EmpiricalMeasure;
use super::moments::Estimate;
use crate::chain::{self, ChainSpec};
use crate::error::{Error, Result};
use crate::field::{Beta, Field};
use crate::linalg;
use crate::matgen::haar;
use crate::rng::StreamRng;

/// Largest cross-sum support accepted by [`ClassicalMode::ExactCross`].
pub const EXACT_CROSS_LIMIT: u128 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassicalMode {
    /// All pairwise sums with product weights.
    ExactCross,
    /// One fresh uniform permutation per trial, contributing `a_i + b_π(i)` for every `i`.
    Mc { trials: u64 },
}

/// Distribution of `x + y` with `x ~ a`, `y ~ b` independent.
pub fn classical_convolve(
    a: &EmpiricalMeasure,
    b: &EmpiricalMeasure,
    mode: ClassicalMode,
    rng: &StreamRng,
) -> Result<EmpiricalMeasure> {
    match mode {
        ClassicalMode::ExactCross => {
            let size = a.len() as u128 * b.len() as u128;
            if size > EXACT_CROSS_LIMIT {
                return Err(Error::CrossSumTooLarge(size));
            }
            if a.is_uniform() && b.is_uniform() {
                let v = a.values().iter().flat_map(|x| b.values().iter().map(move |y| x + y)).collect();
                return EmpiricalMeasure::from_values(v);
            }
            let pairs = a.iter().flat_map(|(x, wx)| b.iter().map(move |(y, wy)| (x + y, wx * wy))).collect();
            EmpiricalMeasure::from_weighted(pairs)
        }
        ClassicalMode::Mc { trials } => {
            if !(a.is_uniform() && b.is_uniform()) || a.len() != b.len() {
                return Err(Error::Unsupported("permutation sampling needs two uniform measures of equal size".into()));
            }
            if trials == 0 {
                return Err(Error::Config("need at least one trial".into()));
            }
            let mut out = Vec::with_capacity(trials as usize * a.len());
            run_trials(
                trials,
                rng,
                |_, r| {
                    let p = chain::random_permutation(b.len(), r);
                    Ok(a.values().iter().zip(&p).map(|(x, &j)| x + b.values()[j]).collect::<Vec<f64>>())
                },
                |_, v| {
                    out.extend(v);
                    Ok(())
                },
            )?;
            EmpiricalMeasure::from_values(out)
        }
    }
}

/// Raw moments of the exact cross-sum of two equally weighted vectors,
/// from their power sums.
pub fn cross_raw_moments(a: &[f64], b: &[f64]) -> [f64; 4] {
    let power_means = |v: &[f64]| {
        let mut s = [1.0, 0.0, 0.0, 0.0, 0.0];
        for &x in v {
            let x2 = x * x;
            s[1] += x;
            s[2] += x2;
            s[3] += x2 * x;
            s[4] += x2 * x2;
        }
        let n = v.len() as f64;
        for p in &mut s[1..] {
            *p /= n;
        }
        s
    };
    let (pa, pb) = (power_means(a), power_means(b));
    const BINOM: [[f64; 5]; 5] = [
        [1.0, 0.0, 0.0, 0.0, 0.0],
        [1.0, 1.0, 0.0, 0.0, 0.0],
        [1.0, 2.0, 1.0, 0.0, 0.0],
        [1.0, 3.0, 3.0, 1.0, 0.0],
        [1.0, 4.0, 6.0, 4.0, 1.0],
    ];
    let mut out = [0.0; 4];
    for j in 1..=4 {
        out[j - 1] = (0..=j).map(|i| BINOM[j][i] * pa[i] * pb[j - i]).sum();
    }
    out
}

fn isotropic_trials<T: Field>(a: &[f64], b: &[f64], trials: u64, rng: &StreamRng) -> Result<Vec<f64>> {
    let m = a.len();
    let mut out = Vec::with_capacity(trials as usize * m);
    run_trials(
        trials,
        rng,
        |_, r| {
            let q = haar::<T, _>(m, r)?.into_matrix();
            let mut h = linalg::conjugate_diag(&q, b);
            for (i, &x) in a.iter().enumerate() {
                h[(i, i)] += T::from_real(x);
            }
            linalg::into_eigenvalues(h)
        },
        |_, v| {
            out.extend(v);
            Ok(())
        },
    )?;
    Ok(out)
}

/// Pooled spectra of `A + Q B Q^†` over `trials` independent Haar `Q`.
pub fn isotropic_convolve(a: &[f64], b: &[f64], beta: Beta, trials: u64, rng: &StreamRng) -> Result<EmpiricalMeasure> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    let cap = chain::default_max_dim();
    if a.len() > cap {
        return Err(Error::DimensionCap { dim: a.len() as u128, cap });
    }
    if trials == 0 {
        return Err(Error::Config("need at least one trial".into()));
    }
    let v = match beta {
        Beta::Real => isotropic_trials::<f64>(a, b, trials, rng)?,
        Beta::Complex => isotropic_trials::<Complex<f64>>(a, b, trials, rng)?,
    };
    EmpiricalMeasure::from_values(v)
}

/// Pooled samples of one source over freshly drawn chains.
pub fn sample_source(spec: &ChainSpec, source: Source, trials: u64, rng: &StreamRng) -> Result<EmpiricalMeasure> {
    let run = run_joint(spec, trials, rng, RunOptions { sources: Sources::only(source), keep_samples: true })?;
    run.source(source).and_then(|s| s.samples.clone()).ok_or(Error::EmptyMeasure)
}

/// Pooled exact spectra of freshly drawn chains.
pub fn quantum_spectrum(spec: &ChainSpec, trials: u64, rng: &StreamRng) -> Result<EmpiricalMeasure> {
    sample_source(spec, Source::Quantum, trials, rng)
}

/// A power of `A` or of the rotated `B` in a trace word.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Letter {
    A(u32),
    B(u32),
}

impl Letter {
    /// Parses words such as `"ABAB"` or `"A2B"`.
    pub fn parse_word(word: &str) -> Result<Vec<Letter>> {
        let mut out = vec![];
        let mut chars = word.chars().filter(|c| !c.is_whitespace()).peekable();
        while let Some(c) = chars.next() {
            let mut digits = String::new();
            while let Some(d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                digits.push(*d);
                chars.next();
            }
            let p: u32 = if digits.is_empty() {
                1
            } else {
                digits.parse().map_err(|_| Error::Config(format!("bad power in {word}")))?
            };
            if p == 0 {
                return Err(Error::Config("powers must be >= 1".into()));
            }
            out.push(match c {
                'A' | 'a' => Letter::A(p),
                'B' | 'b' => Letter::B(p),
                _ => return Err(Error::Config(format!("unknown letter {c:?} in {word}"))),
            });
        }
        if out.is_empty() {
            return Err(Error::Config("empty word".into()));
        }
        Ok(out)
    }
}

/// How `B` is rotated against `A`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rotation {
    Permutation,
    Haar,
    Quantum,
}

fn trace_trial<T: Field>(word: &[Letter], rotation: Rotation, spec: &ChainSpec, rng: &mut StreamRng) -> Result<f64> {
    let m = spec.dim();
    let terms = chain::sample_terms::<T, _>(spec, rng)?;
    let ab = chain::odd_even_diagonals(&terms, spec)?;
    let r: Option<DMatrix<T>> = match rotation {
        Rotation::Permutation => None,
        Rotation::Haar => Some(haar::<T, _>(m, rng)?.into_matrix()),
        Rotation::Quantum => Some(chain::quantum_rotation_from_terms(&terms, spec)?.into_matrix()),
    };
    let b = match rotation {
        Rotation::Permutation => {
            let p = chain::random_permutation(m, rng);
            p.iter().map(|&j| ab.b[j]).collect()
        }
        _ => ab.b.clone(),
    };
    let mut prod: Option<DMatrix<T>> = None;
    for &letter in word {
        let factor = match letter {
            Letter::A(p) => linalg::diag::<T>(&ab.a.iter().map(|x| x.powi(p as i32)).collect::<Vec<_>>()),
            Letter::B(q) => {
                let bq: Vec<f64> = b.iter().map(|x| x.powi(q as i32)).collect();
                match &r {
                    None => linalg::diag::<T>(&bq),
                    Some(r) => linalg::conjugate_diag(r, &bq),
                }
            }
        };
        prod = Some(match prod {
            None => factor,
            Some(p) => p * factor,
        });
    }
    Ok(prod.map(|p| p.trace().real()).unwrap_or(0.0) / m as f64)
}

/// Monte Carlo estimate of `(1/m) E Tr(word)` with `B` conjugated by the chosen rotation.
pub fn mixed_trace_mc(
    word: &[Letter],
    rotation: Rotation,
    spec: &ChainSpec,
    trials: u64,
    rng: &StreamRng,
) -> Result<Estimate> {
    if word.is_empty() {
        return Err(Error::Config("empty word".into()));
    }
    if word.iter().any(|l| matches!(l, Letter::A(0) | Letter::B(0))) {
        return Err(Error::Config("powers must be >= 1".into()));
    }
    if trials < 2 {
        return Err(Error::Config("need at least two trials".into()));
    }
    if rotation == Rotation::Quantum && spec.n_sites() < 3 {
        return Err(Error::InvalidChain("Q_q needs N >= 3".into()));
    }
    let mut xs = Vec::with_capacity(trials as usize);
    let sink = |_, x| {
        xs.push(x);
        Ok(())
    };
    match spec.beta() {
        Beta::Real => run_trials(trials, rng, |_, r| trace_trial::<f64>(word, rotation, spec, r), sink)?,
        Beta::Complex => run_trials(trials, rng, |_, r| trace_trial::<Complex<f64>>(word, rotation, spec, r), sink)?,
    }
    Ok(Estimate::from_samples(&xs))
}
