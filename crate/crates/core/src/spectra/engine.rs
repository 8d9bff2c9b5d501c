//! Joint trial loop: every trial draws one chain and feeds all requested
//! sources from the same `A` and `B`, so paired statistics share noise.

use nalgebra::{Complex, DMatrix};
use rayon::prelude::*;

use super::convolve::cross_raw_moments;
use super::measure::EmpiricalMeasure;
use super::moments::{jackknife, raw_moments, Estimate, MomentAccumulator};
use crate::chain::{self, ChainSpec};
use crate::error::{Error, Result};
use crate::field::{Beta, Field};
use crate::linalg;
use crate::matgen::haar;
use crate::rng::StreamRng;
use crate::slider::p_from_kurtoses;

const BATCH: u64 = 32;
const WAVE: u64 = 64;

/// Runs `work` for trials `0..trials` in parallel and hands the results to
/// `sink` in ascending trial order. Trial `t` uses `rng.trial(t)`.
pub fn run_trials<R, F, S>(trials: u64, rng: &StreamRng, work: F, mut sink: S) -> Result<()>
where
    R: Send,
    F: Fn(u64, &mut StreamRng) -> Result<R> + Sync,
    S: FnMut(u64, R) -> Result<()>,
{
    let n_batches = trials.div_ceil(BATCH);
    let mut b0 = 0;
    while b0 < n_batches {
        let b1 = (b0 + WAVE).min(n_batches);
        let wave: Vec<Result<Vec<R>>> = (b0..b1)
            .into_par_iter()
            .map(|b| (b * BATCH..((b + 1) * BATCH).min(trials)).map(|t| work(t, &mut rng.trial(t))).collect())
            .collect();
        for (i, batch) in wave.into_iter().enumerate() {
            let start = (b0 + i as u64) * BATCH;
            for (j, r) in batch?.into_iter().enumerate() {
                sink(start + j as u64, r)?;
            }
        }
        b0 = b1;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Source {
    Classical,
    Iso,
    Quantum,
}

impl Source {
    pub fn name(self) -> &'static str {
        match self {
            Source::Classical => "classical",
            Source::Iso => "iso",
            Source::Quantum => "quantum",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Sources {
    pub classical: bool,
    pub iso: bool,
    pub quantum: bool,
}

impl Sources {
    pub const ALL: Sources = Sources { classical: true, iso: true, quantum: true };

    pub fn only(source: Source) -> Self {
        Sources {
            classical: source == Source::Classical,
            iso: source == Source::Iso,
            quantum: source == Source::Quantum,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    pub sources: Sources,
    /// Keep every sampled eigenvalue (classical samples use one fresh permutation per trial).
    pub keep_samples: bool,
}

#[derive(Clone, Debug)]
pub struct SourceRun {
    /// Per-trial raw moments; the classical source uses the exact cross-sum of `a` and `b`.
    pub moments: MomentAccumulator,
    pub samples: Option<EmpiricalMeasure>,
}

#[derive(Clone, Debug)]
pub struct JointRun {
    pub trials: u64,
    pub classical: Option<SourceRun>,
    pub iso: Option<SourceRun>,
    pub quantum: Option<SourceRun>,
}

impl JointRun {
    pub fn source(&self, s: Source) -> Option<&SourceRun> {
        match s {
            Source::Classical => self.classical.as_ref(),
            Source::Iso => self.iso.as_ref(),
            Source::Quantum => self.quantum.as_ref(),
        }
    }

    /// Empirical `p` from the three pooled kurtoses.
    pub fn p_empirical(&self) -> Option<Estimate> {
        let (c, i, q) = (self.classical.as_ref()?, self.iso.as_ref()?, self.quantum.as_ref()?);
        jackknife(&[&q.moments, &c.moments, &i.moments], |s| {
            p_from_kurtoses(s[0].gamma2?, s[1].gamma2?, s[2].gamma2?).ok()
        })
    }

    /// Paired difference `γ₂(x) - γ₂(y)`.
    pub fn kurtosis_difference(&self, x: Source, y: Source) -> Option<Estimate> {
        let (a, b) = (self.source(x)?, self.source(y)?);
        jackknife(&[&a.moments, &b.moments], |s| Some(s[0].gamma2? - s[1].gamma2?))
    }
}

#[derive(Default)]
struct TrialOut {
    raw: [Option<[f64; 4]>; 3],
    samples: [Option<Vec<f64>>; 3],
}

fn trial<T: Field>(spec: &ChainSpec, opts: &RunOptions, rng: &mut StreamRng) -> Result<TrialOut> {
    let m = spec.dim();
    let terms = chain::sample_terms::<T, _>(spec, rng)?;
    let mut out = TrialOut::default();
    if spec.range() == 2 {
        let ab = chain::odd_even_diagonals(&terms, spec)?;
        let perm = chain::random_permutation(m, rng);
        if opts.sources.classical {
            out.raw[0] = Some(cross_raw_moments(&ab.a, &ab.b));
            if opts.keep_samples {
                out.samples[0] = Some(ab.a.iter().zip(&perm).map(|(x, &p)| x + ab.b[p]).collect());
            }
        }
        if opts.sources.iso {
            let q = haar::<T, _>(m, rng)?.into_matrix();
            let mut h = linalg::conjugate_diag(&q, &ab.b);
            for (i, &x) in ab.a.iter().enumerate() {
                h[(i, i)] += T::from_real(x);
            }
            let ev = linalg::into_eigenvalues(h)?;
            out.raw[1] = Some(raw_moments(&ev));
            if opts.keep_samples {
                out.samples[1] = Some(ev);
            }
        }
    } else if opts.sources.iso {
        // All-isotropic sum: each embedded term rotated by its own Haar matrix.
        let mut h = DMatrix::<T>::zeros(m, m);
        for (i, t) in terms.iter().enumerate() {
            let lambda = embedded_spectrum(t.eigenvalues().unwrap_or_default(), i + 1, spec);
            let q = haar::<T, _>(m, rng)?.into_matrix();
            h += linalg::conjugate_diag(&q, &lambda);
        }
        let ev = linalg::into_eigenvalues(h)?;
        out.raw[1] = Some(raw_moments(&ev));
        if opts.keep_samples {
            out.samples[1] = Some(ev);
        }
    }
    if opts.sources.quantum {
        let ev = linalg::into_eigenvalues(chain::hamiltonian(&terms, spec)?)?;
        out.raw[2] = Some(raw_moments(&ev));
        if opts.keep_samples {
            out.samples[2] = Some(ev);
        }
    }
    Ok(out)
}

/// Spectrum of `I ⊗ diag(lambda) ⊗ I` at 1-based `bond`.
pub(crate) fn embedded_spectrum(lambda: &[f64], bond: usize, spec: &ChainSpec) -> Vec<f64> {
    let d = spec.site_dim();
    let left = d.pow(bond as u32 - 1);
    let right = d.pow((spec.n_sites() + 1 - bond - spec.range()) as u32);
    let mut out = Vec::with_capacity(left * lambda.len() * right);
    for _ in 0..left {
        for &l in lambda {
            out.extend(std::iter::repeat_n(l, right));
        }
    }
    out
}

/// Draws `trials` chains and accumulates the requested sources.
pub fn run_joint(spec: &ChainSpec, trials: u64, rng: &StreamRng, opts: RunOptions) -> Result<JointRun> {
    if trials == 0 {
        return Err(Error::Config("need at least one trial".into()));
    }
    if opts.sources.classical && spec.range() != 2 {
        return Err(Error::Unsupported("the classical convolution needs L = 2".into()));
    }
    let wanted = [opts.sources.classical, opts.sources.iso, opts.sources.quantum];
    let mut accs: Vec<MomentAccumulator> = (0..3).map(|_| MomentAccumulator::new(trials)).collect();
    let mut pools: Vec<Vec<f64>> = vec![Vec::new(); 3];
    let sink = |t: u64, out: TrialOut| -> Result<()> {
        for (acc, raw) in accs.iter_mut().zip(out.raw) {
            if let Some(raw) = raw {
                acc.add(t, raw);
            }
        }
        for (s, v) in out.samples.into_iter().enumerate() {
            if let Some(v) = v {
                pools[s].extend(v);
            }
        }
        Ok(())
    };
    match spec.beta() {
        Beta::Real => run_trials(trials, rng, |_, r| trial::<f64>(spec, &opts, r), sink)?,
        Beta::Complex => run_trials(trials, rng, |_, r| trial::<Complex<f64>>(spec, &opts, r), sink)?,
    }
    let mut runs = accs
        .into_iter()
        .zip(pools)
        .zip(wanted)
        .map(|((moments, pool), want)| -> Result<Option<SourceRun>> {
            if !want {
                return Ok(None);
            }
            let samples = if opts.keep_samples { Some(EmpiricalMeasure::from_values(pool)?) } else { None };
            Ok(Some(SourceRun { moments, samples }))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter();
    Ok(JointRun {
        trials,
        classical: runs.next().flatten(),
        iso: runs.next().flatten(),
        quantum: runs.next().flatten(),
    })
}
