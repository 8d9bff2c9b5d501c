//! Spectral measures, moment statistics and the three convolution pipelines.

mod convolve;
mod engine;
mod gram_charlier;
mod ks;
mod measure;
mod moments;

pub use convolve::{
    classical_convolve, cross_raw_moments, isotropic_convolve, mixed_trace_mc, quantum_spectrum, sample_source,
    ClassicalMode, Letter, Rotation, EXACT_CROSS_LIMIT,
};
pub use engine::{run_joint, run_trials, JointRun, RunOptions, Source, SourceRun, Sources};
pub use gram_charlier::gram_charlier_density;
pub use ks::{ks_distance, Cdf};
pub use measure::{histogram, Bins, DensityEstimate, EmpiricalMeasure};
pub use moments::{jackknife, raw_moments, summarize, Estimate, MomentAccumulator, MomentSummary, JACKKNIFE_GROUPS};
