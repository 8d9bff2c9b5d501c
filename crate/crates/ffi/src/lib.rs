//! C ABI over `iemix`.
//!
//! Every function returns an [`IemixStatus`]; on failure the message is
//! available from [`iemix_last_error`] on the same thread. Run handles are
//! opaque and must be released with [`iemix_run_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use iemix::chain::ChainSpec;
use iemix::field::Beta;
use iemix::matgen::Ensemble;
use iemix::rng::StreamRng;
use iemix::slider::{self, LocalMoments, SliderDims};
use iemix::spectra::{run_joint, JointRun, RunOptions, Source, Sources};
use iemix::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IemixStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    CapExceeded = 3,
    Numerical = 4,
    NotReady = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IemixEnsemble {
    Wishart = 0,
    Goe = 1,
    Pm1 = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IemixSource {
    Classical = 0,
    Iso = 1,
    Quantum = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IemixSlider {
    pub p: f64,
    pub one_minus_p: f64,
    pub k: usize,
    pub n: f64,
    pub m: f64,
}

/// Excess kurtoses of the three convolutions; the mixture weight reproduces the quantum one.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IemixKurtoses {
    pub p: f64,
    pub classical: f64,
    pub iso: f64,
    pub quantum: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IemixRunConfig {
    pub ensemble: IemixEnsemble,
    /// Wishart rank; ignored otherwise.
    pub rank: usize,
    pub n_sites: usize,
    pub d: usize,
    /// 1 or 2.
    pub beta: f64,
    pub trials: u64,
    pub seed: u64,
    /// Nonzero keeps every eigenvalue for [`iemix_run_spectrum`].
    pub keep_samples: i32,
}

/// `gamma1`/`gamma2` are NaN when the variance vanishes.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IemixMoments {
    pub mu: f64,
    pub sigma2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub trials: u64,
}

/// Opaque run handle.
pub struct IemixRun {
    spec: ChainSpec,
    trials: u64,
    seed: u64,
    keep_samples: bool,
    result: Option<JointRun>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> IemixStatus {
    match e {
        Error::DimensionCap { .. } | Error::CrossSumTooLarge(_) => IemixStatus::CapExceeded,
        Error::EigenFailure | Error::NotHermitian { .. } | Error::DegenerateKurtosis => IemixStatus::Numerical,
        _ => IemixStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (IemixStatus, String)>) -> IemixStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => IemixStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            IemixStatus::Panic
        }
    }
}

fn lift<T>(r: iemix::Result<T>) -> Result<T, (IemixStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (IemixStatus, String) {
    (IemixStatus::NullPointer, format!("{what} is null"))
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length excluding the NUL,
/// or 0 when there is no error.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn iemix_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Analytic mixture weight for an `n_sites` chain of `d`-level sites.
///
/// # Safety
/// `out` must be null or point to writable memory for one [`IemixSlider`].
#[no_mangle]
pub unsafe extern "C" fn iemix_slider(n_sites: usize, d: usize, beta: f64, out: *mut IemixSlider) -> IemixStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let dims = lift(SliderDims::new(n_sites, d, beta))?;
        let r = lift(slider::analytic_p(n_sites, d, beta))?;
        *out = IemixSlider { p: r.p, one_minus_p: r.one_minus_p, k: dims.k(), n: dims.n, m: dims.m };
        Ok(())
    })
}

/// Theoretical kurtoses for real or complex Wishart terms of rank `rank`.
///
/// # Safety
/// `out` must be null or point to writable memory for one [`IemixKurtoses`].
#[no_mangle]
pub unsafe extern "C" fn iemix_wishart_kurtoses(
    n_sites: usize,
    d: usize,
    rank: usize,
    beta: f64,
    out: *mut IemixKurtoses,
) -> IemixStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let w = lift(LocalMoments::for_ensemble(&Ensemble::Wishart { rank }, d * d, beta))?;
        let s = lift(slider::slider_for_moments(&w, &w, &lift(SliderDims::new(n_sites, d, beta))?))?;
        let nan = f64::NAN;
        *out = IemixKurtoses {
            p: s.p,
            classical: s.gamma2_classical.unwrap_or(nan),
            iso: s.gamma2_iso.unwrap_or(nan),
            quantum: s.gamma2_quantum.unwrap_or(nan),
        };
        Ok(())
    })
}

/// Validates `config` and allocates a handle; no sampling happens yet.
///
/// # Safety
/// `config` must be null or valid; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn iemix_run_new(config: *const IemixRunConfig, out: *mut *mut IemixRun) -> IemixStatus {
    guard(|| {
        let cfg = config.as_ref().ok_or_else(|| null("config"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = ptr::null_mut();
        if cfg.trials == 0 {
            return Err((IemixStatus::InvalidArgument, "need at least one trial".into()));
        }
        let ensemble = match cfg.ensemble {
            IemixEnsemble::Wishart => Ensemble::Wishart { rank: cfg.rank },
            IemixEnsemble::Goe => Ensemble::Goe,
            IemixEnsemble::Pm1 => Ensemble::Pm1,
        };
        let beta = lift(Beta::try_from(cfg.beta))?;
        let spec = lift(ChainSpec::new(cfg.n_sites, cfg.d, beta, ensemble))?;
        let run =
            IemixRun { spec, trials: cfg.trials, seed: cfg.seed, keep_samples: cfg.keep_samples != 0, result: None };
        *out = Box::into_raw(Box::new(run));
        Ok(())
    })
}

/// Samples all three sources. Calling it again resamples with the same seed.
///
/// # Safety
/// `run` must be null or a live handle from [`iemix_run_new`].
#[no_mangle]
pub unsafe extern "C" fn iemix_run_execute(run: *mut IemixRun) -> IemixStatus {
    guard(|| {
        let run = run.as_mut().ok_or_else(|| null("run"))?;
        let opts = RunOptions { sources: Sources::ALL, keep_samples: run.keep_samples };
        run.result = Some(lift(run_joint(&run.spec, run.trials, &StreamRng::new(run.seed, 0), opts))?);
        Ok(())
    })
}

fn source(s: IemixSource) -> Source {
    match s {
        IemixSource::Classical => Source::Classical,
        IemixSource::Iso => Source::Iso,
        IemixSource::Quantum => Source::Quantum,
    }
}

fn executed(run: &IemixRun) -> Result<&JointRun, (IemixStatus, String)> {
    run.result.as_ref().ok_or((IemixStatus::NotReady, "run has not been executed".into()))
}

/// Pooled moments of one source.
///
/// # Safety
/// `run` must be null or a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn iemix_run_moments(
    run: *const IemixRun,
    which: IemixSource,
    out: *mut IemixMoments,
) -> IemixStatus {
    guard(|| {
        let run = run.as_ref().ok_or_else(|| null("run"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let r = executed(run)?;
        let s = r.source(source(which)).ok_or((IemixStatus::NotReady, "source not sampled".into()))?;
        let m = s.moments.summary();
        *out = IemixMoments {
            mu: m.mu,
            sigma2: m.sigma2,
            gamma1: m.gamma1.unwrap_or(f64::NAN),
            gamma2: m.gamma2.unwrap_or(f64::NAN),
            trials: r.trials,
        };
        Ok(())
    })
}

/// Empirical mixture weight and its jackknife standard error.
///
/// # Safety
/// `run` must be null or a live handle; `p` and `stderr` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn iemix_run_p_empirical(run: *const IemixRun, p: *mut f64, stderr: *mut f64) -> IemixStatus {
    guard(|| {
        let run = run.as_ref().ok_or_else(|| null("run"))?;
        let (p, stderr) = (p.as_mut().ok_or_else(|| null("p"))?, stderr.as_mut().ok_or_else(|| null("stderr"))?);
        let e = executed(run)?.p_empirical().ok_or((IemixStatus::Numerical, "kurtoses are degenerate".into()))?;
        *p = e.value;
        *stderr = e.stderr;
        Ok(())
    })
}

/// Sorted pooled eigenvalues of one source. Writes the count to `len`;
/// copies into `buf` when `buf` is non-null and `capacity` suffices.
///
/// # Safety
/// `run` must be null or a live handle; `buf` must be null or valid for
/// `capacity` doubles; `len` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn iemix_run_spectrum(
    run: *const IemixRun,
    which: IemixSource,
    buf: *mut f64,
    capacity: usize,
    len: *mut usize,
) -> IemixStatus {
    guard(|| {
        let run = run.as_ref().ok_or_else(|| null("run"))?;
        let len = len.as_mut().ok_or_else(|| null("len"))?;
        let samples = executed(run)?
            .source(source(which))
            .and_then(|s| s.samples.as_ref())
            .ok_or((IemixStatus::NotReady, "samples were not kept".into()))?;
        let v = samples.values();
        *len = v.len();
        if buf.is_null() {
            return Ok(());
        }
        if capacity < v.len() {
            return Err((IemixStatus::BufferTooSmall, format!("need {} doubles, have {capacity}", v.len())));
        }
        ptr::copy_nonoverlapping(v.as_ptr(), buf, v.len());
        Ok(())
    })
}

/// Releases a handle; null is a no-op.
///
/// # Safety
/// `run` must be null or a handle from [`iemix_run_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn iemix_run_free(run: *mut IemixRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}
