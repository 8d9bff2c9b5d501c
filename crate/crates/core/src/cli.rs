//! Experiment plumbing behind the `iemix` binary: run configs, CSV/JSON
//! artifacts and the table presets.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::chain::ChainSpec;
use crate::error::{Error, Result};
use crate::field::Beta;
use crate::matgen::Ensemble;
use crate::rng::StreamRng;
use crate::slider::{self, LocalMoments, SliderDims};
use crate::spectra::{
    gram_charlier_density, histogram, jackknife, ks_distance, run_joint, Bins, DensityEstimate, Estimate, JointRun,
    MomentAccumulator, MomentSummary, RunOptions, Source, Sources,
};

/// Local-term ensemble as named on the command line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnsembleConfig {
    Wishart {
        rank: usize,
    },
    Goe,
    /// iid `±1` eigenvalues.
    Pm1,
    /// Exactly half `+1`, half `-1`.
    Pm1Balanced,
    /// Eigenvalues read from a whitespace- or comma-separated file.
    Fixed {
        path: PathBuf,
    },
}

impl EnsembleConfig {
    pub fn resolve(&self, local_dim: usize) -> Result<Ensemble> {
        Ok(match self {
            EnsembleConfig::Wishart { rank } => Ensemble::Wishart { rank: *rank },
            EnsembleConfig::Goe => Ensemble::Goe,
            EnsembleConfig::Pm1 => Ensemble::Pm1,
            EnsembleConfig::Pm1Balanced => {
                if local_dim % 2 != 0 {
                    return Err(Error::InvalidDimension(format!(
                        "balanced ±1 needs an even local dimension, got {local_dim}"
                    )));
                }
                let mut ev = vec![-1.0; local_dim / 2];
                ev.resize(local_dim, 1.0);
                Ensemble::Fixed { eigenvalues: ev }
            }
            EnsembleConfig::Fixed { path } => Ensemble::Fixed { eigenvalues: read_spectrum(path)? },
        })
    }
}

pub fn read_spectrum(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|e| Error::Config(format!("{}: bad eigenvalue {s:?}: {e}", path.display()))))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub ensemble: EnsembleConfig,
    pub n_sites: usize,
    #[serde(default = "default_d")]
    pub d: usize,
    #[serde(default = "default_range")]
    pub range: usize,
    #[serde(default = "default_beta")]
    pub beta: f64,
    pub trials: u64,
    #[serde(default = "default_bins")]
    pub bins: Bins,
    #[serde(default)]
    pub seed: u64,
    pub out: PathBuf,
}

fn default_d() -> usize {
    2
}
fn default_range() -> usize {
    2
}
fn default_beta() -> f64 {
    1.0
}
fn default_bins() -> Bins {
    Bins::Auto
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    /// Validated chain; nothing large is allocated before this succeeds.
    pub fn chain_spec(&self) -> Result<ChainSpec> {
        if self.trials == 0 {
            return Err(Error::Config("need at least one trial".into()));
        }
        let beta = Beta::try_from(self.beta)?;
        let local = self
            .d
            .checked_pow(self.range as u32)
            .ok_or_else(|| Error::InvalidDimension(format!("d^L overflows for d = {}, L = {}", self.d, self.range)))?;
        let ensemble = self.ensemble.resolve(local)?;
        ChainSpec::with_range(self.n_sites, self.d, self.range, beta, ensemble)
    }
}

/// Mixture weight from theory, if the chain admits one (`L = 2`, `N >= 3`).
pub fn analytic_p(spec: &ChainSpec) -> Option<f64> {
    if spec.range() != 2 || spec.n_sites() < 3 {
        return None;
    }
    slider::analytic_p(spec.n_sites(), spec.site_dim(), spec.beta().value()).ok().map(|r| r.p)
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentRow {
    pub source: String,
    pub summary: MomentSummary,
    pub stderr: [Option<f64>; 4],
}

#[derive(Clone, Debug, Serialize)]
pub struct KsDistances {
    pub ie: Option<f64>,
    pub classical: Option<f64>,
    pub iso: Option<f64>,
    pub gram_charlier: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub p_analytic: Option<f64>,
    pub p_empirical: Option<Estimate>,
    pub ks_vs_quantum: KsDistances,
    pub trials: u64,
    pub seed: u64,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub summary: RunSummary,
    pub moments: Vec<MomentRow>,
    pub densities: Vec<(String, DensityEstimate)>,
}

fn stat(i: usize, s: &MomentSummary) -> Option<f64> {
    match i {
        0 => Some(s.mu),
        1 => Some(s.sigma2),
        2 => s.gamma1,
        _ => s.gamma2,
    }
}

fn stderrs(accs: &[&MomentAccumulator], combine: impl Fn(&[MomentSummary]) -> MomentSummary) -> [Option<f64>; 4] {
    std::array::from_fn(|i| jackknife(accs, |s| stat(i, &combine(s))).map(|e| e.stderr))
}

/// Moments of `p·x + (1-p)·y` from the raw moments of each.
fn mix_summary(p: f64, x: &MomentSummary, y: &MomentSummary) -> MomentSummary {
    let mix = |a: f64, b: f64| p * a + (1.0 - p) * b;
    MomentSummary::from_raw([mix(x.m1, y.m1), mix(x.m2, y.m2), mix(x.m3, y.m3), mix(x.m4, y.m4)])
}

pub fn moment_rows(run: &JointRun, p: Option<f64>) -> Vec<MomentRow> {
    let mut rows = Vec::new();
    for s in [Source::Classical, Source::Iso, Source::Quantum] {
        if let Some(r) = run.source(s) {
            rows.push(MomentRow {
                source: s.name().into(),
                summary: r.moments.summary(),
                stderr: stderrs(&[&r.moments], |v| v[0]),
            });
        }
    }
    if let (Some(p), Some(c), Some(i)) = (p, &run.classical, &run.iso) {
        rows.push(MomentRow {
            source: "ie".into(),
            summary: mix_summary(p, &c.moments.summary(), &i.moments.summary()),
            stderr: stderrs(&[&c.moments, &i.moments], |v| mix_summary(p, &v[0], &v[1])),
        });
    }
    rows
}

/// Runs one experiment and returns everything that would be written.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    let spec = cfg.chain_spec()?;
    let start = Instant::now();
    let sources = if spec.range() == 2 { Sources::ALL } else { Sources { classical: false, iso: true, quantum: true } };
    let rng = StreamRng::new(cfg.seed, 0);
    let run = run_joint(&spec, cfg.trials, &rng, RunOptions { sources, keep_samples: true })?;
    let p = analytic_p(&spec);

    let quantum = run.quantum.as_ref().and_then(|r| r.samples.as_ref()).ok_or(Error::EmptyMeasure)?;
    let edges = cfg.bins.edges_for(quantum)?;
    let fixed = Bins::Edges(edges.clone());
    let mut densities = Vec::new();
    for s in [Source::Classical, Source::Iso, Source::Quantum] {
        if let Some(samples) = run.source(s).and_then(|r| r.samples.as_ref()) {
            densities.push((s.name().to_string(), histogram(samples, &fixed)?));
        }
    }
    fn find(ds: &[(String, DensityEstimate)], name: &str) -> Option<DensityEstimate> {
        ds.iter().find(|(n, _)| n == name).map(|(_, d)| d.clone())
    }
    if let (Some(p), Some(c), Some(i)) = (p, find(&densities, "classical"), find(&densities, "iso")) {
        densities.push(("ie".into(), slider::ie_mixture(p, &c, &i)?));
    }
    let q_summary = run.quantum.as_ref().map(|r| r.moments.summary()).ok_or(Error::EmptyMeasure)?;
    if let Ok(gc) = gram_charlier_density(&q_summary, &edges) {
        densities.push(("gram_charlier".into(), gc));
    }

    let q_hist = find(&densities, "quantum").ok_or(Error::EmptyMeasure)?;
    let ks = |name: &str| find(&densities, name).map(|d| ks_distance(&d, &q_hist));
    let summary = RunSummary {
        p_analytic: p,
        p_empirical: run.p_empirical(),
        ks_vs_quantum: KsDistances {
            ie: ks("ie"),
            classical: ks("classical"),
            iso: ks("iso"),
            gram_charlier: ks("gram_charlier"),
        },
        trials: cfg.trials,
        seed: cfg.seed,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    Ok(RunReport { summary, moments: moment_rows(&run, p), densities })
}

/// Fixed 17-significant-digit rendering; empty for missing values.
pub fn fmt_num(x: Option<f64>) -> String {
    match x {
        Some(v) => format!("{v:.16e}"),
        None => String::new(),
    }
}

pub fn write_densities(path: &Path, densities: &[(String, DensityEstimate)]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
    w.write_record(["source", "bin_left", "bin_right", "mass"])?;
    for (name, d) in densities {
        for (j, m) in d.masses().iter().enumerate() {
            let e = d.edges();
            w.write_record([name.clone(), fmt_num(Some(e[j])), fmt_num(Some(e[j + 1])), fmt_num(Some(*m))])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_moments(path: &Path, rows: &[MomentRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
    w.write_record([
        "source",
        "mu",
        "sigma2",
        "gamma1",
        "gamma2",
        "mu_stderr",
        "sigma2_stderr",
        "gamma1_stderr",
        "gamma2_stderr",
    ])?;
    for r in rows {
        let mut rec = vec![r.source.clone()];
        rec.extend((0..4).map(|i| fmt_num(stat(i, &r.summary))));
        rec.extend(r.stderr.iter().map(|s| fmt_num(*s)));
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs and writes `densities.csv`, `moments.csv` and `summary.json` under `cfg.out`.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.chain_spec()?;
    fs::create_dir_all(&cfg.out)?;
    let report = run_experiment(cfg)?;
    write_densities(&cfg.out.join("densities.csv"), &report.densities)?;
    write_moments(&cfg.out.join("moments.csv"), &report.moments)?;
    let mut f = fs::File::create(cfg.out.join("summary.json"))?;
    serde_json::to_writer_pretty(&mut f, &report.summary)?;
    f.write_all(b"\n")?;
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SliderOutput {
    pub p: f64,
    pub one_minus_p: f64,
    pub k: usize,
    pub n: f64,
    pub m: f64,
}

pub fn cmd_slider(n_sites: usize, d: usize, beta: f64) -> Result<SliderOutput> {
    let dims = SliderDims::new(n_sites, d, beta)?;
    let r = slider::analytic_p(n_sites, d, beta)?;
    Ok(SliderOutput { p: r.p, one_minus_p: r.one_minus_p, k: dims.k(), n: dims.n, m: dims.m })
}

/// Table presets: `d = 2`, Wishart rank 4, `β = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableId {
    N3,
    N5,
    N7,
    N9,
    N11,
}

impl TableId {
    pub const ALL: [TableId; 5] = [TableId::N3, TableId::N5, TableId::N7, TableId::N9, TableId::N11];

    pub fn n_sites(self) -> usize {
        match self {
            TableId::N3 => 3,
            TableId::N5 => 5,
            TableId::N7 => 7,
            TableId::N9 => 9,
            TableId::N11 => 11,
        }
    }

    /// Trial counts sized for a few minutes on one core.
    pub fn default_trials(self) -> u64 {
        match self {
            TableId::N3 => 200_000,
            TableId::N5 => 100_000,
            TableId::N7 => 10_000,
            TableId::N9 => 1_000,
            TableId::N11 => 40,
        }
    }

    pub fn spec(self) -> Result<ChainSpec> {
        ChainSpec::new(self.n_sites(), 2, Beta::Real, Ensemble::Wishart { rank: 4 })
    }
}

impl std::str::FromStr for TableId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TableId::ALL
            .into_iter()
            .find(|t| format!("{t:?}").eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown table {s:?}; expected one of N3, N5, N7, N9, N11")))
    }
}

/// Theoretical `(μ, σ², γ₁, γ₂^iso, γ₂^q, γ₂^c)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TableTheory {
    pub mu: f64,
    pub sigma2: f64,
    pub gamma1: f64,
    pub gamma2_iso: f64,
    pub gamma2_quantum: f64,
    pub gamma2_classical: f64,
}

pub fn table_theory(id: TableId) -> Result<TableTheory> {
    let n = id.n_sites();
    let stats = slider::wishart_chain_stats(n, 2, 4);
    let w = LocalMoments::for_ensemble(&Ensemble::Wishart { rank: 4 }, 4, 1.0)?;
    let s = slider::slider_for_moments(&w, &w, &SliderDims::new(n, 2, 1.0)?)?;
    let missing = || Error::DegenerateKurtosis;
    Ok(TableTheory {
        mu: stats.mu,
        sigma2: stats.sigma2,
        gamma1: stats.gamma1.ok_or_else(missing)?,
        gamma2_iso: s.gamma2_iso.ok_or_else(missing)?,
        gamma2_quantum: s.gamma2_quantum.ok_or_else(missing)?,
        gamma2_classical: s.gamma2_classical.ok_or_else(missing)?,
    })
}

/// One line of the reproduction table.
#[derive(Clone, Debug, Serialize)]
pub struct TableCheck {
    pub name: String,
    pub theory: f64,
    pub empirical: Option<Estimate>,
    pub pass: bool,
}

/// Within three standard errors, with a 1e-8 relative floor for quantities
/// that are identical across trials up to rounding.
pub fn within_policy(e: &Estimate, target: f64) -> bool {
    (e.value - target).abs() <= 3.0 * e.stderr + 1e-8 * target.abs().max(e.value.abs())
}

#[derive(Clone, Debug, Serialize)]
pub struct TableReport {
    pub table: String,
    pub trials: u64,
    pub checks: Vec<TableCheck>,
}

impl TableReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn render(&self) -> String {
        let mut s = format!("table {} ({} trials)\n", self.table, self.trials);
        s += &format!("{:<18} {:>12} {:>12} {:>10}  status\n", "quantity", "theory", "empirical", "stderr");
        for c in &self.checks {
            match c.empirical {
                Some(e) => {
                    s += &format!(
                        "{:<18} {:>12.6} {:>12.6} {:>10.2e}  {}\n",
                        c.name,
                        c.theory,
                        e.value,
                        e.stderr,
                        if c.pass { "ok" } else { "FAIL" }
                    )
                }
                None => s += &format!("{:<18} {:>12.6}\n", c.name, c.theory),
            }
        }
        s
    }
}

/// Theory column, and the empirical column when `trials > 0`.
pub fn cmd_reproduce(id: TableId, trials: u64, seed: u64) -> Result<TableReport> {
    let th = table_theory(id)?;
    let run = if trials > 0 {
        Some(run_joint(
            &id.spec()?,
            trials,
            &StreamRng::new(seed, 0),
            RunOptions { sources: Sources::ALL, keep_samples: false },
        )?)
    } else {
        None
    };
    let mut checks = Vec::new();
    let mut push = |name: String, theory: f64, empirical: Option<Estimate>| {
        let pass = empirical.as_ref().is_none_or(|e| within_policy(e, theory));
        checks.push(TableCheck { name, theory, empirical, pass });
    };
    let est = |s: Source, i: usize| -> Option<Estimate> {
        let r = run.as_ref()?.source(s)?;
        jackknife(&[&r.moments], |v| stat(i, &v[0]))
    };
    for s in [Source::Classical, Source::Iso, Source::Quantum] {
        for (i, (name, theory)) in [("mu", th.mu), ("sigma2", th.sigma2), ("gamma1", th.gamma1)].into_iter().enumerate()
        {
            push(format!("{name} {}", s.name()), theory, est(s, i));
        }
    }
    push("gamma2 iso".into(), th.gamma2_iso, est(Source::Iso, 3));
    push("gamma2 quantum".into(), th.gamma2_quantum, est(Source::Quantum, 3));
    push("gamma2 classical".into(), th.gamma2_classical, est(Source::Classical, 3));
    Ok(TableReport { table: format!("{id:?}"), trials, checks })
}
