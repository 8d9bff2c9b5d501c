use serde::Serialize;

use super::measure::EmpiricalMeasure;

/// Population moments of a measure.
///
/// `gamma1` and `gamma2` are `None` when the variance vanishes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MomentSummary {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa3: f64,
    pub kappa4: f64,
    pub mu: f64,
    pub sigma2: f64,
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
}

impl MomentSummary {
    /// From the mean and central moments of orders 2..4.
    pub fn from_central(mean: f64, c2: f64, c3: f64, c4: f64) -> Self {
        let c2 = c2.max(0.0);
        let m1 = mean;
        let m2 = c2 + m1 * m1;
        let m3 = c3 + 3.0 * m1 * c2 + m1.powi(3);
        let m4 = c4 + 4.0 * m1 * c3 + 6.0 * m1 * m1 * c2 + m1.powi(4);
        let kappa4 = c4 - 3.0 * c2 * c2;
        let (gamma1, gamma2) =
            if c2 > 0.0 { (Some(c3 / c2.powf(1.5)), Some(kappa4 / (c2 * c2))) } else { (None, None) };
        Self { m1, m2, m3, m4, kappa1: m1, kappa2: c2, kappa3: c3, kappa4, mu: m1, sigma2: c2, gamma1, gamma2 }
    }

    /// From raw moments `E x^j`, `j = 1..4`.
    ///
    /// A variance below the cancellation floor of the raw moments is treated as zero.
    pub fn from_raw(raw: [f64; 4]) -> Self {
        let [m1, m2, m3, m4] = raw;
        let mut c2 = m2 - m1 * m1;
        if c2 <= 64.0 * f64::EPSILON * m2.abs() {
            c2 = 0.0;
        }
        let c3 = m3 - 3.0 * m1 * m2 + 2.0 * m1.powi(3);
        let c4 = m4 - 4.0 * m1 * m3 + 6.0 * m1 * m1 * m2 - 3.0 * m1.powi(4);
        let mut s = Self::from_central(m1, c2, c3, c4);
        s.m2 = m2;
        s.m3 = m3;
        s.m4 = m4;
        s
    }
}

/// Two-pass population moments of a weighted measure.
pub fn summarize(measure: &EmpiricalMeasure) -> MomentSummary {
    let mean: f64 = measure.iter().map(|(x, w)| w * x).sum();
    let (mut c2, mut c3, mut c4) = (0.0, 0.0, 0.0);
    for (x, w) in measure.iter() {
        let d = x - mean;
        let d2 = d * d;
        c2 += w * d2;
        c3 += w * d2 * d;
        c4 += w * d2 * d2;
    }
    MomentSummary::from_central(mean, c2, c3, c4)
}

/// `[mean x, mean x^2, mean x^3, mean x^4]` of equally weighted values.
pub fn raw_moments(values: &[f64]) -> [f64; 4] {
    let mut s = [0.0; 4];
    for &x in values {
        let x2 = x * x;
        s[0] += x;
        s[1] += x2;
        s[2] += x2 * x;
        s[3] += x2 * x2;
    }
    let n = values.len() as f64;
    s.map(|v| v / n)
}

/// Default number of jackknife groups.
pub const JACKKNIFE_GROUPS: usize = 100;

/// Per-trial raw moments summed into contiguous trial groups.
///
/// Trial `t` of `T` belongs to group `floor(t * G / T)`, so deleting one
/// group is a delete-a-block jackknife over consecutive trials.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentAccumulator {
    trials: u64,
    groups: Vec<[f64; 5]>,
}

impl MomentAccumulator {
    pub fn new(trials: u64) -> Self {
        let g = (JACKKNIFE_GROUPS as u64).min(trials.max(1)) as usize;
        Self { trials, groups: vec![[0.0; 5]; g] }
    }

    pub fn group_of(&self, trial: u64) -> usize {
        ((trial as u128 * self.groups.len() as u128) / self.trials.max(1) as u128) as usize
    }

    /// Adds one trial's raw moments.
    pub fn add(&mut self, trial: u64, raw: [f64; 4]) {
        let g = self.group_of(trial);
        let acc = &mut self.groups[g];
        acc[0] += 1.0;
        for j in 0..4 {
            acc[j + 1] += raw[j];
        }
    }

    pub fn trials(&self) -> u64 {
        self.groups.iter().map(|g| g[0] as u64).sum()
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    fn total(&self) -> [f64; 5] {
        let mut t = [0.0; 5];
        for g in &self.groups {
            for j in 0..5 {
                t[j] += g[j];
            }
        }
        t
    }

    fn summary_of(sums: [f64; 5]) -> MomentSummary {
        MomentSummary::from_raw([sums[1] / sums[0], sums[2] / sums[0], sums[3] / sums[0], sums[4] / sums[0]])
    }

    pub fn summary(&self) -> MomentSummary {
        Self::summary_of(self.total())
    }

    fn without(&self, g: usize) -> MomentSummary {
        let mut t = self.total();
        for (x, y) in t.iter_mut().zip(&self.groups[g]) {
            *x -= y;
        }
        Self::summary_of(t)
    }
}

/// A Monte Carlo value with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    /// `|value - target| <= k * stderr`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.stderr
    }

    /// Mean and standard error of iid values.
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        Self { value: mean, stderr: (var / n).sqrt() }
    }
}

/// Delete-one-group jackknife of a statistic of several accumulators filled
/// over the same trials (paired differences and ratios included).
///
/// Returns `None` if the statistic is undefined on the full data or on any
/// reduced sample.
pub fn jackknife<F>(accs: &[&MomentAccumulator], stat: F) -> Option<Estimate>
where
    F: Fn(&[MomentSummary]) -> Option<f64>,
{
    let first = accs.first()?;
    let g = first.n_groups();
    if accs.iter().any(|a| a.n_groups() != g || a.trials != first.trials) {
        return None;
    }
    let full: Vec<MomentSummary> = accs.iter().map(|a| a.summary()).collect();
    let value = stat(&full)?;
    if g < 2 {
        return Some(Estimate { value, stderr: f64::NAN });
    }
    let mut reps = Vec::with_capacity(g);
    for k in 0..g {
        let reduced: Vec<MomentSummary> = accs.iter().map(|a| a.without(k)).collect();
        reps.push(stat(&reduced)?);
    }
    let mean = reps.iter().sum::<f64>() / g as f64;
    let ss: f64 = reps.iter().map(|r| (r - mean).powi(2)).sum();
    Some(Estimate { value, stderr: ((g as f64 - 1.0) / g as f64 * ss).sqrt() })
}
