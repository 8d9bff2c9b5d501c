use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weighted multiset of real values, sorted ascending; uniform weights are implicit.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalMeasure {
    values: Vec<f64>,
    /// Cumulative weights, present only for non-uniform measures.
    cumulative: Option<Vec<f64>>,
}

impl EmpiricalMeasure {
    pub fn from_values(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidWeights("non-finite support point".into()));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values, cumulative: None })
    }

    /// Weights are normalized to sum to one.
    pub fn from_weighted(mut pairs: Vec<(f64, f64)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        if pairs.iter().any(|&(x, w)| !x.is_finite() || !w.is_finite() || w < 0.0) {
            return Err(Error::InvalidWeights("weights must be finite and nonnegative".into()));
        }
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        if total <= 0.0 {
            return Err(Error::InvalidWeights("total weight is zero".into()));
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut acc = 0.0;
        let mut cumulative = Vec::with_capacity(pairs.len());
        for &(_, w) in &pairs {
            acc += w;
            cumulative.push(acc / total);
        }
        *cumulative.last_mut().unwrap() = 1.0;
        Ok(Self { values: pairs.into_iter().map(|p| p.0).collect(), cumulative: Some(cumulative) })
    }

    pub fn atom(x: f64) -> Self {
        Self { values: vec![x], cumulative: None }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_uniform(&self) -> bool {
        self.cumulative.is_none()
    }

    pub fn weight(&self, i: usize) -> f64 {
        match &self.cumulative {
            None => 1.0 / self.values.len() as f64,
            Some(c) => c[i] - if i == 0 { 0.0 } else { c[i - 1] },
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.weight(i)).collect()
    }

    /// `(value, weight)` pairs in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().enumerate().map(move |(i, &x)| (x, self.weight(i)))
    }

    fn mass_below(&self, count: usize) -> f64 {
        if count == 0 {
            return 0.0;
        }
        match &self.cumulative {
            None => count as f64 / self.values.len() as f64,
            Some(c) => c[count - 1],
        }
    }

    /// `P(X <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.mass_below(self.values.partition_point(|&v| v <= x))
    }

    /// `P(X < x)`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        self.mass_below(self.values.partition_point(|&v| v < x))
    }

    /// Weighted quantile: smallest support point with `cdf >= q`.
    pub fn quantile(&self, q: f64) -> f64 {
        let n = self.values.len();
        let i = match &self.cumulative {
            None => ((q * n as f64).ceil() as usize).clamp(1, n) - 1,
            Some(c) => c.partition_point(|&v| v < q).min(n - 1),
        };
        self.values[i]
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

/// Histogram form of a measure: `B + 1` ascending edges, `B` masses summing to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    edges: Vec<f64>,
    masses: Vec<f64>,
}

impl DensityEstimate {
    /// Masses are renormalized to sum to one.
    pub fn new(edges: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        check_edges(&edges)?;
        if masses.len() + 1 != edges.len() {
            return Err(Error::InvalidBins(format!("{} edges for {} masses", edges.len(), masses.len())));
        }
        if masses.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::InvalidWeights("masses must be finite and nonnegative".into()));
        }
        let total: f64 = masses.iter().sum();
        if total <= 0.0 {
            return Err(Error::EmptyMeasure);
        }
        Ok(Self { edges, masses: masses.into_iter().map(|m| m / total).collect() })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn n_bins(&self) -> usize {
        self.masses.len()
    }

    /// Piecewise-linear CDF (mass spread uniformly within each bin).
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.edges[0] {
            return 0.0;
        }
        if x >= self.edges[self.edges.len() - 1] {
            return 1.0;
        }
        let i = self.edges.partition_point(|&e| e <= x) - 1;
        let below: f64 = self.masses[..i].iter().sum();
        below + self.masses[i] * (x - self.edges[i]) / (self.edges[i + 1] - self.edges[i])
    }
}

fn check_edges(edges: &[f64]) -> Result<()> {
    if edges.len() < 2 {
        return Err(Error::InvalidBins("need at least two edges".into()));
    }
    if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidBins("edges must be finite and strictly increasing".into()));
    }
    Ok(())
}

/// Binning rule for [`histogram`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bins {
    /// Freedman-Diaconis width on the measure itself.
    Auto,
    /// Equal-width bins spanning the support.
    Count(usize),
    Edges(Vec<f64>),
}

const MAX_AUTO_BINS: usize = 10_000;

impl Bins {
    /// Concrete edges for `measure`.
    pub fn edges_for(&self, measure: &EmpiricalMeasure) -> Result<Vec<f64>> {
        match self {
            Bins::Edges(e) => {
                check_edges(e)?;
                Ok(e.clone())
            }
            Bins::Count(0) => Err(Error::InvalidBins("bin count must be >= 1".into())),
            Bins::Count(b) => Ok(uniform_edges(measure.min(), measure.max(), *b)),
            Bins::Auto => {
                let (lo, hi) = (measure.min(), measure.max());
                let iqr = measure.quantile(0.75) - measure.quantile(0.25);
                let n = measure.len() as f64;
                let bins = if hi > lo && iqr > 0.0 {
                    let width = 2.0 * iqr / n.cbrt();
                    ((hi - lo) / width).ceil() as usize
                } else {
                    // Sturges when the interquartile range collapses.
                    n.log2().ceil() as usize + 1
                };
                Ok(uniform_edges(lo, hi, bins.clamp(1, MAX_AUTO_BINS)))
            }
        }
    }
}

fn uniform_edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
    let w = (hi - lo) / bins as f64;
    let mut e: Vec<f64> = (0..=bins).map(|i| lo + w * i as f64).collect();
    e[bins] = hi;
    e
}

/// Bins the measure. With explicit edges, mass outside `[first, last]` is
/// dropped and the remainder renormalized; the last bin is closed on the right.
pub fn histogram(measure: &EmpiricalMeasure, bins: &Bins) -> Result<DensityEstimate> {
    if measure.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    let edges = bins.edges_for(measure)?;
    let last = edges.len() - 1;
    let mut masses = vec![0.0; last];
    for (x, w) in measure.iter() {
        if x < edges[0] || x > edges[last] {
            continue;
        }
        let i = (edges.partition_point(|&e| e <= x) - 1).min(last - 1);
        masses[i] += w;
    }
    if masses.iter().sum::<f64>() <= 0.0 {
        return Err(Error::InvalidBins("no mass inside the bin edges".into()));
    }
    DensityEstimate::new(edges, masses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_atom_one_bin() {
        let h = histogram(&EmpiricalMeasure::atom(3.0), &Bins::Count(1)).unwrap();
        assert_eq!(h.masses(), &[1.0]);
        assert_eq!(h.edges(), &[2.5, 3.5]);
    }

    #[test]
    fn weighted_measure_cdf() {
        let m = EmpiricalMeasure::from_weighted(vec![(2.0, 1.0), (0.0, 1.0), (1.0, 2.0)]).unwrap();
        assert_eq!(m.values(), &[0.0, 1.0, 2.0]);
        assert_eq!(m.cdf(1.0), 0.75);
        assert_eq!(m.cdf_left(1.0), 0.25);
        assert_eq!(m.cdf(-1.0), 0.0);
        assert_eq!(m.weight(1), 0.5);
        assert_eq!(m.quantile(0.5), 1.0);
        assert!(EmpiricalMeasure::from_weighted(vec![(0.0, -1.0)]).is_err());
        assert!(EmpiricalMeasure::from_values(vec![]).is_err());
    }

    #[test]
    fn explicit_edges_and_closed_last_bin() {
        let m = EmpiricalMeasure::from_values(vec![0.0, 0.5, 1.0, 1.0, 7.0]).unwrap();
        let h = histogram(&m, &Bins::Edges(vec![0.0, 0.5, 1.0])).unwrap();
        assert!((h.masses()[0] - 0.25).abs() < 1e-15 && (h.masses()[1] - 0.75).abs() < 1e-15);
        assert!(histogram(&m, &Bins::Edges(vec![1.0, 0.0])).is_err());
        assert!(histogram(&m, &Bins::Count(0)).is_err());
    }

    #[test]
    fn density_cdf_is_piecewise_linear() {
        let d = DensityEstimate::new(vec![0.0, 1.0, 3.0], vec![1.0, 3.0]).unwrap();
        assert_eq!(d.cdf(0.5), 0.125);
        assert_eq!(d.cdf(2.0), 0.25 + 0.375);
        assert_eq!(d.cdf(5.0), 1.0);
    }

    proptest! {
        #[test]
        fn mass_is_preserved(xs in prop::collection::vec(-10.0f64..10.0, 1..200), bins in 1usize..50) {
            let m = EmpiricalMeasure::from_values(xs).unwrap();
            for rule in [Bins::Auto, Bins::Count(bins), Bins::Count(2 * bins)] {
                let h = histogram(&m, &rule).unwrap();
                prop_assert!((h.masses().iter().sum::<f64>() - 1.0).abs() < 1e-12);
                prop_assert!(h.masses().iter().all(|&x| x >= 0.0));
            }
        }
    }
}
