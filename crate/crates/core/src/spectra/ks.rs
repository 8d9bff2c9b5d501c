use super::measure::{DensityEstimate, EmpiricalMeasure};

/// A distribution whose CDF is piecewise linear (or constant) between knots.
pub trait Cdf {
    fn knots(&self) -> Vec<f64>;
    fn cdf(&self, x: f64) -> f64;
    /// Left limit at `x`; equal to `cdf` for continuous distributions.
    fn cdf_left(&self, x: f64) -> f64 {
        self.cdf(x)
    }
}

impl Cdf for EmpiricalMeasure {
    fn knots(&self) -> Vec<f64> {
        let mut k = self.values().to_vec();
        k.dedup();
        k
    }

    fn cdf(&self, x: f64) -> f64 {
        EmpiricalMeasure::cdf(self, x)
    }

    fn cdf_left(&self, x: f64) -> f64 {
        EmpiricalMeasure::cdf_left(self, x)
    }
}

impl Cdf for DensityEstimate {
    fn knots(&self) -> Vec<f64> {
        self.edges().to_vec()
    }

    fn cdf(&self, x: f64) -> f64 {
        DensityEstimate::cdf(self, x)
    }
}

/// Kolmogorov-Smirnov distance `sup_x |F(x) - G(x)|`.
///
/// Between the merged knots both CDFs are linear, so the supremum is attained
/// at a knot, either at the value or at its left limit.
pub fn ks_distance<X: Cdf + ?Sized, Y: Cdf + ?Sized>(x: &X, y: &Y) -> f64 {
    let mut knots = x.knots();
    knots.extend(y.knots());
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    knots
        .iter()
        .map(|&t| (x.cdf(t) - y.cdf(t)).abs().max((x.cdf_left(t) - y.cdf_left(t)).abs()))
        .fold(0.0, f64::max)
        .min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_and_disjoint() {
        let a = EmpiricalMeasure::from_values(vec![0.0, 1.0, 2.0]).unwrap();
        assert_eq!(ks_distance(&a, &a), 0.0);
        let b = EmpiricalMeasure::from_values(vec![5.0, 6.0]).unwrap();
        assert_eq!(ks_distance(&a, &b), 1.0);
        let d1 = DensityEstimate::new(vec![0.0, 1.0], vec![1.0]).unwrap();
        let d2 = DensityEstimate::new(vec![2.0, 3.0], vec![1.0]).unwrap();
        assert_eq!(ks_distance(&d1, &d2), 1.0);
        assert_eq!(ks_distance(&d1, &d1), 0.0);
    }

    #[test]
    fn known_value() {
        let a = EmpiricalMeasure::from_values(vec![0.0, 1.0]).unwrap();
        let b = EmpiricalMeasure::from_values(vec![0.5, 1.5]).unwrap();
        assert_eq!(ks_distance(&a, &b), 0.5);
        let u = DensityEstimate::new(vec![0.0, 1.0], vec![1.0]).unwrap();
        let atom = EmpiricalMeasure::atom(0.5);
        assert_eq!(ks_distance(&u, &atom), 0.5);
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(
            xs in prop::collection::vec(-5.0f64..5.0, 1..60),
            ys in prop::collection::vec(-5.0f64..5.0, 1..60),
        ) {
            let a = EmpiricalMeasure::from_values(xs).unwrap();
            let b = EmpiricalMeasure::from_values(ys).unwrap();
            let d = ks_distance(&a, &b);
            prop_assert_eq!(d, ks_distance(&b, &a));
            prop_assert!((0.0..=1.0).contains(&d));
        }
    }
}
