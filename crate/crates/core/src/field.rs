//! Scalar fields for the two sampled Dyson indices.

use nalgebra::{Complex, ComplexField};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dyson index of a sampled ensemble: 1 (real orthogonal) or 2 (complex unitary).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub enum Beta {
    Real,
    Complex,
}

impl Beta {
    pub fn value(self) -> f64 {
        match self {
            Beta::Real => 1.0,
            Beta::Complex => 2.0,
        }
    }
}

impl TryFrom<f64> for Beta {
    type Error = Error;

    fn try_from(beta: f64) -> Result<Self> {
        if beta == 1.0 {
            Ok(Beta::Real)
        } else if beta == 2.0 {
            Ok(Beta::Complex)
        } else {
            Err(Error::UnsupportedBeta(beta))
        }
    }
}

impl From<Beta> for f64 {
    fn from(b: Beta) -> f64 {
        b.value()
    }
}

/// Matrix entry type of a sampled ensemble.
///
/// Gaussian entries have unit variance per real component, so a complex
/// entry `x + iy` has `E|z|^2 = 2`. Normals come from `rand_distr`'s
/// ziggurat sampler.
pub trait Field: ComplexField<RealField = f64> + Copy + Send + Sync + 'static {
    const BETA: Beta;

    fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// `z / |z|`, or 1 at the origin.
    fn unit_phase(self) -> Self {
        let r = self.modulus();
        if r == 0.0 {
            Self::one()
        } else {
            self.unscale(r)
        }
    }
}

impl Field for f64 {
    const BETA: Beta = Beta::Real;

    fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
}

impl Field for Complex<f64> {
    const BETA: Beta = Beta::Complex;

    fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex::new(re, im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_parsing() {
        assert_eq!(Beta::try_from(1.0).unwrap(), Beta::Real);
        assert_eq!(Beta::try_from(2.0).unwrap(), Beta::Complex);
        assert!(matches!(Beta::try_from(4.0), Err(Error::UnsupportedBeta(_))));
        assert!(Beta::try_from(1.5).is_err());
    }

    #[test]
    fn phases_are_unimodular() {
        assert_eq!((-3.0f64).unit_phase(), -1.0);
        assert_eq!(0.0f64.unit_phase(), 1.0);
        let z = Complex::new(3.0, 4.0).unit_phase();
        assert!((z.norm() - 1.0).abs() < 1e-15);
        assert!((z.re - 0.6).abs() < 1e-15);
    }
}
