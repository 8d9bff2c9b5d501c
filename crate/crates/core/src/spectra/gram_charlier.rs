use statrs::function::erf::erfc;

use super::measure::DensityEstimate;
use super::moments::MomentSummary;
use crate::error::{Error, Result};

fn phi(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal mass of `[a, b]`, evaluated in the tail that avoids cancellation.
fn normal_mass(a: f64, b: f64) -> f64 {
    let s = std::f64::consts::SQRT_2;
    if a >= 0.0 {
        0.5 * (erfc(a / s) - erfc(b / s))
    } else if b <= 0.0 {
        0.5 * (erfc(-b / s) - erfc(-a / s))
    } else {
        1.0 - 0.5 * (erfc(-a / s) + erfc(b / s))
    }
}

/// Four-moment Gram-Charlier density binned on `edges`.
///
/// Each bin holds the exact integral of
/// `φ(z)(1 + γ₁/6·He₃(z) + γ₂/24·He₄(z))`, using `∫φHeₙ = -φHeₙ₋₁`;
/// negative bins are clipped to zero and the result renormalized.
pub fn gram_charlier_density(stats: &MomentSummary, edges: &[f64]) -> Result<DensityEstimate> {
    let (g1, g2) = match (stats.gamma1, stats.gamma2) {
        (Some(g1), Some(g2)) if stats.sigma2 > 0.0 => (g1, g2),
        _ => return Err(Error::InvalidDimension("Gram-Charlier density needs a positive variance".into())),
    };
    if edges.len() < 2 {
        return Err(Error::InvalidBins("need at least two edges".into()));
    }
    let sigma = stats.sigma2.sqrt();
    let z: Vec<f64> = edges.iter().map(|e| (e - stats.mu) / sigma).collect();
    // Antiderivative pieces -φHe₂ and -φHe₃.
    let he2 = |z: f64| phi(z) * (z * z - 1.0);
    let he3 = |z: f64| phi(z) * (z * z * z - 3.0 * z);
    let masses: Vec<f64> = z
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let m = normal_mass(a, b) + g1 / 6.0 * (he2(a) - he2(b)) + g2 / 24.0 * (he3(a) - he3(b));
            m.max(0.0)
        })
        .collect();
    DensityEstimate::new(edges.to_vec(), masses)
}
