//! Scalar information measures on probability vectors.
//!
//! Divergences are in nats. Entropies and mutual information carry their unit
//! in the function name.

use crate::error::{Error, Result};

pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Checks that `p` is a probability vector of length `len`.
pub fn check_distribution(p: &[f64], len: usize) -> Result<()> {
    if p.len() != len {
        return Err(Error::InvalidDistribution(format!(
            "expected {len} entries, got {}",
            p.len()
        )));
    }
    let mut sum = 0.0;
    for &v in p {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidDistribution(format!("entry {v} is not a probability")));
        }
        sum += v;
    }
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDistribution(format!("entries sum to {sum}")));
    }
    Ok(())
}

/// D(p || q) in nats, with 0 log(0/q) = 0.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::InvalidDistribution(format!(
            "length mismatch {} vs {}",
            p.len(),
            q.len()
        )));
    }
    let mut d = 0.0;
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Err(Error::AbsoluteContinuityViolation {
                    state: 0,
                    input: 0,
                    output: i,
                });
            }
            d += pi * (pi / qi).ln();
        }
    }
    // Rounding can leave a tiny negative value for identical inputs.
    Ok(d.max(0.0))
}

pub fn entropy_bits(p: &[f64]) -> f64 {
    p.iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| -v * v.log2())
        .sum()
}

/// H₂(p) in bits.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

pub fn nats_to_bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}

pub fn bits_to_nats(bits: f64) -> f64 {
    bits * std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kl_of_identical_is_zero() {
        assert_eq!(kl_divergence(&[0.5, 0.5], &[0.5, 0.5]).unwrap(), 0.0);
        assert_eq!(kl_divergence(&[0.9, 0.1], &[0.9, 0.1]).unwrap(), 0.0);
    }

    #[test]
    fn kl_bibo_state_one_at_input_one() {
        let d = kl_divergence(&[0.3, 0.7], &[0.1, 0.9]).unwrap();
        assert!((d - 0.15366).abs() < 5e-6, "{d}");
        assert!((nats_to_bits(d) - 0.2217).abs() < 5e-5);
    }

    #[test]
    fn kl_rejects_missing_support() {
        let err = kl_divergence(&[0.5, 0.5], &[1.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::AbsoluteContinuityViolation { output: 1, .. }));
        // zero mass in p where q vanishes is fine
        assert!(kl_divergence(&[1.0, 0.0], &[0.5, 0.5]).is_ok());
    }

    #[test]
    fn distribution_checks() {
        assert!(check_distribution(&[0.2, 0.8], 2).is_ok());
        assert!(check_distribution(&[0.2, 0.7], 2).is_err());
        assert!(check_distribution(&[-0.1, 1.1], 2).is_err());
        assert!(check_distribution(&[1.0], 2).is_err());
    }

    #[test]
    fn binary_entropy_endpoints() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert!((binary_entropy(0.5) - 1.0).abs() < 1e-15);
        assert!((entropy_bits(&[0.25; 4]) - 2.0).abs() < 1e-15);
    }
}
