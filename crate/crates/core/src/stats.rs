//! Interval estimates and small regression helpers.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("unit normal").inverse_cdf(p)
}

/// z for a two-sided interval at `confidence`.
pub fn two_sided_z(confidence: f64) -> f64 {
    normal_quantile(0.5 + confidence / 2.0)
}

/// z for a one-sided bound at `confidence`.
pub fn one_sided_z(confidence: f64) -> f64 {
    normal_quantile(confidence)
}

/// A point estimate with its interval at the declared confidence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateWithCI {
    pub estimate: f64,
    pub half_width: f64,
    pub lower: f64,
    pub upper: f64,
    /// Upper bound of the one-sided interval at the same confidence.
    pub one_sided_upper: f64,
    pub confidence: f64,
    pub censored_fraction: f64,
    pub trials: usize,
}

/// Wilson score interval for a binomial proportion.
pub fn wilson(successes: usize, trials: usize, confidence: f64) -> Result<EstimateWithCI> {
    if trials == 0 {
        return Err(Error::InvalidConfig("no trials".into()));
    }
    let bounds = |z: f64| {
        let n = trials as f64;
        let p = successes as f64 / n;
        let z2 = z * z;
        let denom = 1.0 + z2 / n;
        let center = (p + z2 / (2.0 * n)) / denom;
        let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
        (center, half)
    };
    let (center, half) = bounds(two_sided_z(confidence));
    let (c1, h1) = bounds(one_sided_z(confidence));
    Ok(EstimateWithCI {
        estimate: successes as f64 / trials as f64,
        half_width: half,
        lower: (center - half).max(0.0),
        upper: (center + half).min(1.0),
        one_sided_upper: (c1 + h1).min(1.0),
        confidence,
        censored_fraction: 0.0,
        trials,
    })
}

/// Sample mean and standard error, summed in slice order.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Normal-approximation interval for a mean.
pub fn normal_mean(values: &[f64], confidence: f64, censored_fraction: f64) -> Result<EstimateWithCI> {
    if values.is_empty() {
        return Err(Error::InvalidConfig("no trials".into()));
    }
    let (mean, se) = mean_and_se(values);
    let half = two_sided_z(confidence) * se;
    Ok(EstimateWithCI {
        estimate: mean,
        half_width: half,
        lower: mean - half,
        upper: mean + half,
        one_sided_upper: mean + one_sided_z(confidence) * se,
        confidence,
        censored_fraction,
        trials: values.len(),
    })
}

/// Distribution-free lower confidence limit for the mean of a nonnegative
/// variable, from E[X] ≥ t·P(X ≥ t). The even-indexed half picks t (its
/// median); the odd-indexed half bounds P(X ≥ t) with a Wilson limit, so t
/// does not depend on the sample it is tested on. Useful when the values are
/// too heavy-tailed for a normal interval to be informative.
pub fn nonnegative_mean_lower(values: &[f64], confidence: f64) -> Result<f64> {
    if values.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::InvalidConfig("values must be nonnegative".into()));
    }
    if values.len() < 2 {
        return Ok(0.0);
    }
    let mut pick: Vec<f64> = values.iter().step_by(2).copied().collect();
    pick.sort_by(f64::total_cmp);
    let t = pick[pick.len() / 2];
    if t == 0.0 {
        return Ok(0.0);
    }
    let test: Vec<f64> = values.iter().skip(1).step_by(2).copied().collect();
    let hits = test.iter().filter(|&&v| v >= t).count();
    Ok(t * wilson(hits, test.len(), confidence)?.lower)
}

/// Ordinary least squares y ≈ intercept + slope·x; returns (slope, intercept).
pub fn least_squares(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidConfig("need at least two paired points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidConfig("x values are all equal".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rngs::stream;
    use rand::Rng;

    #[test]
    fn quantiles() {
        assert!((two_sided_z(0.95) - 1.959964).abs() < 1e-5);
        assert!((one_sided_z(0.99) - 2.326348).abs() < 1e-5);
    }

    #[test]
    fn wilson_reference_values() {
        // 30 of 100 at 95%: (0.2189, 0.3958)
        let ci = wilson(30, 100, 0.95).unwrap();
        assert!((ci.lower - 0.2189).abs() < 1e-3);
        assert!((ci.upper - 0.3958).abs() < 1e-3);
        let zero = wilson(0, 1000, 0.99).unwrap();
        assert_eq!(zero.lower, 0.0);
        assert!(zero.upper > 0.0 && zero.upper < 0.01);
        assert!(zero.one_sided_upper < zero.upper);
    }

    #[test]
    fn wilson_coverage_bernoulli_03() {
        let reps = 1000;
        let n = 400;
        let mut covered = 0;
        for r in 0..reps {
            let mut rng = stream(2024, &[r]);
            let hits = (0..n).filter(|_| rng.gen::<f64>() < 0.3).count();
            let ci = wilson(hits, n, 0.99).unwrap();
            if ci.lower <= 0.3 && 0.3 <= ci.upper {
                covered += 1;
            }
        }
        let coverage = covered as f64 / reps as f64;
        assert!((0.985..=0.995).contains(&coverage), "coverage {coverage}");
    }

    #[test]
    fn normal_coverage_bernoulli_03() {
        let reps = 1000;
        let n = 400;
        let mut covered = 0;
        for r in 0..reps {
            let mut rng = stream(77, &[r]);
            let xs: Vec<f64> = (0..n).map(|_| if rng.gen::<f64>() < 0.3 { 1.0 } else { 0.0 }).collect();
            let ci = normal_mean(&xs, 0.99, 0.0).unwrap();
            if ci.lower <= 0.3 && 0.3 <= ci.upper {
                covered += 1;
            }
        }
        let coverage = covered as f64 / reps as f64;
        assert!((0.985..=0.995).contains(&coverage), "coverage {coverage}");
    }

    #[test]
    fn regression_recovers_line() {
        let xs = [25.0, 50.0, 100.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 + 6.5 * x).collect();
        let (s, i) = least_squares(&xs, &ys).unwrap();
        assert!((s - 6.5).abs() < 1e-12 && (i - 3.0).abs() < 1e-9);
        assert!(least_squares(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn nonnegative_lower_is_conservative() {
        // exponential-ish values with mean 1: the bound sits below the mean
        let v: Vec<f64> = (1..=2000).map(|i| -(1.0 - i as f64 / 2001.0).ln()).collect();
        let lo = nonnegative_mean_lower(&v, 0.99).unwrap();
        assert!(lo > 0.2 && lo < 1.0, "{lo}");
        assert_eq!(nonnegative_mean_lower(&[0.0; 10], 0.99).unwrap(), 0.0);
        assert!(nonnegative_mean_lower(&[-1.0, 1.0], 0.99).is_err());
    }
}
