use crate::channel::info::entropy_bits;
use crate::error::{Error, Result};

/// ŝ_1, ..., ŝ_k of one run plus per-subblock correctness against the true state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EstimateTrace {
    pub estimates: Vec<usize>,
    pub correct: Vec<bool>,
}

impl EstimateTrace {
    /// `true_state[j]` is the state in force during subblock j+1.
    pub fn new(estimates: Vec<usize>, true_state: &[usize]) -> Self {
        let correct = estimates.iter().zip(true_state).map(|(a, b)| a == b).collect();
        Self { estimates, correct }
    }
}

/// (1/k) Σ_j Ĥ(Ŝ_j) in bits per subblock, using plug-in entropies of each
/// position across traces. Upper-bounds the empirical (1/k) H(Ŝ^k).
pub fn entropy_rate_estimate(traces: &[EstimateTrace]) -> Result<f64> {
    let Some(first) = traces.first() else {
        return Err(Error::InvalidConfig("need at least one trace".into()));
    };
    let k = first.estimates.len();
    if k == 0 || traces.iter().any(|t| t.estimates.len() != k) {
        return Err(Error::InvalidConfig("traces must share a positive length".into()));
    }
    let states = traces.iter().flat_map(|t| t.estimates.iter()).copied().max().unwrap_or(0) + 1;
    let n = traces.len() as f64;
    let mut counts = vec![0usize; states];
    let mut total = 0.0;
    for j in 0..k {
        counts.fill(0);
        for t in traces {
            counts[t.estimates[j]] += 1;
        }
        let p: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
        total += entropy_bits(&p);
    }
    Ok(total / k as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rngs::stream;
    use rand::Rng;

    #[test]
    fn identical_traces_have_zero_rate() {
        let t = EstimateTrace::new(vec![1, 2, 2, 1], &[1, 1, 1, 1]);
        assert_eq!(t.correct, vec![true, false, false, true]);
        assert_eq!(entropy_rate_estimate(&vec![t; 10]).unwrap(), 0.0);
    }

    #[test]
    fn uniform_iid_gives_one_bit() {
        let mut rng = stream(1, &[]);
        let traces: Vec<EstimateTrace> = (0..20_000)
            .map(|_| EstimateTrace::new((0..8).map(|_| rng.gen_range(1..=2)).collect(), &[1; 8]))
            .collect();
        let h = entropy_rate_estimate(&traces).unwrap();
        assert!((h - 1.0).abs() < 1e-3);
    }

    #[test]
    fn rejects_empty_or_ragged() {
        assert!(entropy_rate_estimate(&[]).is_err());
        let a = EstimateTrace::new(vec![1, 2], &[1, 1]);
        let b = EstimateTrace::new(vec![1], &[1]);
        assert!(entropy_rate_estimate(&[a, b]).is_err());
    }
}
