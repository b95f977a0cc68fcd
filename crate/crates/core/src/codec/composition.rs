use serde::{Deserialize, Serialize};

use crate::channel::info::check_distribution;
use crate::error::{Error, Result};

/// Symbol counts of a length-L constant-composition subblock.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Composition {
    counts: Vec<usize>,
    length: usize,
}

impl Composition {
    pub fn from_counts(counts: Vec<usize>) -> Result<Self> {
        let length: usize = counts.iter().sum();
        if counts.is_empty() || length == 0 {
            return Err(Error::InvalidConfig("composition must have positive length".into()));
        }
        Ok(Self { counts, length })
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.length
    }

    pub fn is_empty(&self) -> bool {
        self.length == 0
    }

    pub fn alphabet_size(&self) -> usize {
        self.counts.len()
    }

    /// The type π(x) = counts(x) / L.
    pub fn distribution(&self) -> Vec<f64> {
        let l = self.length as f64;
        self.counts.iter().map(|&c| c as f64 / l).collect()
    }

    /// The multiset in symbol order: counts[0] zeros, then counts[1] ones, ...
    pub fn multiset(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.length);
        for (x, &c) in self.counts.iter().enumerate() {
            out.extend(std::iter::repeat(x).take(c));
        }
        out
    }

    /// True when `symbols` has exactly these counts.
    pub fn matches(&self, symbols: &[usize]) -> bool {
        if symbols.len() != self.length {
            return false;
        }
        let mut seen = vec![0usize; self.counts.len()];
        for &x in symbols {
            match seen.get_mut(x) {
                Some(c) => *c += 1,
                None => return false,
            }
        }
        seen == self.counts
    }
}

/// Largest-remainder apportionment of L·p_x; remainder ties go to the lowest symbol.
pub fn make_composition(p_x: &[f64], length: usize) -> Result<Composition> {
    if length == 0 {
        return Err(Error::InvalidConfig("subblock length must be positive".into()));
    }
    check_distribution(p_x, p_x.len())?;
    let scaled: Vec<f64> = p_x.iter().map(|&p| p * length as f64).collect();
    let mut counts: Vec<usize> = scaled.iter().map(|&v| v.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..p_x.len()).collect();
    // Stable sort keeps the lowest index first among equal remainders.
    order.sort_by(|&a, &b| {
        let ra = scaled[a] - scaled[a].floor();
        let rb = scaled[b] - scaled[b].floor();
        rb.partial_cmp(&ra).unwrap_or(std::cmp::Ordering::Equal)
    });
    let deficit = length.saturating_sub(assigned);
    for &x in order.iter().take(deficit) {
        counts[x] += 1;
    }
    if counts.iter().sum::<usize>() != length {
        return Err(Error::InvalidDistribution("rounding overshoots the subblock length".into()));
    }
    Composition::from_counts(counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apportionment_examples() {
        assert_eq!(make_composition(&[0.5, 0.5], 4).unwrap().counts(), &[2, 2]);
        assert_eq!(make_composition(&[0.3, 0.7], 10).unwrap().counts(), &[3, 7]);
        let third = 1.0 / 3.0;
        assert_eq!(make_composition(&[third, third, third], 4).unwrap().counts(), &[2, 1, 1]);
        assert_eq!(make_composition(&[0.0, 1.0], 24).unwrap().counts(), &[0, 24]);
    }

    #[test]
    fn l1_error_is_bounded() {
        let p = [0.1234, 0.4321, 0.4445];
        for l in 1..60 {
            let c = make_composition(&p, l).unwrap();
            assert_eq!(c.len(), l);
            let err: f64 = c.distribution().iter().zip(&p).map(|(a, b)| (a - b).abs()).sum();
            assert!(err <= p.len() as f64 / l as f64 + 1e-12);
        }
    }

    #[test]
    fn matches_counts() {
        let c = Composition::from_counts(vec![2, 1]).unwrap();
        assert!(c.matches(&[1, 0, 0]));
        assert!(!c.matches(&[1, 1, 0]));
        assert!(!c.matches(&[0, 0]));
        assert!(!c.matches(&[0, 0, 2]));
        assert_eq!(c.multiset(), vec![0, 0, 1]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(make_composition(&[0.5, 0.5], 0).is_err());
        assert!(make_composition(&[0.5, 0.6], 4).is_err());
    }
}
