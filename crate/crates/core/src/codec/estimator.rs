use std::collections::VecDeque;

use crate::channel::DiscreteChannelFamily;
use crate::error::{Error, Result};

/// Sliding window over the last η pilot pairs (x̆, y).
///
/// The likelihood of each hypothesis depends on the window only through the
/// pair counts, so scores are evaluated from counts in a fixed order and are
/// independent of how the window was filled.
#[derive(Debug, Clone)]
pub struct PilotWindow {
    eta: usize,
    outputs: usize,
    window: VecDeque<(usize, usize)>,
    counts: Vec<u32>,
}

impl PilotWindow {
    pub fn new(eta: usize, inputs: usize, outputs: usize) -> Self {
        Self {
            eta,
            outputs,
            window: VecDeque::with_capacity(eta + 1),
            counts: vec![0; inputs * outputs],
        }
    }

    pub fn push(&mut self, x: usize, y: usize) {
        self.window.push_back((x, y));
        self.counts[x * self.outputs + y] += 1;
        if self.window.len() > self.eta {
            let (ox, oy) = self.window.pop_front().expect("window is non-empty");
            self.counts[ox * self.outputs + oy] -= 1;
        }
    }

    pub fn is_full(&self) -> bool {
        self.window.len() == self.eta
    }

    /// ML estimate over post-change states; ties go to the smallest index.
    pub fn estimate(&self, sensing: &DiscreteChannelFamily) -> usize {
        mle_from_counts(&self.counts, sensing)
    }
}

fn mle_from_counts(counts: &[u32], sensing: &DiscreteChannelFamily) -> usize {
    let outputs = sensing.output_count();
    let mut best = 1;
    let mut best_score = f64::NEG_INFINITY;
    for s in sensing.post_states() {
        let mut score = 0.0;
        for (idx, &c) in counts.iter().enumerate() {
            if c > 0 {
                score += c as f64 * sensing.log_prob(s, idx / outputs, idx % outputs);
            }
        }
        if score > best_score {
            best_score = score;
            best = s;
        }
    }
    best
}

/// argmax over post-change states of the log-likelihood of the last η pilot pairs.
pub fn estimate_state(pilot_history: &[(usize, usize)], sensing: &DiscreteChannelFamily, eta: usize) -> Result<usize> {
    if pilot_history.len() < eta {
        return Err(Error::InsufficientPilots {
            needed: eta,
            available: pilot_history.len(),
        });
    }
    let outputs = sensing.output_count();
    let mut counts = vec![0u32; sensing.input_count() * outputs];
    for &(x, y) in &pilot_history[pilot_history.len() - eta..] {
        if x >= sensing.input_count() || y >= outputs {
            return Err(Error::IndexOutOfRange(format!("pilot pair ({x}, {y})")));
        }
        counts[x * outputs + y] += 1;
    }
    Ok(mle_from_counts(&counts, sensing))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::bibo_sensing;

    #[test]
    fn single_pilot_example() {
        let f = bibo_sensing();
        assert_eq!(estimate_state(&[(1, 1)], &f, 1).unwrap(), 2);
        assert_eq!(estimate_state(&[(1, 0)], &f, 1).unwrap(), 1);
        assert_eq!(estimate_state(&[(0, 1)], &f, 1).unwrap(), 2);
    }

    #[test]
    fn uses_only_last_eta() {
        let f = bibo_sensing();
        let hist = [(1, 0), (1, 0), (1, 0), (1, 1)];
        assert_eq!(estimate_state(&hist, &f, 1).unwrap(), 2);
        assert_eq!(estimate_state(&hist, &f, 4).unwrap(), 1);
        assert!(estimate_state(&hist, &f, 5).is_err());
    }

    #[test]
    fn ties_go_to_smallest_state() {
        let row = vec![vec![0.6, 0.4], vec![0.2, 0.8]];
        let other = vec![vec![0.6, 0.4], vec![0.5, 0.5]];
        let f = DiscreteChannelFamily::new(vec![vec![vec![0.9, 0.1], vec![0.1, 0.9]], row.clone(), row, other]).unwrap();
        // input 0 has identical rows across post-states
        assert_eq!(estimate_state(&[(0, 0), (0, 1), (0, 0)], &f, 3).unwrap(), 1);
    }

    #[test]
    fn window_matches_free_function() {
        let f = bibo_sensing();
        let hist: Vec<(usize, usize)> = (0..50).map(|i| ((i * 7) % 2, (i * 5 / 3) % 2)).collect();
        let mut w = PilotWindow::new(6, 2, 2);
        for (i, &(x, y)) in hist.iter().enumerate() {
            w.push(x, y);
            if i + 1 >= 6 {
                assert_eq!(w.estimate(&f), estimate_state(&hist[..=i], &f, 6).unwrap());
            }
        }
    }
}
