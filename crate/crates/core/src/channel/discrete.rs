use rand::Rng;

use super::info::{check_distribution, kl_divergence, STOCHASTIC_TOL};
use crate::error::{Error, Result};

/// A family of discrete memoryless channels p^(s)(y|x), one per state.
///
/// State 0 is the base (pre-change) state; states 1..=|S| are the post-change
/// states. Rows are stored flattened as `[state][input][output]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteChannelFamily {
    inputs: usize,
    outputs: usize,
    states: usize,
    probs: Vec<f64>,
    log_probs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl DiscreteChannelFamily {
    /// Builds a family from per-state row-stochastic matrices. Only
    /// stochasticity is checked; see [`DiscreteChannelFamily::new_sensing`]
    /// for the stricter checks a sensing channel needs.
    pub fn new(matrices: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if matrices.is_empty() {
            return Err(Error::Malformed("at least the base state is required".into()));
        }
        let inputs = matrices[0].len();
        if inputs == 0 {
            return Err(Error::Malformed("empty input alphabet".into()));
        }
        let outputs = matrices[0][0].len();
        if outputs == 0 {
            return Err(Error::Malformed("empty output alphabet".into()));
        }
        let states = matrices.len();
        let mut probs = Vec::with_capacity(states * inputs * outputs);
        for (s, m) in matrices.iter().enumerate() {
            if m.len() != inputs {
                return Err(Error::Malformed(format!(
                    "state {s} has {} input rows, expected {inputs}",
                    m.len()
                )));
            }
            for (x, row) in m.iter().enumerate() {
                if row.len() != outputs {
                    return Err(Error::Malformed(format!(
                        "state {s}, input {x} has {} outputs, expected {outputs}",
                        row.len()
                    )));
                }
                let mut sum = 0.0;
                for &p in row {
                    if !p.is_finite() || p < 0.0 {
                        return Err(Error::NotStochastic {
                            state: s,
                            input: x,
                            reason: format!("entry {p}"),
                        });
                    }
                    sum += p;
                }
                if (sum - 1.0).abs() > STOCHASTIC_TOL {
                    return Err(Error::NotStochastic {
                        state: s,
                        input: x,
                        reason: format!("row sums to {sum}"),
                    });
                }
                probs.extend_from_slice(row);
            }
        }
        let log_probs = probs.iter().map(|p| if *p > 0.0 { p.ln() } else { f64::NEG_INFINITY }).collect();
        let mut cumulative = Vec::with_capacity(probs.len());
        for row in probs.chunks(outputs) {
            let mut acc = 0.0;
            for p in row {
                acc += p;
                cumulative.push(acc);
            }
        }
        Ok(Self {
            inputs,
            outputs,
            states,
            probs,
            log_probs,
            cumulative,
        })
    }

    /// Builds a sensing family: stochastic rows, mutual absolute continuity
    /// between every post-change state and the base state (finite LLR), and
    /// distinguishability of every post-change state from every other state.
    pub fn new_sensing(matrices: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let family = Self::new(matrices)?;
        family.check_absolute_continuity()?;
        family.check_distinguishable()?;
        Ok(family)
    }

    pub fn input_count(&self) -> usize {
        self.inputs
    }

    pub fn output_count(&self) -> usize {
        self.outputs
    }

    /// Number of states including the base state.
    pub fn state_count(&self) -> usize {
        self.states
    }

    /// |S|, the number of post-change states.
    pub fn post_state_count(&self) -> usize {
        self.states - 1
    }

    pub fn post_states(&self) -> std::ops::RangeInclusive<usize> {
        1..=self.post_state_count()
    }

    fn check_state(&self, s: usize) -> Result<()> {
        if s < self.states {
            Ok(())
        } else {
            Err(Error::StateOutOfRange(s))
        }
    }

    fn offset(&self, s: usize, x: usize) -> usize {
        (s * self.inputs + x) * self.outputs
    }

    /// p^(s)(·|x).
    pub fn row(&self, s: usize, x: usize) -> &[f64] {
        let o = self.offset(s, x);
        &self.probs[o..o + self.outputs]
    }

    #[inline]
    pub fn prob(&self, s: usize, x: usize, y: usize) -> f64 {
        self.probs[self.offset(s, x) + y]
    }

    /// ln p^(s)(y|x), `-inf` where the probability vanishes.
    #[inline]
    pub fn log_prob(&self, s: usize, x: usize, y: usize) -> f64 {
        self.log_probs[self.offset(s, x) + y]
    }

    pub fn check_absolute_continuity(&self) -> Result<()> {
        for s in 1..self.states {
            for x in 0..self.inputs {
                for y in 0..self.outputs {
                    if (self.prob(s, x, y) > 0.0) != (self.prob(0, x, y) > 0.0) {
                        return Err(Error::AbsoluteContinuityViolation {
                            state: s,
                            input: x,
                            output: y,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Every post-change state must differ from every other state for some input.
    pub fn check_distinguishable(&self) -> Result<()> {
        for s1 in 1..self.states {
            for s2 in 0..self.states {
                if s1 == s2 || (s2 != 0 && s2 < s1) {
                    continue;
                }
                let differs = (0..self.inputs).any(|x| {
                    self.row(s1, x)
                        .iter()
                        .zip(self.row(s2, x))
                        .any(|(a, b)| (a - b).abs() > STOCHASTIC_TOL)
                });
                if !differs {
                    return Err(Error::Indistinguishable { s1, s2 });
                }
            }
        }
        Ok(())
    }

    /// D(p^(s1)(·|x) || p^(s2)(·|x)) in nats.
    pub fn kl_at(&self, s1: usize, s2: usize, x: usize) -> Result<f64> {
        self.check_state(s1)?;
        self.check_state(s2)?;
        if x >= self.inputs {
            return Err(Error::IndexOutOfRange(format!("input {x}")));
        }
        kl_divergence(self.row(s1, x), self.row(s2, x)).map_err(|e| match e {
            Error::AbsoluteContinuityViolation { output, .. } => Error::AbsoluteContinuityViolation {
                state: s1,
                input: x,
                output,
            },
            other => other,
        })
    }

    /// D(p^(s1) || p^(s2) | p_x) in nats.
    pub fn conditional_kl(&self, s1: usize, s2: usize, p_x: &[f64]) -> Result<f64> {
        check_distribution(p_x, self.inputs)?;
        let mut d = 0.0;
        for (x, &w) in p_x.iter().enumerate() {
            if w > 0.0 {
                d += w * self.kl_at(s1, s2, x)?;
            }
        }
        Ok(d)
    }

    /// Per-input detection drift D(p^(s) || p^(0) | x) for every x.
    pub fn drift_vector(&self, s: usize) -> Result<Vec<f64>> {
        (0..self.inputs).map(|x| self.kl_at(s, 0, x)).collect()
    }

    /// I(X; Y) in bits with X ~ p_x and Y | X ~ p^(s).
    pub fn mutual_information(&self, s: usize, p_x: &[f64]) -> Result<f64> {
        self.check_state(s)?;
        check_distribution(p_x, self.inputs)?;
        Ok(self.mutual_information_unchecked(s, p_x))
    }

    pub(crate) fn mutual_information_unchecked(&self, s: usize, p_x: &[f64]) -> f64 {
        let mut p_y = vec![0.0; self.outputs];
        for (x, &w) in p_x.iter().enumerate() {
            for (acc, p) in p_y.iter_mut().zip(self.row(s, x)) {
                *acc += w * p;
            }
        }
        let mut info = 0.0;
        for (x, &w) in p_x.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            for (y, &p) in self.row(s, x).iter().enumerate() {
                if p > 0.0 {
                    info += w * p * (p / p_y[y]).log2();
                }
            }
        }
        info.max(0.0)
    }

    /// Λ^(s)(y|x) = ln p^(s)(y|x) / p^(0)(y|x).
    pub fn llr(&self, s: usize, y: usize, x: usize) -> Result<f64> {
        self.check_state(s)?;
        if x >= self.inputs || y >= self.outputs {
            return Err(Error::IndexOutOfRange(format!("(x, y) = ({x}, {y})")));
        }
        let (ps, p0) = (self.prob(s, x, y), self.prob(0, x, y));
        if ps > 0.0 && p0 > 0.0 {
            Ok((ps / p0).ln())
        } else if ps == 0.0 && p0 == 0.0 {
            // Never observed under either law; contributes nothing.
            Ok(0.0)
        } else {
            Err(Error::AbsoluteContinuityViolation {
                state: s,
                input: x,
                output: y,
            })
        }
    }

    /// γ = max |Λ^(s)(y|x)| over post-change states and observable (x, y).
    pub fn gamma_max_llr(&self) -> Result<f64> {
        let mut gamma: f64 = 0.0;
        for s in self.post_states() {
            for x in 0..self.inputs {
                for y in 0..self.outputs {
                    gamma = gamma.max(self.llr(s, y, x)?.abs());
                }
            }
        }
        Ok(gamma)
    }

    /// ρ(s1, s2 | x) = Σ_y sqrt(p^(s1)(y|x) p^(s2)(y|x)).
    pub fn bhattacharyya(&self, s1: usize, s2: usize, x: usize) -> f64 {
        self.row(s1, x)
            .iter()
            .zip(self.row(s2, x))
            .map(|(a, b)| (a * b).sqrt())
            .sum()
    }

    /// ρ(s1, s2), the coefficient averaged uniformly over inputs.
    pub fn averaged_bhattacharyya(&self, s1: usize, s2: usize) -> f64 {
        (0..self.inputs).map(|x| self.bhattacharyya(s1, s2, x)).sum::<f64>() / self.inputs as f64
    }

    /// Maximum averaged Bhattacharyya coefficient over ordered pairs of
    /// distinct post-change states. Returns 0 when |S| = 1 (empty maximum).
    pub fn rho_max(&self) -> Result<f64> {
        let mut best = 0.0;
        let mut arg = (0, 0);
        for s1 in self.post_states() {
            for s2 in self.post_states() {
                if s1 != s2 {
                    let r = self.averaged_bhattacharyya(s1, s2);
                    if r > best {
                        best = r;
                        arg = (s1, s2);
                    }
                }
            }
        }
        if best >= 1.0 - STOCHASTIC_TOL {
            return Err(Error::DegenerateFamily { s1: arg.0, s2: arg.1 });
        }
        Ok(best)
    }

    /// V = max_{s, x} E_{p^(s)(·|x)}[Λ²], a valid finite second-moment constant.
    pub fn second_moment_bound(&self) -> Result<f64> {
        let mut v: f64 = 0.0;
        for s in self.post_states() {
            for x in 0..self.inputs {
                let mut m = 0.0;
                for y in 0..self.outputs {
                    let p = self.prob(s, x, y);
                    if p > 0.0 {
                        let l = self.llr(s, y, x)?;
                        m += p * l * l;
                    }
                }
                v = v.max(m);
            }
        }
        Ok(v)
    }

    /// Largest absolute difference between the rows of any two post-change states.
    pub fn post_state_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for s in 2..self.states {
            for x in 0..self.inputs {
                for (a, b) in self.row(s, x).iter().zip(self.row(1, x)) {
                    dev = dev.max((a - b).abs());
                }
            }
        }
        dev
    }

    /// Draws an output from p^(s)(·|x) by inversion of one uniform variate.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, s: usize, x: usize, rng: &mut R) -> usize {
        let o = self.offset(s, x);
        let cum = &self.cumulative[o..o + self.outputs];
        let u: f64 = rng.gen();
        for (y, &c) in cum.iter().enumerate() {
            if u < c {
                return y;
            }
        }
        // Only reachable when the row sums to slightly below one.
        let row = &self.probs[o..o + self.outputs];
        row.iter().rposition(|&p| p > 0.0).unwrap_or(self.outputs - 1)
    }
}

/// Sensing and communication families sharing input alphabet and state set.
/// Given (x, s) the two outputs are drawn independently.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPair {
    pub sensing: DiscreteChannelFamily,
    pub comm: DiscreteChannelFamily,
}

impl ChannelPair {
    pub fn new(sensing: DiscreteChannelFamily, comm: DiscreteChannelFamily) -> Result<Self> {
        if sensing.input_count() != comm.input_count() {
            return Err(Error::Malformed(format!(
                "sensing has {} inputs, comm has {}",
                sensing.input_count(),
                comm.input_count()
            )));
        }
        if sensing.state_count() != comm.state_count() {
            return Err(Error::Malformed(format!(
                "sensing has {} states, comm has {}",
                sensing.state_count(),
                comm.state_count()
            )));
        }
        Ok(Self { sensing, comm })
    }

    pub fn input_count(&self) -> usize {
        self.sensing.input_count()
    }

    pub fn post_state_count(&self) -> usize {
        self.sensing.post_state_count()
    }

    /// Draws (y, ỹ) for input x under state s: sensing first, then comm.
    #[inline]
    pub fn sample_outputs<R: Rng + ?Sized>(&self, x: usize, s: usize, rng: &mut R) -> (usize, usize) {
        let y = self.sensing.sample(s, x, rng);
        let y_comm = self.comm.sample(s, x, rng);
        (y, y_comm)
    }
}
