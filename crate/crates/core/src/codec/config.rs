use crate::codec::composition::{make_composition, Composition};
use crate::error::{Error, Result};

/// Parameters of one JCCS code: n = k(L+1) symbols, k subblocks of L payload
/// symbols each followed by one pilot.
#[derive(Debug, Clone, PartialEq)]
pub struct JccsConfig {
    subblock_len: usize,
    subblocks: usize,
    eta: usize,
    rate_bits: f64,
    compositions: Vec<Composition>,
    master_seed: u64,
}

impl JccsConfig {
    /// `compositions[q - 1]` is the composition used when the estimate is q.
    pub fn new(
        subblock_len: usize,
        subblocks: usize,
        eta: usize,
        rate_bits: f64,
        compositions: Vec<Composition>,
        master_seed: u64,
    ) -> Result<Self> {
        if subblock_len == 0 || subblocks == 0 {
            return Err(Error::InvalidConfig("L and k must be positive".into()));
        }
        if eta == 0 {
            return Err(Error::InvalidConfig("pilot window must be at least one subblock".into()));
        }
        if !(rate_bits.is_finite() && rate_bits >= 0.0) {
            return Err(Error::InvalidConfig(format!("rate {rate_bits}")));
        }
        let Some(first) = compositions.first() else {
            return Err(Error::InvalidConfig("need one composition per post-change state".into()));
        };
        let inputs = first.alphabet_size();
        if inputs > u8::MAX as usize + 1 {
            return Err(Error::Unsupported(format!("{inputs} input symbols")));
        }
        for (i, c) in compositions.iter().enumerate() {
            if c.len() != subblock_len || c.alphabet_size() != inputs {
                return Err(Error::InvalidConfig(format!(
                    "composition for state {} has length {} over {} symbols, expected {subblock_len} over {inputs}",
                    i + 1,
                    c.len(),
                    c.alphabet_size()
                )));
            }
        }
        Ok(Self {
            subblock_len,
            subblocks,
            eta,
            rate_bits,
            compositions,
            master_seed,
        })
    }

    /// Builds the compositions from target distributions `p(x|q)`.
    pub fn from_distributions(
        subblock_len: usize,
        subblocks: usize,
        eta: usize,
        rate_bits: f64,
        targets: &[Vec<f64>],
        master_seed: u64,
    ) -> Result<Self> {
        let compositions = targets
            .iter()
            .map(|p| make_composition(p, subblock_len))
            .collect::<Result<Vec<_>>>()?;
        Self::new(subblock_len, subblocks, eta, rate_bits, compositions, master_seed)
    }

    pub fn subblock_len(&self) -> usize {
        self.subblock_len
    }

    pub fn subblocks(&self) -> usize {
        self.subblocks
    }

    pub fn eta(&self) -> usize {
        self.eta
    }

    pub fn rate_bits(&self) -> f64 {
        self.rate_bits
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn compositions(&self) -> &[Composition] {
        &self.compositions
    }

    pub fn composition(&self, q: usize) -> &Composition {
        &self.compositions[q - 1]
    }

    pub fn post_state_count(&self) -> usize {
        self.compositions.len()
    }

    pub fn input_count(&self) -> usize {
        self.compositions[0].alphabet_size()
    }

    /// L + 1.
    pub fn frame(&self) -> usize {
        self.subblock_len + 1
    }

    /// n = k(L+1).
    pub fn block_length(&self) -> u64 {
        (self.subblocks * self.frame()) as u64
    }

    /// nR, the message-set size in bits.
    pub fn message_bits(&self) -> f64 {
        self.block_length() as f64 * self.rate_bits
    }

    /// floor(2^{nR}), at least 1. Exact below 2^53.
    pub fn message_count(&self) -> f64 {
        self.message_bits().exp2().floor().max(1.0)
    }

    /// Number of addressable message indices (message_count saturated to u64).
    pub fn message_index_limit(&self) -> u64 {
        let m = self.message_count();
        if m >= u64::MAX as f64 {
            u64::MAX
        } else {
            m as u64
        }
    }

    /// Scaling-law sanity warnings (η = o(k), ηL = o(k)); empty when none apply.
    pub fn scaling_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.eta >= self.subblocks {
            out.push(format!("eta = {} is not small relative to k = {}", self.eta, self.subblocks));
        }
        if self.eta * self.subblock_len >= self.subblocks {
            out.push(format!(
                "eta*L = {} is not small relative to k = {}",
                self.eta * self.subblock_len,
                self.subblocks
            ));
        }
        out
    }

    pub fn with_seed(&self, master_seed: u64) -> Self {
        Self {
            master_seed,
            ..self.clone()
        }
    }

    pub fn with_subblocks(&self, subblocks: usize) -> Result<Self> {
        Self::new(
            self.subblock_len,
            subblocks,
            self.eta,
            self.rate_bits,
            self.compositions.clone(),
            self.master_seed,
        )
    }

    pub fn with_eta(&self, eta: usize) -> Result<Self> {
        Self::new(
            self.subblock_len,
            self.subblocks,
            eta,
            self.rate_bits,
            self.compositions.clone(),
            self.master_seed,
        )
    }

    pub fn with_rate(&self, rate_bits: f64) -> Result<Self> {
        Self::new(
            self.subblock_len,
            self.subblocks,
            self.eta,
            rate_bits,
            self.compositions.clone(),
            self.master_seed,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(l: usize, k: usize, eta: usize, r: f64) -> JccsConfig {
        JccsConfig::from_distributions(l, k, eta, r, &[vec![0.5, 0.5], vec![0.5, 0.5]], 1).unwrap()
    }

    #[test]
    fn block_length_and_messages() {
        let c = cfg(24, 12, 2, 0.1);
        assert_eq!(c.block_length(), 300);
        assert_eq!(c.message_count(), 2f64.powi(30));
        assert_eq!(cfg(4, 2, 1, 0.0).message_count(), 1.0);
        assert_eq!(cfg(4, 200, 1, 1.0).message_index_limit(), u64::MAX);
    }

    #[test]
    fn scaling_warnings_fire() {
        assert_eq!(cfg(4, 2000, 20, 0.1).scaling_warnings().len(), 0);
        assert_eq!(cfg(24, 100, 20, 0.1).scaling_warnings().len(), 1);
        assert_eq!(cfg(24, 10, 20, 0.1).scaling_warnings().len(), 2);
    }

    #[test]
    fn rejects_mismatched_compositions() {
        let a = make_composition(&[0.5, 0.5], 4).unwrap();
        let b = make_composition(&[0.5, 0.5], 6).unwrap();
        assert!(JccsConfig::new(4, 10, 2, 0.1, vec![a.clone(), b], 0).is_err());
        assert!(JccsConfig::new(4, 10, 0, 0.1, vec![a.clone()], 0).is_err());
        assert!(JccsConfig::new(4, 10, 1, -0.1, vec![a], 0).is_err());
    }
}
