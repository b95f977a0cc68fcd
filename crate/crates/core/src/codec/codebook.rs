use rand::seq::SliceRandom;
use rand::Rng;

use crate::codec::config::JccsConfig;
use crate::error::{Error, Result};
use crate::rngs::{stream, tag};

/// Default memory budget (stored symbols) for up-front generation.
pub const DEFAULT_SYMBOL_BUDGET: u128 = 1 << 26;

/// Subblock codewords x_j(m|q) and the shared pilot sequence.
///
/// Every subblock is a Fisher–Yates shuffle of the composition multiset driven
/// by its own stream keyed by (master seed, m, j, q), so a subblock can be
/// produced on demand. The eager form only caches those same draws; both
/// forms are bit-identical.
#[derive(Debug, Clone)]
pub struct SubblockCodebook {
    config: JccsConfig,
    pilots: Vec<usize>,
    cache: Option<Vec<u8>>,
}

/// Generates every subblock up front, or fails with `CapacityOverflow`
/// when M·k·|S|·L exceeds `symbol_budget`.
pub fn generate_codebook(config: &JccsConfig, symbol_budget: u128) -> Result<SubblockCodebook> {
    let needed = (config.message_count() as u128)
        .saturating_mul(config.subblocks() as u128)
        .saturating_mul(config.post_state_count() as u128)
        .saturating_mul(config.subblock_len() as u128);
    if config.message_count() >= u64::MAX as f64 || needed > symbol_budget {
        return Err(Error::CapacityOverflow {
            needed,
            budget: symbol_budget,
        });
    }
    let mut book = SubblockCodebook::lazy(config);
    let l = config.subblock_len();
    let mut cache = Vec::with_capacity(needed as usize);
    let mut buf = vec![0usize; l];
    for m in 0..config.message_index_limit() {
        for j in 1..=config.subblocks() {
            for q in 1..=config.post_state_count() {
                book.subblock_into(m, j, q, &mut buf);
                cache.extend(buf.iter().map(|&x| x as u8));
            }
        }
    }
    book.cache = Some(cache);
    Ok(book)
}

impl SubblockCodebook {
    /// Codebook whose subblocks are derived on demand.
    pub fn lazy(config: &JccsConfig) -> Self {
        let mut rng = stream(config.master_seed(), &[tag::PILOTS]);
        let inputs = config.input_count();
        let pilots = (0..config.subblocks()).map(|_| rng.gen_range(0..inputs)).collect();
        Self {
            config: config.clone(),
            pilots,
            cache: None,
        }
    }

    /// Eager when it fits the budget, lazy otherwise.
    pub fn build(config: &JccsConfig, symbol_budget: u128) -> Self {
        generate_codebook(config, symbol_budget).unwrap_or_else(|_| Self::lazy(config))
    }

    pub fn config(&self) -> &JccsConfig {
        &self.config
    }

    pub fn is_eager(&self) -> bool {
        self.cache.is_some()
    }

    /// Pilot x̆_j, 1-based.
    pub fn pilot(&self, j: usize) -> usize {
        self.pilots[j - 1]
    }

    pub fn pilots(&self) -> &[usize] {
        &self.pilots
    }

    /// Writes x_j(m|q) into `out` (length L). `j` and `q` are 1-based.
    pub fn subblock_into(&self, m: u64, j: usize, q: usize, out: &mut [usize]) {
        let l = self.config.subblock_len();
        debug_assert_eq!(out.len(), l);
        if let Some(cache) = &self.cache {
            let s = self.config.post_state_count();
            let idx = ((m as usize * self.config.subblocks() + (j - 1)) * s + (q - 1)) * l;
            for (o, &x) in out.iter_mut().zip(&cache[idx..idx + l]) {
                *o = x as usize;
            }
            return;
        }
        let counts = self.config.composition(q).counts();
        let mut pos = 0;
        for (x, &c) in counts.iter().enumerate() {
            out[pos..pos + c].fill(x);
            pos += c;
        }
        let mut rng = stream(self.config.master_seed(), &[tag::SUBBLOCK, m, j as u64, q as u64]);
        out.shuffle(&mut rng);
    }

    pub fn subblock(&self, m: u64, j: usize, q: usize) -> Vec<usize> {
        let mut out = vec![0; self.config.subblock_len()];
        self.subblock_into(m, j, q, &mut out);
        out
    }

    /// All subblocks of message m, for every subblock index and state.
    pub fn codeword(&self, m: u64) -> Codeword {
        let l = self.config.subblock_len();
        let k = self.config.subblocks();
        let s = self.config.post_state_count();
        let mut symbols = Vec::with_capacity(k * s * l);
        let mut buf = vec![0usize; l];
        for j in 1..=k {
            for q in 1..=s {
                self.subblock_into(m, j, q, &mut buf);
                symbols.extend(buf.iter().map(|&x| x as u8));
            }
        }
        Codeword {
            message: m,
            subblock_len: l,
            states: s,
            symbols,
        }
    }
}

/// One message's subblocks laid out as [j][q][i].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codeword {
    message: u64,
    subblock_len: usize,
    states: usize,
    symbols: Vec<u8>,
}

impl Codeword {
    pub fn message(&self) -> u64 {
        self.message
    }

    /// Symbols of x_j(m|q), 1-based j and q.
    #[inline]
    pub fn subblock(&self, j: usize, q: usize) -> &[u8] {
        let start = ((j - 1) * self.states + (q - 1)) * self.subblock_len;
        &self.symbols[start..start + self.subblock_len]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(l: usize, k: usize, rate: f64, seed: u64) -> JccsConfig {
        JccsConfig::from_distributions(l, k, 1, rate, &[vec![0.5, 0.5], vec![0.25, 0.75]], seed).unwrap()
    }

    #[test]
    fn subblocks_have_exact_composition() {
        let c = cfg(4, 6, 0.2, 3);
        let book = generate_codebook(&c, DEFAULT_SYMBOL_BUDGET).unwrap();
        for m in 0..c.message_index_limit() {
            for j in 1..=6 {
                assert!(c.composition(1).matches(&book.subblock(m, j, 1)));
                let sb = book.subblock(m, j, 2);
                assert!(c.composition(2).matches(&sb));
                assert_eq!(sb.iter().filter(|&&x| x == 1).count(), 3);
            }
        }
    }

    #[test]
    fn eager_and_lazy_agree() {
        let c = cfg(5, 4, 0.3, 11);
        let eager = generate_codebook(&c, DEFAULT_SYMBOL_BUDGET).unwrap();
        let lazy = SubblockCodebook::lazy(&c);
        assert!(eager.is_eager() && !lazy.is_eager());
        assert_eq!(eager.pilots(), lazy.pilots());
        for m in 0..c.message_index_limit() {
            assert_eq!(eager.codeword(m), lazy.codeword(m));
        }
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let a = SubblockCodebook::lazy(&cfg(8, 50, 0.1, 5));
        let b = SubblockCodebook::lazy(&cfg(8, 50, 0.1, 5));
        let c = SubblockCodebook::lazy(&cfg(8, 50, 0.1, 6));
        assert_eq!(a.pilots(), b.pilots());
        assert_eq!(a.codeword(3), b.codeword(3));
        assert_ne!(a.pilots(), c.pilots());
    }

    #[test]
    fn overflow_is_reported() {
        let c = cfg(24, 100, 0.5, 0);
        match generate_codebook(&c, 1 << 20) {
            Err(Error::CapacityOverflow { .. }) => {}
            other => panic!("expected overflow, got {other:?}"),
        }
        assert!(!SubblockCodebook::build(&c, 1 << 20).is_eager());
    }

    #[test]
    fn pilots_are_message_independent_and_roughly_uniform() {
        let book = SubblockCodebook::lazy(&cfg(4, 20_000, 0.0, 9));
        let ones = book.pilots().iter().filter(|&&x| x == 1).count() as f64 / 20_000.0;
        assert!((ones - 0.5).abs() < 0.02);
    }
}
