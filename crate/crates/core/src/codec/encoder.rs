use rand::Rng;

use crate::channel::DiscreteChannelFamily;
use crate::codec::codebook::{Codeword, SubblockCodebook};
use crate::codec::estimator::PilotWindow;
use crate::error::{Error, Result};

/// Feedback-driven JCCS encoder for one message.
///
/// Emits x^n = (x_1, x̆_1, ..., x_k, x̆_k). The estimate ŝ_j is fixed before
/// subblock j starts: uniform over the post-change states for j ≤ η, else the
/// ML estimate from the pilots of subblocks j−η, ..., j−1. Every emitted symbol
/// must be answered by its echo before the next one is requested.
#[derive(Debug, Clone)]
pub struct Encoder<'a> {
    codebook: &'a SubblockCodebook,
    codeword: &'a Codeword,
    sensing: &'a DiscreteChannelFamily,
    window: PilotWindow,
    estimates: Vec<usize>,
    position: usize,
    awaiting_feedback: bool,
}

/// What the encoder just emitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Emission {
    Payload { subblock: usize, index: usize, symbol: usize },
    Pilot { subblock: usize, symbol: usize },
}

impl Emission {
    pub fn symbol(&self) -> usize {
        match *self {
            Emission::Payload { symbol, .. } | Emission::Pilot { symbol, .. } => symbol,
        }
    }
}

impl<'a> Encoder<'a> {
    pub fn new(codebook: &'a SubblockCodebook, codeword: &'a Codeword, sensing: &'a DiscreteChannelFamily) -> Result<Self> {
        let cfg = codebook.config();
        if sensing.post_state_count() != cfg.post_state_count() || sensing.input_count() != cfg.input_count() {
            return Err(Error::InvalidConfig(
                "sensing family does not match the code's states or inputs".into(),
            ));
        }
        Ok(Self {
            codebook,
            codeword,
            sensing,
            window: PilotWindow::new(cfg.eta(), sensing.input_count(), sensing.output_count()),
            estimates: Vec::with_capacity(cfg.subblocks()),
            position: 0,
            awaiting_feedback: false,
        })
    }

    /// Symbols emitted so far.
    pub fn position(&self) -> usize {
        self.position
    }

    pub fn is_finished(&self) -> bool {
        self.position as u64 == self.codebook.config().block_length()
    }

    /// ŝ_1, ..., ŝ_j for the subblocks started so far.
    pub fn estimates(&self) -> &[usize] {
        &self.estimates
    }

    /// Emits the next symbol. `rng` supplies the uniform draws for j ≤ η.
    pub fn next_symbol<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Emission> {
        if self.awaiting_feedback {
            return Err(Error::ProtocolViolation(format!(
                "feedback for symbol {} is missing",
                self.position
            )));
        }
        if self.is_finished() {
            return Err(Error::ProtocolViolation("block already complete".into()));
        }
        let frame = self.codebook.config().frame();
        let j = self.position / frame + 1;
        let offset = self.position % frame;
        if offset == 0 {
            let estimate = if j <= self.codebook.config().eta() {
                rng.gen_range(1..=self.sensing.post_state_count())
            } else {
                self.window.estimate(self.sensing)
            };
            self.estimates.push(estimate);
        }
        self.position += 1;
        self.awaiting_feedback = true;
        if offset == frame - 1 {
            Ok(Emission::Pilot {
                subblock: j,
                symbol: self.codebook.pilot(j),
            })
        } else {
            let q = self.estimates[j - 1];
            Ok(Emission::Payload {
                subblock: j,
                index: offset,
                symbol: self.codeword.subblock(j, q)[offset] as usize,
            })
        }
    }

    /// Delivers the echo y of the most recently emitted symbol.
    pub fn feedback(&mut self, y: usize) -> Result<()> {
        if !self.awaiting_feedback {
            return Err(Error::ProtocolViolation("feedback without an emitted symbol".into()));
        }
        if y >= self.sensing.output_count() {
            return Err(Error::IndexOutOfRange(format!("echo output {y}")));
        }
        self.awaiting_feedback = false;
        let frame = self.codebook.config().frame();
        if self.position % frame == 0 {
            let j = self.position / frame;
            self.window.push(self.codebook.pilot(j), y);
        }
        Ok(())
    }

    /// The payload of subblock j as sent (composition π_{ŝ_j}).
    pub fn sent_subblock(&self, j: usize) -> &[u8] {
        self.codeword.subblock(j, self.estimates[j - 1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::config::JccsConfig;
    use crate::presets::bibo_sensing;
    use crate::rngs::stream;

    fn setup(seed: u64) -> (JccsConfig, SubblockCodebook) {
        let cfg = JccsConfig::from_distributions(6, 30, 3, 0.05, &[vec![0.5, 0.5], vec![1.0 / 6.0, 5.0 / 6.0]], seed).unwrap();
        let book = SubblockCodebook::lazy(&cfg);
        (cfg, book)
    }

    #[test]
    fn frame_structure_and_compositions() {
        let (cfg, book) = setup(4);
        let f = bibo_sensing();
        let cw = book.codeword(1);
        let mut enc = Encoder::new(&book, &cw, &f).unwrap();
        let mut rng = stream(1, &[]);
        let mut sent = Vec::new();
        while !enc.is_finished() {
            let e = enc.next_symbol(&mut rng).unwrap();
            sent.push(e.symbol());
            if enc.position() % cfg.frame() == 0 {
                assert!(matches!(e, Emission::Pilot { .. }));
            }
            enc.feedback(f.sample(1, e.symbol(), &mut rng)).unwrap();
        }
        assert_eq!(sent.len() as u64, cfg.block_length());
        for j in 1..=cfg.subblocks() {
            assert_eq!(sent[j * cfg.frame() - 1], book.pilot(j));
            let payload = &sent[(j - 1) * cfg.frame()..j * cfg.frame() - 1];
            assert!(cfg.composition(enc.estimates()[j - 1]).matches(payload));
        }
    }

    #[test]
    fn protocol_violations() {
        let (_, book) = setup(4);
        let f = bibo_sensing();
        let cw = book.codeword(0);
        let mut enc = Encoder::new(&book, &cw, &f).unwrap();
        let mut rng = stream(2, &[]);
        assert!(enc.feedback(0).is_err());
        enc.next_symbol(&mut rng).unwrap();
        assert!(matches!(enc.next_symbol(&mut rng), Err(Error::ProtocolViolation(_))));
        enc.feedback(1).unwrap();
        assert!(enc.next_symbol(&mut rng).is_ok());
    }

    #[test]
    fn estimates_are_causal() {
        // Corrupting echoes after subblock j leaves ŝ_1..ŝ_{j+1} unchanged.
        let (cfg, book) = setup(8);
        let f = bibo_sensing();
        let cw = book.codeword(2);
        let run = |corrupt_after: usize| {
            let mut enc = Encoder::new(&book, &cw, &f).unwrap();
            let mut rng = stream(3, &[]);
            let mut noise = stream(4, &[]);
            while !enc.is_finished() {
                let e = enc.next_symbol(&mut rng).unwrap();
                let mut y = f.sample(2, e.symbol(), &mut noise);
                if enc.position() > corrupt_after * cfg.frame() {
                    y = 1 - y;
                }
                enc.feedback(y).unwrap();
            }
            enc.estimates().to_vec()
        };
        let clean = run(cfg.subblocks());
        for cut in [3, 10, 20] {
            let dirty = run(cut);
            assert_eq!(&clean[..=cut], &dirty[..=cut]);
        }
    }
}
