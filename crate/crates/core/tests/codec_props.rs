use isacqcd_core::codec::{Emission, Encoder, JccsConfig, SubblockCodebook};
use isacqcd_core::presets::bibo_sensing;
use isacqcd_core::rngs::stream;
use proptest::prelude::*;
use rand::Rng;

fn config(l: usize, k: usize, eta: usize, seed: u64) -> JccsConfig {
    JccsConfig::from_distributions(l, k, eta, 0.05, &[vec![0.6, 0.4], vec![0.3, 0.7]], seed).unwrap()
}

/// Runs the encoder to the end; `echo(position, x)` supplies the feedback.
fn run(cfg: &JccsConfig, m: u64, rng_seed: u64, mut echo: impl FnMut(usize, usize) -> usize) -> (Vec<Emission>, Vec<usize>) {
    let book = SubblockCodebook::lazy(cfg);
    let cw = book.codeword(m);
    let sensing = bibo_sensing();
    let mut enc = Encoder::new(&book, &cw, &sensing).unwrap();
    let mut rng = stream(rng_seed, &[0]);
    let mut out = Vec::new();
    while !enc.is_finished() {
        let e = enc.next_symbol(&mut rng).unwrap();
        let y = echo(enc.position(), e.symbol());
        enc.feedback(y).unwrap();
        out.push(e);
    }
    (out, enc.estimates().to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn frame_structure_and_exact_compositions(l in 2usize..9, k in 2usize..12, eta_frac in 0.0f64..1.0, seed in any::<u64>(), m_frac in 0.0f64..1.0) {
        let eta = 1 + ((k - 1) as f64 * eta_frac) as usize % (k - 1).max(1);
        let cfg = config(l, k, eta, seed);
        let m = (m_frac * cfg.message_index_limit() as f64) as u64 % cfg.message_index_limit().max(1);
        let sensing = bibo_sensing();
        let mut rng = stream(seed ^ 1, &[]);
        let (emitted, estimates) = run(&cfg, m, seed, |_, x| sensing.sample(1, x, &mut rng));
        prop_assert_eq!(emitted.len(), k * (l + 1));
        let book = SubblockCodebook::lazy(&cfg);
        for j in 1..=k {
            let pilot = emitted[j * (l + 1) - 1];
            prop_assert_eq!(pilot, Emission::Pilot { subblock: j, symbol: book.pilot(j) });
            let payload: Vec<usize> = emitted[(j - 1) * (l + 1)..j * (l + 1) - 1].iter().map(|e| e.symbol()).collect();
            prop_assert!(cfg.composition(estimates[j - 1]).matches(&payload));
        }
    }

    #[test]
    fn estimates_ignore_future_feedback(l in 2usize..6, k in 4usize..14, eta in 1usize..4, seed in any::<u64>(), cut_frac in 0.0f64..1.0) {
        let eta = eta.min(k - 1);
        let cfg = config(l, k, eta, seed);
        let frame = l + 1;
        let cut = (cut_frac * (k * frame) as f64) as usize;
        let mut a_rng = stream(seed, &[1]);
        let honest: Vec<usize> = (0..k * frame).map(|_| a_rng.gen_range(0..2)).collect();
        let (_, a) = run(&cfg, 0, seed, |p, _| honest[p - 1]);
        // corrupt every echo at positions > cut
        let (_, b) = run(&cfg, 0, seed, |p, _| if p > cut { 1 - honest[p - 1] } else { honest[p - 1] });
        for j in 1..=k {
            // ŝ_j is fixed when symbol (j−1)·frame + 1 is emitted, using echoes up to (j−1)·frame
            if (j - 1) * frame <= cut {
                prop_assert_eq!(a[j - 1], b[j - 1], "subblock {}", j);
            }
        }
    }

    #[test]
    fn seed_determines_code(seed in any::<u64>(), m in 0u64..4) {
        let cfg = config(6, 5, 2, seed);
        let (b1, b2) = (SubblockCodebook::lazy(&cfg), SubblockCodebook::lazy(&cfg));
        prop_assert_eq!(b1.pilots(), b2.pilots());
        let m = m % cfg.message_index_limit().max(1);
        for j in 1..=5 {
            for q in 1..=2 {
                prop_assert_eq!(b1.subblock(m, j, q), b2.subblock(m, j, q));
            }
        }
        let sensing = bibo_sensing();
        let mut r1 = stream(seed, &[9]);
        let mut r2 = stream(seed, &[9]);
        let run1 = run(&cfg, m, seed, |_, x| sensing.sample(2, x, &mut r1));
        let run2 = run(&cfg, m, seed, |_, x| sensing.sample(2, x, &mut r2));
        prop_assert_eq!(run1, run2);
    }
}

#[test]
fn different_seeds_give_different_codes() {
    let a = SubblockCodebook::lazy(&config(24, 8, 2, 1));
    let b = SubblockCodebook::lazy(&config(24, 8, 2, 2));
    let differs = (1..=8).any(|j| a.subblock(0, j, 1) != b.subblock(0, j, 1)) || a.pilots() != b.pilots();
    assert!(differs);
}
