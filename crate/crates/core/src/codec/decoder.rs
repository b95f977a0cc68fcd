use std::collections::BTreeMap;

use crate::channel::DiscreteChannelFamily;
use crate::codec::codebook::SubblockCodebook;
use crate::codec::config::JccsConfig;
use crate::error::{Error, Result};

/// Largest message set searched exhaustively by [`decode`].
pub const EXHAUSTIVE_LIMIT: u64 = 1 << 16;

fn check_inputs(cfg: &JccsConfig, estimates: &[usize], comm_obs: &[usize], comm: &DiscreteChannelFamily) -> Result<()> {
    if estimates.len() != cfg.subblocks() {
        return Err(Error::InvalidConfig(format!(
            "{} estimates for {} subblocks",
            estimates.len(),
            cfg.subblocks()
        )));
    }
    if comm_obs.len() as u64 != cfg.block_length() {
        return Err(Error::InvalidConfig(format!(
            "{} observations for block length {}",
            comm_obs.len(),
            cfg.block_length()
        )));
    }
    if comm.input_count() != cfg.input_count() || comm.post_state_count() < cfg.post_state_count() {
        return Err(Error::InvalidConfig("comm family does not match the code".into()));
    }
    if let Some(&bad) = estimates.iter().find(|&&q| q == 0 || q > cfg.post_state_count()) {
        return Err(Error::StateOutOfRange(bad));
    }
    Ok(())
}

/// Payload observations of subblock j (1-based).
fn payload<'a>(cfg: &JccsConfig, comm_obs: &'a [usize], j: usize) -> &'a [usize] {
    let start = (j - 1) * cfg.frame();
    &comm_obs[start..start + cfg.subblock_len()]
}

/// Exhaustive ML decoding: argmax_m Σ_j log p^{(ŝ_j)}(ỹ_j | x_j(m|ŝ_j)).
///
/// Pilot positions carry no message information and are skipped; ties go to
/// the smallest message index.
pub fn decode(
    codebook: &SubblockCodebook,
    estimates: &[usize],
    comm_obs: &[usize],
    comm: &DiscreteChannelFamily,
) -> Result<u64> {
    let cfg = codebook.config();
    check_inputs(cfg, estimates, comm_obs, comm)?;
    let messages = cfg.message_index_limit();
    if messages > EXHAUSTIVE_LIMIT {
        return Err(Error::Unsupported(format!(
            "exhaustive decoding over {messages} messages"
        )));
    }
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    let mut buf = vec![0usize; cfg.subblock_len()];
    for m in 0..messages {
        let mut score = 0.0;
        for (j, &q) in estimates.iter().enumerate() {
            codebook.subblock_into(m, j + 1, q, &mut buf);
            for (&x, &y) in buf.iter().zip(payload(cfg, comm_obs, j + 1)) {
                score += comm.log_prob(q, x, y);
            }
            if score == f64::NEG_INFINITY {
                break;
            }
        }
        if score > best_score {
            best_score = score;
            best = m;
        }
    }
    Ok(best)
}

fn log_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.0);
    for i in 1..=n {
        out.push(out[i - 1] + (i as f64).ln());
    }
    out
}

/// All |X|×|Y| tables with the given row and column sums.
fn enumerate_tables(rows: &[usize], cols: &[usize], out: &mut Vec<Vec<u16>>) {
    fn fill(cell: usize, rows: &[usize], cols_left: &mut [usize], row_left: usize, cur: &mut Vec<u16>, out: &mut Vec<Vec<u16>>) {
        let ny = cols_left.len();
        let nx = rows.len();
        if cell == nx * ny {
            out.push(cur.clone());
            return;
        }
        let (x, y) = (cell / ny, cell % ny);
        if y == ny - 1 {
            // Last column of a row takes whatever the row still needs.
            if row_left > cols_left[y] {
                return;
            }
            cols_left[y] -= row_left;
            cur.push(row_left as u16);
            let next_row = if x + 1 < nx { rows[x + 1] } else { 0 };
            fill(cell + 1, rows, cols_left, next_row, cur, out);
            cur.pop();
            cols_left[y] += row_left;
            return;
        }
        for t in 0..=row_left.min(cols_left[y]) {
            cols_left[y] -= t;
            cur.push(t as u16);
            fill(cell + 1, rows, cols_left, row_left - t, cur, out);
            cur.pop();
            cols_left[y] += t;
        }
    }
    let mut cols_left = cols.to_vec();
    let mut cur = Vec::with_capacity(rows.len() * cols.len());
    fill(0, rows, &mut cols_left, rows[0], &mut cur, out);
}

fn table_score(table: &[u32], log_p: &[f64]) -> f64 {
    let mut s = 0.0;
    for (&t, &lp) in table.iter().zip(log_p) {
        if t > 0 {
            s += t as f64 * lp;
        }
    }
    s
}

/// Cap on the number of distinct aggregated tables tracked per state.
const MAX_SUPPORT: usize = 2_000_000;

/// Probability of a decoding error averaged over the random-coding ensemble,
/// conditioned on the observed trial.
///
/// Given the delivered estimates, the comm observations and the codeword that
/// was actually sent, every competing message is an independent draw whose
/// subblock j is a uniform arrangement of π_{ŝ_j}. The competitor's score in
/// subblock j depends only on the joint-type table against ỹ_j, whose law is
/// multivariate hypergeometric; these laws are convolved exactly, which yields
/// P(competitor beats) and P(competitor ties). Errors are then counted for M−1
/// i.i.d. competitors with ties resolved toward the smaller index, as
/// [`decode`] does.
pub fn ensemble_error_probability(
    cfg: &JccsConfig,
    estimates: &[usize],
    sent: &[&[u8]],
    comm_obs: &[usize],
    comm: &DiscreteChannelFamily,
) -> Result<f64> {
    check_inputs(cfg, estimates, comm_obs, comm)?;
    if sent.len() != cfg.subblocks() {
        return Err(Error::InvalidConfig("one sent subblock per index is required".into()));
    }
    let nx = cfg.input_count();
    let ny = comm.output_count();
    let l = cfg.subblock_len();
    let lf = log_factorials(l);
    let states = cfg.post_state_count();
    let log_p: Vec<Vec<f64>> = (1..=states)
        .map(|q| {
            (0..nx * ny)
                .map(|c| comm.log_prob(q, c / ny, c % ny))
                .collect()
        })
        .collect();

    let mut true_tables = vec![vec![0u32; nx * ny]; states];
    // Per-state law of the aggregated competitor table, with a running log scale.
    let mut laws: Vec<BTreeMap<Vec<u32>, f64>> = (0..states)
        .map(|_| BTreeMap::from([(vec![0u32; nx * ny], 1.0)]))
        .collect();
    let mut log_scale = vec![0.0f64; states];
    let mut tables = Vec::new();

    for (j, &q) in estimates.iter().enumerate() {
        let obs = payload(cfg, comm_obs, j + 1);
        let mut col = vec![0usize; ny];
        for (&x, &y) in sent[j].iter().zip(obs) {
            col[y] += 1;
            true_tables[q - 1][x as usize * ny + y] += 1;
        }
        let rows = cfg.composition(q).counts();
        tables.clear();
        enumerate_tables(rows, &col, &mut tables);
        let base: f64 = rows.iter().map(|&c| lf[c]).sum::<f64>() + col.iter().map(|&c| lf[c]).sum::<f64>() - lf[l];
        let lp = &log_p[q - 1];
        let support: Vec<(&Vec<u16>, f64)> = tables
            .iter()
            .filter(|t| t.iter().zip(lp).all(|(&c, &p)| c == 0 || p > f64::NEG_INFINITY))
            .map(|t| {
                let lprob = base - t.iter().map(|&c| lf[c as usize]).sum::<f64>();
                (t, lprob.exp())
            })
            .collect();

        let law = &laws[q - 1];
        let mut next: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (agg, &pa) in law {
            for &(t, pt) in &support {
                let key: Vec<u32> = agg.iter().zip(t.iter()).map(|(&a, &b)| a + b as u32).collect();
                *next.entry(key).or_insert(0.0) += pa * pt;
            }
        }
        if next.len() > MAX_SUPPORT {
            return Err(Error::Unsupported(format!(
                "competitor score law has {} support points",
                next.len()
            )));
        }
        let peak = next.values().fold(0.0f64, |a, &b| a.max(b));
        if peak > 0.0 {
            for v in next.values_mut() {
                *v /= peak;
            }
            log_scale[q - 1] += peak.ln();
        } else {
            // Every competitor arrangement is impossible: no competitor can tie or win.
            return Ok(0.0);
        }
        laws[q - 1] = next;
    }

    let true_score: f64 = (0..states).map(|q| table_score(&true_tables[q], &log_p[q])).sum();
    let tol = 1e-9 * (1.0 + true_score.abs());

    // Fold all states into one sorted score law.
    let mut combined: Vec<(f64, f64)> = vec![(0.0, 1.0)];
    let mut combined_scale = 0.0;
    for q in 0..states {
        let law: Vec<(f64, f64)> = laws[q]
            .iter()
            .map(|(t, &p)| (table_score(t, &log_p[q]), p))
            .collect();
        let mut next = Vec::with_capacity(combined.len() * law.len());
        for &(sa, pa) in &combined {
            for &(sb, pb) in &law {
                next.push((sa + sb, pa * pb));
            }
        }
        next.sort_by(|a, b| a.0.total_cmp(&b.0));
        combined = merge_close(next, 1e-12 * (1.0 + true_score.abs()));
        combined_scale += log_scale[q];
    }
    let mut p_gt = 0.0;
    let mut p_eq = 0.0;
    for &(s, p) in &combined {
        if (s - true_score).abs() <= tol {
            p_eq += p;
        } else if s > true_score {
            p_gt += p;
        }
    }
    let ln_gt = p_gt.ln() + combined_scale;
    let ln_eq = p_eq.ln() + combined_scale;
    Ok(error_given_competitor_law(cfg.message_count(), ln_gt, ln_eq))
}

fn merge_close(sorted: Vec<(f64, f64)>, tol: f64) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(sorted.len());
    for (s, p) in sorted {
        match out.last_mut() {
            Some(last) if (s - last.0).abs() <= tol => last.1 += p,
            _ => out.push((s, p)),
        }
    }
    out
}

/// P(error) with M−1 i.i.d. competitors that beat the true message with
/// probability e^{ln_gt} and tie with probability e^{ln_eq}; ties resolve
/// toward the smaller index and the true index is uniform.
///
/// P(correct) = (1/M) Σ_{i<M} a^i b^{M−1−i} with b = 1 − q_>, a = b − q_=.
pub fn error_given_competitor_law(messages: f64, ln_gt: f64, ln_eq: f64) -> f64 {
    if messages <= 1.0 {
        return 0.0;
    }
    let q_gt = ln_gt.exp().min(1.0);
    let ln_m = messages.ln();
    let ln_m1 = (messages - 1.0).ln();
    let ln_b = (-q_gt).ln_1p();
    // (M−1) ln b
    let term1 = if q_gt < 1e-8 {
        -(ln_m1 + ln_gt).exp() * (1.0 + q_gt / 2.0)
    } else {
        (messages - 1.0) * ln_b
    };
    let ln_h = if ln_eq == f64::NEG_INFINITY {
        0.0
    } else {
        let ln_d = ln_eq - ln_b;
        let d = ln_d.exp();
        if d >= 1.0 {
            // a = 0: only the i = 0 term survives.
            return -(term1 - ln_m).exp_m1();
        }
        let (w, ln_c) = if d < 1e-8 {
            ((ln_m + ln_d).exp() * (1.0 + d / 2.0), -d / 2.0)
        } else {
            let neg_ln_r = -(-d).ln_1p();
            (messages * neg_ln_r, ln_d - neg_ln_r.ln())
        };
        let ln_g = if w < 1e-5 {
            -w / 2.0 + w * w / 24.0
        } else {
            (-(-w).exp_m1()).ln() - w.ln()
        };
        ln_g - ln_c
    };
    (-(term1 + ln_h).exp_m1()).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables_respect_margins() {
        let mut out = Vec::new();
        enumerate_tables(&[2, 1], &[1, 2], &mut out);
        assert_eq!(out.len(), 2);
        for t in &out {
            assert_eq!(t[0] + t[1], 2);
            assert_eq!(t[2] + t[3], 1);
            assert_eq!(t[0] + t[2], 1);
        }
        out.clear();
        enumerate_tables(&[3, 2, 1], &[2, 2, 2], &mut out);
        // brute force count over the four free cells
        let mut n = 0;
        for a in 0..=3u16 {
            for b in 0..=3 - a {
                for c in 0..=2u16 {
                    for d in 0..=2 - c {
                        let row0 = [a, b, 3 - a - b];
                        let row1 = [c, d, 2 - c - d];
                        let ok = (0..3).all(|y| row0[y] + row1[y] <= 2)
                            && (0..3).map(|y| 2 - row0[y] - row1[y]).sum::<u16>() == 1;
                        if ok {
                            n += 1;
                        }
                    }
                }
            }
        }
        assert_eq!(out.len(), n);
    }

    #[test]
    fn closed_form_limits() {
        // No competitors.
        assert_eq!(error_given_competitor_law(1.0, 0.0, 0.0), 0.0);
        // Competitors always tie: correct only when the true index is smallest.
        let m = 16.0;
        let p = error_given_competitor_law(m, f64::NEG_INFINITY, 0.0);
        assert!((p - (1.0 - 1.0 / m)).abs() < 1e-12);
        // Competitors always win.
        assert!((error_given_competitor_law(m, 0.0, f64::NEG_INFINITY) - 1.0).abs() < 1e-12);
        // Small-probability regime: ≈ (M−1)q_> + (M−1)q_=/2.
        let (qg, qe) = (1e-20f64, 4e-20f64);
        let p = error_given_competitor_law(1e6, qg.ln(), qe.ln());
        let approx = (1e6 - 1.0) * (qg + qe / 2.0);
        assert!((p / approx - 1.0).abs() < 1e-6);
    }

    #[test]
    fn closed_form_matches_direct_sum() {
        for &(m, qg, qe) in &[(5.0, 0.1, 0.2), (40.0, 0.01, 0.05), (3.0, 0.3, 0.0), (7.0, 0.0, 0.3)] {
            let (b, a) = (1.0f64 - qg, 1.0f64 - qg - qe);
            let correct: f64 = (0..m as i32).map(|i| a.powi(i) * b.powi(m as i32 - 1 - i)).sum::<f64>() / m;
            let p = error_given_competitor_law(m, f64::ln(qg), f64::ln(qe));
            assert!((p - (1.0 - correct)).abs() < 1e-12, "{m} {qg} {qe}: {p} vs {}", 1.0 - correct);
        }
    }
}
