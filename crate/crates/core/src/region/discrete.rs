use rayon::prelude::*;

use super::optimize::{golden_section_max, maximize_concave, LinearConstraint};
use super::{backward_monotone, check_grid, Coupling, CurvePoint, RegionCurve, RegionPoint, Witness};
use crate::channel::info::{bits_to_nats, check_distribution, nats_to_bits};
use crate::channel::{ChannelPair, DiscreteChannelFamily};
use crate::error::{Error, Result};

/// Stopping gap between the Blahut–Arimoto upper and lower bounds, in bits.
pub const BA_TOL_BITS: f64 = 1e-9;
/// Iteration cap; the Z-type channels used here converge in a few thousand.
pub const BA_MAX_ITER: usize = 200_000;
/// Largest row difference for which the comm channel counts as state-independent.
pub const STATE_INDEPENDENCE_TOL: f64 = 1e-9;

/// Rate min_s I(X_s; Ỹ_s) and drifts Δ_s = D(p^(s) ‖ p^(0) | p(x|s)) for one
/// input law per post-change state.
pub fn closed_loop_point(pair: &ChannelPair, dists: &[Vec<f64>]) -> Result<RegionPoint> {
    let states = pair.post_state_count();
    if dists.len() != states {
        return Err(Error::InvalidConfig(format!(
            "{} input distributions for {states} post-change states",
            dists.len()
        )));
    }
    let mut rate = f64::INFINITY;
    let mut delta = Vec::with_capacity(states);
    for (i, p) in dists.iter().enumerate() {
        let s = i + 1;
        check_distribution(p, pair.input_count())?;
        rate = rate.min(pair.comm.mutual_information(s, p)?);
        delta.push(nats_to_bits(pair.sensing.conditional_kl(s, 0, p)?));
    }
    Ok(RegionPoint {
        rate_bits: rate,
        delta_bits: delta,
        witness: Witness::Discrete(dists.to_vec()),
    })
}

/// Per-state slopes D(p^(s) ‖ p^(0) | p(x|s)) in nats: |ln α| / WADD can not
/// exceed these asymptotically.
pub fn converse_slope(pair: &ChannelPair, dists: &[Vec<f64>]) -> Result<Vec<f64>> {
    if dists.len() != pair.post_state_count() {
        return Err(Error::InvalidConfig("one distribution per post-change state".into()));
    }
    dists
        .iter()
        .enumerate()
        .map(|(i, p)| pair.sensing.conditional_kl(i + 1, 0, p))
        .collect()
}

fn max_drift(sensing: &DiscreteChannelFamily, s: usize) -> Result<f64> {
    Ok(sensing.drift_vector(s)?.into_iter().fold(0.0, f64::max))
}

/// Largest coupled Δ (bits) reachable by the closed-loop scheme.
pub fn closed_loop_max_delta(pair: &ChannelPair, coupling: &Coupling) -> Result<f64> {
    check_coupling(pair.post_state_count(), coupling)?;
    let mut max = f64::INFINITY;
    for (i, &w) in coupling.weights().iter().enumerate() {
        if w > 0.0 {
            max = max.min(max_drift(&pair.sensing, i + 1)? / w);
        }
    }
    Ok(nats_to_bits(max))
}

fn check_coupling(states: usize, coupling: &Coupling) -> Result<()> {
    if coupling.weights().len() != states {
        return Err(Error::InvalidConfig(format!(
            "coupling has {} weights for {states} states",
            coupling.weights().len()
        )));
    }
    Ok(())
}

fn drift_constraint(pair: &ChannelPair, s: usize, target_bits: f64) -> Result<LinearConstraint> {
    Ok(LinearConstraint {
        coeffs: pair.sensing.drift_vector(s)?,
        target: bits_to_nats(target_bits),
    })
}

/// Frontier of the closed-loop region under `coupling`: for each target Δ,
/// each state independently maximizes its rate subject to its drift target
/// and the point takes the minimum rate.
pub fn closed_loop_curve(pair: &ChannelPair, coupling: &Coupling, grid_bits: &[f64], steps: usize) -> Result<RegionCurve> {
    check_grid(grid_bits)?;
    check_coupling(pair.post_state_count(), coupling)?;
    let max = closed_loop_max_delta(pair, coupling)?;
    let inputs = pair.input_count();
    let mut points = grid_bits
        .par_iter()
        .map(|&delta| {
            let targets = coupling.targets(delta);
            let mut dists = Vec::with_capacity(targets.len());
            for (i, &t) in targets.iter().enumerate() {
                let s = i + 1;
                let cons = [drift_constraint(pair, s, t)?];
                let objective = |p: &[f64]| pair.comm.mutual_information_unchecked(s, p);
                let (p, _) = maximize_concave(inputs, objective, &cons, steps).ok_or(Error::Infeasible { target: delta, max })?;
                dists.push(p);
            }
            Ok(CurvePoint {
                target_bits: delta,
                point: closed_loop_point(pair, &dists)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    backward_monotone(&mut points);
    Ok(RegionCurve {
        label: format!("closed-loop {}", coupling.label()),
        points,
    })
}

/// Replaces per-state witnesses of `closed` by those of `other` at equal
/// targets whenever they are feasible and carry a higher rate. A curve
/// refined this way dominates `other` exactly.
pub fn dominance_pass(pair: &ChannelPair, closed: &mut RegionCurve, coupling: &Coupling, other: &RegionCurve) -> Result<()> {
    for cp in &mut closed.points {
        let Some(op) = other.points.iter().find(|o| o.target_bits == cp.target_bits) else {
            continue;
        };
        let (Witness::Discrete(mine), Witness::Discrete(theirs)) = (&cp.point.witness, &op.point.witness) else {
            return Err(Error::InvalidConfig("dominance pass needs discrete witnesses".into()));
        };
        let targets = coupling.targets(cp.target_bits);
        let mut dists = mine.clone();
        let mut changed = false;
        for (i, cand) in theirs.iter().enumerate() {
            let s = i + 1;
            if !drift_constraint(pair, s, targets[i])?.holds(cand) {
                continue;
            }
            if pair.comm.mutual_information(s, cand)? > pair.comm.mutual_information(s, &dists[i])? {
                dists[i] = cand.clone();
                changed = true;
            }
        }
        if changed {
            cp.point = closed_loop_point(pair, &dists)?;
        }
    }
    backward_monotone(&mut closed.points);
    Ok(())
}

fn require_state_independent_comm(pair: &ChannelPair) -> Result<()> {
    let deviation = pair.comm.post_state_deviation();
    if deviation > STATE_INDEPENDENCE_TOL {
        return Err(Error::StateDependentComm { deviation });
    }
    Ok(())
}

fn min_rate(pair: &ChannelPair, p: &[f64]) -> f64 {
    pair.comm
        .post_states()
        .map(|s| pair.comm.mutual_information_unchecked(s, p))
        .fold(f64::INFINITY, f64::min)
}

fn min_drift(drifts: &[Vec<f64>], p: &[f64]) -> f64 {
    drifts
        .iter()
        .map(|d| d.iter().zip(p).map(|(a, b)| a * b).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

/// max over one shared p_X of min_s D(p^(s) ‖ p^(0) | p_X), in bits, with its maximizer.
pub fn open_loop_max_delta(pair: &ChannelPair, steps: usize) -> Result<(f64, Vec<f64>)> {
    let drifts: Vec<Vec<f64>> = pair
        .sensing
        .post_states()
        .map(|s| pair.sensing.drift_vector(s))
        .collect::<Result<_>>()?;
    let (p, v) = maximize_concave(pair.input_count(), |p| min_drift(&drifts, p), &[], steps)
        .ok_or_else(|| Error::InvalidConfig("empty input alphabet".into()))?;
    Ok((nats_to_bits(v), p))
}

/// Open-loop baseline: one input law for every state, Δ = min_s drift.
pub fn open_loop_curve(pair: &ChannelPair, grid_bits: &[f64], steps: usize) -> Result<RegionCurve> {
    require_state_independent_comm(pair)?;
    check_grid(grid_bits)?;
    let (max, p_max) = open_loop_max_delta(pair, steps)?;
    let states = pair.post_state_count();
    let mut points = grid_bits
        .par_iter()
        .map(|&delta| {
            let cons = (1..=states)
                .map(|s| drift_constraint(pair, s, delta))
                .collect::<Result<Vec<_>>>()?;
            let mut best = maximize_concave(pair.input_count(), |p| min_rate(pair, p), &cons, steps);
            // the maximizer of the drift is feasible up to the exact maximum
            if cons.iter().all(|c| c.holds(&p_max)) {
                let v = min_rate(pair, &p_max);
                if best.as_ref().map_or(true, |b| v > b.1) {
                    best = Some((p_max.clone(), v));
                }
            }
            let (p, _) = best.ok_or(Error::Infeasible { target: delta, max })?;
            Ok(CurvePoint {
                target_bits: delta,
                point: closed_loop_point(pair, &vec![p; states])?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    backward_monotone(&mut points);
    Ok(RegionCurve {
        label: "open-loop".into(),
        points,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlahutArimoto {
    pub capacity_bits: f64,
    pub input: Vec<f64>,
    pub iterations: usize,
    /// Final upper-minus-lower bound gap in bits.
    pub gap_bits: f64,
}

/// Capacity of p^(s)(·|x) by alternating maximization. Stops when the upper
/// and lower bounds are within `tol_bits` or after `max_iter` iterations; the
/// reported capacity is the lower bound.
pub fn blahut_arimoto(family: &DiscreteChannelFamily, s: usize, tol_bits: f64, max_iter: usize) -> Result<BlahutArimoto> {
    if s >= family.state_count() {
        return Err(Error::StateOutOfRange(s));
    }
    let nx = family.input_count();
    let ny = family.output_count();
    let mut p = vec![1.0 / nx as f64; nx];
    let mut q = vec![0.0; ny];
    let mut c = vec![0.0; nx];
    let tol = bits_to_nats(tol_bits);
    let mut iterations = 0;
    loop {
        iterations += 1;
        q.fill(0.0);
        for (x, &px) in p.iter().enumerate() {
            for (qy, &w) in q.iter_mut().zip(family.row(s, x)) {
                *qy += px * w;
            }
        }
        for (x, cx) in c.iter_mut().enumerate() {
            let d: f64 = family
                .row(s, x)
                .iter()
                .zip(&q)
                .filter(|(&w, _)| w > 0.0)
                .map(|(&w, &qy)| w * (w / qy).ln())
                .sum();
            *cx = d.exp();
        }
        let z: f64 = p.iter().zip(&c).map(|(a, b)| a * b).sum();
        let lower = z.ln();
        let upper = c.iter().copied().fold(f64::NEG_INFINITY, f64::max).ln();
        if upper - lower < tol || iterations >= max_iter {
            return Ok(BlahutArimoto {
                capacity_bits: nats_to_bits(lower.max(0.0)),
                input: p,
                iterations,
                gap_bits: nats_to_bits(upper - lower),
            });
        }
        for (px, &cx) in p.iter_mut().zip(&c) {
            *px *= cx / z;
        }
    }
}

/// Δ = 0 capacity min_s max_{p_X} I(X; Ỹ_s).
#[derive(Debug, Clone, PartialEq)]
pub struct Capacity {
    pub rate_bits: f64,
    pub per_state: Vec<BlahutArimoto>,
}

impl Capacity {
    pub fn witnesses(&self) -> Vec<Vec<f64>> {
        self.per_state.iter().map(|b| b.input.clone()).collect()
    }
}

pub fn capacity_delta0(pair: &ChannelPair) -> Result<Capacity> {
    let per_state = pair
        .comm
        .post_states()
        .map(|s| blahut_arimoto(&pair.comm, s, BA_TOL_BITS, BA_MAX_ITER))
        .collect::<Result<Vec<_>>>()?;
    let rate_bits = per_state.iter().map(|b| b.capacity_bits).fold(f64::INFINITY, f64::min);
    Ok(Capacity { rate_bits, per_state })
}

/// max_{p_X} min_s I(X; Ỹ_s) in bits: the best rate with a single input law.
pub fn open_loop_capacity(pair: &ChannelPair, steps: usize) -> Result<(f64, Vec<f64>)> {
    let (p, v) = maximize_concave(pair.input_count(), |p| min_rate(pair, p), &[], steps)
        .ok_or_else(|| Error::InvalidConfig("empty input alphabet".into()))?;
    Ok((v, p))
}

/// Binary-input I(X; Ỹ_s) maximized by golden section, for cross-checks.
pub fn binary_capacity_golden(family: &DiscreteChannelFamily, s: usize) -> Result<f64> {
    if family.input_count() != 2 {
        return Err(Error::Unsupported("golden-section capacity needs binary inputs".into()));
    }
    let (_, v) = golden_section_max(|a| family.mutual_information_unchecked(s, &[1.0 - a, a]), 0.0, 1.0, 1e-13);
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::binary_entropy;
    use crate::presets::{bibo_pair, bibo_rows};
    use crate::region::{delta_grid, merge_grids};

    const D_BITS: f64 = 0.221_689_69;

    /// 0.3 ln 3 + 0.7 ln(7/9), converted to bits.
    fn d_bits_exact() -> f64 {
        (0.3 * 3f64.ln() + 0.7 * (7.0f64 / 9.0).ln()) / std::f64::consts::LN_2
    }

    #[test]
    fn bibo_point_with_all_ones() {
        let pair = bibo_pair();
        let pt = closed_loop_point(&pair, &[vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert!((pt.delta_bits[0] - D_BITS).abs() < 1e-7);
        assert_eq!(pt.delta_bits[1], 0.0);
        let expected = binary_entropy(0.8) - binary_entropy(0.2);
        assert!((pt.rate_bits - expected).abs() < 1e-12);
        assert!(pt.rate_bits.abs() < 1e-12);
    }

    #[test]
    fn z_capacity_two_ways() {
        let pair = bibo_pair();
        let cap = capacity_delta0(&pair).unwrap();
        let golden = binary_capacity_golden(&pair.comm, 1).unwrap();
        assert!((cap.rate_bits - golden).abs() < 1e-6);
        assert!((cap.rate_bits - 0.618_231_4).abs() < 1e-6);
        assert!(cap.per_state[0].gap_bits < 1e-9);
    }

    #[test]
    fn degraded_state_lowers_capacity() {
        let sensing = crate::presets::bibo_sensing();
        let good = DiscreteChannelFamily::new(vec![bibo_rows(0.0, 0.2); 3]).unwrap();
        let worse = DiscreteChannelFamily::new(vec![bibo_rows(0.0, 0.2), bibo_rows(0.0, 0.2), bibo_rows(0.1, 0.3)]).unwrap();
        let a = capacity_delta0(&ChannelPair::new(sensing.clone(), good).unwrap()).unwrap();
        let b = capacity_delta0(&ChannelPair::new(sensing, worse).unwrap()).unwrap();
        assert!(b.rate_bits < a.rate_bits);
    }

    #[test]
    fn endpoints() {
        let pair = bibo_pair();
        let subset = Coupling::subset_zero(2, &[1]).unwrap();
        let max = closed_loop_max_delta(&pair, &subset).unwrap();
        assert!((max - D_BITS).abs() < 1e-7);
        let curve = closed_loop_curve(&pair, &subset, &delta_grid(max, 11), 40).unwrap();
        let last = curve.points.last().unwrap();
        let Witness::Discrete(d) = &last.point.witness else { panic!() };
        assert_eq!(d[1], vec![1.0, 0.0]);
        assert!(last.point.rate_bits.abs() < 1e-12);
        assert!(curve.is_monotone());

        let (open_max, p) = open_loop_max_delta(&pair, 40).unwrap();
        assert!((open_max - d_bits_exact() / 2.0).abs() < 1e-9);
        assert!((p[1] - 0.5).abs() < 1e-6);
        assert!(closed_loop_curve(&pair, &subset, &[max * 1.01], 40).is_err());
    }

    #[test]
    fn zero_target_gives_capacity() {
        let pair = bibo_pair();
        let curve = closed_loop_curve(&pair, &Coupling::all_equal(2), &[0.0], 40).unwrap();
        let cap = capacity_delta0(&pair).unwrap();
        assert!((curve.points[0].point.rate_bits - cap.rate_bits).abs() < 1e-8);
    }

    #[test]
    fn closed_dominates_open_after_pass() {
        let pair = bibo_pair();
        let (om, _) = open_loop_max_delta(&pair, 40).unwrap();
        let all = Coupling::all_equal(2);
        let cm = closed_loop_max_delta(&pair, &all).unwrap();
        let og = delta_grid(om, 41);
        let grid = merge_grids(&[&og, &delta_grid(cm, 41)]);
        let open = open_loop_curve(&pair, &og, 40).unwrap();
        let mut closed = closed_loop_curve(&pair, &all, &grid, 40).unwrap();
        dominance_pass(&pair, &mut closed, &all, &open).unwrap();
        for op in &open.points {
            assert!(closed.rate_at(op.target_bits).unwrap() >= op.point.rate_bits);
        }
    }

    #[test]
    fn witnesses_round_trip() {
        let pair = bibo_pair();
        let curve = closed_loop_curve(&pair, &Coupling::all_equal(2), &delta_grid(0.2, 9), 40).unwrap();
        for cp in &curve.points {
            let Witness::Discrete(d) = &cp.point.witness else { panic!() };
            let again = closed_loop_point(&pair, d).unwrap();
            assert_eq!(again, cp.point);
        }
    }

    #[test]
    fn state_dependent_comm_rejected() {
        let comm = DiscreteChannelFamily::new(vec![bibo_rows(0.0, 0.2), bibo_rows(0.0, 0.2), bibo_rows(0.1, 0.2)]).unwrap();
        let pair = ChannelPair::new(crate::presets::bibo_sensing(), comm).unwrap();
        assert!(matches!(open_loop_curve(&pair, &[0.0], 40), Err(Error::StateDependentComm { .. })));
    }

    #[test]
    fn converse_matches_conditional_kl() {
        let pair = bibo_pair();
        let d = [vec![0.3, 0.7], vec![1.0, 0.0]];
        let slopes = converse_slope(&pair, &d).unwrap();
        assert_eq!(slopes[0], pair.sensing.conditional_kl(1, 0, &d[0]).unwrap());
        assert!((nats_to_bits(slopes[1]) - D_BITS).abs() < 1e-7);
    }
}
