//! Datasets for the three example figures: discrete region, MIMO region and
//! beam sweep.

use std::f64::consts::FRAC_PI_2;

use isacqcd_core::channel::{nats_to_bits, ChannelPair, MimoChannelModel};
use isacqcd_core::presets::{bibo_pair, mimo_two_state, BeamGeometry};
use isacqcd_core::region::{
    self, beam_sweep, closed_loop_curve, closed_loop_max_delta, delta_grid, dominance_pass, merge_grids,
    mimo_closed_loop_max_delta, mimo_curve, mimo_dominance_pass, mimo_open_loop_curve, mimo_open_loop_max_delta,
    open_loop_curve, open_loop_max_delta, BeamPoint, Coupling, MimoSearch, RegionCurve, Witness,
};

use crate::output::{num, Table};
use crate::CliError;

pub const FIG3_POINTS: usize = 101;
pub const FIG4_POINTS: usize = 41;
pub const FIG5_POINTS: usize = 91;

pub const OPEN_LOOP: &str = "open_loop";
pub const COUPLED: &str = "delta_coupled";
pub const FIRST_ZERO: &str = "delta1_zero";

fn witness_cells(w: &Witness) -> Vec<String> {
    match w {
        Witness::Discrete(d) => d
            .iter()
            .map(|p| p.iter().map(|&v| num(v)).collect::<Vec<_>>().join(";"))
            .collect(),
        Witness::Mimo(covs) => covs
            .iter()
            .map(|m| {
                let mut cells = Vec::new();
                for i in 0..m.nrows() {
                    for j in 0..m.ncols() {
                        let z = m[(i, j)];
                        cells.push(format!("{}:{}", num(z.re), num(z.im)));
                    }
                }
                cells.join(";")
            })
            .collect(),
    }
}

/// One row per curve point: name, target, rate, Δ per state, witness per state.
pub fn curves_table(curves: &[(&str, &RegionCurve)], states: usize) -> Table {
    let mut cols = vec!["curve".to_string(), "delta_target_bits".into(), "rate_bits".into()];
    cols.extend((1..=states).map(|s| format!("delta{s}_bits")));
    cols.extend((1..=states).map(|s| format!("witness{s}")));
    let mut t = Table {
        columns: cols,
        rows: Vec::new(),
    };
    for (name, curve) in curves {
        for cp in &curve.points {
            let mut row = vec![name.to_string(), num(cp.target_bits), num(cp.point.rate_bits)];
            row.extend(cp.point.delta_bits.iter().map(|&d| num(d)));
            row.extend(witness_cells(&cp.point.witness));
            t.push(row);
        }
    }
    t
}

pub fn beam_table(points: &[BeamPoint]) -> Table {
    let states = points.first().map_or(1, |p| p.delta_nats.len());
    let mut cols = vec!["theta".to_string(), "theta_deg".into(), "rate_bits".into()];
    for s in 1..=states {
        cols.push(format!("delta{s}_nats"));
        cols.push(format!("delta{s}_bits"));
    }
    let mut t = Table {
        columns: cols,
        rows: Vec::new(),
    };
    for p in points {
        let mut row = vec![num(p.theta), num(p.theta.to_degrees()), num(p.rate_bits)];
        for &d in &p.delta_nats {
            row.push(num(d));
            row.push(num(nats_to_bits(d)));
        }
        t.push(row);
    }
    t
}

/// Open-loop, Δ-coupled and Δ₁ = 0 curves on grids sharing the open-loop
/// targets; the closed-loop curves get a dominance pass against the open loop.
pub fn discrete_region_curves(pair: &ChannelPair, points: usize, steps: usize) -> Result<Vec<(String, RegionCurve)>, CliError> {
    let states = pair.post_state_count();
    let (open_max, _) = open_loop_max_delta(pair, steps)?;
    let og = delta_grid(open_max, points);
    let open = open_loop_curve(pair, &og, steps)?;
    let mut out = vec![(OPEN_LOOP.to_string(), open.clone())];
    let mut couplings = vec![(COUPLED, Coupling::all_equal(states))];
    if states > 1 {
        couplings.push((FIRST_ZERO, Coupling::subset_zero(states, &[1])?));
    }
    for (name, coupling) in couplings {
        let max = closed_loop_max_delta(pair, &coupling)?;
        let grid = merge_grids(&[&og, &delta_grid(max, points)]);
        let mut curve = closed_loop_curve(pair, &coupling, &grid, steps)?;
        dominance_pass(pair, &mut curve, &coupling, &open)?;
        out.push((name.to_string(), curve));
    }
    Ok(out)
}

pub fn mimo_region_curves(model: &MimoChannelModel, points: usize, search: MimoSearch) -> Result<Vec<(String, RegionCurve)>, CliError> {
    let states = model.post_state_count();
    let (open_max, _) = mimo_open_loop_max_delta(model, search);
    let og = delta_grid(open_max, points);
    let open = mimo_open_loop_curve(model, &og, search)?;
    let mut out = vec![(OPEN_LOOP.to_string(), open.clone())];
    let mut couplings = vec![(COUPLED, Coupling::all_equal(states))];
    if states > 1 {
        couplings.push((FIRST_ZERO, Coupling::subset_zero(states, &[1])?));
    }
    for (name, coupling) in couplings {
        let max = mimo_closed_loop_max_delta(model, &coupling)?;
        let grid = merge_grids(&[&og, &delta_grid(max, points)]);
        let mut curve = mimo_curve(model, &coupling, &grid, search)?;
        mimo_dominance_pass(model, &mut curve, &coupling, &open)?;
        out.push((name.to_string(), curve));
    }
    Ok(out)
}

fn to_table(curves: &[(String, RegionCurve)], states: usize) -> Table {
    let refs: Vec<(&str, &RegionCurve)> = curves.iter().map(|(n, c)| (n.as_str(), c)).collect();
    curves_table(&refs, states)
}

pub fn fig3() -> Result<Table, CliError> {
    let pair = bibo_pair();
    let curves = discrete_region_curves(&pair, FIG3_POINTS, region::DEFAULT_SIMPLEX_STEPS)?;
    Ok(to_table(&curves, pair.post_state_count()))
}

pub fn fig4() -> Result<Table, CliError> {
    let model = mimo_two_state();
    let curves = mimo_region_curves(&model, FIG4_POINTS, MimoSearch::default())?;
    Ok(to_table(&curves, model.post_state_count()))
}

/// Angles from θ_c down to θ₁ inclusive.
pub fn beam_angles(from: f64, to: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![from],
        n => (0..n)
            .map(|i| if i + 1 == n { to } else { from + (to - from) * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}

pub fn fig5() -> Result<Table, CliError> {
    let g = BeamGeometry::default();
    debug_assert_eq!(g.theta_comm, FRAC_PI_2);
    let points = beam_sweep(&g.model(), &beam_angles(g.theta_comm, g.theta_target, FIG5_POINTS))?;
    Ok(beam_table(&points))
}
