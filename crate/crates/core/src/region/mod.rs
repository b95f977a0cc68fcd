//! Achievable rate–delay regions for discrete and Gaussian MIMO channels.
//!
//! Rates are in bits per symbol. Detection speeds Δ_s are reported in bits;
//! the optimizers work in nats internally.

pub mod discrete;
pub mod mimo;
pub mod optimize;

use crate::channel::CMatrix;
use crate::error::{Error, Result};

pub use discrete::{
    binary_capacity_golden, blahut_arimoto, capacity_delta0, closed_loop_curve, closed_loop_max_delta, closed_loop_point, converse_slope,
    dominance_pass, open_loop_capacity, open_loop_curve, open_loop_max_delta, BlahutArimoto, Capacity,
};
pub use mimo::{
    beam_sweep, check_covariance, comm_rate_bits, mimo_capacity_delta0, mimo_closed_loop_max_delta, mimo_curve,
    mimo_dominance_pass, mimo_open_loop_curve, mimo_open_loop_dual_bound, mimo_open_loop_max_delta, mimo_point,
    sensing_delta_direct, sensing_delta_eigen, water_filling, BeamPoint, MimoSearch,
};
pub use optimize::{golden_section_max, simplex_grid};

/// Default simplex grid resolution for alphabets with more than two inputs.
pub const DEFAULT_SIMPLEX_STEPS: usize = 40;

/// Which Δ components move together along a frontier: the target for state s
/// is w_s · Δ.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    weights: Vec<f64>,
    label: String,
}

impl Coupling {
    /// Δ_1 = … = Δ_S = Δ.
    pub fn all_equal(states: usize) -> Self {
        Self {
            weights: vec![1.0; states],
            label: "all-equal".into(),
        }
    }

    /// Δ_s = 0 for the listed (1-based) states and Δ for the rest.
    pub fn subset_zero(states: usize, zero: &[usize]) -> Result<Self> {
        let mut weights = vec![1.0; states];
        for &s in zero {
            if s == 0 || s > states {
                return Err(Error::StateOutOfRange(s));
            }
            weights[s - 1] = 0.0;
        }
        let list: Vec<String> = zero.iter().map(|s| s.to_string()).collect();
        Self::checked(weights, format!("subset-zero:{}", list.join(",")))
    }

    /// Δ_s = w_s · Δ with free non-negative weights.
    pub fn per_state(weights: Vec<f64>) -> Result<Self> {
        let list: Vec<String> = weights.iter().map(|w| w.to_string()).collect();
        let label = format!("per-state:{}", list.join(","));
        Self::checked(weights, label)
    }

    fn checked(weights: Vec<f64>, label: String) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidConfig(format!("coupling weights {weights:?}")));
        }
        if !weights.iter().any(|&w| w > 0.0) {
            return Err(Error::InvalidConfig("coupling needs a positive weight".into()));
        }
        Ok(Self { weights, label })
    }

    /// Parses `all-equal`, `subset-zero:1,3` or `per-state:1,0.5`.
    pub fn parse(text: &str, states: usize) -> Result<Self> {
        let text = text.trim();
        let (kind, args) = text.split_once(':').unwrap_or((text, ""));
        let list = || args.split(',').map(str::trim).filter(|a| !a.is_empty());
        let coupling = match kind {
            "all-equal" => Self::all_equal(states),
            "subset-zero" => {
                let zero = list()
                    .map(|a| a.parse::<usize>().map_err(|_| Error::Parse(format!("state index '{a}'"))))
                    .collect::<Result<Vec<_>>>()?;
                Self::subset_zero(states, &zero)?
            }
            "per-state" => {
                let w = list()
                    .map(|a| a.parse::<f64>().map_err(|_| Error::Parse(format!("weight '{a}'"))))
                    .collect::<Result<Vec<_>>>()?;
                if w.len() != states {
                    return Err(Error::InvalidConfig(format!("{} weights for {states} states", w.len())));
                }
                Self::per_state(w)?
            }
            other => return Err(Error::Parse(format!("unknown coupling '{other}'"))),
        };
        Ok(coupling)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn targets(&self, delta: f64) -> Vec<f64> {
        self.weights.iter().map(|w| w * delta).collect()
    }
}

/// Input law attaining a region point.
#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    /// p(x|s) for s = 1..S.
    Discrete(Vec<Vec<f64>>),
    /// Σ_s for s = 1..S.
    Mimo(Vec<CMatrix>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionPoint {
    pub rate_bits: f64,
    /// Δ_s in bits, s = 1..S.
    pub delta_bits: Vec<f64>,
    pub witness: Witness,
}

impl RegionPoint {
    pub fn min_delta_bits(&self) -> f64 {
        self.delta_bits.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// A frontier point optimized for the coupled target Δ.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub target_bits: f64,
    pub point: RegionPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionCurve {
    pub label: String,
    pub points: Vec<CurvePoint>,
}

impl RegionCurve {
    /// Rate at an exact grid target, if present.
    pub fn rate_at(&self, target_bits: f64) -> Option<f64> {
        self.points
            .iter()
            .find(|p| p.target_bits == target_bits)
            .map(|p| p.point.rate_bits)
    }

    pub fn max_target(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.target_bits)
    }

    /// Rate is non-increasing along the (ascending) target grid.
    pub fn is_monotone(&self) -> bool {
        self.points.windows(2).all(|w| w[1].point.rate_bits <= w[0].point.rate_bits)
    }
}

/// `points` evenly spaced targets on [0, max], ending exactly at `max`.
pub fn delta_grid(max: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        n => (0..n)
            .map(|i| if i + 1 == n { max } else { max * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}

/// Sorted union of grids, exact duplicates removed.
pub fn merge_grids(grids: &[&[f64]]) -> Vec<f64> {
    let mut all: Vec<f64> = grids.iter().flat_map(|g| g.iter().copied()).collect();
    all.sort_by(f64::total_cmp);
    all.dedup();
    all
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("empty delta grid".into()));
    }
    if grid.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(Error::InvalidConfig("delta targets must be finite and non-negative".into()));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidConfig("delta grid must be ascending".into()));
    }
    Ok(())
}

/// Makes rate non-increasing along the grid: a witness found for a larger
/// target is feasible for every smaller one.
pub(crate) fn backward_monotone(points: &mut [CurvePoint]) {
    for i in (0..points.len().saturating_sub(1)).rev() {
        if points[i + 1].point.rate_bits > points[i].point.rate_bits {
            points[i].point = points[i + 1].point.clone();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coupling_parsing() {
        assert_eq!(Coupling::parse("all-equal", 2).unwrap().weights(), &[1.0, 1.0]);
        let c = Coupling::parse("subset-zero:1", 2).unwrap();
        assert_eq!(c.weights(), &[0.0, 1.0]);
        assert_eq!(c.targets(0.5), vec![0.0, 0.5]);
        assert_eq!(Coupling::parse("per-state:1, 0.5", 2).unwrap().weights(), &[1.0, 0.5]);
        assert!(Coupling::parse("subset-zero:1,2", 2).is_err());
        assert!(Coupling::parse("subset-zero:3", 2).is_err());
        assert!(Coupling::parse("sideways", 2).is_err());
    }

    #[test]
    fn grids() {
        let g = delta_grid(0.3, 4);
        assert_eq!(g.len(), 4);
        assert_eq!(g[3], 0.3);
        assert_eq!(delta_grid(1.0, 1), vec![0.0]);
        let m = merge_grids(&[&[0.0, 0.5], &[0.0, 0.25, 1.0]]);
        assert_eq!(m, vec![0.0, 0.25, 0.5, 1.0]);
        assert!(check_grid(&[0.2, 0.1]).is_err());
    }
}
