//! Subblock CuSum change detection and the auxiliary statistics used to check it.
//!
//! All statistics are in nats and updated once per subblock from the same
//! increment Λ^(ŝ_j)(Y_j | x_j), the LLR summed over the L payload symbols.

use crate::channel::DiscreteChannelFamily;
use crate::error::{Error, Result};

/// Threshold and frame geometry of the stopping rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    threshold: f64,
    alpha: Option<f64>,
    subblock_len: usize,
    eta: usize,
}

impl DetectorConfig {
    /// b = −ln(α(L+1)), the choice that bounds the false alarm rate by α.
    ///
    /// For α(L+1) ≥ 1 this is ≤ 0 and the detector stops at the first eligible
    /// subblock; the bound still holds because E_∞[N] ≥ (η+1)(L+1) ≥ 1/α then.
    pub fn from_alpha(alpha: f64, subblock_len: usize, eta: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidConfig(format!("alpha = {alpha} must lie in (0, 1)")));
        }
        let mut cfg = Self::with_threshold(-(alpha * (subblock_len + 1) as f64).ln(), subblock_len, eta)?;
        cfg.alpha = Some(alpha);
        Ok(cfg)
    }

    /// Explicit threshold in nats; +∞ never stops.
    pub fn with_threshold(threshold: f64, subblock_len: usize, eta: usize) -> Result<Self> {
        if threshold.is_nan() || threshold == f64::NEG_INFINITY {
            return Err(Error::InvalidConfig(format!("threshold {threshold}")));
        }
        if subblock_len == 0 {
            return Err(Error::InvalidConfig("subblock length must be positive".into()));
        }
        Ok(Self {
            threshold,
            alpha: None,
            subblock_len,
            eta,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    pub fn subblock_len(&self) -> usize {
        self.subblock_len
    }

    pub fn eta(&self) -> usize {
        self.eta
    }

    pub fn frame(&self) -> u64 {
        (self.subblock_len + 1) as u64
    }
}

/// Dense table of Λ^(s)(y|x) for post-change states.
#[derive(Debug, Clone)]
pub struct LlrTable {
    inputs: usize,
    outputs: usize,
    values: Vec<f64>,
}

impl LlrTable {
    pub fn new(family: &DiscreteChannelFamily) -> Result<Self> {
        let (nx, ny) = (family.input_count(), family.output_count());
        let mut values = vec![0.0; (family.post_state_count() + 1) * nx * ny];
        for s in family.post_states() {
            for x in 0..nx {
                for y in 0..ny {
                    values[(s * nx + x) * ny + y] = family.llr(s, y, x)?;
                }
            }
        }
        Ok(Self {
            inputs: nx,
            outputs: ny,
            values,
        })
    }

    #[inline]
    pub fn get(&self, s: usize, x: usize, y: usize) -> f64 {
        self.values[(s * self.inputs + x) * self.outputs + y]
    }

    /// Σ_i Λ^(s)(y_i | x_i).
    pub fn subblock_llr<X: Copy + Into<usize>>(&self, s: usize, xs: &[X], ys: &[usize]) -> f64 {
        xs.iter().zip(ys).map(|(&x, &y)| self.get(s, x.into(), y)).sum()
    }
}

/// Where a run ended, in symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopOutcome {
    /// Alarm at the end of subblock `subblock`; `symbol` = subblock·(L+1).
    Stopped { subblock: u64, symbol: u64 },
    /// No alarm within the block; reported as N = n + 1.
    Censored { symbol: u64 },
}

impl StopOutcome {
    pub fn symbol(&self) -> u64 {
        match *self {
            StopOutcome::Stopped { symbol, .. } | StopOutcome::Censored { symbol } => symbol,
        }
    }

    pub fn is_censored(&self) -> bool {
        matches!(self, StopOutcome::Censored { .. })
    }
}

/// W_j = 0 for j ≤ η, else max(W_{j−1}, 0) + Λ^(ŝ_j)(Y_j | x_j).
#[derive(Debug, Clone, PartialEq)]
pub struct SubblockCusum {
    eta: u64,
    j: u64,
    w: f64,
}

impl SubblockCusum {
    pub fn new(eta: usize) -> Self {
        Self {
            eta: eta as u64,
            j: 0,
            w: 0.0,
        }
    }

    pub fn subblock(&self) -> u64 {
        self.j
    }

    pub fn statistic(&self) -> f64 {
        self.w
    }

    /// Advances one subblock with a precomputed increment.
    pub fn push(&mut self, increment: f64) -> f64 {
        self.j += 1;
        self.w = if self.j <= self.eta {
            0.0
        } else {
            self.w.max(0.0) + increment
        };
        self.w
    }

    /// Advances one subblock from the payload inputs and echoes.
    pub fn update(&mut self, s_hat: usize, xs: &[usize], ys: &[usize], table: &LlrTable) -> Result<f64> {
        if xs.len() != ys.len() {
            return Err(Error::InvalidConfig("subblock input/output length mismatch".into()));
        }
        Ok(self.push(table.subblock_llr(s_hat, xs, ys)))
    }

    /// True once the statistic is eligible and has reached b.
    pub fn crossed(&self, b: f64) -> bool {
        self.j > self.eta && self.w >= b
    }
}

/// Stopping time of a finished run: first j with `crossed`, else n + 1.
pub fn stop_check(stop_subblock: Option<u64>, cfg: &DetectorConfig, subblocks: usize) -> StopOutcome {
    match stop_subblock {
        Some(j) => StopOutcome::Stopped {
            subblock: j,
            symbol: j * cfg.frame(),
        },
        None => StopOutcome::Censored {
            symbol: subblocks as u64 * cfg.frame() + 1,
        },
    }
}

/// Records the first crossing of each threshold by a statistic.
#[derive(Debug, Clone)]
pub struct FirstCrossings {
    thresholds: Vec<f64>,
    stops: Vec<Option<u64>>,
    pending: usize,
}

impl FirstCrossings {
    pub fn new(thresholds: &[f64]) -> Self {
        Self {
            thresholds: thresholds.to_vec(),
            stops: vec![None; thresholds.len()],
            pending: thresholds.len(),
        }
    }

    /// Feeds the statistic after subblock j, if j is eligible.
    pub fn observe(&mut self, j: u64, w: f64) {
        if self.pending == 0 {
            return;
        }
        for (b, stop) in self.thresholds.iter().zip(self.stops.iter_mut()) {
            if stop.is_none() && w >= *b {
                *stop = Some(j);
                self.pending -= 1;
            }
        }
    }

    pub fn all_stopped(&self) -> bool {
        self.pending == 0
    }

    pub fn stops(&self) -> &[Option<u64>] {
        &self.stops
    }
}

/// ν-aware CuSum: W^ν_j = 0 for j ≤ j_ν + η − 1, CuSum recursion afterwards.
/// Needs the true change subblock j_ν, so it is an oracle, not a detector.
#[derive(Debug, Clone, PartialEq)]
pub struct NuAwareCusum {
    start: u64,
    j: u64,
    w: f64,
}

impl NuAwareCusum {
    /// `change_subblock` = ⌈ν/(L+1)⌉; `None` for ν = ∞.
    pub fn new(change_subblock: Option<u64>, eta: usize) -> Self {
        let start = change_subblock.map_or(u64::MAX, |jn| jn + eta as u64 - 1);
        Self { start, j: 0, w: 0.0 }
    }

    pub fn push(&mut self, increment: f64) -> f64 {
        self.j += 1;
        self.w = if self.j <= self.start {
            0.0
        } else {
            self.w.max(0.0) + increment
        };
        self.w
    }

    pub fn eligible(&self) -> bool {
        self.j > self.start
    }

    pub fn statistic(&self) -> f64 {
        self.w
    }
}

/// Modified Shiryaev–Roberts statistic R_j = (R_{j−1} + 1)·e^{Λ_j}, R_η = 1,
/// held as ln R to survive large thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiryaevRoberts {
    eta: u64,
    j: u64,
    log_r: f64,
}

impl ShiryaevRoberts {
    pub fn new(eta: usize) -> Self {
        Self {
            eta: eta as u64,
            j: 0,
            log_r: 0.0,
        }
    }

    /// ln R_j; 0 (R = 1) up to and including j = η.
    pub fn push(&mut self, increment: f64) -> f64 {
        self.j += 1;
        if self.j > self.eta {
            let a = self.log_r;
            // ln(R + 1) = max(ln R, 0) + ln(1 + e^{−|ln R|})
            let log_r_plus_one = a.max(0.0) + (-a.abs()).exp().ln_1p();
            self.log_r = log_r_plus_one + increment;
        }
        self.log_r
    }

    pub fn log_statistic(&self) -> f64 {
        self.log_r
    }

    pub fn subblock(&self) -> u64 {
        self.j
    }
}

/// CuSum without the reset to zero: W'_j = 0 for j ≤ 2η, W'_{j−1} + Λ_j after.
#[derive(Debug, Clone, PartialEq)]
pub struct NoResetCusum {
    start: u64,
    j: u64,
    w: f64,
}

impl NoResetCusum {
    pub fn new(eta: usize) -> Self {
        Self {
            start: 2 * eta as u64,
            j: 0,
            w: 0.0,
        }
    }

    pub fn push(&mut self, increment: f64) -> f64 {
        self.j += 1;
        self.w = if self.j <= self.start { 0.0 } else { self.w + increment };
        self.w
    }

    pub fn eligible(&self) -> bool {
        self.j > self.start
    }

    pub fn statistic(&self) -> f64 {
        self.w
    }
}

/// One per-subblock line of a detector trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub subblock: u64,
    pub estimate: usize,
    pub increment: f64,
    pub statistic: f64,
    pub log_sr: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::bibo_sensing;

    #[test]
    fn threshold_from_alpha() {
        let d = DetectorConfig::from_alpha(0.01, 24, 20).unwrap();
        assert!((d.threshold() - (-(0.25f64).ln())).abs() < 1e-15);
        assert_eq!(d.frame(), 25);
        assert!(DetectorConfig::from_alpha(0.1, 24, 20).unwrap().threshold() < 0.0);
        assert!(DetectorConfig::from_alpha(0.0, 24, 20).is_err());
        assert!(DetectorConfig::with_threshold(f64::INFINITY, 24, 20).is_ok());
    }

    #[test]
    fn statistic_is_zero_through_eta() {
        let mut w = SubblockCusum::new(3);
        for _ in 0..3 {
            assert_eq!(w.push(5.0), 0.0);
            assert!(!w.crossed(-1.0));
        }
        assert_eq!(w.push(2.0), 2.0);
        assert_eq!(w.push(-3.0), -1.0);
        assert_eq!(w.push(0.5), 0.5);
        assert!(w.crossed(0.5));
    }

    #[test]
    fn subblock_update_example() {
        let table = LlrTable::new(&bibo_sensing()).unwrap();
        let mut w = SubblockCusum::new(0);
        let v = w.update(1, &[1, 1], &[0, 1], &table).unwrap();
        assert!((v - (3f64.ln() + (7.0f64 / 9.0).ln())).abs() < 1e-12);
        assert!((v - 0.8473).abs() < 1e-4);
        // identical rows under x = 0 give a zero increment
        let mut w = SubblockCusum::new(0);
        w.push(-2.0);
        assert_eq!(w.update(1, &[0, 0, 0], &[1, 0, 1], &table).unwrap(), 0.0);
    }

    #[test]
    fn censoring_and_frame_granularity() {
        let d = DetectorConfig::with_threshold(1.0, 24, 2).unwrap();
        assert_eq!(stop_check(None, &d, 100), StopOutcome::Censored { symbol: 2501 });
        let s = stop_check(Some(7), &d, 100);
        assert_eq!(s.symbol(), 175);
        assert_eq!(s.symbol() % 25, 0);
    }

    #[test]
    fn sr_with_zero_increments_counts_subblocks() {
        let eta = 4;
        let mut r = ShiryaevRoberts::new(eta);
        for j in 1..=30u64 {
            let lr = r.push(0.0);
            let expect = if j <= eta as u64 { 1.0 } else { 1.0 + (j - eta as u64) as f64 };
            assert!((lr.exp() - expect).abs() < 1e-9 * expect);
        }
    }

    #[test]
    fn sr_is_overflow_safe() {
        let mut r = ShiryaevRoberts::new(0);
        for _ in 0..1000 {
            r.push(5.0);
        }
        assert!(r.log_statistic().is_finite() && r.log_statistic() > 4000.0);
    }

    #[test]
    fn nu_aware_window() {
        let mut w = NuAwareCusum::new(Some(3), 2);
        for _ in 0..4 {
            assert_eq!(w.push(1.0), 0.0);
        }
        assert!(!w.eligible());
        assert_eq!(w.push(1.0), 1.0);
        assert!(w.eligible());
        let mut never = NuAwareCusum::new(None, 2);
        for _ in 0..100 {
            assert_eq!(never.push(3.0), 0.0);
        }
    }

    #[test]
    fn no_reset_window() {
        let mut w = NoResetCusum::new(2);
        for _ in 0..4 {
            w.push(1.0);
        }
        assert!(!w.eligible());
        assert_eq!(w.push(-1.0), -1.0);
        assert_eq!(w.push(-1.0), -2.0);
    }

    #[test]
    fn first_crossings() {
        let mut fc = FirstCrossings::new(&[1.0, 3.0]);
        fc.observe(5, 2.0);
        fc.observe(6, 0.0);
        assert!(!fc.all_stopped());
        fc.observe(7, 3.5);
        assert_eq!(fc.stops(), &[Some(5), Some(7)]);
        assert!(fc.all_stopped());
    }
}
