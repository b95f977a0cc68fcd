//! Seeded parallel Monte Carlo estimation of FAR, WADD, delay slope, decoding
//! error and estimation error.
//!
//! Trial t of experiment point p draws all its randomness from the stream keyed
//! by (master seed, TRIAL, p, t). Trials are collected in index order and
//! reduced sequentially, so results do not depend on the worker count.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{ChannelPair, StatePath};
use crate::codec::{
    decode, ensemble_error_probability, Codeword, Encoder, EstimateTrace, JccsConfig, PilotWindow,
    SubblockCodebook, DEFAULT_SYMBOL_BUDGET, EXHAUSTIVE_LIMIT,
};
use crate::detector::{
    stop_check, DetectorConfig, FirstCrossings, LlrTable, NoResetCusum, NuAwareCusum, ShiryaevRoberts, StopOutcome,
    SubblockCusum, TraceRow,
};
use crate::error::{Error, Result};
use crate::rngs::{derive_seed, stream, tag};
use crate::stats::{least_squares, mean_and_se, nonnegative_mean_lower, normal_mean, one_sided_z, two_sided_z, wilson, EstimateWithCI};

pub const THREADS_ENV: &str = "ISACQCD_THREADS";
pub const DEFAULT_MESSAGE_SAMPLES: usize = 32;
pub const MIN_TRIALS: usize = 100;

/// Everything an estimator needs: channel, code, detector and sweep.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub pair: ChannelPair,
    pub jccs: JccsConfig,
    pub detector: DetectorConfig,
    /// Change points to sweep (1-based symbol times).
    pub nu_grid: Vec<u64>,
    pub post_states: Vec<usize>,
    pub trials: usize,
    pub confidence: f64,
    /// Messages sampled for the max over messages.
    pub message_samples: usize,
    /// Worker count before the environment cap; `None` uses all cores.
    pub threads: Option<usize>,
    /// Also search fixed adversarial pre-change pilot echoes in WADD.
    pub adversarial_prefix: bool,
}

impl ExperimentSpec {
    pub fn new(pair: ChannelPair, jccs: JccsConfig, detector: DetectorConfig) -> Self {
        Self {
            pair,
            jccs,
            detector,
            nu_grid: vec![1],
            post_states: vec![1],
            trials: 1000,
            confidence: 0.99,
            message_samples: DEFAULT_MESSAGE_SAMPLES,
            threads: None,
            adversarial_prefix: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < MIN_TRIALS {
            return Err(Error::InvalidConfig(format!(
                "{} trials; at least {MIN_TRIALS} are required",
                self.trials
            )));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::InvalidConfig(format!("confidence {}", self.confidence)));
        }
        let n = self.jccs.block_length();
        if let Some(&nu) = self.nu_grid.iter().find(|&&nu| nu == 0 || nu > n) {
            return Err(Error::InvalidConfig(format!("change point {nu} outside [1, {n}]")));
        }
        let states = self.pair.post_state_count();
        if let Some(&s) = self.post_states.iter().find(|&&s| s == 0 || s > states) {
            return Err(Error::StateOutOfRange(s));
        }
        if self.jccs.post_state_count() != states || self.jccs.input_count() != self.pair.input_count() {
            return Err(Error::InvalidConfig("code does not match the channel".into()));
        }
        if self.detector.subblock_len() != self.jccs.subblock_len() || self.detector.eta() != self.jccs.eta() {
            return Err(Error::InvalidConfig("detector and code disagree on L or eta".into()));
        }
        if self.message_samples == 0 {
            return Err(Error::InvalidConfig("message_samples must be positive".into()));
        }
        Ok(())
    }

    /// Worker count: spec value (default all cores), capped by ISACQCD_THREADS.
    pub fn worker_count(&self) -> usize {
        resolve_threads(self.threads)
    }
}

pub fn resolve_threads(requested: Option<usize>) -> usize {
    let base = requested.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let cap = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok());
    match cap {
        Some(c) if c > 0 => base.min(c),
        _ => base,
    }
    .max(1)
}

/// Runs `f(t)` for t in 0..count on `threads` workers, preserving index order.
pub fn parallel_trials<T, F>(threads: usize, count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| (0..count as u64).into_par_iter().map(&f).collect())
}

/// How pre-change pilot echoes are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Prefix {
    /// Drawn from the channel.
    Natural,
    /// Every pre-change pilot echo is forced to this output.
    Forced(usize),
}

/// Message selection for a trial.
#[derive(Debug, Clone, Copy)]
pub enum MessageChoice<'a> {
    Fixed(&'a Codeword),
    /// Uniform over the message set, drawn from the trial stream.
    Uniform,
}

/// How the communication receiver is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PeMethod {
    /// Exhaustive ML over the actual codebook.
    Exhaustive,
    /// Exact conditional error probability averaged over the code ensemble.
    Ensemble,
}

/// Per-trial switches.
#[derive(Debug, Clone)]
pub struct TrialRequest {
    pub path: StatePath,
    /// Experiment point id mixed into the trial stream.
    pub point: u64,
    pub trial: u64,
    pub thresholds: Vec<f64>,
    pub prefix: Prefix,
    /// Run the oracle statistics on the same path.
    pub oracles: bool,
    /// Subblock index at which ln R_j is recorded.
    pub sr_probe: Option<u64>,
    pub trace: bool,
    /// Simulate and decode the communication output.
    pub comm: Option<PeMethod>,
    /// Keep simulating after every threshold has been crossed.
    pub run_to_end: bool,
}

impl TrialRequest {
    pub fn new(path: StatePath, point: u64, trial: u64, thresholds: &[f64]) -> Self {
        Self {
            path,
            point,
            trial,
            thresholds: thresholds.to_vec(),
            prefix: Prefix::Natural,
            oracles: false,
            sr_probe: None,
            trace: false,
            comm: None,
            run_to_end: false,
        }
    }
}

/// Oracle statistics evaluated on the trial's path.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutcome {
    /// Stops of the ν-aware CuSum, one per threshold.
    pub nu_aware: Vec<StopOutcome>,
    /// Stops of the no-reset CuSum, one per threshold.
    pub no_reset: Vec<StopOutcome>,
    /// Subblocks with ln R_j < W_j (j > η).
    pub sr_violations: u32,
    /// Subblocks j > 2η with W_j < W'_j.
    pub no_reset_violations: u32,
    pub log_sr_probe: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub seed: u64,
    pub path: StatePath,
    pub message: u64,
    /// Stopping time per requested threshold.
    pub stops: Vec<StopOutcome>,
    pub estimates: Vec<usize>,
    pub decoded: Option<u64>,
    /// P(M̂ ≠ M | trial) for the ensemble method, 0/1 for exhaustive decoding.
    pub error_probability: Option<f64>,
    pub oracle: Option<OracleOutcome>,
    pub trace: Vec<TraceRow>,
}

/// Shared, immutable per-experiment state.
#[derive(Debug, Clone)]
pub struct TrialContext {
    pub pair: ChannelPair,
    pub codebook: SubblockCodebook,
    pub llr: LlrTable,
}

impl TrialContext {
    pub fn new(pair: &ChannelPair, jccs: &JccsConfig) -> Result<Self> {
        Ok(Self {
            pair: pair.clone(),
            codebook: SubblockCodebook::build(jccs, DEFAULT_SYMBOL_BUDGET),
            llr: LlrTable::new(&pair.sensing)?,
        })
    }

    pub fn config(&self) -> &JccsConfig {
        self.codebook.config()
    }
}

fn crossings_to_stops(fc: &FirstCrossings, det: &DetectorConfig, k: usize) -> Vec<StopOutcome> {
    fc.stops().iter().map(|&s| stop_check(s, det, k)).collect()
}

/// Simulates one transmission block with feedback, detection and (optionally)
/// decoding.
pub fn run_trial(ctx: &TrialContext, message: MessageChoice<'_>, req: &TrialRequest) -> Result<TrialOutcome> {
    let cfg = ctx.config();
    let seed = derive_seed(cfg.master_seed(), &[tag::TRIAL, req.point, req.trial]);
    let mut rng = stream(seed, &[]);
    let owned;
    let codeword = match message {
        MessageChoice::Fixed(cw) => cw,
        MessageChoice::Uniform => {
            let m = rng.gen_range(0..cfg.message_index_limit());
            owned = ctx.codebook.codeword(m);
            &owned
        }
    };
    let sensing = &ctx.pair.sensing;
    let comm = &ctx.pair.comm;
    let det = DetectorConfig::with_threshold(0.0, cfg.subblock_len(), cfg.eta())?;
    let k = cfg.subblocks();
    let l = cfg.subblock_len();
    let frame = cfg.frame() as u64;

    let mut encoder = Encoder::new(&ctx.codebook, codeword, sensing)?;
    let mut scs = SubblockCusum::new(cfg.eta());
    let mut stops = FirstCrossings::new(&req.thresholds);
    let mut nu_aware = NuAwareCusum::new(req.path.change_subblock(frame), cfg.eta());
    let mut nu_stops = FirstCrossings::new(&req.thresholds);
    let mut sr = ShiryaevRoberts::new(cfg.eta());
    let mut no_reset = NoResetCusum::new(cfg.eta());
    let mut no_reset_stops = FirstCrossings::new(&req.thresholds);
    let mut sr_violations = 0u32;
    let mut no_reset_violations = 0u32;
    let mut log_sr_probe = None;
    let mut trace = Vec::new();
    let mut comm_obs = Vec::with_capacity(if req.comm.is_some() { cfg.block_length() as usize } else { 0 });
    let mut ys = vec![0usize; l];
    let mut xs = vec![0usize; l];

    for j in 1..=k as u64 {
        for idx in 0..=l {
            let emission = encoder.next_symbol(&mut rng)?;
            let x = emission.symbol();
            let i = encoder.position() as u64;
            let s = req.path.state_at(i);
            let mut y = sensing.sample(s, x, &mut rng);
            if idx == l && s == 0 {
                if let Prefix::Forced(forced) = req.prefix {
                    y = forced;
                }
            }
            if req.comm.is_some() {
                comm_obs.push(comm.sample(s, x, &mut rng));
            }
            encoder.feedback(y)?;
            if idx < l {
                xs[idx] = x;
                ys[idx] = y;
            }
        }
        let s_hat = encoder.estimates()[j as usize - 1];
        let increment = ctx.llr.subblock_llr(s_hat, &xs, &ys);
        let w = scs.push(increment);
        if j > cfg.eta() as u64 {
            stops.observe(j, w);
        }
        if req.oracles || req.trace {
            let wn = nu_aware.push(increment);
            if nu_aware.eligible() {
                nu_stops.observe(j, wn);
            }
            let log_r = sr.push(increment);
            if j > cfg.eta() as u64 && log_r < w {
                sr_violations += 1;
            }
            let wp = no_reset.push(increment);
            if no_reset.eligible() {
                no_reset_stops.observe(j, wp);
                if w < wp {
                    no_reset_violations += 1;
                }
            }
            if req.sr_probe == Some(j) {
                log_sr_probe = Some(log_r);
            }
            if req.trace {
                trace.push(TraceRow {
                    subblock: j,
                    estimate: s_hat,
                    increment,
                    statistic: w,
                    log_sr: log_r,
                });
            }
        }
        let oracles_done = !req.oracles
            || (nu_stops.all_stopped()
                && no_reset_stops.all_stopped()
                && req.sr_probe.map_or(true, |p| j >= p));
        if !req.run_to_end && req.comm.is_none() && !req.trace && stops.all_stopped() && oracles_done {
            break;
        }
    }

    let mut decoded = None;
    let mut error_probability = None;
    if let Some(method) = req.comm {
        let estimates = encoder.estimates();
        match method {
            PeMethod::Exhaustive => {
                let m_hat = decode(&ctx.codebook, estimates, &comm_obs, comm)?;
                decoded = Some(m_hat);
                error_probability = Some(if m_hat == codeword.message() { 0.0 } else { 1.0 });
            }
            PeMethod::Ensemble => {
                let sent: Vec<&[u8]> = (1..=k).map(|j| encoder.sent_subblock(j)).collect();
                error_probability = Some(ensemble_error_probability(cfg, estimates, &sent, &comm_obs, comm)?);
            }
        }
    }

    let oracle = req.oracles.then(|| OracleOutcome {
        nu_aware: crossings_to_stops(&nu_stops, &det, k),
        no_reset: crossings_to_stops(&no_reset_stops, &det, k),
        sr_violations,
        no_reset_violations,
        log_sr_probe,
    });
    Ok(TrialOutcome {
        seed,
        path: req.path,
        message: codeword.message(),
        stops: crossings_to_stops(&stops, &det, k),
        estimates: encoder.estimates().to_vec(),
        decoded,
        error_probability,
        oracle,
        trace,
    })
}

/// min(M, samples) distinct message indices drawn from the master seed.
pub fn sample_messages(cfg: &JccsConfig, samples: usize) -> Vec<u64> {
    let limit = cfg.message_index_limit();
    if limit <= samples as u64 {
        return (0..limit).collect();
    }
    let mut rng = stream(cfg.master_seed(), &[tag::MESSAGE]);
    let mut out: Vec<u64> = Vec::with_capacity(samples);
    while out.len() < samples {
        let m = rng.gen_range(0..limit);
        if !out.contains(&m) {
            out.push(m);
        }
    }
    out
}

/// Splits `total` trials over `parts` as evenly as possible.
fn split_trials(total: usize, parts: usize) -> Vec<usize> {
    (0..parts).map(|i| total / parts + usize::from(i < total % parts)).collect()
}

fn point_id(kind: u64, a: u64, b: u64, c: u64) -> u64 {
    derive_seed(kind, &[a, b, c])
}

/// False alarm rate for one sampled message.
#[derive(Debug, Clone, Serialize)]
pub struct MessageFar {
    pub message: u64,
    pub mean_stop: f64,
    pub std_error: f64,
    pub far: EstimateWithCI,
}

#[derive(Debug, Clone, Serialize)]
pub struct FarReport {
    /// Max over sampled messages of 1/E_∞[N] with its interval.
    pub far: EstimateWithCI,
    pub worst_message: u64,
    pub per_message: Vec<MessageFar>,
    pub block_length: u64,
}

/// FAR = max_m 1/E_∞[N(m)]. Censored runs count as N = n + 1, which biases
/// the estimate upward (conservative).
pub fn estimate_far(spec: &ExperimentSpec) -> Result<FarReport> {
    spec.validate()?;
    let ctx = TrialContext::new(&spec.pair, &spec.jccs)?;
    let messages = sample_messages(&spec.jccs, spec.message_samples);
    let counts = split_trials(spec.trials, messages.len());
    let threads = spec.worker_count();
    let b = spec.detector.threshold();
    let n = spec.jccs.block_length();
    let z2 = two_sided_z(spec.confidence);
    let z1 = one_sided_z(spec.confidence);
    let mut per_message = Vec::with_capacity(messages.len());
    let mut all_censored = true;
    for (slot, (&m, &count)) in messages.iter().zip(&counts).enumerate() {
        if count == 0 {
            continue;
        }
        let cw = ctx.codebook.codeword(m);
        let point = point_id(1, slot as u64, 0, 0);
        let outcomes = parallel_trials(threads, count, |t| {
            let req = TrialRequest::new(StatePath::BaseOnly, point, t, &[b]);
            run_trial(&ctx, MessageChoice::Fixed(&cw), &req).map(|o| o.stops[0])
        })?;
        let stops: Vec<f64> = outcomes.iter().map(|s| s.symbol() as f64).collect();
        let censored = outcomes.iter().filter(|s| s.is_censored()).count();
        if censored < count {
            all_censored = false;
        }
        let (mean, se) = mean_and_se(&stops);
        let inv = |v: f64| if v > 0.0 { 1.0 / v } else { f64::INFINITY };
        let far = EstimateWithCI {
            estimate: 1.0 / mean,
            half_width: (inv(mean - z2 * se) - inv(mean + z2 * se)) / 2.0,
            lower: inv(mean + z2 * se),
            upper: inv(mean - z2 * se),
            one_sided_upper: inv(mean - z1 * se),
            confidence: spec.confidence,
            censored_fraction: censored as f64 / count as f64,
            trials: count,
        };
        per_message.push(MessageFar {
            message: m,
            mean_stop: mean,
            std_error: se,
            far,
        });
    }
    if all_censored {
        return Err(Error::InsufficientTrials {
            trials: spec.trials,
            bound: 1.0 / (n + 1) as f64,
        });
    }
    let worst = per_message
        .iter()
        .max_by(|a, b| a.far.estimate.total_cmp(&b.far.estimate))
        .expect("at least one message");
    let total: usize = per_message.iter().map(|p| p.far.trials).sum();
    let censored: f64 = per_message
        .iter()
        .map(|p| p.far.censored_fraction * p.far.trials as f64)
        .sum::<f64>()
        / total as f64;
    let max_of = |f: fn(&MessageFar) -> f64| per_message.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    let far = EstimateWithCI {
        estimate: worst.far.estimate,
        half_width: worst.far.half_width,
        lower: max_of(|p| p.far.lower),
        upper: max_of(|p| p.far.upper),
        one_sided_upper: max_of(|p| p.far.one_sided_upper),
        confidence: spec.confidence,
        censored_fraction: censored,
        trials: total,
    };
    Ok(FarReport {
        far,
        worst_message: worst.message,
        per_message,
        block_length: n,
    })
}

/// Mean detection delay at one (ν, prefix) point.
#[derive(Debug, Clone, Serialize)]
pub struct DelayPoint {
    pub nu: u64,
    pub post_state: usize,
    pub threshold: f64,
    pub prefix: Prefix,
    /// Max over sampled messages of E[(N − ν + 1)⁺].
    pub delay: EstimateWithCI,
    pub worst_message: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WaddReport {
    pub points: Vec<DelayPoint>,
    /// Index into `points` of the largest mean delay.
    pub worst: usize,
}

impl WaddReport {
    pub fn worst_point(&self) -> &DelayPoint {
        &self.points[self.worst]
    }
}

/// Delays for every threshold at one (ν, s, prefix), each the max over messages.
fn delay_points(
    spec: &ExperimentSpec,
    ctx: &TrialContext,
    codewords: &[Codeword],
    nu: u64,
    s: usize,
    prefix: Prefix,
    thresholds: &[f64],
) -> Result<Vec<DelayPoint>> {
    let counts = split_trials(spec.trials, codewords.len());
    let threads = spec.worker_count();
    let path = StatePath::change(nu, s)?;
    let prefix_id = match prefix {
        Prefix::Natural => 0,
        Prefix::Forced(y) => y as u64 + 1,
    };
    // per threshold: (best estimate, message)
    let mut best: Vec<Option<(EstimateWithCI, u64)>> = vec![None; thresholds.len()];
    for (slot, (cw, &count)) in codewords.iter().zip(&counts).enumerate() {
        if count == 0 {
            continue;
        }
        let point = point_id(2, nu, s as u64, (slot as u64) << 8 | prefix_id);
        let outcomes = parallel_trials(threads, count, |t| {
            let mut req = TrialRequest::new(path, point, t, thresholds);
            req.prefix = prefix;
            run_trial(ctx, MessageChoice::Fixed(cw), &req).map(|o| o.stops)
        })?;
        for (bi, slot_best) in best.iter_mut().enumerate() {
            let delays: Vec<f64> = outcomes
                .iter()
                .map(|stops| (stops[bi].symbol() as f64 - nu as f64 + 1.0).max(0.0))
                .collect();
            let censored = outcomes.iter().filter(|stops| stops[bi].is_censored()).count();
            let est = normal_mean(&delays, spec.confidence, censored as f64 / count as f64)?;
            if slot_best.as_ref().map_or(true, |(b, _)| est.estimate > b.estimate) {
                *slot_best = Some((est, cw.message()));
            }
        }
    }
    Ok(thresholds
        .iter()
        .zip(best)
        .map(|(&threshold, b)| {
            let (delay, worst_message) = b.expect("at least one message has trials");
            DelayPoint {
                nu,
                post_state: s,
                threshold,
                prefix,
                delay,
                worst_message,
            }
        })
        .collect())
}

fn sampled_codewords(spec: &ExperimentSpec, ctx: &TrialContext) -> Vec<Codeword> {
    sample_messages(&spec.jccs, spec.message_samples.min(spec.trials))
        .into_iter()
        .map(|m| ctx.codebook.codeword(m))
        .collect()
}

fn prefixes(spec: &ExperimentSpec) -> Vec<Prefix> {
    let mut out = vec![Prefix::Natural];
    if spec.adversarial_prefix {
        out.extend((0..spec.pair.sensing.output_count()).map(Prefix::Forced));
    }
    out
}

/// WADD proxy for post-change state s: max over the ν grid (and, when enabled,
/// over forced pre-change pilot echoes) of the mean delay. This is a lower
/// bound on the essential supremum in the definition.
pub fn estimate_wadd(spec: &ExperimentSpec, s: usize) -> Result<WaddReport> {
    spec.validate()?;
    let ctx = TrialContext::new(&spec.pair, &spec.jccs)?;
    let codewords = sampled_codewords(spec, &ctx);
    let b = spec.detector.threshold();
    let mut points = Vec::new();
    for &nu in &spec.nu_grid {
        for prefix in prefixes(spec) {
            points.extend(delay_points(spec, &ctx, &codewords, nu, s, prefix, &[b])?);
        }
    }
    let worst = points
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.delay.estimate.total_cmp(&b.1.delay.estimate))
        .map(|(i, _)| i)
        .expect("validated non-empty grid");
    Ok(WaddReport { points, worst })
}

#[derive(Debug, Clone, Serialize)]
pub struct SlopeReport {
    pub post_state: usize,
    /// Worst-case delay per threshold.
    pub points: Vec<DelayPoint>,
    /// Least-squares slope of WADD against b (symbols per nat); NaN if all censor.
    pub slope: f64,
    pub intercept: f64,
    /// Empirical Δ_s = 1/slope in nats per symbol; 0 when every run censors.
    pub delta_nats: f64,
    pub all_censored: bool,
}

/// Fits WADD against the threshold b. Since b = |ln α| − ln(L+1), the slope
/// against |ln α| is the same.
pub fn estimate_delay_slope(spec: &ExperimentSpec, s: usize, thresholds: &[f64]) -> Result<SlopeReport> {
    spec.validate()?;
    if thresholds.len() < 3 {
        return Err(Error::InvalidConfig("need at least three thresholds".into()));
    }
    let ctx = TrialContext::new(&spec.pair, &spec.jccs)?;
    let codewords = sampled_codewords(spec, &ctx);
    let mut worst: Vec<Option<DelayPoint>> = vec![None; thresholds.len()];
    for &nu in &spec.nu_grid {
        for prefix in prefixes(spec) {
            for (i, p) in delay_points(spec, &ctx, &codewords, nu, s, prefix, thresholds)?
                .into_iter()
                .enumerate()
            {
                if worst[i].as_ref().map_or(true, |w| p.delay.estimate > w.delay.estimate) {
                    worst[i] = Some(p);
                }
            }
        }
    }
    let points: Vec<DelayPoint> = worst.into_iter().map(|p| p.expect("grid is non-empty")).collect();
    let all_censored = points.iter().all(|p| p.delay.censored_fraction >= 1.0);
    if all_censored {
        return Ok(SlopeReport {
            post_state: s,
            points,
            slope: f64::NAN,
            intercept: f64::NAN,
            delta_nats: 0.0,
            all_censored,
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.threshold).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.delay.estimate).collect();
    let (slope, intercept) = least_squares(&xs, &ys)?;
    Ok(SlopeReport {
        post_state: s,
        points,
        slope,
        intercept,
        delta_nats: if slope > 0.0 { 1.0 / slope } else { 0.0 },
        all_censored,
    })
}

/// Average decoding error with a uniform message per trial, under the first
/// (ν, s) of the spec's grid.
pub fn estimate_pe(spec: &ExperimentSpec, method: PeMethod) -> Result<EstimateWithCI> {
    spec.validate()?;
    if method == PeMethod::Exhaustive && spec.jccs.message_index_limit() > EXHAUSTIVE_LIMIT {
        return Err(Error::Unsupported(format!(
            "exhaustive decoding over {} messages",
            spec.jccs.message_count()
        )));
    }
    let ctx = TrialContext::new(&spec.pair, &spec.jccs)?;
    let path = StatePath::change(spec.nu_grid[0], spec.post_states[0])?;
    let point = point_id(3, spec.nu_grid[0], spec.post_states[0] as u64, 0);
    let probs = parallel_trials(spec.worker_count(), spec.trials, |t| {
        let mut req = TrialRequest::new(path, point, t, &[]);
        req.comm = Some(method);
        run_trial(&ctx, MessageChoice::Uniform, &req).map(|o| o.error_probability.unwrap_or(1.0))
    })?;
    match method {
        PeMethod::Exhaustive => {
            let errors = probs.iter().filter(|&&p| p > 0.5).count();
            wilson(errors, spec.trials, spec.confidence)
        }
        PeMethod::Ensemble => {
            // The per-trial conditional probabilities are heavy-tailed, so the
            // lower limit comes from the distribution-free bound.
            let mut ci = normal_mean(&probs, spec.confidence, 0.0)?;
            ci.lower = nonnegative_mean_lower(&probs, spec.confidence)?;
            Ok(ci)
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MleErrorPoint {
    pub eta: usize,
    pub error: EstimateWithCI,
    /// (|S| − 1)·ρ^η.
    pub bound: f64,
}

/// Empirical P(ŝ_j ≠ s) at j = j_ν + η, where all η pilots in the window are
/// post-change (change at ν = 1).
pub fn estimate_mle_error(spec: &ExperimentSpec, s: usize, etas: &[usize]) -> Result<Vec<MleErrorPoint>> {
    spec.validate()?;
    let sensing = &spec.pair.sensing;
    if s == 0 || s > sensing.post_state_count() {
        return Err(Error::StateOutOfRange(s));
    }
    let rho = sensing.rho_max()?;
    let others = (sensing.post_state_count() - 1) as f64;
    let threads = spec.worker_count();
    let mut out = Vec::with_capacity(etas.len());
    for &eta in etas {
        if eta == 0 {
            return Err(Error::InvalidConfig("eta must be positive".into()));
        }
        let cfg = spec.jccs.with_subblocks(spec.jccs.subblocks().max(eta + 1))?.with_eta(eta)?;
        let book = SubblockCodebook::lazy(&cfg);
        let point = point_id(4, eta as u64, s as u64, 0);
        let wrong = parallel_trials(threads, spec.trials, |t| {
            let mut rng = stream(derive_seed(cfg.master_seed(), &[tag::TRIAL, point, t]), &[]);
            let mut window = PilotWindow::new(eta, sensing.input_count(), sensing.output_count());
            for j in 1..=eta {
                let x = book.pilot(j);
                window.push(x, sensing.sample(s, x, &mut rng));
            }
            Ok(window.estimate(sensing) != s)
        })?;
        let errors = wrong.iter().filter(|&&w| w).count();
        out.push(MleErrorPoint {
            eta,
            error: wilson(errors, spec.trials, spec.confidence)?,
            bound: others * rho.powi(eta as i32),
        });
    }
    Ok(out)
}

/// Entropy rate (bits/subblock) of the estimate sequence over `trials` runs.
pub fn estimate_entropy_rate(spec: &ExperimentSpec, path: StatePath) -> Result<f64> {
    spec.validate()?;
    let ctx = TrialContext::new(&spec.pair, &spec.jccs)?;
    let cw = ctx.codebook.codeword(0);
    let k = spec.jccs.subblocks() as u64;
    let frame = spec.jccs.frame() as u64;
    let truth: Vec<usize> = (1..=k).map(|j| path.state_at(j * frame)).collect();
    let point = point_id(5, k, spec.jccs.eta() as u64, 0);
    let traces = parallel_trials(spec.worker_count(), spec.trials, |t| {
        let mut req = TrialRequest::new(path, point, t, &[]);
        req.run_to_end = true;
        run_trial(&ctx, MessageChoice::Fixed(&cw), &req).map(|o| EstimateTrace::new(o.estimates, &truth))
    })?;
    crate::codec::entropy_rate_estimate(&traces)
}

/// Aggregate of the pathwise oracle comparisons over many trials.
#[derive(Debug, Clone, Serialize)]
pub struct OracleSummary {
    pub trials: usize,
    /// Trials where the detector stopped after the ν-aware statistic.
    pub nu_aware_violations: usize,
    /// Trials where the detector stopped after the no-reset statistic.
    pub no_reset_stop_violations: usize,
    /// Total subblocks with ln R_j < W_j.
    pub sr_violations: u64,
    /// Total subblocks j > 2η with W_j < W'_j.
    pub no_reset_violations: u64,
    /// Mean and standard error of R_j − j at the probe index, if requested.
    pub sr_probe_mean: Option<f64>,
    pub sr_probe_se: Option<f64>,
}

/// Runs the detector and the oracle statistics on shared paths.
pub fn run_oracle_checks(spec: &ExperimentSpec, path: StatePath, sr_probe: Option<u64>) -> Result<OracleSummary> {
    spec.validate()?;
    let ctx = TrialContext::new(&spec.pair, &spec.jccs)?;
    let codewords = sampled_codewords(spec, &ctx);
    let b = spec.detector.threshold();
    let point = point_id(6, path.change_point().unwrap_or(0), path.post_state().unwrap_or(0) as u64, 0);
    let outcomes = parallel_trials(spec.worker_count(), spec.trials, |t| {
        let mut req = TrialRequest::new(path, point, t, &[b]);
        req.oracles = true;
        req.sr_probe = sr_probe;
        let cw = &codewords[t as usize % codewords.len()];
        run_trial(&ctx, MessageChoice::Fixed(cw), &req)
    })?;
    let mut summary = OracleSummary {
        trials: outcomes.len(),
        nu_aware_violations: 0,
        no_reset_stop_violations: 0,
        sr_violations: 0,
        no_reset_violations: 0,
        sr_probe_mean: None,
        sr_probe_se: None,
    };
    let mut probe = Vec::new();
    for o in &outcomes {
        let oracle = o.oracle.as_ref().expect("oracles requested");
        if o.stops[0].symbol() > oracle.nu_aware[0].symbol() {
            summary.nu_aware_violations += 1;
        }
        if o.stops[0].symbol() > oracle.no_reset[0].symbol() {
            summary.no_reset_stop_violations += 1;
        }
        summary.sr_violations += oracle.sr_violations as u64;
        summary.no_reset_violations += oracle.no_reset_violations as u64;
        if let (Some(lr), Some(j)) = (oracle.log_sr_probe, sr_probe) {
            probe.push(lr.exp() - j as f64);
        }
    }
    if !probe.is_empty() {
        let (m, se) = mean_and_se(&probe);
        summary.sr_probe_mean = Some(m);
        summary.sr_probe_se = Some(se);
    }
    Ok(summary)
}

/// Per-subblock trace of a single seeded trial.
pub fn trace_trial(spec: &ExperimentSpec, path: StatePath, trial: u64) -> Result<TrialOutcome> {
    spec.validate()?;
    let ctx = TrialContext::new(&spec.pair, &spec.jccs)?;
    let cw = ctx.codebook.codeword(sample_messages(&spec.jccs, 1)[0]);
    let mut req = TrialRequest::new(path, point_id(7, 0, 0, 0), trial, &[spec.detector.threshold()]);
    req.trace = true;
    req.oracles = true;
    run_trial(&ctx, MessageChoice::Fixed(&cw), &req)
}
