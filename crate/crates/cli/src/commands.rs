use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use isacqcd_core::channel::{nats_to_bits, StatePath};
use isacqcd_core::config::{validate, Config};
use isacqcd_core::montecarlo::{
    estimate_delay_slope, estimate_far, estimate_mle_error, estimate_pe, estimate_wadd, trace_trial, ExperimentSpec,
};
use isacqcd_core::region::{
    self, beam_sweep, capacity_delta0, closed_loop_curve, closed_loop_max_delta, delta_grid, mimo_capacity_delta0,
    mimo_closed_loop_max_delta, mimo_curve, mimo_open_loop_curve, mimo_open_loop_max_delta, open_loop_curve,
    open_loop_max_delta,
};
use serde::Serialize;

use crate::figures::{self, beam_angles, beam_table, curves_table};
use crate::output::{num, sha256_hex, write_atomic, write_table, RunManifest, Table};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "isacqcd", version, about = "Joint communication and quickest change detection toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a channel config against the model assumptions.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write fig3.csv, fig4.csv and fig5.csv (with manifests) into a directory.
    Figures {
        #[arg(long, default_value = "figures")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Monte Carlo estimators.
    Simulate {
        #[arg(value_enum)]
        what: SimKind,
        #[command(flatten)]
        common: SimArgs,
    },
    /// Rate–delay regions.
    Region {
        #[arg(value_enum)]
        what: RegionKind,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// all-equal, subset-zero:<states> or per-state:<weights>.
        #[arg(long)]
        coupling: Option<String>,
    },
    /// Per-subblock trace of one seeded run.
    Trace {
        #[command(flatten)]
        common: SimArgs,
        /// Post-change state (omit with --nu for a no-change run).
        #[arg(long)]
        state: Option<usize>,
        #[arg(long, default_value_t = 0)]
        trial: u64,
    },
    /// Print derived channel and code quantities as JSON.
    Dump {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, clap::Args)]
pub struct SimArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Override the change-point grid.
    #[arg(long, value_delimiter = ',')]
    pub nu: Option<Vec<u64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimKind {
    Far,
    Wadd,
    Pe,
    MleError,
    Slope,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegionKind {
    ClosedLoop,
    OpenLoop,
    Capacity,
    Mimo,
    BeamSweep,
}

/// Runs a parsed command. Messages for the user go to stdout.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { config } => cmd_validate(&config),
        Command::Figures { out, seed } => cmd_figures(&out, seed),
        Command::Simulate { what, common } => cmd_simulate(what, &common),
        Command::Region {
            what,
            config,
            out,
            coupling,
        } => cmd_region(what, &config, &out, coupling.as_deref()),
        Command::Trace { common, state, trial } => cmd_trace(&common, state, trial),
        Command::Dump { config, out } => cmd_dump(&config, out.as_deref()),
    }
}

fn read_config(path: &Path) -> Result<(Config, String), CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| CliError::Validation("config is not UTF-8".into()))?;
    Ok((Config::parse(&text)?, sha256_hex(&bytes)))
}

fn emit(out: &Path, table: &Table, command: &str, hash: &str, seed: u64, trials: Option<usize>, start: Instant) -> Result<(), CliError> {
    write_table(out, table)?;
    RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        config_hash: hash.into(),
        master_seed: seed,
        outputs: vec![out.display().to_string()],
        trials,
        wall_clock_secs: start.elapsed().as_secs_f64(),
    }
    .write(&RunManifest::path_for(out))?;
    println!("wrote {}", out.display());
    Ok(())
}

pub fn cmd_validate(path: &Path) -> Result<(), CliError> {
    let (config, _) = read_config(path)?;
    let checks = validate(&config);
    for c in &checks {
        match &c.outcome {
            Ok(msg) => println!("ok    {:<20} {msg}", c.name),
            Err(e) => println!("FAIL  {:<20} {e}", c.name),
        }
    }
    match checks.iter().find(|c| c.outcome.is_err()) {
        Some(c) => Err(CliError::Validation(format!(
            "{}: {}",
            c.name,
            c.outcome.as_ref().expect_err("failed check")
        ))),
        None => Ok(()),
    }
}

pub fn cmd_figures(dir: &Path, seed: u64) -> Result<(), CliError> {
    let builtin = sha256_hex(b"built-in examples v1");
    for (name, build) in [
        ("fig3.csv", figures::fig3 as fn() -> Result<Table, CliError>),
        ("fig4.csv", figures::fig4),
        ("fig5.csv", figures::fig5),
    ] {
        let start = Instant::now();
        let table = build()?;
        emit(&dir.join(name), &table, "figures", &builtin, seed, None, start)?;
    }
    Ok(())
}

fn experiment(args: &SimArgs) -> Result<(Config, ExperimentSpec, String), CliError> {
    let (mut config, hash) = read_config(&args.config)?;
    if let (Some(seed), Some(j)) = (args.seed, config.jccs.as_mut()) {
        j.seed = seed;
    }
    if let Some(t) = args.trials {
        config.experiment.get_or_insert_with(Default::default).trials = Some(t);
    }
    if let Some(nu) = &args.nu {
        config.experiment.get_or_insert_with(Default::default).nu = Some(nu.clone());
    }
    let spec = config.experiment_spec()?;
    Ok((config, spec, hash))
}

fn alpha_cell(spec: &ExperimentSpec) -> String {
    spec.detector.alpha().map_or_else(|| "NA".into(), num)
}

pub fn simulate_table(what: SimKind, config: &Config, spec: &ExperimentSpec) -> Result<Table, CliError> {
    let seed = spec.jccs.master_seed().to_string();
    let b = spec.detector.threshold();
    let table = match what {
        SimKind::Far => {
            let r = estimate_far(spec)?;
            let mut t = Table::new(&[
                "message", "mean_stop", "far_estimate", "ci_lower", "ci_upper", "one_sided_upper", "alpha", "b",
                "censored_frac", "trials", "block_length", "seed",
            ]);
            let mut row = |m: String, mean: f64, e: &isacqcd_core::stats::EstimateWithCI| {
                t.push(vec![
                    m,
                    num(mean),
                    num(e.estimate),
                    num(e.lower),
                    num(e.upper),
                    num(e.one_sided_upper),
                    alpha_cell(spec),
                    num(b),
                    num(e.censored_fraction),
                    e.trials.to_string(),
                    r.block_length.to_string(),
                    seed.clone(),
                ])
            };
            for p in &r.per_message {
                row(p.message.to_string(), p.mean_stop, &p.far);
            }
            row("max".into(), 1.0 / r.far.estimate, &r.far);
            t
        }
        SimKind::Wadd => {
            let mut t = Table::new(&[
                "nu", "s", "prefix", "b", "alpha", "mean_delay", "ci_halfwidth", "censored_frac", "trials", "worst_message",
                "is_worst", "seed",
            ]);
            for &s in &spec.post_states {
                let r = estimate_wadd(spec, s)?;
                for (i, p) in r.points.iter().enumerate() {
                    t.push(vec![
                        p.nu.to_string(),
                        s.to_string(),
                        match p.prefix {
                            isacqcd_core::montecarlo::Prefix::Natural => "natural".into(),
                            isacqcd_core::montecarlo::Prefix::Forced(y) => format!("forced{y}"),
                        },
                        num(b),
                        alpha_cell(spec),
                        num(p.delay.estimate),
                        num(p.delay.half_width),
                        num(p.delay.censored_fraction),
                        p.delay.trials.to_string(),
                        p.worst_message.to_string(),
                        (i == r.worst).to_string(),
                        seed.clone(),
                    ]);
                }
            }
            t
        }
        SimKind::Slope => {
            let thresholds = config
                .experiment()
                .thresholds
                .ok_or_else(|| CliError::Validation("[experiment] thresholds is required for slope".into()))?;
            let mut t = Table::new(&[
                "s", "b", "mean_delay", "ci_halfwidth", "censored_frac", "trials", "nu", "fit_slope", "fit_intercept",
                "empirical_delta_nats", "kl_nats", "seed",
            ]);
            for &s in &spec.post_states {
                let r = estimate_delay_slope(spec, s, &thresholds)?;
                let kl = spec
                    .pair
                    .sensing
                    .conditional_kl(s, 0, &spec.jccs.composition(s).distribution())?;
                for p in &r.points {
                    t.push(vec![
                        s.to_string(),
                        num(p.threshold),
                        num(p.delay.estimate),
                        num(p.delay.half_width),
                        num(p.delay.censored_fraction),
                        p.delay.trials.to_string(),
                        p.nu.to_string(),
                        num(r.slope),
                        num(r.intercept),
                        num(r.delta_nats),
                        num(kl),
                        seed.clone(),
                    ]);
                }
            }
            t
        }
        SimKind::Pe => {
            let method = config.pe_method()?;
            let e = estimate_pe(spec, method)?;
            let mut t = Table::new(&[
                "method", "n", "k", "rate_bits", "pe_estimate", "ci_lower", "ci_upper", "ci_halfwidth", "trials", "seed",
            ]);
            t.push(vec![
                format!("{method:?}").to_lowercase(),
                spec.jccs.block_length().to_string(),
                spec.jccs.subblocks().to_string(),
                num(spec.jccs.rate_bits()),
                num(e.estimate),
                num(e.lower),
                num(e.upper),
                num(e.half_width),
                e.trials.to_string(),
                seed,
            ]);
            t
        }
        SimKind::MleError => {
            let etas = config.experiment().etas.unwrap_or_else(|| vec![spec.jccs.eta()]);
            let mut t = Table::new(&["eta", "s", "error", "ci_lower", "ci_upper", "one_sided_upper", "bound", "trials", "seed"]);
            for &s in &spec.post_states {
                for p in estimate_mle_error(spec, s, &etas)? {
                    t.push(vec![
                        p.eta.to_string(),
                        s.to_string(),
                        num(p.error.estimate),
                        num(p.error.lower),
                        num(p.error.upper),
                        num(p.error.one_sided_upper),
                        num(p.bound),
                        p.error.trials.to_string(),
                        seed.clone(),
                    ]);
                }
            }
            t
        }
    };
    Ok(table)
}

pub fn cmd_simulate(what: SimKind, args: &SimArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let (config, spec, hash) = experiment(args)?;
    let table = simulate_table(what, &config, &spec)?;
    let name = format!("simulate {}", what.to_possible_value().map_or("?".into(), |v| v.get_name().to_string()));
    emit(&args.out, &table, &name, &hash, spec.jccs.master_seed(), Some(spec.trials), start)
}

pub fn region_table(what: RegionKind, config: &Config, coupling: Option<&str>) -> Result<Table, CliError> {
    let points = config.region().grid_points.unwrap_or(figures::FIG3_POINTS);
    let steps = config.simplex_steps();
    let table = match what {
        RegionKind::ClosedLoop => {
            let pair = config.channel_pair()?;
            let c = config.coupling(pair.post_state_count(), coupling)?;
            let grid = delta_grid(closed_loop_max_delta(&pair, &c)?, points);
            let curve = closed_loop_curve(&pair, &c, &grid, steps)?;
            curves_table(&[(&c.label().replace(',', "+"), &curve)], pair.post_state_count())
        }
        RegionKind::OpenLoop => {
            let pair = config.channel_pair()?;
            let (max, _) = open_loop_max_delta(&pair, steps)?;
            let curve = open_loop_curve(&pair, &delta_grid(max, points), steps)?;
            curves_table(&[(figures::OPEN_LOOP, &curve)], pair.post_state_count())
        }
        RegionKind::Capacity => {
            let mut t = Table::new(&["s", "capacity_bits", "iterations", "gap_bits", "witness", "min_capacity_bits"]);
            match config.model()? {
                isacqcd_core::config::ChannelModel::Discrete(pair) => {
                    let cap = capacity_delta0(&pair)?;
                    for (i, b) in cap.per_state.iter().enumerate() {
                        t.push(vec![
                            (i + 1).to_string(),
                            num(b.capacity_bits),
                            b.iterations.to_string(),
                            num(b.gap_bits),
                            b.input.iter().map(|&v| num(v)).collect::<Vec<_>>().join(";"),
                            num(cap.rate_bits),
                        ]);
                    }
                }
                isacqcd_core::config::ChannelModel::Mimo(model) => {
                    let (rate, covs) = mimo_capacity_delta0(&model);
                    for (i, sigma) in covs.iter().enumerate() {
                        let r = region::comm_rate_bits(model.comm_gain(i + 1), sigma);
                        let w: Vec<String> = sigma.iter().map(|z| format!("{}:{}", num(z.re), num(z.im))).collect();
                        t.push(vec![(i + 1).to_string(), num(r), "0".into(), "0".into(), w.join(";"), num(rate)]);
                    }
                }
            }
            t
        }
        RegionKind::Mimo => {
            let model = config.mimo_model()?;
            let states = model.post_state_count();
            let search = config.mimo_search();
            let points = config.region().grid_points.unwrap_or(figures::FIG4_POINTS);
            match coupling {
                Some("open-loop") => {
                    let (max, _) = mimo_open_loop_max_delta(&model, search);
                    let curve = mimo_open_loop_curve(&model, &delta_grid(max, points), search)?;
                    curves_table(&[(figures::OPEN_LOOP, &curve)], states)
                }
                _ => {
                    let c = config.coupling(states, coupling)?;
                    let grid = delta_grid(mimo_closed_loop_max_delta(&model, &c)?, points);
                    let curve = mimo_curve(&model, &c, &grid, search)?;
                    curves_table(&[(&c.label().replace(',', "+"), &curve)], states)
                }
            }
        }
        RegionKind::BeamSweep => {
            let model = config.mimo_model()?;
            let ch = &config.channel;
            let from = ch.theta_comm.unwrap_or(std::f64::consts::FRAC_PI_2);
            let to = ch.theta_target.unwrap_or(0.0);
            let n = config.region().theta_points.unwrap_or(figures::FIG5_POINTS);
            beam_table(&beam_sweep(&model, &beam_angles(from, to, n))?)
        }
    };
    Ok(table)
}

pub fn cmd_region(what: RegionKind, path: &Path, out: &Path, coupling: Option<&str>) -> Result<(), CliError> {
    let start = Instant::now();
    let (config, hash) = read_config(path)?;
    let table = region_table(what, &config, coupling)?;
    let seed = config.jccs.as_ref().map_or(0, |j| j.seed);
    let name = format!("region {}", what.to_possible_value().map_or("?".into(), |v| v.get_name().to_string()));
    emit(out, &table, &name, &hash, seed, None, start)
}

pub fn cmd_trace(args: &SimArgs, state: Option<usize>, trial: u64) -> Result<(), CliError> {
    let start = Instant::now();
    let (_, spec, hash) = experiment(args)?;
    let path = match state {
        Some(s) => StatePath::change(spec.nu_grid[0], s)?,
        None => StatePath::BaseOnly,
    };
    let outcome = trace_trial(&spec, path, trial)?;
    let mut t = Table::new(&["subblock", "estimate", "increment", "statistic", "log_sr", "stopped"]);
    let stop = outcome.stops[0];
    let frame = spec.jccs.frame() as u64;
    for r in &outcome.trace {
        t.push(vec![
            r.subblock.to_string(),
            r.estimate.to_string(),
            num(r.increment),
            num(r.statistic),
            num(r.log_sr),
            (!stop.is_censored() && r.subblock * frame == stop.symbol()).to_string(),
        ]);
    }
    emit(&args.out, &t, "trace", &hash, spec.jccs.master_seed(), Some(1), start)
}

#[derive(Debug, Serialize)]
struct Dump {
    kind: &'static str,
    post_states: usize,
    inputs: Option<usize>,
    outputs: Option<usize>,
    drift_nats: Option<Vec<Vec<f64>>>,
    rho_max: Option<f64>,
    gamma: Option<f64>,
    second_moment: Option<f64>,
    capacity_bits: f64,
    block_length: Option<u64>,
    threshold: Option<f64>,
    compositions: Option<Vec<Vec<usize>>>,
    deployed_kl_bits: Option<Vec<f64>>,
    scaling_warnings: Vec<String>,
}

pub fn cmd_dump(path: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let (config, _) = read_config(path)?;
    let jccs = config.jccs.as_ref().map(|_| config.jccs_config()).transpose()?;
    let det = if config.jccs.is_some() && config.detector.is_some() {
        Some(config.detector_config()?)
    } else {
        None
    };
    let dump = match config.model()? {
        isacqcd_core::config::ChannelModel::Discrete(pair) => {
            let drift = pair
                .sensing
                .post_states()
                .map(|s| pair.sensing.drift_vector(s))
                .collect::<Result<Vec<_>, _>>()?;
            let kl = jccs
                .as_ref()
                .map(|j| {
                    (1..=j.post_state_count())
                        .map(|s| Ok(nats_to_bits(pair.sensing.conditional_kl(s, 0, &j.composition(s).distribution())?)))
                        .collect::<Result<Vec<_>, isacqcd_core::Error>>()
                })
                .transpose()?;
            Dump {
                kind: "discrete",
                post_states: pair.post_state_count(),
                inputs: Some(pair.input_count()),
                outputs: Some(pair.sensing.output_count()),
                drift_nats: Some(drift),
                rho_max: pair.sensing.rho_max().ok(),
                gamma: Some(pair.sensing.gamma_max_llr()?),
                second_moment: Some(pair.sensing.second_moment_bound()?),
                capacity_bits: capacity_delta0(&pair)?.rate_bits,
                block_length: jccs.as_ref().map(|j| j.block_length()),
                threshold: det.map(|d| d.threshold()),
                compositions: jccs.as_ref().map(|j| j.compositions().iter().map(|c| c.counts().to_vec()).collect()),
                deployed_kl_bits: kl,
                scaling_warnings: jccs.as_ref().map(|j| j.scaling_warnings()).unwrap_or_default(),
            }
        }
        isacqcd_core::config::ChannelModel::Mimo(model) => Dump {
            kind: "gaussian",
            post_states: model.post_state_count(),
            inputs: None,
            outputs: None,
            drift_nats: None,
            rho_max: None,
            gamma: None,
            second_moment: None,
            capacity_bits: mimo_capacity_delta0(&model).0,
            block_length: None,
            threshold: None,
            compositions: None,
            deployed_kl_bits: None,
            scaling_warnings: Vec::new(),
        },
    };
    let json = serde_json::to_string_pretty(&dump).map_err(|e| CliError::Io(e.to_string()))?;
    match out {
        Some(p) => write_atomic(p, json.as_bytes())?,
        None => println!("{json}"),
    }
    Ok(())
}
