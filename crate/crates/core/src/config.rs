//! TOML configuration: channel, code, detector, experiment and region sections.
//!
//! ```toml
//! [channel]
//! preset = "bibo"            # or kind = "discrete" with explicit matrices
//!
//! [jccs]
//! subblock_len = 24
//! subblocks = 2000
//! eta = 20
//! compositions = [[0.0, 1.0], [1.0, 0.0]]
//! seed = 1
//!
//! [detector]
//! alpha = 0.01
//!
//! [experiment]
//! trials = 5000
//! ```

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Deserialize;

use crate::channel::{CMatrix, ChannelPair, DiscreteChannelFamily, MimoChannelModel};
use crate::codec::JccsConfig;
use crate::detector::DetectorConfig;
use crate::error::{Error, Result};
use crate::montecarlo::{ExperimentSpec, PeMethod, DEFAULT_MESSAGE_SAMPLES};
use crate::presets::{self, BeamGeometry};
use crate::region::{Coupling, MimoSearch, DEFAULT_SIMPLEX_STEPS};

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub channel: ChannelSection,
    pub jccs: Option<JccsSection>,
    pub detector: Option<DetectorSection>,
    pub experiment: Option<ExperimentSection>,
    pub region: Option<RegionSection>,
}

/// One complex entry as [re, im], or a bare real number.
#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl Entry {
    fn value(self) -> Complex64 {
        match self {
            Entry::Real(r) => Complex64::new(r, 0.0),
            Entry::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    /// "bibo", "mimo-two-state" or "beam".
    pub preset: Option<String>,
    /// "discrete", "mimo" or "beam" when no preset is given.
    pub kind: Option<String>,
    /// Discrete: per state (base first), per input, the output row.
    pub sensing: Option<Vec<Vec<Vec<f64>>>>,
    pub comm: Option<Vec<Vec<Vec<f64>>>>,
    /// MIMO: per post-change state, row-major gain rows.
    pub sensing_gains: Option<Vec<Vec<Vec<Entry>>>>,
    pub comm_gains: Option<Vec<Vec<Vec<Entry>>>>,
    pub comm_base: Option<Vec<Vec<Entry>>>,
    pub tx_antennas: Option<usize>,
    pub power: Option<f64>,
    /// Beam geometry.
    pub antennas: Option<usize>,
    pub theta_comm: Option<f64>,
    pub theta_target: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct JccsSection {
    pub subblock_len: usize,
    pub subblocks: usize,
    pub eta: usize,
    #[serde(default)]
    pub rate_bits: f64,
    /// p(x|s) for s = 1..S; rounded to compositions of length L.
    pub compositions: Vec<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    pub alpha: Option<f64>,
    /// Explicit threshold b in nats; overrides `alpha`.
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub trials: Option<usize>,
    pub confidence: Option<f64>,
    pub nu: Option<Vec<u64>>,
    pub post_states: Option<Vec<usize>>,
    pub message_samples: Option<usize>,
    pub threads: Option<usize>,
    #[serde(default)]
    pub adversarial_prefix: bool,
    /// Thresholds (nats) for the slope fit.
    pub thresholds: Option<Vec<f64>>,
    /// Window sizes for the estimation-error experiment.
    pub etas: Option<Vec<usize>>,
    /// "ensemble" or "exhaustive".
    pub pe_method: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RegionSection {
    pub coupling: Option<String>,
    pub grid_points: Option<usize>,
    pub simplex_steps: Option<usize>,
    pub angle_steps: Option<usize>,
    pub split_steps: Option<usize>,
    pub phase_steps: Option<usize>,
    pub theta_points: Option<usize>,
}

/// Channel described by a config.
#[derive(Debug, Clone)]
pub enum ChannelModel {
    Discrete(ChannelPair),
    Mimo(MimoChannelModel),
}

fn matrix(rows: &[Vec<Entry>], what: &str) -> Result<CMatrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Malformed(format!("{what} must be a non-empty rectangular matrix")));
    }
    Ok(CMatrix::from_fn(nrows, ncols, |i, j| rows[i][j].value()))
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn kind(&self) -> Result<&str> {
        match (&self.channel.preset, &self.channel.kind) {
            (Some(p), _) => match p.as_str() {
                "bibo" => Ok("discrete"),
                "mimo-two-state" => Ok("mimo"),
                "beam" => Ok("beam"),
                other => Err(Error::Parse(format!("unknown channel preset '{other}'"))),
            },
            (None, Some(k)) if matches!(k.as_str(), "discrete" | "mimo" | "beam") => Ok(k.as_str()),
            (None, Some(k)) => Err(Error::Parse(format!("unknown channel kind '{k}'"))),
            (None, None) => Err(Error::Parse("[channel] needs `preset` or `kind`".into())),
        }
    }

    /// Raw discrete families, with stochasticity checked but not the sensing assumptions.
    pub fn discrete_families(&self) -> Result<(DiscreteChannelFamily, DiscreteChannelFamily)> {
        if self.kind()? != "discrete" {
            return Err(Error::InvalidConfig("channel is not discrete".into()));
        }
        if self.channel.preset.as_deref() == Some("bibo") {
            let pair = presets::bibo_pair();
            return Ok((pair.sensing, pair.comm));
        }
        let sensing = self
            .channel
            .sensing
            .clone()
            .ok_or_else(|| Error::Parse("[channel] discrete needs `sensing`".into()))?;
        let comm = self
            .channel
            .comm
            .clone()
            .ok_or_else(|| Error::Parse("[channel] discrete needs `comm`".into()))?;
        Ok((DiscreteChannelFamily::new(sensing)?, DiscreteChannelFamily::new(comm)?))
    }

    pub fn channel_pair(&self) -> Result<ChannelPair> {
        let (sensing, comm) = self.discrete_families()?;
        sensing.check_absolute_continuity()?;
        sensing.check_distinguishable()?;
        ChannelPair::new(sensing, comm)
    }

    pub fn mimo_model(&self) -> Result<MimoChannelModel> {
        let ch = &self.channel;
        match (self.kind()?, ch.preset.as_deref()) {
            ("mimo", Some(_)) => Ok(presets::mimo_two_state()),
            ("beam", _) => {
                let d = BeamGeometry::default();
                Ok(BeamGeometry {
                    antennas: ch.antennas.unwrap_or(d.antennas),
                    theta_comm: ch.theta_comm.unwrap_or(d.theta_comm),
                    theta_target: ch.theta_target.unwrap_or(d.theta_target),
                    power: ch.power.unwrap_or(d.power),
                }
                .model())
            }
            ("mimo", None) => {
                let sensing = ch
                    .sensing_gains
                    .as_ref()
                    .ok_or_else(|| Error::Parse("[channel] mimo needs `sensing_gains`".into()))?
                    .iter()
                    .map(|m| matrix(m, "sensing gain"))
                    .collect::<Result<Vec<_>>>()?;
                let comm = ch
                    .comm_gains
                    .as_ref()
                    .ok_or_else(|| Error::Parse("[channel] mimo needs `comm_gains`".into()))?
                    .iter()
                    .map(|m| matrix(m, "comm gain"))
                    .collect::<Result<Vec<_>>>()?;
                let base = ch.comm_base.as_ref().map(|m| matrix(m, "comm base gain")).transpose()?;
                let tx = ch.tx_antennas.unwrap_or_else(|| sensing.first().map_or(0, DMatrix::ncols));
                let power = ch.power.ok_or_else(|| Error::Parse("[channel] mimo needs `power`".into()))?;
                MimoChannelModel::new(tx, sensing, comm, base, power)
            }
            _ => Err(Error::InvalidConfig("channel is not a Gaussian model".into())),
        }
    }

    pub fn model(&self) -> Result<ChannelModel> {
        match self.kind()? {
            "discrete" => Ok(ChannelModel::Discrete(self.channel_pair()?)),
            _ => Ok(ChannelModel::Mimo(self.mimo_model()?)),
        }
    }

    pub fn jccs_config(&self) -> Result<JccsConfig> {
        let j = self.jccs.as_ref().ok_or_else(|| Error::Parse("missing [jccs] section".into()))?;
        JccsConfig::from_distributions(j.subblock_len, j.subblocks, j.eta, j.rate_bits, &j.compositions, j.seed)
    }

    pub fn detector_config(&self) -> Result<DetectorConfig> {
        let j = self.jccs.as_ref().ok_or_else(|| Error::Parse("missing [jccs] section".into()))?;
        let d = self.detector.clone().unwrap_or_default();
        match (d.threshold, d.alpha) {
            (Some(b), _) => DetectorConfig::with_threshold(b, j.subblock_len, j.eta),
            (None, Some(a)) => DetectorConfig::from_alpha(a, j.subblock_len, j.eta),
            (None, None) => Err(Error::Parse("[detector] needs `alpha` or `threshold`".into())),
        }
    }

    pub fn experiment_spec(&self) -> Result<ExperimentSpec> {
        let mut spec = ExperimentSpec::new(self.channel_pair()?, self.jccs_config()?, self.detector_config()?);
        if let Some(e) = &self.experiment {
            if let Some(t) = e.trials {
                spec.trials = t;
            }
            if let Some(c) = e.confidence {
                spec.confidence = c;
            }
            if let Some(nu) = &e.nu {
                spec.nu_grid = nu.clone();
            }
            if let Some(s) = &e.post_states {
                spec.post_states = s.clone();
            }
            spec.message_samples = e.message_samples.unwrap_or(DEFAULT_MESSAGE_SAMPLES);
            spec.threads = e.threads;
            spec.adversarial_prefix = e.adversarial_prefix;
        }
        Ok(spec)
    }

    pub fn experiment(&self) -> ExperimentSection {
        self.experiment.clone().unwrap_or_default()
    }

    pub fn pe_method(&self) -> Result<PeMethod> {
        match self.experiment().pe_method.as_deref() {
            None | Some("ensemble") => Ok(PeMethod::Ensemble),
            Some("exhaustive") => Ok(PeMethod::Exhaustive),
            Some(other) => Err(Error::Parse(format!("unknown pe_method '{other}'"))),
        }
    }

    pub fn region(&self) -> RegionSection {
        self.region.clone().unwrap_or_default()
    }

    /// Coupling from `--coupling`, else the config, else all-equal.
    pub fn coupling(&self, states: usize, override_text: Option<&str>) -> Result<Coupling> {
        match override_text.or(self.region().coupling.as_deref()) {
            Some(text) => Coupling::parse(text, states),
            None => Ok(Coupling::all_equal(states)),
        }
    }

    pub fn simplex_steps(&self) -> usize {
        self.region().simplex_steps.unwrap_or(DEFAULT_SIMPLEX_STEPS)
    }

    pub fn mimo_search(&self) -> MimoSearch {
        let r = self.region();
        let d = MimoSearch::default();
        MimoSearch {
            angle_steps: r.angle_steps.unwrap_or(d.angle_steps),
            split_steps: r.split_steps.unwrap_or(d.split_steps),
            phase_steps: r.phase_steps.unwrap_or(d.phase_steps),
        }
    }
}

/// Outcome of one named assumption check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub outcome: std::result::Result<String, Error>,
}

/// Runs every channel check and returns one entry per check; stops at the
/// first structural failure.
pub fn validate(config: &Config) -> Vec<Check> {
    let mut checks = Vec::new();
    let kind = match config.kind() {
        Ok(k) => k,
        Err(e) => {
            checks.push(Check {
                name: "config",
                outcome: Err(e),
            });
            return checks;
        }
    };
    if kind != "discrete" {
        let r = config.mimo_model();
        checks.push(Check {
            name: "gaussian model",
            outcome: r.map(|m| format!("{} post-change states, {} antennas, P = {}", m.post_state_count(), m.tx_antennas(), m.power())),
        });
        return checks;
    }
    let (sensing, comm) = match config.discrete_families() {
        Ok(f) => f,
        Err(e) => {
            checks.push(Check {
                name: "stochasticity",
                outcome: Err(e),
            });
            return checks;
        }
    };
    checks.push(Check {
        name: "stochasticity",
        outcome: Ok(format!(
            "{} states, |X| = {}, |Y| = {}",
            sensing.state_count(),
            sensing.input_count(),
            sensing.output_count()
        )),
    });
    let pair = ChannelPair::new(sensing.clone(), comm);
    checks.push(Check {
        name: "alphabets",
        outcome: pair.map(|_| "sensing and comm agree".into()),
    });
    checks.push(Check {
        name: "distinguishability",
        outcome: sensing.check_distinguishable().map(|_| "every post-change state is distinguishable".into()),
    });
    let ac = sensing.check_absolute_continuity();
    let ac_ok = ac.is_ok();
    checks.push(Check {
        name: "absolute continuity",
        outcome: ac.and_then(|_| sensing.gamma_max_llr()).map(|g| format!("gamma = {g:.6}")),
    });
    if ac_ok {
        checks.push(Check {
            name: "second moment",
            outcome: sensing.second_moment_bound().map(|v| format!("V = {v:.6}")),
        });
    }
    checks
}
