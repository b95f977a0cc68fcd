//! Joint constant-composition coding with interleaved pilots.

mod codebook;
mod composition;
mod config;
mod decoder;
mod encoder;
mod entropy;
mod estimator;

pub use codebook::{generate_codebook, Codeword, SubblockCodebook, DEFAULT_SYMBOL_BUDGET};
pub use composition::{make_composition, Composition};
pub use config::JccsConfig;
pub use decoder::{decode, ensemble_error_probability, error_given_competitor_law, EXHAUSTIVE_LIMIT};
pub use encoder::{Emission, Encoder};
pub use entropy::{entropy_rate_estimate, EstimateTrace};
pub use estimator::{estimate_state, PilotWindow};
