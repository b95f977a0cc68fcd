//! Joint communication and quickest change detection over state-dependent channels.

pub mod channel;
pub mod codec;
pub mod config;
pub mod error;
pub mod presets;
pub mod rngs;
pub mod stats;
pub mod detector;
pub mod montecarlo;
pub mod region;

pub use error::{Error, Result};
