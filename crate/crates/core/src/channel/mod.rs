//! State-dependent channel models and the information measures built on them.

mod discrete;
pub mod info;
mod mimo;
mod state;

pub use discrete::{ChannelPair, DiscreteChannelFamily};
pub use info::{binary_entropy, bits_to_nats, kl_divergence, nats_to_bits};
pub use mimo::{steering_vector, CMatrix, CVector, MimoChannelModel};
pub use state::StatePath;
