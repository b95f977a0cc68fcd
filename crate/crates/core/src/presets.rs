//! Built-in example channels: the binary Z-channel / three-state echo example
//! and the two Gaussian MIMO examples.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::channel::{steering_vector, CMatrix, ChannelPair, DiscreteChannelFamily, MimoChannelModel};

/// Binary-input binary-output row with crossover probabilities ε₀ (0 → 1) and ε₁ (1 → 0).
pub fn bibo_rows(eps0: f64, eps1: f64) -> Vec<Vec<f64>> {
    vec![vec![1.0 - eps0, eps0], vec![eps1, 1.0 - eps1]]
}

/// Echo channel: base BSC(0.1); state 1 has (ε₀, ε₁) = (0.1, 0.3); state 2 has (0.3, 0.1).
pub fn bibo_sensing() -> DiscreteChannelFamily {
    DiscreteChannelFamily::new_sensing(vec![bibo_rows(0.1, 0.1), bibo_rows(0.1, 0.3), bibo_rows(0.3, 0.1)])
        .expect("built-in echo family is valid")
}

/// State-independent Z-channel with crossover 0.2 (1 → 0), replicated over
/// `states` states including the base.
pub fn z_channel_comm(states: usize) -> DiscreteChannelFamily {
    DiscreteChannelFamily::new(vec![bibo_rows(0.0, 0.2); states]).expect("Z-channel rows are stochastic")
}

pub fn bibo_pair() -> ChannelPair {
    ChannelPair::new(bibo_sensing(), z_channel_comm(3)).expect("matching alphabets")
}

/// Two-state 2x2 example with power budget 10.
pub fn mimo_two_state() -> MimoChannelModel {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h1 = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
    let c1 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, -1.0]);
    let h2 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
    let c2 = DMatrix::from_row_slice(2, 2, &[s, s, 1.0, 0.0]);
    MimoChannelModel::from_real(2, &[h1, h2], &[c1, c2], 10.0).expect("built-in MIMO example is valid")
}

/// Geometry of the single post-state beamforming example.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamGeometry {
    pub antennas: usize,
    pub theta_comm: f64,
    pub theta_target: f64,
    pub power: f64,
}

impl Default for BeamGeometry {
    fn default() -> Self {
        Self {
            antennas: 2,
            theta_comm: std::f64::consts::FRAC_PI_2,
            theta_target: 0.0,
            power: 10.0,
        }
    }
}

impl BeamGeometry {
    /// Echo gain a_r(θ₁) a_t(θ₁)ᴴ and comm gain a_t(θ_c)ᴴ.
    pub fn model(&self) -> MimoChannelModel {
        let a_t = steering_vector(self.antennas, self.theta_target);
        let a_r = a_t.clone();
        let h1: CMatrix = &a_r * a_t.adjoint();
        let a_c = steering_vector(self.antennas, self.theta_comm).adjoint();
        let comm = CMatrix::from_row_slice(1, self.antennas, a_c.as_slice());
        MimoChannelModel::new(self.antennas, vec![h1], vec![comm.clone()], Some(comm), self.power)
            .expect("steering geometry is valid")
    }
}

/// Scalar Gaussian model with per-state gains, used for the single-antenna reduction.
pub fn scalar_gaussian(sensing: &[f64], comm: &[f64], power: f64) -> MimoChannelModel {
    let lift = |v: f64| CMatrix::from_element(1, 1, Complex64::new(v, 0.0));
    MimoChannelModel::new(
        1,
        sensing.iter().map(|&v| lift(v)).collect(),
        comm.iter().map(|&v| lift(v)).collect(),
        None,
        power,
    )
    .expect("scalar model is valid")
}
