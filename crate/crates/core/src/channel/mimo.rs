use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Vector Gaussian echo and communication channels with identity noise.
///
/// Echo: Y = Z before the change and H_s x + Z after it. Communication:
/// Ỹ = H̃_s x + Z̃, with an optional base-state gain H̃_0. Gains are stored
/// complex; real matrices are embedded with zero imaginary part.
#[derive(Debug, Clone, PartialEq)]
pub struct MimoChannelModel {
    tx_antennas: usize,
    sensing_gains: Vec<CMatrix>,
    comm_gains: Vec<CMatrix>,
    comm_base: Option<CMatrix>,
    power: f64,
}

impl MimoChannelModel {
    /// `sensing_gains[s - 1]` and `comm_gains[s - 1]` belong to post-change state s.
    pub fn new(
        tx_antennas: usize,
        sensing_gains: Vec<CMatrix>,
        comm_gains: Vec<CMatrix>,
        comm_base: Option<CMatrix>,
        power: f64,
    ) -> Result<Self> {
        if tx_antennas == 0 {
            return Err(Error::Malformed("need at least one transmit antenna".into()));
        }
        if sensing_gains.is_empty() || sensing_gains.len() != comm_gains.len() {
            return Err(Error::Malformed(format!(
                "{} sensing gains vs {} comm gains",
                sensing_gains.len(),
                comm_gains.len()
            )));
        }
        if !(power.is_finite() && power > 0.0) {
            return Err(Error::Malformed(format!("power budget {power}")));
        }
        let all = sensing_gains.iter().chain(&comm_gains).chain(comm_base.iter());
        for (i, h) in all.enumerate() {
            if h.ncols() != tx_antennas {
                return Err(Error::Malformed(format!(
                    "gain matrix {i} has {} columns, expected {tx_antennas}",
                    h.ncols()
                )));
            }
            if h.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
                return Err(Error::Malformed(format!("gain matrix {i} has non-finite entries")));
            }
        }
        let rows = sensing_gains[0].nrows();
        if sensing_gains.iter().any(|h| h.nrows() != rows) {
            return Err(Error::Malformed("sensing gains must share the receive dimension".into()));
        }
        Ok(Self {
            tx_antennas,
            sensing_gains,
            comm_gains,
            comm_base,
            power,
        })
    }

    /// Builds a model from real gain matrices.
    pub fn from_real(
        tx_antennas: usize,
        sensing: &[DMatrix<f64>],
        comm: &[DMatrix<f64>],
        power: f64,
    ) -> Result<Self> {
        let lift = |m: &DMatrix<f64>| m.map(|v| Complex64::new(v, 0.0));
        Self::new(
            tx_antennas,
            sensing.iter().map(lift).collect(),
            comm.iter().map(lift).collect(),
            None,
            power,
        )
    }

    pub fn tx_antennas(&self) -> usize {
        self.tx_antennas
    }

    pub fn post_state_count(&self) -> usize {
        self.sensing_gains.len()
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn sensing_gain(&self, s: usize) -> &CMatrix {
        &self.sensing_gains[s - 1]
    }

    pub fn comm_gain(&self, s: usize) -> &CMatrix {
        &self.comm_gains[s - 1]
    }

    /// Γ_s = H_sᴴ H_s.
    pub fn gram(&self, s: usize) -> CMatrix {
        let h = self.sensing_gain(s);
        h.adjoint() * h
    }

    /// True when every gain has zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.sensing_gains
            .iter()
            .chain(&self.comm_gains)
            .chain(self.comm_base.iter())
            .all(|h| h.iter().all(|c| c.im == 0.0))
    }

    /// Draws (Y, Ỹ) for transmit vector x under state s (0 = base).
    ///
    /// Noise is circularly symmetric with unit total covariance per
    /// component: real and imaginary parts are independent N(0, 1/2).
    pub fn sample_outputs<R: Rng + ?Sized>(
        &self,
        x: &CVector,
        s: usize,
        rng: &mut R,
    ) -> Result<(CVector, CVector)> {
        if x.len() != self.tx_antennas {
            return Err(Error::IndexOutOfRange(format!("input of length {}", x.len())));
        }
        if s > self.post_state_count() {
            return Err(Error::StateOutOfRange(s));
        }
        let echo_rows = self.sensing_gains[0].nrows();
        let echo_signal = if s == 0 {
            CVector::zeros(echo_rows)
        } else {
            self.sensing_gain(s) * x
        };
        let comm_h = if s == 0 {
            self.comm_base
                .as_ref()
                .ok_or_else(|| Error::InvalidConfig("base-state comm gain is not configured".into()))?
        } else {
            self.comm_gain(s)
        };
        let comm_signal = comm_h * x;
        Ok((add_noise(echo_signal, rng), add_noise(comm_signal, rng)))
    }
}

fn add_noise<R: Rng + ?Sized>(mut v: CVector, rng: &mut R) -> CVector {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    for c in v.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *c += Complex64::new(scale * re, scale * im);
    }
    v
}

/// ULA steering vector with half-wavelength spacing: entry m is exp(jπ m sin θ).
pub fn steering_vector(antennas: usize, theta: f64) -> CVector {
    let phase = std::f64::consts::PI * theta.sin();
    CVector::from_iterator(antennas, (0..antennas).map(|m| Complex64::from_polar(1.0, phase * m as f64)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rngs::stream;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn steering_vector_values() {
        let a = steering_vector(2, 0.0);
        assert_eq!(a[0], Complex64::new(1.0, 0.0));
        assert_eq!(a[1], Complex64::new(1.0, 0.0));
        let b = steering_vector(2, FRAC_PI_2);
        assert!((b[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((b[1] - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        let c = steering_vector(1, 0.7);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn construction_checks_columns() {
        let h = DMatrix::<f64>::identity(2, 2);
        let bad = DMatrix::<f64>::identity(2, 3);
        assert!(MimoChannelModel::from_real(2, &[h.clone()], &[h.clone()], 10.0).is_ok());
        assert!(MimoChannelModel::from_real(2, &[bad], &[h.clone()], 10.0).is_err());
        assert!(MimoChannelModel::from_real(2, &[h.clone()], &[h], -1.0).is_err());
    }

    #[test]
    fn noise_has_unit_covariance() {
        let h = DMatrix::<f64>::zeros(1, 1);
        let mut m = MimoChannelModel::from_real(1, &[h.clone()], &[h.clone()], 1.0).unwrap();
        m.comm_base = Some(CMatrix::zeros(1, 1));
        let mut rng = stream(5, &[]);
        let x = CVector::zeros(1);
        let n = 200_000;
        let (mut re2, mut im2, mut cross) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let (y, _) = m.sample_outputs(&x, 0, &mut rng).unwrap();
            re2 += y[0].re * y[0].re;
            im2 += y[0].im * y[0].im;
            cross += y[0].re * y[0].im;
        }
        let n = n as f64;
        assert!(((re2 + im2) / n - 1.0).abs() < 0.01);
        assert!((re2 / n - 0.5).abs() < 0.01);
        assert!((cross / n).abs() < 0.01);
    }

    #[test]
    fn base_comm_requires_gain() {
        let h = DMatrix::<f64>::identity(1, 1);
        let m = MimoChannelModel::from_real(1, &[h.clone()], &[h], 1.0).unwrap();
        let mut rng = stream(1, &[]);
        assert!(m.sample_outputs(&CVector::zeros(1), 0, &mut rng).is_err());
        assert!(m.sample_outputs(&CVector::zeros(1), 1, &mut rng).is_ok());
    }
}
