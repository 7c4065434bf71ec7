//! Rayleigh channel generation and the spatial-multiplexing signal model
//! `y = (1/sqrt(M_T)) H_phy s + rho n`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::numerics::{ComplexMat, ComplexVec};

/// One channel draw: the raw matrix, the effective matrix including the
/// `1/sqrt(M_T)` transmit power normalization, and the noise level.
///
/// `rho` is the standard deviation of the complex noise term `rho * n`,
/// where `n` has i.i.d. unit-variance circularly-symmetric entries.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    h_phy: ComplexMat,
    h_eff: ComplexMat,
    rho: f64,
}

impl ChannelRealization {
    pub fn new(h_phy: ComplexMat, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidConfig(format!("rho must be positive and finite, got {rho}")));
        }
        if !h_phy.is_finite() {
            return Err(Error::InvalidConfig("channel matrix has non-finite entries".into()));
        }
        let m_t = h_phy.cols();
        let h_eff = h_phy.scale(1.0 / (m_t as f64).sqrt());
        Ok(Self { h_phy, h_eff, rho })
    }

    pub fn h_phy(&self) -> &ComplexMat {
        &self.h_phy
    }

    pub fn h_eff(&self) -> &ComplexMat {
        &self.h_eff
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Number of spatial streams (transmit antennas).
    pub fn num_streams(&self) -> usize {
        self.h_eff.cols()
    }

    pub fn num_rx(&self) -> usize {
        self.h_eff.rows()
    }
}

/// One circularly-symmetric complex Gaussian draw with unit variance
/// (real and imaginary parts each of variance 1/2). Real part first.
#[inline]
pub fn complex_gaussian<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draws an `m_r x m_t` matrix with i.i.d. CN(0, 1) entries
/// (Rayleigh-magnitude fading), row-major draw order.
pub fn rayleigh_channel<R: Rng>(m_r: usize, m_t: usize, rng: &mut R) -> ComplexMat {
    assert!(m_r >= m_t && m_t >= 1, "need m_r >= m_t >= 1");
    let data = (0..m_r * m_t).map(|_| complex_gaussian(rng)).collect();
    ComplexMat::new(m_r, m_t, data)
}

/// `y = h_eff s + rho n`, writing into `out`. Noise is drawn per receive
/// antenna after the symbol vector has been applied.
pub fn transmit_into<R: Rng>(
    ch: &ChannelRealization,
    s: &[Complex64],
    rng: &mut R,
    out: &mut ComplexVec,
) -> Result<()> {
    if s.len() != ch.num_streams() {
        return Err(Error::DimensionMismatch { expected: ch.num_streams(), got: s.len() });
    }
    out.clear();
    out.extend_from_slice(&ch.h_eff.mul_vec(s));
    for y in out.iter_mut() {
        *y += ch.rho * complex_gaussian(rng);
    }
    Ok(())
}

/// Allocating variant of [`transmit_into`].
pub fn transmit<R: Rng>(
    ch: &ChannelRealization,
    s: &[Complex64],
    rng: &mut R,
) -> Result<ComplexVec> {
    let mut out = Vec::with_capacity(ch.num_rx());
    transmit_into(ch, s, rng, &mut out)?;
    Ok(out)
}

/// Convenience conversion from a target average antenna SNR to a noise
/// level.
///
/// With unit-power transmission and CN(0,1) fading, the mean receive power
/// per antenna is 1, so the average antenna SNR is `1/rho^2` and
/// `rho = 10^(-snr_db/20)`. This is a convention of this crate, not a
/// property of any single channel draw.
pub fn rho_from_avg_antenna_snr_db(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 20.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulation::{random_symbol_vector, Constellation, ModulationKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rayleigh_unit_power_and_zero_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 100_000usize;
        let mut sum = Complex64::ZERO;
        let mut sum_p = 0.0;
        for _ in 0..n {
            let h = rayleigh_channel(1, 1, &mut rng);
            sum += h.get(0, 0);
            sum_p += h.get(0, 0).norm_sqr();
        }
        let mean_p = sum_p / n as f64;
        assert!((mean_p - 1.0).abs() < 0.01, "mean |h|^2 = {mean_p}");
        // Each real component has variance 1/2; 4-sigma band for the mean.
        let four_sigma = 4.0 * (0.5 / n as f64).sqrt();
        assert!((sum.re / n as f64).abs() < four_sigma);
        assert!((sum.im / n as f64).abs() < four_sigma);
    }

    #[test]
    fn rayleigh_seed_reproducibility() {
        let a = rayleigh_channel(2, 2, &mut ChaCha8Rng::seed_from_u64(5));
        let b = rayleigh_channel(2, 2, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a.data(), b.data());
    }

    #[test]
    fn transmit_noiseless_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let h = rayleigh_channel(2, 2, &mut rng);
        let ch = ChannelRealization::new(h, 1e-300).unwrap();
        let c = Constellation::new(ModulationKind::Qpsk);
        let s = random_symbol_vector(&c, 2, &mut rng);
        let y = transmit(&ch, &s, &mut rng).unwrap();
        let clean = ch.h_eff().mul_vec(&s);
        for (a, b) in y.iter().zip(clean.iter()) {
            assert!((a - b).norm() < 1e-200);
        }
    }

    #[test]
    fn transmit_noise_variance_and_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rho = 0.4;
        let ch = ChannelRealization::new(ComplexMat::identity(2), rho).unwrap();
        let c = Constellation::new(ModulationKind::Qpsk);
        let s = random_symbol_vector(&c, 2, &mut rng);
        let clean = ch.h_eff().mul_vec(&s);

        let n = 100_000usize;
        let mut sum = [Complex64::ZERO; 2];
        let mut var = [0.0f64; 2];
        let mut y = Vec::new();
        for _ in 0..n {
            transmit_into(&ch, &s, &mut rng, &mut y).unwrap();
            for k in 0..2 {
                let d = y[k] - clean[k];
                sum[k] += d;
                var[k] += d.norm_sqr();
            }
        }
        for k in 0..2 {
            let v = var[k] / n as f64;
            assert!((v - rho * rho).abs() < 0.02 * rho * rho, "var(y_{k}) = {v}");
            // Residual mean: complex variance rho^2 means each part has
            // variance rho^2/2.
            let four_sigma = 4.0 * (rho * rho / 2.0 / n as f64).sqrt();
            assert!((sum[k].re / n as f64).abs() < four_sigma);
            assert!((sum[k].im / n as f64).abs() < four_sigma);
        }
    }

    #[test]
    fn transmit_dimension_mismatch() {
        let ch = ChannelRealization::new(ComplexMat::identity(2), 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let err = transmit(&ch, &[Complex64::ONE], &mut rng);
        assert!(matches!(err, Err(Error::DimensionMismatch { expected: 2, got: 1 })));
    }

    #[test]
    fn effective_channel_power_normalization() {
        // E||h_eff s||^2 over random unit-power symbols should equal
        // ||h_phy||_F^2 / m_t.
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h = rayleigh_channel(2, 2, &mut rng);
        let expect = h.frobenius_norm_sqr() / 2.0;
        let ch = ChannelRealization::new(h, 1.0).unwrap();
        let c = Constellation::new(ModulationKind::Qam16);
        let n = 200_000usize;
        let mut acc = 0.0;
        for _ in 0..n {
            let s = random_symbol_vector(&c, 2, &mut rng);
            acc += ch.h_eff().mul_vec(&s).iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
        let got = acc / n as f64;
        assert!((got - expect).abs() < 0.01 * expect, "got {got}, expected {expect}");
    }

    #[test]
    fn snr_db_to_rho() {
        assert!((rho_from_avg_antenna_snr_db(0.0) - 1.0).abs() < 1e-15);
        assert!((rho_from_avg_antenna_snr_db(20.0) - 0.1).abs() < 1e-15);
        let rho = rho_from_avg_antenna_snr_db(10.0);
        assert!((1.0 / (rho * rho) - 10.0).abs() < 1e-12);
    }
}
