//! Rayleigh block fading.
//!
//! Channel coefficients are zero-mean circularly symmetric complex Gaussian
//! with unit total variance, so the power gain `|h|^2` is exponential with
//! unit mean. Gains stay constant within a slot and are independent across
//! slots, relays and the two links.
//!
//! # Generator
//!
//! Tables are reproducible from `(seed, slots, relays)`:
//!
//! * relay `k` (0-based) reads ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//!   `seed_from_u64(seed)` on stream `k`;
//! * each slot consumes two `u64` words in order, first for the S-R link, then
//!   for the R-D link;
//! * a word `x` maps to `u = (x >> 11) * 2^-53` in `[0, 1)` and then to the gain
//!   `-ln(1 - u)` (inverse CDF).
//!
//! Because each relay owns a stream and slots are drawn in order, the table
//! for `(slots', relays')` is the top-left corner of any larger table with the
//! same seed. Sweeps over `K` or `N` rely on that for common random numbers.

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{non_negative, Error, Result};
use crate::math;

/// AWGN noise power in watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    sigma2: f64,
}

impl NoiseModel {
    pub fn new(sigma2: f64) -> Result<Self> {
        if sigma2 > 0.0 && sigma2.is_finite() {
            Ok(Self { sigma2 })
        } else {
            Err(Error::Domain { what: "noise power", value: sigma2 })
        }
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self { sigma2: 0.1 }
    }
}

/// Per-slot, per-relay power gains of the S-R and R-D links.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkGainTable {
    seed: u64,
    slots: usize,
    relays: usize,
    // row-major, index = slot * relays + relay
    gains_sr: Vec<f64>,
    gains_rd: Vec<f64>,
}

/// One relay's gains in one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainPair {
    pub sr: f64,
    pub rd: f64,
}

impl LinkGainTable {
    /// Builds a table from explicit gains (e.g. an imported fixture).
    ///
    /// `gains_sr[n][k]` and `gains_rd[n][k]` are flattened row-major.
    pub fn from_parts(
        seed: u64,
        slots: usize,
        relays: usize,
        gains_sr: Vec<f64>,
        gains_rd: Vec<f64>,
    ) -> Result<Self> {
        check_dims(slots, relays)?;
        if gains_sr.len() != slots * relays || gains_rd.len() != slots * relays {
            return Err(Error::Invalid("gain vectors do not match the table shape"));
        }
        for &g in gains_sr.iter().chain(gains_rd.iter()) {
            non_negative("channel gain", g)?;
        }
        Ok(Self { seed, slots, relays, gains_sr, gains_rd })
    }

    /// A table with every gain equal to zero.
    pub fn zeros(slots: usize, relays: usize) -> Result<Self> {
        check_dims(slots, relays)?;
        let n = slots * relays;
        Ok(Self { seed: 0, slots, relays, gains_sr: alloc::vec![0.0; n], gains_rd: alloc::vec![0.0; n] })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn relays(&self) -> usize {
        self.relays
    }

    /// Gains for `slot` and `relay`, both 0-based.
    pub fn gain(&self, slot: usize, relay: usize) -> GainPair {
        let i = slot * self.relays + relay;
        GainPair { sr: self.gains_sr[i], rd: self.gains_rd[i] }
    }

    /// All relays' gains in one slot.
    pub fn slot(&self, slot: usize) -> Vec<GainPair> {
        (0..self.relays).map(|k| self.gain(slot, k)).collect()
    }

    pub fn gains_sr(&self) -> &[f64] {
        &self.gains_sr
    }

    pub fn gains_rd(&self) -> &[f64] {
        &self.gains_rd
    }

    /// Multiplies every gain by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.gains_sr.iter_mut().chain(out.gains_rd.iter_mut()).for_each(|g| *g *= factor);
        out
    }

    /// Top-left `slots x relays` corner.
    pub fn truncated(&self, slots: usize, relays: usize) -> Result<Self> {
        check_dims(slots, relays)?;
        if slots > self.slots || relays > self.relays {
            return Err(Error::Invalid("truncation larger than the table"));
        }
        let mut sr = Vec::with_capacity(slots * relays);
        let mut rd = Vec::with_capacity(slots * relays);
        for n in 0..slots {
            for k in 0..relays {
                let g = self.gain(n, k);
                sr.push(g.sr);
                rd.push(g.rd);
            }
        }
        Ok(Self { seed: self.seed, slots, relays, gains_sr: sr, gains_rd: rd })
    }
}

fn check_dims(slots: usize, relays: usize) -> Result<()> {
    if slots == 0 {
        return Err(Error::Dimension { what: "slot count" });
    }
    if relays == 0 {
        return Err(Error::Dimension { what: "relay count" });
    }
    Ok(())
}

/// Maps a raw 64-bit word onto `[0, 1)` with 53 bits of precision.
pub fn unit_uniform(word: u64) -> f64 {
    (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Unit-mean exponential variate by inversion.
pub fn unit_exponential(word: u64) -> f64 {
    -math::ln(1.0 - unit_uniform(word))
}

/// Samples an i.i.d. unit-mean exponential gain table. See the module docs
/// for the exact generator.
pub fn sample_gain_table(seed: u64, slots: usize, relays: usize) -> Result<LinkGainTable> {
    check_dims(slots, relays)?;
    let mut sr = alloc::vec![0.0; slots * relays];
    let mut rd = alloc::vec![0.0; slots * relays];
    for k in 0..relays {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        for n in 0..slots {
            sr[n * relays + k] = unit_exponential(rng.next_u64());
            rd[n * relays + k] = unit_exponential(rng.next_u64());
        }
    }
    Ok(LinkGainTable { seed, slots, relays, gains_sr: sr, gains_rd: rd })
}

/// Received SNR `power * gain / sigma^2`.
pub fn snr(power: f64, gain: f64, noise: NoiseModel) -> Result<f64> {
    non_negative("transmit power", power)?;
    non_negative("channel gain", gain)?;
    Ok(snr_unchecked(power, gain, noise))
}

pub(crate) fn snr_unchecked(power: f64, gain: f64, noise: NoiseModel) -> f64 {
    power * gain / noise.sigma2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_for_equal_seed() {
        let a = sample_gain_table(7, 5, 5).unwrap();
        let b = sample_gain_table(7, 5, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.gains_sr().len(), 25);
        assert_ne!(a, sample_gain_table(8, 5, 5).unwrap());
    }

    #[test]
    fn single_entry_is_non_negative() {
        let t = sample_gain_table(7, 1, 1).unwrap();
        let g = t.gain(0, 0);
        assert!(g.sr >= 0.0 && g.rd >= 0.0);
    }

    #[test]
    fn zero_dimensions_rejected() {
        assert_eq!(sample_gain_table(1, 0, 3), Err(Error::Dimension { what: "slot count" }));
        assert_eq!(sample_gain_table(1, 3, 0), Err(Error::Dimension { what: "relay count" }));
    }

    #[test]
    fn smaller_table_is_a_corner_of_larger() {
        let big = sample_gain_table(11, 8, 6).unwrap();
        let small = sample_gain_table(11, 3, 2).unwrap();
        assert_eq!(big.truncated(3, 2).unwrap(), small);
    }

    #[test]
    fn empirical_moments_match_unit_exponential() {
        // Closed form: mean 1, P(g > 1) = e^-1.
        let t = sample_gain_table(2024, 10_000, 1).unwrap();
        let all: Vec<f64> = t.gains_sr().iter().chain(t.gains_rd()).copied().collect();
        let mean = all.iter().sum::<f64>() / all.len() as f64;
        assert!((0.95..=1.05).contains(&mean), "mean {mean}");
        let tail = all.iter().filter(|&&g| g > 1.0).count() as f64 / all.len() as f64;
        let e_inv = libm::exp(-1.0);
        assert!((tail - e_inv).abs() <= 0.03, "tail {tail}");
        let sr_mean = t.gains_sr().iter().sum::<f64>() / 10_000.0;
        assert!((0.95..=1.05).contains(&sr_mean));
    }

    #[test]
    fn uniform_mapping_endpoints() {
        assert_eq!(unit_uniform(0), 0.0);
        assert!(unit_uniform(u64::MAX) < 1.0);
        assert_eq!(unit_exponential(0), 0.0);
        assert!(unit_exponential(u64::MAX).is_finite());
    }

    #[test]
    fn snr_examples() {
        let noise = NoiseModel::new(0.1).unwrap();
        assert!((snr(0.1, 1.0, noise).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(snr(0.0, 5.0, noise).unwrap(), 0.0);
        assert!((snr(0.2, 2.0, noise).unwrap() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn snr_rejects_negative_inputs() {
        let noise = NoiseModel::default();
        assert!(matches!(snr(-1.0, 1.0, noise), Err(Error::Domain { .. })));
        assert!(matches!(snr(1.0, -1.0, noise), Err(Error::Domain { .. })));
        assert!(NoiseModel::new(0.0).is_err());
    }

    #[test]
    fn from_parts_validates() {
        assert!(LinkGainTable::from_parts(0, 1, 2, alloc::vec![1.0, 2.0], alloc::vec![0.5, 0.1]).is_ok());
        assert!(LinkGainTable::from_parts(0, 1, 2, alloc::vec![1.0], alloc::vec![0.5, 0.1]).is_err());
        assert!(LinkGainTable::from_parts(0, 1, 1, alloc::vec![-1.0], alloc::vec![0.5]).is_err());
    }
}
