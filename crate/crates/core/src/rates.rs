//! Rate and energy formulas.
//!
//! All rates are in bits per channel use, normalized to a unit slot. A link
//! active for a fraction `d` of the slot at SNR `x` carries `d * log2(1 + x)`.

use crate::error::{non_negative, unit_interval, Result};
use crate::fading::{snr_unchecked, NoiseModel};
use crate::math::log2_1p;

/// Time-switching split of a unit slot: harvest, multiple access, broadcast.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubslotPartition {
    alpha: f64,
    tau: f64,
}

impl SubslotPartition {
    /// `alpha` goes to harvesting, the rest is split evenly between the
    /// multiple-access and broadcast subslots.
    pub fn new(alpha: f64) -> Result<Self> {
        unit_interval("time-switching fraction", alpha)?;
        Ok(Self { alpha, tau: (1.0 - alpha) / 2.0 })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn tau_ma(&self) -> f64 {
        self.tau
    }

    pub fn tau_bc(&self) -> f64 {
        self.tau
    }
}

/// Rates for both directions: `ab` is S -> D, `ba` is D -> S.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RatePair {
    pub r_ab: f64,
    pub r_ba: f64,
}

impl RatePair {
    pub fn sum(&self) -> f64 {
        self.r_ab + self.r_ba
    }
}

/// `duration * log2(1 + snr)`.
pub fn link_rate(snr: f64, duration: f64) -> Result<f64> {
    non_negative("snr", snr)?;
    unit_interval("subslot duration", duration)?;
    Ok(duration * log2_1p(snr))
}

/// Half-duplex DF over two hops in two equal slots, instantaneous form.
pub fn df_one_way_capacity(snr_sr: f64, snr_rd: f64) -> Result<f64> {
    non_negative("snr", snr_sr)?;
    non_negative("snr", snr_rd)?;
    Ok(0.5 * log2_1p(snr_sr).min(log2_1p(snr_rd)))
}

/// Half-duplex AF with the usual end-to-end SNR `g1 g2 / (g1 + g2 + 1)`.
pub fn af_one_way_capacity(snr_1: f64, snr_2: f64) -> Result<f64> {
    non_negative("snr", snr_1)?;
    non_negative("snr", snr_2)?;
    let end_to_end = snr_1 * snr_2 / (snr_1 + snr_2 + 1.0);
    Ok(0.5 * log2_1p(end_to_end))
}

/// Energy (J) collected by the relay in the harvest subslot.
pub fn harvested_energy(
    partition: SubslotPartition,
    p_s: f64,
    p_d: f64,
    g_sr: f64,
    g_rd: f64,
    eta: f64,
) -> Result<f64> {
    for (what, v) in [("source power", p_s), ("destination power", p_d), ("channel gain", g_sr), ("channel gain", g_rd)] {
        non_negative(what, v)?;
    }
    unit_interval("conversion efficiency", eta)?;
    Ok(harvest_unchecked(partition.alpha, p_s, p_d, g_sr, g_rd, eta))
}

pub(crate) fn harvest_unchecked(alpha: f64, p_s: f64, p_d: f64, g_sr: f64, g_rd: f64, eta: f64) -> f64 {
    eta * alpha * (p_s * g_sr + p_d * g_rd)
}

/// Rates of one three-subslot exchange through one relay.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TwoWayRates {
    /// Bits received by the relay in the multiple-access subslot.
    pub arrivals: RatePair,
    /// Bits each endpoint can decode from the broadcast subslot.
    pub deliverable: RatePair,
}

/// Transmit powers of one exchange (watts).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Powers {
    pub p_s: f64,
    pub p_d: f64,
    pub p_r: f64,
}

/// Multiple-access arrivals followed by a network-coded broadcast.
///
/// Arrivals: each endpoint at its own single-user rate. With
/// `mac_sum_constraint` both are scaled down by the same factor until they
/// fit under the sum-rate bound `tau * log2(1 + (p_s g_sr + p_d g_rd)/sigma^2)`.
///
/// Broadcast: one power `p_r`; after self-interference cancellation D decodes
/// S's data over the R-D link and S decodes D's data over the S-R link.
pub fn twoway_three_subslot_rates(
    partition: SubslotPartition,
    powers: Powers,
    g_sr: f64,
    g_rd: f64,
    noise: NoiseModel,
    mac_sum_constraint: bool,
) -> Result<TwoWayRates> {
    for v in [powers.p_s, powers.p_d, powers.p_r] {
        non_negative("transmit power", v)?;
    }
    non_negative("channel gain", g_sr)?;
    non_negative("channel gain", g_rd)?;
    Ok(twoway_unchecked(partition.tau, powers, g_sr, g_rd, noise, mac_sum_constraint))
}

pub(crate) fn mac_arrivals(tau: f64, p_s: f64, p_d: f64, g_sr: f64, g_rd: f64, noise: NoiseModel, mac_sum: bool) -> RatePair {
    let rx_s = snr_unchecked(p_s, g_sr, noise);
    let rx_d = snr_unchecked(p_d, g_rd, noise);
    let mut arrivals = RatePair { r_ab: tau * log2_1p(rx_s), r_ba: tau * log2_1p(rx_d) };
    if mac_sum {
        let cap = tau * log2_1p(rx_s + rx_d);
        let total = arrivals.sum();
        if total > cap {
            let scale = cap / total;
            arrivals.r_ab *= scale;
            arrivals.r_ba *= scale;
        }
    }
    arrivals
}

pub(crate) fn broadcast_rates(tau: f64, p_r: f64, g_sr: f64, g_rd: f64, noise: NoiseModel) -> RatePair {
    RatePair {
        r_ab: tau * log2_1p(snr_unchecked(p_r, g_rd, noise)),
        r_ba: tau * log2_1p(snr_unchecked(p_r, g_sr, noise)),
    }
}

pub(crate) fn twoway_unchecked(
    tau: f64,
    powers: Powers,
    g_sr: f64,
    g_rd: f64,
    noise: NoiseModel,
    mac_sum: bool,
) -> TwoWayRates {
    TwoWayRates {
        arrivals: mac_arrivals(tau, powers.p_s, powers.p_d, g_sr, g_rd, noise, mac_sum),
        deliverable: broadcast_rates(tau, powers.p_r, g_sr, g_rd, noise),
    }
}

/// Both directions through a DF relay with network coding in two slots.
pub fn two_slot_twrn_sum_rate(snr_sr: f64, snr_rd: f64) -> Result<f64> {
    Ok(2.0 * df_one_way_capacity(snr_sr, snr_rd)?)
}

/// Per-slot average of a four-slot one-way exchange: each direction holds the
/// channel for two of the four slots.
pub fn four_slot_one_way_sum_rate(snr_sr: f64, snr_rd: f64) -> Result<f64> {
    let per_direction = 0.5 * df_one_way_capacity(snr_sr, snr_rd)?;
    Ok(2.0 * per_direction)
}
