use core::str::FromStr;

use alloc::string::ToString;
use alloc::vec::Vec;

use super::{run_episode_with_table, SimConfig};
use crate::error::{Error, Result};
use crate::fading::sample_gain_table;
use crate::math::sqrt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    BufferCapacity,
    BatteryCapacity,
    PMax,
    Relays,
    Slots,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::BufferCapacity => "B_max",
            SweepParam::BatteryCapacity => "E_max",
            SweepParam::PMax => "p_max",
            SweepParam::Relays => "K",
            SweepParam::Slots => "N",
        }
    }

    /// `cfg` with this parameter set to `value`.
    pub fn apply(&self, cfg: &SimConfig, value: f64) -> Result<SimConfig> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::Domain { what: self.name(), value });
        }
        let count = || {
            if libm::trunc(value) == value {
                Ok(value as usize)
            } else {
                Err(Error::Domain { what: self.name(), value })
            }
        };
        let mut out = cfg.clone();
        match self {
            SweepParam::BufferCapacity => out.buffer_capacity = value,
            SweepParam::BatteryCapacity => out.battery_capacity = value,
            SweepParam::PMax => out.p_max = value,
            SweepParam::Relays => out.relays = count()?,
            SweepParam::Slots => out.slots = count()?,
        }
        Ok(out)
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "B_max" | "b_max" | "buffer_capacity" => Ok(SweepParam::BufferCapacity),
            "E_max" | "e_max" | "battery_capacity" => Ok(SweepParam::BatteryCapacity),
            "p_max" | "P_max" => Ok(SweepParam::PMax),
            "K" | "relays" => Ok(SweepParam::Relays),
            "N" | "slots" => Ok(SweepParam::Slots),
            other => Err(Error::UnknownName { kind: "sweep parameter", name: other.to_string() }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param: SweepParam,
    pub value: f64,
    pub mean: f64,
    pub stderr: f64,
    pub episodes: usize,
}

/// Mean sum-throughput per value over `episodes` episodes.
///
/// Episode `e` uses seed `cfg.seed + e` at every value. Tables are drawn at the
/// largest `N` and `K` in the sweep and cut down, so all points see the same
/// channel realizations.
pub fn sweep(cfg: &SimConfig, param: SweepParam, values: &[f64], episodes: usize) -> Result<Vec<SweepRow>> {
    if episodes == 0 {
        return Err(Error::Dimension { what: "episode count" });
    }
    let configs = values.iter().map(|&v| param.apply(cfg, v)).collect::<Result<Vec<_>>>()?;
    let max_slots = configs.iter().map(|c| c.slots).max().unwrap_or(cfg.slots);
    let max_relays = configs.iter().map(|c| c.relays).max().unwrap_or(cfg.relays);

    let mut sums = alloc::vec![Vec::with_capacity(episodes); configs.len()];
    for e in 0..episodes {
        let seed = cfg.episode_seed(e);
        let table = if max_slots > 0 { Some(sample_gain_table(seed, max_slots, max_relays)?) } else { None };
        for (c, acc) in configs.iter().zip(sums.iter_mut()) {
            let episode_cfg = SimConfig { seed, ..c.clone() };
            let throughput = match &table {
                Some(t) if c.slots > 0 => run_episode_with_table(&episode_cfg, &t.truncated(c.slots, c.relays)?)?.sum_throughput,
                _ => 0.0,
            };
            acc.push(throughput);
        }
    }

    Ok(values
        .iter()
        .zip(sums)
        .map(|(&value, xs)| {
            let (mean, stderr) = mean_and_stderr(&xs);
            SweepRow { param, value, mean, stderr, episodes }
        })
        .collect())
}

/// Sample mean and standard error of the mean (zero for fewer than two
/// samples).
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, sqrt(var / n))
}
