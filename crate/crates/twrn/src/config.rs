//! Flat `key = value` configuration files.
//!
//! ```text
//! # five relays, five slots
//! K = 5
//! policy = optimal
//! ```
//!
//! Every [`SimConfig`] field has a key; unknown keys are errors. Later
//! assignments win, so command-line overrides are applied last.

use std::path::Path;

use serde_json::{json, Value};
use twrn_core::engine::{PolicyKind, SimConfig};

use crate::error::CliError;

/// Config keys in canonical order.
pub const KEYS: [&str; 15] = [
    "K",
    "N",
    "sigma2",
    "eta",
    "delta",
    "p_max",
    "B_max",
    "E_max",
    "seed",
    "policy",
    "episodes",
    "mac_sum_constraint",
    "arrival_weight",
    "alpha_grid",
    "max_iterations",
];

/// Assigns one key. Range checks happen later in [`SimConfig::validate`].
pub fn set(cfg: &mut SimConfig, key: &str, value: &str) -> Result<(), CliError> {
    let value = value.trim();
    let bad = |what: &str| CliError::Config(format!("{key}: expected {what}, got `{value}`"));
    let float = || value.parse::<f64>().map_err(|_| bad("a number"));
    let count = || value.parse::<usize>().map_err(|_| bad("a non-negative integer"));
    match key.trim() {
        "K" => cfg.relays = count()?,
        "N" => cfg.slots = count()?,
        "sigma2" => cfg.sigma2 = float()?,
        "eta" => cfg.eta = float()?,
        "delta" => cfg.delta = float()?,
        "p_max" => cfg.p_max = float()?,
        "B_max" => cfg.buffer_capacity = float()?,
        "E_max" => cfg.battery_capacity = float()?,
        "seed" => cfg.seed = value.parse().map_err(|_| bad("an unsigned 64-bit integer"))?,
        "policy" => cfg.policy = value.parse::<PolicyKind>().map_err(|e| CliError::Config(e.to_string()))?,
        "episodes" => cfg.episodes = count()?,
        "mac_sum_constraint" => {
            cfg.mac_sum_constraint = match value {
                "true" | "1" | "yes" | "on" => true,
                "false" | "0" | "no" | "off" => false,
                _ => return Err(bad("a boolean")),
            }
        }
        "arrival_weight" => cfg.arrival_weight = float()?,
        "alpha_grid" => cfg.alpha_grid = count()?,
        "max_iterations" => cfg.max_iterations = count()?,
        other => return Err(CliError::Config(format!("unknown config key `{other}`"))),
    }
    Ok(())
}

/// Applies every assignment in `text` on top of `cfg`.
pub fn parse_into(cfg: &mut SimConfig, text: &str) -> Result<(), CliError> {
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split_once('#').map_or(raw, |(before, _)| before).trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", i + 1)))?;
        set(cfg, key, value).map_err(|e| CliError::Config(format!("line {}: {e}", i + 1)))?;
    }
    Ok(())
}

pub fn load(path: &Path) -> Result<SimConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let mut cfg = SimConfig::default();
    parse_into(&mut cfg, &text)?;
    Ok(cfg)
}

/// Parses a `key=value` override.
pub fn apply_override(cfg: &mut SimConfig, assignment: &str) -> Result<(), CliError> {
    let (key, value) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{assignment}` is not key=value")))?;
    set(cfg, key, value)
}

/// The config as a file that [`parse_into`] reads back to the same value.
pub fn render(cfg: &SimConfig) -> String {
    let mut out = String::new();
    for key in KEYS {
        out.push_str(&format!("{key} = {}\n", value_text(cfg, key)));
    }
    out
}

fn value_text(cfg: &SimConfig, key: &str) -> String {
    // `{}` on f64 is the shortest text that parses back exactly
    match key {
        "K" => cfg.relays.to_string(),
        "N" => cfg.slots.to_string(),
        "sigma2" => cfg.sigma2.to_string(),
        "eta" => cfg.eta.to_string(),
        "delta" => cfg.delta.to_string(),
        "p_max" => cfg.p_max.to_string(),
        "B_max" => cfg.buffer_capacity.to_string(),
        "E_max" => cfg.battery_capacity.to_string(),
        "seed" => cfg.seed.to_string(),
        "policy" => cfg.policy.name().to_string(),
        "episodes" => cfg.episodes.to_string(),
        "mac_sum_constraint" => cfg.mac_sum_constraint.to_string(),
        "arrival_weight" => cfg.arrival_weight.to_string(),
        "alpha_grid" => cfg.alpha_grid.to_string(),
        "max_iterations" => cfg.max_iterations.to_string(),
        _ => unreachable!("key list and renderer disagree"),
    }
}

/// The config as a JSON object keyed like the file format.
pub fn to_json(cfg: &SimConfig) -> Value {
    json!({
        "K": cfg.relays,
        "N": cfg.slots,
        "sigma2": cfg.sigma2,
        "eta": cfg.eta,
        "delta": cfg.delta,
        "p_max": cfg.p_max,
        "B_max": cfg.buffer_capacity,
        "E_max": cfg.battery_capacity,
        "seed": cfg.seed,
        "policy": cfg.policy.name(),
        "episodes": cfg.episodes,
        "mac_sum_constraint": cfg.mac_sum_constraint,
        "arrival_weight": cfg.arrival_weight,
        "alpha_grid": cfg.alpha_grid,
        "max_iterations": cfg.max_iterations,
    })
}
