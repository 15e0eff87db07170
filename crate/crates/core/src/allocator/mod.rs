//! Per-slot relay selection, time switching and power allocation.
//!
//! For a fixed harvest fraction `alpha` the slot problem is mixed-integer:
//! pick one relay `k` (indicator `rho_k`) and three powers. Relaxing
//! `rho_k` to `[0, 1]` and substituting `q_k = rho_k * p_k` turns every rate
//! term into the perspective `rho_k * f_k(q_k / rho_k)`, jointly concave in
//! `(rho_k, q_k)`, and every box and energy-causality constraint into a
//! linear one. [`solve_fixed_alpha`] then alternates KKT water-filling for
//! the scaled powers (energy multiplier by bisection) with a projected
//! gradient step for the selection weights on the simplex. [`recover_binary`]
//! rounds the weights back to a single relay and [`solve_slot`] searches
//! `alpha`.
//!
//! [`brute_force_oracle`] enumerates a grid and shares no code with the
//! optimizer beyond the rate formulas and queue operations, which it calls
//! through [`evaluate`].

mod audit;
pub mod horizon;
mod instance;
mod kkt;
mod oracle;
mod relax;
mod slot;

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{non_negative, unit_interval, Error, Result};
use crate::fading::{GainPair, NoiseModel};
use crate::queues::RelayState;
use crate::rates::{Powers, TwoWayRates};

pub use audit::{audit, evaluate, Violation};
pub use horizon::{solve_horizon, HorizonOptions, HorizonSolution};
pub use instance::random_problem;
pub use oracle::{brute_force_oracle, DEFAULT_ORACLE_BUDGET};
pub(crate) use relax::power_bound;
pub use relax::{relax_and_decouple, solve_fixed_alpha, DecoupledProblem, RelaxedDecision, RelayTerms};
pub use slot::{recover_binary, solve_slot, SlotSolution};

/// Parameters shared by every relay in a slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotParams {
    pub noise: NoiseModel,
    /// Common cap for the source, destination and relay powers (W).
    pub p_max: f64,
    /// RF-to-DC conversion efficiency.
    pub eta: f64,
    /// Source power during the harvest subslot (W).
    pub beacon_s: f64,
    /// Destination power during the harvest subslot (W).
    pub beacon_d: f64,
    /// Value of one admitted-but-undelivered bit relative to a delivered one.
    pub arrival_weight: f64,
    /// Value (bits per joule) of energy left in the selected relay's battery.
    /// Zero for the myopic per-slot policy; the horizon solver raises it.
    pub energy_value: f64,
    pub mac_sum_constraint: bool,
}

impl SlotParams {
    /// Beacons at `p_max`, arrival weight 0.9, no energy value.
    pub fn new(noise: NoiseModel, p_max: f64, eta: f64) -> Self {
        Self {
            noise,
            p_max,
            eta,
            beacon_s: p_max,
            beacon_d: p_max,
            arrival_weight: 0.9,
            energy_value: 0.0,
            mac_sum_constraint: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        non_negative("p_max", self.p_max)?;
        unit_interval("conversion efficiency", self.eta)?;
        non_negative("beacon power", self.beacon_s)?;
        non_negative("beacon power", self.beacon_d)?;
        if !(self.arrival_weight > 0.0 && self.arrival_weight <= 1.0) {
            return Err(Error::Domain { what: "arrival weight", value: self.arrival_weight });
        }
        non_negative("energy value", self.energy_value)?;
        Ok(())
    }
}

impl Default for SlotParams {
    fn default() -> Self {
        Self::new(NoiseModel::default(), 1.0, 0.8)
    }
}

/// One candidate relay: its channel this slot and its state at slot start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelayInput {
    pub gains: GainPair,
    pub state: RelayState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotProblem {
    pub relays: Vec<RelayInput>,
    pub params: SlotParams,
}

impl SlotProblem {
    pub fn new(relays: Vec<RelayInput>, params: SlotParams) -> Result<Self> {
        let p = Self { relays, params };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.relays.is_empty() {
            return Err(Error::Dimension { what: "relay count" });
        }
        for r in &self.relays {
            non_negative("channel gain", r.gains.sr)?;
            non_negative("channel gain", r.gains.rd)?;
        }
        self.params.validate()
    }

    pub fn relay_count(&self) -> usize {
        self.relays.len()
    }
}

/// A binary decision for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotDecision {
    /// Selection weights the decision was recovered from (sum to one).
    pub rho: Vec<f64>,
    /// Selected relay, 0-based.
    pub relay: usize,
    pub alpha: f64,
    pub powers: Powers,
    /// Offered MAC arrivals and broadcast capacities at the chosen powers.
    pub rates: TwoWayRates,
    /// Weighted slot objective (bits/cu).
    pub objective: f64,
}

impl SlotDecision {
    pub fn indicator(relay_count: usize, relay: usize) -> Vec<f64> {
        let mut rho = alloc::vec![0.0; relay_count];
        rho[relay] = 1.0;
        rho
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub objective: f64,
    /// `objective - previous objective`.
    pub change: f64,
    pub multipliers: Vec<f64>,
}

/// Iteration history of one solve.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DualTrace {
    pub multiplier_names: Vec<String>,
    pub rows: Vec<TraceRow>,
    pub converged: bool,
}

impl DualTrace {
    pub fn iterations(&self) -> usize {
        self.rows.len()
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.rows.last().map(|r| r.objective)
    }

    pub fn is_non_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].objective >= w[0].objective)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop once the objective improves by less than this.
    pub delta: f64,
    pub max_iterations: usize,
    /// Uniform grid size for the outer search over `alpha`.
    pub alpha_grid: usize,
    /// Projected-gradient step, relative to the spread of relay values.
    pub step_scale: f64,
    /// Golden-section polish of `alpha` around the best grid point.
    pub refine_alpha: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { delta: 1e-4, max_iterations: 200, alpha_grid: 21, step_scale: 1.0, refine_alpha: true }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.delta.is_nan() || self.delta <= 0.0 {
            return Err(Error::Domain { what: "delta", value: self.delta });
        }
        if self.max_iterations == 0 {
            return Err(Error::Dimension { what: "iteration cap" });
        }
        if self.alpha_grid < 2 {
            return Err(Error::Domain { what: "alpha grid size", value: self.alpha_grid as f64 });
        }
        if self.step_scale.is_nan() || self.step_scale <= 0.0 {
            return Err(Error::Domain { what: "step scale", value: self.step_scale });
        }
        Ok(())
    }
}
