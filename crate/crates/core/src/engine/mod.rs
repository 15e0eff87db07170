//! Episode simulation.
//!
//! Each slot the policy sees every relay's gains and state, picks one relay,
//! and only that relay harvests, receives and broadcasts; the others are
//! frozen. Buffers start empty and batteries half full.

pub mod policy;
mod sweep;
pub mod transition;

use alloc::vec::Vec;

use crate::allocator::{solve_horizon, HorizonOptions, RelayInput, SlotDecision, SlotParams, SlotProblem, SolverOptions};
use crate::error::{non_negative, unit_interval, Error, Result};
use crate::fading::{sample_gain_table, LinkGainTable, NoiseModel};
use crate::queues::RelayState;
use crate::rates::RatePair;

pub use policy::{
    fixed_decision, BufferEnergyAwarePolicy, MaxMinSnrPolicy, OptimalPolicy, Policy, PolicyKind, PolicyOutput, RandomPolicy,
};
pub use sweep::{mean_and_stderr, sweep, SweepParam, SweepRow};
pub use transition::{advance, SlotOutcome};

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Relay count `K`.
    pub relays: usize,
    /// Horizon `N` in unit slots.
    pub slots: usize,
    pub sigma2: f64,
    pub eta: f64,
    pub delta: f64,
    pub p_max: f64,
    /// `B_max`, bits/cu per directional buffer.
    pub buffer_capacity: f64,
    /// `E_max`, joules.
    pub battery_capacity: f64,
    pub seed: u64,
    pub policy: PolicyKind,
    pub episodes: usize,
    pub mac_sum_constraint: bool,
    pub arrival_weight: f64,
    pub alpha_grid: usize,
    pub max_iterations: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            relays: 5,
            slots: 5,
            sigma2: 0.1,
            eta: 0.8,
            delta: 1e-4,
            p_max: 1.0,
            buffer_capacity: 2.0,
            battery_capacity: 1.0,
            seed: 7,
            policy: PolicyKind::Optimal,
            episodes: 1,
            mac_sum_constraint: false,
            arrival_weight: 0.9,
            alpha_grid: 21,
            max_iterations: 200,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.relays == 0 {
            return Err(Error::Dimension { what: "relay count" });
        }
        if self.episodes == 0 {
            return Err(Error::Dimension { what: "episode count" });
        }
        NoiseModel::new(self.sigma2)?;
        unit_interval("conversion efficiency", self.eta)?;
        non_negative("p_max", self.p_max)?;
        if !(self.buffer_capacity > 0.0 && self.buffer_capacity.is_finite()) {
            return Err(Error::Domain { what: "B_max", value: self.buffer_capacity });
        }
        if !(self.battery_capacity > 0.0 && self.battery_capacity.is_finite()) {
            return Err(Error::Domain { what: "E_max", value: self.battery_capacity });
        }
        self.slot_params()?.validate()?;
        self.solver_options().validate()
    }

    pub fn noise(&self) -> Result<NoiseModel> {
        NoiseModel::new(self.sigma2)
    }

    pub fn slot_params(&self) -> Result<SlotParams> {
        let mut params = SlotParams::new(self.noise()?, self.p_max, self.eta);
        params.arrival_weight = self.arrival_weight;
        params.mac_sum_constraint = self.mac_sum_constraint;
        Ok(params)
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            delta: self.delta,
            max_iterations: self.max_iterations,
            alpha_grid: self.alpha_grid,
            ..SolverOptions::default()
        }
    }

    pub fn initial_states(&self) -> Result<Vec<RelayState>> {
        let state = RelayState::new(self.buffer_capacity, self.battery_capacity, self.battery_capacity / 2.0)?;
        Ok(alloc::vec![state; self.relays])
    }

    /// Seed of episode `index` in a multi-episode run.
    pub fn episode_seed(&self, index: usize) -> u64 {
        self.seed.wrapping_add(index as u64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotRecord {
    pub slot: usize,
    pub decision: SlotDecision,
    pub outcome: SlotOutcome,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpisodeMetrics {
    pub seed: u64,
    /// Delivered bits, both directions, whole horizon.
    pub sum_throughput: f64,
    pub offered: RatePair,
    pub admitted: RatePair,
    pub delivered: RatePair,
    pub dropped_bits: f64,
    pub harvested: f64,
    pub stored: f64,
    pub spilled_joules: f64,
    pub drawn: f64,
    /// Slots where the battery could not cover the requested relay power.
    pub clamp_events: usize,
    pub slots: Vec<SlotRecord>,
    pub initial_states: Vec<RelayState>,
    /// States of every relay after each slot.
    pub trajectory: Vec<Vec<RelayState>>,
    pub all_converged: bool,
}

impl EpisodeMetrics {
    pub fn solver_iterations(&self) -> impl Iterator<Item = usize> + '_ {
        self.slots.iter().map(|s| s.iterations)
    }

    fn record(&mut self, slot: usize, decision: SlotDecision, outcome: SlotOutcome, iterations: usize, converged: bool) {
        let add = |acc: &mut RatePair, x: RatePair| {
            acc.r_ab += x.r_ab;
            acc.r_ba += x.r_ba;
        };
        add(&mut self.offered, outcome.offered);
        add(&mut self.admitted, outcome.admitted);
        add(&mut self.delivered, outcome.departed);
        self.sum_throughput += outcome.departed.sum();
        self.dropped_bits += outcome.dropped.sum();
        self.harvested += outcome.harvested;
        self.stored += outcome.stored;
        self.spilled_joules += outcome.spilled;
        self.drawn += outcome.drawn;
        self.clamp_events += usize::from(outcome.clamped);
        self.all_converged &= converged;
        self.slots.push(SlotRecord { slot, decision, outcome, iterations, converged });
    }
}

fn slot_problem(table: &LinkGainTable, slot: usize, states: &[RelayState], params: SlotParams) -> Result<SlotProblem> {
    let relays = states
        .iter()
        .enumerate()
        .map(|(k, &state)| RelayInput { gains: table.gain(slot, k), state })
        .collect();
    SlotProblem::new(relays, params)
}

/// Runs one episode on `cfg.seed`'s gain table.
pub fn run_episode(cfg: &SimConfig) -> Result<EpisodeMetrics> {
    cfg.validate()?;
    if cfg.slots == 0 {
        return run_with_table(cfg, None);
    }
    let table = sample_gain_table(cfg.seed, cfg.slots, cfg.relays)?;
    run_with_table(cfg, Some(&table))
}

/// Runs one episode on a given table (`cfg.slots` and `cfg.relays` must
/// match it).
pub fn run_episode_with_table(cfg: &SimConfig, table: &LinkGainTable) -> Result<EpisodeMetrics> {
    cfg.validate()?;
    if table.slots() != cfg.slots || table.relays() != cfg.relays {
        return Err(Error::Invalid("gain table shape does not match the configuration"));
    }
    run_with_table(cfg, Some(table))
}

/// `cfg.episodes` episodes on seeds `seed, seed + 1, ...`.
pub fn run_episodes(cfg: &SimConfig) -> Result<Vec<EpisodeMetrics>> {
    (0..cfg.episodes)
        .map(|e| run_episode(&SimConfig { seed: cfg.episode_seed(e), ..cfg.clone() }))
        .collect()
}

fn run_with_table(cfg: &SimConfig, table: Option<&LinkGainTable>) -> Result<EpisodeMetrics> {
    let mut states = cfg.initial_states()?;
    let mut metrics = EpisodeMetrics {
        seed: cfg.seed,
        initial_states: states.clone(),
        all_converged: true,
        ..EpisodeMetrics::default()
    };
    let Some(table) = table else { return Ok(metrics) };
    let params = cfg.slot_params()?;

    if cfg.policy == PolicyKind::Horizon {
        let opts = HorizonOptions { solver: cfg.solver_options(), ..HorizonOptions::default() };
        let plan = solve_horizon(table, &states, params, &opts)?;
        for (slot, decision) in plan.decisions.into_iter().enumerate() {
            let k = decision.relay;
            let outcome = advance(states[k], table.gain(slot, k), &decision, &params)?;
            states[k] = outcome.after;
            metrics.trajectory.push(states.clone());
            metrics.record(slot, decision, outcome, plan.trace.iterations(), plan.converged);
        }
        return Ok(metrics);
    }

    let mut policy: alloc::boxed::Box<dyn Policy> = match cfg.policy {
        PolicyKind::Random => alloc::boxed::Box::new(RandomPolicy::new(cfg.seed)),
        PolicyKind::MaxMinSnr => alloc::boxed::Box::new(MaxMinSnrPolicy),
        PolicyKind::BufferEnergyAware => alloc::boxed::Box::new(BufferEnergyAwarePolicy),
        PolicyKind::Optimal | PolicyKind::Horizon => {
            alloc::boxed::Box::new(OptimalPolicy { options: cfg.solver_options() })
        }
    };
    for slot in 0..cfg.slots {
        let problem = slot_problem(table, slot, &states, params)?;
        let out = policy.decide(slot, &problem)?;
        let k = out.decision.relay;
        let outcome = advance(states[k], table.gain(slot, k), &out.decision, &params)?;
        states[k] = outcome.after;
        metrics.trajectory.push(states.clone());
        metrics.record(slot, out.decision, outcome, out.iterations, out.converged);
    }
    Ok(metrics)
}
