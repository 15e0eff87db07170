//! Per-slot decision rules.

use core::str::FromStr;

use alloc::string::ToString;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::allocator::{evaluate, power_bound, solve_slot, SlotDecision, SlotProblem, SolverOptions};
use crate::error::{Error, Result};
use crate::fading::unit_uniform;
use crate::rates::{harvest_unchecked, twoway_unchecked, Powers};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    Random,
    MaxMinSnr,
    BufferEnergyAware,
    /// Relaxed/KKT optimizer, one slot at a time.
    Optimal,
    /// Offline optimizer over the whole episode.
    Horizon,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] =
        [PolicyKind::Random, PolicyKind::MaxMinSnr, PolicyKind::BufferEnergyAware, PolicyKind::Optimal, PolicyKind::Horizon];

    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Random => "random",
            PolicyKind::MaxMinSnr => "max-min-snr",
            PolicyKind::BufferEnergyAware => "buffer-energy-aware",
            PolicyKind::Optimal => "optimal",
            PolicyKind::Horizon => "horizon",
        }
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        PolicyKind::ALL
            .into_iter()
            .find(|p| p.name() == norm)
            .ok_or_else(|| Error::UnknownName { kind: "policy", name: s.to_string() })
    }
}

impl core::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyOutput {
    pub decision: SlotDecision,
    pub iterations: usize,
    pub converged: bool,
}

pub trait Policy {
    fn decide(&mut self, slot: usize, problem: &SlotProblem) -> Result<PolicyOutput>;
}

/// `alpha = 1/2`, both endpoints at `p_max`, relay at `p_max` clamped to the
/// energy available after harvesting.
pub fn fixed_decision(problem: &SlotProblem, relay: usize) -> Result<SlotDecision> {
    const ALPHA: f64 = 0.5;
    let params = &problem.params;
    let input = &problem.relays[relay];
    let tau = (1.0 - ALPHA) / 2.0;
    let harvest = harvest_unchecked(ALPHA, params.beacon_s, params.beacon_d, input.gains.sr, input.gains.rd, params.eta);
    let available = input.state.battery.charge(harvest)?.battery.level();
    let p_r = power_bound(tau, params.p_max, available);
    let powers = Powers { p_s: params.p_max, p_d: params.p_max, p_r };
    let mut decision = SlotDecision {
        rho: SlotDecision::indicator(problem.relay_count(), relay),
        relay,
        alpha: ALPHA,
        powers,
        rates: twoway_unchecked(tau, powers, input.gains.sr, input.gains.rd, params.noise, params.mac_sum_constraint),
        objective: 0.0,
    };
    decision.objective = evaluate(problem, &decision)?.unwrap_or(0.0);
    Ok(decision)
}

fn fixed(problem: &SlotProblem, relay: usize) -> Result<PolicyOutput> {
    Ok(PolicyOutput { decision: fixed_decision(problem, relay)?, iterations: 0, converged: true })
}

/// First index of the maximum score.
fn argmax(scores: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (k, s) in scores.enumerate() {
        if s > best.1 {
            best = (k, s);
        }
    }
    best.0
}

/// Uniform relay from a seeded ChaCha8 stream (`u64::MAX`).
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(u64::MAX);
        Self { rng }
    }
}

impl Policy for RandomPolicy {
    fn decide(&mut self, _slot: usize, problem: &SlotProblem) -> Result<PolicyOutput> {
        let k = problem.relay_count();
        let relay = ((unit_uniform(self.rng.next_u64()) * k as f64) as usize).min(k - 1);
        fixed(problem, relay)
    }
}

/// Relay with the best bottleneck link.
pub struct MaxMinSnrPolicy;

impl Policy for MaxMinSnrPolicy {
    fn decide(&mut self, _slot: usize, problem: &SlotProblem) -> Result<PolicyOutput> {
        let relay = argmax(problem.relays.iter().map(|r| r.gains.sr.min(r.gains.rd)));
        fixed(problem, relay)
    }
}

/// Bottleneck gain weighted up by battery charge and down by buffer
/// occupancy: `min(g_sr, g_rd) (1 + E/E_max) (1 - max(Q_a, Q_b) / (2 B_max))`.
pub struct BufferEnergyAwarePolicy;

impl BufferEnergyAwarePolicy {
    pub fn score(input: &crate::allocator::RelayInput) -> f64 {
        let s = &input.state;
        let charge = s.battery.level() / s.battery.capacity();
        let fill = s.buf_a.level().max(s.buf_b.level()) / (2.0 * s.buf_a.capacity().max(s.buf_b.capacity()));
        input.gains.sr.min(input.gains.rd) * (1.0 + charge) * (1.0 - fill)
    }
}

impl Policy for BufferEnergyAwarePolicy {
    fn decide(&mut self, _slot: usize, problem: &SlotProblem) -> Result<PolicyOutput> {
        let relay = argmax(problem.relays.iter().map(Self::score));
        fixed(problem, relay)
    }
}

pub struct OptimalPolicy {
    pub options: SolverOptions,
}

impl Policy for OptimalPolicy {
    fn decide(&mut self, _slot: usize, problem: &SlotProblem) -> Result<PolicyOutput> {
        let sol = solve_slot(problem, &self.options)?;
        Ok(PolicyOutput { decision: sol.decision, iterations: sol.trace.iterations(), converged: sol.all_converged })
    }
}
