//! Offline version over a finite horizon.
//!
//! Slots are coupled only through buffers and batteries. The per-slot
//! objective prices those couplings with two multipliers per slot: the
//! arrival weight `w_n` (value of a buffered bit) and the energy value `nu_n`
//! (value of a joule left in the battery). Each sweep runs the per-slot
//! solver forward over the horizon, then moves every multiplier towards the
//! marginal value its resource actually had later on:
//!
//! * a bit admitted at relay `k` in slot `n` is worth 1 if the next slot that
//!   selects `k` and finds its buffer limiting delivers it, 0 if no later
//!   slot does;
//! * a joule kept by relay `k` is worth `nu_m + lambda_m` at the next slot `m`
//!   that selects `k` (`lambda_m` its energy-causality multiplier), or 0 if
//!   the battery spills there or `k` is never selected again.
//!
//! Steps shrink as `1 / (sweep + 1)`. The best sweep is returned.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{solve_slot, DualTrace, RelayInput, SlotDecision, SlotParams, SlotProblem, SolverOptions, TraceRow};
use crate::engine::{advance, SlotOutcome};
use crate::error::{Error, Result};
use crate::fading::LinkGainTable;
use crate::queues::RelayState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizonOptions {
    pub solver: SolverOptions,
    pub max_sweeps: usize,
    /// Floor for the arrival weights.
    pub min_weight: f64,
}

impl Default for HorizonOptions {
    fn default() -> Self {
        Self { solver: SolverOptions::default(), max_sweeps: 50, min_weight: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HorizonSolution {
    pub decisions: Vec<SlotDecision>,
    pub outcomes: Vec<SlotOutcome>,
    /// Delivered bits over the horizon, both directions.
    pub total: f64,
    /// One row per sweep: total, change, then `w_1..w_N`, `nu_1..nu_N`.
    pub trace: DualTrace,
    pub converged: bool,
    pub arrival_weights: Vec<f64>,
    pub energy_values: Vec<f64>,
}

struct Pass {
    decisions: Vec<SlotDecision>,
    outcomes: Vec<SlotOutcome>,
    energy_prices: Vec<f64>,
    total: f64,
}

fn forward(
    table: &LinkGainTable,
    initial: &[RelayState],
    params: SlotParams,
    weights: &[f64],
    values: &[f64],
    opts: &SolverOptions,
) -> Result<Pass> {
    let mut states = initial.to_vec();
    let mut pass = Pass { decisions: Vec::new(), outcomes: Vec::new(), energy_prices: Vec::new(), total: 0.0 };
    for n in 0..table.slots() {
        let slot_params = SlotParams { arrival_weight: weights[n], energy_value: values[n], ..params };
        let relays = states.iter().enumerate().map(|(k, &state)| RelayInput { gains: table.gain(n, k), state }).collect();
        let sol = solve_slot(&SlotProblem::new(relays, slot_params)?, opts)?;
        let k = sol.decision.relay;
        let outcome = advance(states[k], table.gain(n, k), &sol.decision, &slot_params)?;
        states[k] = outcome.after;
        pass.total += outcome.departed.sum();
        pass.energy_prices.push(sol.relaxed.energy_prices[k]);
        pass.decisions.push(sol.decision);
        pass.outcomes.push(outcome);
    }
    Ok(pass)
}

/// Later marginal value of a bit and of a joule left at the relay served in
/// slot `n`.
fn targets(pass: &Pass, values: &[f64], n: usize) -> (f64, f64) {
    let k = pass.outcomes[n].relay;
    let later = || pass.outcomes.iter().enumerate().skip(n + 1).filter(move |(_, o)| o.relay == k);

    // (backlog before the slot, broadcast capacity) for one direction
    let bit_value = |direction: fn(&SlotOutcome) -> (f64, f64)| -> f64 {
        let buffer_limited = later().any(|(_, o)| {
            let (backlog, capacity) = direction(o);
            capacity > backlog
        });
        if buffer_limited { 1.0 } else { 0.0 }
    };
    let w_a = bit_value(|o| (o.before.buf_a.level(), o.deliverable.r_ab));
    let w_b = bit_value(|o| (o.before.buf_b.level(), o.deliverable.r_ba));

    let joule = match later().next() {
        Some((_, o)) if o.spilled > 0.0 => 0.0,
        Some((m, _)) => values[m] + pass.energy_prices[m],
        None => 0.0,
    };
    ((w_a + w_b) / 2.0, joule)
}

/// Plans all slots of an episode. For a single slot there is nothing to
/// couple and the result is [`solve_slot`] run once.
pub fn solve_horizon(
    table: &LinkGainTable,
    initial: &[RelayState],
    params: SlotParams,
    opts: &HorizonOptions,
) -> Result<HorizonSolution> {
    if initial.len() != table.relays() {
        return Err(Error::Invalid("initial states do not match the relay count"));
    }
    opts.solver.validate()?;
    params.validate()?;
    let n = table.slots();
    let sweeps = if n == 1 { 1 } else { opts.max_sweeps.max(1) };

    let mut names: Vec<String> = (1..=n).map(|i| format!("w_{i}")).collect();
    names.extend((1..=n).map(|i| format!("nu_{i}")));
    let mut trace = DualTrace { multiplier_names: names, rows: Vec::new(), converged: false };

    let mut weights = alloc::vec![params.arrival_weight; n];
    let mut values = alloc::vec![params.energy_value; n];
    let mut best: Option<(Pass, Vec<f64>, Vec<f64>)> = None;
    let mut previous: Option<f64> = None;

    for sweep in 1..=sweeps {
        let pass = forward(table, initial, params, &weights, &values, &opts.solver)?;
        let change = previous.map_or(pass.total, |p| pass.total - p);
        let mut multipliers = weights.clone();
        multipliers.extend_from_slice(&values);
        trace.rows.push(TraceRow { iter: sweep, objective: pass.total, change, multipliers });
        let done = n == 1 || previous.is_some_and(|_| change.abs() < opts.solver.delta);
        previous = Some(pass.total);

        let step = 1.0 / (sweep as f64 + 1.0);
        let next: Vec<(f64, f64)> = (0..n).map(|i| targets(&pass, &values, i)).collect();
        let is_better = best.as_ref().is_none_or(|(b, _, _)| pass.total > b.total);
        if is_better {
            best = Some((pass, weights.clone(), values.clone()));
        }
        if done {
            trace.converged = true;
            break;
        }
        for (i, (w_target, nu_target)) in next.into_iter().enumerate() {
            weights[i] = (weights[i] + step * (w_target - weights[i])).clamp(opts.min_weight, 1.0);
            values[i] = (values[i] + step * (nu_target - values[i])).max(0.0);
        }
    }

    let (pass, arrival_weights, energy_values) = best.expect("at least one sweep");
    Ok(HorizonSolution {
        decisions: pass.decisions,
        outcomes: pass.outcomes,
        total: pass.total,
        converged: trace.converged,
        trace,
        arrival_weights,
        energy_values,
    })
}
