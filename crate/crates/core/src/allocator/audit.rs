//! Independent re-evaluation and feasibility checks of binary decisions.
//!
//! Goes through the public rate formulas and the queue state machines only,
//! so it can check the optimizer and back the grid oracle.

use core::fmt;

use super::{SlotDecision, SlotProblem};
use crate::error::Result;
use crate::rates::{harvested_energy, twoway_three_subslot_rates, Powers, SubslotPartition};

/// Weighted slot objective of selecting `relay` with `alpha` and `powers`.
/// Returns `None` when the broadcast would draw more energy than the battery
/// holds after harvesting.
pub(crate) fn evaluate_config(prob: &SlotProblem, relay: usize, alpha: f64, powers: Powers) -> Result<Option<f64>> {
    let params = &prob.params;
    let input = &prob.relays[relay];
    let partition = SubslotPartition::new(alpha)?;
    let harvest = harvested_energy(partition, params.beacon_s, params.beacon_d, input.gains.sr, input.gains.rd, params.eta)?;
    let charged = input.state.battery.charge(harvest)?;
    let demand = partition.tau_bc() * powers.p_r;
    if demand > charged.battery.level() {
        return Ok(None);
    }
    let drawn = charged.battery.discharge(demand)?.drawn;

    let rates = twoway_three_subslot_rates(partition, powers, input.gains.sr, input.gains.rd, params.noise, params.mac_sum_constraint)?;
    let a = input.state.buf_a.enqueue(rates.arrivals.r_ab)?;
    let b = input.state.buf_b.enqueue(rates.arrivals.r_ba)?;
    // Departures only see the backlog from before this slot's arrivals.
    let out_a = a.buffer.dequeue(rates.deliverable.r_ab.min(input.state.buf_a.level()))?;
    let out_b = b.buffer.dequeue(rates.deliverable.r_ba.min(input.state.buf_b.level()))?;

    let admitted = a.admitted + b.admitted;
    let delivered = out_a.departed + out_b.departed;
    Ok(Some(params.arrival_weight * admitted + delivered + params.energy_value * (charged.stored - drawn)))
}

/// Objective of a decision, recomputed from scratch. `None` if infeasible.
pub fn evaluate(prob: &SlotProblem, decision: &SlotDecision) -> Result<Option<f64>> {
    if decision.relay >= prob.relay_count() {
        return Ok(None);
    }
    evaluate_config(prob, decision.relay, decision.alpha, decision.powers)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    WeightCount { expected: usize, got: usize },
    WeightRange { relay: usize, value: f64 },
    WeightSum(f64),
    RelayIndex(usize),
    Alpha(f64),
    Power { which: &'static str, value: f64 },
    Energy { demand: f64, available: f64 },
    Objective { reported: f64, evaluated: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::WeightCount { expected, got } => write!(f, "expected {expected} selection weights, got {got}"),
            Violation::WeightRange { relay, value } => write!(f, "weight of relay {relay} is {value}"),
            Violation::WeightSum(s) => write!(f, "selection weights sum to {s}"),
            Violation::RelayIndex(k) => write!(f, "relay index {k} out of range"),
            Violation::Alpha(a) => write!(f, "alpha {a} outside [0, 1]"),
            Violation::Power { which, value } => write!(f, "{which} = {value} outside [0, p_max]"),
            Violation::Energy { demand, available } => {
                write!(f, "broadcast needs {demand} J but only {available} J are available")
            }
            Violation::Objective { reported, evaluated } => {
                write!(f, "reported objective {reported} but re-evaluation gives {evaluated}")
            }
        }
    }
}

/// Checks every feasibility condition of a binary decision, and that the
/// reported objective matches a fresh evaluation to `1e-9`.
pub fn audit(prob: &SlotProblem, d: &SlotDecision) -> core::result::Result<(), Violation> {
    let k = prob.relay_count();
    if d.rho.len() != k {
        return Err(Violation::WeightCount { expected: k, got: d.rho.len() });
    }
    for (relay, &value) in d.rho.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(Violation::WeightRange { relay, value });
        }
    }
    let sum: f64 = d.rho.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Violation::WeightSum(sum));
    }
    if d.relay >= k {
        return Err(Violation::RelayIndex(d.relay));
    }
    if !(0.0..=1.0).contains(&d.alpha) {
        return Err(Violation::Alpha(d.alpha));
    }
    let p_max = prob.params.p_max;
    for (which, value) in [("p_s", d.powers.p_s), ("p_d", d.powers.p_d), ("p_r", d.powers.p_r)] {
        if !(0.0..=p_max).contains(&value) {
            return Err(Violation::Power { which, value });
        }
    }
    let input = &prob.relays[d.relay];
    let params = &prob.params;
    let harvest = params.eta * d.alpha * (params.beacon_s * input.gains.sr + params.beacon_d * input.gains.rd);
    let available = input.state.battery.charge(harvest).map(|c| c.battery.level()).unwrap_or(0.0);
    let demand = (1.0 - d.alpha) / 2.0 * d.powers.p_r;
    if demand > available {
        return Err(Violation::Energy { demand, available });
    }
    match evaluate(prob, d) {
        Ok(Some(v)) if (v - d.objective).abs() <= 1e-9 * v.abs().max(1.0) => Ok(()),
        Ok(Some(v)) => Err(Violation::Objective { reported: d.objective, evaluated: v }),
        _ => Err(Violation::Energy { demand, available }),
    }
}
