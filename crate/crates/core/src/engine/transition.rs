//! One slot of relay dynamics.

use crate::allocator::{SlotDecision, SlotParams};
use crate::error::Result;
use crate::fading::GainPair;
use crate::queues::RelayState;
use crate::rates::{harvested_energy, twoway_three_subslot_rates, Powers, RatePair, SubslotPartition};

/// Everything that happened at the selected relay in one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotOutcome {
    pub relay: usize,
    pub alpha: f64,
    /// Powers after the energy clamp (`p_r` may be below the request).
    pub powers: Powers,
    pub harvested: f64,
    pub stored: f64,
    pub spilled: f64,
    /// Broadcast energy requested, `tau * p_r`.
    pub demand: f64,
    pub drawn: f64,
    /// The battery could not cover the requested broadcast power.
    pub clamped: bool,
    pub offered: RatePair,
    pub admitted: RatePair,
    pub dropped: RatePair,
    /// Broadcast capacities at the applied relay power.
    pub deliverable: RatePair,
    pub departed: RatePair,
    pub before: RelayState,
    pub after: RelayState,
}

/// Applies a decision to the selected relay: harvest and charge, enqueue the
/// multiple-access arrivals, then draw the broadcast energy and serve each
/// buffer up to its level from before this slot's arrivals.
pub fn advance(state: RelayState, gains: GainPair, decision: &SlotDecision, params: &SlotParams) -> Result<SlotOutcome> {
    let partition = SubslotPartition::new(decision.alpha)?;
    let harvested = harvested_energy(partition, params.beacon_s, params.beacon_d, gains.sr, gains.rd, params.eta)?;
    let charged = state.battery.charge(harvested)?;

    let requested = decision.powers;
    let offered = twoway_three_subslot_rates(partition, requested, gains.sr, gains.rd, params.noise, params.mac_sum_constraint)?.arrivals;
    let a = state.buf_a.enqueue(offered.r_ab)?;
    let b = state.buf_b.enqueue(offered.r_ba)?;

    let tau = partition.tau_bc();
    let demand = tau * requested.p_r;
    let discharged = charged.battery.discharge(demand)?;
    let clamped = discharged.drawn < demand;
    let powers = if clamped {
        Powers { p_r: discharged.drawn / tau, ..requested }
    } else {
        requested
    };
    let deliverable = twoway_three_subslot_rates(partition, powers, gains.sr, gains.rd, params.noise, params.mac_sum_constraint)?.deliverable;
    let out_a = a.buffer.dequeue(deliverable.r_ab.min(state.buf_a.level()))?;
    let out_b = b.buffer.dequeue(deliverable.r_ba.min(state.buf_b.level()))?;

    Ok(SlotOutcome {
        relay: decision.relay,
        alpha: decision.alpha,
        powers,
        harvested,
        stored: charged.stored,
        spilled: charged.spilled,
        demand,
        drawn: discharged.drawn,
        clamped,
        offered,
        admitted: RatePair { r_ab: a.admitted, r_ba: b.admitted },
        dropped: RatePair { r_ab: a.dropped, r_ba: b.dropped },
        deliverable,
        departed: RatePair { r_ab: out_a.departed, r_ba: out_b.departed },
        before: state,
        after: RelayState { buf_a: out_a.buffer, buf_b: out_b.buffer, battery: discharged.battery },
    })
}
