use super::audit::evaluate_config;
use super::{SlotDecision, SlotProblem};
use crate::error::{Error, Result};
use crate::rates::{twoway_three_subslot_rates, Powers, SubslotPartition};

/// `K * grid^4` cap matching three relays on a 25-point grid.
pub const DEFAULT_ORACLE_BUDGET: u64 = 3 * 25 * 25 * 25 * 25;

/// Exhaustive search over the relay index and uniform grids for `alpha` on
/// `[0, 1]` and each power on `[0, p_max]`. Infeasible points (energy
/// causality) are skipped. The first best point in enumeration order wins,
/// so results are deterministic.
pub fn brute_force_oracle(prob: &SlotProblem, grid: usize, budget: u64) -> Result<SlotDecision> {
    prob.validate()?;
    if grid < 2 {
        return Err(Error::Domain { what: "oracle grid size", value: grid as f64 });
    }
    let k = prob.relay_count() as u64;
    let evaluations = (grid as u64).checked_pow(4).and_then(|g| g.checked_mul(k)).unwrap_or(u64::MAX);
    if evaluations > budget {
        return Err(Error::Budget { evaluations, cap: budget });
    }

    let point = |i: usize| i as f64 / (grid - 1) as f64;
    let p_max = prob.params.p_max;
    let mut best: Option<(usize, f64, Powers, f64)> = None;
    for relay in 0..prob.relay_count() {
        for ia in 0..grid {
            let alpha = point(ia);
            for is in 0..grid {
                for id in 0..grid {
                    for ir in 0..grid {
                        let powers = Powers { p_s: p_max * point(is), p_d: p_max * point(id), p_r: p_max * point(ir) };
                        let Some(v) = evaluate_config(prob, relay, alpha, powers)? else { continue };
                        if best.is_none_or(|b| v > b.3) {
                            best = Some((relay, alpha, powers, v));
                        }
                    }
                }
            }
        }
    }
    // alpha = 1 with zero powers is always feasible
    let (relay, alpha, powers, objective) = best.expect("grid contains a feasible point");
    let input = &prob.relays[relay];
    let rates = twoway_three_subslot_rates(
        SubslotPartition::new(alpha)?,
        powers,
        input.gains.sr,
        input.gains.rd,
        prob.params.noise,
        prob.params.mac_sum_constraint,
    )?;
    Ok(SlotDecision {
        rho: SlotDecision::indicator(prob.relay_count(), relay),
        relay,
        alpha,
        powers,
        rates,
        objective,
    })
}
