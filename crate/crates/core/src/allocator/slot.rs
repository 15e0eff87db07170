use alloc::vec::Vec;

use super::relax::{relax_and_decouple, solve_fixed_alpha, DecoupledProblem, RelaxedDecision};
use super::{DualTrace, SlotDecision, SlotProblem, SolverOptions};
use crate::error::Result;
use crate::rates::twoway_unchecked;

/// Rounds the relaxed weights to the heaviest relay (lowest index on ties)
/// and re-solves that relay's powers with its weight pinned to one.
pub fn recover_binary(sub: &DecoupledProblem, relaxed: &RelaxedDecision) -> SlotDecision {
    let mut relay = 0;
    for (k, &r) in relaxed.rho.iter().enumerate() {
        if r > relaxed.rho[relay] {
            relay = k;
        }
    }
    let terms = &sub.relays[relay];
    let opt = terms.solve();
    let rates = twoway_unchecked(terms.tau, opt.powers, terms.g_sr, terms.g_rd, terms.noise, terms.mac_sum_constraint);
    SlotDecision {
        rho: relaxed.rho.clone(),
        relay,
        alpha: sub.alpha,
        powers: opt.powers,
        rates,
        objective: terms.perspective(1.0, opt.powers),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotSolution {
    pub decision: SlotDecision,
    /// Relaxed solution at the chosen `alpha`.
    pub relaxed: RelaxedDecision,
    /// Inner iteration history at the chosen `alpha`.
    pub trace: DualTrace,
    /// Number of inner solves across the `alpha` search.
    pub inner_solves: usize,
    /// Whether every inner solve met the stopping rule.
    pub all_converged: bool,
    /// Largest inner iteration count seen.
    pub max_iterations: usize,
}

struct Candidate {
    decision: SlotDecision,
    relaxed: RelaxedDecision,
    trace: DualTrace,
}

/// Outer search over `alpha`: a uniform grid, then (optionally) a
/// golden-section polish inside the bracket of the best grid point. The
/// best decision seen anywhere is returned; ties keep the smaller `alpha`.
pub fn solve_slot(prob: &SlotProblem, opts: &SolverOptions) -> Result<SlotSolution> {
    opts.validate()?;
    prob.validate()?;
    let mut stats = (0usize, true, 0usize);
    let mut eval = |alpha: f64| -> Result<Candidate> {
        let sub = relax_and_decouple(prob, alpha)?;
        let (relaxed, trace) = solve_fixed_alpha(&sub, opts);
        stats.0 += 1;
        stats.1 &= trace.converged;
        stats.2 = stats.2.max(trace.iterations());
        let decision = recover_binary(&sub, &relaxed);
        Ok(Candidate { decision, relaxed, trace })
    };

    let n = opts.alpha_grid;
    let grid: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let mut best: Option<(usize, Candidate)> = None;
    for (i, &alpha) in grid.iter().enumerate() {
        let c = eval(alpha)?;
        if best.as_ref().is_none_or(|(_, b)| c.decision.objective > b.decision.objective) {
            best = Some((i, c));
        }
    }
    let (idx, mut best) = best.expect("grid has at least two points");

    if opts.refine_alpha {
        let mut probe = |alpha: f64, best: &mut Candidate| -> Result<f64> {
            let c = eval(alpha)?;
            let v = c.decision.objective;
            if v > best.decision.objective {
                *best = c;
            }
            Ok(v)
        };
        let inv_phi = (crate::math::sqrt(5.0) - 1.0) / 2.0;
        let (mut a, mut b) = (grid[idx.saturating_sub(1)], grid[(idx + 1).min(n - 1)]);
        let mut x1 = b - inv_phi * (b - a);
        let mut x2 = a + inv_phi * (b - a);
        let mut f1 = probe(x1, &mut best)?;
        let mut f2 = probe(x2, &mut best)?;
        for _ in 0..24 {
            if f1 >= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - inv_phi * (b - a);
                f1 = probe(x1, &mut best)?;
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + inv_phi * (b - a);
                f2 = probe(x2, &mut best)?;
            }
        }
    }

    Ok(SlotSolution {
        decision: best.decision,
        relaxed: best.relaxed,
        trace: best.trace,
        inner_solves: stats.0,
        all_converged: stats.1,
        max_iterations: stats.2,
    })
}
