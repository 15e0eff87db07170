use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::kkt::{arrival_power, Delivery};
use super::{DualTrace, SlotProblem, SolverOptions, TraceRow};
use crate::error::{unit_interval, Result};
use crate::fading::NoiseModel;
use crate::rates::{broadcast_rates, harvest_unchecked, mac_arrivals, Powers};

/// Everything one relay contributes to the slot objective at a fixed `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelayTerms {
    pub tau: f64,
    pub g_sr: f64,
    pub g_rd: f64,
    pub noise: NoiseModel,
    pub p_max: f64,
    pub arrival_weight: f64,
    pub energy_value: f64,
    pub mac_sum_constraint: bool,
    pub room_a: f64,
    pub room_b: f64,
    pub backlog_a: f64,
    pub backlog_b: f64,
    /// Harvest actually kept by the battery this slot.
    pub stored: f64,
    /// Battery level after harvesting, i.e. the energy budget of the broadcast.
    pub available: f64,
    /// Largest relay power satisfying both `p_max` and `tau * p <= available`.
    pub power_bound: f64,
}

/// Optimal binary-selected solution of a single relay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct RelayOptimum {
    pub powers: Powers,
    pub value: f64,
    pub energy_price: f64,
    pub box_price: f64,
}

impl RelayTerms {
    /// Slot objective if this relay is selected with transmit powers `p`.
    pub fn value(&self, p: Powers) -> f64 {
        let arr = mac_arrivals(self.tau, p.p_s, p.p_d, self.g_sr, self.g_rd, self.noise, self.mac_sum_constraint);
        let del = broadcast_rates(self.tau, p.p_r, self.g_sr, self.g_rd, self.noise);
        let admitted = arr.r_ab.min(self.room_a) + arr.r_ba.min(self.room_b);
        let delivered = del.r_ab.min(self.backlog_a) + del.r_ba.min(self.backlog_b);
        self.arrival_weight * admitted + delivered + self.energy_value * (self.stored - self.tau * p.p_r)
    }

    /// Perspective `rho * value(q / rho)`, zero at `rho = 0`.
    pub fn perspective(&self, rho: f64, q: Powers) -> f64 {
        if rho <= 0.0 {
            return 0.0;
        }
        rho * self.value(Powers { p_s: q.p_s / rho, p_d: q.p_d / rho, p_r: q.p_r / rho })
    }

    /// Feasibility of the scaled powers `q` for weight `rho`.
    pub fn admits(&self, rho: f64, q: Powers) -> bool {
        let cap = rho * self.p_max;
        [q.p_s, q.p_d, q.p_r].iter().all(|&x| x >= 0.0 && x <= cap * (1.0 + 1e-12))
            && self.tau * q.p_r <= rho * self.available * (1.0 + 1e-12)
    }

    pub(crate) fn solve(&self) -> RelayOptimum {
        if self.tau <= 0.0 {
            let powers = Powers::default();
            return RelayOptimum { powers, value: self.value(powers), energy_price: 0.0, box_price: 0.0 };
        }
        let sigma2 = self.noise.sigma2();
        let (p_s, p_d) = if self.mac_sum_constraint {
            self.mac_arrival_powers()
        } else {
            (
                arrival_power(self.tau, self.g_sr, sigma2, self.room_a, self.p_max),
                arrival_power(self.tau, self.g_rd, sigma2, self.room_b, self.p_max),
            )
        };
        // S's data reaches D over R-D, D's data reaches S over S-R.
        let delivery = Delivery::new(self.tau, sigma2, [(self.g_rd, self.backlog_a), (self.g_sr, self.backlog_b)]);
        let energy_binds = self.power_bound < self.p_max;
        let opt = delivery.solve(self.energy_value, self.power_bound, energy_binds);
        let powers = Powers { p_s, p_d, p_r: opt.power };
        RelayOptimum { powers, value: self.value(powers), energy_price: opt.energy_price, box_price: opt.box_price }
    }

    fn admitted(&self, p_s: f64, p_d: f64) -> f64 {
        let arr = mac_arrivals(self.tau, p_s, p_d, self.g_sr, self.g_rd, self.noise, self.mac_sum_constraint);
        arr.r_ab.min(self.room_a) + arr.r_ba.min(self.room_b)
    }

    /// With the sum-rate cap the proportional scaling couples `p_s` and `p_d`
    /// and the admitted rate is no longer concave, so the pair is found by a
    /// coarse grid plus successive local zooms, seeded with the uncoupled
    /// water levels.
    fn mac_arrival_powers(&self) -> (f64, f64) {
        let sigma2 = self.noise.sigma2();
        let ws = arrival_power(self.tau, self.g_sr, sigma2, self.room_a, self.p_max);
        let wd = arrival_power(self.tau, self.g_rd, sigma2, self.room_b, self.p_max);
        let mut best = (0.0, 0.0);
        let mut best_val = self.admitted(0.0, 0.0);
        let consider = |ps: f64, pd: f64, best: &mut (f64, f64), best_val: &mut f64| {
            let v = self.admitted(ps, pd);
            if v > *best_val {
                *best_val = v;
                *best = (ps, pd);
            }
        };
        for (ps, pd) in [(ws, wd), (ws, 0.0), (0.0, wd), (self.p_max, self.p_max)] {
            consider(ps, pd, &mut best, &mut best_val);
        }
        const N: usize = 9;
        for i in 0..N {
            for j in 0..N {
                let ps = self.p_max * i as f64 / (N - 1) as f64;
                let pd = self.p_max * j as f64 / (N - 1) as f64;
                consider(ps, pd, &mut best, &mut best_val);
            }
        }
        let mut span = self.p_max / (N - 1) as f64;
        for _ in 0..12 {
            let centre = best;
            for i in -2i32..=2 {
                for j in -2i32..=2 {
                    let ps = (centre.0 + span * i as f64 / 2.0).clamp(0.0, self.p_max);
                    let pd = (centre.1 + span * j as f64 / 2.0).clamp(0.0, self.p_max);
                    consider(ps, pd, &mut best, &mut best_val);
                }
            }
            span /= 2.0;
        }
        best
    }
}

/// The convex program for one `alpha`: maximize `Σ_k rho_k f_k(q_k / rho_k)`
/// over the simplex with `0 <= q_k <= rho_k p_max` and
/// `tau q_{r,k} <= rho_k * available_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoupledProblem {
    pub alpha: f64,
    pub relays: Vec<RelayTerms>,
}

impl DecoupledProblem {
    pub fn objective(&self, rho: &[f64], q: &[Powers]) -> f64 {
        self.relays.iter().zip(rho).zip(q).map(|((t, &r), &qk)| t.perspective(r, qk)).sum()
    }

    pub fn is_feasible(&self, rho: &[f64], q: &[Powers]) -> bool {
        let sum: f64 = rho.iter().sum();
        rho.len() == self.relays.len()
            && q.len() == self.relays.len()
            && (sum - 1.0).abs() <= 1e-9
            && rho.iter().all(|&r| (0.0..=1.0).contains(&r))
            && self.relays.iter().zip(rho).zip(q).all(|((t, &r), &qk)| t.admits(r, qk))
    }
}

/// Builds the decoupled program for a fixed harvest fraction.
///
/// Harvesting happens before the broadcast and goes through the battery cap,
/// so the broadcast budget is `min(E + harvest, E_max)`.
pub fn relax_and_decouple(prob: &SlotProblem, alpha: f64) -> Result<DecoupledProblem> {
    unit_interval("time-switching fraction", alpha)?;
    prob.validate()?;
    let params = &prob.params;
    let tau = (1.0 - alpha) / 2.0;
    let relays = prob
        .relays
        .iter()
        .map(|r| {
            let harvest = harvest_unchecked(alpha, params.beacon_s, params.beacon_d, r.gains.sr, r.gains.rd, params.eta);
            let charged = r.state.battery.charge(harvest)?;
            let available = charged.battery.level();
            Ok(RelayTerms {
                tau,
                g_sr: r.gains.sr,
                g_rd: r.gains.rd,
                noise: params.noise,
                p_max: params.p_max,
                arrival_weight: params.arrival_weight,
                energy_value: params.energy_value,
                mac_sum_constraint: params.mac_sum_constraint,
                room_a: r.state.buf_a.room(),
                room_b: r.state.buf_b.room(),
                backlog_a: r.state.buf_a.level(),
                backlog_b: r.state.buf_b.level(),
                stored: charged.stored,
                available,
                power_bound: power_bound(tau, params.p_max, available),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DecoupledProblem { alpha, relays })
}

/// `min(p_max, available / tau)`, nudged down until `tau * p <= available`
/// holds in floating point.
pub(crate) fn power_bound(tau: f64, p_max: f64, available: f64) -> f64 {
    if tau <= 0.0 {
        return p_max;
    }
    let mut bound = p_max.min(available / tau);
    while bound > 0.0 && tau * bound > available {
        bound = bound.next_down();
    }
    bound.max(0.0)
}

/// Result of the relaxed program at one `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedDecision {
    pub alpha: f64,
    pub rho: Vec<f64>,
    /// Scaled powers `q_k = rho_k p_k`.
    pub scaled_powers: Vec<Powers>,
    /// Unscaled per-relay powers `p_k`.
    pub relay_powers: Vec<Powers>,
    /// `f_k(p_k)`: each relay's value if it were selected alone.
    pub relay_values: Vec<f64>,
    /// Energy-causality multipliers per relay (bits per joule).
    pub energy_prices: Vec<f64>,
    /// Primal objective of the final iterate.
    pub objective: f64,
    /// Value of the simplex dual at the final multiplier, an upper bound on
    /// every feasible point of the relaxed (and hence the binary) program.
    pub dual_bound: f64,
}

/// Euclidean projection onto the probability simplex. Returns the projection
/// and the shift `theta` with `x_k = max(y_k - theta, 0)`.
pub(crate) fn project_simplex(y: &[f64]) -> (Vec<f64>, f64) {
    let mut sorted: Vec<f64> = y.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &v) in sorted.iter().enumerate() {
        cumulative += v;
        let t = (cumulative - 1.0) / (i + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        }
    }
    let x: Vec<f64> = y.iter().map(|&v| (v - theta).max(0.0)).collect();
    // renormalize away rounding drift
    let s: f64 = x.iter().sum();
    (x.iter().map(|&v| v / s).collect(), theta)
}

/// Solves the decoupled program.
///
/// KKT stationarity in `q_k` gives `q_k = rho_k p_k` with `p_k` the water
/// level of relay `k` under its energy multiplier, so the scaled powers
/// follow the weights. The weights take projected-gradient steps
/// `rho <- P(rho + s * grad)` with `grad_k = f_k(p_k)` and
/// `s = step_scale / spread` over the support; the simplex multiplier is
/// read off the projection shift as `theta / s`.
///
/// Stops when the objective improves by less than `delta`; the trace carries
/// `converged = false` when the iteration cap is hit first.
pub fn solve_fixed_alpha(sub: &DecoupledProblem, opts: &SolverOptions) -> (RelaxedDecision, DualTrace) {
    let k = sub.relays.len();
    let optima: Vec<_> = sub.relays.iter().map(RelayTerms::solve).collect();
    let values: Vec<f64> = optima.iter().map(|o| o.value).collect();
    let energy_prices: Vec<f64> = optima.iter().map(|o| o.energy_price).collect();
    let scale = |rho: &[f64]| -> Vec<Powers> {
        optima
            .iter()
            .zip(rho)
            .map(|(o, &r)| Powers { p_s: r * o.powers.p_s, p_d: r * o.powers.p_d, p_r: r * o.powers.p_r })
            .collect()
    };

    let mut names = Vec::with_capacity(k + 1);
    names.push(String::from("mu_simplex"));
    names.extend((1..=k).map(|i| format!("lambda_energy_{i}")));
    let mut trace = DualTrace { multiplier_names: names, rows: Vec::new(), converged: false };

    let mut rho = alloc::vec![1.0 / k as f64; k];
    let mut q = scale(&rho);
    let mut objective = sub.objective(&rho, &q);
    let mut mu = values.iter().copied().fold(f64::MIN, f64::max);

    for iter in 1..=opts.max_iterations {
        let (hi, lo) = rho
            .iter()
            .zip(&values)
            .filter(|(&r, _)| r > 0.0)
            .fold((f64::MIN, f64::MAX), |(hi, lo), (_, &v)| (hi.max(v), lo.min(v)));
        let spread = hi - lo;
        let mut next_rho = rho.clone();
        if spread > 0.0 {
            let step = opts.step_scale / spread;
            let y: Vec<f64> = rho.iter().zip(&values).map(|(&r, &v)| r + step * v).collect();
            let (projected, theta) = project_simplex(&y);
            next_rho = projected;
            mu = theta / step;
        } else {
            mu = hi;
        }
        let next_q = scale(&next_rho);
        let next_objective = sub.objective(&next_rho, &next_q);
        // Only accept ascent steps; rounding can otherwise dip by an ulp.
        if next_objective >= objective {
            rho = next_rho;
            q = next_q;
        }
        let new_objective = objective.max(next_objective);
        let change = new_objective - objective;
        objective = new_objective;

        let mut multipliers = Vec::with_capacity(k + 1);
        multipliers.push(mu);
        multipliers.extend_from_slice(&energy_prices);
        trace.rows.push(TraceRow { iter, objective, change, multipliers });
        if change < opts.delta {
            trace.converged = true;
            break;
        }
    }

    // D(mu) = mu + Σ_k max(0, f_k - mu) over rho in the unit box.
    let dual_bound = mu + values.iter().map(|&v| (v - mu).max(0.0)).sum::<f64>();
    let relaxed = RelaxedDecision {
        alpha: sub.alpha,
        rho,
        scaled_powers: q,
        relay_powers: optima.iter().map(|o| o.powers).collect(),
        relay_values: values,
        energy_prices,
        objective,
        dual_bound,
    };
    (relaxed, trace)
}
