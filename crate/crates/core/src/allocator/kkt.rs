//! Stationarity conditions for the per-relay powers.
//!
//! Every rate term has the form `min(tau * log2(1 + g p / sigma^2), cap)`: a
//! concave log until it saturates at `p_sat = sigma^2 (2^(cap/tau) - 1) / g`,
//! flat afterwards. With `a = sigma^2 / g` the marginal rate of an
//! unsaturated term is `tau / (ln 2 (a + p))`.

use crate::math::{exp2, sqrt, LN_2};

/// Power at which `tau * log2(1 + p / a)` reaches `cap`.
fn saturation_power(tau: f64, a: f64, cap: f64) -> f64 {
    a * (exp2(cap / tau) - 1.0)
}

/// Smallest power that maximizes `min(tau log2(1 + g p / sigma2), cap)` under
/// `p <= p_max`. Power is free for the endpoints, so the box is the only
/// constraint and the solution is its water level capped at `p_max`.
pub(crate) fn arrival_power(tau: f64, gain: f64, sigma2: f64, cap: f64, p_max: f64) -> f64 {
    if tau <= 0.0 || gain <= 0.0 || cap <= 0.0 {
        return 0.0;
    }
    saturation_power(tau, sigma2 / gain, cap).min(p_max)
}

#[derive(Debug, Clone, Copy)]
struct Term {
    a: f64,
    saturation: f64,
}

/// Broadcast part of one relay's objective: both endpoints decode the same
/// transmission over their own link, each capped by the relay's backlog in
/// that direction.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Delivery {
    tau: f64,
    // active terms sorted by saturation power
    terms: [Term; 2],
    active: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct DeliveryOptimum {
    pub power: f64,
    /// Shadow price of the energy-causality constraint (bits per joule).
    pub energy_price: f64,
    /// Shadow price of the `p_max` box.
    pub box_price: f64,
}

impl Delivery {
    /// `links` holds `(gain, backlog)` for each direction.
    pub(crate) fn new(tau: f64, sigma2: f64, links: [(f64, f64); 2]) -> Self {
        let mut terms = [Term { a: 0.0, saturation: 0.0 }; 2];
        let mut active = 0;
        if tau > 0.0 {
            for (gain, backlog) in links {
                if gain > 0.0 && backlog > 0.0 {
                    let a = sigma2 / gain;
                    terms[active] = Term { a, saturation: saturation_power(tau, a, backlog) };
                    active += 1;
                }
            }
        }
        if active == 2 && terms[1].saturation < terms[0].saturation {
            terms.swap(0, 1);
        }
        Self { tau, terms, active }
    }

    fn terms(&self) -> &[Term] {
        &self.terms[..self.active]
    }

    /// Right derivative of the delivered rate at `p`.
    pub(crate) fn marginal(&self, p: f64) -> f64 {
        self.terms()
            .iter()
            .filter(|t| p < t.saturation)
            .map(|t| self.tau / (LN_2 * (t.a + p)))
            .sum()
    }

    /// Stationary point of `Σ_{i in set} tau log2(1 + p/a_i) - price p` for
    /// the terms `set` (one or two), i.e. the water level `kappa = tau / (ln2 price)`.
    fn water_level(&self, set: &[Term], price: f64) -> f64 {
        let kappa = self.tau / (LN_2 * price);
        match set {
            [t] => kappa - t.a,
            [t1, t2] => {
                let half_diff = (t1.a - t2.a) / 2.0;
                kappa - (t1.a + t2.a) / 2.0 + sqrt(half_diff * half_diff + kappa * kappa)
            }
            _ => 0.0,
        }
    }

    /// Smallest maximizer of `D(p) - price * p` over `p >= 0`.
    pub(crate) fn best_response(&self, price: f64) -> f64 {
        let terms = self.terms();
        if terms.is_empty() {
            return 0.0;
        }
        let full = terms[terms.len() - 1].saturation;
        if price <= 0.0 {
            return full;
        }
        let mut lower = 0.0;
        for i in 0..terms.len() {
            let set = &terms[i..];
            let upper = terms[i].saturation;
            let p = self.water_level(set, price);
            if p <= lower {
                return lower;
            }
            if p <= upper {
                return p;
            }
            lower = upper;
        }
        lower
    }

    /// Maximizes `D(p) - energy_value * tau * p` subject to `p <= bound`.
    ///
    /// If the unconstrained best response is feasible the multiplier is zero.
    /// Otherwise the multiplier `lambda` of the binding constraint is located
    /// by bisection on `best_response(tau (energy_value + lambda)) = bound`.
    pub(crate) fn solve(&self, energy_value: f64, bound: f64, energy_binds: bool) -> DeliveryOptimum {
        let base = self.tau * energy_value;
        let free = self.best_response(base);
        if free <= bound || self.tau <= 0.0 {
            return DeliveryOptimum { power: free.min(bound).max(0.0), energy_price: 0.0, box_price: 0.0 };
        }
        // At price D'(0+) the best response is zero.
        let mut lo = 0.0;
        let mut hi = (self.marginal(0.0) / self.tau - energy_value).max(0.0);
        for _ in 0..200 {
            if hi - lo <= 1e-14 * hi.max(1.0) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.best_response(self.tau * (energy_value + mid)) > bound {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (energy_price, box_price) = if energy_binds { (hi, 0.0) } else { (0.0, hi * self.tau) };
        DeliveryOptimum { power: bound, energy_price, box_price }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SIGMA2: f64 = 0.1;

    fn rate(tau: f64, g: f64, p: f64, cap: f64) -> f64 {
        (tau * (1.0 + g * p / SIGMA2).log2()).min(cap)
    }

    #[test]
    fn arrival_power_reaches_cap_or_box() {
        let p = arrival_power(0.5, 1.0, SIGMA2, 0.5, 10.0);
        assert!((rate(0.5, 1.0, p, f64::INFINITY) - 0.5).abs() < 1e-12);
        assert_eq!(arrival_power(0.5, 1.0, SIGMA2, 100.0, 1.0), 1.0);
        assert_eq!(arrival_power(0.0, 1.0, SIGMA2, 1.0, 1.0), 0.0);
        assert_eq!(arrival_power(0.5, 0.0, SIGMA2, 1.0, 1.0), 0.0);
    }

    #[test]
    fn single_term_water_level_matches_closed_form() {
        let (tau, g) = (0.4, 2.0);
        let d = Delivery::new(tau, SIGMA2, [(g, 100.0), (0.0, 5.0)]);
        let price = 0.3;
        let expected = tau / (LN_2 * price) - SIGMA2 / g;
        assert!((d.best_response(price) - expected).abs() < 1e-12);
        assert!((d.marginal(expected) - price).abs() < 1e-12);
    }

    #[test]
    fn best_response_maximizes_penalized_rate() {
        // Brute-force scan of D(p) - price p.
        let (tau, price) = (0.35, 0.25);
        let links = [(1.7, 0.6), (0.4, 0.9)];
        let d = Delivery::new(tau, SIGMA2, links);
        let obj = |p: f64| rate(tau, links[0].0, p, links[0].1) + rate(tau, links[1].0, p, links[1].1) - price * p;
        let p = d.best_response(price);
        let best_scan = (0..=200_000).map(|i| obj(i as f64 * 1e-4)).fold(f64::MIN, f64::max);
        assert!(obj(p) >= best_scan - 1e-9, "{} vs {}", obj(p), best_scan);
    }

    #[test]
    fn saturating_response_at_zero_price() {
        let d = Delivery::new(0.5, SIGMA2, [(1.0, 0.5), (2.0, 0.25)]);
        let p = d.best_response(0.0);
        assert!((rate(0.5, 1.0, p, f64::INFINITY) - 0.5).abs() < 1e-12);
        assert_eq!(d.marginal(p), 0.0);
    }

    #[test]
    fn bisection_finds_binding_multiplier() {
        let d = Delivery::new(0.5, SIGMA2, [(1.0, 5.0), (1.0, 5.0)]);
        let opt = d.solve(0.0, 0.3, true);
        assert_eq!(opt.power, 0.3);
        // The multiplier is the marginal rate per joule at the bound.
        let expected = d.marginal(0.3) / 0.5;
        assert!((opt.energy_price - expected).abs() < 1e-9 * expected);
        assert_eq!(opt.box_price, 0.0);
    }

    #[test]
    fn slack_constraint_has_zero_multiplier() {
        let d = Delivery::new(0.5, SIGMA2, [(1.0, 0.1), (1.0, 0.1)]);
        let opt = d.solve(0.0, 10.0, true);
        assert!(opt.power < 10.0);
        assert_eq!(opt.energy_price, 0.0);
    }

    #[test]
    fn empty_backlog_needs_no_power() {
        let d = Delivery::new(0.5, SIGMA2, [(1.0, 0.0), (1.0, 0.0)]);
        assert_eq!(d.solve(0.0, 1.0, true).power, 0.0);
    }
}
