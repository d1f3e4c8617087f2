//! Per-area inner maximisation of the backup objective.
//!
//! The pricing decision decomposes by area because the logit denominator
//! only couples slots of the same area. With `p[s]` the purchase mass of an
//! open slot and `p0` the residual no-purchase mass, the area objective
//!
//! ```text
//!   phi(p) = sum_s p[s] * (gains[s] + kappa * d[s](p)),
//!   d[s](p) = (ln(p[s]/p0) - utilities[s]) / beta_d,
//! ```
//!
//! is concave on the convex feasible region (the image of the price box
//! under the logit map), with `kappa = 1` for the pricing backup and
//! `kappa = 0` for the linear objectives of the hitting-time recursion.
//!
//! The maximiser runs gradient ascent on `p` with an adaptive step and a
//! backtracking line search; infeasible trial points are pulled back by
//! inverting to prices, clamping to the price band and mapping forward
//! again, so every iterate is exactly feasible. Ascent alone cannot push
//! the interior gradient below ~1e-6 (objective improvements drown in f64
//! granularity first), so deterministic closed-form candidates are merged
//! in afterwards: the equal-markup stationary point for the pricing
//! objective, and the full set of threshold decisions for linear
//! objectives, for which they are provably optimal.

use alloc::vec;
use alloc::vec::Vec;

use crate::num;
use crate::tolerances;

/// One area's slice of the inner maximisation, restricted to open slots.
#[derive(Debug, Clone)]
pub(crate) struct AreaSubproblem<'a> {
    /// Arrival mass routed to the area: `lambda * area_prob[a]`.
    pub weight: f64,
    pub beta_d: f64,
    pub d_min: f64,
    pub d_max: f64,
    /// `beta_c + beta_slot[s]` per open slot.
    pub utilities: &'a [f64],
    /// Payoff collected per sale on each open slot, excluding the price.
    pub gains: &'a [f64],
    /// Whether the charged price itself is part of the payoff.
    pub price_in_payoff: bool,
}

/// Maximiser output for one area.
#[derive(Debug, Clone)]
pub(crate) struct AreaSolution {
    /// Optimal price per open slot.
    pub prices: Vec<f64>,
    /// Purchase mass per open slot (scaled by the area weight).
    pub masses: Vec<f64>,
    /// Residual no-purchase mass.
    pub no_purchase: f64,
    /// Objective value `phi` at the optimum.
    pub value: f64,
}

impl<'a> AreaSubproblem<'a> {
    fn kappa(&self) -> f64 {
        if self.price_in_payoff {
            1.0
        } else {
            0.0
        }
    }

    /// Exact objective at the given prices (always feasible by clamping).
    pub(crate) fn evaluate(&self, prices: &[f64]) -> AreaSolution {
        let n = self.utilities.len();
        let mut exponents = vec![0.0f64; n];
        let mut shift = 0.0f64;
        for s in 0..n {
            exponents[s] = self.utilities[s] + self.beta_d * prices[s];
            shift = shift.max(exponents[s]);
        }
        let mut denom = num::exp(-shift);
        for &v in &exponents {
            denom += num::exp(v - shift);
        }
        let mut masses = vec![0.0f64; n];
        let mut value = 0.0f64;
        let kappa = self.kappa();
        for s in 0..n {
            let mass = self.weight * num::exp(exponents[s] - shift) / denom;
            masses[s] = mass;
            value += mass * (self.gains[s] + kappa * prices[s]);
        }
        let no_purchase = self.weight * num::exp(-shift) / denom;
        AreaSolution {
            prices: prices.to_vec(),
            masses,
            no_purchase,
            value,
        }
    }

    /// p-space gradient of `phi` at the current solution.
    fn gradient(&self, at: &AreaSolution, out: &mut [f64]) {
        let kappa = self.kappa();
        let coupling = if self.price_in_payoff {
            self.weight / at.no_purchase / self.beta_d
        } else {
            0.0
        };
        for s in 0..out.len() {
            out[s] = self.gains[s] + kappa * at.prices[s] + coupling;
        }
    }

    /// Takes `p + step * grad`, pulls it back to the feasible region and
    /// evaluates there.
    fn step_and_retract(&self, at: &AreaSolution, grad: &[f64], step: f64) -> AreaSolution {
        let n = grad.len();
        let floor = self.weight * 1e-18;
        let mut trial = vec![0.0f64; n];
        let mut sum = 0.0f64;
        for s in 0..n {
            trial[s] = (at.masses[s] + step * grad[s]).max(floor);
            sum += trial[s];
        }
        if sum >= self.weight * (1.0 - 1e-12) {
            let scale = self.weight * (1.0 - 1e-9) / sum;
            for t in trial.iter_mut() {
                *t *= scale;
            }
            sum = self.weight * (1.0 - 1e-9);
        }
        let p0 = self.weight - sum;
        let mut prices = vec![0.0f64; n];
        for s in 0..n {
            let d = (num::ln(trial[s] / p0) - self.utilities[s]) / self.beta_d;
            prices[s] = d.clamp(self.d_min, self.d_max);
        }
        self.evaluate(&prices)
    }

    /// Stationarity residual of the price ladder `d[s] = clamp(theta -
    /// gains[s])` at markup level `theta`, for a fixed clamp pattern
    /// (`lo` slots pinned at the floor, `hi` slots at the cap, the rest
    /// following `theta` freely).
    ///
    /// First-order optimality makes every free slot's adjusted markup
    /// `gains[s] + d[s]` equal `theta`, with `theta = w + gbar`: `w` is the
    /// opportunity value `-m / (beta_d * p0)` and `gbar` the mass-weighted
    /// mean excess markup of the clamped slots. The residual
    /// `theta - w - gbar` is therefore zero exactly at stationary points of
    /// the pattern.
    fn ladder_residual(&self, prices: &[f64], clamped: &[bool], theta: f64) -> f64 {
        let n = prices.len();
        let mut shift = 0.0f64;
        let mut exponents = vec![0.0f64; n];
        for s in 0..n {
            exponents[s] = self.utilities[s] + self.beta_d * prices[s];
            shift = shift.max(exponents[s]);
        }
        let mut denom = num::exp(-shift);
        for &v in &exponents {
            denom += num::exp(v - shift);
        }
        // w = -(1/beta_d) * (sum exp + 1); compute the unshifted factor.
        let factor = denom * num::exp(shift);
        let w = -factor / self.beta_d;
        let p0 = self.weight / factor;
        let mut clamped_mass = 0.0f64;
        let mut clamped_excess = 0.0f64;
        for s in 0..n {
            if clamped[s] {
                let mass = self.weight * num::exp(exponents[s] - shift) / denom;
                clamped_mass += mass;
                clamped_excess += mass * (self.gains[s] + prices[s] - w);
            }
        }
        let gbar = clamped_excess / (p0 + clamped_mass);
        theta - w - gbar
    }

    /// Exact stationary candidates of the pricing objective. The optimal
    /// prices follow the ladder `clamp(theta - gains[s])`, so candidates
    /// are: every all-clamped threshold decision, the stationary `theta`
    /// of every contiguous clamp pattern (found by bisection over the
    /// pattern's markup interval), and the pattern cross-over levels.
    fn stationary_candidates(&self) -> Vec<AreaSolution> {
        let n = self.utilities.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            self.gains[b]
                .partial_cmp(&self.gains[a])
                .expect("gains are finite")
                .then(a.cmp(&b))
        });
        let mut out = Vec::new();

        // All-clamped threshold decisions: the k most valuable slots at the
        // floor price, the rest at the cap.
        for cut in 0..=n {
            let mut prices = vec![self.d_max; n];
            for &s in &order[..cut] {
                prices[s] = self.d_min;
            }
            out.push(self.evaluate(&prices));
        }

        let ladder = |theta: f64| -> Vec<f64> {
            (0..n)
                .map(|s| (theta - self.gains[s]).clamp(self.d_min, self.d_max))
                .collect()
        };

        // Pattern cross-over levels, where a slot enters or leaves a clamp.
        for s in 0..n {
            for base in [self.d_min, self.d_max] {
                out.push(self.evaluate(&ladder(base + self.gains[s])));
            }
        }

        // Mixed patterns: prefix `a` of the ladder pinned low, suffix `b`
        // pinned high, at least one slot free in between.
        for a in 0..n {
            for b in 0..(n - a) {
                let free = &order[a..(n - b)];
                let mut lo = self.d_min + self.gains[free[0]];
                let mut hi = self.d_max + self.gains[free[free.len() - 1]];
                if a > 0 {
                    hi = hi.min(self.d_min + self.gains[order[a - 1]]);
                }
                if b > 0 {
                    lo = lo.max(self.d_max + self.gains[order[n - b]]);
                }
                if lo > hi {
                    continue;
                }
                let mut clamped = vec![true; n];
                for &s in free {
                    clamped[s] = false;
                }
                let residual =
                    |theta: f64| self.ladder_residual(&ladder(theta), &clamped, theta);
                let (mut rlo, mut rhi) = (residual(lo), residual(hi));
                if rlo == 0.0 {
                    out.push(self.evaluate(&ladder(lo)));
                    continue;
                }
                if rhi == 0.0 {
                    out.push(self.evaluate(&ladder(hi)));
                    continue;
                }
                if rlo.signum() == rhi.signum() {
                    continue;
                }
                let (mut tlo, mut thi) = (lo, hi);
                for _ in 0..200 {
                    let mid = 0.5 * (tlo + thi);
                    let rmid = residual(mid);
                    if rmid == 0.0 {
                        tlo = mid;
                        thi = mid;
                        break;
                    }
                    if rmid.signum() == rlo.signum() {
                        tlo = mid;
                        rlo = rmid;
                    } else {
                        thi = mid;
                        rhi = rmid;
                    }
                    if thi - tlo <= 1e-15 * thi.abs().max(1.0) {
                        break;
                    }
                }
                let _ = rhi;
                out.push(self.evaluate(&ladder(0.5 * (tlo + thi))));
            }
        }
        out
    }

    /// For linear objectives the optimum is a threshold decision: slots with
    /// payoff above the optimal value get the lowest price, the rest the
    /// highest. Scanning every prefix of the payoff-sorted slots covers all
    /// such decisions.
    fn threshold_candidates(&self) -> Vec<AreaSolution> {
        let n = self.utilities.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            self.gains[b]
                .partial_cmp(&self.gains[a])
                .expect("gains are finite")
                .then(a.cmp(&b))
        });
        let mut out = Vec::with_capacity(n + 1);
        for cut in 0..=n {
            let mut prices = vec![self.d_max; n];
            for &s in &order[..cut] {
                prices[s] = self.d_min;
            }
            out.push(self.evaluate(&prices));
        }
        out
    }
}

/// `true` when `a` is lexicographically smaller than `b`.
fn lex_smaller(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b.iter()) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

/// Maximises one area's objective; deterministic for identical inputs.
/// Equal-value maximisers resolve to the lexicographically smallest price
/// vector among the candidates considered.
pub(crate) fn maximize_area(sub: &AreaSubproblem<'_>) -> AreaSolution {
    let n = sub.utilities.len();
    let midpoint = 0.5 * (sub.d_min + sub.d_max);
    if n == 0 || sub.weight == 0.0 {
        return AreaSolution {
            prices: vec![midpoint; n],
            masses: vec![0.0; n],
            no_purchase: sub.weight,
            value: 0.0,
        };
    }

    let mut best = sub.evaluate(&vec![midpoint; n]);

    // Ascent phase.
    let mut grad = vec![0.0f64; n];
    let mut step = 1.0f64;
    for _ in 0..tolerances::INNER_MAX_ITERS {
        sub.gradient(&best, &mut grad);
        step = (step * 2.0).min(1e8);
        let mut improvement = 0.0f64;
        let mut accepted = false;
        while step >= 1e-18 {
            let trial = sub.step_and_retract(&best, &grad, step);
            if trial.value > best.value {
                improvement = trial.value - best.value;
                best = trial;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted || improvement < tolerances::INNER_IMPROVEMENT {
            break;
        }
    }

    // Structured candidates sharpen the ascent result to solver precision.
    let candidates = if sub.price_in_payoff {
        sub.stationary_candidates()
    } else {
        sub.threshold_candidates()
    };
    for cand in candidates {
        if cand.value > best.value
            || (cand.value == best.value && lex_smaller(&cand.prices, &best.prices))
        {
            best = cand;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_sub<'a>(utilities: &'a [f64], gains: &'a [f64], price: bool) -> AreaSubproblem<'a> {
        AreaSubproblem {
            weight: 0.5,
            beta_d: -1.0,
            d_min: 0.0,
            d_max: 2.0,
            utilities,
            gains,
            price_in_payoff: price,
        }
    }

    /// Dense grid search over the price box, the oracle for the maximiser.
    fn grid_search(sub: &AreaSubproblem<'_>, points: usize) -> f64 {
        let n = sub.utilities.len();
        assert!(n <= 2);
        let coord = |i: usize| {
            sub.d_min + (sub.d_max - sub.d_min) * (i as f64) / ((points - 1) as f64)
        };
        let mut best = f64::NEG_INFINITY;
        if n == 1 {
            for i in 0..points {
                best = best.max(sub.evaluate(&[coord(i)]).value);
            }
        } else {
            for i in 0..points {
                for j in 0..points {
                    best = best.max(sub.evaluate(&[coord(i), coord(j)]).value);
                }
            }
        }
        best
    }

    #[test]
    fn matches_grid_search_on_pricing_objectives() {
        let cases: [([f64; 2], [f64; 2]); 4] = [
            ([2.0, 0.0], [0.0, -1.0]),
            ([2.0, 0.0], [1.5, 1.2]),
            ([0.5, -0.5], [-2.0, 3.0]),
            ([1.0, 1.0], [0.3, 0.3]),
        ];
        for (utilities, gains) in &cases {
            let sub = example_sub(utilities, gains, true);
            let sol = maximize_area(&sub);
            let oracle = grid_search(&sub, 801);
            assert!(
                sol.value >= oracle - 1e-9,
                "solver {} fell below grid {}",
                sol.value,
                oracle
            );
            assert!(sol.value <= oracle + 1e-5, "solver overshoots the oracle");
        }
    }

    #[test]
    fn matches_grid_search_on_linear_objectives() {
        let cases: [([f64; 2], [f64; 2]); 3] = [
            ([2.0, 0.0], [4.0, 1.0]),
            ([2.0, 0.0], [-1.0, -2.0]),
            ([0.0, 0.0], [2.0, -2.0]),
        ];
        for (utilities, gains) in &cases {
            let sub = example_sub(utilities, gains, false);
            let sol = maximize_area(&sub);
            let oracle = grid_search(&sub, 2001);
            assert!((sol.value - oracle).abs() < 1e-6);
            assert!(sol.value >= oracle - 1e-12);
        }
    }

    #[test]
    fn interior_optimum_has_vanishing_gradient() {
        // Wide price band keeps the maximiser strictly interior.
        let utilities = [2.0, 0.0];
        let gains = [0.0, -1.0];
        let sub = AreaSubproblem {
            weight: 0.5,
            beta_d: -1.0,
            d_min: 0.0,
            d_max: 8.0,
            utilities: &utilities,
            gains: &gains,
            price_in_payoff: true,
        };
        let sol = maximize_area(&sub);
        for d in &sol.prices {
            assert!(*d > sub.d_min + 1e-6 && *d < sub.d_max - 1e-6);
        }
        let mut grad = vec![0.0; 2];
        sub.gradient(&sol, &mut grad);
        for g in grad {
            assert!(g.abs() < 1e-6, "interior gradient {g} should vanish");
        }
    }

    #[test]
    fn zero_weight_area_is_inert() {
        let utilities = [1.0];
        let gains = [5.0];
        let mut sub = example_sub(&utilities, &gains, true);
        sub.weight = 0.0;
        let sol = maximize_area(&sub);
        assert_eq!(sol.value, 0.0);
        assert_eq!(sol.prices, vec![1.0]);
        assert_eq!(sol.masses, vec![0.0]);
    }

    #[test]
    fn deterministic_across_calls() {
        let utilities = [2.0, 0.0];
        let gains = [0.7, -0.4];
        let sub = example_sub(&utilities, &gains, true);
        let a = maximize_area(&sub);
        let b = maximize_area(&sub);
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.prices, b.prices);
    }
}
