//! Fixed-point and contraction analysis of the backup operator.
//!
//! The backup operator has a unique fixed point with a closed form: charge
//! the price cap everywhere, collect `d_max + r` per remaining unit of
//! capacity, and pay the full-lattice delivery cost at the end. How fast
//! backward induction approaches it is governed by an auxiliary
//! hitting-time recursion: `v*(x)` is the worst-case expected number of
//! steps (plus one) to absorb at full capacity, and the contraction modulus
//! `rho = max (v*(x) - 1) / v*(x)` bounds every one-step shrink factor in
//! the `v*`-weighted sup-norm.
//!
//! Because every transition adds an order, the hitting-time system is
//! triangular in the total order count and solves exactly in one sweep:
//! states are visited by descending order count, and each state maximises
//! the self-consistent ratio `(1 + sum_s p_s v*(x+1_s)) / sum_s p_s` over
//! the admissible prices, which the ratio (Dinkelbach) iteration reduces to
//! a short sequence of the same per-area subproblems the backup solves.

use alloc::vec;
use alloc::vec::Vec;

use crate::dp::{apply_operator, solve_horizon, ValueFunction};
use crate::error::{Error, Result};
use crate::grid::StateGrid;
use crate::model::{PriceVector, ProblemInstance};
use crate::optim::{maximize_area, AreaSubproblem};
use crate::tolerances;
use crate::concavity::{extensibility_margin, lambda_bound};

/// Solution of the auxiliary hitting-time recursion together with the
/// contraction modulus it certifies.
#[derive(Debug, Clone)]
pub struct ContractionCertificate {
    v_star: Vec<f64>,
    rho: f64,
    ratios: Vec<f64>,
}

impl ContractionCertificate {
    /// Hitting-time value of a state; at least 1, exactly 1 at capacity.
    pub fn v_star(&self, state: usize) -> f64 {
        self.v_star[state]
    }

    pub fn v_star_table(&self) -> &[f64] {
        &self.v_star
    }

    /// Contraction modulus in `[0, 1)`.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Per-state ratios `(v*(x) - 1) / v*(x)` whose maximum is `rho`.
    pub fn ratios(&self) -> &[f64] {
        &self.ratios
    }

    /// Weighted sup-norm `max |V(x)| / v*(x)`.
    pub fn weighted_norm(&self, values: &ValueFunction) -> f64 {
        values
            .as_slice()
            .iter()
            .zip(self.v_star.iter())
            .map(|(v, w)| v.abs() / w)
            .fold(0.0, f64::max)
    }

    /// Weighted sup-norm of the difference of two tables.
    pub fn weighted_distance(&self, a: &ValueFunction, b: &ValueFunction) -> f64 {
        a.as_slice()
            .iter()
            .zip(b.as_slice().iter())
            .zip(self.v_star.iter())
            .map(|((x, y), w)| (x - y).abs() / w)
            .fold(0.0, f64::max)
    }
}

/// One entry of the running contraction-ratio series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioPoint {
    pub t: u32,
    pub rho_t: f64,
}

/// Distance from the fixed point at one time step, in both norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistancePoint {
    pub t: u32,
    pub weighted: f64,
    pub sup: f64,
}

/// Worst-case extensibility margin of the value table at one time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonPoint {
    pub t: u32,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    /// The hyperplane case: the inequality holds with equality regardless
    /// of the arrival rate, so no finite bound is implied.
    InconclusiveSatisfied,
}

/// Concave extensibility of the negated cost table.
#[derive(Debug, Clone)]
pub struct CostConcavityCheck {
    pub status: CheckStatus,
    pub margin: f64,
    /// State achieving the worst margin, when any state is enclosable.
    pub witness_state: Option<usize>,
}

/// Marginal delivery cost against the maximum marginal profit.
#[derive(Debug, Clone)]
pub struct MarginalCostCheck {
    pub status: CheckStatus,
    pub max_marginal_cost: f64,
    pub bound: f64,
    /// `(state, area, slot)` achieving the largest marginal cost.
    pub witness: Option<(usize, usize, usize)>,
}

/// Arrival-rate bounds implied by the strict concavity margins of the
/// solved trajectory.
#[derive(Debug, Clone)]
pub struct ArrivalRateCheck {
    pub status: CheckStatus,
    pub lambda: f64,
    /// Smallest finite bound across the horizon, `+inf` when none is finite.
    pub min_bound: f64,
    pub bounds: Vec<(u32, f64)>,
}

#[derive(Debug, Clone)]
pub struct AssumptionReport {
    pub cost_concavity: CostConcavityCheck,
    pub marginal_cost: MarginalCostCheck,
    pub arrival_rate: ArrivalRateCheck,
}

/// Aggregate analysis artefacts of one instance.
#[derive(Debug, Clone)]
pub struct AnalysisReport {
    pub rho: f64,
    pub fixed_point_residual: f64,
    pub fixed_point_residual_weighted: f64,
    pub ratio_series: Vec<RatioPoint>,
    pub distance_series: Vec<DistancePoint>,
    pub epsilon_series: Vec<EpsilonPoint>,
    pub assumptions: AssumptionReport,
}

/// Closed form of the operator's unique fixed point:
/// `(d_max + r) * sum(capacity - x) - C(capacity)`. Labelled `t = 0`, below
/// every horizon step.
pub fn fixed_point(inst: &ProblemInstance, grid: &StateGrid) -> Result<ValueFunction> {
    let full = grid.capacity().to_vec();
    let full_cost = inst.cost.evaluate(grid, &full);
    if !full_cost.is_finite() {
        return Err(Error::InfiniteCost {
            state: grid.full_state_index(),
        });
    }
    let markup = inst.d_max + inst.r;
    let total_capacity = grid.total_capacity() as f64;
    let mut values = vec![0.0f64; grid.state_count()];
    for idx in 0..grid.state_count() {
        let remaining = total_capacity - grid.state_sum(idx) as f64;
        values[idx] = markup * remaining - full_cost;
    }
    ValueFunction::new(0, values)
}

/// Sup-norm residual of the fixed point under one backup; zero in theory.
pub fn fixed_point_residual(inst: &ProblemInstance, grid: &StateGrid) -> Result<f64> {
    let v_star = fixed_point(inst, grid)?;
    let image = apply_operator(inst, grid, &v_star)?;
    Ok(image.sup_distance(&v_star))
}

/// Solves the auxiliary hitting-time recursion by descending induction on
/// the total order count and derives the contraction modulus.
pub fn auxiliary_dp(inst: &ProblemInstance, grid: &StateGrid) -> Result<ContractionCertificate> {
    let count = grid.state_count();
    let mut order: Vec<usize> = (0..count).collect();
    order.sort_by_key(|&idx| (core::cmp::Reverse(grid.state_sum(idx)), idx));

    let mut v = vec![0.0f64; count];
    let mut open_pairs: Vec<(usize, usize)> = Vec::new(); // (pair, successor)
    let mut utilities: Vec<f64> = Vec::new();
    let mut gains: Vec<f64> = Vec::new();

    for &idx in &order {
        if idx == grid.full_state_index() {
            v[idx] = 1.0;
            continue;
        }
        open_pairs.clear();
        open_pairs.extend(grid.successors(idx));

        // One ratio-improvement iteration: maximise sum_s p_s (v_succ - eta)
        // area by area, then move eta to the ratio at the maximiser.
        let mut eta = f64::NAN;
        for iteration in 0..200 {
            let mut mass = 0.0f64;
            let mut mass_value = 0.0f64;
            for area in 0..inst.num_areas {
                if inst.arrival_weight(area) == 0.0 {
                    continue;
                }
                utilities.clear();
                gains.clear();
                let mut slots = 0usize;
                let mut local: Vec<usize> = Vec::new();
                for &(pair, succ) in &open_pairs {
                    if pair / inst.num_slots == area {
                        let slot = pair % inst.num_slots;
                        utilities.push(inst.utility(slot));
                        gains.push(if iteration == 0 {
                            0.0 // placeholder; first pass uses d_min directly
                        } else {
                            v[succ] - eta
                        });
                        local.push(succ);
                        slots += 1;
                    }
                }
                if slots == 0 {
                    continue;
                }
                let solution = if iteration == 0 {
                    // Feasible starting decision: everything at the lowest
                    // price, which maximises the arrival mass.
                    let sub = AreaSubproblem {
                        weight: inst.arrival_weight(area),
                        beta_d: inst.beta_d,
                        d_min: inst.d_min,
                        d_max: inst.d_max,
                        utilities: &utilities,
                        gains: &gains,
                        price_in_payoff: false,
                    };
                    sub.evaluate(&vec![inst.d_min; slots])
                } else {
                    let sub = AreaSubproblem {
                        weight: inst.arrival_weight(area),
                        beta_d: inst.beta_d,
                        d_min: inst.d_min,
                        d_max: inst.d_max,
                        utilities: &utilities,
                        gains: &gains,
                        price_in_payoff: false,
                    };
                    maximize_area(&sub)
                };
                for (k, &succ) in local.iter().enumerate() {
                    mass += solution.masses[k];
                    mass_value += solution.masses[k] * v[succ];
                }
            }
            if mass <= 0.0 {
                return Err(Error::ImproperPolicy { state: idx });
            }
            let eta_next = (1.0 + mass_value) / mass;
            if iteration > 0 && eta_next - eta <= tolerances::AUX_RELATIVE * eta.abs().max(1.0) {
                eta = eta.max(eta_next);
                break;
            }
            eta = eta_next;
        }
        v[idx] = eta;
    }

    let mut rho = 0.0f64;
    let mut ratios = vec![0.0f64; count];
    for idx in 0..count {
        debug_assert!(v[idx] >= 1.0);
        ratios[idx] = (v[idx] - 1.0) / v[idx];
        rho = rho.max(ratios[idx]);
    }
    Ok(ContractionCertificate {
        v_star: v,
        rho,
        ratios,
    })
}

/// Evaluates both sides of the contraction inequality for a pair of value
/// tables: `(|T V - T W|, rho * |V - W|)` in the weighted norm.
pub fn contraction_check(
    inst: &ProblemInstance,
    grid: &StateGrid,
    cert: &ContractionCertificate,
    v: &ValueFunction,
    w: &ValueFunction,
) -> Result<(f64, f64)> {
    let tv = apply_operator(inst, grid, v)?;
    let tw = apply_operator(inst, grid, w)?;
    let lhs = cert.weighted_distance(&tv, &tw);
    let rhs = cert.rho() * cert.weighted_distance(v, w);
    Ok((lhs, rhs))
}

/// Running contraction ratios of a solved trajectory against the fixed
/// point: `rho_t = |V* - V_t| / |V* - V_{t+1}|` in the weighted norm. The
/// series stops once the denominator falls below the reporting floor.
pub fn running_ratios(
    trajectory: &[ValueFunction],
    v_star: &ValueFunction,
    cert: &ContractionCertificate,
) -> Vec<RatioPoint> {
    let mut series = Vec::new();
    for window in trajectory.windows(2) {
        let denominator = cert.weighted_distance(v_star, &window[0]);
        if denominator < tolerances::RATIO_DENOMINATOR_FLOOR {
            break;
        }
        let numerator = cert.weighted_distance(v_star, &window[1]);
        series.push(RatioPoint {
            t: window[1].t,
            rho_t: numerator / denominator,
        });
    }
    series
}

/// Validates the structural assumptions on an instance and its solved
/// trajectory: concave extensibility of the negated cost, marginal cost
/// below the maximum marginal profit, and the arrival-rate bounds implied
/// by the trajectory's strict concavity margins.
pub fn validate_assumptions(
    inst: &ProblemInstance,
    grid: &StateGrid,
    trajectory: &[ValueFunction],
) -> Result<AssumptionReport> {
    // Negated cost must be concave extensible.
    let mut neg_cost = vec![0.0f64; grid.state_count()];
    let mut x = vec![0u32; grid.dimension()];
    for idx in 0..grid.state_count() {
        grid.write_state(idx, &mut x);
        neg_cost[idx] = -inst.cost.evaluate(grid, &x);
    }
    let neg_cost = ValueFunction::new(inst.horizon + 1, neg_cost)?;
    let cost_report = extensibility_margin(grid, &neg_cost)?;
    let witness_state = cost_report
        .state_margins
        .iter()
        .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite margins"))
        .map(|(idx, _)| *idx);
    let cost_concavity = CostConcavityCheck {
        status: if cost_report.epsilon >= -1e-9 {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        margin: cost_report.epsilon,
        witness_state,
    };

    // Marginal cost of every feasible extra order against d_max + r.
    let bound = inst.d_max + inst.r;
    let mut max_marginal = f64::NEG_INFINITY;
    let mut witness = None;
    for idx in 0..grid.state_count() {
        grid.write_state(idx, &mut x);
        let here = inst.cost.evaluate(grid, &x);
        for (pair, succ) in grid.successors(idx) {
            grid.write_state(succ, &mut x);
            let marginal = inst.cost.evaluate(grid, &x) - here;
            grid.write_state(idx, &mut x);
            if marginal > max_marginal {
                max_marginal = marginal;
                witness = Some((idx, pair / inst.num_slots, pair % inst.num_slots));
            }
        }
    }
    let marginal_cost = MarginalCostCheck {
        status: if max_marginal <= bound + 1e-12 {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        max_marginal_cost: max_marginal,
        bound,
        witness,
    };

    // Arrival-rate bounds, evaluated at the most conservative reference
    // prices (everything offered at the lowest charge).
    let d_ref = PriceVector::uniform(inst.num_areas, inst.num_slots, inst.d_min);
    let mut bounds = Vec::with_capacity(trajectory.len());
    let mut min_bound = f64::INFINITY;
    for values in trajectory {
        let b = lambda_bound(values, inst, grid, &d_ref)?;
        min_bound = min_bound.min(b);
        bounds.push((values.t, b));
    }
    let arrival_rate = ArrivalRateCheck {
        status: if min_bound.is_infinite() {
            CheckStatus::InconclusiveSatisfied
        } else if inst.lambda <= min_bound {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        lambda: inst.lambda,
        min_bound,
        bounds,
    };

    Ok(AssumptionReport {
        cost_concavity,
        marginal_cost,
        arrival_rate,
    })
}

/// Runs the full analysis pipeline: solve the horizon, certify the
/// contraction, measure distances and margins per step, and validate the
/// assumptions.
pub fn analyze(inst: &ProblemInstance, grid: &StateGrid) -> Result<AnalysisReport> {
    let trajectory = solve_horizon(inst, grid)?;
    let v_star = fixed_point(inst, grid)?;
    let cert = auxiliary_dp(inst, grid)?;

    let image = apply_operator(inst, grid, &v_star)?;
    let fixed_point_residual = image.sup_distance(&v_star);
    let fixed_point_residual_weighted = cert.weighted_distance(&image, &v_star);

    let ratio_series = running_ratios(&trajectory, &v_star, &cert);
    let mut distance_series = Vec::with_capacity(trajectory.len());
    let mut epsilon_series = Vec::with_capacity(trajectory.len());
    for values in &trajectory {
        distance_series.push(DistancePoint {
            t: values.t,
            weighted: cert.weighted_distance(&v_star, values),
            sup: v_star.sup_distance(values),
        });
        epsilon_series.push(EpsilonPoint {
            t: values.t,
            epsilon: extensibility_margin(grid, values)?.epsilon,
        });
    }

    let assumptions = validate_assumptions(inst, grid, &trajectory)?;

    Ok(AnalysisReport {
        rho: cert.rho(),
        fixed_point_residual,
        fixed_point_residual_weighted,
        ratio_series,
        distance_series,
        epsilon_series,
        assumptions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dp::terminal_value;
    use crate::model::tests::example_instance;
    use crate::model::CostModel;
    use crate::num;
    use alloc::vec;

    #[test]
    fn fixed_point_closed_form_values() {
        let inst = example_instance();
        let grid = inst.grid().unwrap();
        let v = fixed_point(&inst, &grid).unwrap();
        assert_eq!(v.get(grid.index_of(&[0, 0]).unwrap()), 10.0);
        assert_eq!(v.get(grid.index_of(&[4, 4]).unwrap()), -14.0);
        assert_eq!(v.get(grid.index_of(&[2, 1]).unwrap()), 1.0);
    }

    #[test]
    fn fixed_point_residual_is_tiny() {
        let inst = example_instance();
        let grid = inst.grid().unwrap();
        let residual = fixed_point_residual(&inst, &grid).unwrap();
        assert!(residual < 1e-8, "residual {residual}");
    }

    #[test]
    fn degenerate_price_band_still_has_the_fixed_point() {
        let mut inst = example_instance();
        inst.d_min = 2.0; // band collapses to the single price 2
        let grid = inst.grid().unwrap();
        let residual = fixed_point_residual(&inst, &grid).unwrap();
        assert!(residual < 1e-8, "residual {residual}");
    }

    #[test]
    fn perturbed_fixed_point_has_positive_residual() {
        let inst = example_instance();
        let grid = inst.grid().unwrap();
        let v_star = fixed_point(&inst, &grid).unwrap();
        let mut bumped = v_star.as_slice().to_vec();
        let interior = grid.index_of(&[2, 2]).unwrap();
        bumped[interior] += 1.0;
        let bumped = ValueFunction::new(0, bumped).unwrap();
        let image = apply_operator(&inst, &grid, &bumped).unwrap();
        assert!(image.sup_distance(&bumped) > 1e-3);
    }

    #[test]
    fn hitting_times_on_a_single_pair_match_the_closed_form() {
        // With one slot the worst decision is always the price cap, so
        // v(x) = (capacity - x) / p(d_max) + 1 exactly.
        let inst = ProblemInstance {
            num_areas: 1,
            num_slots: 1,
            horizon: 5,
            lambda: 0.5,
            area_prob: vec![1.0],
            beta_c: 1.0,
            beta_slot: vec![0.0],
            beta_d: -1.0,
            d_min: 0.0,
            d_max: 2.0,
            r: 1.0,
            capacity: vec![3],
            cost: CostModel::Affine {
                intercept: 0.0,
                coefficients: vec![0.0],
            },
        };
        let grid = inst.grid().unwrap();
        let cert = auxiliary_dp(&inst, &grid).unwrap();
        let p_cap = 0.5 * num::exp(-1.0) / (num::exp(-1.0) + 1.0);
        for x in 0..=3u32 {
            let expected = f64::from(3 - x) / p_cap + 1.0;
            let got = cert.v_star(grid.index_of(&[x]).unwrap());
            assert!((got - expected).abs() < 1e-9, "x={x}: {got} vs {expected}");
        }
        let expected_rho = (3.0 / p_cap) / (3.0 / p_cap + 1.0);
        assert!((cert.rho() - expected_rho).abs() < 1e-9);
    }

    #[test]
    fn certificate_invariants_on_the_example() {
        let inst = example_instance();
        let grid = inst.grid().unwrap();
        let cert = auxiliary_dp(&inst, &grid).unwrap();
        assert_eq!(cert.v_star(grid.full_state_index()), 1.0);
        assert!(cert.v_star_table().iter().all(|&v| v >= 1.0));
        assert!(cert.rho() >= 0.0 && cert.rho() < 1.0);

        let again = auxiliary_dp(&inst, &grid).unwrap();
        for (a, b) in cert.v_star_table().iter().zip(again.v_star_table()) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn trivial_grid_has_zero_modulus() {
        let mut inst = example_instance();
        inst.capacity = vec![0, 0];
        inst.cost = CostModel::Affine {
            intercept: 2.0,
            coefficients: vec![1.0, 2.0],
        };
        let grid = inst.grid().unwrap();
        let cert = auxiliary_dp(&inst, &grid).unwrap();
        assert_eq!(cert.v_star_table(), &[1.0]);
        assert_eq!(cert.rho(), 0.0);
    }

    #[test]
    fn weighted_norm_reductions() {
        let inst = example_instance();
        let grid = inst.grid().unwrap();
        let cert = auxiliary_dp(&inst, &grid).unwrap();
        let zero = ValueFunction::constant(1, grid.state_count(), 0.0);
        assert_eq!(cert.weighted_norm(&zero), 0.0);

        // With unit weights the weighted norm is the plain sup-norm; the
        // fixed point spans [-14, 10] on this grid.
        let flat = ContractionCertificate {
            v_star: vec![1.0; grid.state_count()],
            rho: 0.0,
            ratios: vec![0.0; grid.state_count()],
        };
        let v = fixed_point(&inst, &grid).unwrap();
        assert_eq!(flat.weighted_norm(&v), 14.0);
    }

    #[test]
    fn ratios_terminate_at_the_fixed_point() {
        let inst = example_instance();
        let grid = inst.grid().unwrap();
        let cert = auxiliary_dp(&inst, &grid).unwrap();
        let v_star = fixed_point(&inst, &grid).unwrap();
        let series = running_ratios(&[v_star.clone(), v_star.clone()], &v_star, &cert);
        assert!(series.is_empty());
    }

    #[test]
    fn contraction_check_of_identical_tables_is_zero() {
        let inst = example_instance();
        let grid = inst.grid().unwrap();
        let cert = auxiliary_dp(&inst, &grid).unwrap();
        let v = terminal_value(&inst, &grid).unwrap();
        let (lhs, rhs) = contraction_check(&inst, &grid, &cert, &v, &v).unwrap();
        assert_eq!(lhs, 0.0);
        assert_eq!(rhs, 0.0);
    }

    #[test]
    fn assumptions_hold_on_the_example() {
        let mut inst = example_instance();
        inst.horizon = 5;
        let grid = inst.grid().unwrap();
        let trajectory = solve_horizon(&inst, &grid).unwrap();
        let report = validate_assumptions(&inst, &grid, &trajectory).unwrap();

        assert_eq!(report.cost_concavity.status, CheckStatus::Pass);
        assert!(report.cost_concavity.margin.abs() < 1e-9);

        assert_eq!(report.marginal_cost.status, CheckStatus::Pass);
        assert_eq!(report.marginal_cost.max_marginal_cost, 2.0);
        assert_eq!(report.marginal_cost.bound, 3.0);

        assert_eq!(report.arrival_rate.bounds.len(), trajectory.len());
    }

    #[test]
    fn constant_cost_passes_the_marginal_check_at_zero_bound() {
        let mut inst = example_instance();
        inst.horizon = 1;
        inst.r = 0.0;
        inst.d_max = 0.0;
        inst.d_min = 0.0;
        inst.cost = CostModel::Affine {
            intercept: 5.0,
            coefficients: vec![0.0, 0.0],
        };
        let grid = inst.grid().unwrap();
        let trajectory = solve_horizon(&inst, &grid).unwrap();
        let report = validate_assumptions(&inst, &grid, &trajectory).unwrap();
        assert_eq!(report.marginal_cost.status, CheckStatus::Pass);
        assert_eq!(report.marginal_cost.max_marginal_cost, 0.0);
        assert_eq!(report.marginal_cost.bound, 0.0);
    }

    #[test]
    fn analysis_report_series_cover_the_horizon() {
        let mut inst = example_instance();
        inst.horizon = 8;
        let grid = inst.grid().unwrap();
        let report = analyze(&inst, &grid).unwrap();
        assert_eq!(report.distance_series.len(), 9);
        assert_eq!(report.epsilon_series.len(), 9);
        assert!(report.ratio_series.len() <= 8);
        assert!(report.fixed_point_residual < 1e-8);
        assert!(report.rho > 0.0 && report.rho < 1.0);
        for point in &report.ratio_series {
            assert!(point.rho_t <= report.rho + 1e-9);
        }
        for point in &report.epsilon_series {
            assert!(point.epsilon >= -1e-9);
        }
    }
}
