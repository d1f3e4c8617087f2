//! The exact backward-induction solver.
//!
//! One backup takes the profit-to-go table of the next time step and
//! maximises, state by state, the expected one-step profit plus
//! continuation. Slots whose capacity is exhausted at a state are forced
//! closed, so no decision can ever transition off the lattice; the rest of
//! that arrival mass falls to the no-purchase outcome.
//!
//! Backups of distinct states are independent: each reads only the
//! immutable next-step table and writes its own output slot, so the sweep
//! is a pure map over states and its result does not depend on visitation
//! order.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::StateGrid;
use crate::model::{ChoiceProbabilities, PriceVector, ProblemInstance, SlotPrice};
use crate::num;
use crate::optim::{maximize_area, AreaSubproblem};

/// Dense profit-to-go table for one time step. Entries are finite by
/// construction; `t` is the time label (`horizon + 1` for the terminal
/// condition, counting down to 1).
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction {
    pub t: u32,
    values: Vec<f64>,
}

impl ValueFunction {
    pub fn new(t: u32, values: Vec<f64>) -> Result<Self> {
        if let Some(state) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { state });
        }
        Ok(ValueFunction { t, values })
    }

    pub fn constant(t: u32, len: usize, value: f64) -> Self {
        ValueFunction {
            t,
            values: vec![value; len],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, state: usize) -> f64 {
        self.values[state]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Unweighted sup-norm distance to another table.
    pub fn sup_distance(&self, other: &ValueFunction) -> f64 {
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Value and maximiser of one state's backup.
#[derive(Debug, Clone)]
pub struct BackupResult {
    pub value: f64,
    pub prices: PriceVector,
    pub probabilities: ChoiceProbabilities,
}

/// Terminal condition: the negated delivery cost of the accumulated orders.
pub fn terminal_value(inst: &ProblemInstance, grid: &StateGrid) -> Result<ValueFunction> {
    let mut values = vec![0.0f64; grid.state_count()];
    let mut x = vec![0u32; grid.dimension()];
    for idx in 0..grid.state_count() {
        grid.write_state(idx, &mut x);
        let c = inst.cost.evaluate(grid, &x);
        if !c.is_finite() {
            return Err(Error::InfiniteCost { state: idx });
        }
        values[idx] = -c;
    }
    Ok(ValueFunction {
        t: inst.horizon + 1,
        values,
    })
}

/// Backup objective at state `x` for an arbitrary feasible choice mass `p`:
/// expected one-step profit (revenue plus the price implied by `p`) plus the
/// expected continuation value. Mass on a full slot is rejected; zero-mass
/// slots contribute nothing (the `0 * ln 0 = 0` continuous extension).
pub fn inner_objective(
    inst: &ProblemInstance,
    grid: &StateGrid,
    v_next: &ValueFunction,
    x: &[u32],
    p: &ChoiceProbabilities,
) -> Result<f64> {
    let idx = grid.index_of(x).ok_or_else(|| Error::StateNotInGrid {
        state: x.to_vec(),
    })?;
    expect_len(v_next, grid)?;
    let base = v_next.get(idx);
    let mut total = base;
    for area in 0..inst.num_areas {
        let p0 = p.no_purchase(area);
        for slot in 0..inst.num_slots {
            let pair = inst.pair_index(area, slot);
            let mass = p.p(area, slot);
            if !(mass >= 0.0) || !mass.is_finite() {
                return Err(Error::ProbabilityDomain {
                    area,
                    slot,
                    value: mass,
                });
            }
            let successor = grid.successor(idx, pair);
            if successor.is_none() {
                if mass > 0.0 {
                    return Err(Error::FullSlotMass {
                        area,
                        slot,
                        value: mass,
                    });
                }
                continue;
            }
            if mass == 0.0 {
                continue;
            }
            if !(p0 > 0.0) {
                // Selling with certainty is only approachable in the limit,
                // where the implied price diverges to -inf revenue.
                return Ok(f64::NEG_INFINITY);
            }
            let price = (num::ln(mass / p0) - inst.utility(slot)) / inst.beta_d;
            let delta = v_next.get(successor.expect("checked above")) - base;
            total += mass * (inst.r + price + delta);
        }
    }
    Ok(total)
}

/// Maximises the backup objective at one state. The problem separates by
/// area; each area's concave subproblem is solved to `INNER_OBJECTIVE`
/// accuracy in value. Full slots are forced closed.
pub fn backup_state(
    inst: &ProblemInstance,
    grid: &StateGrid,
    v_next: &ValueFunction,
    x: &[u32],
) -> Result<BackupResult> {
    let idx = grid.index_of(x).ok_or_else(|| Error::StateNotInGrid {
        state: x.to_vec(),
    })?;
    expect_len(v_next, grid)?;
    backup_index(inst, grid, v_next, idx)
}

fn expect_len(v: &ValueFunction, grid: &StateGrid) -> Result<()> {
    if v.len() != grid.state_count() {
        return Err(Error::LengthMismatch {
            what: "value table",
            expected: grid.state_count(),
            got: v.len(),
        });
    }
    Ok(())
}

fn backup_index(
    inst: &ProblemInstance,
    grid: &StateGrid,
    v_next: &ValueFunction,
    idx: usize,
) -> Result<BackupResult> {
    let base = v_next.get(idx);
    let mut prices = PriceVector::all_closed(inst.num_areas, inst.num_slots);
    let mut probabilities = ChoiceProbabilities::zeroed(inst.num_areas, inst.num_slots);
    let mut value = base;

    let mut open_slots: Vec<usize> = Vec::with_capacity(inst.num_slots);
    let mut utilities: Vec<f64> = Vec::with_capacity(inst.num_slots);
    let mut gains: Vec<f64> = Vec::with_capacity(inst.num_slots);

    for area in 0..inst.num_areas {
        open_slots.clear();
        utilities.clear();
        gains.clear();
        for slot in 0..inst.num_slots {
            let pair = inst.pair_index(area, slot);
            if let Some(succ) = grid.successor(idx, pair) {
                open_slots.push(slot);
                utilities.push(inst.utility(slot));
                gains.push(inst.r + v_next.get(succ) - base);
            }
        }
        if open_slots.is_empty() {
            probabilities.set_no_purchase(area, inst.arrival_weight(area));
            continue;
        }
        let sub = AreaSubproblem {
            weight: inst.arrival_weight(area),
            beta_d: inst.beta_d,
            d_min: inst.d_min,
            d_max: inst.d_max,
            utilities: &utilities,
            gains: &gains,
            price_in_payoff: true,
        };
        let sol = maximize_area(&sub);
        value += sol.value;
        for (k, &slot) in open_slots.iter().enumerate() {
            prices.set(area, slot, SlotPrice::Open(sol.prices[k]));
            probabilities.set_p(area, slot, sol.masses[k]);
        }
        probabilities.set_no_purchase(area, sol.no_purchase);
    }

    Ok(BackupResult {
        value,
        prices,
        probabilities,
    })
}

/// Backs up every state, returning the full maximiser records.
pub fn backup_all(
    inst: &ProblemInstance,
    grid: &StateGrid,
    v_next: &ValueFunction,
) -> Result<Vec<BackupResult>> {
    expect_len(v_next, grid)?;
    (0..grid.state_count())
        .map(|idx| backup_index(inst, grid, v_next, idx))
        .collect()
}

/// One application of the backup operator to a full table.
pub fn apply_operator(
    inst: &ProblemInstance,
    grid: &StateGrid,
    v_next: &ValueFunction,
) -> Result<ValueFunction> {
    expect_len(v_next, grid)?;
    let mut values = vec![0.0f64; grid.state_count()];
    for (idx, slot) in values.iter_mut().enumerate() {
        *slot = backup_index(inst, grid, v_next, idx)?.value;
    }
    ValueFunction::new(v_next.t.saturating_sub(1), values)
}

/// Solves the whole booking horizon: returns the trajectory
/// `[V_{horizon+1}, V_{horizon}, ..., V_1]`, terminal condition first.
pub fn solve_horizon(inst: &ProblemInstance, grid: &StateGrid) -> Result<Vec<ValueFunction>> {
    let mut trajectory = Vec::with_capacity(inst.horizon as usize + 1);
    trajectory.push(terminal_value(inst, grid)?);
    for _ in 0..inst.horizon {
        let next = apply_operator(inst, grid, trajectory.last().expect("non-empty"))?;
        trajectory.push(next);
    }
    Ok(trajectory)
}

/// Like [`solve_horizon`] but retains only the tables whose time labels are
/// listed in `keep`, for state spaces too large to store every step.
pub fn solve_horizon_retaining(
    inst: &ProblemInstance,
    grid: &StateGrid,
    keep: &[u32],
) -> Result<Vec<ValueFunction>> {
    let mut kept = Vec::new();
    let mut current = terminal_value(inst, grid)?;
    if keep.contains(&current.t) {
        kept.push(current.clone());
    }
    for _ in 0..inst.horizon {
        current = apply_operator(inst, grid, &current)?;
        if keep.contains(&current.t) {
            kept.push(current.clone());
        }
    }
    Ok(kept)
}
