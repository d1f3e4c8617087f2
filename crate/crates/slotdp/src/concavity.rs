//! Discrete-concavity toolkit over the order lattice.
//!
//! A lattice function is concave extensible when it coincides with its
//! concave closure on every lattice point, equivalently when no convex
//! combination of other lattice values exceeds the value at the combined
//! point. Both views are computed here with a small linear program: the
//! closure at `x` is the best convex combination of grid values hitting
//! `x`, and the per-state *margin* is the gap by which the state's own
//! value beats the best combination supported away from it. A nonnegative
//! worst-case margin certifies concave extensibility; strictly positive
//! margins bound how much arrival mass a backup may move before concavity
//! can break.

use alloc::vec;
use alloc::vec::Vec;

use crate::dp::{apply_operator, ValueFunction};
use crate::error::{Error, Result};
use crate::grid::StateGrid;
use crate::model::{mnl_probabilities, ChoiceProbabilities, PriceVector, ProblemInstance};
use crate::simplex::{maximize, LpOutcome};
use crate::tolerances;

/// A convex combination of grid points hitting a target point.
#[derive(Debug, Clone)]
pub struct EnclosingCombination {
    pub target: Vec<f64>,
    /// Flat state indices of the support points.
    pub support: Vec<usize>,
    /// Stochastic weights aligned with `support`.
    pub weights: Vec<f64>,
}

impl EnclosingCombination {
    /// Worst violation of the combination identities (weights summing to
    /// one and averaging to the target).
    pub fn residual(&self, grid: &StateGrid) -> f64 {
        let dim = grid.dimension();
        let mut coord = vec![0.0f64; dim];
        let mut total = 0.0f64;
        let mut state = vec![0u32; dim];
        for (&idx, &w) in self.support.iter().zip(self.weights.iter()) {
            grid.write_state(idx, &mut state);
            for (c, xi) in coord.iter_mut().zip(state.iter()) {
                *c += w * f64::from(*xi);
            }
            total += w;
        }
        let mut worst = (total - 1.0).abs();
        for (c, t) in coord.iter().zip(self.target.iter()) {
            worst = worst.max((c - t).abs());
        }
        worst
    }
}

/// Worst-case extensibility margin of a value table, with the combination
/// achieving it.
#[derive(Debug, Clone)]
pub struct ExtensibilityReport {
    /// Minimum margin over all states that other grid points can enclose;
    /// `+inf` when no such state exists (every state is a lattice vertex).
    pub epsilon: f64,
    pub witness: Option<EnclosingCombination>,
    /// `(state index, margin)` for each enclosable state.
    pub state_margins: Vec<(usize, f64)>,
}

/// Hessian diagnostics of the revenue term at an interior choice point.
#[derive(Debug, Clone, Copy)]
pub struct HessianCheck {
    /// Largest eigenvalue across the per-area Hessians; nonpositive up to
    /// roundoff when the revenue term is concave.
    pub max_eigenvalue: f64,
    /// Schur complement of the slot-diagonal block, identically zero in
    /// exact arithmetic; the entry with the largest magnitude is reported.
    pub schur_complement: f64,
}

fn expect_table(values: &ValueFunction, grid: &StateGrid) -> Result<()> {
    if values.len() != grid.state_count() {
        return Err(Error::LengthMismatch {
            what: "value table",
            expected: grid.state_count(),
            got: values.len(),
        });
    }
    Ok(())
}

/// Best convex combination of grid values hitting `target`, optionally with
/// one state excluded from the support.
fn combination_lp(
    grid: &StateGrid,
    values: &[f64],
    target: &[f64],
    exclude: Option<usize>,
) -> Result<(f64, EnclosingCombination)> {
    let dim = grid.dimension();
    let columns: Vec<usize> = (0..grid.state_count())
        .filter(|idx| Some(*idx) != exclude)
        .collect();
    let n = columns.len();

    let mut objective = vec![0.0f64; n];
    let mut rows = vec![vec![0.0f64; n]; dim + 1];
    let mut state = vec![0u32; dim];
    for (col, &idx) in columns.iter().enumerate() {
        objective[col] = values[idx];
        grid.write_state(idx, &mut state);
        for d in 0..dim {
            rows[d][col] = f64::from(state[d]);
        }
        rows[dim][col] = 1.0;
    }
    let mut rhs = target.to_vec();
    rhs.push(1.0);

    match maximize(&objective, &rows, &rhs) {
        LpOutcome::Optimal { value, solution } => {
            let mut support = Vec::new();
            let mut weights = Vec::new();
            for (col, &w) in solution.iter().enumerate() {
                if w > tolerances::COMBINATION_RESIDUAL {
                    support.push(columns[col]);
                    weights.push(w);
                }
            }
            Ok((
                value,
                EnclosingCombination {
                    target: target.to_vec(),
                    support,
                    weights,
                },
            ))
        }
        LpOutcome::Infeasible => Err(Error::OutsideHull),
        LpOutcome::Unbounded => unreachable!("stochastic weights are bounded"),
    }
}

/// Evaluates the concave closure of the value table at a (real) point of
/// the lattice hull: the largest convex interpolation of grid values that
/// hits the point. Points outside the hull are a domain error.
pub fn concave_closure_eval(
    grid: &StateGrid,
    values: &ValueFunction,
    x: &[f64],
) -> Result<f64> {
    expect_table(values, grid)?;
    if x.len() != grid.dimension() {
        return Err(Error::LengthMismatch {
            what: "closure point",
            expected: grid.dimension(),
            got: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::OutsideHull);
    }
    combination_lp(grid, values.as_slice(), x, None).map(|(value, _)| value)
}

/// `true` when the state sits at a vertex of the lattice's bounding box, in
/// which case no other grid points can enclose it.
fn is_box_vertex(grid: &StateGrid, x: &[u32]) -> bool {
    x.iter()
        .zip(grid.capacity().iter())
        .all(|(xi, cap)| *xi == 0 || xi == cap)
}

/// Computes the extensibility margin of every enclosable state:
/// `V(x) - max { sum mu_q V(q) : q != x, sum mu_q q = x }`. Nonnegative
/// margins everywhere certify concave extensibility. Exact enumeration is
/// guarded to grids below [`tolerances::MARGIN_STATE_LIMIT`] states.
pub fn extensibility_margin(
    grid: &StateGrid,
    values: &ValueFunction,
) -> Result<ExtensibilityReport> {
    expect_table(values, grid)?;
    if grid.state_count() > tolerances::MARGIN_STATE_LIMIT {
        return Err(Error::GridTooLarge {
            states: grid.state_count(),
            limit: tolerances::MARGIN_STATE_LIMIT,
        });
    }
    let mut epsilon = f64::INFINITY;
    let mut witness = None;
    let mut state_margins = Vec::new();
    let mut x = vec![0u32; grid.dimension()];
    let mut target = vec![0.0f64; grid.dimension()];
    for idx in 0..grid.state_count() {
        grid.write_state(idx, &mut x);
        if is_box_vertex(grid, &x) {
            continue;
        }
        for (t, xi) in target.iter_mut().zip(x.iter()) {
            *t = f64::from(*xi);
        }
        let (best, combination) =
            combination_lp(grid, values.as_slice(), &target, Some(idx))?;
        let margin = values.get(idx) - best;
        state_margins.push((idx, margin));
        if margin < epsilon {
            epsilon = margin;
            witness = Some(combination);
        }
    }
    Ok(ExtensibilityReport {
        epsilon,
        witness,
        state_margins,
    })
}

/// Margins of a table and of its backup, to observe whether one operator
/// application preserves concave extensibility.
pub fn check_concavity_preservation(
    inst: &ProblemInstance,
    grid: &StateGrid,
    values: &ValueFunction,
) -> Result<(f64, f64)> {
    let before = extensibility_margin(grid, values)?.epsilon;
    let after_table = apply_operator(inst, grid, values)?;
    let after = extensibility_margin(grid, &after_table)?.epsilon;
    Ok((before, after))
}

/// Jacobi eigenvalue sweep for a small dense symmetric matrix.
fn symmetric_eigenvalues(mut a: Vec<f64>, n: usize) -> Vec<f64> {
    if n == 1 {
        return a;
    }
    let scale: f64 = a.iter().map(|v| v * v).sum::<f64>() + f64::MIN_POSITIVE;
    for _ in 0..100 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i * n + j] * a[i * n + j];
            }
        }
        if off <= tolerances::JACOBI_OFFDIAG * scale {
            break;
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let apq = a[i * n + j];
                if apq == 0.0 {
                    continue;
                }
                let tau = (a[j * n + j] - a[i * n + i]) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + crate::num::hypot(1.0, tau))
                } else {
                    -1.0 / (-tau + crate::num::hypot(1.0, tau))
                };
                let c = 1.0 / crate::num::sqrt(1.0 + t * t);
                let s = t * c;
                for k in 0..n {
                    let aik = a[i * n + k];
                    let ajk = a[j * n + k];
                    a[i * n + k] = c * aik - s * ajk;
                    a[j * n + k] = s * aik + c * ajk;
                }
                for k in 0..n {
                    let aki = a[k * n + i];
                    let akj = a[k * n + j];
                    a[k * n + i] = c * aki - s * akj;
                    a[k * n + j] = s * aki + c * akj;
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).collect()
}

/// Assembles the per-area Hessian of the revenue term at a strictly
/// interior choice point and reports its largest eigenvalue together with
/// the Schur complement of the slot-diagonal block. Concavity of the
/// revenue term shows as a nonpositive spectrum; the Schur complement
/// vanishes identically.
pub fn f_hessian_check(
    inst: &ProblemInstance,
    p: &ChoiceProbabilities,
) -> Result<HessianCheck> {
    let s = inst.num_slots;
    let n = s + 1;
    let inv_beta = 1.0 / inst.beta_d;
    let mut max_eigenvalue = f64::NEG_INFINITY;
    let mut schur_complement = 0.0f64;
    for area in 0..inst.num_areas {
        let p0 = p.no_purchase(area);
        if !(p0 > 0.0) {
            return Err(Error::BoundaryProbability { area });
        }
        let mut mass_sum = 0.0f64;
        let mut h = vec![0.0f64; n * n];
        for slot in 0..s {
            let mass = p.p(area, slot);
            if !(mass > 0.0) {
                return Err(Error::BoundaryProbability { area });
            }
            mass_sum += mass;
            h[slot * n + slot] = inv_beta / mass;
            h[slot * n + s] = -inv_beta / p0;
            h[s * n + slot] = -inv_beta / p0;
        }
        h[s * n + s] = inv_beta * mass_sum / (p0 * p0);

        let mut schur = h[s * n + s];
        for slot in 0..s {
            schur -= h[slot * n + s] * h[slot * n + s] / h[slot * n + slot];
        }
        if schur.abs() > schur_complement.abs() {
            schur_complement = schur;
        }
        for ev in symmetric_eigenvalues(h, n) {
            max_eigenvalue = max_eigenvalue.max(ev);
        }
    }
    Ok(HessianCheck {
        max_eigenvalue,
        schur_complement,
    })
}

/// Upper bound on the arrival rate under which one backup provably keeps a
/// strictly concave-extensible table concave extensible:
/// `epsilon / ((W - w) * sum_a,s pi(a) Pi[a,s](d_ref))`, with `w`/`W` the
/// extreme forward differences of the table. Returns `+inf` in the
/// hyperplane case (zero margin), where the inequality holds for any rate.
pub fn lambda_bound(
    values: &ValueFunction,
    inst: &ProblemInstance,
    grid: &StateGrid,
    d_ref: &PriceVector,
) -> Result<f64> {
    expect_table(values, grid)?;
    let report = extensibility_margin(grid, values)?;
    let epsilon = report.epsilon;
    if !epsilon.is_finite() || epsilon <= tolerances::HYPERPLANE_MARGIN {
        return Ok(f64::INFINITY);
    }

    let mut w = f64::INFINITY;
    let mut big_w = f64::NEG_INFINITY;
    for idx in 0..grid.state_count() {
        for (_, succ) in grid.successors(idx) {
            let diff = values.get(succ) - values.get(idx);
            w = w.min(diff);
            big_w = big_w.max(diff);
        }
    }
    if !w.is_finite() || big_w - w <= 0.0 {
        return Ok(f64::INFINITY);
    }

    let probs = mnl_probabilities(inst, d_ref)?;
    let choice_mass = probs.total() / inst.lambda; // sum_a,s pi(a) * Pi[a,s]
    if choice_mass <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(epsilon / ((big_w - w) * choice_mass))
}
