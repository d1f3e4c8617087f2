//! Small dense two-phase primal simplex for equality-form programs
//!
//! ```text
//!   maximize c.x   subject to  A x = b,  x >= 0,
//! ```
//!
//! sized for the concave-closure programs of this crate: a handful of rows
//! (lattice dimension + 1) against up to a few thousand columns. The
//! full-tableau variant is used; Bland's rule breaks ties, which matters
//! because lattice data makes these programs highly degenerate.

use alloc::vec;
use alloc::vec::Vec;

use crate::tolerances::{SIMPLEX_EPS, SIMPLEX_PIVOT};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LpOutcome {
    Optimal { value: f64, solution: Vec<f64> },
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: usize,
    cols: usize, // structural + artificial columns
    a: Vec<f64>, // (rows) x (cols + 1), last column is the rhs
    obj: Vec<f64>, // reduced-cost row, length cols + 1 (last entry: -objective)
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * (self.cols + 1) + c]
    }

    fn at_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.a[r * (self.cols + 1) + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let width = self.cols + 1;
        let scale = self.at(row, col);
        for c in 0..width {
            *self.at_mut(row, c) /= scale;
        }
        for r in 0..self.rows {
            if r == row {
                continue;
            }
            let factor = self.at(r, col);
            if factor == 0.0 {
                continue;
            }
            for c in 0..width {
                let upd = self.at(row, c) * factor;
                *self.at_mut(r, c) -= upd;
            }
        }
        let factor = self.obj[col];
        if factor != 0.0 {
            for c in 0..width {
                self.obj[c] -= self.at(row, c) * factor;
            }
        }
        self.basis[row] = col;
    }

    /// Runs the simplex on the current objective row over the columns in
    /// `active`. Returns false when the problem is unbounded.
    fn optimize(&mut self, active: usize) -> bool {
        loop {
            // Bland: the lowest-index column with a strictly positive
            // reduced cost enters (we maximise, obj row holds c - z).
            let mut entering = None;
            for c in 0..active {
                if self.obj[c] > SIMPLEX_EPS {
                    entering = Some(c);
                    break;
                }
            }
            let Some(col) = entering else {
                return true;
            };
            let mut leaving: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let coeff = self.at(r, col);
                if coeff > SIMPLEX_PIVOT {
                    let ratio = self.rhs(r) / coeff;
                    let better = match leaving {
                        None => true,
                        Some((best_r, best)) => {
                            ratio < best - SIMPLEX_PIVOT
                                || (ratio < best + SIMPLEX_PIVOT
                                    && self.basis[r] < self.basis[best_r])
                        }
                    };
                    if better {
                        leaving = Some((r, ratio));
                    }
                }
            }
            let Some((row, _)) = leaving else {
                return false;
            };
            self.pivot(row, col);
        }
    }
}

/// Solves `max c.x : A x = b, x >= 0`. `a` holds the rows of `A` densely.
pub(crate) fn maximize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> LpOutcome {
    let rows = a.len();
    let n = c.len();
    debug_assert!(a.iter().all(|row| row.len() == n));
    debug_assert_eq!(b.len(), rows);

    let cols = n + rows; // structural plus one artificial per row
    let width = cols + 1;
    let mut t = Tableau {
        rows,
        cols,
        a: vec![0.0; rows * width],
        obj: vec![0.0; width],
        basis: (n..n + rows).collect(),
    };
    for r in 0..rows {
        let flip = if b[r] < 0.0 { -1.0 } else { 1.0 };
        for (cidx, &v) in a[r].iter().enumerate() {
            *t.at_mut(r, cidx) = flip * v;
        }
        *t.at_mut(r, n + r) = 1.0;
        *t.at_mut(r, cols) = flip * b[r];
    }

    // Phase 1: drive the artificial variables to zero. Maximising
    // -(sum of artificials) keeps the sign convention of `optimize`.
    for r in 0..rows {
        for c in 0..width {
            if c < n || c == cols {
                t.obj[c] += t.at(r, c);
            }
        }
    }
    if !t.optimize(cols) {
        return LpOutcome::Infeasible; // cannot happen: phase 1 is bounded
    }
    let infeasibility = -t.obj[cols];
    if infeasibility.abs() > SIMPLEX_EPS {
        return LpOutcome::Infeasible;
    }

    // Pivot any artificial variable still in the basis out of it; rows with
    // no structural pivot left are redundant and can stay as they are.
    for r in 0..rows {
        if t.basis[r] >= n {
            let mut col = None;
            for cidx in 0..n {
                if t.at(r, cidx).abs() > SIMPLEX_PIVOT {
                    col = Some(cidx);
                    break;
                }
            }
            if let Some(cidx) = col {
                t.pivot(r, cidx);
            }
        }
    }

    // Phase 2 on the real objective, artificial columns frozen.
    for v in t.obj.iter_mut() {
        *v = 0.0;
    }
    t.obj[..n].copy_from_slice(c);
    for r in 0..rows {
        let var = t.basis[r];
        if var < n {
            let factor = t.obj[var];
            if factor != 0.0 {
                for cc in 0..width {
                    t.obj[cc] -= t.at(r, cc) * factor;
                }
            }
        }
    }
    if !t.optimize(n) {
        return LpOutcome::Unbounded;
    }

    let mut solution = vec![0.0; n];
    for r in 0..rows {
        if t.basis[r] < n {
            solution[t.basis[r]] = t.rhs(r);
        }
    }
    let value = -t.obj[cols];
    LpOutcome::Optimal { value, solution }
}
