//! Numerical thresholds used across the crate, collected in one place so the
//! solver, the analysis layer and the test suites agree on them.

/// Per-area inner maximisation stops once an accepted ascent step improves
/// the objective by less than this.
pub const INNER_IMPROVEMENT: f64 = 1e-12;

/// Iteration cap for the per-area projected gradient ascent.
pub const INNER_MAX_ITERS: usize = 10_000;

/// Advertised accuracy of a per-state backup in objective value.
pub const INNER_OBJECTIVE: f64 = 1e-9;

/// Relative stopping threshold for the ratio iteration that solves the
/// auxiliary hitting-time recursion state by state.
pub const AUX_RELATIVE: f64 = 1e-14;

/// Running contraction ratios are reported only while the denominator
/// distance stays above this floor.
pub const RATIO_DENOMINATOR_FLOOR: f64 = 1e-13;

/// Exact enumeration of extensibility margins is guarded to grids with at
/// most this many states.
pub const MARGIN_STATE_LIMIT: usize = 10_000;

/// Reduced-cost / feasibility threshold of the embedded simplex kernel.
pub const SIMPLEX_EPS: f64 = 1e-9;

/// Pivot elements below this magnitude are treated as zero by the simplex.
pub const SIMPLEX_PIVOT: f64 = 1e-11;

/// Residual allowed on the convex-combination identities of an enclosing
/// combination recovered from the LP basis.
pub const COMBINATION_RESIDUAL: f64 = 1e-12;

/// Margins this close to zero are treated as the hyperplane case when
/// deriving arrival-rate bounds.
pub const HYPERPLANE_MARGIN: f64 = 1e-12;

/// Off-diagonal mass threshold for the Jacobi eigenvalue sweep.
pub const JACOBI_OFFDIAG: f64 = 1e-14;

/// Probability vectors must sum to one within this slack to validate.
pub const PROBABILITY_SUM: f64 = 1e-9;
