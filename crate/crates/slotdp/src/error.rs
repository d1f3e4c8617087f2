use alloc::string::String;

/// Errors raised by instance validation and the solver operations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid instance: field `{field}`: {message}")]
    InvalidInstance { field: &'static str, message: String },

    #[error("price for area {area}, slot {slot} is not finite")]
    NonFinitePrice { area: usize, slot: usize },

    #[error("probability {value} for area {area}, slot {slot} is outside its domain")]
    ProbabilityDomain { area: usize, slot: usize, value: f64 },

    #[error("no-purchase probability for area {area} must be positive to invert prices")]
    ZeroNoPurchase { area: usize },

    #[error("positive probability {value} assigned to a full slot (area {area}, slot {slot})")]
    FullSlotMass { area: usize, slot: usize, value: f64 },

    #[error("cost is not finite on state {state} of the grid")]
    InfiniteCost { state: usize },

    #[error("value function entry at state {state} is not finite")]
    NonFiniteValue { state: usize },

    #[error("state {state:?} does not lie on the grid")]
    StateNotInGrid { state: alloc::vec::Vec<u32> },

    #[error("length mismatch for {what}: expected {expected}, got {got}")]
    LengthMismatch { what: &'static str, expected: usize, got: usize },

    #[error("grid has {states} states, above the exact-enumeration limit {limit}")]
    GridTooLarge { states: usize, limit: usize },

    #[error("point lies outside the convex hull of the admissible support")]
    OutsideHull,

    #[error("interior point required: probability coordinate is zero for area {area}")]
    BoundaryProbability { area: usize },

    #[error("state {state} cannot reach a successor: every open slot has zero arrival mass")]
    ImproperPolicy { state: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
