//! Exact dynamic-programming solver and analysis toolkit for pricing
//! delivery slots over a finite booking horizon.
//!
//! A business sells delivery slots `s` in geographic sub-areas `a` during a
//! booking horizon of discrete time steps. At each step an arriving customer
//! picks a slot (or walks away) according to a multinomial logit model driven
//! by the posted charges `d[a,s]`. The state is the vector of accepted orders
//! per `(a, s)` pair, capped by a capacity vector; the terminal payoff is the
//! negated delivery cost of the accumulated orders.
//!
//! The crate computes the expected profit-to-go exactly by backward induction
//! ([`dp`]), characterises the backup operator's unique fixed point and its
//! contraction modulus through an auxiliary hitting-time recursion
//! ([`analysis`]), and verifies discrete-concavity structure of the value
//! tables with an embedded linear-programming kernel ([`concavity`]).
//!
//! Everything is `no_std`-compatible (with `alloc`); IO, configuration files
//! and the command-line front end live in the companion `slotdp-cli` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod analysis;
pub mod concavity;
pub mod dp;
mod error;
pub mod grid;
pub mod model;
mod num;
mod optim;
mod simplex;
pub mod tolerances;

pub use error::{Error, Result};
pub use grid::StateGrid;
pub use model::{
    mnl_probabilities, price_from_probability, ChoiceProbabilities, CostModel, PriceVector,
    ProblemInstance, SlotPrice,
};
