//! Problem data and the customer choice model.
//!
//! An instance couples the booking-horizon parameters (arrival rate, area
//! mix, logit coefficients, price band, net revenue) with a capacity vector
//! over `(area, slot)` pairs and a delivery-cost model. Pairs are laid out
//! area-major: pair index `a * num_slots + s`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::StateGrid;
use crate::num;
use crate::tolerances;

/// Delivery-cost model over the order lattice. Outside the lattice the cost
/// is `+inf` by convention, so states beyond capacity are never attractive.
#[derive(Debug, Clone, PartialEq)]
pub enum CostModel {
    /// `intercept + coefficients . x`, one coefficient per `(area, slot)` pair.
    Affine {
        intercept: f64,
        coefficients: Vec<f64>,
    },
    /// Dense table keyed by the grid's flat state index.
    Tabulated { table: Vec<f64> },
}

impl CostModel {
    /// Cost of the order vector `x`, `+inf` when `x` is off the grid.
    pub fn evaluate(&self, grid: &StateGrid, x: &[u32]) -> f64 {
        if !grid.contains(x) {
            return f64::INFINITY;
        }
        match self {
            CostModel::Affine {
                intercept,
                coefficients,
            } => {
                let mut c = *intercept;
                for (xi, ci) in x.iter().zip(coefficients.iter()) {
                    c += f64::from(*xi) * ci;
                }
                c
            }
            CostModel::Tabulated { table } => {
                let idx = grid.index_of(x).expect("contains() checked above");
                table[idx]
            }
        }
    }

    fn validate(&self, num_pairs: usize, grid: &StateGrid) -> Result<()> {
        match self {
            CostModel::Affine {
                intercept,
                coefficients,
            } => {
                if coefficients.len() != num_pairs {
                    return Err(Error::LengthMismatch {
                        what: "cost coefficients",
                        expected: num_pairs,
                        got: coefficients.len(),
                    });
                }
                if !intercept.is_finite() || coefficients.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidInstance {
                        field: "cost",
                        message: format!("affine cost has a non-finite parameter"),
                    });
                }
            }
            CostModel::Tabulated { table } => {
                if table.len() != grid.state_count() {
                    return Err(Error::LengthMismatch {
                        what: "cost table",
                        expected: grid.state_count(),
                        got: table.len(),
                    });
                }
                if let Some(idx) = table.iter().position(|c| !c.is_finite()) {
                    return Err(Error::InfiniteCost { state: idx });
                }
            }
        }
        Ok(())
    }
}

/// A posted charge for one `(area, slot)` pair. `Closed` stands for the
/// not-offered convention (an infinite charge): the slot contributes no
/// exponential term to the logit denominator at all, so results do not
/// depend on any arbitrary large stand-in price.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SlotPrice {
    Open(f64),
    Closed,
}

impl SlotPrice {
    pub fn is_closed(&self) -> bool {
        matches!(self, SlotPrice::Closed)
    }
}

/// Decision vector: one price per `(area, slot)` pair, area-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceVector {
    num_areas: usize,
    num_slots: usize,
    entries: Vec<SlotPrice>,
}

impl PriceVector {
    pub fn uniform(num_areas: usize, num_slots: usize, price: f64) -> Self {
        PriceVector {
            num_areas,
            num_slots,
            entries: vec![SlotPrice::Open(price); num_areas * num_slots],
        }
    }

    pub fn all_closed(num_areas: usize, num_slots: usize) -> Self {
        PriceVector {
            num_areas,
            num_slots,
            entries: vec![SlotPrice::Closed; num_areas * num_slots],
        }
    }

    pub fn from_entries(
        num_areas: usize,
        num_slots: usize,
        entries: Vec<SlotPrice>,
    ) -> Result<Self> {
        if entries.len() != num_areas * num_slots {
            return Err(Error::LengthMismatch {
                what: "price entries",
                expected: num_areas * num_slots,
                got: entries.len(),
            });
        }
        Ok(PriceVector {
            num_areas,
            num_slots,
            entries,
        })
    }

    pub fn num_areas(&self) -> usize {
        self.num_areas
    }

    pub fn num_slots(&self) -> usize {
        self.num_slots
    }

    pub fn get(&self, area: usize, slot: usize) -> SlotPrice {
        self.entries[area * self.num_slots + slot]
    }

    pub fn set(&mut self, area: usize, slot: usize, price: SlotPrice) {
        self.entries[area * self.num_slots + slot] = price;
    }

    pub fn entries(&self) -> &[SlotPrice] {
        &self.entries
    }

    /// Checks every open entry against the instance's price band.
    pub fn validate(&self, inst: &ProblemInstance) -> Result<()> {
        for area in 0..self.num_areas {
            for slot in 0..self.num_slots {
                if let SlotPrice::Open(d) = self.get(area, slot) {
                    if !d.is_finite() {
                        return Err(Error::NonFinitePrice { area, slot });
                    }
                    if d < inst.d_min || d > inst.d_max {
                        return Err(Error::InvalidInstance {
                            field: "price",
                            message: format!(
                                "price {d} for area {area}, slot {slot} outside [{}, {}]",
                                inst.d_min, inst.d_max
                            ),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Purchase masses induced by a price vector: `p[a,s]` is the probability
/// that the current step produces an order for `(a, s)`, already scaled by
/// the arrival rate and the area mix. `no_purchase[a]` carries the rest of
/// area `a`'s arrival mass, so per area the masses add up to
/// `lambda * area_prob[a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceProbabilities {
    num_areas: usize,
    num_slots: usize,
    slot: Vec<f64>,
    no_purchase: Vec<f64>,
}

impl ChoiceProbabilities {
    pub(crate) fn zeroed(num_areas: usize, num_slots: usize) -> Self {
        ChoiceProbabilities {
            num_areas,
            num_slots,
            slot: vec![0.0; num_areas * num_slots],
            no_purchase: vec![0.0; num_areas],
        }
    }

    pub fn from_parts(
        num_areas: usize,
        num_slots: usize,
        slot: Vec<f64>,
        no_purchase: Vec<f64>,
    ) -> Result<Self> {
        if slot.len() != num_areas * num_slots {
            return Err(Error::LengthMismatch {
                what: "slot probabilities",
                expected: num_areas * num_slots,
                got: slot.len(),
            });
        }
        if no_purchase.len() != num_areas {
            return Err(Error::LengthMismatch {
                what: "no-purchase probabilities",
                expected: num_areas,
                got: no_purchase.len(),
            });
        }
        Ok(ChoiceProbabilities {
            num_areas,
            num_slots,
            slot,
            no_purchase,
        })
    }

    pub fn num_areas(&self) -> usize {
        self.num_areas
    }

    pub fn num_slots(&self) -> usize {
        self.num_slots
    }

    /// Purchase mass of `(area, slot)`.
    pub fn p(&self, area: usize, slot: usize) -> f64 {
        self.slot[area * self.num_slots + slot]
    }

    pub(crate) fn set_p(&mut self, area: usize, slot: usize, value: f64) {
        self.slot[area * self.num_slots + slot] = value;
    }

    /// No-purchase mass of `area`.
    pub fn no_purchase(&self, area: usize) -> f64 {
        self.no_purchase[area]
    }

    pub(crate) fn set_no_purchase(&mut self, area: usize, value: f64) {
        self.no_purchase[area] = value;
    }

    pub fn slot_masses(&self) -> &[f64] {
        &self.slot
    }

    /// Total purchase mass over all pairs; at most `lambda`.
    pub fn total(&self) -> f64 {
        self.slot.iter().sum()
    }
}

/// Immutable problem data; safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub num_areas: usize,
    pub num_slots: usize,
    /// Number of booking time steps before the delivery day.
    pub horizon: u32,
    /// Per-step customer arrival probability, in (0, 1).
    pub lambda: f64,
    /// Probability that an arriving customer belongs to each area; sums to 1.
    pub area_prob: Vec<f64>,
    /// Constant utility offset of the logit model.
    pub beta_c: f64,
    /// Slot popularity coefficients, one per slot.
    pub beta_slot: Vec<f64>,
    /// Price sensitivity; strictly negative.
    pub beta_d: f64,
    /// Lowest admissible charge.
    pub d_min: f64,
    /// Highest admissible charge.
    pub d_max: f64,
    /// Expected net revenue per accepted order, before the delivery charge.
    pub r: f64,
    /// Maximum number of orders per `(area, slot)` pair, area-major.
    pub capacity: Vec<u32>,
    pub cost: CostModel,
}

impl ProblemInstance {
    pub fn num_pairs(&self) -> usize {
        self.num_areas * self.num_slots
    }

    pub fn pair_index(&self, area: usize, slot: usize) -> usize {
        area * self.num_slots + slot
    }

    /// Deterministic utility of `(area, slot)` before the price term.
    pub fn utility(&self, slot: usize) -> f64 {
        self.beta_c + self.beta_slot[slot]
    }

    /// Arrival mass routed to `area` each step: `lambda * area_prob[a]`.
    pub fn arrival_weight(&self, area: usize) -> f64 {
        self.lambda * self.area_prob[area]
    }

    /// The order lattice induced by the capacity vector.
    pub fn grid(&self) -> Result<StateGrid> {
        StateGrid::new(self.capacity.clone())
    }

    pub fn validate(&self) -> Result<()> {
        fn fail(field: &'static str, message: alloc::string::String) -> Result<()> {
            Err(Error::InvalidInstance { field, message })
        }

        if self.num_areas == 0 {
            return fail("num_areas", format!("must be positive"));
        }
        if self.num_slots == 0 {
            return fail("num_slots", format!("must be positive"));
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return fail("lambda", format!("must lie in (0, 1), got {}", self.lambda));
        }
        if self.area_prob.len() != self.num_areas {
            return Err(Error::LengthMismatch {
                what: "area_prob",
                expected: self.num_areas,
                got: self.area_prob.len(),
            });
        }
        if self.area_prob.iter().any(|p| !(*p >= 0.0 && *p <= 1.0)) {
            return fail("area_prob", format!("entries must lie in [0, 1]"));
        }
        let mass: f64 = self.area_prob.iter().sum();
        if (mass - 1.0).abs() > tolerances::PROBABILITY_SUM {
            return fail("area_prob", format!("entries sum to {mass}, expected 1"));
        }
        if !self.beta_c.is_finite() {
            return fail("beta_c", format!("must be finite"));
        }
        if self.beta_slot.len() != self.num_slots {
            return Err(Error::LengthMismatch {
                what: "beta_slot",
                expected: self.num_slots,
                got: self.beta_slot.len(),
            });
        }
        if self.beta_slot.iter().any(|b| !b.is_finite()) {
            return fail("beta_slot", format!("entries must be finite"));
        }
        if !(self.beta_d < 0.0) || !self.beta_d.is_finite() {
            return fail(
                "beta_d",
                format!("price sensitivity must be negative, got {}", self.beta_d),
            );
        }
        if !self.d_min.is_finite() || !self.d_max.is_finite() || self.d_min > self.d_max {
            return fail(
                "d_min/d_max",
                format!("need finite d_min <= d_max, got [{}, {}]", self.d_min, self.d_max),
            );
        }
        if !self.r.is_finite() {
            return fail("r", format!("must be finite"));
        }
        if self.capacity.len() != self.num_pairs() {
            return Err(Error::LengthMismatch {
                what: "capacity",
                expected: self.num_pairs(),
                got: self.capacity.len(),
            });
        }
        let grid = self.grid()?;
        self.cost.validate(self.num_pairs(), &grid)?;
        Ok(())
    }
}

/// Multinomial logit purchase masses for the posted prices `d`.
///
/// Per area, an open slot weighs in with `exp(beta_c + beta_slot[s] +
/// beta_d * d[a,s])`, the no-purchase outcome with `exp(0) = 1`, and closed
/// slots contribute nothing. Exponents are shifted by their maximum before
/// exponentiation so large `|beta_d| * d` cannot overflow.
pub fn mnl_probabilities(inst: &ProblemInstance, d: &PriceVector) -> Result<ChoiceProbabilities> {
    if d.num_areas() != inst.num_areas || d.num_slots() != inst.num_slots {
        return Err(Error::LengthMismatch {
            what: "price entries",
            expected: inst.num_pairs(),
            got: d.num_areas() * d.num_slots(),
        });
    }
    let mut out = ChoiceProbabilities::zeroed(inst.num_areas, inst.num_slots);
    let mut exponents = vec![f64::NEG_INFINITY; inst.num_slots];
    for area in 0..inst.num_areas {
        let weight = inst.arrival_weight(area);
        let mut shift = 0.0_f64; // exponent of the no-purchase outcome
        for slot in 0..inst.num_slots {
            exponents[slot] = match d.get(area, slot) {
                SlotPrice::Open(price) => {
                    if !price.is_finite() {
                        return Err(Error::NonFinitePrice { area, slot });
                    }
                    let v = inst.utility(slot) + inst.beta_d * price;
                    shift = shift.max(v);
                    v
                }
                SlotPrice::Closed => f64::NEG_INFINITY,
            };
        }
        let mut denom = num::exp(-shift);
        for &v in exponents.iter() {
            if v > f64::NEG_INFINITY {
                denom += num::exp(v - shift);
            }
        }
        for slot in 0..inst.num_slots {
            let pi = if exponents[slot] > f64::NEG_INFINITY {
                num::exp(exponents[slot] - shift) / denom
            } else {
                0.0
            };
            out.set_p(area, slot, weight * pi);
        }
        out.set_no_purchase(area, weight * num::exp(-shift) / denom);
    }
    Ok(out)
}

/// Inverts the logit map: recovers the unique price vector that induces `p`.
///
/// Zero slot mass is read as the slot being closed. Open slots need strictly
/// positive mass and a strictly positive no-purchase mass in their area; the
/// recovered price is `(ln(p[a,s] / p[a,0]) - beta_c - beta_slot[s]) / beta_d`
/// and is not clamped to the price band.
pub fn price_from_probability(
    inst: &ProblemInstance,
    p: &ChoiceProbabilities,
) -> Result<PriceVector> {
    if p.num_areas() != inst.num_areas || p.num_slots() != inst.num_slots {
        return Err(Error::LengthMismatch {
            what: "slot probabilities",
            expected: inst.num_pairs(),
            got: p.num_areas() * p.num_slots(),
        });
    }
    let mut d = PriceVector::all_closed(inst.num_areas, inst.num_slots);
    for area in 0..inst.num_areas {
        let p0 = p.no_purchase(area);
        for slot in 0..inst.num_slots {
            let mass = p.p(area, slot);
            if mass == 0.0 {
                continue;
            }
            if !(mass > 0.0) || !mass.is_finite() {
                return Err(Error::ProbabilityDomain {
                    area,
                    slot,
                    value: mass,
                });
            }
            if !(p0 > 0.0) {
                return Err(Error::ZeroNoPurchase { area });
            }
            let price = (num::ln(mass / p0) - inst.utility(slot)) / inst.beta_d;
            d.set(area, slot, SlotPrice::Open(price));
        }
    }
    Ok(d)
}
