//! The order lattice: all vectors `0 <= x <= capacity`, flattened to dense
//! indices by mixed-radix encoding so value tables are plain arrays.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateGrid {
    capacity: Vec<u32>,
    strides: Vec<usize>,
    state_count: usize,
}

impl StateGrid {
    pub fn new(capacity: Vec<u32>) -> Result<Self> {
        if capacity.is_empty() {
            return Err(Error::InvalidInstance {
                field: "capacity",
                message: format!("the grid needs at least one (area, slot) pair"),
            });
        }
        let mut strides = vec![0usize; capacity.len()];
        let mut count: usize = 1;
        for (i, cap) in capacity.iter().enumerate() {
            strides[i] = count;
            let radix = *cap as usize + 1;
            count = count.checked_mul(radix).ok_or(Error::InvalidInstance {
                field: "capacity",
                message: format!("state count overflows the address space"),
            })?;
        }
        Ok(StateGrid {
            capacity,
            strides,
            state_count: count,
        })
    }

    /// Number of `(area, slot)` pairs, i.e. the lattice dimension.
    pub fn dimension(&self) -> usize {
        self.capacity.len()
    }

    pub fn state_count(&self) -> usize {
        self.state_count
    }

    pub fn capacity(&self) -> &[u32] {
        &self.capacity
    }

    /// Total capacity `sum(capacity)`: the largest reachable order count.
    pub fn total_capacity(&self) -> u64 {
        self.capacity.iter().map(|c| u64::from(*c)).sum()
    }

    pub fn contains(&self, x: &[u32]) -> bool {
        x.len() == self.capacity.len() && x.iter().zip(&self.capacity).all(|(xi, cap)| xi <= cap)
    }

    /// Flat index of `x`, or `None` when `x` is off the lattice.
    pub fn index_of(&self, x: &[u32]) -> Option<usize> {
        if !self.contains(x) {
            return None;
        }
        let mut idx = 0usize;
        for (xi, stride) in x.iter().zip(&self.strides) {
            idx += *xi as usize * stride;
        }
        Some(idx)
    }

    /// Decodes a flat index back into an order vector.
    pub fn state(&self, index: usize) -> Vec<u32> {
        debug_assert!(index < self.state_count);
        let mut x = vec![0u32; self.capacity.len()];
        self.write_state(index, &mut x);
        x
    }

    pub fn write_state(&self, index: usize, out: &mut [u32]) {
        for (i, cap) in self.capacity.iter().enumerate() {
            let radix = *cap as usize + 1;
            out[i] = ((index / self.strides[i]) % radix) as u32;
        }
    }

    /// Total number of orders in the state with the given index.
    pub fn state_sum(&self, index: usize) -> u64 {
        let mut sum = 0u64;
        for (i, cap) in self.capacity.iter().enumerate() {
            let radix = *cap as usize + 1;
            sum += ((index / self.strides[i]) % radix) as u64;
        }
        sum
    }

    /// Index of `x + 1_pair`, or `None` when the pair is at capacity.
    /// Adding one order along `pair` moves the flat index by its stride.
    pub fn successor(&self, index: usize, pair: usize) -> Option<usize> {
        let radix = self.capacity[pair] as usize + 1;
        let coord = (index / self.strides[pair]) % radix;
        if coord as u32 >= self.capacity[pair] {
            None
        } else {
            Some(index + self.strides[pair])
        }
    }

    /// All feasible successors `x + 1_pair` of the state at `index`.
    pub fn successors(&self, index: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for pair in 0..self.capacity.len() {
            if let Some(next) = self.successor(index, pair) {
                out.push((pair, next));
            }
        }
        out
    }

    /// Iterates states as `(index, order vector)` in index order.
    pub fn states(&self) -> impl Iterator<Item = (usize, Vec<u32>)> + '_ {
        (0..self.state_count).map(move |i| (i, self.state(i)))
    }

    /// Index of the all-capacity state, the absorbing corner of the lattice.
    pub fn full_state_index(&self) -> usize {
        self.state_count - 1
    }
}
