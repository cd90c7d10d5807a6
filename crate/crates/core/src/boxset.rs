//! Subsets of the box ground set `{0, .., n-1}`.

use std::fmt;

use fixedbitset::FixedBitSet;
use serde::{Serialize, Serializer};

use crate::error::{domain, Result};

/// A subset of `[n]`, tagged with its ground-set size `n`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BoxSet {
    bits: FixedBitSet,
}

impl BoxSet {
    pub fn empty(n: usize) -> Self {
        BoxSet {
            bits: FixedBitSet::with_capacity(n),
        }
    }

    pub fn full(n: usize) -> Self {
        let mut bits = FixedBitSet::with_capacity(n);
        bits.insert_range(..);
        BoxSet { bits }
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(n: usize, items: I) -> Result<Self> {
        let mut s = BoxSet::empty(n);
        for i in items {
            if i >= n {
                return domain(format!("box index {i} out of range for n = {n}"));
            }
            s.bits.insert(i);
        }
        Ok(s)
    }

    /// Low `n` bits of `mask`; `n <= 64`.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        debug_assert!(n <= 64);
        let mut s = BoxSet::empty(n);
        let mut m = mask;
        while m != 0 {
            let i = m.trailing_zeros() as usize;
            if i < n {
                s.bits.insert(i);
            }
            m &= m - 1;
        }
        s
    }

    pub fn to_mask(&self) -> Option<u64> {
        if self.arity() > 64 {
            return None;
        }
        Some(self.iter().fold(0u64, |m, i| m | (1 << i)))
    }

    pub fn arity(&self) -> usize {
        self.bits.len()
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.bits.contains(i)
    }

    pub fn insert(&mut self, i: usize) {
        self.bits.insert(i);
    }

    pub fn remove(&mut self, i: usize) {
        self.bits.set(i, false);
    }

    pub fn with(&self, i: usize) -> Self {
        let mut s = self.clone();
        s.insert(i);
        s
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }

    pub fn union(&self, other: &BoxSet) -> BoxSet {
        let mut bits = self.bits.clone();
        bits.union_with(&other.bits);
        BoxSet { bits }
    }

    pub fn intersection_count(&self, other: &BoxSet) -> usize {
        self.bits.intersection_count(&other.bits)
    }

    /// `|self \ other|`
    pub fn difference_count(&self, other: &BoxSet) -> usize {
        self.bits.difference_count(&other.bits)
    }

    pub fn is_disjoint(&self, other: &BoxSet) -> bool {
        self.bits.is_disjoint(&other.bits)
    }

    pub fn is_subset(&self, other: &BoxSet) -> bool {
        self.bits.is_subset(&other.bits)
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    /// Table key used by explicit cost JSON: sorted comma-joined indices.
    pub fn key(&self) -> String {
        self.iter()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn parse_key(n: usize, key: &str) -> Result<Self> {
        let key = key.trim();
        if key.is_empty() {
            return Ok(BoxSet::empty(n));
        }
        let mut items = Vec::new();
        for part in key.split(',') {
            match part.trim().parse::<usize>() {
                Ok(i) => items.push(i),
                Err(_) => return domain(format!("bad subset key {key:?}")),
            }
        }
        BoxSet::from_indices(n, items)
    }
}

impl Serialize for BoxSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}

impl fmt::Debug for BoxSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.key())
    }
}

/// All `2^n` subsets of `[n]` as bitmasks, `n <= 30`.
pub fn all_masks(n: usize) -> impl Iterator<Item = u32> {
    0..(1u32 << n)
}
