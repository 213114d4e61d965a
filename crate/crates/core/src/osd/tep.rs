//! Test error pattern enumeration.
//!
//! Full layers (weight `<= floor(s)`) are visited in lexicographic order of
//! their support. The partial layer at weight `floor(s) + 1` is produced lazily
//! in nondecreasing order of the summed reliabilities, so only the requested
//! prefix of `C(k, w)` is ever materialized.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::complexity::{fractional_tep_count, tep_count, Order};
use crate::error::{Error, Result};

/// Sum of `weights` over `support`, added in the order given.
pub(crate) fn support_sum(weights: &[f64], support: &[usize]) -> f64 {
    support.iter().fold(0.0, |acc, &i| acc + weights[i])
}

#[derive(Debug)]
struct Frontier {
    sum: f64,
    support: Vec<usize>,
    ranks: Vec<usize>,
}

impl PartialEq for Frontier {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Frontier {}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Frontier {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .sum
            .total_cmp(&self.sum)
            .then_with(|| other.support.cmp(&self.support))
    }
}

/// Lazily yields `w`-subsets of `0..k` in nondecreasing order of summed
/// weight, ties broken lexicographically on the sorted support.
///
/// States are rank tuples over the weights sorted ascending (ties by index);
/// a successor bumps one rank by one. Each bump never lowers the key, so a
/// best-first walk pops subsets in key order.
pub struct LightestSubsets<'a> {
    weights: &'a [f64],
    by_rank: Vec<usize>,
    w: usize,
    heap: BinaryHeap<Frontier>,
    seen: HashSet<Vec<usize>>,
}

impl<'a> LightestSubsets<'a> {
    pub fn new(weights: &'a [f64], w: usize) -> Self {
        let k = weights.len();
        let mut by_rank: Vec<usize> = (0..k).collect();
        by_rank.sort_by(|&a, &b| weights[a].total_cmp(&weights[b]).then(a.cmp(&b)));
        let mut it = LightestSubsets {
            weights,
            by_rank,
            w,
            heap: BinaryHeap::new(),
            seen: HashSet::new(),
        };
        if w <= k {
            it.push((0..w).collect());
        }
        it
    }

    fn push(&mut self, ranks: Vec<usize>) {
        if !self.seen.insert(ranks.clone()) {
            return;
        }
        let sum = ranks
            .iter()
            .fold(0.0, |acc, &r| acc + self.weights[self.by_rank[r]]);
        let mut support: Vec<usize> = ranks.iter().map(|&r| self.by_rank[r]).collect();
        support.sort_unstable();
        self.heap.push(Frontier {
            sum,
            support,
            ranks,
        });
    }
}

impl Iterator for LightestSubsets<'_> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let top = self.heap.pop()?;
        let k = self.weights.len();
        for j in 0..self.w {
            let limit = if j + 1 < self.w { top.ranks[j + 1] } else { k };
            if top.ranks[j] + 1 < limit {
                let mut next = top.ranks.clone();
                next[j] += 1;
                self.push(next);
            }
        }
        Some(top.support)
    }
}

/// Calls `visit` on every `w`-subset of `0..k` in lexicographic order.
/// Returns `false` if `visit` asked to stop.
pub fn for_each_combination<F: FnMut(&[usize]) -> bool>(k: usize, w: usize, mut visit: F) -> bool {
    fn rec<F: FnMut(&[usize]) -> bool>(
        k: usize,
        w: usize,
        start: usize,
        buf: &mut Vec<usize>,
        visit: &mut F,
    ) -> bool {
        if buf.len() == w {
            return visit(buf);
        }
        let need = w - buf.len();
        for i in start..=k - need {
            buf.push(i);
            let go = rec(k, w, i + 1, buf, visit);
            buf.pop();
            if !go {
                return false;
            }
        }
        true
    }
    if w > k {
        return true;
    }
    rec(k, w, 0, &mut Vec::with_capacity(w), &mut visit)
}

/// Materialized list of test patterns, as flip supports over the MRB.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TepList {
    pub patterns: Vec<Vec<usize>>,
    pub count: u64,
}

/// Size of the partial next-weight layer at order `s`.
pub(crate) fn partial_layer_size(k: usize, s: Order) -> Result<usize> {
    fractional_tep_count(k, s)?
        .to_usize()
        .ok_or_else(|| Error::InvalidOrder(format!("order {s} needs too many patterns")))
}

/// All patterns for order `s` in decoding order. `reliabilities` are the
/// `|y'|` of the `k` MRB positions.
pub fn build_tep_list(k: usize, s: Order, reliabilities: &[f64]) -> Result<TepList> {
    if reliabilities.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: reliabilities.len(),
        });
    }
    let count = tep_count(k, s)?
        .to_u64()
        .ok_or_else(|| Error::InvalidOrder(format!("order {s} needs too many patterns")))?;
    let mut patterns = Vec::new();
    for w in 0..=s.floor() as usize {
        for_each_combination(k, w, |c| {
            patterns.push(c.to_vec());
            true
        });
    }
    let extra = partial_layer_size(k, s)?;
    if extra > 0 {
        patterns.extend(LightestSubsets::new(reliabilities, s.floor() as usize + 1).take(extra));
    }
    debug_assert_eq!(patterns.len() as u64, count);
    Ok(TepList { patterns, count })
}
