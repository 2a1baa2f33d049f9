//! Multi-indices over k coordinates and their deterministic enumeration.

use serde::Serialize;
use std::cmp::Ordering;
use std::fmt;

/// A k-tuple of nonnegative per-coordinate degrees indexing a tensor-product
/// Hermite basis function.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        MultiIndex(entries)
    }

    /// Dimension k.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    /// Total degree `|J|`, the entry sum.
    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Support size `#J`, the count of nonzero entries.
    pub fn support(&self) -> usize {
        self.0.iter().filter(|&&v| v != 0).count()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// Graded order, then leading-entry-first within a grade: (0,0), (1,0),
/// (0,1), (2,0), (1,1), (0,2), ... This matches the enumeration order of
/// [`enumerate_multi_indices`], so sorted maps iterate in enumeration order.
impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Entry-parity filter for enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    All,
    /// Keep only multi-indices whose every entry is even.
    EvenOnly,
}

/// All multi-indices of dimension `k` with total degree `<= d`, filtered by
/// parity, in the deterministic graded order described on [`MultiIndex`].
///
/// With `Parity::All` and `include_zero`, the count is `binomial(k + d, d)`.
pub fn enumerate_multi_indices(k: usize, d: u32, parity: Parity, include_zero: bool) -> Vec<MultiIndex> {
    assert!(k >= 1, "dimension must be >= 1");
    let mut out = Vec::new();
    let mut prefix = vec![0u32; k];
    for total in 0..=d {
        if total == 0 {
            if include_zero {
                out.push(MultiIndex::new(prefix.clone()));
            }
            continue;
        }
        fill(&mut out, &mut prefix, 0, total, parity);
    }
    out
}

fn fill(out: &mut Vec<MultiIndex>, prefix: &mut Vec<u32>, slot: usize, rem: u32, parity: Parity) {
    let k = prefix.len();
    if slot == k - 1 {
        if parity == Parity::EvenOnly && rem % 2 == 1 {
            return;
        }
        prefix[slot] = rem;
        out.push(MultiIndex::new(prefix.clone()));
        prefix[slot] = 0;
        return;
    }
    let mut v = rem;
    loop {
        if parity != Parity::EvenOnly || v % 2 == 0 {
            prefix[slot] = v;
            fill(out, prefix, slot + 1, rem - v, parity);
        }
        if v == 0 {
            break;
        }
        v -= 1;
    }
    prefix[slot] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::binomial_u128;
    use proptest::prelude::*;

    fn mi(entries: &[u32]) -> MultiIndex {
        MultiIndex::new(entries.to_vec())
    }

    #[test]
    fn degree_and_support() {
        let j = mi(&[2, 0, 3]);
        assert_eq!(j.total_degree(), 5);
        assert_eq!(j.support(), 2);
        assert_eq!(j.len(), 3);
        assert!(!j.is_zero());
        assert!(mi(&[0, 0]).is_zero());
    }

    #[test]
    fn enumeration_order_k2_d2() {
        let idx = enumerate_multi_indices(2, 2, Parity::All, true);
        let expected: Vec<MultiIndex> = [
            [0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2],
        ]
        .iter()
        .map(|e| mi(e))
        .collect();
        assert_eq!(idx, expected);
    }

    #[test]
    fn even_only_excluding_zero() {
        let idx = enumerate_multi_indices(2, 2, Parity::EvenOnly, false);
        assert_eq!(idx, vec![mi(&[2, 0]), mi(&[0, 2])]);

        let idx = enumerate_multi_indices(3, 4, Parity::EvenOnly, false);
        assert_eq!(idx.len(), 9);
        assert!(idx.iter().all(|j| j.entries().iter().all(|v| v % 2 == 0)));
        assert!(idx.iter().all(|j| (1..=4).contains(&j.total_degree())));
    }

    #[test]
    fn sorted_order_equals_enumeration_order() {
        let mut idx = enumerate_multi_indices(3, 4, Parity::All, true);
        let original = idx.clone();
        idx.sort();
        assert_eq!(idx, original);
    }

    proptest! {
        #[test]
        fn count_matches_binomial(k in 1usize..=6, d in 0u32..=6) {
            let idx = enumerate_multi_indices(k, d, Parity::All, true);
            let expected = binomial_u128(k as u64 + d as u64, d as u64);
            prop_assert_eq!(idx.len() as u128, expected);
        }

        #[test]
        fn enumeration_has_no_duplicates(k in 1usize..=4, d in 0u32..=5) {
            let idx = enumerate_multi_indices(k, d, Parity::All, true);
            let mut dedup = idx.clone();
            dedup.sort();
            dedup.dedup();
            prop_assert_eq!(dedup.len(), idx.len());
        }
    }
}
