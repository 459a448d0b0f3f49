//! Graded multi-index sets for bivariate Taylor expansions.
//!
//! Every matrix assembled from Taylor data in this crate indexes its rows and
//! columns by one of three families of index sets, all sharing one fixed
//! ordering (graded lexicographic: ascending total degree, then ascending
//! first index) so that matrices are reproducible between runs:
//!
//! * Λ_K — all pairs (m, n) with m + n ≤ K; (K+1)(K+2)/2 elements;
//! * Λ¹_K — the subset with m ≤ 1, the derivatives that survive elimination
//!   through the differential equation; 2K + 1 elements;
//! * Λ²_K — the complementary subset with m ≥ 2, the derivatives that are
//!   eliminated; Λ_K = Λ¹_K ∪ Λ²_K disjointly.

use serde::Serialize;

/// Which family a [`MultiIndexSet`] belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum IndexKind {
    /// Λ_K: every (m, n) with m + n ≤ K.
    Full,
    /// Λ¹_K: the pairs with m ≤ 1.
    FirstOrder,
    /// Λ²_K: the pairs with m ≥ 2.
    Reduced,
}

/// An ordered set of bivariate multi-indices (m, n).
///
/// The ordering is graded lexicographic and is part of the public contract:
/// position lookups drive the row/column layout of every locally assembled
/// matrix in the crate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiIndexSet {
    kind: IndexKind,
    max_degree: usize,
    pairs: Vec<(usize, usize)>,
}

impl MultiIndexSet {
    /// Λ_K in graded lexicographic order.
    pub fn full(max_degree: usize) -> Self {
        let pairs = graded_pairs(max_degree, |_, _| true);
        debug_assert_eq!(pairs.len(), (max_degree + 1) * (max_degree + 2) / 2);
        MultiIndexSet {
            kind: IndexKind::Full,
            max_degree,
            pairs,
        }
    }

    /// Λ¹_K: the multi-indices with m ≤ 1, in the shared global order.
    pub fn first_order(max_degree: usize) -> Self {
        let pairs = graded_pairs(max_degree, |m, _| m <= 1);
        debug_assert_eq!(pairs.len(), 2 * max_degree + 1);
        MultiIndexSet {
            kind: IndexKind::FirstOrder,
            max_degree,
            pairs,
        }
    }

    /// Λ²_K: the multi-indices with m ≥ 2, in the shared global order.
    pub fn reduced(max_degree: usize) -> Self {
        MultiIndexSet {
            kind: IndexKind::Reduced,
            max_degree,
            pairs: graded_pairs(max_degree, |m, _| m >= 2),
        }
    }

    /// The family this set belongs to.
    pub fn kind(&self) -> IndexKind {
        self.kind
    }

    /// The degree bound K.
    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Number of multi-indices in the set.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    /// Whether the set is empty (only Λ²_K with K ≤ 1).
    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// The multi-indices in order.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Iterate over the multi-indices in order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().copied()
    }

    /// Position of (m, n) in the ordering, if the set contains it.
    pub fn position(&self, m: usize, n: usize) -> Option<usize> {
        self.pairs.iter().position(|&p| p == (m, n))
    }

    /// Whether the set contains (m, n).
    pub fn contains(&self, m: usize, n: usize) -> bool {
        self.position(m, n).is_some()
    }
}

fn graded_pairs(max_degree: usize, keep: impl Fn(usize, usize) -> bool) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for d in 0..=max_degree {
        for m in 0..=d {
            if keep(m, d - m) {
                pairs.push((m, d - m));
            }
        }
    }
    pairs
}

/// n! as a double. Exact for n ≤ 18.
pub fn factorial(n: usize) -> f64 {
    debug_assert!(n <= 18, "factorial({n}) is not exact in double precision");
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Binomial coefficient C(n, k) as a double. Zero when k > n.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut value = 1.0;
    for i in 0..k {
        value = value * (n - i) as f64 / (i + 1) as f64;
    }
    value.round()
}
