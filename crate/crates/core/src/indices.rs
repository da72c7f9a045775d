//! Temporal and spatial multi-indices with their weighted norms.
//!
//! A temporal index θ = (θ₁,…,θₙ) has entries in `{0,…,d}`: `0` stands for
//! the time direction and `i ≥ 1` for the Brownian coordinate `i`. Its
//! weight counts time entries twice, because a time derivative behaves like
//! a second-order path derivative.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Temporal multi-index θ over drivers `{0,…,d}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TemporalIndex {
    entries: Vec<u8>,
    d: usize,
}

impl TemporalIndex {
    /// Builds θ from its entries, checking each lies in `{0,…,d}`.
    pub fn new(entries: Vec<u8>, d: usize) -> Result<Self> {
        if d > u8::MAX as usize {
            return Err(Error::Config(format!("driver dimension {d} is too large")));
        }
        if let Some(&bad) = entries.iter().find(|&&e| e as usize > d) {
            return Err(Error::Config(format!("index entry {bad} exceeds driver dimension {d}")));
        }
        Ok(Self { entries, d })
    }

    /// The empty index, whose iterated integral is the integrand itself.
    pub fn empty(d: usize) -> Self {
        Self { entries: Vec::new(), d }
    }

    /// Entries θ₁,…,θₙ.
    pub fn entries(&self) -> &[u8] {
        &self.entries
    }

    /// Driver dimension `d`.
    pub fn dim(&self) -> usize {
        self.d
    }

    /// Length `|θ|₀`.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// True for the empty index.
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// True when no entry is the time direction.
    pub fn is_pure_noise(&self) -> bool {
        self.entries.iter().all(|&e| e != 0)
    }

    /// Concatenation `(self, other)`.
    pub fn concat(&self, other: &TemporalIndex) -> TemporalIndex {
        let mut entries = self.entries.clone();
        entries.extend_from_slice(&other.entries);
        TemporalIndex { entries, d: self.d.max(other.d) }
    }
}

impl fmt::Display for TemporalIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, e) in self.entries.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// Weight of a raw entry slice: length plus the number of zero entries.
#[inline]
pub fn weight_of(entries: &[u8]) -> usize {
    entries.len() + entries.iter().filter(|&&e| e == 0).count()
}

/// Weighted norm `|θ| = |θ|₀ + #{i : θᵢ = 0}`.
pub fn weight(theta: &TemporalIndex) -> usize {
    weight_of(&theta.entries)
}

/// Reversed index `−θ = (θₙ,…,θ₁)`.
pub fn reverse(theta: &TemporalIndex) -> TemporalIndex {
    let mut entries = theta.entries.clone();
    entries.reverse();
    TemporalIndex { entries, d: theta.d }
}

/// Spatial multi-index ℓ ∈ ℕ^{d'}.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpatialIndex {
    entries: Vec<u32>,
}

impl SpatialIndex {
    /// Builds ℓ from its entries; the length is the spatial dimension d'.
    pub fn new(entries: Vec<u32>) -> Self {
        Self { entries }
    }

    /// The zero index of dimension `d_prime`.
    pub fn zero(d_prime: usize) -> Self {
        Self { entries: vec![0; d_prime] }
    }

    /// The unit index `e_i` of dimension `d_prime`.
    pub fn unit(d_prime: usize, i: usize) -> Self {
        let mut entries = vec![0; d_prime];
        entries[i] = 1;
        Self { entries }
    }

    /// Entries ℓ₁,…,ℓ_{d'}.
    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    /// Spatial dimension d'.
    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    /// Order `|ℓ| = Σ ℓᵢ`.
    pub fn order(&self) -> usize {
        self.entries.iter().map(|&e| e as usize).sum()
    }

    /// `ℓ! = Π ℓᵢ!`, equal to 1 for the zero index.
    pub fn factorial(&self) -> f64 {
        self.entries
            .iter()
            .map(|&e| (1..=e).map(f64::from).product::<f64>())
            .product()
    }

    /// `ℓ + e_i`.
    pub fn raised(&self, i: usize) -> SpatialIndex {
        let mut entries = self.entries.clone();
        entries[i] += 1;
        SpatialIndex { entries }
    }
}

impl fmt::Display for SpatialIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, e) in self.entries.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// A pair (θ, ℓ) indexing one term of a random-field expansion.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CombinedIndex {
    pub theta: TemporalIndex,
    pub ell: SpatialIndex,
}

impl CombinedIndex {
    /// Combined weight `|(θ,ℓ)| = |θ| + |ℓ|`.
    pub fn weight(&self) -> usize {
        weight(&self.theta) + self.ell.order()
    }
}

impl fmt::Display for CombinedIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "theta={} ell={}", self.theta, self.ell)
    }
}

impl Serialize for CombinedIndex {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// All temporal indices over `{0,…,d}` with weight at most `m`, ordered by
/// weight, then length, then lexicographically.
pub fn enumerate_temporal(m: usize, d: usize) -> Vec<TemporalIndex> {
    let mut out = vec![TemporalIndex::empty(d)];
    let mut frontier = vec![Vec::<u8>::new()];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for base in &frontier {
            for e in 0..=d as u8 {
                let mut cand = base.clone();
                cand.push(e);
                if weight_of(&cand) <= m {
                    next.push(cand);
                }
            }
        }
        out.extend(next.iter().map(|e| TemporalIndex { entries: e.clone(), d }));
        frontier = next;
    }
    out.sort_by(|a, b| (weight(a), a.len(), &a.entries).cmp(&(weight(b), b.len(), &b.entries)));
    out
}

/// All spatial indices of dimension `d_prime` with order at most `m`.
fn enumerate_spatial(m: usize, d_prime: usize) -> Vec<SpatialIndex> {
    let mut out = vec![Vec::<u32>::new()];
    for _ in 0..d_prime {
        let mut next = Vec::new();
        for base in &out {
            let used: u32 = base.iter().sum();
            for e in 0..=(m as u32 - used) {
                let mut cand = base.clone();
                cand.push(e);
                next.push(cand);
            }
        }
        out = next;
    }
    out.into_iter().map(SpatialIndex::new).collect()
}

/// Every (θ, ℓ) with `|(θ,ℓ)| ≤ m`, each once, in the canonical order:
/// combined weight, then `|θ|₀`, then θ lexicographically, then ℓ.
pub fn enumerate_indices(m: i64, d: usize, d_prime: usize) -> Result<Vec<CombinedIndex>> {
    if m < 0 {
        return Err(Error::Config(format!("expansion order must be nonnegative, got {m}")));
    }
    let m = m as usize;
    let thetas = enumerate_temporal(m, d);
    let ells = enumerate_spatial(m, d_prime);
    let mut out: Vec<CombinedIndex> = thetas
        .iter()
        .flat_map(|th| {
            ells.iter()
                .filter(move |l| weight(th) + l.order() <= m)
                .map(move |l| CombinedIndex { theta: th.clone(), ell: l.clone() })
        })
        .collect();
    out.sort_by(|a, b| {
        (a.weight(), a.theta.len(), &a.theta.entries, &a.ell.entries).cmp(&(
            b.weight(),
            b.theta.len(),
            &b.theta.entries,
            &b.ell.entries,
        ))
    });
    Ok(out)
}

/// Monomial `h^ℓ = Π hᵢ^{ℓᵢ}`, equal to 1 when `|ℓ| = 0`.
pub fn monomial(h: &[f64], ell: &SpatialIndex) -> Result<f64> {
    if h.len() != ell.dim() {
        return Err(Error::Query(format!(
            "monomial: h has {} components, index has dimension {}",
            h.len(),
            ell.dim()
        )));
    }
    Ok(h.iter().zip(&ell.entries).map(|(&x, &e)| x.powi(e as i32)).product())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn th(e: &[u8], d: usize) -> TemporalIndex {
        TemporalIndex::new(e.to_vec(), d).unwrap()
    }

    #[test]
    fn weights() {
        assert_eq!(weight(&TemporalIndex::empty(2)), 0);
        assert_eq!(weight(&th(&[0], 1)), 2);
        assert_eq!(weight(&th(&[1, 2], 2)), 2);
        assert_eq!(weight(&th(&[0, 1, 0], 1)), 5);
    }

    #[test]
    fn entries_are_validated() {
        assert!(matches!(TemporalIndex::new(vec![3], 2), Err(Error::Config(_))));
    }

    #[test]
    fn reversal() {
        assert_eq!(reverse(&th(&[1, 2, 0], 2)), th(&[0, 2, 1], 2));
        assert_eq!(reverse(&TemporalIndex::empty(2)), TemporalIndex::empty(2));
    }

    #[test]
    fn enumeration_examples() {
        let e0 = enumerate_indices(0, 3, 2).unwrap();
        assert_eq!(e0.len(), 1);
        assert!(e0[0].theta.is_empty() && e0[0].ell.order() == 0);

        let e1 = enumerate_indices(1, 1, 1).unwrap();
        let shown: Vec<String> = e1.iter().map(|c| c.to_string()).collect();
        assert_eq!(shown, ["theta=() ell=(0)", "theta=() ell=(1)", "theta=(1) ell=(0)"]);

        let e2 = enumerate_indices(2, 2, 0).unwrap();
        let shown: Vec<String> = e2.iter().map(|c| c.theta.to_string()).collect();
        assert_eq!(shown, ["()", "(1)", "(2)", "(0)", "(1,1)", "(1,2)", "(2,1)", "(2,2)"]);

        assert!(matches!(enumerate_indices(-1, 1, 0), Err(Error::Config(_))));
    }

    /// Counts by brute force over all sequences of length ≤ m.
    fn brute_count(m: usize, d: usize, d_prime: usize) -> usize {
        let mut thetas = 0usize;
        let mut count_by_weight = vec![0usize; m + 1];
        let mut stack = vec![Vec::<u8>::new()];
        while let Some(s) = stack.pop() {
            let w = weight_of(&s);
            if w > m {
                continue;
            }
            thetas += 1;
            count_by_weight[w] += 1;
            if s.len() < m {
                for e in 0..=d as u8 {
                    let mut c = s.clone();
                    c.push(e);
                    stack.push(c);
                }
            }
        }
        let _ = thetas;
        // Number of ℓ ∈ ℕ^{d'} with |ℓ| ≤ r is C(r + d', d').
        let spatial = |r: usize| -> usize {
            let mut num = 1usize;
            let mut den = 1usize;
            for k in 1..=d_prime {
                num *= r + k;
                den *= k;
            }
            num / den
        };
        (0..=m).map(|w| count_by_weight[w] * spatial(m - w)).sum()
    }

    #[test]
    fn counts_match_brute_force() {
        let counts: Vec<usize> = (0..4).map(|m| enumerate_indices(m, 1, 0).unwrap().len()).collect();
        assert_eq!(counts, [1, 2, 4, 7]);
        for m in 0..5 {
            for d in 1..3 {
                for dp in 0..3 {
                    assert_eq!(enumerate_indices(m as i64, d, dp).unwrap().len(), brute_count(m, d, dp));
                }
            }
        }
    }

    #[test]
    fn monomials() {
        assert_eq!(monomial(&[2.0, 3.0], &SpatialIndex::new(vec![1, 2])).unwrap(), 18.0);
        assert_eq!(monomial(&[0.0, 5.0], &SpatialIndex::new(vec![1, 0])).unwrap(), 0.0);
        assert_eq!(monomial(&[1.7, -4.0], &SpatialIndex::zero(2)).unwrap(), 1.0);
        assert!(matches!(monomial(&[1.0], &SpatialIndex::zero(2)), Err(Error::Query(_))));
    }

    #[test]
    fn factorials() {
        assert_eq!(SpatialIndex::zero(3).factorial(), 1.0);
        assert_eq!(SpatialIndex::new(vec![2, 3]).factorial(), 12.0);
    }

    proptest! {
        #[test]
        fn weight_is_additive(a in proptest::collection::vec(0u8..3, 0..6),
                              b in proptest::collection::vec(0u8..3, 0..6)) {
            let ta = th(&a, 2);
            let tb = th(&b, 2);
            prop_assert_eq!(weight(&ta.concat(&tb)), weight(&ta) + weight(&tb));
        }

        #[test]
        fn reverse_is_weight_preserving_involution(a in proptest::collection::vec(0u8..4, 0..8)) {
            let t = th(&a, 3);
            prop_assert_eq!(reverse(&reverse(&t)), t.clone());
            prop_assert_eq!(weight(&reverse(&t)), weight(&t));
            prop_assert_eq!(reverse(&t).len(), t.len());
        }

        #[test]
        fn enumeration_is_monotone(m in 0i64..4, d in 1usize..3, dp in 0usize..3) {
            let n = enumerate_indices(m, d, dp).unwrap().len();
            prop_assert!(enumerate_indices(m + 1, d, dp).unwrap().len() >= n);
            prop_assert!(enumerate_indices(m, d + 1, dp).unwrap().len() >= n);
            prop_assert!(enumerate_indices(m, d, dp + 1).unwrap().len() >= n);
        }

        #[test]
        fn enumeration_has_no_duplicates(m in 0i64..4, d in 1usize..3, dp in 0usize..3) {
            let all = enumerate_indices(m, d, dp).unwrap();
            let set: std::collections::HashSet<_> = all.iter().cloned().collect();
            prop_assert_eq!(set.len(), all.len());
            prop_assert!(all.iter().all(|c| c.weight() <= m as usize));
        }
    }
}
