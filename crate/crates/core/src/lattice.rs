//! Boolean subset lattice over a ground set `{0, .., n-1}`.
//!
//! [`IndexSet`] is a bit pattern, [`SubsetTable`] a dense assignment of a value
//! to every one of the `2^n` subsets. The zeta and Möbius transforms below run
//! in `O(n 2^n)` value operations using the usual one-axis-at-a-time sweep and
//! work for any value type implementing [`Additive`] (scalars as well as
//! operators).

use std::fmt;

use thiserror::Error;

use crate::scalar::Field;

/// Largest supported ground-set size. Tables are dense, so `2^24` entries is
/// the practical ceiling.
pub const MAX_GROUND: usize = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("ground set of size {0} exceeds the supported maximum of {MAX_GROUND}")]
    TooLarge(usize),
    #[error("expected {expected} table entries for n = {n}, got {got}")]
    WrongLength { n: usize, expected: usize, got: usize },
    #[error("index {index} out of range for ground set of size {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("tables over different ground sets ({0} vs {1})")]
    SizeMismatch(usize, usize),
}

/// A subset of the ground set, stored as a bit pattern (bit `i` ↔ index `i`).
///
/// Indices are zero-based in the API. `Display` prints them one-based
/// (`{1,3}`), matching the usual mathematical labelling of the sets.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct IndexSet(u32);

impl IndexSet {
    pub const EMPTY: IndexSet = IndexSet(0);

    pub fn from_bits(bits: u32) -> Self {
        IndexSet(bits)
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    /// The whole ground set `{0, .., n-1}`.
    pub fn full(n: usize) -> Self {
        debug_assert!(n <= MAX_GROUND);
        IndexSet(((1u64 << n) - 1) as u32)
    }

    pub fn singleton(i: usize) -> Self {
        IndexSet(1 << i)
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        IndexSet(indices.into_iter().fold(0, |acc, i| acc | (1 << i)))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn with(self, i: usize) -> Self {
        IndexSet(self.0 | (1 << i))
    }

    pub fn without(self, i: usize) -> Self {
        IndexSet(self.0 & !(1 << i))
    }

    pub fn union(self, other: Self) -> Self {
        IndexSet(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        IndexSet(self.0 & other.0)
    }

    pub fn complement(self, n: usize) -> Self {
        IndexSet(!self.0 & Self::full(n).0)
    }

    pub fn is_subset_of(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    /// Members in increasing order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i)
            }
        })
    }

    /// All subsets of `{0, .., n-1}` in bit-pattern order.
    pub fn all(n: usize) -> impl Iterator<Item = IndexSet> {
        (0..1u32 << n).map(IndexSet)
    }

    /// All subsets of `self`, including `∅` and `self`.
    pub fn subsets(self) -> impl Iterator<Item = IndexSet> {
        let full = self.0;
        let mut next = Some(0u32);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == full { None } else { Some((cur.wrapping_sub(full)) & full) };
            Some(IndexSet(cur))
        })
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("∅");
        }
        f.write_str("{")?;
        for (k, i) in self.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Values that can be added and subtracted in place.
pub trait Additive: Clone {
    fn add_assign_ref(&mut self, rhs: &Self);
    fn sub_assign_ref(&mut self, rhs: &Self);
}

/// Values that can be multiplied by a scalar of type `K`.
pub trait Scale<K>: Additive {
    fn scaled(&self, k: &K) -> Self;
}

impl<F: Field> Additive for F {
    fn add_assign_ref(&mut self, rhs: &Self) {
        *self = self.clone() + rhs.clone();
    }

    fn sub_assign_ref(&mut self, rhs: &Self) {
        *self = self.clone() - rhs.clone();
    }
}

impl<F: Field> Scale<F> for F {
    fn scaled(&self, k: &F) -> Self {
        self.clone() * k.clone()
    }
}

/// Total assignment of a value to every subset of a ground set of size `n`.
#[derive(Clone, PartialEq)]
pub struct SubsetTable<V> {
    n: usize,
    values: Vec<V>,
}

impl<V: fmt::Debug> fmt::Debug for SubsetTable<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map()
            .entries(self.values.iter().enumerate().map(|(m, v)| (IndexSet(m as u32), v)))
            .finish()
    }
}

fn check_ground(n: usize) -> Result<(), LatticeError> {
    if n > MAX_GROUND {
        Err(LatticeError::TooLarge(n))
    } else {
        Ok(())
    }
}

impl<V> SubsetTable<V> {
    pub fn new(n: usize, values: Vec<V>) -> Result<Self, LatticeError> {
        check_ground(n)?;
        let expected = 1usize << n;
        if values.len() != expected {
            return Err(LatticeError::WrongLength { n, expected, got: values.len() });
        }
        Ok(SubsetTable { n, values })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(IndexSet) -> V) -> Result<Self, LatticeError> {
        check_ground(n)?;
        let values = IndexSet::all(n).map(&mut f).collect();
        Ok(SubsetTable { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, set: IndexSet) -> &V {
        &self.values[set.0 as usize]
    }

    pub fn get_mut(&mut self, set: IndexSet) -> &mut V {
        &mut self.values[set.0 as usize]
    }

    pub fn values(&self) -> &[V] {
        &self.values
    }

    pub fn into_values(self) -> Vec<V> {
        self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (IndexSet, &V)> {
        self.values.iter().enumerate().map(|(m, v)| (IndexSet(m as u32), v))
    }

    pub fn map<W>(&self, f: impl FnMut(&V) -> W) -> SubsetTable<W> {
        SubsetTable { n: self.n, values: self.values.iter().map(f).collect() }
    }
}

impl<V> std::ops::Index<IndexSet> for SubsetTable<V> {
    type Output = V;

    fn index(&self, set: IndexSet) -> &V {
        self.get(set)
    }
}

/// Applies `op(upper, lower)` to every pair `(A ∪ {i}, A)` with `i ∉ A`, one
/// axis at a time.
fn sweep<V>(values: &mut [V], op: impl Fn(&mut V, &mut V)) {
    let len = values.len();
    let mut half = 1;
    while half < len {
        for block in values.chunks_exact_mut(2 * half) {
            let (lower, upper) = block.split_at_mut(half);
            for (lo, up) in lower.iter_mut().zip(upper) {
                op(up, lo);
            }
        }
        half *= 2;
    }
}

/// Möbius transform: `out(A) = Σ_{B⊆A} (-1)^{|A|-|B|} f(B)`.
pub fn mobius_transform<V: Additive>(f: &SubsetTable<V>) -> SubsetTable<V> {
    let mut out = f.clone();
    sweep(&mut out.values, |up, lo| up.sub_assign_ref(lo));
    out
}

/// Inverse Möbius (zeta) transform: `out(A) = Σ_{B⊆A} d(B)`.
pub fn inverse_mobius<V: Additive>(d: &SubsetTable<V>) -> SubsetTable<V> {
    let mut out = d.clone();
    sweep(&mut out.values, |up, lo| up.add_assign_ref(lo));
    out
}

/// Superset sums: `out(A) = Σ_{B⊇A} q(B)`.
pub fn cumulative_superset_sum<V: Additive>(q: &SubsetTable<V>) -> SubsetTable<V> {
    let mut out = q.clone();
    sweep(&mut out.values, |up, lo| lo.add_assign_ref(up));
    out
}

/// Per-index marginals `Σ_{A∋i} q(A)` for every `i`.
pub fn index_marginals<V: Additive>(q: &SubsetTable<V>) -> Vec<V> {
    let upper = cumulative_superset_sum(q);
    (0..q.n).map(|i| upper[IndexSet::singleton(i)].clone()).collect()
}

/// `Σ_A f(A)·q(A)`.
pub fn pair_contraction<K, V: Scale<K>>(
    f: &SubsetTable<V>,
    q: &SubsetTable<K>,
) -> Result<V, LatticeError> {
    if f.n != q.n {
        return Err(LatticeError::SizeMismatch(f.n, q.n));
    }
    let mut pairs = f.values.iter().zip(&q.values);
    let (f0, q0) = pairs.next().expect("tables are never empty");
    let mut acc = f0.scaled(q0);
    for (fv, qv) in pairs {
        acc.add_assign_ref(&fv.scaled(qv));
    }
    Ok(acc)
}
