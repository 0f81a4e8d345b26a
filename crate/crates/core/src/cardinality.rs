//! Overlapping set families, the union-cardinality function and its Shapley
//! division.
//!
//! For sets `S_1..S_n` the cardinality function is `μ(A) = |∪_{i∈A} S_i|`.
//! Its Möbius transform `𝔡` measures the overlaps, and dividing every overlap
//! equally among its owners gives the Shapley cardinality `M_A(i)`. The same
//! number is the average marginal contribution of `S_i` over all orders in
//! which the union can be built; both routes are provided and must agree
//! exactly.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{mobius_transform, IndexSet, LatticeError, SubsetTable, MAX_GROUND};
use crate::poly::beta;
use crate::scalar::Rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FamilyError {
    #[error("a family needs between 1 and {MAX_GROUND} sets, got {0}")]
    BadSize(usize),
    #[error("duplicate universe label `{0}`")]
    DuplicateLabel(String),
    #[error("set {set} contains `{label}`, which is not in the universe")]
    UnknownMember { set: usize, label: String },
    #[error("set {set} lists `{label}` more than once")]
    DuplicateMember { set: usize, label: String },
    #[error("index {index} not in the family of {n} sets")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("index {index} is not a member of {set}")]
    NotInSubset { index: usize, set: IndexSet },
    #[error("beta arguments out of range: a = {a}, n = {n}")]
    BetaRange { a: usize, n: usize },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Serialized form: `{"universe": [...], "sets": [[...], ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub universe: Vec<String>,
    pub sets: Vec<Vec<String>>,
}

/// `n` finite sets over a labelled universe.
#[derive(Clone, Debug, PartialEq)]
pub struct SetFamily {
    universe: Vec<String>,
    sets: Vec<Vec<String>>,
    // member bitsets over universe positions
    masks: Vec<Vec<u64>>,
}

impl SetFamily {
    pub fn new(universe: Vec<String>, sets: Vec<Vec<String>>) -> Result<Self, FamilyError> {
        if sets.is_empty() || sets.len() > MAX_GROUND {
            return Err(FamilyError::BadSize(sets.len()));
        }
        let mut position = BTreeMap::new();
        for (k, label) in universe.iter().enumerate() {
            if position.insert(label.as_str(), k).is_some() {
                return Err(FamilyError::DuplicateLabel(label.clone()));
            }
        }
        let words = universe.len().div_ceil(64).max(1);
        let mut masks = Vec::with_capacity(sets.len());
        for (s, members) in sets.iter().enumerate() {
            let mut mask = vec![0u64; words];
            for label in members {
                let &k = position
                    .get(label.as_str())
                    .ok_or_else(|| FamilyError::UnknownMember { set: s + 1, label: label.clone() })?;
                if mask[k / 64] >> (k % 64) & 1 == 1 {
                    return Err(FamilyError::DuplicateMember { set: s + 1, label: label.clone() });
                }
                mask[k / 64] |= 1 << (k % 64);
            }
            masks.push(mask);
        }
        Ok(SetFamily { universe, sets, masks })
    }

    /// Builds a family whose universe is the union of all members, in order of
    /// first appearance.
    pub fn from_sets<S: AsRef<str>>(sets: &[&[S]]) -> Result<Self, FamilyError> {
        let mut universe: Vec<String> = Vec::new();
        for set in sets {
            for m in set.iter() {
                if !universe.iter().any(|u| u == m.as_ref()) {
                    universe.push(m.as_ref().to_string());
                }
            }
        }
        let sets = sets.iter().map(|s| s.iter().map(|m| m.as_ref().to_string()).collect()).collect();
        SetFamily::new(universe, sets)
    }

    pub fn from_spec(spec: &FamilySpec) -> Result<Self, FamilyError> {
        SetFamily::new(spec.universe.clone(), spec.sets.clone())
    }

    pub fn to_spec(&self) -> FamilySpec {
        FamilySpec { universe: self.universe.clone(), sets: self.sets.clone() }
    }

    pub fn n(&self) -> usize {
        self.sets.len()
    }

    pub fn universe(&self) -> &[String] {
        &self.universe
    }

    pub fn sets(&self) -> &[Vec<String>] {
        &self.sets
    }

    fn check_set(&self, a: IndexSet) -> Result<(), FamilyError> {
        match a.iter().find(|&i| i >= self.n()) {
            Some(index) => Err(FamilyError::IndexOutOfRange { index, n: self.n() }),
            None => Ok(()),
        }
    }

    fn check_index(&self, i: usize) -> Result<(), FamilyError> {
        if i < self.n() {
            Ok(())
        } else {
            Err(FamilyError::IndexOutOfRange { index: i, n: self.n() })
        }
    }

    /// `μ(A)`: number of distinct members of `∪_{i∈A} S_i`.
    pub fn union_cardinality(&self, a: IndexSet) -> Result<u64, FamilyError> {
        self.check_set(a)?;
        let words = self.masks[0].len();
        let count = (0..words)
            .map(|w| a.iter().fold(0u64, |acc, i| acc | self.masks[i][w]).count_ones() as u64)
            .sum();
        Ok(count)
    }

    /// The labels of `∪_{i∈A} S_i`, in universe order.
    pub fn union_members(&self, a: IndexSet) -> Result<Vec<&str>, FamilyError> {
        self.check_set(a)?;
        Ok(self
            .universe
            .iter()
            .enumerate()
            .filter(|(k, _)| a.iter().any(|i| self.masks[i][k / 64] >> (k % 64) & 1 == 1))
            .map(|(_, l)| l.as_str())
            .collect())
    }

    /// `μ` on every subset. Unions are built depth-first so memory stays
    /// proportional to `n` times the universe size.
    pub fn mu_table(&self) -> SubsetTable<u64> {
        let n = self.n();
        let words = self.masks[0].len();
        let mut out = vec![0u64; 1 << n];
        let mut stack: Vec<Vec<u64>> = vec![vec![0u64; words]; n + 1];
        // stack[k] holds the union for the prefix of decisions on indices < k
        fn visit(
            family: &SetFamily,
            k: usize,
            bits: u32,
            stack: &mut Vec<Vec<u64>>,
            out: &mut [u64],
        ) {
            let n = family.n();
            if k == n {
                out[bits as usize] = stack[n].iter().map(|w| w.count_ones() as u64).sum();
                return;
            }
            let (head, tail) = stack.split_at_mut(k + 1);
            tail[0].copy_from_slice(&head[k]);
            visit(family, k + 1, bits, stack, out);
            let (head, tail) = stack.split_at_mut(k + 1);
            for (dst, (src, m)) in tail[0].iter_mut().zip(head[k].iter().zip(&family.masks[k])) {
                *dst = src | m;
            }
            visit(family, k + 1, bits | (1 << k), stack, out);
        }
        visit(self, 0, 0, &mut stack, &mut out);
        SubsetTable::new(n, out).expect("size checked at construction")
    }

    pub fn mu_rational(&self) -> SubsetTable<Rational> {
        self.mu_table().map(|&v| Rational::from_integer(BigInt::from(v)))
    }

    /// `𝔡 = Möbius(μ)`.
    pub fn overlap_table(&self) -> SubsetTable<Rational> {
        mobius_transform(&self.mu_rational())
    }

    /// `M_A(i) = Σ_{B⊆A, B∋i} 𝔡(B)/|B|`.
    pub fn shapley_direct(&self, a: IndexSet, i: usize) -> Result<Rational, FamilyError> {
        self.check_set(a)?;
        self.check_index(i)?;
        if !a.contains(i) {
            return Err(FamilyError::NotInSubset { index: i, set: a });
        }
        let d = self.overlap_table();
        Ok(shapley_from_overlaps(&d, a, i))
    }

    /// `λ_a(i) = Σ_{|A|=a, A∋i} [μ(A) - μ(A∖{i})]`, indexed `[a-1][i]`.
    pub fn increments(&self) -> Vec<Vec<u64>> {
        increments_of(&self.mu_table())
    }

    /// `M_Ω(i) = Σ_a B(a, n-a+1) λ_a(i)`.
    pub fn shapley_permutation(&self, i: usize) -> Result<Rational, FamilyError> {
        self.check_index(i)?;
        let n = self.n();
        let lambda = self.increments();
        Ok((1..=n)
            .map(|a| beta(a as u32, (n - a + 1) as u32) * Rational::from_integer(BigInt::from(lambda[a - 1][i])))
            .fold(Rational::zero(), |x, y| x + y))
    }

    pub fn increment_totals(&self) -> ShapleyReport {
        let n = self.n();
        let mu = self.mu_table();
        let lambda = increments_of(&mu);
        let beta: Vec<Rational> = (1..=n).map(|a| crate::poly::beta(a as u32, (n - a + 1) as u32)).collect();
        let shapley = (0..n)
            .map(|i| {
                (0..n)
                    .map(|a| &beta[a] * Rational::from_integer(BigInt::from(lambda[a][i])))
                    .fold(Rational::zero(), |x, y| x + y)
            })
            .collect();
        let increment_averages = (0..n)
            .map(|a| &beta[a] * Rational::from_integer(BigInt::from(lambda[a].iter().sum::<u64>())))
            .collect();
        let mut level_sums = vec![0u64; n];
        for (set, &v) in mu.iter() {
            if !set.is_empty() {
                level_sums[set.len() - 1] += v;
            }
        }
        ShapleyReport { shapley, lambda, increment_averages, level_sums, beta }
    }
}

pub(crate) fn shapley_from_overlaps(d: &SubsetTable<Rational>, a: IndexSet, i: usize) -> Rational {
    a.without(i)
        .subsets()
        .map(|b| {
            let b = b.with(i);
            &d[b] / Rational::from_integer(BigInt::from(b.len()))
        })
        .fold(Rational::zero(), |x, y| x + y)
}

pub(crate) fn increments_of(mu: &SubsetTable<u64>) -> Vec<Vec<u64>> {
    let n = mu.n();
    let mut lambda = vec![vec![0u64; n]; n];
    for (set, &v) in mu.iter() {
        for i in set.iter() {
            lambda[set.len() - 1][i] += v - mu[set.without(i)];
        }
    }
    lambda
}

/// `(a-1)!(n-a)!/n!`, the probability that a given set joins the union right
/// after `a-1` specific others and before the remaining `n-a`.
pub fn beta_exact(a: usize, n: usize) -> Result<Rational, FamilyError> {
    if a < 1 || a > n || n > MAX_GROUND {
        return Err(FamilyError::BetaRange { a, n });
    }
    Ok(beta(a as u32, (n - a + 1) as u32))
}

/// Shapley cardinalities together with the increment tables they derive from.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapleyReport {
    /// `M_Ω(i)` per index.
    pub shapley: Vec<Rational>,
    /// `λ_a(i)` indexed `[a-1][i]`.
    pub lambda: Vec<Vec<u64>>,
    /// `r_a = B(a, n-a+1) Σ_i λ_a(i)`, indexed `[a-1]`.
    pub increment_averages: Vec<Rational>,
    /// `μ_a = Σ_{|A|=a} μ(A)`, indexed `[a-1]`.
    pub level_sums: Vec<u64>,
    /// `B(a, n-a+1)`, indexed `[a-1]`.
    pub beta: Vec<Rational>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{integer, rational};

    fn example() -> SetFamily {
        SetFamily::from_sets(&[&["a", "b"], &["b", "c"], &["a", "c", "d"], &["b", "d"]]).unwrap()
    }

    #[test]
    fn union_cardinalities() {
        let f = example();
        assert_eq!(f.union_cardinality(IndexSet::from_indices([0, 2])).unwrap(), 4);
        assert_eq!(f.union_cardinality(IndexSet::EMPTY).unwrap(), 0);
        assert_eq!(f.union_cardinality(IndexSet::from_indices([1, 3])).unwrap(), 3);
        assert_eq!(f.union_members(IndexSet::from_indices([1, 3])).unwrap(), vec!["b", "c", "d"]);
        assert!(matches!(
            f.union_cardinality(IndexSet::singleton(4)),
            Err(FamilyError::IndexOutOfRange { index: 4, n: 4 })
        ));
        let table = f.mu_table();
        for (a, &v) in table.iter() {
            assert_eq!(v, f.union_cardinality(a).unwrap());
        }
    }

    #[test]
    fn validation_errors() {
        assert_eq!(SetFamily::new(vec![], vec![]).unwrap_err(), FamilyError::BadSize(0));
        assert!(matches!(
            SetFamily::new(vec!["a".into()], vec![vec!["z".into()]]),
            Err(FamilyError::UnknownMember { set: 1, .. })
        ));
        assert!(matches!(
            SetFamily::new(vec!["a".into()], vec![vec!["a".into(), "a".into()]]),
            Err(FamilyError::DuplicateMember { .. })
        ));
        assert!(matches!(
            SetFamily::new(vec!["a".into(), "a".into()], vec![vec![]]),
            Err(FamilyError::DuplicateLabel(_))
        ));
        assert_eq!(SetFamily::new(vec![], vec![vec![]; 25]).unwrap_err(), FamilyError::BadSize(25));
    }

    #[test]
    fn large_universe_uses_multiple_words() {
        let universe: Vec<String> = (0..150).map(|k| format!("e{k}")).collect();
        let s1: Vec<String> = universe[..100].to_vec();
        let s2: Vec<String> = universe[60..150].to_vec();
        let f = SetFamily::new(universe, vec![s1, s2]).unwrap();
        assert_eq!(f.union_cardinality(IndexSet::full(2)).unwrap(), 150);
        assert_eq!(f.mu_table()[IndexSet::full(2)], 150);
        assert_eq!(f.overlap_table()[IndexSet::full(2)], integer(-40));
    }

    #[test]
    fn beta_exact_range() {
        assert_eq!(beta_exact(2, 4).unwrap(), rational(1, 12));
        assert_eq!(beta_exact(1, 4).unwrap(), rational(1, 4));
        assert_eq!(beta_exact(4, 4).unwrap(), rational(1, 4));
        assert!(beta_exact(0, 4).is_err());
        assert!(beta_exact(5, 4).is_err());
        assert!(beta_exact(1, 25).is_err());
    }

    #[test]
    fn shapley_of_example() {
        let f = example();
        let omega = IndexSet::full(4);
        assert_eq!(f.shapley_direct(omega, 0).unwrap(), rational(5, 6));
        assert_eq!(f.shapley_direct(omega, 2).unwrap(), rational(3, 2));
        assert_eq!(f.shapley_permutation(0).unwrap(), rational(5, 6));
        assert!(matches!(
            f.shapley_direct(IndexSet::singleton(1), 0),
            Err(FamilyError::NotInSubset { index: 0, .. })
        ));
        let lambda = f.increments();
        assert_eq!(lambda[1][2], 6);
        assert!(lambda[3].iter().all(|&v| v == 0));
    }

    #[test]
    fn disjoint_pair_keeps_own_cardinality() {
        let f = SetFamily::from_sets(&[&["a", "b"], &["c"]]).unwrap();
        let both = IndexSet::full(2);
        assert_eq!(f.shapley_direct(both, 0).unwrap(), integer(2));
        assert_eq!(f.shapley_direct(both, 1).unwrap(), integer(1));
        let report = f.increment_totals();
        // every level carries an equal share μ(Ω)/n
        assert_eq!(report.increment_averages, vec![rational(3, 2), rational(3, 2)]);
    }

    #[test]
    fn singleton_family() {
        let f = SetFamily::from_sets(&[&["x", "y", "z"]]).unwrap();
        assert_eq!(f.shapley_permutation(0).unwrap(), integer(3));
        assert_eq!(f.increment_totals().shapley, vec![integer(3)]);
    }

    #[test]
    fn report_of_example() {
        let r = example().increment_totals();
        assert_eq!(r.increment_averages, vec![rational(9, 4), rational(5, 4), rational(1, 2), integer(0)]);
        assert_eq!(r.level_sums, vec![9, 21, 16, 4]);
        assert_eq!(r.lambda[0], vec![2, 2, 3, 2]);
        assert_eq!(r.lambda[1], vec![3, 3, 6, 3]);
        assert_eq!(r.lambda[2], vec![1, 1, 3, 1]);
        let total: Rational = r.shapley.iter().cloned().sum();
        assert_eq!(total, integer(4));
    }
}
