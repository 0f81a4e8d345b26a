//! Random subsets of the index set under independent inclusion.
//!
//! Index `i` is drawn with probability `p_i`, independently of the others.
//! The resulting distribution over subsets is tabulated three ways:
//!
//! * `𝔭(A)`: probability of drawing exactly `A`,
//! * `P(A)`: probability that the draw contains `A`,
//! * `P(¬A)`: probability that the draw misses all of `A`.

use thiserror::Error;

use crate::cardinality::{FamilyError, SetFamily};
use crate::lattice::{mobius_transform, pair_contraction, IndexSet, LatticeError, Scale, SubsetTable, MAX_GROUND};
use crate::scalar::Field;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProbabilityError {
    #[error("probability p_{index} = {value} lies outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("need between 1 and {MAX_GROUND} probabilities, got {0}")]
    BadSize(usize),
    #[error("{what} has {got} indices but the distribution has {expected}")]
    SizeMismatch { what: &'static str, expected: usize, got: usize },
    #[error("index {index} out of range for {n} probabilities")]
    IndexOutOfRange { index: usize, n: usize },
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Inclusion probabilities `p_1..p_n`, each in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityVector<F> {
    p: Vec<F>,
}

impl<F: Field> ProbabilityVector<F> {
    pub fn new(p: Vec<F>) -> Result<Self, ProbabilityError> {
        if p.is_empty() || p.len() > MAX_GROUND {
            return Err(ProbabilityError::BadSize(p.len()));
        }
        for (index, v) in p.iter().enumerate() {
            if *v < F::zero() || *v > F::one() {
                return Err(ProbabilityError::OutOfRange { index: index + 1, value: v.to_f64() });
            }
        }
        Ok(ProbabilityVector { p })
    }

    /// All components equal to `t`.
    pub fn uniform(n: usize, t: F) -> Result<Self, ProbabilityError> {
        ProbabilityVector::new(vec![t; n])
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    pub fn values(&self) -> &[F] {
        &self.p
    }

    pub fn get(&self, i: usize) -> &F {
        &self.p[i]
    }

    fn with_component(&self, i: usize, v: F) -> Vec<F> {
        let mut p = self.p.clone();
        p[i] = v;
        p
    }
}

/// `𝔭(A) = Π_{i∈A} p_i Π_{j∉A} (1-p_j)`, built by extending one index at a
/// time.
fn exact_draw_table<F: Field>(p: &[F]) -> SubsetTable<F> {
    let mut values = vec![F::one()];
    for pk in p {
        let q = F::one() - pk.clone();
        let mut next = Vec::with_capacity(values.len() * 2);
        next.extend(values.iter().map(|v| v.clone() * q.clone()));
        next.extend(values.iter().map(|v| v.clone() * pk.clone()));
        values = next;
    }
    SubsetTable::new(p.len(), values).expect("length is 2^n")
}

/// `Π_{i∈A} w_i` for every `A`.
fn product_table<F: Field>(w: impl Iterator<Item = F>) -> SubsetTable<F> {
    let mut values = vec![F::one()];
    let mut n = 0;
    for wk in w {
        let upper: Vec<F> = values.iter().map(|v| v.clone() * wk.clone()).collect();
        values.extend(upper);
        n += 1;
    }
    SubsetTable::new(n, values).expect("length is 2^n")
}

/// Product-measure distribution over subsets.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomSetDistribution<F> {
    p: ProbabilityVector<F>,
    exact: SubsetTable<F>,
    containing: SubsetTable<F>,
    missing: SubsetTable<F>,
}

/// `𝔖̂` computed by contracting `μ` with `𝔭` and `𝔡` with `P`.
#[derive(Clone, Debug, PartialEq)]
pub struct UnionAverage<F> {
    pub via_exact_draws: F,
    pub via_overlaps: F,
}

impl<F: Field> UnionAverage<F> {
    pub fn value(&self) -> &F {
        &self.via_exact_draws
    }

    pub fn discrepancy(&self) -> f64 {
        (self.via_exact_draws.clone() - self.via_overlaps.clone()).to_f64().abs()
    }
}

impl<F: Field> RandomSetDistribution<F> {
    pub fn new(p: ProbabilityVector<F>) -> Self {
        let exact = exact_draw_table(p.values());
        let containing = product_table(p.values().iter().cloned());
        let missing = product_table(p.values().iter().map(|v| F::one() - v.clone()));
        RandomSetDistribution { p, exact, containing, missing }
    }

    pub fn n(&self) -> usize {
        self.p.n()
    }

    pub fn probabilities(&self) -> &ProbabilityVector<F> {
        &self.p
    }

    /// `𝔭`: probability of drawing exactly `A`.
    pub fn exact(&self) -> &SubsetTable<F> {
        &self.exact
    }

    /// `P`: probability that the draw contains `A`.
    pub fn containing(&self) -> &SubsetTable<F> {
        &self.containing
    }

    /// `P(¬·)`: probability that the draw is disjoint from `A`.
    pub fn missing(&self) -> &SubsetTable<F> {
        &self.missing
    }

    /// `Î = Σ_i p_i`, the expected size of the drawn index set.
    pub fn average_index_cardinality(&self) -> F {
        self.p.values().iter().cloned().fold(F::zero(), |a, b| a + b)
    }

    /// `𝔖̂`: expected number of members in the union of the drawn sets.
    pub fn average_union_cardinality(&self, family: &SetFamily) -> Result<UnionAverage<F>, ProbabilityError> {
        self.check_size("set family", family.n())?;
        let mu = family.mu_table().map(|&v| F::from_u64(v));
        let d = mobius_transform(&mu);
        Ok(UnionAverage {
            via_exact_draws: pair_contraction(&mu, &self.exact)?,
            via_overlaps: pair_contraction(&d, &self.containing)?,
        })
    }

    /// `∂𝔖̂/∂p_i`.
    pub fn partial_derivative(&self, family: &SetFamily, i: usize) -> Result<F, ProbabilityError> {
        self.check_size("set family", family.n())?;
        let mu = family.mu_table().map(|&v| F::from_u64(v));
        increment_derivative(&mu, &self.p, i)
    }

    /// `∂𝔖̂/∂p_i` for every `i`.
    pub fn gradient(&self, family: &SetFamily) -> Result<Vec<F>, ProbabilityError> {
        self.check_size("set family", family.n())?;
        let mu = family.mu_table().map(|&v| F::from_u64(v));
        (0..self.n()).map(|i| increment_derivative(&mu, &self.p, i)).collect()
    }

    fn check_size(&self, what: &'static str, got: usize) -> Result<(), ProbabilityError> {
        if got == self.n() {
            Ok(())
        } else {
            Err(ProbabilityError::SizeMismatch { what, expected: self.n(), got })
        }
    }
}

/// Derivative of `Σ_A v(A) 𝔭(A)` with respect to `p_i`:
///
/// `Σ_{A∋i} [v(A) - v(A∖{i})] Π_{j∈A∖{i}} p_j Π_{j∉A} (1-p_j)`.
///
/// The weights are the exact-draw probabilities with `p_i` replaced by one, so
/// boundary values `p_i ∈ {0, 1}` need no special treatment.
pub fn increment_derivative<F: Field, V: Scale<F>>(
    values: &SubsetTable<V>,
    p: &ProbabilityVector<F>,
    i: usize,
) -> Result<V, ProbabilityError> {
    let n = p.n();
    if values.n() != n {
        return Err(ProbabilityError::SizeMismatch { what: "value table", expected: n, got: values.n() });
    }
    if i >= n {
        return Err(ProbabilityError::IndexOutOfRange { index: i, n });
    }
    let weights = exact_draw_table(&p.with_component(i, F::one()));
    let mut terms = IndexSet::full(n).without(i).subsets().map(|rest| {
        let a = rest.with(i);
        let mut inc = values[a].clone();
        inc.sub_assign_ref(&values[rest]);
        inc.scaled(&weights[a])
    });
    let mut acc = terms.next().expect("at least the singleton {i}");
    for t in terms {
        acc.add_assign_ref(&t);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{cumulative_superset_sum, Additive};
    use crate::scalar::{integer, rational, Rational};
    use proptest::prelude::*;

    fn table1() -> RandomSetDistribution<Rational> {
        let p = vec![rational(1, 2), rational(1, 3), rational(1, 4), rational(1, 5)];
        RandomSetDistribution::new(ProbabilityVector::new(p).unwrap())
    }

    fn example_family() -> SetFamily {
        SetFamily::from_sets(&[&["a", "b"], &["b", "c"], &["a", "c", "d"], &["b", "d"]]).unwrap()
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(matches!(
            ProbabilityVector::new(vec![0.5, 1.5]),
            Err(ProbabilityError::OutOfRange { index: 2, .. })
        ));
        assert!(ProbabilityVector::<f64>::new(vec![]).is_err());
        assert!(ProbabilityVector::new(vec![rational(-1, 3)]).is_err());
    }

    #[test]
    fn table1_corner_values() {
        let dist = table1();
        assert_eq!(dist.exact()[IndexSet::EMPTY], rational(1, 5));
        assert_eq!(dist.exact()[IndexSet::full(4)], rational(1, 120));
        assert_eq!(dist.missing()[IndexSet::from_indices([2, 3])], rational(3, 5));
        assert_eq!(dist.containing()[IndexSet::from_indices([1, 2])], rational(1, 12));
        let total: Rational = dist.exact().values().iter().cloned().sum();
        assert_eq!(total, integer(1));
    }

    #[test]
    fn deterministic_draw_is_a_point_mass() {
        let a = IndexSet::from_indices([0, 2]);
        let p = (0..4).map(|i| integer(a.contains(i) as i64)).collect();
        let dist = RandomSetDistribution::new(ProbabilityVector::new(p).unwrap());
        for (b, v) in dist.exact().iter() {
            assert_eq!(*v, integer((b == a) as i64), "{b}");
        }
    }

    #[test]
    fn averages_of_example() {
        let dist = table1();
        assert_eq!(dist.average_index_cardinality(), rational(77, 60));
        let avg = dist.average_union_cardinality(&example_family()).unwrap();
        assert_eq!(avg.via_exact_draws, rational(271, 120));
        assert_eq!(avg.via_overlaps, rational(271, 120));
        let half = RandomSetDistribution::new(ProbabilityVector::uniform(4, rational(1, 2)).unwrap());
        assert_eq!(*half.average_union_cardinality(&example_family()).unwrap().value(), rational(50, 16));
        let ones = RandomSetDistribution::new(ProbabilityVector::uniform(4, integer(1)).unwrap());
        assert_eq!(*ones.average_union_cardinality(&example_family()).unwrap().value(), integer(4));
        assert_eq!(ones.average_index_cardinality(), integer(4));
        let zeros = RandomSetDistribution::new(ProbabilityVector::uniform(4, integer(0)).unwrap());
        assert_eq!(zeros.average_index_cardinality(), integer(0));
    }

    #[test]
    fn size_mismatch_is_reported() {
        let dist = RandomSetDistribution::new(ProbabilityVector::uniform(3, 0.5).unwrap());
        assert!(matches!(
            dist.average_union_cardinality(&example_family()),
            Err(ProbabilityError::SizeMismatch { expected: 3, got: 4, .. })
        ));
    }

    #[test]
    fn derivative_on_diagonal_is_increment_polynomial() {
        let f = example_family();
        let half = RandomSetDistribution::new(ProbabilityVector::uniform(4, rational(1, 2)).unwrap());
        assert_eq!(half.partial_derivative(&f, 2).unwrap(), rational(3, 2));
        let lambda = f.increments();
        for t in [rational(0, 1), rational(1, 3), rational(4, 5), integer(1)] {
            let dist = RandomSetDistribution::new(ProbabilityVector::uniform(4, t.clone()).unwrap());
            for i in 0..4 {
                let expect: Rational = (1..=4)
                    .map(|a| {
                        integer(lambda[a - 1][i] as i64)
                            * num_traits::pow(t.clone(), a - 1)
                            * num_traits::pow(integer(1) - t.clone(), 4 - a)
                    })
                    .sum();
                assert_eq!(dist.partial_derivative(&f, i).unwrap(), expect);
            }
        }
    }

    #[test]
    fn disjoint_family_has_constant_derivative() {
        let f = SetFamily::from_sets(&[&["a", "b"], &["c"], &["d", "e", "f"]]).unwrap();
        for p in [[0.0, 0.3, 1.0], [0.9, 0.1, 0.5]] {
            let dist = RandomSetDistribution::new(ProbabilityVector::new(p.to_vec()).unwrap());
            let g = dist.gradient(&f).unwrap();
            for (gi, expect) in g.iter().zip([2.0, 1.0, 3.0]) {
                assert!((gi - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let f = example_family();
        let p = vec![0.3, 0.55, 0.72, 0.15];
        let dist = RandomSetDistribution::new(ProbabilityVector::new(p.clone()).unwrap());
        let h = 1e-6;
        for i in 0..4 {
            let shifted = |delta: f64| {
                let mut q = p.clone();
                q[i] += delta;
                *RandomSetDistribution::new(ProbabilityVector::new(q).unwrap())
                    .average_union_cardinality(&f)
                    .unwrap()
                    .value()
            };
            let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
            let analytic = dist.partial_derivative(&f, i).unwrap();
            assert!(analytic >= 0.0);
            assert!((fd - analytic).abs() < 1e-6, "i={i}: {fd} vs {analytic}");
        }
    }

    fn rational_probs(max_n: usize) -> impl Strategy<Value = Vec<Rational>> {
        prop::collection::vec((0i64..=12, 1i64..=12), 1..=max_n)
            .prop_map(|v| v.into_iter().map(|(a, b)| rational(a.min(b), b)).collect())
    }

    proptest! {
        #[test]
        fn modular_and_cumulative_identities(p in rational_probs(8)) {
            let n = p.len();
            let dist = RandomSetDistribution::new(ProbabilityVector::new(p).unwrap());
            let total: Rational = dist.exact().values().iter().cloned().sum();
            prop_assert_eq!(total, integer(1));
            prop_assert_eq!(&cumulative_superset_sum(dist.exact()), dist.containing());
            let full = IndexSet::full(n);
            for a in IndexSet::all(n).step_by(3) {
                for b in IndexSet::all(n).step_by(5) {
                    let (u, v) = (a.union(b), a.intersection(b));
                    for t in [dist.exact(), dist.containing(), dist.missing()] {
                        prop_assert_eq!(t[a].clone() * t[b].clone(), t[u].clone() * t[v].clone());
                    }
                }
                // 𝔭(A) = P(A)·P(¬Ā)
                prop_assert_eq!(
                    dist.exact()[a].clone(),
                    dist.containing()[a].clone() * dist.missing()[a.complement(n)].clone()
                );
                // inclusion-exclusion for P(¬A)
                let mut ie = integer(0);
                for b in a.subsets() {
                    let term = dist.containing()[b].clone();
                    if b.len() % 2 == 0 { ie.add_assign_ref(&term) } else { ie.sub_assign_ref(&term) }
                }
                prop_assert_eq!(&ie, &dist.missing()[a]);
                // monotone under supersets
                prop_assert!(dist.containing()[full] <= dist.containing()[a]);
                prop_assert!(dist.missing()[full] <= dist.missing()[a]);
            }
        }
    }
}
