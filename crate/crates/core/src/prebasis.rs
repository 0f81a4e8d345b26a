//! Pre-bases, the projectors onto the spans of their subsets, and the
//! operator-valued analogues of the set-side constructions.
//!
//! A pre-basis is a total set of `n ≥ d` unit vectors in `ℂ^d`, generic when
//! every `d` of them are linearly independent. `Π(A)` projects onto the span
//! of the vectors indexed by `A`. Replacing `μ` by `Π` in the set-side
//! formulas gives the operator Möbius transform `𝔇`, the dressed operators
//! `θ_Ω(i)`, the density matrices `σ_Ω(i)`, the increments `Λ_a(i)` and the
//! averages of random projectors.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use rayon::prelude::*;
use thiserror::Error;

use crate::lattice::{mobius_transform, pair_contraction, IndexSet, LatticeError, SubsetTable, MAX_GROUND};
use crate::operator::{Operator, OperatorError};
use crate::poly::beta;
use crate::random_sets::{increment_derivative, ProbabilityError, ProbabilityVector, RandomSetDistribution};
use crate::scalar::{Entry, Field, Rational, C64};

/// Columns whose norm differs from one by more than this are rescaled.
pub const UNIT_TOLERANCE: f64 = 1e-12;
/// A `d`-subset is degenerate when its smallest singular value is below this.
pub const GENERICITY_THRESHOLD: f64 = 1e-8;
/// Relative cut-off for the numerical rank of a set of columns.
pub const RANK_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PrebasisError {
    #[error("a pre-basis needs at least one vector in dimension at least one")]
    Empty,
    #[error("{n} vectors cannot span dimension {d}")]
    TooFew { n: usize, d: usize },
    #[error("at most {MAX_GROUND} vectors are supported, got {0}")]
    TooMany(usize),
    #[error("vector {index} has {got} components, expected {expected}")]
    WrongLength { index: usize, expected: usize, got: usize },
    #[error("vector {0} is zero")]
    ZeroVector(usize),
    #[error("vectors span only {rank} of {d} dimensions")]
    NotTotal { rank: usize, d: usize },
    #[error("linearly dependent {d}-subsets: {}", format_sets(.subsets))]
    Degenerate { d: usize, subsets: Vec<IndexSet> },
    #[error("projector for {set} is missing")]
    MissingProjector { set: IndexSet },
    #[error("projector for {set}: {reason}")]
    BadProjector { set: IndexSet, reason: String },
    #[error("explicit projector for {set} differs from the one computed from the vectors by {distance:e}")]
    Conflict { set: IndexSet, distance: f64 },
    #[error("projector family has dimension {family} but {what} has dimension {got}")]
    DimensionMismatch { what: &'static str, family: usize, got: usize },
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Probability(#[from] ProbabilityError),
}

fn format_sets(sets: &[IndexSet]) -> String {
    sets.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(", ")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum GenericityMode {
    /// Degenerate `d`-subsets are an error.
    Strict,
    /// Degenerate `d`-subsets are recorded as warnings.
    #[default]
    Permissive,
}

/// Smallest singular value of every `d`-subset of the columns.
#[derive(Clone, Debug, PartialEq)]
pub struct GenericityReport {
    pub threshold: f64,
    pub smallest_singular_values: Vec<(IndexSet, f64)>,
}

impl GenericityReport {
    pub fn degenerate(&self) -> Vec<IndexSet> {
        self.smallest_singular_values.iter().filter(|(_, s)| *s <= self.threshold).map(|(a, _)| *a).collect()
    }

    pub fn is_generic(&self) -> bool {
        self.degenerate().is_empty()
    }
}

/// A validated pre-basis with unit columns.
#[derive(Clone, Debug, PartialEq)]
pub struct PreBasis {
    d: usize,
    columns: Vec<Vec<C64>>,
    genericity: GenericityReport,
    warnings: Vec<String>,
}

fn column_matrix(columns: &[Vec<C64>], set: IndexSet, d: usize) -> DMatrix<C64> {
    let idx: Vec<usize> = set.iter().collect();
    DMatrix::from_fn(d, idx.len(), |r, c| columns[idx[c]][r])
}

fn singular_values(m: &DMatrix<C64>) -> Vec<f64> {
    if m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

fn numerical_rank(s: &[f64]) -> usize {
    match s.first() {
        Some(&top) if top > 0.0 => s.iter().filter(|&&v| v > RANK_THRESHOLD * top).count(),
        _ => 0,
    }
}

/// Orthogonal projector onto the span of the columns of `m`, via an SVD with
/// relative rank cut-off [`RANK_THRESHOLD`]. Returns the projector and its
/// rank.
pub fn span_projector(m: &DMatrix<C64>) -> (Operator<C64>, usize) {
    let d = m.nrows();
    if m.ncols() == 0 {
        return (Operator::zeros(d), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let top = svd.singular_values.iter().fold(0.0f64, |a, &b| a.max(b));
    let keep: Vec<usize> =
        (0..svd.singular_values.len()).filter(|&k| top > 0.0 && svd.singular_values[k] > RANK_THRESHOLD * top).collect();
    let p = Operator::from_fn(d, |r, c| keep.iter().fold(C64::new(0.0, 0.0), |acc, &k| acc + u[(r, k)] * u[(c, k)].conj()));
    (p, keep.len())
}

/// `𝔄(𝔄†𝔄)⁻¹𝔄†`, or `None` when the Gram matrix is singular. Also returns
/// the Gram matrix's 2-norm condition number.
pub fn gram_projector(m: &DMatrix<C64>) -> Option<(Operator<C64>, f64)> {
    if m.ncols() == 0 {
        return Some((Operator::zeros(m.nrows()), 1.0));
    }
    let gram = m.adjoint() * m;
    let s = singular_values(&gram);
    let cond = s[0] / s[s.len() - 1];
    let inv = gram.try_inverse()?;
    let p = m * inv * m.adjoint();
    Some((Operator::from_dmatrix(&p).expect("square"), cond))
}

impl PreBasis {
    /// Validates and normalizes `columns` (each a `d`-vector).
    pub fn new(columns: Vec<Vec<C64>>, mode: GenericityMode) -> Result<Self, PrebasisError> {
        let n = columns.len();
        let d = columns.first().map_or(0, Vec::len);
        if n == 0 || d == 0 {
            return Err(PrebasisError::Empty);
        }
        if n > MAX_GROUND {
            return Err(PrebasisError::TooMany(n));
        }
        if n < d {
            return Err(PrebasisError::TooFew { n, d });
        }
        let mut warnings = Vec::new();
        let mut normalized = Vec::with_capacity(n);
        for (index, col) in columns.into_iter().enumerate() {
            if col.len() != d {
                return Err(PrebasisError::WrongLength { index: index + 1, expected: d, got: col.len() });
            }
            let norm = crate::operator::vector_norm(&col);
            if norm == 0.0 || !norm.is_finite() {
                return Err(PrebasisError::ZeroVector(index + 1));
            }
            if (norm - 1.0).abs() > UNIT_TOLERANCE {
                warnings.push(format!("vector {} had norm {norm}; normalized", index + 1));
            }
            normalized.push(col.into_iter().map(|z| z / norm).collect::<Vec<_>>());
        }
        let rank = numerical_rank(&singular_values(&column_matrix(&normalized, IndexSet::full(n), d)));
        if rank < d {
            return Err(PrebasisError::NotTotal { rank, d });
        }
        let smallest: Vec<(IndexSet, f64)> = IndexSet::all(n)
            .filter(|a| a.len() == d)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|a| {
                let s = singular_values(&column_matrix(&normalized, a, d));
                (a, *s.last().expect("d >= 1"))
            })
            .collect();
        let genericity = GenericityReport { threshold: GENERICITY_THRESHOLD, smallest_singular_values: smallest };
        let degenerate = genericity.degenerate();
        if !degenerate.is_empty() {
            if mode == GenericityMode::Strict {
                return Err(PrebasisError::Degenerate { d, subsets: degenerate });
            }
            for a in &degenerate {
                warnings.push(format!("subset {a} of size {d} is linearly dependent"));
            }
        }
        Ok(PreBasis { d, columns: normalized, genericity, warnings })
    }

    /// The standard basis of `ℂ^d`.
    pub fn standard(d: usize) -> Self {
        let cols = (0..d).map(|k| (0..d).map(|r| C64::new((r == k) as u8 as f64, 0.0)).collect()).collect();
        PreBasis::new(cols, GenericityMode::Strict).expect("orthonormal basis")
    }

    /// Real columns, normalized on construction.
    pub fn from_real(columns: &[&[f64]], mode: GenericityMode) -> Result<Self, PrebasisError> {
        PreBasis::new(columns.iter().map(|c| c.iter().map(|&x| C64::new(x, 0.0)).collect()).collect(), mode)
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Vec<C64>] {
        &self.columns
    }

    pub fn genericity(&self) -> &GenericityReport {
        &self.genericity
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn matrix(&self, set: IndexSet) -> DMatrix<C64> {
        column_matrix(&self.columns, set, self.d)
    }

    pub fn projector(&self, set: IndexSet) -> Operator<C64> {
        span_projector(&self.matrix(set)).0
    }

    /// Rank of the span of the columns in `set`.
    pub fn rank(&self, set: IndexSet) -> usize {
        numerical_rank(&singular_values(&self.matrix(set)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProjectorSource {
    Computed,
    Explicit,
    /// Explicit entries completed from a pre-basis.
    Mixed { explicit: usize },
}

/// `Π(A)` for every subset.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectorFamily<E> {
    d: usize,
    table: SubsetTable<Operator<E>>,
    source: ProjectorSource,
    ranks: Option<Vec<usize>>,
    columns: Option<Vec<Vec<C64>>>,
}

/// Worst-case residuals of the projector laws over the whole family.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectorLaws {
    pub empty_norm: f64,
    pub hermiticity: f64,
    pub idempotency: f64,
    /// Deviation of `Tr Π(A)` from the span rank (computed families) or from
    /// the nearest admissible integer (explicit families).
    pub trace: f64,
    /// Most negative eigenvalue of `Π(A) - Π(A∖{i})`, scaled as in
    /// [`Operator::is_psd`].
    pub monotonicity: f64,
    /// `‖Π({i}) - |i⟩⟨i|‖_F` and `‖Π(A)|v⟩ - |v⟩‖` for generating columns,
    /// when the vectors are known.
    pub containment: Option<f64>,
}

impl ProjectorLaws {
    pub fn passes(&self) -> bool {
        self.empty_norm <= 1e-12
            && self.hermiticity <= 1e-12
            && self.idempotency <= 1e-10
            && self.trace <= 1e-10
            && self.monotonicity <= 1e-10
            && self.containment.is_none_or(|c| c <= 1e-10)
    }
}

impl ProjectorFamily<C64> {
    pub fn from_prebasis(basis: &PreBasis) -> Self {
        let n = basis.n();
        let computed: Vec<(Operator<C64>, usize)> = (0u32..1 << n)
            .into_par_iter()
            .map(|bits| span_projector(&basis.matrix(IndexSet::from_bits(bits))))
            .collect();
        let (ops, ranks): (Vec<_>, Vec<_>) = computed.into_iter().unzip();
        ProjectorFamily {
            d: basis.dimension(),
            table: SubsetTable::new(n, ops).expect("2^n entries"),
            source: ProjectorSource::Computed,
            ranks: Some(ranks),
            columns: Some(basis.columns().to_vec()),
        }
    }

    /// Explicit entries, with the rest computed from `basis`. An explicit
    /// entry that disagrees with the computed one by more than `1e-10` is an
    /// error.
    pub fn completed(
        basis: &PreBasis,
        explicit: &BTreeMap<IndexSet, Operator<C64>>,
    ) -> Result<Self, PrebasisError> {
        let mut family = ProjectorFamily::from_prebasis(basis);
        for (&set, op) in explicit {
            if set.bits() >> basis.n() != 0 {
                return Err(LatticeError::IndexOutOfRange { index: 31 - set.bits().leading_zeros() as usize, n: basis.n() }.into());
            }
            if op.dim() != basis.dimension() {
                return Err(PrebasisError::DimensionMismatch { what: "explicit projector", family: basis.dimension(), got: op.dim() });
            }
            let distance = op.distance(&family.table[set])?;
            if distance > 1e-10 {
                return Err(PrebasisError::Conflict { set, distance });
            }
            *family.table.get_mut(set) = op.clone();
        }
        family.source = ProjectorSource::Mixed { explicit: explicit.len() };
        Ok(family)
    }
}

impl<E: Entry> ProjectorFamily<E> {
    /// A family given entry by entry. Every subset must be present.
    pub fn explicit(d: usize, n: usize, entries: BTreeMap<IndexSet, Operator<E>>) -> Result<Self, PrebasisError> {
        if n == 0 {
            return Err(PrebasisError::Empty);
        }
        if n > MAX_GROUND {
            return Err(PrebasisError::TooMany(n));
        }
        let mut slots: Vec<Option<Operator<E>>> = vec![None; 1 << n];
        for (set, op) in entries {
            if set.bits() >> n != 0 {
                return Err(LatticeError::IndexOutOfRange { index: 31 - set.bits().leading_zeros() as usize, n }.into());
            }
            if op.dim() != d {
                return Err(PrebasisError::DimensionMismatch { what: "explicit projector", family: d, got: op.dim() });
            }
            slots[set.bits() as usize] = Some(op);
        }
        let ops = slots
            .into_iter()
            .enumerate()
            .map(|(bits, op)| op.ok_or(PrebasisError::MissingProjector { set: IndexSet::from_bits(bits as u32) }))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ProjectorFamily {
            d,
            table: SubsetTable::new(n, ops)?,
            source: ProjectorSource::Explicit,
            ranks: None,
            columns: None,
        })
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.table.n()
    }

    pub fn table(&self) -> &SubsetTable<Operator<E>> {
        &self.table
    }

    pub fn source(&self) -> &ProjectorSource {
        &self.source
    }

    pub fn get(&self, set: IndexSet) -> &Operator<E> {
        &self.table[set]
    }

    pub fn to_complex(&self) -> ProjectorFamily<C64> {
        ProjectorFamily {
            d: self.d,
            table: self.table.map(Operator::to_complex),
            source: self.source.clone(),
            ranks: self.ranks.clone(),
            columns: self.columns.clone(),
        }
    }

    /// Checks the projector laws and returns the worst residual of each.
    pub fn laws(&self) -> ProjectorLaws {
        let d = self.d;
        let ops: Vec<Operator<C64>> = self.table.values().iter().map(Operator::to_complex).collect();
        let per_set: Vec<(f64, f64, f64, f64)> = (0..ops.len())
            .into_par_iter()
            .map(|bits| {
                let set = IndexSet::from_bits(bits as u32);
                let p = &ops[bits];
                let tr = p.trace().re;
                let trace_dev = match &self.ranks {
                    Some(r) => (tr - r[bits] as f64).abs(),
                    None => {
                        let nearest = tr.round().clamp(0.0, set.len().min(d) as f64);
                        (tr - nearest).abs()
                    }
                };
                let mono = set
                    .iter()
                    .map(|i| {
                        let diff = p.sub(&ops[set.without(i).bits() as usize]).expect("same dimension");
                        (-diff.min_eigenvalue() / (1.0 + diff.frobenius_norm())).max(0.0)
                    })
                    .fold(0.0f64, f64::max);
                (p.hermiticity_error(), p.idempotency_error(), trace_dev, mono)
            })
            .collect();
        let worst = |k: fn(&(f64, f64, f64, f64)) -> f64| per_set.iter().map(k).fold(0.0f64, f64::max);
        let containment = self.columns.as_ref().map(|cols| {
            let mut worst_c = 0.0f64;
            for (i, col) in cols.iter().enumerate() {
                worst_c = worst_c.max(ops[1 << i].distance(&Operator::outer(col)).expect("same dimension"));
            }
            for (bits, p) in ops.iter().enumerate() {
                for i in IndexSet::from_bits(bits as u32).iter() {
                    let v = p.apply(&cols[i]).expect("same dimension");
                    let err = v.iter().zip(&cols[i]).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
                    worst_c = worst_c.max(err);
                }
            }
            worst_c
        });
        ProjectorLaws {
            empty_norm: ops[0].frobenius_norm(),
            hermiticity: worst(|r| r.0),
            idempotency: worst(|r| r.1),
            trace: worst(|r| r.2),
            monotonicity: worst(|r| r.3),
            containment,
        }
    }

    /// `𝔇 = Möbius(Π)`.
    pub fn operator_mobius(&self) -> SubsetTable<Operator<E>> {
        mobius_transform(&self.table)
    }

    /// `Λ_a(i) = Σ_{|A|=a, A∋i} [Π(A) - Π(A∖{i})]` for `a = 1..n`, indexed
    /// `[a-1][i]`.
    pub fn increments(&self) -> Vec<Vec<Operator<E>>> {
        let n = self.n();
        let mut lambda = vec![vec![Operator::zeros(self.d); n]; n];
        for (set, p) in self.table.iter() {
            for i in set.iter() {
                let inc = p.sub(&self.table[set.without(i)]).expect("same dimension");
                crate::lattice::Additive::add_assign_ref(&mut lambda[set.len() - 1][i], &inc);
            }
        }
        lambda
    }

    pub fn dressed_operators(&self) -> OperatorTable<E> {
        let n = self.n();
        let d = self.d;
        let mobius = self.operator_mobius();
        let real = |r: Rational| E::Real::from_rational(&r);
        let ratio = real(Rational::new(BigInt::from(n), BigInt::from(d)));
        let theta: Vec<Operator<E>> = (0..n)
            .map(|i| {
                let mut acc = Operator::zeros(d);
                for rest in IndexSet::full(n).without(i).subsets() {
                    let b = rest.with(i);
                    let w = real(Rational::new(BigInt::from(1), BigInt::from(b.len())));
                    crate::lattice::Additive::add_assign_ref(&mut acc, &mobius[b].scale_real(&w));
                }
                acc
            })
            .collect();
        let sigma = theta.iter().map(|t| t.scale_real(&ratio)).collect();
        let lambda = self.increments();
        let betas: Vec<Rational> = (1..=n).map(|a| beta(a as u32, (n - a + 1) as u32)).collect();
        let sigma_via_increments = (0..n)
            .map(|i| {
                let mut acc = Operator::zeros(d);
                for a in 1..=n {
                    crate::lattice::Additive::add_assign_ref(&mut acc, &lambda[a - 1][i].scale_real(&real(betas[a - 1].clone())));
                }
                acc.scale_real(&ratio)
            })
            .collect();
        OperatorTable { d, n, mobius, theta, sigma, sigma_via_increments, lambda, betas }
    }

    /// `ϖ̂(p) = Σ_A 𝔭(A)Π(A)`, with the alternative `Σ_A P(A)𝔇(A)`.
    pub fn random_projector_average(
        &self,
        p: &ProbabilityVector<E::Real>,
    ) -> Result<ProjectorAverage<E>, PrebasisError> {
        if p.n() != self.n() {
            return Err(ProbabilityError::SizeMismatch { what: "projector family", expected: p.n(), got: self.n() }.into());
        }
        let dist = RandomSetDistribution::new(p.clone());
        Ok(ProjectorAverage {
            via_exact_draws: pair_contraction(&self.table, dist.exact())?,
            via_mobius: pair_contraction(&self.operator_mobius(), dist.containing())?,
        })
    }

    /// `∂ϖ̂/∂p_i` in division-free form.
    pub fn random_projector_derivative(
        &self,
        p: &ProbabilityVector<E::Real>,
        i: usize,
    ) -> Result<Operator<E>, PrebasisError> {
        Ok(increment_derivative(&self.table, p, i)?)
    }
}

/// `ϖ̂` by both routes.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectorAverage<E> {
    pub via_exact_draws: Operator<E>,
    pub via_mobius: Operator<E>,
}

impl<E: Entry> ProjectorAverage<E> {
    pub fn value(&self) -> &Operator<E> {
        &self.via_exact_draws
    }

    pub fn discrepancy(&self) -> f64 {
        self.via_exact_draws.distance(&self.via_mobius).expect("same dimension")
    }
}

/// Operator Möbius transform, dressed operators and increments of a projector
/// family.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorTable<E> {
    pub d: usize,
    pub n: usize,
    /// `𝔇(A)`.
    pub mobius: SubsetTable<Operator<E>>,
    /// `θ_Ω(i) = Σ_{B∋i} 𝔇(B)/|B|`.
    pub theta: Vec<Operator<E>>,
    /// `σ_Ω(i) = (n/d) θ_Ω(i)`.
    pub sigma: Vec<Operator<E>>,
    /// `(n/d) Σ_a B(a, n-a+1) Λ_a(i)`.
    pub sigma_via_increments: Vec<Operator<E>>,
    /// `Λ_a(i)`, indexed `[a-1][i]`.
    pub lambda: Vec<Vec<Operator<E>>>,
    /// `B(a, n-a+1)`, indexed `[a-1]`.
    pub betas: Vec<Rational>,
}

/// Residuals of the dressed-operator identities.
#[derive(Clone, Debug, PartialEq)]
pub struct DressedChecks {
    /// `‖Σ_i θ_Ω(i) - 𝟏‖_F`.
    pub theta_sum: f64,
    /// `max_i ‖σ_Ω(i) - (n/d)Σ_a B Λ_a(i)‖_F`.
    pub sigma_routes: f64,
    pub sigma_hermiticity: f64,
    /// `max_i |Tr σ_Ω(i) - 1|`.
    pub sigma_trace: f64,
    /// Most negative scaled eigenvalue over all `σ_Ω(i)`.
    pub sigma_psd: f64,
    /// `max_a |Tr Σ_i Λ_a(i) - 1/B(a, n-a+1)|` over `a = 1..d`.
    pub lambda_trace: f64,
}

impl DressedChecks {
    pub fn passes(&self) -> bool {
        self.theta_sum <= 1e-10
            && self.sigma_routes <= 1e-10
            && self.sigma_hermiticity <= 1e-12
            && self.sigma_trace <= 1e-10
            && self.sigma_psd <= 1e-10
            && self.lambda_trace <= 1e-9
    }
}

impl<E: Entry> OperatorTable<E> {
    pub fn checks(&self) -> DressedChecks {
        let id = Operator::<C64>::identity(self.d);
        let theta_sum = self
            .theta
            .iter()
            .fold(Operator::<C64>::zeros(self.d), |acc, t| acc.add(&t.to_complex()).expect("same dimension"))
            .distance(&id)
            .expect("same dimension");
        let sigma: Vec<Operator<C64>> = self.sigma.iter().map(Operator::to_complex).collect();
        let sigma_routes = sigma
            .iter()
            .zip(&self.sigma_via_increments)
            .map(|(a, b)| a.distance(&b.to_complex()).expect("same dimension"))
            .fold(0.0, f64::max);
        let sigma_hermiticity = sigma.iter().map(Operator::hermiticity_error).fold(0.0, f64::max);
        let sigma_trace = sigma.iter().map(|s| (s.trace().re - 1.0).abs()).fold(0.0, f64::max);
        let sigma_psd = sigma
            .iter()
            .map(|s| (-s.min_eigenvalue() / (1.0 + s.frobenius_norm())).max(0.0))
            .fold(0.0, f64::max);
        let lambda_trace = (1..=self.d.min(self.n))
            .map(|a| {
                let tr: f64 = self.lambda[a - 1].iter().map(|l| l.trace().to_c64().re).sum();
                (tr - crate::scalar::rational_to_f64(&self.betas[a - 1].recip())).abs()
            })
            .fold(0.0, f64::max);
        DressedChecks { theta_sum, sigma_routes, sigma_hermiticity, sigma_trace, sigma_psd, lambda_trace }
    }

    /// `|s_i⟩ = (d/n) σ_Ω(i)|s⟩`; the components sum to `|s⟩`.
    pub fn expand_discrete(&self, s: &[E]) -> Result<Vec<Vec<E>>, PrebasisError> {
        if s.len() != self.d {
            return Err(PrebasisError::DimensionMismatch { what: "vector", family: self.d, got: s.len() });
        }
        let ratio = E::Real::from_rational(&Rational::new(BigInt::from(self.d), BigInt::from(self.n)));
        self.sigma.iter().map(|sig| Ok(sig.scale_real(&ratio).apply(s)?)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{integer, rational, ExactComplex};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const S2: f64 = std::f64::consts::SQRT_2;

    fn worked_basis() -> PreBasis {
        let s6 = 6f64.sqrt();
        PreBasis::from_real(
            &[&[1.0 / S2, 1.0 / S2, 0.0], &[1.0 / S2, 0.0, 1.0 / S2], &[0.0, 1.0 / S2, 1.0 / S2], &[1.0 / s6, 1.0 / s6, 2.0 / s6]],
            GenericityMode::Permissive,
        )
        .unwrap()
    }

    fn real_op(rows: [[i64; 3]; 3], den: i64) -> Operator<C64> {
        Operator::from_fn(3, |r, c| C64::new(rows[r][c] as f64 / den as f64, 0.0))
    }

    fn random_basis(rng: &mut ChaCha8Rng, d: usize, n: usize) -> PreBasis {
        let cols = (0..n)
            .map(|_| (0..d).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect())
            .collect();
        PreBasis::new(cols, GenericityMode::Permissive).unwrap()
    }

    #[test]
    fn validation() {
        assert_eq!(PreBasis::new(vec![], GenericityMode::Strict).unwrap_err(), PrebasisError::Empty);
        assert!(matches!(PreBasis::from_real(&[&[1.0, 0.0]], GenericityMode::Strict), Err(PrebasisError::TooFew { n: 1, d: 2 })));
        assert!(matches!(
            PreBasis::from_real(&[&[1.0, 0.0], &[1.0]], GenericityMode::Strict),
            Err(PrebasisError::WrongLength { index: 2, .. })
        ));
        assert!(matches!(PreBasis::from_real(&[&[0.0, 0.0], &[1.0, 0.0]], GenericityMode::Strict), Err(PrebasisError::ZeroVector(1))));
        assert!(matches!(
            PreBasis::from_real(&[&[1.0, 0.0], &[2.0, 0.0]], GenericityMode::Permissive),
            Err(PrebasisError::NotTotal { rank: 1, d: 2 })
        ));
        let dup = [&[1.0, 0.0][..], &[1.0, 0.0], &[0.0, 1.0]];
        assert!(matches!(PreBasis::from_real(&dup, GenericityMode::Strict), Err(PrebasisError::Degenerate { d: 2, .. })));
        let ok = PreBasis::from_real(&dup, GenericityMode::Permissive).unwrap();
        assert_eq!(ok.genericity().degenerate(), vec![IndexSet::from_indices([0, 1])]);
        let scaled = PreBasis::from_real(&[&[2.0, 0.0], &[0.0, 1.0]], GenericityMode::Strict).unwrap();
        assert_eq!(scaled.warnings().len(), 1);
        assert_eq!(scaled.columns()[0][0], C64::new(1.0, 0.0));
        let std = PreBasis::standard(3);
        assert!(std.genericity().is_generic() && std.warnings().is_empty());
    }

    #[test]
    fn worked_basis_is_flagged() {
        let b = worked_basis();
        assert_eq!(b.genericity().degenerate(), vec![IndexSet::from_indices([1, 2, 3])]);
        assert!(matches!(
            PreBasis::new(b.columns().to_vec(), GenericityMode::Strict),
            Err(PrebasisError::Degenerate { .. })
        ));
        assert_eq!(b.rank(IndexSet::from_indices([1, 2, 3])), 2);
    }

    #[test]
    fn worked_projectors() {
        let b = worked_basis();
        let p1 = b.projector(IndexSet::singleton(0));
        assert!(p1.distance(&real_op([[1, 1, 0], [1, 1, 0], [0, 0, 0]], 2)).unwrap() < 1e-12);
        let p12 = b.projector(IndexSet::from_indices([0, 1]));
        assert!(p12.distance(&real_op([[2, 1, 1], [1, 2, -1], [1, -1, 2]], 3)).unwrap() < 1e-12);
        assert!(b.projector(IndexSet::EMPTY).is_zero());
        assert!(b.projector(IndexSet::full(4)).distance(&Operator::identity(3)).unwrap() < 1e-12);
        // the dependent triple spans a plane only
        let p234 = b.projector(IndexSet::from_indices([1, 2, 3]));
        assert!(p234.distance(&b.projector(IndexSet::from_indices([1, 2]))).unwrap() < 1e-12);
    }

    #[test]
    fn orthonormal_basis_has_trivial_structure() {
        let b = PreBasis::standard(3);
        let fam = ProjectorFamily::from_prebasis(&b);
        assert!(fam.laws().passes());
        let table = fam.dressed_operators();
        for (a, m) in table.mobius.iter() {
            if a.len() >= 2 {
                assert!(m.frobenius_norm() < 1e-12, "{a}");
            } else if a.len() == 1 {
                assert_eq!(m, fam.get(a));
            }
        }
        for i in 0..3 {
            assert!(table.sigma[i].distance(fam.get(IndexSet::singleton(i))).unwrap() < 1e-12);
        }
        assert!(table.checks().passes());
        let p = ProbabilityVector::new(vec![0.2, 0.5, 0.9]).unwrap();
        let avg = fam.random_projector_average(&p).unwrap();
        let expect = (0..3).fold(Operator::zeros(3), |acc, i| acc.add(&fam.get(IndexSet::singleton(i)).scale_real(&p.values()[i])).unwrap());
        assert!(avg.value().distance(&expect).unwrap() < 1e-12);
        for i in 0..3 {
            let der = fam.random_projector_derivative(&p, i).unwrap();
            assert!(der.distance(fam.get(IndexSet::singleton(i))).unwrap() < 1e-12);
        }
        let s = vec![C64::new(0.3, 0.1), C64::new(-1.0, 0.0), C64::new(0.0, 2.0)];
        let parts = table.expand_discrete(&s).unwrap();
        for (i, part) in parts.iter().enumerate() {
            for (r, z) in part.iter().enumerate() {
                let expect = if r == i { s[i] } else { C64::new(0.0, 0.0) };
                assert!((z - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn averages_at_corners() {
        let fam = ProjectorFamily::from_prebasis(&worked_basis());
        let ones = ProbabilityVector::uniform(4, 1.0).unwrap();
        let avg = fam.random_projector_average(&ones).unwrap();
        assert!(avg.value().distance(&Operator::identity(3)).unwrap() < 1e-12);
        assert!(avg.discrepancy() < 1e-12);
        let corner = ProbabilityVector::new(vec![1.0, 1.0, 0.0, 1.0]).unwrap();
        let avg = fam.random_projector_average(&corner).unwrap();
        assert!(avg.value().distance(&Operator::identity(3)).unwrap() < 1e-12);
        let zeros = ProbabilityVector::uniform(4, 0.0).unwrap();
        assert!(fam.random_projector_average(&zeros).unwrap().value().is_zero());
        let short = ProbabilityVector::uniform(3, 0.5).unwrap();
        assert!(fam.random_projector_average(&short).is_err());
    }

    #[test]
    fn completion_and_conflicts() {
        let b = worked_basis();
        let mut explicit = BTreeMap::new();
        explicit.insert(IndexSet::singleton(0), real_op([[1, 1, 0], [1, 1, 0], [0, 0, 0]], 2));
        let fam = ProjectorFamily::completed(&b, &explicit).unwrap();
        assert_eq!(fam.source(), &ProjectorSource::Mixed { explicit: 1 });
        explicit.insert(IndexSet::from_indices([1, 2, 3]), Operator::identity(3));
        assert!(matches!(ProjectorFamily::completed(&b, &explicit), Err(PrebasisError::Conflict { .. })));
        let partial: BTreeMap<IndexSet, Operator<C64>> = explicit.clone();
        assert!(matches!(ProjectorFamily::explicit(3, 4, partial), Err(PrebasisError::MissingProjector { .. })));
    }

    #[test]
    fn corrupted_projector_fails_idempotency() {
        let fam = ProjectorFamily::from_prebasis(&worked_basis());
        let mut entries: BTreeMap<IndexSet, Operator<C64>> = fam.table().iter().map(|(a, p)| (a, p.clone())).collect();
        let target = IndexSet::from_indices([0, 1]);
        let p = &entries[&target];
        let bumped = Operator::from_fn(3, |r, c| if (r, c) == (0, 0) { p.get(0, 0) + 1e-3 } else { *p.get(r, c) });
        entries.insert(target, bumped);
        let laws = ProjectorFamily::explicit(3, 4, entries).unwrap().laws();
        assert!(laws.idempotency > 1e-4);
        assert!(!laws.passes());
    }

    #[test]
    fn exact_explicit_family() {
        let one = |v: i64| ExactComplex::new(integer(v), integer(0));
        let id = Operator::from_fn(2, |r, c| one((r == c) as i64));
        let e1 = Operator::from_fn(2, |r, c| one((r == 0 && c == 0) as i64));
        let half = ExactComplex::new(rational(1, 2), integer(0));
        let plus = Operator::from_fn(2, |_, _| half.clone());
        let mut entries = BTreeMap::new();
        entries.insert(IndexSet::EMPTY, Operator::zeros(2));
        entries.insert(IndexSet::singleton(0), e1);
        entries.insert(IndexSet::singleton(1), plus);
        entries.insert(IndexSet::full(2), id.clone());
        let fam = ProjectorFamily::explicit(2, 2, entries).unwrap();
        assert!(fam.laws().passes());
        let table = fam.dressed_operators();
        let total = table.theta.iter().fold(Operator::zeros(2), |a, t| a.add(t).unwrap());
        assert_eq!(total, id);
        assert_eq!(table.sigma, table.sigma_via_increments);
        assert_eq!(table.sigma[0].trace().re, integer(1));
    }

    #[test]
    fn random_prebases_satisfy_projector_and_dressing_laws() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..12 {
            let d = rng.random_range(1..=6);
            let n = rng.random_range(d..=8);
            let b = random_basis(&mut rng, d, n);
            let fam = ProjectorFamily::from_prebasis(&b);
            let laws = fam.laws();
            assert!(laws.passes(), "d={d} n={n}: {laws:?}");
            let table = fam.dressed_operators();
            let checks = table.checks();
            assert!(checks.passes(), "d={d} n={n}: {checks:?}");
            let back = crate::lattice::inverse_mobius(&table.mobius);
            for (a, p) in back.iter() {
                assert!(p.distance(fam.get(a)).unwrap() < 1e-12);
            }
            let p = ProbabilityVector::new((0..n).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap();
            let avg = fam.random_projector_average(&p).unwrap();
            assert!(avg.discrepancy() < 1e-10);
            assert!(avg.value().is_psd(1e-10));
            for i in 0..n {
                assert!(fam.random_projector_derivative(&p, i).unwrap().is_psd(1e-10));
            }
        }
    }

    #[test]
    fn gram_route_agrees_when_well_conditioned() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut compared = 0;
        for _ in 0..10 {
            let d = rng.random_range(2..=6);
            let n = rng.random_range(d..=8);
            let b = random_basis(&mut rng, d, n);
            for set in IndexSet::all(n).filter(|a| a.len() <= d) {
                if let Some((g, cond)) = gram_projector(&b.matrix(set)) {
                    if cond < 1e8 {
                        assert!(g.distance(&b.projector(set)).unwrap() < 1e-10);
                        compared += 1;
                    }
                }
            }
        }
        assert!(compared > 100);
    }
}
