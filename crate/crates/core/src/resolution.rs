//! Continuous resolutions of the identity and the phase-space style function
//! `F(x₁, x₂)` built on them.
//!
//! The diagonal kernel is determined by the level operators
//! `R_a = B(a, n-a+1) Σ_i Λ_a(i)`:
//!
//! * `τ(t) = Σ_a R_a t^{a-1}(1-t)^{n-a} / B(a, n-a+1)` on `t ∈ [0, 1]`,
//! * `𝒯(x) = (1+x)^{-(n+1)} Σ_a x^{a-1} R_a / B(a, n-a+1)` on `x ∈ [0, ∞)`.
//!
//! Both integrate to the identity. Every integral over `[0, ∞)` is evaluated
//! through `x = t/(1-t)`.

use std::io::{self, Write};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::curve::{CurveError, CurveIntegralError, MonotoneCurve};
use crate::operator::{Operator, OperatorError};
use crate::poly::{beta, binomial, Poly};
use crate::prebasis::{OperatorTable, PrebasisError, ProjectorFamily};
use crate::quadrature::{Quadrature, QuadratureError};
use crate::random_sets::{ProbabilityError, ProbabilityVector};
use crate::scalar::{Entry, Field, Rational, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResolutionError {
    #[error("level operators sum to the identity only up to {residual:e}")]
    NotResolution { residual: f64 },
    #[error("R_{level} is not a density matrix (trace {trace}, smallest eigenvalue {min_eigenvalue:e})")]
    NotDensity { level: usize, trace: f64, min_eigenvalue: f64 },
    #[error("R_{level} is not positive semi-definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositive { level: usize, min_eigenvalue: f64 },
    #[error("kernel needs between 1 and n = {n} level operators, got {got}")]
    BadLevels { n: usize, got: usize },
    #[error("t = {0} lies outside [0, 1]")]
    ParameterOutOfRange(f64),
    #[error("x = {0} is negative")]
    NegativeArgument(f64),
    #[error("state is not a density matrix: {0}")]
    NotState(String),
    #[error("moment ({mu}, {nu}) diverges: level {level} needs order at most {limit}")]
    DivergentMoment { mu: usize, nu: usize, level: usize, limit: usize },
    #[error("component at x = {x} vanishes (F(x, x) = {weight:e})")]
    ZeroComponent { x: f64, weight: f64 },
    #[error("dimension mismatch: kernel {kernel}, {what} {got}")]
    DimensionMismatch { what: &'static str, kernel: usize, got: usize },
    #[error("bad grid `{0}`: expected x1min,x1max,x2min,x2max,points with 0 <= min < max and points >= 2")]
    BadGrid(String),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Prebasis(#[from] PrebasisError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Probability(#[from] ProbabilityError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

impl From<CurveIntegralError> for ResolutionError {
    fn from(e: CurveIntegralError) -> Self {
        match e {
            CurveIntegralError::Curve(e) => e.into(),
            CurveIntegralError::Quadrature(e) => e.into(),
        }
    }
}

/// `𝔓_{n,k}(t) = Σ_{j≤k} C(n,j) t^j (1-t)^{n-j}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedBinomial {
    n: u32,
    k: u32,
    poly: Poly,
}

impl TruncatedBinomial {
    pub fn new(n: u32, k: u32) -> Self {
        let k = k.min(n);
        let poly = (0..=k).fold(Poly::zero(), |acc, j| {
            acc.add(&Poly::bernstein_term(j, n - j).scale(&Rational::from_integer(binomial(n, j))))
        });
        TruncatedBinomial { n, k, poly }
    }

    pub fn polynomial(&self) -> &Poly {
        &self.poly
    }

    pub fn eval<F: Field>(&self, t: &F) -> F {
        self.poly.eval(t)
    }

    /// `∫₀¹ 𝔓_{n,k}`, which equals `(k+1)/(n+1)`.
    pub fn integral(&self) -> Rational {
        self.poly.integrate_unit()
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn k(&self) -> u32 {
        self.k
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum KernelMode {
    /// Every `R_a` must be a density matrix.
    #[default]
    Strict,
    /// Only `Σ_a R_a = 𝟏` and positivity of each `R_a` are required.
    Relaxed,
}

/// Residuals of the level operators.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelChecks {
    /// `‖Σ_a R_a - 𝟏‖_F`.
    pub sum_residual: f64,
    /// `Tr R_a`, indexed `[a-1]`.
    pub traces: Vec<f64>,
    /// Smallest eigenvalue of each `R_a`.
    pub min_eigenvalues: Vec<f64>,
    pub hermiticity: f64,
}

/// The level operators `R_1..R_m` of a projector family, with `m` the
/// highest level carrying a nonzero increment (`m = d` for a generic
/// pre-basis).
#[derive(Clone, Debug, PartialEq)]
pub struct ResolutionKernel<E: Entry> {
    d: usize,
    n: usize,
    r: Vec<Operator<E>>,
    betas: Vec<Rational>,
    weights: Vec<E::Real>,
    mode: KernelMode,
}

pub const TOLERANCE: f64 = 1e-10;

impl<E: Entry> ResolutionKernel<E> {
    pub fn new(table: &OperatorTable<E>, mode: KernelMode) -> Result<Self, ResolutionError> {
        let r: Vec<Operator<E>> = (1..=table.n)
            .map(|a| {
                let sum = table.lambda[a - 1]
                    .iter()
                    .fold(Operator::zeros(table.d), |acc, l| acc.add(l).expect("same dimension"));
                sum.scale_real(&E::Real::from_rational(&table.betas[a - 1]))
            })
            .collect();
        Self::from_levels(table.d, table.n, r, mode)
    }

    pub fn from_family(family: &ProjectorFamily<E>, mode: KernelMode) -> Result<Self, ResolutionError> {
        Self::new(&family.dressed_operators(), mode)
    }

    /// Trailing zero levels are dropped.
    pub fn from_levels(d: usize, n: usize, mut r: Vec<Operator<E>>, mode: KernelMode) -> Result<Self, ResolutionError> {
        while r.len() > 1 && r.last().is_some_and(|m| m.frobenius_norm() <= 1e-14) {
            r.pop();
        }
        if r.is_empty() || r.len() > n {
            return Err(ResolutionError::BadLevels { n, got: r.len() });
        }
        if let Some(m) = r.iter().find(|m| m.dim() != d) {
            return Err(ResolutionError::DimensionMismatch { what: "level operator", kernel: d, got: m.dim() });
        }
        let betas: Vec<Rational> = (1..=r.len()).map(|a| beta(a as u32, (n - a + 1) as u32)).collect();
        let weights = betas.iter().map(|b| E::Real::from_rational(&b.recip())).collect();
        let kernel = ResolutionKernel { d, n, r, betas, weights, mode };
        let checks = kernel.checks();
        if checks.sum_residual > TOLERANCE {
            return Err(ResolutionError::NotResolution { residual: checks.sum_residual });
        }
        for (a, (tr, ev)) in checks.traces.iter().zip(&checks.min_eigenvalues).enumerate() {
            let scale = 1.0 + kernel.r[a].frobenius_norm();
            let psd = *ev >= -TOLERANCE * scale && kernel.r[a].hermiticity_error() <= 1e-12;
            match mode {
                KernelMode::Strict if !psd || (tr - 1.0).abs() > TOLERANCE => {
                    return Err(ResolutionError::NotDensity { level: a + 1, trace: *tr, min_eigenvalue: *ev });
                }
                KernelMode::Relaxed if !psd => {
                    return Err(ResolutionError::NotPositive { level: a + 1, min_eigenvalue: *ev });
                }
                _ => {}
            }
        }
        Ok(kernel)
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> KernelMode {
        self.mode
    }

    /// Number of nonzero levels.
    pub fn levels(&self) -> usize {
        self.r.len()
    }

    /// `R_a`, indexed `[a-1]`.
    pub fn level_operators(&self) -> &[Operator<E>] {
        &self.r
    }

    /// `B(a, n-a+1)`, indexed `[a-1]`.
    pub fn betas(&self) -> &[Rational] {
        &self.betas
    }

    pub fn checks(&self) -> KernelChecks {
        let sum = self.r.iter().fold(Operator::<C64>::zeros(self.d), |acc, m| acc.add(&m.to_complex()).expect("same dimension"));
        KernelChecks {
            sum_residual: sum.distance(&Operator::identity(self.d)).expect("same dimension"),
            traces: self.r.iter().map(|m| m.trace().to_c64().re).collect(),
            min_eigenvalues: self.r.iter().map(Operator::min_eigenvalue).collect(),
            hermiticity: self.r.iter().map(Operator::hermiticity_error).fold(0.0, f64::max),
        }
    }

    pub fn to_complex(&self) -> ResolutionKernel<C64> {
        ResolutionKernel {
            d: self.d,
            n: self.n,
            r: self.r.iter().map(Operator::to_complex).collect(),
            betas: self.betas.clone(),
            weights: self.betas.iter().map(|b| crate::scalar::rational_to_f64(&b.recip())).collect(),
            mode: self.mode,
        }
    }

    fn combine(&self, coeff: impl Fn(usize) -> E::Real) -> Operator<E> {
        self.r.iter().enumerate().fold(Operator::zeros(self.d), |acc, (k, m)| {
            acc.add(&m.scale_real(&(coeff(k + 1) * self.weights[k].clone()))).expect("same dimension")
        })
    }

    /// `τ(t|𝒟)`.
    pub fn tau_diagonal(&self, t: &E::Real) -> Result<Operator<E>, ResolutionError> {
        if *t < E::Real::zero() || *t > E::Real::one() {
            return Err(ResolutionError::ParameterOutOfRange(t.to_f64()));
        }
        let s = E::Real::one() - t.clone();
        Ok(self.combine(|a| t.powi(a - 1) * s.powi(self.n - a)))
    }

    /// `𝒯(x)`.
    pub fn t_kernel(&self, x: &E::Real) -> Result<Operator<E>, ResolutionError> {
        if *x < E::Real::zero() {
            return Err(ResolutionError::NegativeArgument(x.to_f64()));
        }
        let denom = (E::Real::one() + x.clone()).powi(self.n + 1);
        Ok(self.combine(|a| x.powi(a - 1) / denom.clone()))
    }

    /// `∫₀¹ τ(t|𝒟) dt`, integrating each Bernstein term exactly.
    pub fn tau_integral_exact(&self) -> Operator<E> {
        self.combine(|a| E::Real::from_rational(&Poly::bernstein_term((a - 1) as u32, (self.n - a) as u32).integrate_unit()))
    }

    /// `n 𝔓_{n-1,d-1}(t)`, the trace of `τ(t|𝒟)` when every level is a
    /// density matrix.
    pub fn trace_tau(&self, t: f64) -> f64 {
        let n = self.n as u32;
        self.n as f64 * TruncatedBinomial::new(n - 1, self.d as u32 - 1).eval(&t)
    }
}

impl ResolutionKernel<C64> {
    /// `∫₀^∞ 𝒯(x) dx` by quadrature.
    pub fn t_integral(&self, quadrature: &Quadrature) -> Result<Operator<C64>, ResolutionError> {
        let d = self.d;
        let flat = quadrature.integrate_semi_axis_many(2 * d * d, |x| flatten(&self.t_kernel(&x).expect("x >= 0")))?;
        Ok(unflatten(d, &flat))
    }

    /// `∫₀^∞ 𝒯(α)𝒯(β) dβ`.
    pub fn reproduce(&self, alpha: f64, quadrature: &Quadrature) -> Result<Operator<C64>, ResolutionError> {
        let d = self.d;
        let ta = self.t_kernel(&alpha)?;
        let flat = quadrature.integrate_semi_axis_many(2 * d * d, |b| {
            flatten(&ta.mul(&self.t_kernel(&b).expect("b >= 0")).expect("same dimension"))
        })?;
        Ok(unflatten(d, &flat))
    }
}

fn flatten(m: &Operator<C64>) -> Vec<f64> {
    m.entries().iter().flat_map(|z| [z.re, z.im]).collect()
}

fn unflatten(d: usize, v: &[f64]) -> Operator<C64> {
    Operator::from_fn(d, |r, c| {
        let k = 2 * (r * d + c);
        C64::new(v[k], v[k + 1])
    })
}

fn flatten_vec(v: &[C64]) -> Vec<f64> {
    v.iter().flat_map(|z| [z.re, z.im]).collect()
}

fn unflatten_vec(v: &[f64]) -> Vec<C64> {
    v.chunks(2).map(|c| C64::new(c[0], c[1])).collect()
}

/// `τ(t|𝒞) = Σ_i ∂ϖ̂/∂p_i(𝒞(t)) dp_i/dt`.
pub fn tau_curve(
    family: &ProjectorFamily<C64>,
    curve: &MonotoneCurve,
    t: f64,
) -> Result<Operator<C64>, ResolutionError> {
    let n = family.n();
    let p = ProbabilityVector::new(curve.point(n, t)?)?;
    let v = curve.velocity(n, t)?;
    let mut acc = Operator::zeros(family.dimension());
    for (i, vi) in v.iter().enumerate() {
        if *vi != 0.0 {
            acc = acc.add(&family.random_projector_derivative(&p, i)?.scale_real(vi))?;
        }
    }
    Ok(acc)
}

/// `∫₀¹ τ(t|𝒞) dt`.
pub fn tau_curve_integral(
    family: &ProjectorFamily<C64>,
    curve: &MonotoneCurve,
    quadrature: &Quadrature,
) -> Result<Operator<C64>, ResolutionError> {
    let d = family.dimension();
    let total = curve.integrate_path(family.n(), quadrature, 2 * d * d, |point, velocity| {
        let p = ProbabilityVector::new(point.to_vec()).expect("curve points lie in the unit cube");
        let mut acc = Operator::zeros(d);
        for (i, vi) in velocity.iter().enumerate() {
            if *vi != 0.0 {
                let di = family.random_projector_derivative(&p, i).expect("sizes checked");
                acc = acc.add(&di.scale_real(vi)).expect("same dimension");
            }
        }
        flatten(&acc)
    })?;
    Ok(unflatten(d, &total))
}

/// `|s(x)⟩ = 𝒯(x)|s⟩` and its normalized form.
#[derive(Clone, Debug)]
pub struct StateExpansion {
    kernel: ResolutionKernel<C64>,
    s: Vec<C64>,
}

/// Below this `F(x, x)` the normalized component is not formed.
pub const ZERO_COMPONENT: f64 = 1e-14;

impl StateExpansion {
    pub fn new(kernel: &ResolutionKernel<C64>, s: Vec<C64>) -> Result<Self, ResolutionError> {
        if s.len() != kernel.dimension() {
            return Err(ResolutionError::DimensionMismatch { what: "vector", kernel: kernel.dimension(), got: s.len() });
        }
        Ok(StateExpansion { kernel: kernel.clone(), s })
    }

    pub fn state(&self) -> &[C64] {
        &self.s
    }

    pub fn component(&self, x: f64) -> Result<Vec<C64>, ResolutionError> {
        Ok(self.kernel.t_kernel(&x)?.apply(&self.s)?)
    }

    /// `⟨s(x₂)|s(x₁)⟩`, which is `F(x₁, x₂)` for the pure state `|s⟩⟨s|`.
    pub fn overlap(&self, x1: f64, x2: f64) -> Result<C64, ResolutionError> {
        let a = self.component(x1)?;
        let b = self.component(x2)?;
        Ok(b.iter().zip(&a).map(|(u, v)| u.conj() * v).sum())
    }

    /// `F(x, x) = ‖s(x)‖²`.
    pub fn weight(&self, x: f64) -> Result<f64, ResolutionError> {
        Ok(self.component(x)?.iter().map(|z| z.norm_sqr()).sum())
    }

    /// `|𝒮(x)⟩ = |s(x)⟩ / √F(x, x)`.
    pub fn normalized(&self, x: f64) -> Result<Vec<C64>, ResolutionError> {
        let c = self.component(x)?;
        let weight: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        if weight <= ZERO_COMPONENT {
            return Err(ResolutionError::ZeroComponent { x, weight });
        }
        let norm = weight.sqrt();
        Ok(c.into_iter().map(|z| z / norm).collect())
    }

    /// `∫₀^∞ |s(x)⟩ dx`.
    pub fn integral(&self, quadrature: &Quadrature) -> Result<Vec<C64>, ResolutionError> {
        let len = 2 * self.s.len();
        let flat = quadrature.integrate_semi_axis_many(len, |x| flatten_vec(&self.component(x).expect("x >= 0")))?;
        Ok(unflatten_vec(&flat))
    }
}

/// `𝒪(x₁, x₂; Θ) = 𝒯(x₁) Θ 𝒯(x₂)`, stored as the coefficient table
/// `R_a Θ R_b / (B_a B_b)` of `x₁^{a-1} x₂^{b-1} / ((1+x₁)(1+x₂))^{n+1}`.
#[derive(Clone, Debug)]
pub struct OperatorRep<E: Entry> {
    kernel: ResolutionKernel<E>,
    theta: Operator<E>,
    coefficients: Vec<Vec<Operator<E>>>,
}

impl<E: Entry> OperatorRep<E> {
    pub fn new(kernel: &ResolutionKernel<E>, theta: Operator<E>) -> Result<Self, ResolutionError> {
        if theta.dim() != kernel.d {
            return Err(ResolutionError::DimensionMismatch { what: "operator", kernel: kernel.d, got: theta.dim() });
        }
        let m = kernel.levels();
        let coefficients = (0..m)
            .map(|a| {
                let left = kernel.r[a].mul(&theta).expect("same dimension");
                (0..m)
                    .map(|b| {
                        let w = kernel.weights[a].clone() * kernel.weights[b].clone();
                        left.mul(&kernel.r[b]).expect("same dimension").scale_real(&w)
                    })
                    .collect()
            })
            .collect();
        Ok(OperatorRep { kernel: kernel.clone(), theta, coefficients })
    }

    pub fn theta(&self) -> &Operator<E> {
        &self.theta
    }

    /// `R_a Θ R_b / (B_a B_b)`, indexed `[a-1][b-1]`.
    pub fn coefficients(&self) -> &[Vec<Operator<E>>] {
        &self.coefficients
    }

    pub fn eval(&self, x1: &E::Real, x2: &E::Real) -> Result<Operator<E>, ResolutionError> {
        for x in [x1, x2] {
            if *x < E::Real::zero() {
                return Err(ResolutionError::NegativeArgument(x.to_f64()));
            }
        }
        let n = self.kernel.n;
        let one = E::Real::one();
        let denom = ((one.clone() + x1.clone()) * (one + x2.clone())).powi(n + 1);
        let mut acc = Operator::zeros(self.kernel.d);
        for (a, row) in self.coefficients.iter().enumerate() {
            for (b, c) in row.iter().enumerate() {
                let w = x1.powi(a) * x2.powi(b) / denom.clone();
                acc = acc.add(&c.scale_real(&w))?;
            }
        }
        Ok(acc)
    }

    /// Representation of `Θ|s⟩`: `𝒯(x)Θ|s⟩`.
    pub fn ket(&self, x: &E::Real, s: &[E]) -> Result<Vec<E>, ResolutionError> {
        let v = self.theta.apply(s)?;
        Ok(self.kernel.t_kernel(x)?.apply(&v)?)
    }

    /// Representation of `⟨s|Θ`: `⟨s|Θ𝒯(x)` as the row's conjugate.
    pub fn bra(&self, x: &E::Real, s: &[E]) -> Result<Vec<E>, ResolutionError> {
        let m = self.theta.mul(&self.kernel.t_kernel(x)?)?;
        Ok(m.adjoint().apply(s)?)
    }
}

impl OperatorRep<C64> {
    /// `∫∫ 𝒪(x₁, x₂; Θ) dx₁ dx₂`.
    pub fn integral(&self, quadrature: &Quadrature) -> Result<Operator<C64>, ResolutionError> {
        let d = self.kernel.d;
        let flat = quadrature.integrate_quadrant_many(2 * d * d, |x1, x2| flatten(&self.eval(&x1, &x2).expect("x >= 0")))?;
        Ok(unflatten(d, &flat))
    }
}

/// `F(x₁, x₂) = Tr[ρ 𝒯(x₂) 𝒯(x₁)]` for a density matrix `ρ`.
#[derive(Clone, Debug)]
pub struct FFunction<E: Entry> {
    n: usize,
    rho: Operator<E>,
    /// `Tr(R_a ρ R_b)`, indexed `[a-1][b-1]`.
    traces: Vec<Vec<E>>,
    weights: Vec<E::Real>,
}

pub fn validate_state<E: Entry>(rho: &Operator<E>) -> Result<(), ResolutionError> {
    let herm = rho.hermiticity_error();
    if herm > 1e-12 {
        return Err(ResolutionError::NotState(format!("not Hermitian (deviation {herm:e})")));
    }
    let tr = rho.trace().to_c64().re;
    if (tr - 1.0).abs() > TOLERANCE {
        return Err(ResolutionError::NotState(format!("trace {tr}")));
    }
    if !rho.is_psd(TOLERANCE) {
        return Err(ResolutionError::NotState(format!("smallest eigenvalue {:e}", rho.min_eigenvalue())));
    }
    Ok(())
}

impl<E: Entry> FFunction<E> {
    pub fn new(kernel: &ResolutionKernel<E>, rho: Operator<E>) -> Result<Self, ResolutionError> {
        if rho.dim() != kernel.d {
            return Err(ResolutionError::DimensionMismatch { what: "density matrix", kernel: kernel.d, got: rho.dim() });
        }
        validate_state(&rho)?;
        let traces = kernel
            .r
            .iter()
            .map(|ra| {
                let left = ra.mul(&rho).expect("same dimension");
                kernel.r.iter().map(|rb| left.trace_product(rb).expect("same dimension")).collect()
            })
            .collect();
        Ok(FFunction { n: kernel.n, rho, traces, weights: kernel.weights.clone() })
    }

    /// The pure state `|s⟩⟨s|`, with `s` normalized first.
    pub fn pure(kernel: &ResolutionKernel<E>, s: &[E]) -> Result<Self, ResolutionError>
    where
        E::Real: Field,
    {
        let norm_sqr = s.iter().fold(E::Real::zero(), |acc, z| acc + z.norm_sqr());
        let rho = Operator::outer(s).scale_real(&(E::Real::one() / norm_sqr));
        FFunction::new(kernel, rho)
    }

    pub fn rho(&self) -> &Operator<E> {
        &self.rho
    }

    pub fn levels(&self) -> usize {
        self.traces.len()
    }

    /// `Tr(R_a ρ R_b)`, indexed `[a-1][b-1]`.
    pub fn level_traces(&self) -> &[Vec<E>] {
        &self.traces
    }

    /// Coefficient of `x₁^i x₂^j` in `((1+x₁)(1+x₂))^{n+1} F(x₁, x₂)`,
    /// indexed `[i][j]`.
    pub fn numerator_coefficients(&self) -> Vec<Vec<E>> {
        self.traces
            .iter()
            .enumerate()
            .map(|(a, row)| {
                row.iter()
                    .enumerate()
                    .map(|(b, v)| v.clone() * E::from_real(self.weights[a].clone() * self.weights[b].clone()))
                    .collect()
            })
            .collect()
    }

    pub fn eval(&self, x1: &E::Real, x2: &E::Real) -> E {
        let one = E::Real::one();
        let denom = ((one.clone() + x1.clone()) * (one + x2.clone())).powi(self.n + 1);
        let mut acc = E::zero();
        for (i, row) in self.numerator_coefficients().into_iter().enumerate() {
            for (j, c) in row.into_iter().enumerate() {
                acc = acc + c * E::from_real(x1.powi(i) * x2.powi(j) / denom.clone());
            }
        }
        acc
    }

    /// `𝔉(α) = Tr[ρ 𝒯(α)]`.
    pub fn marginal(&self, alpha: &E::Real) -> E {
        // Σ_a R_a = 𝟏, so Tr(ρ R_b) = Σ_a Tr(R_a ρ R_b)
        let denom = (E::Real::one() + alpha.clone()).powi(self.n + 1);
        (0..self.levels()).fold(E::zero(), |acc, b| {
            let tr = self.traces.iter().fold(E::zero(), |s, row| s + row[b].clone());
            acc + tr * E::from_real(alpha.powi(b) * self.weights[b].clone() / denom.clone())
        })
    }

    /// `⟨x₁^μ x₂^ν⟩ = Σ_{a,b} Tr(R_a ρ R_b) (a)_μ/(n-a+1-μ)_μ · (b)_ν/(n-b+1-ν)_ν`.
    pub fn moment(&self, mu: usize, nu: usize) -> Result<E, ResolutionError> {
        let n = self.n;
        let contributes_row = |a: usize| self.traces[a].iter().any(|v| !v.is_zero());
        let contributes_col = |b: usize| self.traces.iter().any(|row| !row[b].is_zero());
        for a in 0..self.levels() {
            let level = a + 1;
            if contributes_row(a) && mu + level > n {
                return Err(ResolutionError::DivergentMoment { mu, nu, level, limit: n - level });
            }
            if contributes_col(a) && nu + level > n {
                return Err(ResolutionError::DivergentMoment { mu, nu, level, limit: n - level });
            }
        }
        let ratio = |a: usize, m: usize| -> E::Real {
            let num = (0..m).fold(Rational::one(), |acc, k| acc * Rational::from_integer(BigInt::from(a + k)));
            let den = (0..m).fold(Rational::one(), |acc, k| acc * Rational::from_integer(BigInt::from(n - a + 1 - m + k)));
            E::Real::from_rational(&(num / den))
        };
        let mut acc = E::zero();
        for (a, row) in self.traces.iter().enumerate() {
            for (b, v) in row.iter().enumerate() {
                if !v.is_zero() {
                    acc = acc + v.clone() * E::from_real(ratio(a + 1, mu) * ratio(b + 1, nu));
                }
            }
        }
        Ok(acc)
    }

    pub fn to_complex(&self) -> FFunction<C64> {
        FFunction {
            n: self.n,
            rho: self.rho.to_complex(),
            traces: self.traces.iter().map(|row| row.iter().map(Entry::to_c64).collect()).collect(),
            weights: self.weights.iter().map(Field::to_f64).collect(),
        }
    }
}

impl FFunction<C64> {
    /// `∫∫ x₁^μ x₂^ν F(x₁, x₂) dx₁ dx₂` by quadrature.
    pub fn moment_by_quadrature(&self, mu: usize, nu: usize, quadrature: &Quadrature) -> Result<C64, ResolutionError> {
        let v = quadrature.integrate_quadrant_many(2, |x1, x2| {
            let f = self.eval(&x1, &x2) * x1.powi(mu as i32) * x2.powi(nu as i32);
            vec![f.re, f.im]
        })?;
        Ok(C64::new(v[0], v[1]))
    }

    /// `∫₀^∞ F(x₁, α) dx₁` and `∫₀^∞ F(α, x₂) dx₂`.
    pub fn marginals_by_quadrature(&self, alpha: f64, quadrature: &Quadrature) -> Result<(C64, C64), ResolutionError> {
        let v = quadrature.integrate_semi_axis_many(4, |x| {
            let a = self.eval(&x, &alpha);
            let b = self.eval(&alpha, &x);
            vec![a.re, a.im, b.re, b.im]
        })?;
        Ok((C64::new(v[0], v[1]), C64::new(v[2], v[3])))
    }

    pub fn marginal_integral(&self, quadrature: &Quadrature) -> Result<f64, ResolutionError> {
        Ok(quadrature.integrate_semi_axis(|a| self.marginal(&a).re)?)
    }
}

/// `(1/√d) Σ_μ ω^{μν} v_μ` with `ω = e^{2πi/d}`.
pub fn finite_fourier(v: &[C64]) -> Vec<C64> {
    let d = v.len();
    let scale = 1.0 / (d as f64).sqrt();
    (0..d)
        .map(|nu| {
            v.iter()
                .enumerate()
                .map(|(mu, z)| {
                    let phase = 2.0 * std::f64::consts::PI * ((mu * nu) % d) as f64 / d as f64;
                    z * C64::from_polar(1.0, phase)
                })
                .sum::<C64>()
                * scale
        })
        .collect()
}

/// Sampling grid on the probabilistic quadrant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub x1: (f64, f64),
    pub x2: (f64, f64),
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { x1: (1e-2, 1e2), x2: (1e-2, 1e2), points: 41 }
    }
}

impl std::str::FromStr for GridSpec {
    type Err = ResolutionError;

    /// `x1min,x1max,x2min,x2max,points`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ResolutionError::BadGrid(s.to_string());
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 5 {
            return Err(bad());
        }
        let v: Vec<f64> = parts[..4].iter().map(|p| p.parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
        let points: usize = parts[4].parse().map_err(|_| bad())?;
        let grid = GridSpec { x1: (v[0], v[1]), x2: (v[2], v[3]), points };
        let ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo < hi;
        if !ok(grid.x1) || !ok(grid.x2) || points < 2 {
            return Err(bad());
        }
        Ok(grid)
    }
}

impl GridSpec {
    /// Geometric spacing when the lower end is positive, linear otherwise.
    pub fn axis((lo, hi): (f64, f64), points: usize) -> Vec<f64> {
        (0..points)
            .map(|k| {
                let s = k as f64 / (points - 1) as f64;
                if k == points - 1 {
                    hi
                } else if lo > 0.0 {
                    10f64.powf(lo.log10() + s * (hi.log10() - lo.log10()))
                } else {
                    lo + s * (hi - lo)
                }
            })
            .collect()
    }

    pub fn x1_axis(&self) -> Vec<f64> {
        Self::axis(self.x1, self.points)
    }

    pub fn x2_axis(&self) -> Vec<f64> {
        Self::axis(self.x2, self.points)
    }

    fn header(&self, out: &mut impl Write, what: &str) -> io::Result<()> {
        let spacing = |lo: f64| if lo > 0.0 { "geometric" } else { "linear" };
        writeln!(out, "# {what}")?;
        writeln!(out, "# x1 in [{}, {}] ({}), x2 in [{}, {}] ({}), {} points per axis",
            self.x1.0, self.x1.1, spacing(self.x1.0), self.x2.0, self.x2.1, spacing(self.x2.0), self.points)
    }

    /// CSV with columns `x1,x2,re,im`.
    pub fn write_f_grid(&self, f: &FFunction<C64>, out: &mut impl Write) -> io::Result<()> {
        self.header(out, "F(x1, x2)")?;
        writeln!(out, "x1,x2,re,im")?;
        for &x1 in &self.x1_axis() {
            for &x2 in &self.x2_axis() {
                let v = f.eval(&x1, &x2);
                writeln!(out, "{x1:e},{x2:e},{:e},{:e}", v.re, v.im)?;
            }
        }
        Ok(())
    }

    /// CSV with columns `alpha,value` along the `x1` axis.
    pub fn write_marginal(&self, f: &FFunction<C64>, out: &mut impl Write) -> io::Result<()> {
        self.header(out, "marginal of F along the x1 axis")?;
        writeln!(out, "alpha,value")?;
        for &a in &self.x1_axis() {
            writeln!(out, "{a:e},{:e}", f.marginal(&a).re)?;
        }
        Ok(())
    }
}
