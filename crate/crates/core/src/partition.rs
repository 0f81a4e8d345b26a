//! Continuous partitions of a union's cardinality along monotone curves.
//!
//! Moving the inclusion probabilities from all-zero to all-one along a curve
//! `𝒞` carries the expected union size `𝔖̂` from `0` to `μ(Ω)`. Its rate of
//! change `M_Ω(t|𝒞) = Σ_i ∂𝔖̂/∂p_i · dp_i/dt` is non-negative and integrates
//! to `μ(Ω)` for every curve. On the diagonal `p_i = t` it is a polynomial
//! with exact coefficients.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::cardinality::{FamilyError, SetFamily, ShapleyReport};
use crate::curve::{CurveError, CurveIntegralError, MonotoneCurve};
use crate::poly::{beta, Poly};
use crate::quadrature::{Quadrature, QuadratureError};
use crate::random_sets::{ProbabilityError, ProbabilityVector, RandomSetDistribution};
use crate::scalar::{Pretty, Rational};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PartitionError {
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Probability(#[from] ProbabilityError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Family(#[from] FamilyError),
}

impl From<CurveIntegralError> for PartitionError {
    fn from(e: CurveIntegralError) -> Self {
        match e {
            CurveIntegralError::Curve(e) => e.into(),
            CurveIntegralError::Quadrature(e) => e.into(),
        }
    }
}

/// `M_Ω(t|𝒞)` for a family and a curve.
#[derive(Clone, Debug)]
pub struct PartitionDensity<'a> {
    family: &'a SetFamily,
    curve: &'a MonotoneCurve,
}

impl<'a> PartitionDensity<'a> {
    pub fn new(family: &'a SetFamily, curve: &'a MonotoneCurve) -> Result<Self, PartitionError> {
        curve.check_dimension(family.n())?;
        Ok(PartitionDensity { family, curve })
    }

    pub fn eval(&self, t: f64) -> Result<f64, PartitionError> {
        density_at(self.family, self.curve, t)
    }

    /// `∫₀¹ M_Ω(t|𝒞) dt`, split at the curve's breakpoints.
    pub fn integrate(&self, quadrature: &Quadrature) -> Result<f64, PartitionError> {
        integrate_density(self.family, self.curve, quadrature)
    }
}

/// `M_Ω(t|𝒞) = Σ_i ∂𝔖̂/∂p_i(𝒞(t)) · dp_i/dt`.
pub fn density_at(family: &SetFamily, curve: &MonotoneCurve, t: f64) -> Result<f64, PartitionError> {
    let n = family.n();
    let point = curve.point(n, t)?;
    let velocity = curve.velocity(n, t)?;
    let dist = RandomSetDistribution::new(ProbabilityVector::new(point)?);
    let grad = dist.gradient(family)?;
    Ok(grad.iter().zip(&velocity).filter(|(_, v)| **v != 0.0).map(|(g, v)| g * v).sum())
}

pub fn integrate_density(
    family: &SetFamily,
    curve: &MonotoneCurve,
    quadrature: &Quadrature,
) -> Result<f64, PartitionError> {
    let total = curve.integrate_path(family.n(), quadrature, 1, |point, velocity| {
        let p = ProbabilityVector::new(point.to_vec()).expect("curve points lie in the unit cube");
        let grad = RandomSetDistribution::new(p).gradient(family).expect("sizes checked");
        vec![grad.iter().zip(velocity).filter(|(_, v)| **v != 0.0).map(|(g, v)| g * v).sum()]
    })?;
    Ok(total[0])
}

/// `M_Ω(t|𝒟) = Σ_a r_a t^{a-1}(1-t)^{n-a} / B(a, n-a+1)` with exact
/// coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalDensity {
    n: usize,
    r: Vec<Rational>,
    weights: Vec<Rational>,
    poly: Poly,
}

impl DiagonalDensity {
    pub fn new(family: &SetFamily) -> Self {
        DiagonalDensity::from_report(&family.increment_totals())
    }

    pub fn from_report(report: &ShapleyReport) -> Self {
        let n = report.increment_averages.len();
        let weights: Vec<Rational> = report.beta.iter().map(|b| b.recip()).collect();
        let poly = (1..=n).fold(Poly::zero(), |acc, a| {
            let c = &report.increment_averages[a - 1] * &weights[a - 1];
            acc.add(&Poly::bernstein_term((a - 1) as u32, (n - a) as u32).scale(&c))
        });
        DiagonalDensity { n, r: report.increment_averages.clone(), weights, poly }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `r_a`, indexed `[a-1]`.
    pub fn increment_averages(&self) -> &[Rational] {
        &self.r
    }

    /// `1/B(a, n-a+1)`, indexed `[a-1]`.
    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    /// The density as an explicit polynomial in `t`.
    pub fn polynomial(&self) -> &Poly {
        &self.poly
    }

    pub fn eval_exact(&self, t: &Rational) -> Rational {
        self.poly.eval(t)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.poly.eval(&t)
    }

    /// `∫₀¹ M_Ω(t|𝒟) dt`, integrating each monomial exactly.
    pub fn integral(&self) -> Rational {
        self.poly.integrate_unit()
    }

    /// The Bernstein form with symbolic `r_a`, e.g.
    /// `4(1-t)^3r_1+12t(1-t)^2r_2+12t^2(1-t)r_3+4t^3r_4`.
    pub fn formula(&self) -> String {
        let power = |base: &str, e: usize| match e {
            0 => String::new(),
            1 => base.to_string(),
            _ => format!("{base}^{e}"),
        };
        (1..=self.n)
            .map(|a| {
                let w = &self.weights[a - 1];
                let coeff = if w.is_one() { String::new() } else { Pretty(w).to_string() };
                format!("{coeff}{}{}r_{a}", power("t", a - 1), power("(1-t)", self.n - a))
            })
            .collect::<Vec<_>>()
            .join("+")
    }
}

impl fmt::Display for DiagonalDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.formula())
    }
}

/// `M_Ω(i) = ∫₀¹ ∂𝔖̂/∂p_i(t, .., t) dt`, integrating the increment polynomial
/// `Σ_a λ_a(i) t^{a-1}(1-t)^{n-a}` monomial by monomial.
pub fn shapley_via_integral(family: &SetFamily, i: usize) -> Result<Rational, PartitionError> {
    let n = family.n();
    if i >= n {
        return Err(FamilyError::IndexOutOfRange { index: i, n }.into());
    }
    let lambda = family.increments();
    let integrand = (1..=n).fold(Poly::zero(), |acc, a| {
        let c = Rational::from_integer(BigInt::from(lambda[a - 1][i]));
        if c.is_zero() {
            acc
        } else {
            acc.add(&Poly::bernstein_term((a - 1) as u32, (n - a) as u32).scale(&c))
        }
    });
    Ok(integrand.integrate_unit())
}

/// `1/B(a, n-a+1)`, the weight of the `a`-th diagonal term.
pub fn diagonal_weight(a: usize, n: usize) -> Rational {
    beta(a as u32, (n - a + 1) as u32).recip()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{integer, rational};

    fn example() -> SetFamily {
        SetFamily::from_sets(&[&["a", "b"], &["b", "c"], &["a", "c", "d"], &["b", "d"]]).unwrap()
    }

    #[test]
    fn diagonal_closed_form() {
        let d = DiagonalDensity::new(&example());
        assert_eq!(d.formula(), "4(1-t)^3r_1+12t(1-t)^2r_2+12t^2(1-t)r_3+4t^3r_4");
        assert_eq!(d.integral(), integer(4));
        // (4/8)(9/4) + (12/8)(5/4) + (12/8)(1/2) = 9/8 + 15/8 + 6/8
        assert_eq!(d.eval_exact(&rational(1, 2)), rational(15, 4));
        assert_eq!(d.eval_exact(&integer(0)), integer(9));
    }

    #[test]
    fn diagonal_matches_generic_density() {
        let f = example();
        let d = DiagonalDensity::new(&f);
        for k in 0..50 {
            let t = (k as f64 * 0.6180339887) % 1.0;
            let generic = density_at(&f, &MonotoneCurve::Diagonal, t).unwrap();
            assert!((generic - d.eval(t)).abs() < 1e-12, "t={t}");
        }
        assert!(density_at(&f, &MonotoneCurve::Diagonal, -0.1).is_err());
    }

    #[test]
    fn disjoint_and_single_families_are_constant() {
        let f = SetFamily::from_sets(&[&["a", "b"], &["c"], &["d", "e", "f"]]).unwrap();
        let d = DiagonalDensity::new(&f);
        assert_eq!(d.polynomial().coeffs(), &[integer(6)]);
        for i in 0..3 {
            assert_eq!(shapley_via_integral(&f, i).unwrap(), integer(f.union_cardinality(crate::lattice::IndexSet::singleton(i)).unwrap() as i64));
        }
        let single = SetFamily::from_sets(&[&["x", "y"]]).unwrap();
        assert_eq!(DiagonalDensity::new(&single).polynomial().coeffs(), &[integer(2)]);
        assert_eq!(DiagonalDensity::new(&single).formula(), "r_1");
    }

    #[test]
    fn integral_route_for_shapley() {
        let f = example();
        assert_eq!(shapley_via_integral(&f, 0).unwrap(), rational(5, 6));
        assert_eq!(shapley_via_integral(&f, 2).unwrap(), rational(3, 2));
        assert!(shapley_via_integral(&f, 4).is_err());
    }

    #[test]
    fn curve_integrals_recover_union_size() {
        let f = example();
        let q = Quadrature::default();
        let curves = [
            MonotoneCurve::Diagonal,
            MonotoneCurve::power(vec![1.0, 2.0, 3.0, 4.0]).unwrap(),
            MonotoneCurve::sampled(&MonotoneCurve::Diagonal, 4, 16).unwrap(),
            MonotoneCurve::power(vec![0.5, 1.5, 3.0, 0.1]).unwrap(),
        ];
        for c in &curves {
            let v = PartitionDensity::new(&f, c).unwrap().integrate(&q).unwrap();
            assert!((v - 4.0).abs() < 1e-10, "{c:?}: {v}");
        }
    }

    #[test]
    fn weights() {
        assert_eq!(diagonal_weight(2, 4), integer(12));
    }
}
