//! Exact univariate polynomials on `[0, 1]` and Beta-function helpers.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::scalar::{Field, Rational};

/// `B(a, b) = (a-1)!(b-1)!/(a+b-1)!` for positive integers.
pub fn beta(a: u32, b: u32) -> Rational {
    assert!(a >= 1 && b >= 1, "beta arguments must be positive");
    Rational::new(factorial(a - 1) * factorial(b - 1), factorial(a + b - 1))
}

pub fn factorial(k: u32) -> BigInt {
    (1..=k).fold(BigInt::one(), |acc, j| acc * BigInt::from(j))
}

pub fn binomial(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    (0..k).fold(BigInt::one(), |acc, j| acc * BigInt::from(n - j) / BigInt::from(j + 1))
}

/// Polynomial `Σ c_k t^k` with exact coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    coeffs: Vec<Rational>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn constant(c: Rational) -> Self {
        Poly { coeffs: vec![c] }.trimmed()
    }

    pub fn from_coeffs(coeffs: Vec<Rational>) -> Self {
        Poly { coeffs }.trimmed()
    }

    /// `t^x (1-t)^y` expanded in the monomial basis.
    pub fn bernstein_term(x: u32, y: u32) -> Self {
        let mut coeffs = vec![Rational::zero(); (x + y + 1) as usize];
        for j in 0..=y {
            let c = Rational::from_integer(binomial(y, j));
            coeffs[(x + j) as usize] = if j % 2 == 0 { c } else { -c };
        }
        Poly { coeffs }.trimmed()
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    fn trimmed(mut self) -> Self {
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
        self
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let len = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..len)
            .map(|k| {
                let a = self.coeffs.get(k).cloned().unwrap_or_else(Rational::zero);
                let b = other.coeffs.get(k).cloned().unwrap_or_else(Rational::zero);
                a + b
            })
            .collect();
        Poly { coeffs }.trimmed()
    }

    pub fn scale(&self, c: &Rational) -> Poly {
        Poly { coeffs: self.coeffs.iter().map(|x| x * c).collect() }.trimmed()
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Poly::zero();
        }
        let mut coeffs = vec![Rational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Poly { coeffs }.trimmed()
    }

    pub fn eval<F: Field>(&self, t: &F) -> F {
        self.coeffs
            .iter()
            .rev()
            .fold(F::zero(), |acc, c| acc * t.clone() + F::from_rational(c))
    }

    /// `∫₀¹ p(t) dt`, integrating monomials as `1/(k+1)`.
    pub fn integrate_unit(&self) -> Rational {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c / Rational::from_integer(BigInt::from(k + 1)))
            .fold(Rational::zero(), |a, b| a + b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{integer, rational};

    #[test]
    fn beta_values() {
        assert_eq!(beta(2, 3), rational(1, 12));
        assert_eq!(beta(1, 4), rational(1, 4));
        assert_eq!(beta(4, 1), rational(1, 4));
        assert_eq!(beta(3, 2), beta(2, 3));
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), BigInt::from(6));
        assert_eq!(binomial(24, 12), BigInt::from(2_704_156));
        assert_eq!(binomial(3, 5), BigInt::zero());
    }

    #[test]
    fn bernstein_integral_matches_beta_up_to_24() {
        for x in 0..=24 {
            for y in 0..=24 {
                assert_eq!(Poly::bernstein_term(x, y).integrate_unit(), beta(x + 1, y + 1), "x={x} y={y}");
            }
        }
    }

    #[test]
    fn eval_and_arithmetic() {
        let p = Poly::bernstein_term(1, 2); // t(1-t)^2 = t - 2t^2 + t^3
        assert_eq!(p.coeffs(), &[integer(0), integer(1), integer(-2), integer(1)]);
        assert_eq!(p.eval(&rational(1, 2)), rational(1, 8));
        assert!((p.eval(&0.5f64) - 0.125).abs() < 1e-15);
        let q = p.add(&p.scale(&integer(-1)));
        assert_eq!(q, Poly::zero());
        assert_eq!(q.degree(), None);
        let sq = Poly::from_coeffs(vec![integer(1), integer(1)]);
        assert_eq!(sq.mul(&sq).coeffs(), &[integer(1), integer(2), integer(1)]);
    }
}
