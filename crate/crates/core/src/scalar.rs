//! Numeric coefficient types.
//!
//! Two families of scalars appear throughout the crate:
//!
//! * [`Field`]: real scalars used for probabilities, cardinalities and
//!   weights. Implemented for [`Rational`] (exact) and `f64`.
//! * [`Entry`]: complex matrix entries used on the Hilbert-space side.
//!   Implemented for [`C64`] and [`ExactComplex`] (Gaussian rationals).
//!
//! Every algorithm that only needs ring operations is written once over these
//! traits, so worked examples with rational inputs are reproduced exactly and
//! numerical sweeps run in double precision through the same code path.

use std::fmt::{Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

pub use num_complex::Complex64 as C64;

/// Exact arbitrary-precision rational.
pub type Rational = BigRational;

/// Complex number with exact rational real and imaginary parts.
pub type ExactComplex = Complex<Rational>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseRationalError {
    #[error("empty number")]
    Empty,
    #[error("invalid number `{0}`")]
    Invalid(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

/// Real scalar supporting the ring operations used by the set-side algorithms.
pub trait Field:
    Clone
    + Debug
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Whether arithmetic in this type is exact.
    const EXACT: bool;

    fn from_rational(r: &Rational) -> Self;

    fn to_f64(&self) -> f64;

    fn from_u64(v: u64) -> Self {
        Self::from_rational(&Rational::from_integer(BigInt::from(v)))
    }

    fn powi(&self, k: usize) -> Self {
        (0..k).fold(Self::one(), |acc, _| acc * self.clone())
    }
}

impl Field for Rational {
    const EXACT: bool = true;

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }
}

impl Field for f64 {
    const EXACT: bool = false;

    fn from_rational(r: &Rational) -> Self {
        rational_to_f64(r)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn from_u64(v: u64) -> Self {
        v as f64
    }
}

/// Complex matrix entry.
pub trait Entry:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    /// Real scalar type matching this entry type (exact or floating).
    type Real: Field;

    fn from_real(r: Self::Real) -> Self;

    fn from_parts(re: Self::Real, im: Self::Real) -> Self;

    fn re(&self) -> Self::Real;

    fn im(&self) -> Self::Real;

    fn conj(&self) -> Self;

    fn to_c64(&self) -> C64;

    /// `|z|²` as a real scalar.
    fn norm_sqr(&self) -> Self::Real {
        let re = self.re();
        let im = self.im();
        re.clone() * re + im.clone() * im
    }
}

impl Entry for C64 {
    type Real = f64;

    fn from_real(r: f64) -> Self {
        C64::new(r, 0.0)
    }

    fn from_parts(re: f64, im: f64) -> Self {
        C64::new(re, im)
    }

    fn re(&self) -> f64 {
        self.re
    }

    fn im(&self) -> f64 {
        self.im
    }

    fn conj(&self) -> Self {
        Complex::conj(self)
    }

    fn to_c64(&self) -> C64 {
        *self
    }
}

impl Entry for ExactComplex {
    type Real = Rational;

    fn from_real(r: Rational) -> Self {
        Complex::new(r, Rational::zero())
    }

    fn from_parts(re: Rational, im: Rational) -> Self {
        Complex::new(re, im)
    }

    fn re(&self) -> Rational {
        self.re.clone()
    }

    fn im(&self) -> Rational {
        self.im.clone()
    }

    fn conj(&self) -> Self {
        Complex::new(self.re.clone(), -self.im.clone())
    }

    fn to_c64(&self) -> C64 {
        C64::new(rational_to_f64(&self.re), rational_to_f64(&self.im))
    }
}

pub fn rational(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn integer(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Nearest `f64` to a rational, robust to numerators and denominators beyond
/// the `f64` range.
pub fn rational_to_f64(r: &Rational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    // Scale both parts down to a common magnitude before dividing.
    let nbits = r.numer().bits() as i64;
    let dbits = r.denom().bits() as i64;
    let shift = nbits.max(dbits) - 1000;
    let (n, d) = if shift > 0 {
        (r.numer() >> shift as usize, r.denom() >> shift as usize)
    } else {
        (r.numer().clone(), r.denom().clone())
    };
    n.to_f64().unwrap_or(f64::NAN) / d.to_f64().unwrap_or(f64::NAN)
}

/// Parses `"p/q"`, an integer, or a finite decimal such as `"0.25"` or
/// `"-1.5e-3"` into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational, ParseRationalError> {
    let s = text.trim();
    if s.is_empty() {
        return Err(ParseRationalError::Empty);
    }
    let invalid = || ParseRationalError::Invalid(text.to_string());
    if let Some((num, den)) = s.split_once('/') {
        let n = BigInt::from_str(num.trim()).map_err(|_| invalid())?;
        let d = BigInt::from_str(den.trim()).map_err(|_| invalid())?;
        if d.is_zero() {
            return Err(ParseRationalError::ZeroDenominator(text.to_string()));
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let e: i32 = s[pos + 1..].parse().map_err(|_| invalid())?;
            (&s[..pos], e)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(invalid());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(invalid());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let numer = BigInt::from_str(if all_digits.is_empty() { "0" } else { &all_digits })
        .map_err(|_| invalid())?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = if scale >= 0 {
        Rational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    if negative {
        value = -value;
    }
    Ok(value)
}

/// Formats a rational as `"p/q"`, or `"p"` for integers.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Converts the shortest round-trip decimal representation of `x` into a
/// rational, so that `0.1` becomes `1/10` rather than its binary expansion.
pub fn decimal_f64_to_rational(x: f64) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    parse_rational(&format!("{x:e}")).ok()
}

/// Display adapter used in reports: exact values as fractions, floating
/// values in shortest form.
pub struct Pretty<'a, F>(pub &'a F);

impl Display for Pretty<'_, Rational> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&format_rational(self.0))
    }
}

impl Display for Pretty<'_, f64> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rational("1/2").unwrap(), rational(1, 2));
        assert_eq!(parse_rational(" -3/6 ").unwrap(), rational(-1, 2));
        assert_eq!(parse_rational("0.25").unwrap(), rational(1, 4));
        assert_eq!(parse_rational("7").unwrap(), integer(7));
        assert_eq!(parse_rational("1.5e-1").unwrap(), rational(3, 20));
        assert_eq!(parse_rational("2E2").unwrap(), integer(200));
        assert_eq!(parse_rational(".5").unwrap(), rational(1, 2));
    }

    #[test]
    fn rejects_garbage() {
        assert_eq!(parse_rational(""), Err(ParseRationalError::Empty));
        assert!(matches!(parse_rational("1/0"), Err(ParseRationalError::ZeroDenominator(_))));
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1.2.3").is_err());
        assert!(parse_rational(".").is_err());
    }

    #[test]
    fn decimal_conversion_is_shortest_form() {
        assert_eq!(decimal_f64_to_rational(0.1).unwrap(), rational(1, 10));
        assert_eq!(decimal_f64_to_rational(-2.5).unwrap(), rational(-5, 2));
        assert!(decimal_f64_to_rational(f64::NAN).is_none());
    }

    #[test]
    fn huge_rationals_convert_to_f64() {
        let big = Rational::new(
            num_traits::pow(BigInt::from(10), 400) * BigInt::from(3),
            num_traits::pow(BigInt::from(10), 400),
        );
        // reduced automatically, but exercise the scaled path too
        let raw = Rational::new_raw(
            num_traits::pow(BigInt::from(10), 400) * BigInt::from(3),
            num_traits::pow(BigInt::from(10), 400) * BigInt::from(2),
        );
        assert_eq!(rational_to_f64(&big), 3.0);
        assert!((rational_to_f64(&raw) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn formats_integers_without_denominator() {
        assert_eq!(format_rational(&integer(4)), "4");
        assert_eq!(format_rational(&rational(271, 120)), "271/120");
        assert_eq!(format_rational(&rational(-1, 3)), "-1/3");
    }
}
