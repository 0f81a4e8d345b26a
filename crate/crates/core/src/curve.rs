//! Monotone curves from `(0, .., 0)` to `(1, .., 1)` in the probability cube.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadrature::{Quadrature, QuadratureError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveError {
    #[error("curve parameter t = {0} lies outside [0, 1]")]
    OutOfRange(f64),
    #[error("power-curve exponent {index} is {value}; exponents must be positive and finite")]
    BadExponent { index: usize, value: f64 },
    #[error("polyline needs at least two knots starting at t = 0 and ending at t = 1")]
    BadKnots,
    #[error("polyline knots must be strictly increasing (knot {0})")]
    KnotsNotIncreasing(usize),
    #[error("polyline knot {knot} has {got} components, expected {expected}")]
    RaggedSample { knot: usize, expected: usize, got: usize },
    #[error("polyline component {component} decreases between knots {knot} and {}", knot + 1)]
    NotMonotone { component: usize, knot: usize },
    #[error("polyline must start at the zero corner and end at the unit corner")]
    WrongEndpoints,
    #[error("curve has dimension {curve} but {expected} was required")]
    DimensionMismatch { curve: usize, expected: usize },
}

/// Serialized form used in input documents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CurveSpec {
    Diagonal,
    Power { gamma: Vec<f64> },
    Polyline { t: Vec<f64>, p: Vec<Vec<f64>> },
}

/// `t ↦ (p_1(t), .., p_n(t))` with `p(0) = 0`, `p(1) = 1` and every component
/// non-decreasing.
#[derive(Clone, Debug, PartialEq)]
pub enum MonotoneCurve {
    /// `p_i(t) = t` in any dimension.
    Diagonal,
    /// `p_i(t) = t^{γ_i}`.
    Power { gamma: Vec<f64> },
    /// Piecewise-linear interpolation of sampled points.
    Polyline { t: Vec<f64>, p: Vec<Vec<f64>> },
}

impl MonotoneCurve {
    pub fn power(gamma: Vec<f64>) -> Result<Self, CurveError> {
        for (index, &g) in gamma.iter().enumerate() {
            if !(g.is_finite() && g > 0.0) {
                return Err(CurveError::BadExponent { index: index + 1, value: g });
            }
        }
        Ok(MonotoneCurve::Power { gamma })
    }

    pub fn polyline(t: Vec<f64>, p: Vec<Vec<f64>>) -> Result<Self, CurveError> {
        if t.len() < 2 || t.len() != p.len() || t[0] != 0.0 || t[t.len() - 1] != 1.0 {
            return Err(CurveError::BadKnots);
        }
        if let Some(k) = t.windows(2).position(|w| w[1] <= w[0]) {
            return Err(CurveError::KnotsNotIncreasing(k + 1));
        }
        let n = p[0].len();
        for (knot, row) in p.iter().enumerate() {
            if row.len() != n {
                return Err(CurveError::RaggedSample { knot, expected: n, got: row.len() });
            }
        }
        for knot in 0..p.len() - 1 {
            if let Some(component) = (0..n).find(|&i| p[knot + 1][i] < p[knot][i]) {
                return Err(CurveError::NotMonotone { component: component + 1, knot });
            }
        }
        if p[0].iter().any(|&v| v != 0.0) || p[p.len() - 1].iter().any(|&v| v != 1.0) {
            return Err(CurveError::WrongEndpoints);
        }
        Ok(MonotoneCurve::Polyline { t, p })
    }

    /// Samples another curve at `knots + 1` equally spaced parameters.
    pub fn sampled(curve: &MonotoneCurve, n: usize, knots: usize) -> Result<Self, CurveError> {
        let t: Vec<f64> = (0..=knots).map(|k| k as f64 / knots as f64).collect();
        let p = t.iter().map(|&s| curve.point(n, s)).collect::<Result<_, _>>()?;
        MonotoneCurve::polyline(t, p)
    }

    pub fn from_spec(spec: &CurveSpec) -> Result<Self, CurveError> {
        match spec {
            CurveSpec::Diagonal => Ok(MonotoneCurve::Diagonal),
            CurveSpec::Power { gamma } => MonotoneCurve::power(gamma.clone()),
            CurveSpec::Polyline { t, p } => MonotoneCurve::polyline(t.clone(), p.clone()),
        }
    }

    pub fn to_spec(&self) -> CurveSpec {
        match self {
            MonotoneCurve::Diagonal => CurveSpec::Diagonal,
            MonotoneCurve::Power { gamma } => CurveSpec::Power { gamma: gamma.clone() },
            MonotoneCurve::Polyline { t, p } => CurveSpec::Polyline { t: t.clone(), p: p.clone() },
        }
    }

    /// Fixed dimension, if the curve has one.
    pub fn dimension(&self) -> Option<usize> {
        match self {
            MonotoneCurve::Diagonal => None,
            MonotoneCurve::Power { gamma } => Some(gamma.len()),
            MonotoneCurve::Polyline { p, .. } => Some(p[0].len()),
        }
    }

    pub fn check_dimension(&self, n: usize) -> Result<(), CurveError> {
        match self.dimension() {
            Some(curve) if curve != n => Err(CurveError::DimensionMismatch { curve, expected: n }),
            _ => Ok(()),
        }
    }

    fn check_t(t: f64) -> Result<(), CurveError> {
        if (0.0..=1.0).contains(&t) {
            Ok(())
        } else {
            Err(CurveError::OutOfRange(t))
        }
    }

    fn segment(t: &[f64], s: f64) -> usize {
        // last knot interval [t_k, t_{k+1}] containing s
        t.partition_point(|&tk| tk <= s).clamp(1, t.len() - 1) - 1
    }

    pub fn point(&self, n: usize, t: f64) -> Result<Vec<f64>, CurveError> {
        Self::check_t(t)?;
        self.check_dimension(n)?;
        Ok(match self {
            MonotoneCurve::Diagonal => vec![t; n],
            MonotoneCurve::Power { gamma } => gamma.iter().map(|&g| t.powf(g)).collect(),
            MonotoneCurve::Polyline { t: knots, p } => {
                let k = Self::segment(knots, t);
                let w = (t - knots[k]) / (knots[k + 1] - knots[k]);
                (0..n).map(|i| (p[k][i] + w * (p[k + 1][i] - p[k][i])).clamp(0.0, 1.0)).collect()
            }
        })
    }

    /// `dp/dt`. Polylines use the slope of the segment containing `t`
    /// (right-continuous; the last segment at `t = 1`).
    pub fn velocity(&self, n: usize, t: f64) -> Result<Vec<f64>, CurveError> {
        Self::check_t(t)?;
        self.check_dimension(n)?;
        Ok(match self {
            MonotoneCurve::Diagonal => vec![1.0; n],
            MonotoneCurve::Power { gamma } => gamma
                .iter()
                .map(|&g| if g == 1.0 { 1.0 } else if t == 0.0 { if g < 1.0 { f64::INFINITY } else { 0.0 } } else { g * t.powf(g - 1.0) })
                .collect(),
            MonotoneCurve::Polyline { t: knots, p } => {
                let k = Self::segment(knots, t);
                let dt = knots[k + 1] - knots[k];
                (0..n).map(|i| (p[k + 1][i] - p[k][i]) / dt).collect()
            }
        })
    }

    /// Parameters where the velocity may jump; integrals are split there.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            MonotoneCurve::Polyline { t, .. } => t.clone(),
            _ => vec![0.0, 1.0],
        }
    }

    /// `∫₀¹ f(p(t), dp/dt) dt` for a vector-valued `f` of length `len`.
    ///
    /// Power curves with non-integer exponents are integrated in `u` with
    /// `t = u^m`, `m = max(1, 1/min γ)`, which keeps `dp/du` bounded, on
    /// pieces graded geometrically towards `u = 0`.
    pub fn integrate_path(
        &self,
        n: usize,
        quadrature: &Quadrature,
        len: usize,
        f: impl Fn(&[f64], &[f64]) -> Vec<f64> + Sync,
    ) -> Result<Vec<f64>, CurveIntegralError> {
        self.check_dimension(n)?;
        let mut total = vec![0.0; len];
        let mut add = |part: Vec<f64>| total.iter_mut().zip(&part).for_each(|(s, v)| *s += v);
        match self {
            MonotoneCurve::Power { gamma } if gamma.iter().any(|g| g.fract() != 0.0) => {
                let m = gamma.iter().fold(1.0f64, |m, &g| m.max(1.0 / g));
                let path = |u: f64| -> Vec<f64> {
                    let point: Vec<f64> = gamma.iter().map(|&g| u.powf(m * g)).collect();
                    let velocity: Vec<f64> = gamma.iter().map(|&g| m * g * u.powf(m * g - 1.0)).collect();
                    f(&point, &velocity)
                };
                let mut hi = 1.0;
                for _ in 0..GRADED_PIECES {
                    add(quadrature.integrate_many(0.5 * hi, hi, len, path)?);
                    hi *= 0.5;
                }
                add(quadrature.integrate_many(0.0, hi, len, path)?);
            }
            _ => {
                for w in self.breakpoints().windows(2) {
                    let part = quadrature.integrate_many(w[0], w[1], len, |t| {
                        let point = self.point(n, t).expect("t within [0, 1]");
                        let velocity = self.velocity(n, t).expect("t within [0, 1]");
                        f(&point, &velocity)
                    })?;
                    add(part);
                }
            }
        }
        Ok(total)
    }
}

/// Geometric pieces `[2^{-k-1}, 2^{-k}]` used for power curves.
const GRADED_PIECES: usize = 60;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveIntegralError {
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_monotonicity() {
        let curves = [
            MonotoneCurve::Diagonal,
            MonotoneCurve::power(vec![1.0, 2.0, 0.5]).unwrap(),
            MonotoneCurve::polyline(vec![0.0, 0.3, 1.0], vec![vec![0.0; 3], vec![0.1, 0.5, 0.3], vec![1.0; 3]]).unwrap(),
        ];
        for c in &curves {
            assert_eq!(c.point(3, 0.0).unwrap(), vec![0.0; 3]);
            assert_eq!(c.point(3, 1.0).unwrap(), vec![1.0; 3]);
            for k in 0..50 {
                let t = k as f64 / 50.0;
                assert!(c.velocity(3, t).unwrap().iter().all(|&v| v >= 0.0));
                let (a, b) = (c.point(3, t).unwrap(), c.point(3, t + 0.02).unwrap());
                assert!(a.iter().zip(&b).all(|(x, y)| x <= y));
            }
        }
    }

    #[test]
    fn validation() {
        assert!(matches!(MonotoneCurve::power(vec![1.0, 0.0]), Err(CurveError::BadExponent { index: 2, .. })));
        assert!(matches!(MonotoneCurve::power(vec![f64::NAN]), Err(CurveError::BadExponent { .. })));
        assert!(matches!(
            MonotoneCurve::polyline(vec![0.0, 0.5, 1.0], vec![vec![0.0], vec![0.6], vec![0.4]]),
            Err(CurveError::NotMonotone { component: 1, knot: 1 })
        ));
        assert!(matches!(
            MonotoneCurve::polyline(vec![0.0, 1.0], vec![vec![0.0], vec![0.9]]),
            Err(CurveError::WrongEndpoints)
        ));
        assert!(matches!(
            MonotoneCurve::polyline(vec![0.0, 0.0, 1.0], vec![vec![0.0], vec![0.0], vec![1.0]]),
            Err(CurveError::KnotsNotIncreasing(1))
        ));
        assert!(MonotoneCurve::polyline(vec![0.0], vec![vec![0.0]]).is_err());
        assert!(matches!(MonotoneCurve::Diagonal.point(2, 1.5), Err(CurveError::OutOfRange(_))));
        let p = MonotoneCurve::power(vec![1.0, 2.0]).unwrap();
        assert!(matches!(p.point(3, 0.5), Err(CurveError::DimensionMismatch { curve: 2, expected: 3 })));
    }

    #[test]
    fn power_velocity() {
        let c = MonotoneCurve::power(vec![1.0, 2.0, 3.0]).unwrap();
        let v = c.velocity(3, 0.5).unwrap();
        assert_eq!(v, vec![1.0, 1.0, 0.75]);
        assert_eq!(c.velocity(3, 0.0).unwrap(), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn sampled_diagonal_is_exact() {
        let c = MonotoneCurve::sampled(&MonotoneCurve::Diagonal, 2, 8).unwrap();
        let p = c.point(2, 0.3).unwrap();
        assert!((p[0] - 0.3).abs() < 1e-15);
        assert_eq!(c.velocity(2, 1.0).unwrap(), vec![1.0, 1.0]);
        assert_eq!(c.breakpoints().len(), 9);
    }

    #[test]
    fn spec_round_trip() {
        let json = r#"{"kind":"power","gamma":[1,2,3,4]}"#;
        let spec: CurveSpec = serde_json::from_str(json).unwrap();
        let c = MonotoneCurve::from_spec(&spec).unwrap();
        assert_eq!(c.dimension(), Some(4));
        let back = serde_json::to_string(&c.to_spec()).unwrap();
        assert_eq!(serde_json::from_str::<CurveSpec>(&back).unwrap(), spec);
        let d: CurveSpec = serde_json::from_str(r#"{"kind":"diagonal"}"#).unwrap();
        assert_eq!(d, CurveSpec::Diagonal);
    }
}
