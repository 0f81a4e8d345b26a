//! Composite Gauss–Legendre quadrature with panel doubling.
//!
//! Each estimate applies the 64-point rule on `k` equal panels. `k` doubles
//! until two successive estimates agree to `tolerance · max(1, |I|)` in every
//! component, or the panel limit is hit.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rayon::prelude::*;
use thiserror::Error;

pub const ORDER: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("quadrature did not converge with {panels} panels (last change {change:e})")]
    NotConverged { panels: usize, change: f64 },
    #[error("integrand returned a non-finite value at {0}")]
    NonFinite(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub tolerance: f64,
    pub max_panels: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature { tolerance: 1e-12, max_panels: 1 << 10 }
    }
}

/// Nodes and weights of the 64-point rule on `[-1, 1]`.
pub fn gauss_legendre() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| legendre_rule(ORDER))
}

fn legendre_rule(order: usize) -> Vec<(f64, f64)> {
    let m = order as f64;
    let mut rule = Vec::with_capacity(order);
    for k in 0..order {
        let mut x = (PI * (k as f64 + 0.75) / (m + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // three-term recurrence for P_order and its derivative
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=order {
                let j = j as f64;
                let p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = m * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        rule.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    rule.sort_by(|a, b| a.0.total_cmp(&b.0));
    rule
}

impl Quadrature {
    pub fn with_tolerance(tolerance: f64) -> Self {
        Quadrature { tolerance, ..Quadrature::default() }
    }

    /// `∫_a^b f`.
    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64 + Sync) -> Result<f64, QuadratureError> {
        Ok(self.integrate_many(a, b, 1, |x| vec![f(x)])?[0])
    }

    /// Componentwise `∫_a^b f` for a vector-valued integrand of length `len`.
    pub fn integrate_many(
        &self,
        a: f64,
        b: f64,
        len: usize,
        f: impl Fn(f64) -> Vec<f64> + Sync,
    ) -> Result<Vec<f64>, QuadratureError> {
        let mut panels = 1;
        let mut previous = self.panel_sum(a, b, panels, len, &f)?;
        loop {
            panels *= 2;
            if panels > self.max_panels {
                return Err(QuadratureError::NotConverged { panels: panels / 2, change: f64::NAN });
            }
            let current = self.panel_sum(a, b, panels, len, &f)?;
            let scale = current.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            let change = current.iter().zip(&previous).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            if change < self.tolerance * scale {
                return Ok(current);
            }
            if panels * 2 > self.max_panels {
                return Err(QuadratureError::NotConverged { panels, change });
            }
            previous = current;
        }
    }

    fn panel_sum(
        &self,
        a: f64,
        b: f64,
        panels: usize,
        len: usize,
        f: &(impl Fn(f64) -> Vec<f64> + Sync),
    ) -> Result<Vec<f64>, QuadratureError> {
        let width = (b - a) / panels as f64;
        let partial: Result<Vec<Vec<f64>>, QuadratureError> = (0..panels)
            .into_par_iter()
            .map(|k| {
                let lo = a + width * k as f64;
                let mut acc = vec![0.0; len];
                for &(x, w) in gauss_legendre() {
                    let t = lo + 0.5 * width * (x + 1.0);
                    let v = f(t);
                    debug_assert_eq!(v.len(), len);
                    for (s, fv) in acc.iter_mut().zip(&v) {
                        if !fv.is_finite() {
                            return Err(QuadratureError::NonFinite(t));
                        }
                        *s += 0.5 * width * w * fv;
                    }
                }
                Ok(acc)
            })
            .collect();
        // sum panels in index order so results do not depend on scheduling
        Ok(partial?.into_iter().fold(vec![0.0; len], |mut acc, p| {
            acc.iter_mut().zip(&p).for_each(|(s, v)| *s += v);
            acc
        }))
    }

    /// `∫_0^∞ g(x) dx` via `x = t/(1-t)`, `dx = dt/(1-t)²`.
    pub fn integrate_semi_axis_many(
        &self,
        len: usize,
        g: impl Fn(f64) -> Vec<f64> + Sync,
    ) -> Result<Vec<f64>, QuadratureError> {
        self.integrate_many(0.0, 1.0, len, |t| {
            let s = 1.0 - t;
            let jac = 1.0 / (s * s);
            g(t / s).into_iter().map(|v| v * jac).collect()
        })
    }

    pub fn integrate_semi_axis(&self, g: impl Fn(f64) -> f64 + Sync) -> Result<f64, QuadratureError> {
        Ok(self.integrate_semi_axis_many(1, |x| vec![g(x)])?[0])
    }

    /// `∫_0^∞ ∫_0^∞ g(x₁, x₂) dx₁ dx₂`, both axes mapped to `[0, 1]`.
    pub fn integrate_quadrant_many(
        &self,
        len: usize,
        g: impl Fn(f64, f64) -> Vec<f64> + Sync,
    ) -> Result<Vec<f64>, QuadratureError> {
        let inner = |x1: f64| self.integrate_semi_axis_many(len, |x2| g(x1, x2));
        let failure: std::sync::Mutex<Option<QuadratureError>> = std::sync::Mutex::new(None);
        let out = self.integrate_semi_axis_many(len, |x1| match inner(x1) {
            Ok(v) => v,
            Err(e) => {
                failure.lock().expect("poisoned").get_or_insert(e);
                vec![0.0; len]
            }
        })?;
        match failure.into_inner().expect("poisoned") {
            Some(e) => Err(e),
            None => Ok(out),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_is_symmetric_and_normalized() {
        let rule = gauss_legendre();
        assert_eq!(rule.len(), ORDER);
        let total: f64 = rule.iter().map(|(_, w)| w).sum();
        assert!((total - 2.0).abs() < 1e-14);
        for k in 0..ORDER {
            assert!((rule[k].0 + rule[ORDER - 1 - k].0).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_for_high_degree_polynomials() {
        let q = Quadrature::default();
        // degree 127 is the limit of the 64-point rule
        let v = q.integrate(0.0, 1.0, |t| t.powi(127)).unwrap();
        assert!((v - 1.0 / 128.0).abs() < 1e-15);
        let v = q.integrate(-1.0, 2.0, |t| 3.0 * t * t).unwrap();
        assert!((v - 9.0).abs() < 1e-13);
    }

    #[test]
    fn smooth_non_polynomial() {
        let q = Quadrature::default();
        let v = q.integrate(0.0, PI, f64::sin).unwrap();
        assert!((v - 2.0).abs() < 1e-13);
    }

    #[test]
    fn semi_axis_beta_integrals() {
        // ∫₀^∞ x^{a-1} (1+x)^{-(n+1)} dx = B(a, n-a+1)
        let q = Quadrature::default();
        let n = 4;
        for a in 1..=4 {
            let v = q.integrate_semi_axis(|x| x.powi(a - 1) / (1.0 + x).powi(n + 1)).unwrap();
            let beta = crate::scalar::rational_to_f64(&crate::poly::beta(a as u32, (n - a + 1) as u32));
            assert!((v - beta).abs() < 1e-13, "a={a}: {v} vs {beta}");
        }
    }

    #[test]
    fn quadrant_product() {
        let q = Quadrature::default();
        let v = q.integrate_quadrant_many(1, |x, y| vec![1.0 / ((1.0 + x).powi(2) * (1.0 + y).powi(3))]).unwrap();
        assert!((v[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn reports_non_convergence_and_non_finite() {
        let q = Quadrature { tolerance: 1e-15, max_panels: 4 };
        assert!(matches!(q.integrate(0.0, 1.0, |t| t.sqrt()), Err(QuadratureError::NotConverged { .. })));
        let q = Quadrature::default();
        assert!(matches!(q.integrate(0.0, 1.0, |_| f64::NAN), Err(QuadratureError::NonFinite(_))));
    }
}
