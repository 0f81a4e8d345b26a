//! Dense square operators on `ℂ^d`.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

use crate::lattice::{Additive, Scale};
use crate::scalar::{Entry, C64};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OperatorError {
    #[error("matrix row {row} has {got} entries, expected {expected}")]
    NotSquare { row: usize, expected: usize, got: usize },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("empty matrix")]
    Empty,
}

/// A `d×d` matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct Operator<E> {
    dim: usize,
    data: Vec<E>,
}

pub type ComplexOperator = Operator<C64>;

impl<E: fmt::Debug> fmt::Debug for Operator<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[E]> = self.data.chunks(self.dim.max(1)).collect();
        f.debug_list().entries(rows).finish()
    }
}

impl fmt::Display for Operator<C64> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let real = self.data.iter().all(|z| z.im == 0.0);
        for r in 0..self.dim {
            let cells: Vec<String> = self
                .row(r)
                .iter()
                .map(|z| if real { format!("{:8.4}", z.re) } else { format!("{:8.4}{:+.4}i", z.re, z.im) })
                .collect();
            writeln!(f, "[{}]", cells.join(" "))?;
        }
        Ok(())
    }
}

impl<E: Entry> Operator<E> {
    pub fn zeros(dim: usize) -> Self {
        Operator { dim, data: vec![E::zero(); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        Operator::from_fn(dim, |r, c| if r == c { E::one() } else { E::zero() })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> E) -> Self {
        let data = (0..dim * dim).map(|k| f(k / dim, k % dim)).collect();
        Operator { dim, data }
    }

    pub fn from_rows(rows: Vec<Vec<E>>) -> Result<Self, OperatorError> {
        let dim = rows.len();
        if dim == 0 {
            return Err(OperatorError::Empty);
        }
        let mut data = Vec::with_capacity(dim * dim);
        for (row, r) in rows.into_iter().enumerate() {
            if r.len() != dim {
                return Err(OperatorError::NotSquare { row, expected: dim, got: r.len() });
            }
            data.extend(r);
        }
        Ok(Operator { dim, data })
    }

    /// Real matrix with entries `scale · rows[r][c]`.
    pub fn from_real_rows(rows: &[&[E::Real]], scale: E::Real) -> Result<Self, OperatorError> {
        Operator::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|v| E::from_real(v.clone() * scale.clone())).collect())
                .collect(),
        )
    }

    /// `|v⟩⟨v|`.
    pub fn outer(v: &[E]) -> Self {
        Operator::from_fn(v.len(), |r, c| v[r].clone() * v[c].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, r: usize, c: usize) -> &E {
        &self.data[r * self.dim + c]
    }

    pub fn row(&self, r: usize) -> &[E] {
        &self.data[r * self.dim..(r + 1) * self.dim]
    }

    pub fn entries(&self) -> &[E] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<E>> {
        (0..self.dim).map(|r| self.row(r).to_vec()).collect()
    }

    fn check(&self, other: &Self) -> Result<(), OperatorError> {
        if self.dim == other.dim {
            Ok(())
        } else {
            Err(OperatorError::DimensionMismatch(self.dim, other.dim))
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, OperatorError> {
        self.check(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a.clone() + b.clone()).collect();
        Ok(Operator { dim: self.dim, data })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, OperatorError> {
        self.check(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a.clone() - b.clone()).collect();
        Ok(Operator { dim: self.dim, data })
    }

    pub fn mul(&self, other: &Self) -> Result<Self, OperatorError> {
        self.check(other)?;
        let d = self.dim;
        Ok(Operator::from_fn(d, |r, c| {
            (0..d).fold(E::zero(), |acc, k| acc + self.get(r, k).clone() * other.get(k, c).clone())
        }))
    }

    pub fn scale(&self, k: &E) -> Self {
        Operator { dim: self.dim, data: self.data.iter().map(|v| v.clone() * k.clone()).collect() }
    }

    pub fn scale_real(&self, k: &E::Real) -> Self {
        self.scale(&E::from_real(k.clone()))
    }

    pub fn adjoint(&self) -> Self {
        Operator::from_fn(self.dim, |r, c| self.get(c, r).conj())
    }

    pub fn trace(&self) -> E {
        (0..self.dim).fold(E::zero(), |acc, k| acc + self.get(k, k).clone())
    }

    /// `Tr(A B)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> Result<E, OperatorError> {
        self.check(other)?;
        let d = self.dim;
        let mut acc = E::zero();
        for r in 0..d {
            for k in 0..d {
                acc = acc + self.get(r, k).clone() * other.get(k, r).clone();
            }
        }
        Ok(acc)
    }

    pub fn apply(&self, v: &[E]) -> Result<Vec<E>, OperatorError> {
        if v.len() != self.dim {
            return Err(OperatorError::DimensionMismatch(self.dim, v.len()));
        }
        Ok((0..self.dim)
            .map(|r| self.row(r).iter().zip(v).fold(E::zero(), |acc, (a, b)| acc + a.clone() * b.clone()))
            .collect())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.is_zero())
    }

    pub fn to_complex(&self) -> Operator<C64> {
        Operator { dim: self.dim, data: self.data.iter().map(Entry::to_c64).collect() }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v.to_c64().norm_sqr()).sum::<f64>().sqrt()
    }

    /// `‖A - B‖_F`.
    pub fn distance(&self, other: &Self) -> Result<f64, OperatorError> {
        self.check(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a.to_c64() - b.to_c64()).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    /// Largest entrywise deviation from the adjoint.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for r in 0..d {
            for c in r..d {
                worst = worst.max((self.get(r, c).to_c64() - self.get(c, r).to_c64().conj()).norm());
            }
        }
        worst
    }

    /// `‖A² - A‖_F`.
    pub fn idempotency_error(&self) -> f64 {
        let a = self.to_complex();
        let sq = a.mul(&a).expect("same dimension");
        sq.distance(&a).expect("same dimension")
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let m = self.to_dmatrix();
        let h = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// Positive semi-definite up to `-tol·(1 + ‖A‖_F)`.
    pub fn is_psd(&self, tol: f64) -> bool {
        self.min_eigenvalue() >= -tol * (1.0 + self.frobenius_norm())
    }

    pub fn to_dmatrix(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.dim, self.dim, |r, c| self.get(r, c).to_c64())
    }
}

impl Operator<C64> {
    pub fn from_dmatrix(m: &DMatrix<C64>) -> Result<Self, OperatorError> {
        if m.nrows() != m.ncols() {
            return Err(OperatorError::NotSquare { row: 0, expected: m.nrows(), got: m.ncols() });
        }
        Ok(Operator::from_fn(m.nrows(), |r, c| m[(r, c)]))
    }
}

impl<E: Entry> Additive for Operator<E> {
    fn add_assign_ref(&mut self, rhs: &Self) {
        assert_eq!(self.dim, rhs.dim, "operator dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a = a.clone() + b.clone();
        }
    }

    fn sub_assign_ref(&mut self, rhs: &Self) {
        assert_eq!(self.dim, rhs.dim, "operator dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a = a.clone() - b.clone();
        }
    }
}

impl<E: Entry> Scale<E::Real> for Operator<E> {
    fn scaled(&self, k: &E::Real) -> Self {
        self.scale_real(k)
    }
}

/// Euclidean norm of a complex vector.
pub fn vector_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
