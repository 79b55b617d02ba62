//! Linear measurement operators.
//!
//! Every operator exposes a forward action `v -> A v` and an adjoint action
//! `u -> A* u`. Dense matrices, the subsampled unitary DFT and the scaled and
//! composed wrappers all implement [`LinearOperator`]; the solvers only see the
//! trait.

mod dense;
mod dft;
mod lstsq;

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{check_len, Result};
use crate::model::C64;

pub use dense::{gaussian_operator, DenseOperator};
pub use dft::{subsampled_dft_operator, SubsampledDft};
pub use lstsq::restricted_least_squares;

pub(crate) use lstsq::restricted_least_squares_vec;

pub trait LinearOperator: Send + Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;

    /// `out = A x`. Panics on length mismatch.
    fn apply_into(&self, x: &[C64], out: &mut [C64]);

    /// `out = A* y`. Panics on length mismatch.
    fn adjoint_into(&self, y: &[C64], out: &mut [C64]);

    fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.rows()];
        self.apply_into(x, &mut out);
        out
    }

    fn adjoint(&self, y: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.cols()];
        self.adjoint_into(y, &mut out);
        out
    }

    /// Column `j` (0-based), i.e. `A e_j`.
    fn column(&self, j: usize) -> Vec<C64> {
        let mut e = vec![C64::new(0.0, 0.0); self.cols()];
        e[j] = C64::new(1.0, 0.0);
        self.apply(&e)
    }

    /// Explicit matrix, assembled column by column unless the operator is
    /// already dense.
    fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.rows(), self.cols());
        for j in 0..self.cols() {
            m.column_mut(j).copy_from_slice(&self.column(j));
        }
        m
    }
}

macro_rules! forward_impl {
    ($($ty:ty),*) => {$(
        impl<T: LinearOperator + ?Sized> LinearOperator for $ty {
            fn rows(&self) -> usize { (**self).rows() }
            fn cols(&self) -> usize { (**self).cols() }
            fn apply_into(&self, x: &[C64], out: &mut [C64]) { (**self).apply_into(x, out) }
            fn adjoint_into(&self, y: &[C64], out: &mut [C64]) { (**self).adjoint_into(y, out) }
            fn column(&self, j: usize) -> Vec<C64> { (**self).column(j) }
            fn to_dense(&self) -> DMatrix<C64> { (**self).to_dense() }
        }
    )*};
}

forward_impl!(&T, Box<T>, Arc<T>);

/// The `n x n` identity.
#[derive(Clone, Copy, Debug)]
pub struct Identity(pub usize);

impl LinearOperator for Identity {
    fn rows(&self) -> usize {
        self.0
    }
    fn cols(&self) -> usize {
        self.0
    }
    fn apply_into(&self, x: &[C64], out: &mut [C64]) {
        out.copy_from_slice(x);
    }
    fn adjoint_into(&self, y: &[C64], out: &mut [C64]) {
        out.copy_from_slice(y);
    }
}

/// `c A`.
#[derive(Clone, Debug)]
pub struct Scaled<A> {
    inner: A,
    factor: C64,
}

impl<A: LinearOperator> Scaled<A> {
    pub fn factor(&self) -> C64 {
        self.factor
    }

    pub fn inner(&self) -> &A {
        &self.inner
    }
}

pub fn scale<A: LinearOperator>(op: A, c: C64) -> Result<Scaled<A>> {
    if !(c.re.is_finite() && c.im.is_finite()) {
        return Err(crate::error::invalid("scale factor must be finite"));
    }
    Ok(Scaled { inner: op, factor: c })
}

impl<A: LinearOperator> LinearOperator for Scaled<A> {
    fn rows(&self) -> usize {
        self.inner.rows()
    }
    fn cols(&self) -> usize {
        self.inner.cols()
    }
    fn apply_into(&self, x: &[C64], out: &mut [C64]) {
        self.inner.apply_into(x, out);
        out.iter_mut().for_each(|z| *z *= self.factor);
    }
    fn adjoint_into(&self, y: &[C64], out: &mut [C64]) {
        self.inner.adjoint_into(y, out);
        let c = self.factor.conj();
        out.iter_mut().for_each(|z| *z *= c);
    }
    fn column(&self, j: usize) -> Vec<C64> {
        let mut col = self.inner.column(j);
        col.iter_mut().for_each(|z| *z *= self.factor);
        col
    }
}

/// `outer ∘ inner`.
#[derive(Clone, Debug)]
pub struct Composed<A, B> {
    outer: A,
    inner: B,
}

pub fn compose<A: LinearOperator, B: LinearOperator>(outer: A, inner: B) -> Result<Composed<A, B>> {
    check_len("compose", outer.cols(), inner.rows())?;
    Ok(Composed { outer, inner })
}

impl<A: LinearOperator, B: LinearOperator> LinearOperator for Composed<A, B> {
    fn rows(&self) -> usize {
        self.outer.rows()
    }
    fn cols(&self) -> usize {
        self.inner.cols()
    }
    fn apply_into(&self, x: &[C64], out: &mut [C64]) {
        let mid = self.inner.apply(x);
        self.outer.apply_into(&mid, out);
    }
    fn adjoint_into(&self, y: &[C64], out: &mut [C64]) {
        let mid = self.outer.adjoint(y);
        self.inner.adjoint_into(&mid, out);
    }
}

/// Largest singular value by power iteration on `A* A`.
pub fn estimate_norm<A: LinearOperator + ?Sized>(op: &A, iterations: usize) -> f64 {
    let n = op.cols();
    // deterministic, generic start vector
    let mut v: Vec<C64> = (0..n)
        .map(|i| C64::new(1.0 + (i as f64 * 0.618_033_988_75).fract(), 0.0))
        .collect();
    let mut sigma = 0.0;
    for _ in 0..iterations {
        let nv = crate::model::norm2(&v);
        if nv == 0.0 {
            return 0.0;
        }
        v.iter_mut().for_each(|z| *z /= nv);
        let av = op.apply(&v);
        sigma = crate::model::norm2(&av);
        v = op.adjoint(&av);
    }
    sigma
}
