use nalgebra::{DMatrix, DVector, DVectorView, DVectorViewMut};
use rand::Rng;
use rand_distr::StandardNormal;

use super::LinearOperator;
use crate::model::C64;

/// An explicit `m x N` complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    matrix: DMatrix<C64>,
    /// Copy of the matrix when it is real, for real-arithmetic products.
    real: Option<DMatrix<f64>>,
}

impl DenseOperator {
    pub fn new(matrix: DMatrix<C64>) -> Self {
        let real = matrix
            .iter()
            .all(|v| v.im == 0.0)
            .then(|| matrix.map(|v| v.re));
        DenseOperator { matrix, real }
    }

    pub fn from_real(matrix: &DMatrix<f64>) -> Self {
        DenseOperator {
            matrix: matrix.map(|v| C64::new(v, 0.0)),
            real: Some(matrix.clone()),
        }
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }
}

/// `out = R x` (or `R^T x`) for real `R`, one real product per nonzero part of `x`.
fn real_product(r: &DMatrix<f64>, x: &[C64], out: &mut [C64], transpose: bool) {
    let re = DVector::from_iterator(x.len(), x.iter().map(|v| v.re));
    let pr = if transpose { r.tr_mul(&re) } else { r * &re };
    if x.iter().all(|v| v.im == 0.0) {
        for (o, p) in out.iter_mut().zip(pr.iter()) {
            *o = C64::new(*p, 0.0);
        }
        return;
    }
    let im = DVector::from_iterator(x.len(), x.iter().map(|v| v.im));
    let pi = if transpose { r.tr_mul(&im) } else { r * &im };
    for ((o, p), q) in out.iter_mut().zip(pr.iter()).zip(pi.iter()) {
        *o = C64::new(*p, *q);
    }
}

impl LinearOperator for DenseOperator {
    fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    fn apply_into(&self, x: &[C64], out: &mut [C64]) {
        assert_eq!(x.len(), self.cols());
        assert_eq!(out.len(), self.rows());
        if let Some(r) = &self.real {
            return real_product(r, x, out, false);
        }
        let xv = DVectorView::from_slice(x, self.cols());
        let mut ov = DVectorViewMut::from_slice(out, self.rows());
        ov.gemv(C64::new(1.0, 0.0), &self.matrix, &xv, C64::new(0.0, 0.0));
    }

    fn adjoint_into(&self, y: &[C64], out: &mut [C64]) {
        assert_eq!(y.len(), self.rows());
        assert_eq!(out.len(), self.cols());
        if let Some(r) = &self.real {
            return real_product(r, y, out, true);
        }
        let yv = DVectorView::from_slice(y, self.rows());
        let mut ov = DVectorViewMut::from_slice(out, self.cols());
        ov.gemv_ad(C64::new(1.0, 0.0), &self.matrix, &yv, C64::new(0.0, 0.0));
    }

    fn column(&self, j: usize) -> Vec<C64> {
        self.matrix.column(j).iter().copied().collect()
    }

    fn to_dense(&self) -> DMatrix<C64> {
        self.matrix.clone()
    }
}

/// `m x N` matrix of i.i.d. real normal entries with mean zero and standard
/// deviation `1/sqrt(m)`, so that columns have unit expected squared norm.
///
/// Entries are drawn row by row.
pub fn gaussian_operator<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> DenseOperator {
    assert!(m >= 1 && n >= 1, "gaussian_operator needs m, N >= 1");
    let sd = 1.0 / (m as f64).sqrt();
    let mut matrix = DMatrix::<f64>::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            let v: f64 = rng.sample(StandardNormal);
            matrix[(i, j)] = sd * v;
        }
    }
    DenseOperator::from_real(&matrix)
}
