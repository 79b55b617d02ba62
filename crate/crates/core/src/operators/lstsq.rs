use nalgebra::{ComplexField, DMatrix, DVector};

use super::LinearOperator;
use crate::error::{check_len, invalid, Result};
use crate::model::{Signal, SupportSet, C64};

// Cholesky pivots smaller than this fraction of the largest one send the solve
// to the SVD path.
const PIVOT_RATIO: f64 = 1e-10;

/// `argmin { ||y - A z||_2 : supp(z) ⊂ U }`, minimum-norm when the restricted
/// system is rank deficient.
///
/// The returned `z` satisfies `||(A*(y - A z))|_U|| <= tol ||A* y||`.
pub fn restricted_least_squares<A: LinearOperator + ?Sized>(
    op: &A,
    y: &[C64],
    support: &SupportSet,
    tol: f64,
) -> Result<Signal> {
    check_len("restricted_least_squares", op.rows(), y.len())?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(invalid("least-squares tolerance must be positive"));
    }
    if support.indices().last().is_some_and(|&j| j >= op.cols()) {
        return Err(invalid("support index beyond operator columns"));
    }
    Signal::new(restricted_least_squares_vec(op, y, support, tol))
}

pub(crate) fn restricted_least_squares_vec<A: LinearOperator + ?Sized>(
    op: &A,
    y: &[C64],
    support: &SupportSet,
    tol: f64,
) -> Vec<C64> {
    let mut z = vec![C64::new(0.0, 0.0); op.cols()];
    let k = support.len();
    if k == 0 {
        return z;
    }
    let m = op.rows();
    let mut b = DMatrix::<C64>::zeros(m, k);
    for (c, &j) in support.indices().iter().enumerate() {
        b.column_mut(c).copy_from_slice(&op.column(j));
    }
    let real = b.iter().chain(y).all(|v| v.im == 0.0);
    let coef: Vec<C64> = if real {
        // same algorithm in real arithmetic, which is much faster
        let br = b.map(|v| v.re);
        let yr = DVector::from_iterator(m, y.iter().map(|v| v.re));
        match solve(br, &yr, tol) {
            Some(c) => c.iter().map(|&v| C64::new(v, 0.0)).collect(),
            None => return z,
        }
    } else {
        match solve(b, &DVector::from_column_slice(y), tol) {
            Some(c) => c.iter().copied().collect(),
            None => return z,
        }
    };
    for (c, &j) in support.indices().iter().enumerate() {
        z[j] = coef[c];
    }
    z
}

/// `None` when `B* y = 0`, in which case zero is optimal.
fn solve<T>(b: DMatrix<T>, y: &DVector<T>, tol: f64) -> Option<DVector<T>>
where
    T: ComplexField<RealField = f64>,
{
    let bty = b.ad_mul(y);
    let scale = bty.norm();
    if scale == 0.0 {
        return None;
    }
    Some(
        cholesky_solve(&b, y, &bty)
            .filter(|c| gradient_norm(&b, y, c) <= tol * scale)
            .unwrap_or_else(|| svd_solve(b, y)),
    )
}

fn gradient_norm<T: ComplexField<RealField = f64>>(b: &DMatrix<T>, y: &DVector<T>, c: &DVector<T>) -> f64 {
    b.ad_mul(&(y - b * c)).norm()
}

fn well_conditioned<T: ComplexField<RealField = f64>>(l: &DMatrix<T>) -> bool {
    let d: Vec<f64> = l.diagonal().iter().map(|z| z.clone().modulus_squared()).collect();
    let max = d.iter().copied().fold(0.0, f64::max);
    let min = d.iter().copied().fold(f64::INFINITY, f64::min);
    max > 0.0 && min >= PIVOT_RATIO * max
}

/// Normal equations when `B` is tall, minimum-norm `B* (B B*)^{-1} y` when wide.
fn cholesky_solve<T: ComplexField<RealField = f64>>(
    b: &DMatrix<T>,
    y: &DVector<T>,
    bty: &DVector<T>,
) -> Option<DVector<T>> {
    let (m, k) = b.shape();
    if k <= m {
        let chol = b.ad_mul(b).cholesky()?;
        if !well_conditioned(chol.l_dirty()) {
            return None;
        }
        Some(chol.solve(bty))
    } else {
        let chol = (b * b.adjoint()).cholesky()?;
        if !well_conditioned(chol.l_dirty()) {
            return None;
        }
        Some(b.ad_mul(&chol.solve(y)))
    }
}

fn svd_solve<T: ComplexField<RealField = f64>>(b: DMatrix<T>, y: &DVector<T>) -> DVector<T> {
    let (m, k) = b.shape();
    let svd = b.svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let eps = smax * (m.max(k) as f64) * f64::EPSILON * 16.0;
    svd.solve(y, eps).expect("both singular subspaces were computed")
}
