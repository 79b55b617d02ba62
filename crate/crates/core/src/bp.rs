//! Equality-constrained basis pursuit, `min ||z||_1 s.t. A z = y`.
//!
//! When `A A*` is well conditioned the problem is split into the l1 norm and
//! the indicator of `{z : A z = y}` and solved by Douglas–Rachford, with the
//! affine projection done exactly through a Cholesky factor of `A A*`.
//! Otherwise the Chambolle–Pock primal-dual iteration on
//! `min_z max_u ||z||_1 + Re<u, A z - y>` is used. Either way convergence is
//! certified by the feasibility residual and the gap to the dual objective
//! `Re<u, y>`, with `u` rescaled into the dual-feasible set `||A* u||_inf <= 1`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{check_len, invalid, Result};
use crate::model::{norm1, norm2, Signal, C64};
use crate::operators::{estimate_norm, LinearOperator};

const NORM_ITERATIONS: usize = 200;
const STEP_MARGIN: f64 = 0.9;
const CHECK_EVERY: usize = 10;
/// Douglas–Rachford step for the unit-norm problem.
const DR_STEP: f64 = 0.05;
/// Iterations between attempts to finish by least squares on the current support.
const POLISH_EVERY: usize = 100;
/// Smallest accepted `min L_ii^2 / max L_ii^2` of the Gram factor.
const GRAM_CONDITION: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BpConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for BpConfig {
    fn default() -> Self {
        BpConfig {
            tolerance: 1e-6,
            max_iterations: 1_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BpResult {
    pub estimate: Signal,
    pub iterations: usize,
    /// Both certificates met within the iteration budget.
    pub converged: bool,
    /// `||A z - y||_2 / ||y||_2`.
    pub feasibility: f64,
    /// `(||z||_1 - dual) / max(||z||_1, tiny)` for the normalised problem.
    pub relative_gap: f64,
}

/// Soft threshold: shrink magnitudes by `t`, keep phases.
pub fn complex_soft_threshold(z: C64, t: f64) -> C64 {
    let r = z.norm();
    if r <= t {
        C64::new(0.0, 0.0)
    } else {
        z * ((r - t) / r)
    }
}

fn sub(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(p, q)| p - q).collect()
}

/// Basis pursuit with the default tolerance and iteration budget.
pub fn basis_pursuit<A: LinearOperator + ?Sized>(op: &A, y: &[C64]) -> Result<BpResult> {
    basis_pursuit_with(op, y, &BpConfig::default())
}

/// A non-converged solve is not an error: the last iterate is returned with
/// `converged == false` and its certificates.
pub fn basis_pursuit_with<A: LinearOperator + ?Sized>(
    op: &A,
    y: &[C64],
    cfg: &BpConfig,
) -> Result<BpResult> {
    check_len("basis pursuit measurements", op.rows(), y.len())?;
    if op.rows() > op.cols() {
        return Err(invalid("basis pursuit needs rows <= cols"));
    }
    if cfg.tolerance.is_nan() || cfg.tolerance <= 0.0 || cfg.max_iterations == 0 {
        return Err(invalid("basis pursuit needs tol > 0 and max_iterations >= 1"));
    }
    let n = op.cols();
    let y_norm = norm2(y);
    if y_norm == 0.0 {
        return Ok(BpResult {
            estimate: Signal::zeros(n),
            iterations: 0,
            converged: true,
            feasibility: 0.0,
            relative_gap: 0.0,
        });
    }
    let b: Vec<C64> = y.iter().map(|v| v / y_norm).collect();
    let (z, iterations, converged, cert) = match gram_factor(op) {
        Some(chol) => douglas_rachford(op, &b, &chol, cfg),
        None => primal_dual(op, &b, cfg),
    };
    Ok(BpResult {
        estimate: Signal::from_raw(z.iter().map(|v| v * y_norm).collect()),
        iterations,
        converged,
        feasibility: cert.0,
        relative_gap: cert.1,
    })
}

type Outcome = (Vec<C64>, usize, bool, (f64, f64));

/// Cholesky factor of `A A*`, or `None` when it is (nearly) singular.
fn gram_factor<A: LinearOperator + ?Sized>(op: &A) -> Option<Cholesky<C64, Dyn>> {
    let m = op.rows();
    let zero = C64::new(0.0, 0.0);
    let mut gram = DMatrix::from_element(m, m, zero);
    let mut e = vec![zero; m];
    for j in 0..m {
        e[j] = C64::new(1.0, 0.0);
        let col = op.apply(&op.adjoint(&e));
        gram.column_mut(j).copy_from_slice(&col);
        e[j] = zero;
    }
    let gram = (&gram + gram.adjoint()) * C64::new(0.5, 0.0);
    let chol = gram.cholesky()?;
    let diag: Vec<f64> = chol.l_dirty().diagonal().iter().map(|d| d.norm_sqr()).collect();
    let hi = diag.iter().cloned().fold(0.0, f64::max);
    let lo = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    (hi > 0.0 && lo >= GRAM_CONDITION * hi).then_some(chol)
}

fn douglas_rachford<A: LinearOperator + ?Sized>(
    op: &A,
    b: &[C64],
    chol: &Cholesky<C64, Dyn>,
    cfg: &BpConfig,
) -> Outcome {
    let n = op.cols();
    let zero = C64::new(0.0, 0.0);
    let mut v = vec![zero; n];
    let mut z = vec![zero; n];
    let mut w = vec![zero; n];
    let mut cert = (f64::INFINITY, f64::INFINITY);
    let mut iterations = 0;
    while iterations < cfg.max_iterations {
        if iterations > 0 && iterations % POLISH_EVERY == 0 {
            if let Some((x, c)) = polish(op, b, &w, cfg.tolerance) {
                return (x, iterations, true, c);
            }
        }
        // z = v - A* (A A*)^{-1} (A v - b)
        let r = DVector::from_vec(sub(&op.apply(&v), b));
        let t = chol.solve(&r);
        let correction = op.adjoint(t.as_slice());
        for ((zi, vi), ci) in z.iter_mut().zip(&v).zip(&correction) {
            *zi = vi - ci;
        }
        iterations += 1;
        if iterations % CHECK_EVERY == 0 || iterations == cfg.max_iterations {
            // at a fixed point -A* t / gamma is a subgradient of ||.||_1 at z
            let u: Vec<C64> = t.iter().map(|ti| -ti / DR_STEP).collect();
            let sup = correction.iter().map(|c| c.norm() / DR_STEP).fold(1.0, f64::max);
            let dual = u.iter().zip(b).map(|(ui, bi)| (ui.conj() * bi).re).sum::<f64>() / sup;
            let feasibility = norm2(&sub(&op.apply(&z), b));
            cert = (feasibility, relative_gap(norm1(&z), dual));
            if cert.0 <= cfg.tolerance && cert.1 <= cfg.tolerance {
                return (z, iterations, true, cert);
            }
        }
        for ((vi, zi), wi) in v.iter_mut().zip(&z).zip(w.iter_mut()) {
            *wi = complex_soft_threshold(zi * 2.0 - *vi, DR_STEP);
            *vi += *wi - zi;
        }
    }
    (z, iterations, false, cert)
}

/// Least squares on `supp(w)`, accepted only with both certificates met. The
/// dual point is the least-norm `u` with `A_S* u = sign(x_S)`.
fn polish<A: LinearOperator + ?Sized>(op: &A, b: &[C64], w: &[C64], tol: f64) -> Option<(Vec<C64>, (f64, f64))> {
    let mut support: Vec<usize> = (0..w.len()).filter(|&j| w[j].norm() > 0.0).collect();
    if support.is_empty() {
        return None;
    }
    if support.len() > op.rows() {
        // a basic solution has at most m nonzeros
        support.sort_by(|&i, &j| w[j].norm().total_cmp(&w[i].norm()).then(i.cmp(&j)));
        support.truncate(op.rows());
        support.sort_unstable();
    }
    let cols: Vec<DVector<C64>> = support.iter().map(|&j| DVector::from_vec(op.column(j))).collect();
    let a_s = DMatrix::from_columns(&cols);
    let gram = a_s.ad_mul(&a_s).cholesky()?;
    let coef = gram.solve(&a_s.ad_mul(&DVector::from_column_slice(b)));
    let mut x = vec![C64::new(0.0, 0.0); w.len()];
    for (&j, c) in support.iter().zip(coef.iter()) {
        x[j] = *c;
    }
    let feasibility = norm2(&sub(&op.apply(&x), b));
    if feasibility > tol || coef.iter().any(|c| c.norm() == 0.0) {
        return None;
    }
    let sign = coef.map(|c| c / c.norm());
    let u = &a_s * gram.solve(&sign);
    let atu = op.adjoint(u.as_slice());
    let sup = atu.iter().map(|v| v.norm()).fold(1.0, f64::max);
    let dual = u.iter().zip(b).map(|(ui, bi)| (ui.conj() * bi).re).sum::<f64>() / sup;
    let gap = relative_gap(norm1(&x), dual);
    (gap <= tol).then_some((x, (feasibility, gap)))
}

fn relative_gap(primal: f64, dual: f64) -> f64 {
    (primal - dual).abs() / primal.max(1e-300)
}

fn primal_dual<A: LinearOperator + ?Sized>(op: &A, b: &[C64], cfg: &BpConfig) -> Outcome {
    let n = op.cols();
    let k_norm = estimate_norm(op, NORM_ITERATIONS).max(f64::MIN_POSITIVE);
    let tau = STEP_MARGIN / k_norm;
    let sigma = STEP_MARGIN / k_norm;

    let zero = C64::new(0.0, 0.0);
    let mut z = vec![zero; n];
    let mut az = vec![zero; op.rows()];
    let mut az_bar = az.clone();
    let mut u = vec![zero; op.rows()];
    let mut atu = vec![zero; n];
    let mut cert = (f64::INFINITY, f64::INFINITY);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iterations {
        for (ui, (a, bi)) in u.iter_mut().zip(az_bar.iter().zip(b)) {
            *ui += (a - bi) * sigma;
        }
        op.adjoint_into(&u, &mut atu);
        let z_new: Vec<C64> = z
            .iter()
            .zip(&atu)
            .map(|(zi, gi)| complex_soft_threshold(zi - gi * tau, tau))
            .collect();
        let az_new = op.apply(&z_new);
        for ((bar, new), old) in az_bar.iter_mut().zip(&az_new).zip(&az) {
            *bar = new * 2.0 - old;
        }
        z = z_new;
        az = az_new;
        iterations += 1;
        if iterations % CHECK_EVERY == 0 || iterations == cfg.max_iterations {
            op.adjoint_into(&u, &mut atu);
            cert = certificates(&z, &az, &u, &atu, b);
            if cert.0 <= cfg.tolerance && cert.1 <= cfg.tolerance {
                converged = true;
                break;
            }
        }
    }
    (z, iterations, converged, cert)
}

fn certificates(z: &[C64], az: &[C64], u: &[C64], atu: &[C64], b: &[C64]) -> (f64, f64) {
    let feasibility = norm2(&sub(az, b));
    let dual_scale = atu.iter().map(|v| v.norm()).fold(1.0, f64::max);
    let dual = -u.iter().zip(b).map(|(ui, bi)| (ui.conj() * bi).re).sum::<f64>() / dual_scale;
    (feasibility, relative_gap(norm1(z), dual))
}
