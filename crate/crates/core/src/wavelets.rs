//! Orthonormal Haar wavelets on `[0, 1]`.
//!
//! Coefficient vectors of length `N = 2^J` are ordered scaling function first,
//! then wavelets `psi_{j,l}` by increasing scale `j = 0..J-1` and, within a
//! scale, by position `l`. Index `n >= 1` is `psi_{j,l}` with `j = floor(log2 n)`
//! and `l = n - 2^j`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::model::{norm2, Signal, C64};
use crate::operators::DenseOperator;

/// Haar basis truncated to its first `N = 2^J` functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HaarBasis {
    n: usize,
}

impl HaarBasis {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return Err(invalid(format!("Haar basis size {n} is not a power of two")));
        }
        Ok(HaarBasis { n })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of wavelet scales `J`.
    pub fn scales(&self) -> usize {
        self.n.trailing_zeros() as usize
    }

    /// Coefficient indices of the wavelets at scale `j`.
    pub fn scale_range(&self, j: usize) -> std::ops::Range<usize> {
        (1 << j)..(1 << (j + 1))
    }

    /// Pieces `(a, b, value)` on which basis function `index` is constant.
    pub fn pieces(&self, index: usize) -> Vec<(f64, f64, f64)> {
        if index == 0 {
            return vec![(0.0, 1.0, 1.0)];
        }
        let j = index.ilog2();
        let l = index - (1usize << j);
        let width = 1.0 / (1u64 << j) as f64;
        let height = (width).sqrt().recip();
        let a = l as f64 * width;
        vec![
            (a, a + width / 2.0, height),
            (a + width / 2.0, a + width, -height),
        ]
    }

    /// `||phi_n||_1`.
    pub fn l1_norm(&self, index: usize) -> f64 {
        self.pieces(index)
            .iter()
            .map(|(a, b, v)| (b - a) * v.abs())
            .sum()
    }
}

/// Discrete orthonormal Haar analysis.
pub fn haar_forward(v: &[C64], basis: &HaarBasis) -> Result<Signal> {
    check_dim(v.len(), basis)?;
    Ok(Signal::from_raw(forward_vec(v)))
}

/// Discrete orthonormal Haar synthesis.
pub fn haar_inverse(c: &[C64], basis: &HaarBasis) -> Result<Signal> {
    check_dim(c.len(), basis)?;
    Ok(Signal::from_raw(inverse_vec(c)))
}

fn check_dim(len: usize, basis: &HaarBasis) -> Result<()> {
    if len != basis.dim() {
        return Err(Error::DimensionMismatch {
            context: "haar transform",
            expected: basis.dim(),
            got: len,
        });
    }
    Ok(())
}

pub(crate) fn forward_vec(v: &[C64]) -> Vec<C64> {
    let mut work = v.to_vec();
    let mut out = vec![C64::new(0.0, 0.0); v.len()];
    let mut len = v.len();
    while len > 1 {
        let half = len / 2;
        for i in 0..half {
            let (p, q) = (work[2 * i], work[2 * i + 1]);
            out[half + i] = (p - q) * FRAC_1_SQRT_2;
            work[i] = (p + q) * FRAC_1_SQRT_2;
        }
        len = half;
    }
    out[0] = work[0];
    out
}

pub(crate) fn inverse_vec(c: &[C64]) -> Vec<C64> {
    let n = c.len();
    let mut work = vec![C64::new(0.0, 0.0); n];
    work[0] = c[0];
    let mut len = 1;
    let mut next = vec![C64::new(0.0, 0.0); n];
    while len < n {
        for i in 0..len {
            let (a, d) = (work[i], c[len + i]);
            next[2 * i] = (a + d) * FRAC_1_SQRT_2;
            next[2 * i + 1] = (a - d) * FRAC_1_SQRT_2;
        }
        len *= 2;
        work[..len].copy_from_slice(&next[..len]);
    }
    work
}

/// The piecewise smooth test function
/// `f(x) = sum_{i=1}^{10} (-1)^{i mod 5} x^{i mod 3} sign(x - 1.3^{i-9})` on `[0, 1]`,
/// with `sign(0) = 0`.
#[derive(Clone, Copy, Debug, Default)]
pub struct PiecewiseTestFunction;

impl PiecewiseTestFunction {
    const TERMS: usize = 10;

    fn term(i: usize) -> (f64, i32, f64) {
        let sign = if (i % 5).is_multiple_of(2) { 1.0 } else { -1.0 };
        (sign, (i % 3) as i32, 1.3f64.powi(i as i32 - 9))
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("f is defined on [0, 1], got {x}")));
        }
        Ok(self.eval_unchecked(x))
    }

    fn eval_unchecked(&self, x: f64) -> f64 {
        (1..=Self::TERMS)
            .map(|i| {
                let (sign, p, c) = Self::term(i);
                let d = x - c;
                let sg = if d > 0.0 {
                    1.0
                } else if d < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                sign * x.powi(p) * sg
            })
            .sum()
    }

    /// Jump locations inside `[0, 1]`.
    pub fn breakpoints(&self) -> Vec<f64> {
        (1..=Self::TERMS)
            .map(|i| Self::term(i).2)
            .filter(|c| (0.0..=1.0).contains(c))
            .collect()
    }

    /// `int_a^b f` in closed form.
    ///
    /// Each term integrates to `sign(x - c) (x^{p+1} - c^{p+1}) / (p + 1)`,
    /// which is continuous across the jump at `c`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let anti = |x: f64, p: i32, c: f64| {
            let d = x - c;
            let sg = if d > 0.0 {
                1.0
            } else if d < 0.0 {
                -1.0
            } else {
                0.0
            };
            sg * (x.powi(p + 1) - c.powi(p + 1)) / (p + 1) as f64
        };
        (1..=Self::TERMS)
            .map(|i| {
                let (sign, p, c) = Self::term(i);
                sign * (anti(b, p, c) - anti(a, p, c))
            })
            .sum()
    }

    /// `||f||_{L^2}^2`, exact: three-point Gauss on every smooth piece.
    pub fn norm_squared(&self) -> f64 {
        let mut cuts = vec![0.0];
        cuts.extend(self.breakpoints().into_iter().filter(|&c| c > 0.0 && c < 1.0));
        cuts.push(1.0);
        cuts.sort_by(f64::total_cmp);
        let nodes = [-(0.6f64).sqrt(), 0.0, (0.6f64).sqrt()];
        let weights = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
        cuts.windows(2)
            .map(|w| {
                let (mid, half) = ((w[0] + w[1]) / 2.0, (w[1] - w[0]) / 2.0);
                half * nodes
                    .iter()
                    .zip(&weights)
                    .map(|(t, wt)| wt * self.eval_unchecked(mid + half * t).powi(2))
                    .sum::<f64>()
            })
            .sum()
    }
}

/// Evaluates the test function; `x` must lie in `[0, 1]`.
pub fn eval_piecewise_f(x: f64) -> Result<f64> {
    PiecewiseTestFunction.eval(x)
}

fn check_oversample(oversample: usize) -> Result<()> {
    if oversample < 2 || !oversample.is_power_of_two() {
        return Err(invalid(format!(
            "oversampling factor {oversample} must be a power of two, at least 2"
        )));
    }
    Ok(())
}

/// Projection of a function sampled on a uniform grid of `grid` cells onto the
/// orthonormal grid basis `sqrt(grid) 1_{cell}`: `sqrt(grid) * int_cell g`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridProjection {
    values: Vec<C64>,
}

impl GridProjection {
    /// Midpoint rule in every cell.
    pub fn midpoint(g: impl Fn(f64) -> f64, grid: usize) -> Self {
        let h = 1.0 / grid as f64;
        let scale = h.sqrt();
        GridProjection {
            values: (0..grid)
                .map(|i| C64::new(g((i as f64 + 0.5) * h) * scale, 0.0))
                .collect(),
        }
    }

    /// Exact cell integrals of the test function.
    pub fn test_function(grid: usize) -> Self {
        let f = PiecewiseTestFunction;
        let h = 1.0 / grid as f64;
        let scale = (grid as f64).sqrt();
        GridProjection {
            values: (0..grid)
                .map(|i| C64::new(f.integral(i as f64 * h, (i + 1) as f64 * h) * scale, 0.0))
                .collect(),
        }
    }

    pub fn grid(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// First `basis.dim()` Haar coefficients of the projected function.
    pub fn haar_coefficients(&self, basis: &HaarBasis) -> Result<Signal> {
        if self.grid() < basis.dim() || !self.grid().is_multiple_of(basis.dim()) {
            return Err(invalid("grid must refine the Haar truncation"));
        }
        let mut c = forward_vec(&self.values);
        c.truncate(basis.dim());
        Ok(Signal::from_raw(c))
    }

    /// Values of `sum_n c_n phi_n` in the same grid basis.
    pub fn synthesize(coefficients: &[C64], grid: usize) -> Vec<C64> {
        let mut padded = coefficients.to_vec();
        padded.resize(grid, C64::new(0.0, 0.0));
        inverse_vec(&padded)
    }
}

/// `(<f, phi_n>)_{n=1}^N` for the test function, computed from its exact cell
/// integrals on an `oversample * N` grid.
pub fn haar_coefficients_of_f(basis: &HaarBasis, oversample: usize) -> Result<Signal> {
    check_oversample(oversample)?;
    GridProjection::test_function(oversample * basis.dim()).haar_coefficients(basis)
}

/// `(<g, phi_n>)_{n=1}^N` by the midpoint rule on an `oversample * N` grid.
pub fn haar_coefficients_midpoint(
    g: impl Fn(f64) -> f64,
    basis: &HaarBasis,
    oversample: usize,
) -> Result<Signal> {
    check_oversample(oversample)?;
    GridProjection::midpoint(g, oversample * basis.dim()).haar_coefficients(basis)
}

/// `int_a^b e^{-i w t} dt`.
fn exp_integral(w: f64, a: f64, b: f64) -> C64 {
    if w == 0.0 {
        return C64::new(b - a, 0.0);
    }
    let e = |t: f64| C64::from_polar(1.0, -w * t);
    (e(b) - e(a)) / C64::new(0.0, -w)
}

/// Continuous Fourier transform of basis function `index` at `w`.
pub fn haar_fourier_transform(basis: &HaarBasis, index: usize, w: f64) -> C64 {
    basis
        .pieces(index)
        .into_iter()
        .map(|(a, b, v)| exp_integral(w, a, b) * v)
        .sum()
}

/// Matrix with entries `phi_n^(2 pi k_i)`, mapping Haar coefficients to
/// samples of the Fourier transform at the integer frequencies `k_i`.
pub fn fourier_of_haar_matrix(frequencies: &[i64], basis: &HaarBasis) -> DenseOperator {
    let matrix = DMatrix::from_fn(frequencies.len(), basis.dim(), |i, n| {
        haar_fourier_transform(basis, n, 2.0 * PI * frequencies[i] as f64)
    });
    DenseOperator::new(matrix)
}

/// Relative `L^2` error of `sum_n c_n phi_n` against the test function.
///
/// The in-grid part is measured on the grid; the energy of `f` finer than the
/// grid is added from the exact norm.
pub fn relative_l2_error(projection: &GridProjection, coefficients: &[C64], f_norm_sq: f64) -> f64 {
    let approx = GridProjection::synthesize(coefficients, projection.grid());
    let in_grid: f64 = projection
        .values()
        .iter()
        .zip(&approx)
        .map(|(p, q)| (p - q).norm_sqr())
        .sum();
    let grid_energy = norm2(projection.values()).powi(2);
    let tail = (f_norm_sq - grid_energy).max(0.0);
    ((in_grid + tail) / f_norm_sq).sqrt()
}
