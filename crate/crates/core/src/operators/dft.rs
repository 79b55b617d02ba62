use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use super::LinearOperator;
use crate::error::{invalid, Result};
use crate::model::C64;
use crate::sampling::{position_to_frequency, SamplingScheme};

/// `P_Ω D U` for the unitary `N`-point DFT `U`, with rows indexed through the
/// frequency ordering `0, 1, -1, 2, -2, ...` and `D` the per-level scaling
/// `sqrt((N_k - N_{k-1}) / m_k)`.
#[derive(Clone)]
pub struct SubsampledDft {
    n: usize,
    /// (DFT bin, row scale including the 1/sqrt(N) normalisation)
    rows: Vec<(usize, f64)>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SubsampledDft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SubsampledDft")
            .field("n", &self.n)
            .field("rows", &self.rows.len())
            .finish()
    }
}

pub fn subsampled_dft_operator(scheme: &SamplingScheme, n: usize) -> Result<SubsampledDft> {
    if scheme.is_empty() {
        return Err(invalid("sampling scheme selects no rows"));
    }
    if n == 0 {
        return Err(invalid("transform length must be positive"));
    }
    let norm = 1.0 / (n as f64).sqrt();
    let mut rows = Vec::with_capacity(scheme.len());
    for (p, _, scale) in scheme.rows() {
        if p >= n {
            return Err(invalid(format!(
                "row index {} out of range for a {n}-point transform",
                p + 1
            )));
        }
        let bin = position_to_frequency(p).rem_euclid(n as i64) as usize;
        rows.push((bin, scale * norm));
    }
    let mut planner = FftPlanner::new();
    Ok(SubsampledDft {
        n,
        rows,
        forward: planner.plan_fft_forward(n),
        inverse: planner.plan_fft_inverse(n),
    })
}

impl LinearOperator for SubsampledDft {
    fn rows(&self) -> usize {
        self.rows.len()
    }

    fn cols(&self) -> usize {
        self.n
    }

    fn apply_into(&self, x: &[C64], out: &mut [C64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(out.len(), self.rows.len());
        let mut buf = x.to_vec();
        self.forward.process(&mut buf);
        for (o, &(bin, scale)) in out.iter_mut().zip(&self.rows) {
            *o = buf[bin] * scale;
        }
    }

    fn adjoint_into(&self, y: &[C64], out: &mut [C64]) {
        assert_eq!(y.len(), self.rows.len());
        assert_eq!(out.len(), self.n);
        out.fill(C64::new(0.0, 0.0));
        for (&v, &(bin, scale)) in y.iter().zip(&self.rows) {
            out[bin] += v * scale;
        }
        self.inverse.process(out);
    }
}
