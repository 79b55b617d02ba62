use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{decode, median, Decoder};
use crate::bp::BpConfig;
use crate::error::{invalid, Error, Result};
use crate::model::{LevelStructure, LocalSparsities, Signal, SparsityModel, C64};
use crate::operators::{gaussian_operator, DenseOperator, LinearOperator};
use crate::rng::{derive_seed, seeded};
use crate::sampling::fourier_scheme;
use crate::solvers::SolverConfig;
use crate::wavelets::{
    fourier_of_haar_matrix, haar_coefficients_of_f, relative_l2_error, GridProjection, HaarBasis,
    PiecewiseTestFunction,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Encoder {
    /// Gaussian matrix applied to the first `N` Haar coefficients.
    Gaussian,
    /// Multilevel subsampled Fourier samples of the Haar expansion.
    Fourier,
}

impl Encoder {
    pub fn name(self) -> &'static str {
        match self {
            Encoder::Gaussian => "gaussian",
            Encoder::Fourier => "fourier",
        }
    }
}

impl fmt::Display for Encoder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Encoder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(Encoder::Gaussian),
            "fourier" => Ok(Encoder::Fourier),
            other => Err(Error::Config(format!(
                "unknown encoder '{other}' (expected gaussian or fourier)"
            ))),
        }
    }
}

/// The test function discretised once: grid projection, its first `N` Haar
/// coefficients and `||f||^2`.
#[derive(Clone, Debug)]
pub struct ApproxProblem {
    pub basis: HaarBasis,
    pub projection: GridProjection,
    pub coefficients: Signal,
    pub f_norm_sq: f64,
}

impl ApproxProblem {
    pub fn new(n: usize, oversample: usize) -> Result<Self> {
        let basis = HaarBasis::new(n)?;
        let coefficients = haar_coefficients_of_f(&basis, oversample)?;
        Ok(ApproxProblem {
            projection: GridProjection::test_function(n * oversample),
            basis,
            coefficients,
            f_norm_sq: PiecewiseTestFunction.norm_squared(),
        })
    }

    pub fn n(&self) -> usize {
        self.basis.dim()
    }

    /// Measurement matrix and (noiseless) measurements of the Haar coefficients.
    pub fn encode<R: rand::Rng + ?Sized>(
        &self,
        encoder: Encoder,
        m: usize,
        rng: &mut R,
    ) -> Result<(DenseOperator, Vec<C64>)> {
        let a = match encoder {
            Encoder::Gaussian => gaussian_operator(m, self.n(), rng),
            Encoder::Fourier => {
                let scheme = fourier_scheme(m, self.basis.scales(), rng)?;
                let mut b = fourier_of_haar_matrix(&scheme.frequencies(), &self.basis).into_matrix();
                for (i, (_, _, scale)) in scheme.rows().enumerate() {
                    b.row_mut(i).scale_mut(scale);
                }
                DenseOperator::new(b)
            }
        };
        let y = a.apply(&self.coefficients);
        Ok((a, y))
    }

    pub fn relative_error(&self, estimate: &[C64]) -> f64 {
        relative_l2_error(&self.projection, estimate, self.f_norm_sq)
    }
}

/// `s = round(m / C)`, clamped to `1..=N`.
pub fn sparsity_for(m: usize, c: f64, n: usize) -> usize {
    ((m as f64 / c).round() as usize).clamp(1, n)
}

/// Decoder model for budget `s`: `M = (s/2, N)`, `s = (s/2, s - s/2)` with the
/// first level saturated; a single level when `s/2` rounds to zero.
pub fn approx_model(s: usize, n: usize) -> Result<SparsityModel> {
    let half = s / 2;
    if half == 0 {
        return Ok(SparsityModel::Sparse(s));
    }
    let levels = LevelStructure::new(vec![half, n])?;
    let local = LocalSparsities::new(vec![half, s - half]);
    local.validate(&levels)?;
    Ok(SparsityModel::Levels(local, levels))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApproxOptions {
    pub n: usize,
    pub oversample: usize,
    pub solver: SolverConfig,
    pub bp: BpConfig,
    /// Standard deviation of additive real Gaussian noise per measurement.
    pub noise: f64,
}

impl Default for ApproxOptions {
    fn default() -> Self {
        ApproxOptions {
            n: 1 << 10,
            oversample: 8,
            solver: SolverConfig::with_tolerance(1e-8),
            bp: BpConfig::default(),
            noise: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ApproxCell {
    pub encoder: Encoder,
    pub decoder: Decoder,
    pub c: f64,
    pub n: usize,
    pub m: usize,
    /// Relative `L^2` error per run, in run order.
    pub errors: Vec<f64>,
}

impl ApproxCell {
    pub fn runs(&self) -> usize {
        self.errors.len()
    }

    pub fn mean(&self) -> f64 {
        self.errors.iter().sum::<f64>() / self.errors.len() as f64
    }

    pub fn median(&self) -> f64 {
        median(&mut self.errors.clone())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ApproximationSweepResult {
    pub master_seed: u64,
    /// Ordered by `C`, then decoder (as given), then `m`.
    pub cells: Vec<ApproxCell>,
}

impl ApproximationSweepResult {
    pub fn cell(&self, decoder: Decoder, c: f64, m: usize) -> Option<&ApproxCell> {
        self.cells
            .iter()
            .find(|x| x.decoder == decoder && x.c == c && x.m == m)
    }
}

fn check_sweep(m_list: &[usize], c_list: &[f64], runs: usize, opts: &ApproxOptions) -> Result<()> {
    if !opts.n.is_power_of_two() || opts.n < 2 {
        return Err(invalid(format!("N = {} must be a power of two >= 2", opts.n)));
    }
    for &m in m_list {
        if !m.is_power_of_two() || m < 2 || m > opts.n {
            return Err(invalid(format!("m = {m} must be a power of two in 2..=N")));
        }
    }
    if c_list.iter().any(|c| !c.is_finite() || *c <= 0.0) {
        return Err(invalid("C must be positive"));
    }
    if runs == 0 {
        return Err(invalid("at least one run is required"));
    }
    if !(opts.noise >= 0.0 && opts.noise.is_finite()) {
        return Err(invalid("noise level must be finite and non-negative"));
    }
    Ok(())
}

/// Seed of run `run` at `m`; shared by every decoder and every `C`.
fn run_seed(master: u64, m: usize, run: usize) -> u64 {
    derive_seed(master, &[m as u64, run as u64])
}

/// Every `(C, decoder, m)` combination on paired encoder draws.
pub fn function_approx_sweeps(
    encoder: Encoder,
    decoders: &[Decoder],
    m_list: &[usize],
    c_list: &[f64],
    runs: usize,
    master: u64,
    opts: &ApproxOptions,
) -> Result<ApproximationSweepResult> {
    check_sweep(m_list, c_list, runs, opts)?;
    let problem = ApproxProblem::new(opts.n, opts.oversample)?;
    let n = opts.n;
    let tasks: Vec<(usize, usize)> = m_list
        .iter()
        .flat_map(|&m| (0..runs).map(move |r| (m, r)))
        .collect();
    // errors[task][c][decoder]
    let errors: Vec<Vec<Vec<f64>>> = tasks
        .par_iter()
        .map(|&(m, run)| {
            let seed = run_seed(master, m, run);
            let mut rng = seeded(seed);
            let (a, mut y) = problem.encode(encoder, m, &mut rng)?;
            if opts.noise > 0.0 {
                for v in &mut y {
                    let e: f64 = rng.sample(StandardNormal);
                    *v += C64::new(opts.noise * e, 0.0);
                }
            }
            let context = |e: Error, c: f64, d: Decoder| {
                e.in_cell(format!("{d} {encoder} run {run} at C = {c}, m = {m} (seed {seed})"))
            };
            // basis pursuit ignores the sparsity model, so it is solved once
            let mut bp_error = None;
            c_list
                .iter()
                .map(|&c| {
                    let model = approx_model(sparsity_for(m, c, n), n)?;
                    decoders
                        .iter()
                        .map(|&d| {
                            if let (Decoder::Bp, Some(e)) = (d, bp_error) {
                                return Ok(e);
                            }
                            let out = decode(d, &a, &y, &model, &opts.solver, &opts.bp)
                                .map_err(|e| context(e, c, d))?;
                            let err = problem.relative_error(&out.estimate);
                            if d == Decoder::Bp {
                                bp_error = Some(err);
                            }
                            Ok(err)
                        })
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut cells = Vec::new();
    for (ci, &c) in c_list.iter().enumerate() {
        for (di, &decoder) in decoders.iter().enumerate() {
            for (mi, &m) in m_list.iter().enumerate() {
                let errs = (0..runs).map(|r| errors[mi * runs + r][ci][di]).collect();
                cells.push(ApproxCell {
                    encoder,
                    decoder,
                    c,
                    n,
                    m,
                    errors: errs,
                });
            }
        }
    }
    Ok(ApproximationSweepResult {
        master_seed: master,
        cells,
    })
}

/// Error curve for one decoder at one `C`.
pub fn function_approx_sweep(
    encoder: Encoder,
    decoder: Decoder,
    m_list: &[usize],
    c: f64,
    runs: usize,
    master: u64,
    opts: &ApproxOptions,
) -> Result<ApproximationSweepResult> {
    function_approx_sweeps(encoder, &[decoder], m_list, &[c], runs, master, opts)
}
