use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{decode, Decoder};
use crate::bp::BpConfig;
use crate::error::{invalid, Result};
use crate::model::{dist2, norm2, random_sparse_in_levels, LevelStructure, LocalSparsities, SparsityModel, C64};
use crate::operators::{gaussian_operator, LinearOperator};
use crate::rng::{derive_seed, seeded};
use crate::solvers::SolverConfig;

/// How a total sparsity `s` becomes a concrete `(s, M)` model on `N` entries.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelFamily {
    /// One level holding all `N` entries.
    Sparse,
    /// Fixed levels; `s_k = round(fraction_k * s)`.
    Fractions {
        levels: LevelStructure,
        fractions: Vec<f64>,
    },
    /// Two levels `M = (a s, N)` with the first saturated: `s = (a s, (1 - a) s)`.
    Saturated { fraction: f64 },
}

impl ModelFamily {
    pub fn model(&self, n: usize, s: usize) -> Result<(LocalSparsities, LevelStructure)> {
        let (local, levels) = match self {
            ModelFamily::Sparse => (LocalSparsities::new(vec![s]), LevelStructure::single(n)?),
            ModelFamily::Fractions { levels, fractions } => {
                if levels.dim() != n {
                    return Err(invalid(format!(
                        "levels cover {} entries, experiment has N = {n}",
                        levels.dim()
                    )));
                }
                if fractions.len() != levels.num_levels() {
                    return Err(invalid("one sparsity fraction per level is required"));
                }
                let counts = fractions
                    .iter()
                    .map(|f| (f * s as f64).round() as usize)
                    .collect();
                (LocalSparsities::new(counts), levels.clone())
            }
            ModelFamily::Saturated { fraction } => {
                if !(*fraction > 0.0 && *fraction < 1.0) {
                    return Err(invalid("saturated fraction must lie in (0, 1)"));
                }
                let first = (fraction * s as f64).round() as usize;
                if first == 0 || first >= n {
                    return Err(invalid(format!(
                        "saturated level of size {first} is empty or fills N = {n}"
                    )));
                }
                (
                    LocalSparsities::new(vec![first, s - first]),
                    LevelStructure::new(vec![first, n])?,
                )
            }
        };
        local.validate(&levels)?;
        Ok((local, levels))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseOptions {
    pub n: usize,
    /// Success means relative error below this.
    pub threshold: f64,
    pub solver: SolverConfig,
    pub bp: BpConfig,
    /// Standard deviation of additive real Gaussian noise per measurement.
    pub noise: f64,
}

impl Default for PhaseOptions {
    fn default() -> Self {
        PhaseOptions {
            n: 128,
            threshold: 1e-2,
            solver: SolverConfig::default(),
            bp: BpConfig::default(),
            noise: 0.0,
        }
    }
}

/// Everything that defines a phase-transition experiment except its grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialSpec {
    pub decoder: Decoder,
    /// Model the signals are drawn from.
    pub family: ModelFamily,
    /// Model handed to the decoder; defaults to `family`.
    pub decoder_family: Option<ModelFamily>,
    pub options: PhaseOptions,
}

impl TrialSpec {
    pub fn new(decoder: Decoder, family: ModelFamily) -> Self {
        TrialSpec {
            decoder,
            family,
            decoder_family: None,
            options: PhaseOptions::default(),
        }
    }

    fn decoder_model(&self, s: usize) -> Result<SparsityModel> {
        let family = self.decoder_family.as_ref().unwrap_or(&self.family);
        let (local, levels) = family.model(self.options.n, s)?;
        Ok(SparsityModel::Levels(local, levels))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialOutcome {
    pub relative_error: f64,
    pub success: bool,
    pub iterations: usize,
    pub seed: u64,
}

/// Seed of trial `trial` in cell `(m, s)`; independent of the decoder.
pub fn trial_seed(master: u64, m: usize, s: usize, trial: usize) -> u64 {
    derive_seed(master, &[m as u64, s as u64, trial as u64])
}

/// One trial: Gaussian `A`, model-sparse `x`, `y = A x (+ e)`, decode.
pub fn run_trial(spec: &TrialSpec, s: usize, m: usize, seed: u64) -> Result<TrialOutcome> {
    let opts = &spec.options;
    if m == 0 || m > opts.n {
        return Err(invalid(format!("m = {m} outside 1..={}", opts.n)));
    }
    let (local, levels) = spec.family.model(opts.n, s)?;
    let model = spec.decoder_model(s)?;
    let mut rng = seeded(seed);
    let a = gaussian_operator(m, opts.n, &mut rng);
    let x = random_sparse_in_levels(&local, &levels, &mut rng)?;
    let mut y = a.apply(&x);
    if opts.noise > 0.0 {
        for v in &mut y {
            let e: f64 = rng.sample(StandardNormal);
            *v += C64::new(opts.noise * e, 0.0);
        }
    }
    let out = decode(spec.decoder, &a, &y, &model, &opts.solver, &opts.bp)?;
    let relative_error = dist2(&x, &out.estimate) / norm2(&x).max(f64::MIN_POSITIVE);
    Ok(TrialOutcome {
        relative_error,
        success: relative_error < opts.threshold,
        iterations: out.iterations,
        seed,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseCell {
    pub s: usize,
    pub local_s: Vec<usize>,
    pub levels: Vec<usize>,
    pub m: usize,
    pub outcomes: Vec<TrialOutcome>,
}

impl PhaseCell {
    pub fn trials(&self) -> usize {
        self.outcomes.len()
    }

    pub fn successes(&self) -> usize {
        self.outcomes.iter().filter(|o| o.success).count()
    }

    pub fn probability(&self) -> f64 {
        self.successes() as f64 / self.trials() as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseTransitionResult {
    pub decoder: Decoder,
    pub n: usize,
    pub master_seed: u64,
    /// Row-major over `(s, m)`.
    pub cells: Vec<PhaseCell>,
}

impl PhaseTransitionResult {
    pub fn cell(&self, s: usize, m: usize) -> Option<&PhaseCell> {
        self.cells.iter().find(|c| c.s == s && c.m == m)
    }

    /// Smallest `m` (in grid order) whose cell at `s` succeeded in every trial.
    pub fn first_certain_m(&self, s: usize) -> Option<usize> {
        self.cells
            .iter()
            .filter(|c| c.s == s && c.successes() == c.trials())
            .map(|c| c.m)
            .min()
    }
}

/// Success probability versus `m` at a fixed total sparsity.
pub fn phase_transition_line(
    spec: &TrialSpec,
    s: usize,
    m_grid: &[usize],
    trials: usize,
    master: u64,
) -> Result<PhaseTransitionResult> {
    phase_transition_grid(spec, &[s], m_grid, trials, master)
}

/// Success probability on the full `(s, m)` grid.
pub fn phase_transition_grid(
    spec: &TrialSpec,
    s_grid: &[usize],
    m_grid: &[usize],
    trials: usize,
    master: u64,
) -> Result<PhaseTransitionResult> {
    if trials == 0 {
        return Err(invalid("at least one trial per cell is required"));
    }
    if !(spec.options.noise >= 0.0 && spec.options.noise.is_finite()) {
        return Err(invalid("noise level must be finite and non-negative"));
    }
    let n = spec.options.n;
    let mut cells = Vec::with_capacity(s_grid.len() * m_grid.len());
    for &s in s_grid {
        let (local, levels) = spec.family.model(n, s)?;
        spec.decoder_model(s)?;
        for &m in m_grid {
            if m == 0 || m > n {
                return Err(invalid(format!("m = {m} outside 1..={n}")));
            }
            cells.push(PhaseCell {
                s,
                local_s: local.counts().to_vec(),
                levels: levels.bounds().to_vec(),
                m,
                outcomes: Vec::new(),
            });
        }
    }
    let tasks: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..trials).map(move |t| (c, t)))
        .collect();
    let outcomes: Vec<TrialOutcome> = tasks
        .par_iter()
        .map(|&(c, t)| {
            let cell = &cells[c];
            let seed = trial_seed(master, cell.m, cell.s, t);
            run_trial(spec, cell.s, cell.m, seed).map_err(|e| {
                e.in_cell(format!(
                    "{} trial {t} at s = {}, m = {} (seed {seed})",
                    spec.decoder, cell.s, cell.m
                ))
            })
        })
        .collect::<Result<_>>()?;
    for (cell, chunk) in cells.iter_mut().zip(outcomes.chunks(trials)) {
        cell.outcomes = chunk.to_vec();
    }
    Ok(PhaseTransitionResult {
        decoder: spec.decoder,
        n,
        master_seed: master,
        cells,
    })
}
