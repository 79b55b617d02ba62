//! IHT, CoSaMP and their sparsity-in-levels variants IHTL and CoSaMPL.
//!
//! All four start from `x^(0) = 0` and stop once the relative increment
//! `||x^(n+1) - x^(n)||_2 / max(||x^(n)||_2, 1e-14)` drops below the configured
//! tolerance or the iteration budget is spent. Step sizes and rescalings are
//! the caller's business: the solvers run the plain unit-step iterations.

use std::collections::HashMap;
use std::io::{self, Write};

use crate::error::{check_len, invalid, Result};
use crate::model::{dist2, norm2, support_of, LevelStructure, LocalSparsities, Signal, C64};
use crate::operators::{restricted_least_squares_vec, LinearOperator};
use crate::thresholding::{
    hard_threshold_levels_vec, hard_threshold_vec, largest_indices, largest_indices_levels,
};

const INCREMENT_FLOOR: f64 = 1e-14;
const LSQ_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum History {
    #[default]
    None,
    /// Residual and increment norms per iteration.
    Norms,
    /// Norms plus every iterate.
    Iterates,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub max_iterations: usize,
    pub increment_tolerance: f64,
    pub history: History,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iterations: 1000,
            increment_tolerance: 1e-4,
            history: History::None,
        }
    }
}

impl SolverConfig {
    pub fn with_tolerance(increment_tolerance: f64) -> Self {
        SolverConfig {
            increment_tolerance,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(invalid("max_iterations must be at least 1"));
        }
        if self.increment_tolerance.is_nan() || self.increment_tolerance <= 0.0 {
            return Err(invalid("increment tolerance must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIterations,
    /// The iterate stopped being finite; the last finite iterate is returned.
    Diverged,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    /// `||y - A x^(n)||_2` at the start of the iteration.
    pub residual_norm: f64,
    /// `||x^(n+1) - x^(n)||_2`.
    pub increment_norm: f64,
    pub iterate: Option<Vec<C64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverResult {
    pub estimate: Signal,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub history: Vec<IterationRecord>,
}

impl SolverResult {
    /// `||x - x^(n)||_2` for `n = 0, 1, ...`, when iterates were recorded.
    pub fn error_history(&self, truth: &[C64]) -> Option<Vec<f64>> {
        let mut out = vec![norm2(truth)];
        for rec in &self.history {
            out.push(dist2(truth, rec.iterate.as_ref()?));
        }
        Some(out)
    }

    /// CSV `iteration,residual_norm,increment_norm[,error_vs_truth]`.
    pub fn write_history_csv<W: Write>(&self, mut w: W, truth: Option<&[C64]>) -> io::Result<()> {
        let errors = truth.and_then(|t| self.error_history(t));
        if errors.is_some() {
            writeln!(w, "iteration,residual_norm,increment_norm,error_vs_truth")?;
        } else {
            writeln!(w, "iteration,residual_norm,increment_norm")?;
        }
        for (n, rec) in self.history.iter().enumerate() {
            write!(w, "{},{:e},{:e}", n + 1, rec.residual_norm, rec.increment_norm)?;
            match &errors {
                Some(e) => writeln!(w, ",{:e}", e[n + 1])?,
                None => writeln!(w)?,
            }
        }
        Ok(())
    }
}

/// The sparsity model a solver projects onto.
#[derive(Clone, Debug, PartialEq)]
enum Projection<'a> {
    Classical(usize),
    Levels(&'a LocalSparsities, &'a LevelStructure),
}

impl Projection<'_> {
    fn threshold(&self, x: &[C64]) -> Vec<C64> {
        match self {
            Projection::Classical(s) => hard_threshold_vec(x, *s),
            Projection::Levels(s, m) => hard_threshold_levels_vec(x, s, m),
        }
        .expect("model validated before iterating")
    }

    /// `L_{2s}` or `L_{2s,M}`, clipped to the available indices.
    fn doubled_selection(&self, x: &[C64]) -> crate::model::SupportSet {
        match self {
            Projection::Classical(s) => largest_indices(x, (2 * s).min(x.len())),
            Projection::Levels(s, m) => largest_indices_levels(x, &s.doubled_clipped(m), m),
        }
        .expect("model validated before iterating")
    }
}

fn check_inputs<A: LinearOperator + ?Sized>(
    op: &A,
    y: &[C64],
    projection: &Projection,
    cfg: &SolverConfig,
) -> Result<()> {
    cfg.validate()?;
    check_len("solver measurements", op.rows(), y.len())?;
    match projection {
        Projection::Classical(s) => {
            if *s == 0 || *s > op.cols() {
                return Err(invalid(format!(
                    "sparsity {s} outside 1..={}",
                    op.cols()
                )));
            }
        }
        Projection::Levels(s, m) => {
            check_len("solver sparsity levels", op.cols(), m.dim())?;
            s.validate(m)?;
        }
    }
    Ok(())
}

fn is_finite(v: &[C64]) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn residual<A: LinearOperator + ?Sized>(op: &A, y: &[C64], x: &[C64]) -> Vec<C64> {
    let ax = op.apply(x);
    y.iter().zip(ax).map(|(p, q)| p - q).collect()
}

fn bits(x: &[C64]) -> Vec<u64> {
    x.iter().flat_map(|z| [z.re.to_bits(), z.im.to_bits()]).collect()
}

/// Shared outer loop: `step` maps `(x^(n), y - A x^(n))` to `x^(n+1)`.
///
/// `step` is a pure function of `x^(n)`, so once an iterate repeats bit for bit
/// the sequence is periodic and the iterate at the budget is known without
/// running the remaining iterations. This only kicks in without history.
fn iterate<A, F>(op: &A, y: &[C64], cfg: &SolverConfig, mut step: F) -> SolverResult
where
    A: LinearOperator + ?Sized,
    F: FnMut(&[C64], &[C64]) -> Vec<C64>,
{
    let mut x = vec![C64::new(0.0, 0.0); op.cols()];
    let mut history = Vec::new();
    let detect_cycles = cfg.history == History::None;
    let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut trail: Vec<Vec<C64>> = Vec::new();
    if detect_cycles {
        seen.insert(bits(&x), 0);
        trail.push(x.clone());
    }
    let mut iterations = 0;
    let stop_reason = loop {
        let r = residual(op, y, &x);
        let next = step(&x, &r);
        if !is_finite(&next) {
            break StopReason::Diverged;
        }
        let increment = dist2(&next, &x);
        let relative = increment / norm2(&x).max(INCREMENT_FLOOR);
        if cfg.history != History::None {
            history.push(IterationRecord {
                residual_norm: norm2(&r),
                increment_norm: increment,
                iterate: (cfg.history == History::Iterates).then(|| next.clone()),
            });
        }
        x = next;
        iterations += 1;
        if relative < cfg.increment_tolerance {
            break StopReason::Converged;
        }
        if iterations >= cfg.max_iterations {
            break StopReason::MaxIterations;
        }
        if detect_cycles {
            // every increment on the cycle has been tested, none can stop it
            if let Some(&start) = seen.get(&bits(&x)) {
                let period = iterations - start;
                x = trail[start + (cfg.max_iterations - start) % period].clone();
                iterations = cfg.max_iterations;
                break StopReason::MaxIterations;
            }
            seen.insert(bits(&x), iterations);
            trail.push(x.clone());
        }
    };
    SolverResult {
        estimate: Signal::from_raw(x),
        iterations,
        stop_reason,
        history,
    }
}

fn run_iht<A: LinearOperator + ?Sized>(
    op: &A,
    y: &[C64],
    projection: Projection,
    cfg: &SolverConfig,
) -> Result<SolverResult> {
    check_inputs(op, y, &projection, cfg)?;
    Ok(iterate(op, y, cfg, |x, r| {
        let g = op.adjoint(r);
        let proxy: Vec<C64> = x.iter().zip(&g).map(|(a, b)| a + b).collect();
        projection.threshold(&proxy)
    }))
}

fn run_cosamp<A: LinearOperator + ?Sized>(
    op: &A,
    y: &[C64],
    projection: Projection,
    cfg: &SolverConfig,
) -> Result<SolverResult> {
    check_inputs(op, y, &projection, cfg)?;
    Ok(iterate(op, y, cfg, |x, r| {
        let g = op.adjoint(r);
        let candidates = support_of(x).union(&projection.doubled_selection(&g));
        let u = restricted_least_squares_vec(op, y, &candidates, LSQ_TOLERANCE);
        projection.threshold(&u)
    }))
}

/// Iterative hard thresholding, `x <- H_s(x + A*(y - A x))`.
pub fn iht<A: LinearOperator + ?Sized>(
    op: &A,
    y: &[C64],
    s: usize,
    cfg: &SolverConfig,
) -> Result<SolverResult> {
    run_iht(op, y, Projection::Classical(s), cfg)
}

/// IHT in levels, `x <- H_{s,M}(x + A*(y - A x))`.
pub fn ihtl<A: LinearOperator + ?Sized>(
    op: &A,
    y: &[C64],
    s: &LocalSparsities,
    levels: &LevelStructure,
    cfg: &SolverConfig,
) -> Result<SolverResult> {
    run_iht(op, y, Projection::Levels(s, levels), cfg)
}

/// CoSaMP: merge `supp(x)` with the `2s` largest residual correlations, solve
/// least squares on the merged support, keep the `s` largest.
pub fn cosamp<A: LinearOperator + ?Sized>(
    op: &A,
    y: &[C64],
    s: usize,
    cfg: &SolverConfig,
) -> Result<SolverResult> {
    run_cosamp(op, y, Projection::Classical(s), cfg)
}

/// CoSaMP in levels. Doubled local sparsities are clipped to the level sizes.
pub fn cosampl<A: LinearOperator + ?Sized>(
    op: &A,
    y: &[C64],
    s: &LocalSparsities,
    levels: &LevelStructure,
    cfg: &SolverConfig,
) -> Result<SolverResult> {
    run_cosamp(op, y, Projection::Levels(s, levels), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{is_sparse_in_levels, random_sparse_in_levels};
    use crate::operators::{gaussian_operator, scale, DenseOperator, Identity};
    use crate::rng::seeded;

    fn real(v: &[f64]) -> Vec<C64> {
        v.iter().map(|&x| C64::new(x, 0.0)).collect()
    }

    fn one_step() -> SolverConfig {
        SolverConfig {
            max_iterations: 1,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn identity_recovers_in_one_iteration() {
        let y = real(&[0., 2., 0., 0., -1., 0.]);
        let m = LevelStructure::new(vec![3, 6]).unwrap();
        let s = LocalSparsities::new(vec![1, 1]);
        let op = Identity(6);
        for r in [
            iht(&op, &y, 2, &one_step()).unwrap(),
            cosamp(&op, &y, 2, &one_step()).unwrap(),
            ihtl(&op, &y, &s, &m, &one_step()).unwrap(),
            cosampl(&op, &y, &s, &m, &one_step()).unwrap(),
        ] {
            assert_eq!(r.estimate.as_slice(), &y[..]);
            assert_eq!(r.iterations, 1);
        }
        // one more iteration sees a zero increment
        let r = iht(&op, &y, 2, &SolverConfig::default()).unwrap();
        assert_eq!(r.stop_reason, StopReason::Converged);
        assert_eq!(r.iterations, 2);
    }

    #[test]
    fn zero_measurements_converge_immediately() {
        let mut rng = seeded(1);
        let a = gaussian_operator(8, 16, &mut rng);
        let y = vec![C64::new(0.0, 0.0); 8];
        let cfg = SolverConfig::default();
        for r in [iht(&a, &y, 3, &cfg).unwrap(), cosamp(&a, &y, 3, &cfg).unwrap()] {
            assert!(r.estimate.iter().all(|z| z.norm() == 0.0));
            assert_eq!(r.iterations, 1);
            assert_eq!(r.stop_reason, StopReason::Converged);
        }
    }

    #[test]
    fn input_validation() {
        let a = Identity(4);
        let y = real(&[1., 0., 0., 0.]);
        let cfg = SolverConfig::default();
        assert!(iht(&a, &y[..3], 1, &cfg).is_err());
        assert!(iht(&a, &y, 0, &cfg).is_err());
        assert!(cosamp(&a, &y, 5, &cfg).is_err());
        let m = LevelStructure::new(vec![2, 5]).unwrap();
        assert!(ihtl(&a, &y, &LocalSparsities::new(vec![1, 1]), &m, &cfg).is_err());
        let m = LevelStructure::new(vec![2, 4]).unwrap();
        assert!(cosampl(&a, &y, &LocalSparsities::new(vec![3, 1]), &m, &cfg).is_err());
        let bad = SolverConfig {
            max_iterations: 0,
            ..cfg
        };
        assert!(iht(&a, &y, 1, &bad).is_err());
        assert!(iht(&a, &y, 1, &SolverConfig::with_tolerance(0.0)).is_err());
    }

    #[test]
    fn single_level_variants_reproduce_classical_iterates() {
        let cfg = SolverConfig {
            history: History::Iterates,
            max_iterations: 50,
            increment_tolerance: 1e-12,
        };
        for seed in 0..5 {
            let mut rng = seeded(seed);
            let a = gaussian_operator(24, 32, &mut rng);
            let levels = LevelStructure::single(32).unwrap();
            let s = LocalSparsities::new(vec![4]);
            let x = random_sparse_in_levels(&s, &levels, &mut rng).unwrap();
            let y = a.apply(&x);
            let sa = scale(&a, C64::new((24.0f64 / 32.0).sqrt(), 0.0)).unwrap();
            let sy: Vec<C64> = y.iter().map(|z| z * (24.0f64 / 32.0).sqrt()).collect();
            assert_eq!(iht(&sa, &sy, 4, &cfg).unwrap(), ihtl(&sa, &sy, &s, &levels, &cfg).unwrap());
            assert_eq!(cosamp(&a, &y, 4, &cfg).unwrap(), cosampl(&a, &y, &s, &levels, &cfg).unwrap());
        }
    }

    #[test]
    fn estimates_satisfy_their_models() {
        let mut rng = seeded(4);
        let a = gaussian_operator(20, 40, &mut rng);
        let levels = LevelStructure::new(vec![10, 25, 40]).unwrap();
        let s = LocalSparsities::new(vec![3, 1, 2]);
        let y: Vec<C64> = crate::operators::testing::random_vec(&mut rng, 20);
        let cfg = SolverConfig::default();
        for r in [ihtl(&a, &y, &s, &levels, &cfg).unwrap(), cosampl(&a, &y, &s, &levels, &cfg).unwrap()] {
            assert!(is_sparse_in_levels(&r.estimate, &s, &levels).unwrap());
        }
        for r in [iht(&a, &y, 5, &cfg).unwrap(), cosamp(&a, &y, 5, &cfg).unwrap()] {
            assert!(r.estimate.support().len() <= 5);
        }
    }

    #[test]
    fn noiseless_fixed_point() {
        let mut rng = seeded(5);
        let a = gaussian_operator(30, 40, &mut rng);
        let levels = LevelStructure::new(vec![20, 40]).unwrap();
        let s = LocalSparsities::new(vec![3, 2]);
        let x = random_sparse_in_levels(&s, &levels, &mut rng).unwrap();
        let y = a.apply(&x);
        // start the iteration at x itself by feeding the exact step directly
        let r = residual(&a, &y, &x);
        let g = a.adjoint(&r);
        let proxy: Vec<C64> = x.iter().zip(&g).map(|(p, q)| p + q).collect();
        assert!(dist2(&Projection::Classical(5).threshold(&proxy), &x) < 1e-12);
        assert!(dist2(&Projection::Levels(&s, &levels).threshold(&proxy), &x) < 1e-12);
        for proj in [Projection::Classical(5), Projection::Levels(&s, &levels)] {
            let cand = support_of(&x).union(&proj.doubled_selection(&g));
            let u = restricted_least_squares_vec(&a, &y, &cand, LSQ_TOLERANCE);
            assert!(dist2(&proj.threshold(&u), &x) < 1e-10);
        }
    }

    #[test]
    fn deterministic_results() {
        let a = gaussian_operator(12, 30, &mut seeded(6));
        let y = crate::operators::testing::random_vec(&mut seeded(7), 12);
        let cfg = SolverConfig::default();
        assert_eq!(cosamp(&a, &y, 3, &cfg).unwrap(), cosamp(&a, &y, 3, &cfg).unwrap());
        assert_eq!(iht(&a, &y, 3, &cfg).unwrap(), iht(&a, &y, 3, &cfg).unwrap());
    }

    #[test]
    fn divergence_is_reported() {
        // unit step on a matrix with norm 10 blows up
        let a = DenseOperator::new(nalgebra::DMatrix::from_diagonal_element(4, 4, C64::new(10.0, 0.0)));
        let y = real(&[1., 1., 1., 1.]);
        let cfg = SolverConfig {
            max_iterations: 100_000,
            ..SolverConfig::default()
        };
        let r = iht(&a, &y, 4, &cfg).unwrap();
        assert_eq!(r.stop_reason, StopReason::Diverged);
        assert!(r.estimate.iter().all(|z| z.re.is_finite()));
    }

    #[test]
    fn cycle_shortcut_matches_full_run() {
        let mut hit_budget = 0;
        for seed in 0..30 {
            let mut rng = seeded(100 + seed);
            let a = gaussian_operator(10, 32, &mut rng);
            let levels = LevelStructure::new(vec![16, 32]).unwrap();
            let s = LocalSparsities::new(vec![3, 3]);
            let x = random_sparse_in_levels(&s, &levels, &mut rng).unwrap();
            let y = a.apply(&x);
            let fast = SolverConfig {
                max_iterations: 997,
                ..SolverConfig::default()
            };
            let full = SolverConfig {
                history: History::Norms,
                ..fast
            };
            for (p, q) in [
                (cosamp(&a, &y, 6, &fast).unwrap(), cosamp(&a, &y, 6, &full).unwrap()),
                (cosampl(&a, &y, &s, &levels, &fast).unwrap(), cosampl(&a, &y, &s, &levels, &full).unwrap()),
            ] {
                assert_eq!(p.estimate, q.estimate);
                assert_eq!((p.iterations, p.stop_reason), (q.iterations, q.stop_reason));
                hit_budget += (p.stop_reason == StopReason::MaxIterations) as usize;
            }
        }
        assert!(hit_budget > 0);
    }

    #[test]
    fn history_csv() {
        let y = real(&[0., 2., 0.]);
        let cfg = SolverConfig {
            history: History::Iterates,
            ..SolverConfig::default()
        };
        let r = iht(&Identity(3), &y, 1, &cfg).unwrap();
        let mut buf = Vec::new();
        r.write_history_csv(&mut buf, Some(&y)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "iteration,residual_norm,increment_norm,error_vs_truth");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("1,2e0,2e0,0e0"));
    }
}
