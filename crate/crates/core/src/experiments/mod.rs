//! Phase-transition and function-approximation experiment drivers.
//!
//! Every random draw comes from a seed derived from the master seed and the
//! cell coordinates (never the decoder), so decoders compared on the same cell
//! see identical `(A, x, y)` and parallel runs reproduce serial ones exactly.

mod approx;
mod phase;

pub use approx::{
    function_approx_sweep, function_approx_sweeps, ApproxCell, ApproxOptions, ApproxProblem,
    ApproximationSweepResult, Encoder,
};
pub use phase::{
    phase_transition_grid, phase_transition_line, run_trial, trial_seed, ModelFamily, PhaseCell,
    PhaseOptions, PhaseTransitionResult, TrialOutcome, TrialSpec,
};

use std::fmt;
use std::str::FromStr;

use crate::bp::{basis_pursuit_with, BpConfig};
use crate::error::{invalid, Error, Result};
use crate::model::{Signal, SparsityModel, C64};
use crate::operators::{scale, LinearOperator};
use crate::solvers::{cosamp, cosampl, iht, ihtl, SolverConfig, StopReason};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Decoder {
    Iht,
    Ihtl,
    Cosamp,
    Cosampl,
    Bp,
}

impl Decoder {
    pub const ALL: [Decoder; 5] = [
        Decoder::Bp,
        Decoder::Iht,
        Decoder::Cosamp,
        Decoder::Ihtl,
        Decoder::Cosampl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Decoder::Iht => "iht",
            Decoder::Ihtl => "ihtl",
            Decoder::Cosamp => "cosamp",
            Decoder::Cosampl => "cosampl",
            Decoder::Bp => "bp",
        }
    }

    pub fn uses_levels(self) -> bool {
        matches!(self, Decoder::Ihtl | Decoder::Cosampl)
    }

    /// IHT-type decoders run on `sqrt(m/N) A` and `sqrt(m/N) y`.
    pub fn rescales(self) -> bool {
        matches!(self, Decoder::Iht | Decoder::Ihtl)
    }
}

impl fmt::Display for Decoder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Decoder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "iht" => Ok(Decoder::Iht),
            "ihtl" => Ok(Decoder::Ihtl),
            "cosamp" => Ok(Decoder::Cosamp),
            "cosampl" => Ok(Decoder::Cosampl),
            "bp" => Ok(Decoder::Bp),
            other => Err(Error::Config(format!(
                "unknown decoder '{other}' (expected iht, ihtl, cosamp, cosampl or bp)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decoded {
    pub estimate: Signal,
    pub iterations: usize,
    pub converged: bool,
}

/// Runs `decoder` on `(A, y)`. Classical decoders use the total sparsity of
/// `model`; levels decoders use the model itself (one level for `Sparse`).
pub fn decode<A: LinearOperator + ?Sized>(
    decoder: Decoder,
    op: &A,
    y: &[C64],
    model: &SparsityModel,
    solver: &SolverConfig,
    bp: &BpConfig,
) -> Result<Decoded> {
    let from_solver = |r: crate::solvers::SolverResult| Decoded {
        converged: r.stop_reason == StopReason::Converged,
        estimate: r.estimate,
        iterations: r.iterations,
    };
    let n = op.cols();
    if decoder.rescales() {
        let c = (op.rows() as f64 / n as f64).sqrt();
        let scaled = scale(op, C64::new(c, 0.0))?;
        let sy: Vec<C64> = y.iter().map(|v| v * c).collect();
        return Ok(from_solver(match decoder {
            Decoder::Iht => iht(&scaled, &sy, model.total(), solver)?,
            _ => {
                let (s, m) = model.as_levels(n)?;
                ihtl(&scaled, &sy, &s, &m, solver)?
            }
        }));
    }
    match decoder {
        Decoder::Cosamp => Ok(from_solver(cosamp(op, y, model.total(), solver)?)),
        Decoder::Cosampl => {
            let (s, m) = model.as_levels(n)?;
            Ok(from_solver(cosampl(op, y, &s, &m, solver)?))
        }
        Decoder::Bp => {
            let r = basis_pursuit_with(op, y, bp)?;
            Ok(Decoded {
                estimate: r.estimate,
                iterations: r.iterations,
                converged: r.converged,
            })
        }
        Decoder::Iht | Decoder::Ihtl => Err(invalid("unreachable decoder branch")),
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
