//! `csl phase`: one CSV row per (pattern, decoder, s, m) cell.

use std::path::PathBuf;
use std::time::Instant;

use csl_core::experiments::{phase_transition_grid, PhaseOptions, TrialSpec};
use log::info;
use serde_json::json;

use crate::config::{load, PhaseConfig};
use crate::output::{csv_bytes, join, OutputSet};
use crate::{with_jobs, CliError, RunArgs};

pub const HEADER: [&str; 9] = [
    "solver",
    "N",
    "levels",
    "local_s",
    "m",
    "trials",
    "successes",
    "probability",
    "seed",
];

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseRow {
    pub solver: String,
    pub n: usize,
    pub levels: Vec<usize>,
    pub local_s: Vec<usize>,
    pub s: usize,
    pub m: usize,
    pub trials: usize,
    pub successes: usize,
    pub seed: u64,
}

impl PhaseRow {
    pub fn probability(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }

    fn record(&self) -> [String; 9] {
        [
            self.solver.clone(),
            self.n.to_string(),
            join(&self.levels),
            join(&self.local_s),
            self.m.to_string(),
            self.trials.to_string(),
            self.successes.to_string(),
            self.probability().to_string(),
            self.seed.to_string(),
        ]
    }
}

pub struct PhaseRun {
    pub rows: Vec<PhaseRow>,
    pub files: Vec<PathBuf>,
}

/// Applies command-line overrides and validates.
pub fn effective_config(args: &RunArgs) -> Result<PhaseConfig, CliError> {
    let mut cfg: PhaseConfig = load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seeds.master = seed;
    }
    if let Some(noise) = args.noise {
        cfg.model.noise = noise;
    }
    cfg.validate().map_err(CliError::Config)?;
    Ok(cfg)
}

/// Rows ordered by pattern, then decoder, then `s`, then `m`.
pub fn run_phase(cfg: &PhaseConfig) -> Result<Vec<PhaseRow>, CliError> {
    let n = cfg.model.n;
    let s_grid = cfg.grid.s.values();
    let m_grid = cfg.grid.m.values();
    let options = PhaseOptions {
        n,
        threshold: cfg.model.success_threshold,
        solver: cfg.solver.solver_config(1e-4),
        bp: cfg.solver.bp_config(),
        noise: cfg.model.noise,
    };
    let mut rows = Vec::new();
    for pattern in &cfg.model.patterns {
        let family = pattern.family()?;
        for entry in &cfg.solver.decoders {
            let spec = TrialSpec {
                decoder: entry.decoder(),
                family: family.clone(),
                decoder_family: entry.model().map(|p| p.family()).transpose()?,
                options,
            };
            info!("phase: {} on {:?}", entry.label(), pattern);
            let result =
                phase_transition_grid(&spec, &s_grid, &m_grid, cfg.seeds.trials, cfg.seeds.master)?;
            rows.extend(result.cells.iter().map(|c| PhaseRow {
                solver: entry.label(),
                n,
                levels: c.levels.clone(),
                local_s: c.local_s.clone(),
                s: c.s,
                m: c.m,
                trials: c.trials(),
                successes: c.successes(),
                seed: cfg.seeds.master,
            }));
        }
    }
    Ok(rows)
}

pub fn phase_csv(rows: &[PhaseRow]) -> Result<Vec<u8>, CliError> {
    csv_bytes(&HEADER, rows.iter().map(PhaseRow::record))
}

/// One gnuplot block per curve, separated by two blank lines.
pub fn phase_dat(rows: &[PhaseRow]) -> String {
    let mut out = String::new();
    let mut prev: Option<(&str, &[usize], &[usize])> = None;
    for r in rows {
        let key = (r.solver.as_str(), r.levels.as_slice(), r.local_s.as_slice());
        if prev != Some(key) {
            if prev.is_some() {
                out.push_str("\n\n");
            }
            out.push_str(&format!(
                "# solver={} levels={} local_s={}\n# m probability\n",
                r.solver,
                join(&r.levels),
                join(&r.local_s)
            ));
            prev = Some(key);
        }
        out.push_str(&format!("{} {}\n", r.m, r.probability()));
    }
    out
}

pub fn cmd_phase(args: &RunArgs) -> Result<PhaseRun, CliError> {
    let cfg = effective_config(args)?;
    let start = Instant::now();
    let rows = with_jobs(args.jobs, || run_phase(&cfg))??;
    let wall = start.elapsed().as_secs_f64();
    let tag = &cfg.output.tag;
    let mut out = OutputSet::new(&args.out)?;
    out.stage(&format!("phase_{tag}.csv"), &phase_csv(&rows)?)?;
    if cfg.output.dat {
        out.stage(&format!("phase_{tag}.dat"), phase_dat(&rows).as_bytes())?;
    }
    let meta = json!({
        "command": "phase",
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "jobs": args.jobs,
        "wall_time_seconds": wall,
        "rows": rows.len(),
        "note": format!(
            "desk-scale run: N = {}, {} trials per cell",
            cfg.model.n, cfg.seeds.trials
        ),
    });
    let meta = serde_json::to_string_pretty(&meta).map_err(|e| CliError::Runtime(e.to_string()))?;
    out.stage(&format!("phase_{tag}.meta.json"), meta.as_bytes())?;
    let files = out.commit()?;
    info!("phase: {} rows in {wall:.1} s", rows.len());
    Ok(PhaseRun { rows, files })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(solver: &str, m: usize, successes: usize) -> PhaseRow {
        PhaseRow {
            solver: solver.into(),
            n: 8,
            levels: vec![4, 8],
            local_s: vec![2, 0],
            s: 2,
            m,
            trials: 4,
            successes,
            seed: 3,
        }
    }

    #[test]
    fn csv_layout() {
        let text = String::from_utf8(phase_csv(&[row("cosamp", 5, 3)]).unwrap()).unwrap();
        assert_eq!(
            text,
            "solver,N,levels,local_s,m,trials,successes,probability,seed\n\
             cosamp,8,4;8,2;0,5,4,3,0.75,3\n"
        );
    }

    #[test]
    fn dat_blocks_per_curve() {
        let dat = phase_dat(&[row("a", 5, 1), row("a", 6, 4), row("b", 5, 0)]);
        assert_eq!(dat.matches("# solver=").count(), 2);
        assert!(dat.contains("5 0.25\n6 1\n\n\n# solver=b"));
    }
}
