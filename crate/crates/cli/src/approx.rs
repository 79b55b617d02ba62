//! `csl approx`: one CSV row per (encoder, C, decoder, m) cell.

use std::path::PathBuf;
use std::time::Instant;

use csl_core::experiments::{function_approx_sweeps, ApproxCell, ApproxOptions, Decoder};
use log::info;
use serde_json::json;

use crate::config::{load, ApproxConfig};
use crate::output::{csv_bytes, OutputSet};
use crate::{with_jobs, CliError, RunArgs};

pub const HEADER: [&str; 9] = [
    "encoder",
    "decoder",
    "C",
    "N",
    "m",
    "runs",
    "mean_rel_l2",
    "median_rel_l2",
    "seed",
];

/// Size of the full-scale protocol that the default configs shrink.
const FULL_SCALE: (usize, usize) = (1 << 13, 25);

pub struct ApproxRun {
    pub cells: Vec<ApproxCell>,
    pub seed: u64,
    pub files: Vec<PathBuf>,
}

pub fn effective_config(args: &RunArgs) -> Result<ApproxConfig, CliError> {
    let mut cfg: ApproxConfig = load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seeds.master = seed;
    }
    if let Some(noise) = args.noise {
        cfg.model.noise = noise;
    }
    cfg.validate().map_err(CliError::Config)?;
    Ok(cfg)
}

/// Cells ordered by encoder, then `C`, then decoder, then `m`.
pub fn run_approx(cfg: &ApproxConfig) -> Result<Vec<ApproxCell>, CliError> {
    let opts = ApproxOptions {
        n: cfg.model.n,
        oversample: cfg.model.oversample,
        solver: cfg.solver.solver_config(1e-8),
        bp: cfg.solver.bp_config(),
        noise: cfg.model.noise,
    };
    let decoders: Vec<Decoder> = cfg.solver.decoders.iter().map(|d| d.decoder()).collect();
    let m_list = cfg.grid.m.values();
    let mut cells = Vec::new();
    for enc in &cfg.model.encoders {
        info!("approx: {} encoder", enc.0);
        let sweep = function_approx_sweeps(
            enc.0,
            &decoders,
            &m_list,
            &cfg.grid.c,
            cfg.seeds.runs,
            cfg.seeds.master,
            &opts,
        )?;
        cells.extend(sweep.cells);
    }
    Ok(cells)
}

pub fn approx_csv(cells: &[ApproxCell], seed: u64) -> Result<Vec<u8>, CliError> {
    csv_bytes(
        &HEADER,
        cells.iter().map(|c| {
            [
                c.encoder.name().to_string(),
                c.decoder.name().to_string(),
                c.c.to_string(),
                c.n.to_string(),
                c.m.to_string(),
                c.runs().to_string(),
                c.mean().to_string(),
                c.median().to_string(),
                seed.to_string(),
            ]
        }),
    )
}

pub fn approx_dat(cells: &[ApproxCell]) -> String {
    let mut out = String::new();
    let mut prev = None;
    for c in cells {
        let key = (c.encoder, c.decoder, c.c.to_bits());
        if prev != Some(key) {
            if prev.is_some() {
                out.push_str("\n\n");
            }
            out.push_str(&format!(
                "# encoder={} decoder={} C={}\n# m mean_rel_l2 median_rel_l2\n",
                c.encoder, c.decoder, c.c
            ));
            prev = Some(key);
        }
        out.push_str(&format!("{} {} {}\n", c.m, c.mean(), c.median()));
    }
    out
}

pub fn cmd_approx(args: &RunArgs) -> Result<ApproxRun, CliError> {
    let cfg = effective_config(args)?;
    let start = Instant::now();
    let cells = with_jobs(args.jobs, || run_approx(&cfg))??;
    let wall = start.elapsed().as_secs_f64();
    let tag = &cfg.output.tag;
    let seed = cfg.seeds.master;
    let mut out = OutputSet::new(&args.out)?;
    out.stage(&format!("approx_{tag}.csv"), &approx_csv(&cells, seed)?)?;
    if cfg.output.dat {
        out.stage(&format!("approx_{tag}.dat"), approx_dat(&cells).as_bytes())?;
    }
    let meta = json!({
        "command": "approx",
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "jobs": args.jobs,
        "wall_time_seconds": wall,
        "rows": cells.len(),
        "note": format!(
            "desk-scale run: N = {}, {} runs per cell (full scale: N = {}, {} runs)",
            cfg.model.n, cfg.seeds.runs, FULL_SCALE.0, FULL_SCALE.1
        ),
    });
    let meta = serde_json::to_string_pretty(&meta).map_err(|e| CliError::Runtime(e.to_string()))?;
    out.stage(&format!("approx_{tag}.meta.json"), meta.as_bytes())?;
    let files = out.commit()?;
    info!("approx: {} rows in {wall:.1} s", cells.len());
    Ok(ApproxRun { cells, seed, files })
}
