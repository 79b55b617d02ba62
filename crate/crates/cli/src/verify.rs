//! `csl verify`: brute-force `delta_s`, `delta_{s,M}` and block coherence.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use csl_core::operators::gaussian_operator;
use csl_core::rng::seeded;
use csl_core::verification::{block_coherence, ric_bruteforce, ricl_bruteforce};
use csl_core::{LevelStructure, LocalSparsities, C64};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::config::load;
use crate::output::{csv_bytes, join, OutputSet};
use crate::{with_jobs, CliError};

pub const HEADER: [&str; 7] = ["quantity", "s", "local_s", "levels", "k", "l", "value"];

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyArgs {
    /// JSON file with any of the options below; flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// CSV matrix, one row per line; entries like `1`, `-0.5`, `1+2i`.
    #[arg(long, conflicts_with = "generator")]
    #[serde(default)]
    pub matrix: Option<PathBuf>,
    /// `identity:N`, `dft:N` or `gaussian:MxN`.
    #[arg(long)]
    #[serde(default)]
    pub generator: Option<String>,
    /// Sparsities for `delta_s`.
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub s: Vec<usize>,
    /// Sparsity level bounds for `delta_{s,M}` and the coherence columns.
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub levels: Vec<usize>,
    /// Local sparsities for `delta_{s,M}`.
    #[arg(long = "local-s", value_delimiter = ',')]
    #[serde(default)]
    pub local_s: Vec<usize>,
    /// Sampling level bounds for the coherence rows.
    #[arg(long = "sampling-levels", value_delimiter = ',')]
    #[serde(default)]
    pub sampling_levels: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(default)]
    pub tag: Option<String>,
    #[arg(long)]
    #[serde(skip)]
    pub jobs: Option<usize>,
}

impl VerifyArgs {
    fn merged(&self) -> Result<VerifyArgs, CliError> {
        let Some(path) = &self.config else {
            return Ok(self.clone());
        };
        let base: VerifyArgs = load(path)?;
        let pick = |a: &Vec<usize>, b: &Vec<usize>| if a.is_empty() { b.clone() } else { a.clone() };
        Ok(VerifyArgs {
            config: None,
            matrix: self.matrix.clone().or(base.matrix),
            generator: self.generator.clone().or(base.generator),
            s: pick(&self.s, &base.s),
            levels: pick(&self.levels, &base.levels),
            local_s: pick(&self.local_s, &base.local_s),
            sampling_levels: pick(&self.sampling_levels, &base.sampling_levels),
            seed: if self.seed != 0 { self.seed } else { base.seed },
            out: self.out.clone(),
            tag: self.tag.clone().or(base.tag),
            jobs: self.jobs,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoherenceTable {
    pub sampling_levels: Vec<usize>,
    pub sparsity_levels: Vec<usize>,
    pub values: DMatrix<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub source: String,
    pub shape: (usize, usize),
    pub ric: Vec<(usize, f64)>,
    pub ricl: Option<(Vec<usize>, Vec<usize>, f64)>,
    pub coherence: Option<CoherenceTable>,
    pub notes: Vec<String>,
    pub files: Vec<PathBuf>,
}

impl VerifyReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let (m, n) = self.shape;
        let _ = writeln!(out, "matrix: {} ({m} x {n})", self.source);
        for (s, d) in &self.ric {
            let _ = writeln!(out, "delta_s   s = {s}: {d}");
        }
        if let Some((local, levels, d)) = &self.ricl {
            let _ = writeln!(
                out,
                "delta_s,M s = ({}), M = ({}): {d}",
                local.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", "),
                levels.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", "),
            );
        }
        if let Some(t) = &self.coherence {
            let _ = writeln!(
                out,
                "coherence mu_kl (rows: sampling levels {}, columns: sparsity levels {}):",
                join(&t.sampling_levels),
                join(&t.sparsity_levels)
            );
            for k in 0..t.values.nrows() {
                let row: Vec<String> = (0..t.values.ncols())
                    .map(|l| format!("{:.6e}", t.values[(k, l)]))
                    .collect();
                let _ = writeln!(out, "  {}", row.join("  "));
            }
        }
        for note in &self.notes {
            let _ = writeln!(out, "note: {note}");
        }
        for f in &self.files {
            let _ = writeln!(out, "wrote {}", f.display());
        }
        out
    }

    pub fn csv(&self) -> Result<Vec<u8>, CliError> {
        let mut rows: Vec<[String; 7]> = Vec::new();
        let e = String::new;
        for (s, d) in &self.ric {
            rows.push(["delta_s".into(), s.to_string(), e(), e(), e(), e(), d.to_string()]);
        }
        if let Some((local, levels, d)) = &self.ricl {
            let total: usize = local.iter().sum();
            rows.push([
                "delta_sM".into(),
                total.to_string(),
                join(local),
                join(levels),
                e(),
                e(),
                d.to_string(),
            ]);
        }
        if let Some(t) = &self.coherence {
            for k in 0..t.values.nrows() {
                for l in 0..t.values.ncols() {
                    rows.push([
                        "mu".into(),
                        e(),
                        e(),
                        e(),
                        k.to_string(),
                        l.to_string(),
                        t.values[(k, l)].to_string(),
                    ]);
                }
            }
        }
        csv_bytes(&HEADER, rows)
    }
}

fn parse_dims(spec: &str, what: &str) -> Result<usize, CliError> {
    spec.trim()
        .parse::<usize>()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("--generator: bad {what} '{spec}'")))
}

/// Builds a test matrix from `identity:N`, `dft:N` or `gaussian:MxN`.
pub fn generate(spec: &str, seed: u64) -> Result<DMatrix<C64>, CliError> {
    let (kind, dims) = spec
        .split_once(':')
        .ok_or_else(|| CliError::Config(format!("--generator: '{spec}' lacks ':<size>'")))?;
    match kind {
        "identity" => {
            let n = parse_dims(dims, "size")?;
            Ok(DMatrix::identity(n, n))
        }
        "dft" => {
            let n = parse_dims(dims, "size")?;
            let scale = 1.0 / (n as f64).sqrt();
            Ok(DMatrix::from_fn(n, n, |j, k| {
                let angle = -2.0 * std::f64::consts::PI * ((j * k) % n) as f64 / n as f64;
                C64::from_polar(scale, angle)
            }))
        }
        "gaussian" => {
            let (m, n) = dims
                .split_once('x')
                .ok_or_else(|| CliError::Config(format!("--generator: '{dims}' is not MxN")))?;
            let (m, n) = (parse_dims(m, "row count")?, parse_dims(n, "column count")?);
            Ok(gaussian_operator(m, n, &mut seeded(seed)).into_matrix())
        }
        other => Err(CliError::Config(format!(
            "--generator: unknown kind '{other}' (expected identity, dft or gaussian)"
        ))),
    }
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<C64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut rows: Vec<Vec<C64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|t| t.trim().parse::<C64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| {
                CliError::Config(format!("{}:{}: bad matrix entry: {e}", path.display(), i + 1))
            })?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(CliError::Config(format!(
                    "{}:{}: {} entries, expected {}",
                    path.display(),
                    i + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Config(format!("{}: empty matrix", path.display())));
    }
    let (m, n) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(m, n, |i, j| rows[i][j]))
}

fn levels_or_single(bounds: &[usize], n: usize, flag: &str) -> Result<LevelStructure, CliError> {
    let levels = if bounds.is_empty() {
        LevelStructure::single(n)
    } else {
        LevelStructure::new(bounds.to_vec())
    };
    let levels = levels.map_err(|e| CliError::Config(format!("{flag}: {e}")))?;
    if levels.dim() != n {
        return Err(CliError::Config(format!(
            "{flag}: levels end at {}, matrix dimension is {n}",
            levels.dim()
        )));
    }
    Ok(levels)
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<VerifyReport, CliError> {
    let args = args.merged()?;
    let (a, source) = match (&args.matrix, &args.generator) {
        (Some(p), None) => (read_matrix(p)?, p.display().to_string()),
        (None, Some(g)) => (generate(g, args.seed)?, g.clone()),
        _ => {
            return Err(CliError::Config(
                "exactly one of --matrix or --generator is required".into(),
            ))
        }
    };
    let (m, n) = a.shape();
    if args.s.is_empty() && args.local_s.is_empty() && !a.is_square() {
        return Err(CliError::Config(
            "nothing to verify: give --s, --local-s, or a square matrix".into(),
        ));
    }
    if let Some(bad) = args.s.iter().find(|&&s| s == 0 || s > n) {
        return Err(CliError::Config(format!("--s: {bad} outside 1..={n}")));
    }
    let sparsity_levels = levels_or_single(&args.levels, n, "--levels")?;
    let local = if args.local_s.is_empty() {
        None
    } else {
        let local = LocalSparsities::new(args.local_s.clone());
        local
            .validate(&sparsity_levels)
            .map_err(|e| CliError::Config(format!("--local-s: {e}")))?;
        Some(local)
    };
    let mut report = with_jobs(args.jobs, || -> Result<VerifyReport, CliError> {
        let ric = args
            .s
            .iter()
            .map(|&s| Ok((s, ric_bruteforce(&a, s)?)))
            .collect::<Result<Vec<_>, CliError>>()?;
        let ricl = match &local {
            Some(local) => Some((
                local.counts().to_vec(),
                sparsity_levels.bounds().to_vec(),
                ricl_bruteforce(&a, local, &sparsity_levels)?,
            )),
            None => None,
        };
        let mut notes = Vec::new();
        let coherence = if a.is_square() {
            let sampling = levels_or_single(&args.sampling_levels, m, "--sampling-levels")?;
            match block_coherence(&a, &sampling, &sparsity_levels) {
                Ok(values) => Some(CoherenceTable {
                    sampling_levels: sampling.bounds().to_vec(),
                    sparsity_levels: sparsity_levels.bounds().to_vec(),
                    values,
                }),
                Err(e) if args.sampling_levels.is_empty() => {
                    notes.push(format!("coherence skipped: {e}"));
                    None
                }
                Err(e) => return Err(e.into()),
            }
        } else {
            None
        };
        Ok(VerifyReport {
            source,
            shape: (m, n),
            ric,
            ricl,
            coherence,
            notes,
            files: Vec::new(),
        })
    })??;
    let tag = args.tag.as_deref().unwrap_or("verify");
    let mut out = OutputSet::new(args.out.as_deref().unwrap_or(Path::new(".")))?;
    out.stage(&format!("{tag}.csv"), &report.csv()?)?;
    report.files = out.commit()?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators() {
        assert_eq!(generate("identity:3", 0).unwrap(), DMatrix::identity(3, 3));
        let f = generate("dft:4", 0).unwrap();
        assert!((f.ad_mul(&f) - DMatrix::<C64>::identity(4, 4)).camax() < 1e-14);
        assert!((f[(1, 1)] - C64::new(0.0, -0.5)).norm() < 1e-15);
        let g = generate("gaussian:3x5", 1).unwrap();
        assert_eq!(g.shape(), (3, 5));
        assert_eq!(g, generate("gaussian:3x5", 1).unwrap());
        for bad in ["identity", "dft:0", "gaussian:3", "hadamard:4"] {
            assert!(generate(bad, 0).is_err(), "{bad}");
        }
    }

    #[test]
    fn matrix_csv_accepts_complex_entries() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        std::fs::write(&p, "1, 0+1i\n-2.5,3-4i\n\n").unwrap();
        let a = read_matrix(&p).unwrap();
        assert_eq!(a[(0, 1)], C64::new(0.0, 1.0));
        assert_eq!(a[(1, 1)], C64::new(3.0, -4.0));
        std::fs::write(&p, "1,2\n3\n").unwrap();
        assert!(read_matrix(&p).unwrap_err().to_string().contains(":2:"));
    }
}
