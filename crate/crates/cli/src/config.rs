//! JSON experiment configurations.
//!
//! Both experiment kinds share the section layout `model`, `solver`, `grid`,
//! `seeds`, `output`. Unknown keys are rejected so typos surface as errors.

use std::fmt;
use std::path::Path;

use csl_core::bp::BpConfig;
use csl_core::experiments::{Decoder, Encoder, ModelFamily};
use csl_core::solvers::SolverConfig;
use csl_core::LevelStructure;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::CliError;

/// Decoder name as it appears in a config file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DecoderName(pub Decoder);

impl Serialize for DecoderName {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.0.name())
    }
}

impl<'de> Deserialize<'de> for DecoderName {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse().map(DecoderName).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EncoderName(pub Encoder);

impl Serialize for EncoderName {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.0.name())
    }
}

impl<'de> Deserialize<'de> for EncoderName {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse().map(EncoderName).map_err(serde::de::Error::custom)
    }
}

/// A local-sparsity pattern: how total sparsity `s` is split across levels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum Pattern {
    Sparse,
    Fractions { levels: Vec<usize>, fractions: Vec<f64> },
    Saturated { fraction: f64 },
}

impl Pattern {
    pub fn family(&self) -> Result<ModelFamily, csl_core::Error> {
        Ok(match self {
            Pattern::Sparse => ModelFamily::Sparse,
            Pattern::Fractions { levels, fractions } => ModelFamily::Fractions {
                levels: LevelStructure::new(levels.clone())?,
                fractions: fractions.clone(),
            },
            Pattern::Saturated { fraction } => ModelFamily::Saturated {
                fraction: *fraction,
            },
        })
    }
}

/// Either a bare decoder name or a decoder with its own model and label.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum DecoderEntry {
    Name(DecoderName),
    Detailed {
        decoder: DecoderName,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        model: Option<Pattern>,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DetailedEntry {
    decoder: DecoderName,
    #[serde(default)]
    label: Option<String>,
    #[serde(default)]
    model: Option<Pattern>,
}

impl<'de> Deserialize<'de> for DecoderEntry {
    // untagged derive would swallow the decoder-name message
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::String(s) => s
                .parse()
                .map(|x| DecoderEntry::Name(DecoderName(x)))
                .map_err(D::Error::custom),
            v @ serde_json::Value::Object(_) => {
                let e: DetailedEntry = serde_json::from_value(v).map_err(D::Error::custom)?;
                Ok(DecoderEntry::Detailed {
                    decoder: e.decoder,
                    label: e.label,
                    model: e.model,
                })
            }
            other => Err(D::Error::custom(format!(
                "expected a decoder name or object, found {other}"
            ))),
        }
    }
}

impl DecoderEntry {
    pub fn decoder(&self) -> Decoder {
        match self {
            DecoderEntry::Name(d) => d.0,
            DecoderEntry::Detailed { decoder, .. } => decoder.0,
        }
    }

    pub fn label(&self) -> String {
        match self {
            DecoderEntry::Detailed {
                label: Some(label), ..
            } => label.clone(),
            _ => self.decoder().name().to_string(),
        }
    }

    pub fn model(&self) -> Option<&Pattern> {
        match self {
            DecoderEntry::Detailed { model, .. } => model.as_ref(),
            DecoderEntry::Name(_) => None,
        }
    }
}

/// An explicit list or an inclusive arithmetic range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IntGrid {
    List(Vec<usize>),
    Range { start: usize, stop: usize, step: usize },
}

impl IntGrid {
    pub fn values(&self) -> Vec<usize> {
        match self {
            IntGrid::List(v) => v.clone(),
            IntGrid::Range { start, stop, step } => {
                (*start..=*stop).step_by((*step).max(1)).collect()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub decoders: Vec<DecoderEntry>,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    /// Relative-increment tolerance; per-experiment default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default = "default_bp_tolerance")]
    pub bp_tolerance: f64,
    #[serde(default = "default_bp_max_iterations")]
    pub bp_max_iterations: usize,
}

fn default_max_iterations() -> usize {
    1000
}

fn default_bp_tolerance() -> f64 {
    BpConfig::default().tolerance
}

fn default_bp_max_iterations() -> usize {
    BpConfig::default().max_iterations
}

impl SolverSection {
    pub fn solver_config(&self, default_tolerance: f64) -> SolverConfig {
        SolverConfig {
            max_iterations: self.max_iterations,
            increment_tolerance: self.tolerance.unwrap_or(default_tolerance),
            ..SolverConfig::default()
        }
    }

    pub fn bp_config(&self) -> BpConfig {
        BpConfig {
            tolerance: self.bp_tolerance,
            max_iterations: self.bp_max_iterations,
        }
    }

    fn check(&self) -> Result<(), String> {
        if self.decoders.is_empty() {
            return Err("solver.decoders: at least one decoder is required".into());
        }
        if self.max_iterations == 0 {
            return Err("solver.max_iterations: must be at least 1".into());
        }
        if let Some(t) = self.tolerance {
            if !(t > 0.0 && t.is_finite()) {
                return Err(format!("solver.tolerance: {t} is not a positive number"));
            }
        }
        if !(self.bp_tolerance > 0.0 && self.bp_tolerance.is_finite()) {
            return Err("solver.bp_tolerance: must be positive".into());
        }
        if self.bp_max_iterations == 0 {
            return Err("solver.bp_max_iterations: must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub tag: String,
    /// Also write gnuplot `.dat` files.
    #[serde(default)]
    pub dat: bool,
}

impl OutputSection {
    fn check(&self) -> Result<(), String> {
        let ok = !self.tag.is_empty()
            && self
                .tag
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.');
        if ok {
            Ok(())
        } else {
            Err(format!(
                "output.tag: '{}' must be non-empty and use only letters, digits, '_', '-' or '.'",
                self.tag
            ))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseModel {
    #[serde(rename = "N")]
    pub n: usize,
    pub patterns: Vec<Pattern>,
    #[serde(default)]
    pub noise: f64,
    #[serde(default = "default_threshold")]
    pub success_threshold: f64,
}

fn default_threshold() -> f64 {
    1e-2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseGrid {
    pub s: IntGrid,
    pub m: IntGrid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSeeds {
    pub master: u64,
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseConfig {
    pub model: PhaseModel,
    pub solver: SolverSection,
    pub grid: PhaseGrid,
    pub seeds: PhaseSeeds,
    pub output: OutputSection,
}

impl PhaseConfig {
    pub fn validate(&self) -> Result<(), String> {
        let n = self.model.n;
        if n == 0 {
            return Err("model.N: must be positive".into());
        }
        if self.model.patterns.is_empty() {
            return Err("model.patterns: at least one pattern is required".into());
        }
        check_noise(self.model.noise)?;
        let t = self.model.success_threshold;
        if !(t > 0.0 && t.is_finite()) {
            return Err("model.success_threshold: must be positive".into());
        }
        self.solver.check()?;
        self.output.check()?;
        if self.seeds.trials == 0 {
            return Err("seeds.trials: must be at least 1".into());
        }
        let s_grid = self.grid.s.values();
        let m_grid = self.grid.m.values();
        if s_grid.is_empty() {
            return Err("grid.s: empty grid".into());
        }
        if m_grid.is_empty() {
            return Err("grid.m: empty grid".into());
        }
        if let Some(m) = m_grid.iter().find(|&&m| m == 0 || m > n) {
            return Err(format!("grid.m: m = {m} outside 1..={n}"));
        }
        for (i, p) in self.model.patterns.iter().enumerate() {
            check_pattern(p, n, &s_grid, &format!("model.patterns[{i}]"))?;
        }
        for (i, d) in self.solver.decoders.iter().enumerate() {
            if let Some(p) = d.model() {
                check_pattern(p, n, &s_grid, &format!("solver.decoders[{i}].model"))?;
            }
        }
        Ok(())
    }
}

fn check_noise(noise: f64) -> Result<(), String> {
    if noise >= 0.0 && noise.is_finite() {
        Ok(())
    } else {
        Err(format!("model.noise: {noise} must be finite and non-negative"))
    }
}

fn check_pattern(p: &Pattern, n: usize, s_grid: &[usize], field: &str) -> Result<(), String> {
    let family = p.family().map_err(|e| format!("{field}: {e}"))?;
    for &s in s_grid {
        family
            .model(n, s)
            .map_err(|e| format!("{field}: at s = {s}: {e}"))?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApproxModel {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(default = "default_oversample")]
    pub oversample: usize,
    pub encoders: Vec<EncoderName>,
    #[serde(default)]
    pub noise: f64,
}

fn default_oversample() -> usize {
    8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApproxGrid {
    pub m: IntGrid,
    #[serde(rename = "C")]
    pub c: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApproxSeeds {
    pub master: u64,
    pub runs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApproxConfig {
    pub model: ApproxModel,
    pub solver: SolverSection,
    pub grid: ApproxGrid,
    pub seeds: ApproxSeeds,
    pub output: OutputSection,
}

impl ApproxConfig {
    pub fn validate(&self) -> Result<(), String> {
        let n = self.model.n;
        if n < 2 || !n.is_power_of_two() {
            return Err(format!("model.N: {n} must be a power of two >= 2"));
        }
        if self.model.oversample == 0 {
            return Err("model.oversample: must be at least 1".into());
        }
        if self.model.encoders.is_empty() {
            return Err("model.encoders: at least one encoder is required".into());
        }
        check_noise(self.model.noise)?;
        self.solver.check()?;
        if let Some(i) = self.solver.decoders.iter().position(|d| d.model().is_some()) {
            return Err(format!(
                "solver.decoders[{i}].model: decoder models are derived from m and C here"
            ));
        }
        self.output.check()?;
        if self.seeds.runs == 0 {
            return Err("seeds.runs: must be at least 1".into());
        }
        let m_grid = self.grid.m.values();
        if m_grid.is_empty() {
            return Err("grid.m: empty grid".into());
        }
        if let Some(m) = m_grid
            .iter()
            .find(|&&m| m < 2 || m > n || !m.is_power_of_two())
        {
            return Err(format!("grid.m: m = {m} must be a power of two in 2..={n}"));
        }
        if self.grid.c.is_empty() {
            return Err("grid.C: at least one value is required".into());
        }
        if let Some(c) = self.grid.c.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
            return Err(format!("grid.C: {c} is not a positive number"));
        }
        Ok(())
    }
}

/// Where in the file a parse error happened.
#[derive(Debug)]
pub struct Diagnostic {
    pub file: String,
    pub line: usize,
    pub column: usize,
    pub path: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)?;
        if !self.path.is_empty() && self.path != "." {
            write!(f, ": field `{}`", self.path)?;
        }
        write!(f, ": {}", self.message)
    }
}

pub fn parse_str<T: DeserializeOwned>(text: &str, file: &str) -> Result<T, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        // serde_json appends its own position; keep the message alone
        let message = inner.to_string();
        let message = match message.rfind(" at line ") {
            Some(i) => message[..i].to_string(),
            None => message,
        };
        CliError::Config(
            Diagnostic {
                file: file.to_string(),
                line: inner.line(),
                column: inner.column(),
                path,
                message,
            }
            .to_string(),
        )
    })
}

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_str(&text, &path.display().to_string())
}
