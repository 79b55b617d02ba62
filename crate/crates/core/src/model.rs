//! Signals, supports and the sparsity-in-levels model.
//!
//! Indices are stored 0-based. Anything that leaves the process (CSV files,
//! printed reports) goes through [`SupportSet::one_based`] or the equivalent
//! helpers so that external interfaces stay 1-based.

use std::ops::{Deref, Range};

use num_complex::Complex64;
use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_len, invalid, Result};

pub type C64 = Complex64;

/// A finite, non-empty vector of complex coefficients.
///
/// Real-valued data is stored with a zero imaginary part.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal(Vec<C64>);

impl Signal {
    pub fn new(entries: Vec<C64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(invalid("signal must have at least one entry"));
        }
        if let Some(i) = entries.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(invalid(format!("signal entry {} is not finite", i + 1)));
        }
        Ok(Signal(entries))
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| C64::new(v, 0.0)).collect())
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "signal length must be positive");
        Signal(vec![C64::new(0.0, 0.0); n])
    }

    /// Wraps a vector produced by library code that is known to be finite.
    pub(crate) fn from_raw(entries: Vec<C64>) -> Self {
        debug_assert!(!entries.is_empty());
        Signal(entries)
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        norm2(&self.0)
    }

    pub fn support(&self) -> SupportSet {
        support_of(&self.0)
    }

    /// Real parts of the entries.
    pub fn re(&self) -> Vec<f64> {
        self.0.iter().map(|z| z.re).collect()
    }
}

impl Deref for Signal {
    type Target = [C64];

    fn deref(&self) -> &[C64] {
        &self.0
    }
}

impl AsRef<[C64]> for Signal {
    fn as_ref(&self) -> &[C64] {
        &self.0
    }
}

pub fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn norm1(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).sum()
}

pub(crate) fn dist2(a: &[C64], b: &[C64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn support_of(v: &[C64]) -> SupportSet {
    SupportSet {
        indices: v
            .iter()
            .enumerate()
            .filter(|(_, z)| **z != C64::new(0.0, 0.0))
            .map(|(i, _)| i)
            .collect(),
    }
}

/// A strictly increasing set of (0-based) indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct SupportSet {
    indices: Vec<usize>,
}

impl SupportSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a support from 0-based indices, checking bounds against `n`.
    pub fn new(mut indices: Vec<usize>, n: usize) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("support contains duplicate indices"));
        }
        if let Some(&last) = indices.last() {
            if last >= n {
                return Err(invalid(format!(
                    "support index {} exceeds dimension {n}",
                    last + 1
                )));
            }
        }
        Ok(SupportSet { indices })
    }

    /// Builds a support from 1-based indices.
    pub fn from_one_based(indices: &[usize], n: usize) -> Result<Self> {
        if indices.contains(&0) {
            return Err(invalid("1-based support contains index 0"));
        }
        Self::new(indices.iter().map(|i| i - 1).collect(), n)
    }

    /// Sorted, deduplicated input assumed in range.
    pub(crate) fn from_sorted_unchecked(indices: Vec<usize>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        SupportSet { indices }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.indices.iter().map(|i| i + 1).collect()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn union(&self, other: &SupportSet) -> SupportSet {
        let (a, b) = (&self.indices, &other.indices);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        SupportSet { indices: out }
    }
}

/// Sparsity levels `M = (M_1, ..., M_r)` with `1 <= M_1 < ... < M_r = N`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LevelStructure {
    bounds: Vec<usize>,
}

impl LevelStructure {
    pub fn new(bounds: Vec<usize>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(invalid("level structure needs at least one level"));
        }
        if bounds[0] < 1 {
            return Err(invalid("first level boundary must be at least 1"));
        }
        if bounds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid(format!(
                "level boundaries must be strictly increasing: {bounds:?}"
            )));
        }
        Ok(LevelStructure { bounds })
    }

    /// The single level `M = (N)`.
    pub fn single(n: usize) -> Result<Self> {
        Self::new(vec![n])
    }

    /// `r` levels of equal size `n / r`.
    pub fn uniform(n: usize, r: usize) -> Result<Self> {
        if r == 0 || !n.is_multiple_of(r) {
            return Err(invalid(format!("{n} does not split into {r} equal levels")));
        }
        Self::new((1..=r).map(|k| k * n / r).collect())
    }

    pub fn bounds(&self) -> &[usize] {
        &self.bounds
    }

    /// Total dimension `N = M_r`.
    pub fn dim(&self) -> usize {
        *self.bounds.last().expect("non-empty")
    }

    pub fn num_levels(&self) -> usize {
        self.bounds.len()
    }

    /// 0-based index range of level `k` (0-based).
    pub fn range(&self, k: usize) -> Range<usize> {
        let start = if k == 0 { 0 } else { self.bounds[k - 1] };
        start..self.bounds[k]
    }

    pub fn ranges(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        (0..self.num_levels()).map(move |k| self.range(k))
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.ranges().map(|r| r.len()).collect()
    }

    /// Level (0-based) containing the 0-based index `i`.
    pub fn level_of(&self, i: usize) -> Option<usize> {
        if i >= self.dim() {
            return None;
        }
        Some(self.bounds.partition_point(|&b| b <= i))
    }
}

/// Local sparsities `s = (s_1, ..., s_r)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LocalSparsities {
    counts: Vec<usize>,
}

impl LocalSparsities {
    pub fn new(counts: Vec<usize>) -> Self {
        LocalSparsities { counts }
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Checks `s_k <= M_k - M_{k-1}` for every level.
    pub fn validate(&self, levels: &LevelStructure) -> Result<()> {
        if self.counts.len() != levels.num_levels() {
            return Err(invalid(format!(
                "{} local sparsities for {} levels",
                self.counts.len(),
                levels.num_levels()
            )));
        }
        for (k, (&s, size)) in self.counts.iter().zip(levels.sizes()).enumerate() {
            if s > size {
                return Err(invalid(format!(
                    "local sparsity {s} exceeds size {size} of level {}",
                    k + 1
                )));
            }
        }
        Ok(())
    }

    /// `2 s_k`, clipped to each level size.
    pub fn doubled_clipped(&self, levels: &LevelStructure) -> LocalSparsities {
        LocalSparsities {
            counts: self
                .counts
                .iter()
                .zip(levels.sizes())
                .map(|(&s, size)| (2 * s).min(size))
                .collect(),
        }
    }
}

/// Classical `s`-sparsity or sparsity in levels `(s, M)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SparsityModel {
    Sparse(usize),
    Levels(LocalSparsities, LevelStructure),
}

impl SparsityModel {
    /// The model as a level structure on `n` entries; `Sparse(s)` is one level.
    pub fn as_levels(&self, n: usize) -> Result<(LocalSparsities, LevelStructure)> {
        let (s, m) = match self {
            SparsityModel::Sparse(s) => (LocalSparsities::new(vec![*s]), LevelStructure::single(n)?),
            SparsityModel::Levels(s, m) => {
                check_len("sparsity model", n, m.dim())?;
                (s.clone(), m.clone())
            }
        };
        s.validate(&m)?;
        Ok((s, m))
    }

    pub fn total(&self) -> usize {
        match self {
            SparsityModel::Sparse(s) => *s,
            SparsityModel::Levels(s, _) => s.total(),
        }
    }
}

/// True iff `x` has at most `s_k` nonzeros in every level of `levels`.
pub fn is_sparse_in_levels(
    x: &[C64],
    sparsities: &LocalSparsities,
    levels: &LevelStructure,
) -> Result<bool> {
    check_len("is_sparse_in_levels", levels.dim(), x.len())?;
    sparsities.validate(levels)?;
    Ok(level_counts(x, levels)
        .iter()
        .zip(sparsities.counts())
        .all(|(c, s)| c <= s))
}

/// Nonzero count in each level.
pub fn level_counts(x: &[C64], levels: &LevelStructure) -> Vec<usize> {
    levels
        .ranges()
        .map(|r| x[r].iter().filter(|z| **z != C64::new(0.0, 0.0)).count())
        .collect()
}

/// Draws a vector with exactly `s_k` nonzeros in level `k`, positions uniform
/// within each level and values independent standard normal.
pub fn random_sparse_in_levels<R: Rng + ?Sized>(
    sparsities: &LocalSparsities,
    levels: &LevelStructure,
    rng: &mut R,
) -> Result<Signal> {
    sparsities.validate(levels)?;
    let mut x = vec![C64::new(0.0, 0.0); levels.dim()];
    for (range, &s) in levels.ranges().zip(sparsities.counts()) {
        let picks = index::sample(rng, range.len(), s);
        for p in picks.iter() {
            // a standard normal draw is nonzero with probability one
            let mut v: f64 = rng.sample(StandardNormal);
            while v == 0.0 {
                v = rng.sample(StandardNormal);
            }
            x[range.start + p] = C64::new(v, 0.0);
        }
    }
    Ok(Signal::from_raw(x))
}
