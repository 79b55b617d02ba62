//! Multilevel random sampling schemes.
//!
//! Sample positions are indices into the frequency ordering
//! `0, 1, -1, 2, -2, 3, ...` (position `p`, 0-based, maps to frequency
//! `(p + 1) / 2` for odd `p` and `-p / 2` for even `p`). Under this ordering
//! the dyadic frequency bands occupy the sampling levels `N_k = 2^k`:
//!
//! ```text
//! band 1: {0, 1}
//! band k: {-2^(k-1)+1, ..., -2^(k-2)} ∪ {2^(k-2)+1, ..., 2^(k-1)}   (k >= 2)
//! ```
//!
//! and the opposite semiband of a positive frequency `q` holds its mirror
//! `1 - q`.

use std::io::{self, Write};

use rand::seq::index;
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::model::LevelStructure;

/// Frequency at 0-based position `p` of the ordering `0, 1, -1, 2, -2, ...`.
pub fn position_to_frequency(p: usize) -> i64 {
    if p % 2 == 1 {
        p.div_ceil(2) as i64
    } else {
        -((p / 2) as i64)
    }
}

/// Inverse of [`position_to_frequency`].
pub fn frequency_to_position(q: i64) -> usize {
    if q > 0 {
        (2 * q - 1) as usize
    } else {
        (-2 * q) as usize
    }
}

/// An `(m, N)`-multilevel sampling set `Ω`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SamplingScheme {
    levels: LevelStructure,
    counts: Vec<usize>,
    indices: Vec<usize>,
}

impl SamplingScheme {
    /// Assembles a scheme from explicitly chosen 0-based positions, checking
    /// the per-level counts.
    pub fn from_indices(
        levels: LevelStructure,
        counts: Vec<usize>,
        mut indices: Vec<usize>,
    ) -> Result<Self> {
        check_counts(&levels, &counts)?;
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("sampling scheme contains duplicate indices"));
        }
        if indices.last().is_some_and(|&i| i >= levels.dim()) {
            return Err(invalid("sampling index beyond the last sampling level"));
        }
        for (k, (range, &mk)) in levels.ranges().zip(&counts).enumerate() {
            let got = indices.iter().filter(|i| range.contains(i)).count();
            if got != mk {
                return Err(invalid(format!(
                    "level {} holds {got} samples, expected {mk}",
                    k + 1
                )));
            }
        }
        Ok(SamplingScheme {
            levels,
            counts,
            indices,
        })
    }

    pub fn levels(&self) -> &LevelStructure {
        &self.levels
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Sorted 0-based positions.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// `sqrt((N_k - N_{k-1}) / m_k)` for level `k` (0-based).
    pub fn level_scale(&self, k: usize) -> f64 {
        let size = self.levels.range(k).len() as f64;
        (size / self.counts[k] as f64).sqrt()
    }

    /// `(position, level, scale)` for each selected position, in order.
    pub fn rows(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.indices.iter().map(move |&p| {
            let k = self.levels.level_of(p).expect("index in range");
            (p, k, self.level_scale(k))
        })
    }

    pub fn frequencies(&self) -> Vec<i64> {
        self.indices.iter().map(|&p| position_to_frequency(p)).collect()
    }

    /// CSV with columns `level,frequency,row_index` (1-based level and row).
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "level,frequency,row_index")?;
        for (p, k, _) in self.rows() {
            writeln!(w, "{},{},{}", k + 1, position_to_frequency(p), p + 1)?;
        }
        Ok(())
    }
}

fn check_counts(levels: &LevelStructure, counts: &[usize]) -> Result<()> {
    if counts.len() != levels.num_levels() {
        return Err(invalid(format!(
            "{} local sample counts for {} sampling levels",
            counts.len(),
            levels.num_levels()
        )));
    }
    for (k, (&mk, size)) in counts.iter().zip(levels.sizes()).enumerate() {
        if mk > size {
            return Err(invalid(format!(
                "{mk} samples requested from sampling level {} of size {size}",
                k + 1
            )));
        }
    }
    Ok(())
}

/// Draws `m_k` distinct positions uniformly from each sampling level; a level
/// with `m_k` equal to its size is taken whole.
pub fn multilevel_scheme<R: Rng + ?Sized>(
    levels: &LevelStructure,
    counts: &[usize],
    rng: &mut R,
) -> Result<SamplingScheme> {
    check_counts(levels, counts)?;
    let mut indices = Vec::with_capacity(counts.iter().sum());
    for (range, &mk) in levels.ranges().zip(counts) {
        if mk == range.len() {
            indices.extend(range);
        } else {
            // uniform draws with rejection of repeats: a uniform m_k-subset
            let mut picked: Vec<usize> = index::sample(rng, range.len(), mk)
                .into_iter()
                .map(|i| range.start + i)
                .collect();
            picked.sort_unstable();
            indices.extend(picked);
        }
    }
    Ok(SamplingScheme {
        levels: levels.clone(),
        counts: counts.to_vec(),
        indices,
    })
}

/// The first `r` dyadic frequency bands.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DyadicBandLayout {
    bands: usize,
}

impl DyadicBandLayout {
    pub fn new(bands: usize) -> Result<Self> {
        if !(1..=40).contains(&bands) {
            return Err(invalid(format!("band count {bands} out of range 1..=40")));
        }
        Ok(DyadicBandLayout { bands })
    }

    pub fn num_bands(&self) -> usize {
        self.bands
    }

    /// Sampling levels `N_k = 2^k`, `k = 1..r`.
    pub fn sampling_levels(&self) -> LevelStructure {
        LevelStructure::new((1..=self.bands).map(|k| 1usize << k).collect())
            .expect("dyadic levels are increasing")
    }

    /// Size of band `k` (1-based).
    pub fn band_size(&self, k: usize) -> usize {
        if k == 1 {
            2
        } else {
            1 << (k - 1)
        }
    }

    /// Frequencies of band `k` (1-based), in ordering-position order.
    pub fn band(&self, k: usize) -> Vec<i64> {
        let start = if k == 1 { 0 } else { 1usize << (k - 1) };
        (start..1usize << k).map(position_to_frequency).collect()
    }

    /// The positive semiband `B_k ∩ {1, 2, ...}`.
    pub fn positive_semiband(&self, k: usize) -> Vec<i64> {
        if k == 1 {
            vec![1]
        } else {
            let lo = (1i64 << (k - 2)) + 1;
            (lo..=1i64 << (k - 1)).collect()
        }
    }
}

/// Mirror of a frequency in the opposite semiband of its band.
pub fn mirror_frequency(q: i64) -> i64 {
    1 - q
}

/// Local sample counts for the dyadic multilevel Fourier encoder with `m`
/// samples over `r` bands: the first `log2(m/2)` bands are saturated, the
/// remaining middle bands get `2 floor(m / (4 (r - r~)))` each and the last
/// band takes the rest.
pub fn fourier_band_allocation(m: usize, r: usize) -> Result<Vec<usize>> {
    if m < 2 || !m.is_power_of_two() {
        return Err(invalid(format!("m = {m} must be a power of two, at least 2")));
    }
    let layout = DyadicBandLayout::new(r)?;
    let saturated = (m / 2).trailing_zeros() as usize;
    if r <= saturated {
        return Err(Error::Config(format!(
            "{r} bands cannot hold {m} samples: need more than {saturated} bands"
        )));
    }
    let mut counts: Vec<usize> = (1..=saturated).map(|k| layout.band_size(k)).collect();
    let per_band = 2 * (m / (4 * (r - saturated)));
    counts.extend(std::iter::repeat_n(per_band, r - saturated - 1));
    let used: usize = counts.iter().sum();
    let last_size = layout.band_size(r);
    if used > m || m - used > last_size {
        return Err(Error::Config(format!(
            "infeasible allocation: last band needs {} samples, holds {last_size}",
            m as i64 - used as i64
        )));
    }
    counts.push(m - used);
    Ok(counts)
}

/// Draws `m_k / 2` frequencies from the positive semiband of band `k` and adds
/// their mirrors from the opposite semiband. Returned sorted.
pub fn symmetric_band_sample<R: Rng + ?Sized>(
    layout: &DyadicBandLayout,
    k: usize,
    mk: usize,
    rng: &mut R,
) -> Result<Vec<i64>> {
    if k == 0 || k > layout.num_bands() {
        return Err(invalid(format!("band {k} outside 1..={}", layout.num_bands())));
    }
    if !mk.is_multiple_of(2) {
        return Err(invalid(format!("symmetric sampling needs an even count, got {mk}")));
    }
    let semi = layout.positive_semiband(k);
    if mk / 2 > semi.len() {
        return Err(invalid(format!(
            "{mk} samples exceed band {k} of size {}",
            layout.band_size(k)
        )));
    }
    let mut out: Vec<i64> = index::sample(rng, semi.len(), mk / 2)
        .into_iter()
        .flat_map(|i| [semi[i], mirror_frequency(semi[i])])
        .collect();
    out.sort_unstable();
    Ok(out)
}

/// The dyadic multilevel Fourier scheme with `m` samples over `r` bands.
pub fn fourier_scheme<R: Rng + ?Sized>(m: usize, r: usize, rng: &mut R) -> Result<SamplingScheme> {
    let layout = DyadicBandLayout::new(r)?;
    let counts = fourier_band_allocation(m, r)?;
    let mut indices = Vec::with_capacity(m);
    for (k, &mk) in (1..=r).zip(&counts) {
        let freqs = if mk == layout.band_size(k) {
            layout.band(k)
        } else {
            symmetric_band_sample(&layout, k, mk, rng)?
        };
        indices.extend(freqs.into_iter().map(frequency_to_position));
    }
    SamplingScheme::from_indices(layout.sampling_levels(), counts, indices)
}
