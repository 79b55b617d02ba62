//! Hard thresholding, classical and in levels.
//!
//! Ties in magnitude are broken towards the smaller index, independently in
//! each level. When a level holds fewer than `s_k` nonzeros the selection is
//! padded with zero-valued positions in index order, so `|L_{s,M}(x)| = sum s_k`
//! always.

use std::cmp::Ordering;

use crate::error::{check_len, invalid, Result};
use crate::model::{LevelStructure, LocalSparsities, Signal, SupportSet, C64};

/// Positions (relative to `x`) of the `s` largest magnitudes, unsorted.
fn select_top(x: &[C64], s: usize, offset: usize, out: &mut Vec<usize>) {
    if s == 0 {
        return;
    }
    if s >= x.len() {
        out.extend(offset..offset + x.len());
        return;
    }
    let mags: Vec<f64> = x.iter().map(|z| z.norm()).collect();
    let mut idx: Vec<usize> = (0..x.len()).collect();
    // descending magnitude, ascending index: a strict total order
    let order = |&a: &usize, &b: &usize| -> Ordering {
        mags[b].total_cmp(&mags[a]).then(a.cmp(&b))
    };
    idx.select_nth_unstable_by(s - 1, order);
    out.extend(idx[..s].iter().map(|i| i + offset));
}

/// `L_s(x)`: indices of the `s` largest entries in absolute value.
pub fn largest_indices(x: &[C64], s: usize) -> Result<SupportSet> {
    if s > x.len() {
        return Err(invalid(format!(
            "sparsity {s} exceeds signal length {}",
            x.len()
        )));
    }
    let mut out = Vec::with_capacity(s);
    select_top(x, s, 0, &mut out);
    out.sort_unstable();
    Ok(SupportSet::from_sorted_unchecked(out))
}

/// `L_{s,M}(x)`: union over levels of the `s_k` largest entries in level `k`.
pub fn largest_indices_levels(
    x: &[C64],
    sparsities: &LocalSparsities,
    levels: &LevelStructure,
) -> Result<SupportSet> {
    check_len("largest_indices_levels", levels.dim(), x.len())?;
    sparsities.validate(levels)?;
    let mut out = Vec::with_capacity(sparsities.total());
    for (range, &s) in levels.ranges().zip(sparsities.counts()) {
        let start = out.len();
        select_top(&x[range.clone()], s, range.start, &mut out);
        out[start..].sort_unstable();
    }
    Ok(SupportSet::from_sorted_unchecked(out))
}

fn keep(x: &[C64], support: &SupportSet) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); x.len()];
    for &i in support.indices() {
        out[i] = x[i];
    }
    out
}

pub(crate) fn hard_threshold_vec(x: &[C64], s: usize) -> Result<Vec<C64>> {
    Ok(keep(x, &largest_indices(x, s)?))
}

pub(crate) fn hard_threshold_levels_vec(
    x: &[C64],
    sparsities: &LocalSparsities,
    levels: &LevelStructure,
) -> Result<Vec<C64>> {
    Ok(keep(x, &largest_indices_levels(x, sparsities, levels)?))
}

/// `H_s(x)`.
pub fn hard_threshold(x: &[C64], s: usize) -> Result<Signal> {
    Signal::new(hard_threshold_vec(x, s)?)
}

/// `H_{s,M}(x)`.
pub fn hard_threshold_levels(
    x: &[C64],
    sparsities: &LocalSparsities,
    levels: &LevelStructure,
) -> Result<Signal> {
    Signal::new(hard_threshold_levels_vec(x, sparsities, levels)?)
}

/// `sigma_s(x)_1 = ||x - H_s(x)||_1`.
pub fn best_s_term_error_l1(x: &[C64], s: usize) -> Result<f64> {
    let kept = largest_indices(x, s)?;
    Ok(x.iter()
        .enumerate()
        .filter(|(i, _)| !kept.contains(*i))
        .map(|(_, z)| z.norm())
        .sum())
}
