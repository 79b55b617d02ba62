//! Brute-force oracles for small instances.
//!
//! Every routine enumerates all admissible supports of a sparsity model, so
//! the number of supports is capped by [`ENUMERATION_BUDGET`].

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{check_len, invalid, Error, Result};
use crate::model::{dist2, norm2, LevelStructure, LocalSparsities, Signal, SparsityModel, SupportSet, C64};
use crate::operators::{restricted_least_squares_vec, LinearOperator};

pub const ENUMERATION_BUDGET: u128 = 1_000_000;
const UNITARY_TOLERANCE: f64 = 1e-10;
const LSQ_TOLERANCE: f64 = 1e-12;

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// All supports with exactly `s_k` indices in level `k`, in lexicographic order.
#[derive(Clone, Debug)]
pub struct ModelSupports {
    per_level: Vec<Vec<Vec<usize>>>,
    count: usize,
}

impl ModelSupports {
    pub fn new(s: &LocalSparsities, levels: &LevelStructure) -> Result<Self> {
        s.validate(levels)?;
        let count = s
            .counts()
            .iter()
            .zip(levels.sizes())
            .fold(1u128, |acc, (&k, n)| acc.saturating_mul(binomial(n, k)));
        if count > ENUMERATION_BUDGET {
            return Err(Error::BudgetExceeded {
                count,
                budget: ENUMERATION_BUDGET,
            });
        }
        let per_level = levels
            .ranges()
            .zip(s.counts())
            .map(|(r, &k)| combinations(r.start, r.end, k))
            .collect();
        Ok(ModelSupports {
            per_level,
            count: count as usize,
        })
    }

    pub fn from_model(model: &SparsityModel, n: usize) -> Result<Self> {
        let (s, m) = model.as_levels(n)?;
        Self::new(&s, &m)
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// The `t`-th support; the first level is the most significant digit.
    pub fn get(&self, mut t: usize) -> Vec<usize> {
        let mut digits = vec![0; self.per_level.len()];
        for (d, lvl) in digits.iter_mut().zip(&self.per_level).rev() {
            *d = t % lvl.len();
            t /= lvl.len();
        }
        digits
            .iter()
            .zip(&self.per_level)
            .flat_map(|(&d, lvl)| lvl[d].iter().copied())
            .collect()
    }
}

fn combinations(start: usize, end: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if start + k > end {
        return out;
    }
    let mut cur: Vec<usize> = (start..start + k).collect();
    'outer: loop {
        out.push(cur.clone());
        // advance the rightmost index that still has room
        for i in (0..k).rev() {
            if cur[i] < end - k + i {
                cur[i] += 1;
                for j in i + 1..k {
                    cur[j] = cur[j - 1] + 1;
                }
                continue 'outer;
            }
        }
        return out;
    }
}

fn isometry_defect(a: &DMatrix<C64>, support: &[usize]) -> f64 {
    if support.is_empty() {
        return 0.0;
    }
    let b = a.select_columns(support);
    let gram = b.ad_mul(&b);
    let eig = gram.symmetric_eigenvalues();
    let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (1.0 - lo).max(hi - 1.0)
}

/// `delta_s`: the largest `max(1 - lambda_min, lambda_max - 1)` over Gram
/// matrices of `s`-column submatrices.
pub fn ric_bruteforce(a: &DMatrix<C64>, s: usize) -> Result<f64> {
    ricl_bruteforce(a, &LocalSparsities::new(vec![s]), &LevelStructure::single(a.ncols())?)
}

/// `delta_{s,M}`, the same extremum over `(s, M)`-admissible supports.
pub fn ricl_bruteforce(a: &DMatrix<C64>, s: &LocalSparsities, levels: &LevelStructure) -> Result<f64> {
    check_len("ricl_bruteforce columns", levels.dim(), a.ncols())?;
    let supports = ModelSupports::new(s, levels)?;
    Ok((0..supports.len())
        .into_par_iter()
        .map(|t| isometry_defect(a, &supports.get(t)))
        .reduce(|| 0.0, f64::max))
}

/// `mu_{k,l} = max |u_ij|^2` over rows in sampling level `k` and columns in
/// sparsity level `l`.
pub fn block_coherence(
    u: &DMatrix<C64>,
    sampling_levels: &LevelStructure,
    sparsity_levels: &LevelStructure,
) -> Result<DMatrix<f64>> {
    if !u.is_square() {
        return Err(invalid("coherence needs a square matrix"));
    }
    check_len("block_coherence rows", sampling_levels.dim(), u.nrows())?;
    check_len("block_coherence columns", sparsity_levels.dim(), u.ncols())?;
    let n = u.nrows();
    let defect = (u.ad_mul(u) - DMatrix::<C64>::identity(n, n)).camax();
    if defect > UNITARY_TOLERANCE {
        return Err(invalid(format!("matrix is not unitary (defect {defect:e})")));
    }
    let rows: Vec<_> = sampling_levels.ranges().collect();
    let cols: Vec<_> = sparsity_levels.ranges().collect();
    Ok(DMatrix::from_fn(rows.len(), cols.len(), |k, l| {
        let mut best: f64 = 0.0;
        for i in rows[k].clone() {
            for j in cols[l].clone() {
                best = best.max(u[(i, j)].norm_sqr());
            }
        }
        best
    }))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExhaustiveSolution {
    pub estimate: Signal,
    pub support: SupportSet,
    pub residual_norm: f64,
}

/// Least squares on every admissible support; returns the one with the smallest
/// residual `||y - A z||_2`, the lexicographically first on ties.
pub fn exhaustive_decoder<A: LinearOperator + ?Sized>(
    op: &A,
    y: &[C64],
    model: &SparsityModel,
) -> Result<ExhaustiveSolution> {
    check_len("exhaustive_decoder measurements", op.rows(), y.len())?;
    let supports = ModelSupports::from_model(model, op.cols())?;
    let (t, residual_norm, z) = (0..supports.len())
        .into_par_iter()
        .map(|t| {
            let supp = SupportSet::from_sorted_unchecked(supports.get(t));
            let z = restricted_least_squares_vec(op, y, &supp, LSQ_TOLERANCE);
            let az = op.apply(&z);
            (t, dist2(y, &az), z)
        })
        .reduce_with(|a, b| if b.1 < a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a })
        .ok_or_else(|| invalid("sparsity model admits no support"))?;
    Ok(ExhaustiveSolution {
        estimate: Signal::from_raw(z),
        support: SupportSet::from_sorted_unchecked(supports.get(t)),
        residual_norm,
    })
}

/// Euclidean projection onto the model by enumeration: the minimiser of
/// `||x - z||_2` over model-sparse `z`, and that distance.
pub fn project_bruteforce(x: &[C64], model: &SparsityModel) -> Result<(Signal, f64)> {
    let supports = ModelSupports::from_model(model, x.len())?;
    let (t, _) = (0..supports.len())
        .map(|t| (t, supports.get(t).iter().map(|&i| x[i].norm_sqr()).sum::<f64>()))
        .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
    let mut z = vec![C64::new(0.0, 0.0); x.len()];
    for i in supports.get(t) {
        z[i] = x[i];
    }
    // sum the discarded part directly; total - kept loses all digits
    let dropped: Vec<C64> = x.iter().zip(&z).map(|(a, b)| a - b).collect();
    Ok((Signal::from_raw(z), norm2(&dropped)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::random_sparse_in_levels;
    use crate::operators::{gaussian_operator, DenseOperator, Identity};
    use crate::rng::seeded;
    use crate::solvers::{cosamp, SolverConfig};
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn real_matrix(rows: usize, cols: usize, v: &[f64]) -> DMatrix<C64> {
        DMatrix::from_row_slice(rows, cols, v).map(|x| C64::new(x, 0.0))
    }

    fn gaussian(seed: u64, m: usize, n: usize) -> DMatrix<C64> {
        gaussian_operator(m, n, &mut seeded(seed)).into_matrix()
    }

    #[test]
    fn combination_enumeration() {
        assert_eq!(combinations(0, 4, 2), vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(combinations(3, 5, 0), vec![Vec::<usize>::new()]);
        assert_eq!(combinations(2, 4, 2), vec![vec![2, 3]]);
        for (n, k) in [(7, 3), (10, 1), (6, 6)] {
            assert_eq!(combinations(0, n, k).len() as u128, binomial(n, k));
        }
        let m = LevelStructure::new(vec![2, 5]).unwrap();
        let sup = ModelSupports::new(&LocalSparsities::new(vec![1, 2]), &m).unwrap();
        let all: Vec<_> = (0..sup.len()).map(|t| sup.get(t)).collect();
        assert_eq!(all.len(), 6);
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(all, sorted);
        assert_eq!(all[0], vec![0, 2, 3]);
    }

    #[test]
    fn identity_is_an_isometry() {
        let a = DMatrix::<C64>::identity(8, 8);
        for s in 1..=8 {
            assert!(ric_bruteforce(&a, s).unwrap().abs() <= 1e-14);
        }
    }

    #[test]
    fn hand_computed_two_by_two() {
        let a = real_matrix(2, 2, &[1., 1., 0., 0.]);
        assert!(ric_bruteforce(&a, 1).unwrap().abs() <= 1e-14);
        assert!((ric_bruteforce(&a, 2).unwrap() - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn monotone_and_model_nested() {
        let m = LevelStructure::new(vec![6, 12]).unwrap();
        for seed in 0..20 {
            let a = gaussian(seed, 8, 12);
            let d: Vec<f64> = (1..=4).map(|s| ric_bruteforce(&a, s).unwrap()).collect();
            assert!(d.windows(2).all(|w| w[0] <= w[1] + 1e-12));
            let s = LocalSparsities::new(vec![2, 1]);
            assert!(ricl_bruteforce(&a, &s, &m).unwrap() <= d[2] + 1e-12);
            let single = LevelStructure::single(12).unwrap();
            assert_eq!(
                ricl_bruteforce(&a, &LocalSparsities::new(vec![3]), &single).unwrap(),
                d[2]
            );
        }
    }

    #[test]
    fn random_vectors_bound_ricl_from_below() {
        let a = gaussian(30, 8, 12);
        let m = LevelStructure::new(vec![6, 12]).unwrap();
        let s = LocalSparsities::new(vec![1, 1]);
        let delta = ricl_bruteforce(&a, &s, &m).unwrap();
        let op = DenseOperator::new(a);
        let mut rng = seeded(31);
        let mut best: f64 = 0.0;
        for _ in 0..100_000 {
            let x = random_sparse_in_levels(&s, &m, &mut rng).unwrap();
            let ratio = norm2(&op.apply(&x)).powi(2) / norm2(&x).powi(2);
            best = best.max((ratio - 1.0).abs());
        }
        assert!(best <= delta + 1e-12);
        assert!(best >= 0.9 * delta, "sampled {best} vs exact {delta}");
    }

    #[test]
    fn budget_is_enforced() {
        let a = DMatrix::<C64>::identity(40, 40);
        assert!(matches!(ric_bruteforce(&a, 10), Err(Error::BudgetExceeded { .. })));
        assert!(matches!(
            exhaustive_decoder(&Identity(40), &vec![C64::new(0.0, 0.0); 40], &SparsityModel::Sparse(12)),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    fn unitary_dft(n: usize) -> DMatrix<C64> {
        DMatrix::from_fn(n, n, |i, j| {
            C64::from_polar(1.0 / (n as f64).sqrt(), -2.0 * std::f64::consts::PI * (i * j) as f64 / n as f64)
        })
    }

    #[test]
    fn coherence_examples() {
        let levels = LevelStructure::new(vec![2, 4, 8]).unwrap();
        let mu = block_coherence(&DMatrix::identity(8, 8), &levels, &levels).unwrap();
        assert_eq!(mu, DMatrix::from_fn(3, 3, |k, l| if k == l { 1.0 } else { 0.0 }));
        let mu = block_coherence(&unitary_dft(8), &levels, &levels).unwrap();
        assert!(mu.iter().all(|v| (v - 0.125).abs() <= 1e-12));
        assert!(block_coherence(&(unitary_dft(8) * C64::new(2.0, 0.0)), &levels, &levels).is_err());
    }

    // discrete Fourier-Haar matrix: unitary DFT rows in the ordering
    // 0, 1, -1, 2, ... applied to the Haar synthesis columns
    fn fourier_haar(n: usize) -> DMatrix<C64> {
        let basis = crate::wavelets::HaarBasis::new(n).unwrap();
        let dft = unitary_dft(n);
        let synth = DMatrix::from_fn(n, n, |i, j| {
            let mut e = vec![C64::new(0.0, 0.0); n];
            e[j] = C64::new(1.0, 0.0);
            crate::wavelets::haar_inverse(&e, &basis).unwrap()[i]
        });
        let full = dft * synth;
        DMatrix::from_fn(n, n, |p, j| {
            let q = crate::sampling::position_to_frequency(p).rem_euclid(n as i64) as usize;
            full[(q, j)]
        })
    }

    #[test]
    fn fourier_haar_coherence_decays_with_separation() {
        let n = 32;
        let levels = LevelStructure::new(vec![2, 4, 8, 16, 32]).unwrap();
        let mu = block_coherence(&fourier_haar(n), &levels, &levels).unwrap();
        for k in 0..5 {
            let row: Vec<f64> = (0..5).map(|l| mu[(k, l)]).collect();
            let peak = (0..5).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
            assert!(peak.abs_diff(k) <= 1, "row {k} peaks at {peak}: {mu}");
            for l in peak + 1..5 {
                assert!(row[l] <= row[l - 1] + 1e-12, "row {k}: {mu}");
            }
            for l in (0..peak).rev() {
                assert!(row[l] <= row[l + 1] + 1e-12, "row {k}: {mu}");
            }
        }
        // far corners are much less coherent than the leading block
        assert!(mu[(0, 4)] < 1e-3 && mu[(4, 0)] < 1e-2);
    }

    #[test]
    fn exhaustive_decoder_examples() {
        let y: Vec<C64> = [0., 3., 0., -1., 0.].iter().map(|&v| C64::new(v, 0.0)).collect();
        let r = exhaustive_decoder(&Identity(5), &y, &SparsityModel::Sparse(2)).unwrap();
        assert_eq!(r.estimate.as_slice(), &y[..]);
        assert_eq!(r.support.indices(), &[1, 3]);

        // unique minimiser whenever the doubled model is a near-isometry
        let m = LevelStructure::new(vec![6, 12]).unwrap();
        let s = LocalSparsities::new(vec![1, 1]);
        let model = SparsityModel::Levels(s.clone(), m.clone());
        let mut checked = 0;
        for seed in 0..20 {
            let mut rng = seeded(50 + seed);
            let a = gaussian_operator(40, 12, &mut rng);
            if ricl_bruteforce(a.matrix(), &s.doubled_clipped(&m), &m).unwrap() >= 1.0 {
                continue;
            }
            checked += 1;
            let x = random_sparse_in_levels(&s, &m, &mut rng).unwrap();
            let r = exhaustive_decoder(&a, &a.apply(&x), &model).unwrap();
            assert!(dist2(&r.estimate, &x) <= 1e-10);
            assert_eq!(r.support, x.support());
        }
        assert!(checked >= 10, "only {checked} well-conditioned draws");
    }

    #[test]
    fn exhaustive_residual_lower_bounds_cosamp() {
        let mut rng = seeded(51);
        for _ in 0..100 {
            let a = gaussian_operator(9, 12, &mut rng);
            let y: Vec<C64> = (0..9).map(|_| C64::new(rng.sample(StandardNormal), 0.0)).collect();
            let oracle = exhaustive_decoder(&a, &y, &SparsityModel::Sparse(2)).unwrap();
            let est = cosamp(&a, &y, 2, &SolverConfig::default()).unwrap().estimate;
            let res = dist2(&y, &a.apply(&est));
            assert!(oracle.residual_norm <= res + 1e-12);
        }
    }

    #[test]
    fn ties_go_to_the_first_support() {
        // equal columns: every support with the tied column fits equally well
        let a = DenseOperator::new(real_matrix(2, 3, &[1., 1., 0., 0., 0., 1.]));
        let y = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let r = exhaustive_decoder(&a, &y, &SparsityModel::Sparse(1)).unwrap();
        assert_eq!(r.support.indices(), &[0]);
    }

    #[test]
    fn projection_by_enumeration() {
        let x: Vec<C64> = [3., -1., 2., 0., 5., -4.].iter().map(|&v| C64::new(v, 0.0)).collect();
        let m = LevelStructure::new(vec![3, 6]).unwrap();
        let model = SparsityModel::Levels(LocalSparsities::new(vec![1, 1]), m);
        let (z, d) = project_bruteforce(&x, &model).unwrap();
        let expect: Vec<C64> = [3., 0., 0., 0., 5., 0.].iter().map(|&v| C64::new(v, 0.0)).collect();
        assert_eq!(z.as_slice(), &expect[..]);
        assert!((d - (1.0f64 + 4.0 + 16.0).sqrt()).abs() <= 1e-14);
    }
}
