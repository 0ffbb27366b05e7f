//! Unsupervised feature selection: pooled z-scoring, normalized MICI distances,
//! FSFS k-nearest-neighbour clustering, representation entropy and redundancy rate.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Flagged;
use crate::linalg::{correlation_from_cov, covariance, symmetric_eigenvalues, Matrix};
use crate::scalar::Real;

/// Both datasets of a pair, z-scored with statistics of their pooled rows.
#[derive(Clone, Debug, PartialEq)]
pub struct ZScoredPair<T> {
    pub q: Matrix<T>,
    pub ch: Matrix<T>,
    pub means: Vec<T>,
    pub stds: Vec<T>,
    /// Columns with zero pooled spread; left at 0.
    pub zero_std: Vec<bool>,
}

impl<T: Real> ZScoredPair<T> {
    /// Rows of both datasets stacked, `q` first.
    pub fn pooled(&self) -> Matrix<T> {
        self.q.vstack(&self.ch).expect("same column count")
    }
}

/// Per-column `(mean, population std)` over the rows of both matrices.
pub fn pooled_moments<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Result<(Vec<T>, Vec<T>)> {
    if a.cols() != b.cols() {
        return Err(Error::LengthMismatch {
            expected: a.cols(),
            actual: b.cols(),
        });
    }
    let n = a.rows() + b.rows();
    if n < 2 {
        return Err(Error::Empty("pair needs at least two rows in total"));
    }
    let p = a.cols();
    let nf = T::count(n);
    let mut means = vec![T::zero(); p];
    for m in [a, b] {
        for i in 0..m.rows() {
            for (acc, &v) in means.iter_mut().zip(m.row(i)) {
                *acc += v;
            }
        }
    }
    means.iter_mut().for_each(|v| *v /= nf);
    let mut vars = vec![T::zero(); p];
    for m in [a, b] {
        for i in 0..m.rows() {
            for ((acc, &v), &mu) in vars.iter_mut().zip(m.row(i)).zip(&means) {
                *acc += (v - mu) * (v - mu);
            }
        }
    }
    Ok((means, vars.into_iter().map(|v| (v / nf).sqrt()).collect()))
}

/// Z-scores both datasets with the pooled per-column mean and standard deviation.
pub fn zscore_pair<T: Real>(dq: &Matrix<T>, dch: &Matrix<T>) -> Result<ZScoredPair<T>> {
    let (means, stds) = pooled_moments(dq, dch)?;
    let zero_std: Vec<bool> = stds.iter().map(|&s| !(s > T::zero())).collect();
    let apply = |m: &Matrix<T>| {
        let mut out = m.clone();
        for i in 0..out.rows() {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = if zero_std[j] {
                    T::zero()
                } else {
                    (*v - means[j]) / stds[j]
                };
            }
        }
        out
    };
    Ok(ZScoredPair {
        q: apply(dq),
        ch: apply(dch),
        means,
        stds,
        zero_std,
    })
}

/// Column sums and centred cross-products of one dataset, for combining pooled statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scatter<T> {
    pub rows: usize,
    pub means: Vec<T>,
    /// `Σ (x − μ)(x − μ)ᵀ`
    pub scatter: Matrix<T>,
}

impl<T: Real> Scatter<T> {
    pub fn of(m: &Matrix<T>) -> Self {
        let mut scatter = covariance(m);
        let n = T::count(m.rows());
        let p = m.cols();
        for a in 0..p {
            for b in 0..p {
                scatter[(a, b)] *= n;
            }
        }
        let means = (0..p)
            .map(|j| {
                if m.rows() == 0 {
                    T::zero()
                } else {
                    m.column(j).into_iter().sum::<T>() / n
                }
            })
            .collect();
        Self {
            rows: m.rows(),
            means,
            scatter,
        }
    }

    /// Population covariance of the stacked rows of two datasets.
    pub fn pooled_covariance(&self, other: &Self) -> Result<Matrix<T>> {
        let p = self.means.len();
        if other.means.len() != p {
            return Err(Error::LengthMismatch {
                expected: p,
                actual: other.means.len(),
            });
        }
        let n = self.rows + other.rows;
        if n < 2 {
            return Err(Error::Empty("pair needs at least two rows in total"));
        }
        let (na, nb, nf) = (T::count(self.rows), T::count(other.rows), T::count(n));
        let w = na * nb / nf;
        let diff: Vec<T> = self
            .means
            .iter()
            .zip(&other.means)
            .map(|(&a, &b)| a - b)
            .collect();
        let mut cov = Matrix::zeros(p, p);
        for a in 0..p {
            for b in a..p {
                let v = (self.scatter[(a, b)] + other.scatter[(a, b)] + w * diff[a] * diff[b]) / nf;
                cov[(a, b)] = v;
                cov[(b, a)] = v;
            }
        }
        Ok(cov)
    }
}

/// Covariance of z-scored columns: the correlation matrix, with zero rows and
/// columns for features without spread.
pub fn standardized_covariance<T: Real>(cov: &Matrix<T>) -> Matrix<T> {
    let p = cov.rows();
    let mut out = Matrix::zeros(p, p);
    for a in 0..p {
        for b in 0..p {
            let (va, vb) = (cov[(a, a)], cov[(b, b)]);
            out[(a, b)] = if a == b {
                if va > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            } else {
                correlation_from_cov(cov[(a, b)], va, vb)
            };
        }
    }
    out
}

/// Smallest eigenvalue of the 2×2 covariance, divided by the sum of the variances.
pub fn mici_from_moments<T: Real>(var_x: T, var_y: T, cov_xy: T) -> Flagged<T> {
    let s = var_x + var_y;
    if !(s > T::zero()) {
        return Flagged::degenerate(T::zero());
    }
    let det = (var_x * var_y - cov_xy * cov_xy).max(T::zero());
    let disc = ((var_x - var_y) * (var_x - var_y) + T::lit(4.0) * cov_xy * cov_xy).sqrt();
    // stable form of (s − √(s² − 4 det)) / 2
    let lambda2 = T::lit(2.0) * det / (s + disc);
    Flagged::ok((lambda2 / s).max(T::zero()).min(T::lit(0.5)))
}

/// Normalized MICI of two columns (population moments).
pub fn mici<T: Real>(x: &[T], y: &[T]) -> Result<Flagged<T>> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::Empty("MICI needs at least two rows"));
    }
    let m = Matrix::from_columns(&[x.to_vec(), y.to_vec()])?;
    let c = covariance(&m);
    Ok(mici_from_moments(c[(0, 0)], c[(1, 1)], c[(0, 1)]))
}

/// Pairwise normalized MICI distances from a covariance matrix.
pub fn mici_matrix<T: Real>(cov: &Matrix<T>) -> Matrix<T> {
    let p = cov.rows();
    let mut out = Matrix::zeros(p, p);
    for a in 0..p {
        for b in a + 1..p {
            let v = mici_from_moments(cov[(a, a)], cov[(b, b)], cov[(a, b)]).value;
            out[(a, b)] = v;
            out[(b, a)] = v;
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FsfsOutcome<T> {
    /// Cluster representatives in selection order, then features never discarded, ascending.
    pub selected: Vec<usize>,
    pub epsilon: T,
    pub k_final: usize,
}

/// Feature selection by feature similarity over a distance matrix, starting at `k` neighbours.
pub fn fsfs_select<T: Real>(dist: &Matrix<T>, k: usize) -> FsfsOutcome<T> {
    let n = dist.rows();
    // neighbours of each feature by ascending distance, ties by index
    let neighbours: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut v: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            v.sort_by(|&a, &b| {
                dist[(i, a)]
                    .partial_cmp(&dist[(i, b)])
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.cmp(&b))
            });
            v
        })
        .collect();
    let mut alive = vec![true; n];
    let mut remaining = n;
    let mut retained: Vec<usize> = Vec::new();
    let mut epsilon: Option<T> = None;
    let mut k = k;
    // MICI of exactly collinear columns is only zero up to rounding
    let tol = T::epsilon() * T::lit(64.0);

    let kth = |i: usize, k: usize, alive: &[bool]| -> Option<T> {
        neighbours[i]
            .iter()
            .filter(|&&j| alive[j])
            .nth(k - 1)
            .map(|&j| dist[(i, j)])
    };
    let best = |k: usize, alive: &[bool]| -> Option<(usize, T)> {
        let mut best: Option<(usize, T)> = None;
        for i in (0..n).filter(|&i| alive[i]) {
            if let Some(d) = kth(i, k, alive) {
                if best.is_none_or(|(_, b)| d < b) {
                    best = Some((i, d));
                }
            }
        }
        best
    };

    loop {
        k = k.min(remaining.saturating_sub(1));
        if k == 0 {
            break;
        }
        let Some((mut arg, mut d)) = best(k, &alive) else {
            break;
        };
        match epsilon {
            None => epsilon = Some(d),
            Some(eps) => {
                while d > eps + tol {
                    k -= 1;
                    if k == 0 {
                        break;
                    }
                    (arg, d) = best(k, &alive).expect("k below remaining count");
                }
                if k == 0 {
                    break;
                }
            }
        }
        if !retained.contains(&arg) {
            retained.push(arg);
        }
        let drop: Vec<usize> = neighbours[arg]
            .iter()
            .copied()
            .filter(|&j| alive[j])
            .take(k)
            .collect();
        for j in drop {
            alive[j] = false;
            remaining -= 1;
        }
    }
    let mut selected = retained.clone();
    selected.extend((0..n).filter(|&i| alive[i] && !retained.contains(&i)));
    FsfsOutcome {
        selected,
        epsilon: epsilon.unwrap_or(T::zero()),
        k_final: k,
    }
}

/// Shannon entropy (natural log) of the normalized eigenvalues of a covariance matrix.
pub fn representation_entropy<T: Real>(cov: &Matrix<T>) -> Result<T> {
    let eig = symmetric_eigenvalues(cov)?;
    let pos: Vec<T> = eig.into_iter().map(|l| l.max(T::zero())).collect();
    let total: T = pos.iter().copied().sum();
    if !(total > T::zero()) {
        return Ok(T::zero());
    }
    let h: T = pos
        .iter()
        .map(|&l| l / total)
        .filter(|&p| p > T::zero())
        .map(|p| -p * p.ln())
        .sum();
    Ok(h.max(T::zero()))
}

/// `Σ_{i>j} |ρ_ij| / (N(N−1))` over the listed features of a covariance matrix.
pub fn redundancy_rate<T: Real>(cov: &Matrix<T>, subset: &[usize]) -> T {
    let n = subset.len();
    if n < 2 {
        return T::zero();
    }
    let mut s = T::zero();
    for (a, &i) in subset.iter().enumerate() {
        for &j in &subset[..a] {
            s += correlation_from_cov(cov[(i, j)], cov[(i, i)], cov[(j, j)]).abs();
        }
    }
    s / T::count(n * (n - 1))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult<T> {
    /// Column indices in selection order.
    pub selected: Vec<usize>,
    pub k_used: usize,
    pub epsilon: T,
    pub h_r: T,
    pub rr_subset: T,
    pub rr_full: T,
    /// Representation entropy of the subset obtained with each `k = 1..N−1`.
    pub h_r_by_k: Vec<T>,
    pub warning: Option<String>,
}

/// Scans `k = 1..N−1`, keeping the subset of maximal representation entropy (ties to smaller `k`).
pub fn choose_k_from_cov<T: Real>(cov: &Matrix<T>) -> Result<SelectionResult<T>> {
    let n = cov.rows();
    let all: Vec<usize> = (0..n).collect();
    let rr_full = redundancy_rate(cov, &all);
    if n < 2 {
        return Ok(SelectionResult {
            selected: all,
            k_used: 0,
            epsilon: T::zero(),
            h_r: T::zero(),
            rr_subset: T::zero(),
            rr_full,
            h_r_by_k: Vec::new(),
            warning: None,
        });
    }
    let dist = mici_matrix(cov);
    let mut memo: HashMap<Vec<usize>, T> = HashMap::new();
    let mut best: Option<(usize, FsfsOutcome<T>, T)> = None;
    let mut h_r_by_k = Vec::with_capacity(n - 1);
    for k in 1..n {
        let out = fsfs_select(&dist, k);
        let mut key = out.selected.clone();
        key.sort_unstable();
        let h = match memo.get(&key) {
            Some(&h) => h,
            None => {
                let h = representation_entropy(&cov.principal_submatrix(&key))?;
                memo.insert(key, h);
                h
            }
        };
        h_r_by_k.push(h);
        if best.as_ref().is_none_or(|(_, _, bh)| h > *bh) {
            best = Some((k, out, h));
        }
    }
    let (k_used, out, h_r) = best.expect("at least one k");
    let rr_subset = redundancy_rate(cov, &out.selected);
    let warning = (rr_subset > rr_full).then(|| {
        format!(
            "redundancy rate of the subset ({:.6}) exceeds that of all features ({:.6})",
            rr_subset.as_f64(),
            rr_full.as_f64()
        )
    });
    Ok(SelectionResult {
        selected: out.selected,
        k_used,
        epsilon: out.epsilon,
        h_r,
        rr_subset,
        rr_full,
        h_r_by_k,
        warning,
    })
}

/// [`choose_k_from_cov`] on the population covariance of `matrix`'s columns.
pub fn choose_k<T: Real>(matrix: &Matrix<T>) -> Result<SelectionResult<T>> {
    if matrix.rows() < 2 {
        return Err(Error::Empty("selection needs at least two rows"));
    }
    choose_k_from_cov(&covariance(matrix))
}

/// Pooled z-scoring of the pair, then selection on the stacked rows.
pub fn select_for_pair<T: Real>(dq: &Matrix<T>, dch: &Matrix<T>) -> Result<SelectionResult<T>> {
    let z = zscore_pair(dq, dch)?;
    choose_k(&z.pooled())
}

/// Same result as [`select_for_pair`] from precomputed per-dataset scatter statistics.
pub fn select_for_pair_scatter<T: Real>(
    q: &Scatter<T>,
    ch: &Scatter<T>,
) -> Result<SelectionResult<T>> {
    let cov = q.pooled_covariance(ch)?;
    choose_k_from_cov(&standardized_covariance(&cov))
}

/// How often each feature was selected, per stage, over a set of pairs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SelectionTally {
    pub pairs: usize,
    pub counts: Vec<usize>,
}

impl SelectionTally {
    pub fn new(features: usize) -> Self {
        Self {
            pairs: 0,
            counts: vec![0; features],
        }
    }

    pub fn add(&mut self, selected: &[usize]) {
        self.pairs += 1;
        for &j in selected {
            self.counts[j] += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| StandardNormal.sample(rng)).collect()
    }

    /// `blocks` independent columns, each repeated `size` times (with small scale changes).
    fn block_matrix(rng: &mut ChaCha8Rng, rows: usize, blocks: usize, size: usize) -> Matrix<f64> {
        let mut cols = Vec::new();
        for _ in 0..blocks {
            let base = gaussian(rng, rows);
            for s in 0..size {
                cols.push(
                    base.iter()
                        .map(|v| v * (1.0 + s as f64) + s as f64)
                        .collect(),
                );
            }
        }
        Matrix::from_columns(&cols).unwrap()
    }

    #[test]
    fn zscore_uses_pooled_moments() {
        let a = Matrix::from_columns(&[vec![3.0, 7.0], vec![1.0, 1.0]]).unwrap();
        let b = Matrix::from_columns(&[vec![3.0, 7.0], vec![1.0, 1.0]]).unwrap();
        let z = zscore_pair(&a, &b).unwrap();
        assert_eq!(z.means[0], 5.0);
        assert_eq!(z.stds[0], 2.0);
        assert_eq!(z.q[(1, 0)], 1.0);
        assert_eq!(z.q, z.ch);
        assert!(z.zero_std[1]);
        assert!(z.q.column(1).iter().all(|&v| v == 0.0));
        let empty = Matrix::<f64>::zeros(0, 2);
        assert!(zscore_pair(&empty, &empty).is_err());
    }

    #[test]
    fn scatter_combination_matches_direct_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let a = Matrix::from_columns(&[
            gaussian(&mut rng, 40),
            gaussian(&mut rng, 40),
            gaussian(&mut rng, 40),
        ])
        .unwrap();
        let b = Matrix::from_columns(&[
            gaussian(&mut rng, 25).iter().map(|v| v + 2.0).collect(),
            gaussian(&mut rng, 25),
            gaussian(&mut rng, 25),
        ])
        .unwrap();
        let direct = covariance(&a.vstack(&b).unwrap());
        let combined = Scatter::of(&a).pooled_covariance(&Scatter::of(&b)).unwrap();
        for (x, y) in direct.as_slice().iter().zip(combined.as_slice()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
        let z = zscore_pair(&a, &b).unwrap();
        let zc = covariance(&z.pooled());
        let sc = standardized_covariance(&combined);
        for (x, y) in zc.as_slice().iter().zip(sc.as_slice()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn mici_cases() {
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 3.0).collect();
        assert_abs_diff_eq!(mici(&x, &y).unwrap().value, 0.0, epsilon = 1e-12);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_abs_diff_eq!(mici(&x, &neg).unwrap().value, 0.0, epsilon = 1e-12);
        // exactly uncorrelated, equal variance
        let a = [1.0, -1.0, 1.0, -1.0];
        let b = [1.0, 1.0, -1.0, -1.0];
        assert_abs_diff_eq!(mici(&a, &b).unwrap().value, 0.5, epsilon = 1e-15);
        assert!(mici(&[1.0, 1.0], &[2.0, 2.0]).unwrap().degenerate);
    }

    #[test]
    fn fsfs_collapses_duplicates() {
        let dist = Matrix::zeros(3, 3);
        let out = fsfs_select::<f64>(&dist, 1);
        assert_eq!(out.selected, vec![0]);
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let m = block_matrix(&mut rng, 200, 2, 4);
        let d = mici_matrix(&covariance(&m));
        let out = fsfs_select(&d, 3);
        assert_eq!(out.selected.len(), 2);
        let mut blocks: Vec<usize> = out.selected.iter().map(|&j| j / 4).collect();
        blocks.sort_unstable();
        assert_eq!(blocks, vec![0, 1]);
    }

    #[test]
    fn fsfs_k_zero_keeps_everything() {
        let d = Matrix::from_vec(3, 3, vec![0.0, 0.1, 0.2, 0.1, 0.0, 0.3, 0.2, 0.3, 0.0]).unwrap();
        assert_eq!(fsfs_select(&d, 0).selected, vec![0, 1, 2]);
    }

    #[test]
    fn representation_entropy_cases() {
        let mut id = Matrix::zeros(5, 5);
        for i in 0..5 {
            id[(i, i)] = 1.0;
        }
        assert_abs_diff_eq!(
            representation_entropy(&id).unwrap(),
            5f64.ln(),
            epsilon = 1e-12
        );
        let v = [1.0, 2.0, 3.0];
        let mut r1 = Matrix::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                r1[(i, j)] = v[i] * v[j];
            }
        }
        assert_abs_diff_eq!(representation_entropy(&r1).unwrap(), 0.0, epsilon = 1e-9);
        assert_eq!(
            representation_entropy(&Matrix::<f64>::zeros(3, 3)).unwrap(),
            0.0
        );
    }

    #[test]
    fn redundancy_rate_cases() {
        let x = vec![1.0, 2.0, 4.0, 3.0];
        let m = Matrix::from_columns(&[x.clone(), x.iter().map(|v| 3.0 * v).collect()]).unwrap();
        assert_abs_diff_eq!(
            redundancy_rate(&covariance(&m), &[0, 1]),
            0.5,
            epsilon = 1e-12
        );
        assert_eq!(redundancy_rate(&covariance(&m), &[0]), 0.0);
    }

    #[test]
    fn choose_k_on_block_structures() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let dup = block_matrix(&mut rng, 100, 1, 5);
        let r = choose_k(&dup).unwrap();
        assert_eq!(r.selected.len(), 1);
        assert_eq!(r.k_used, 1);
        let blocks = block_matrix(&mut rng, 300, 3, 4);
        let r = choose_k(&blocks).unwrap();
        assert_eq!(r.selected.len(), 3);
        assert!(r.h_r_by_k.iter().all(|&h| h <= r.h_r));
        let mut seen: Vec<usize> = r.selected.iter().map(|&j| j / 4).collect();
        seen.sort_unstable();
        assert_eq!(seen, vec![0, 1, 2]);
    }

    #[test]
    fn pair_selection_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let cols = |rng: &mut ChaCha8Rng, n| -> Matrix<f64> {
            let base = gaussian(rng, n);
            let mut c: Vec<Vec<f64>> = (0..6).map(|_| gaussian(rng, n)).collect();
            c.push(base.iter().zip(&c[0]).map(|(a, b)| a + 0.1 * b).collect());
            Matrix::from_columns(&c).unwrap()
        };
        let (a, b) = (cols(&mut rng, 80), cols(&mut rng, 60));
        let direct = select_for_pair(&a, &b).unwrap();
        let fast = select_for_pair_scatter(&Scatter::of(&a), &Scatter::of(&b)).unwrap();
        assert_eq!(direct.selected, fast.selected);
        assert_eq!(direct.k_used, fast.k_used);
        // identical datasets select as the single dataset does
        let twin = select_for_pair(&a, &a).unwrap();
        let alone = choose_k(&zscore_pair(&a, &Matrix::zeros(0, 7)).unwrap().q).unwrap();
        assert_eq!(twin.selected, alone.selected);
    }
}
