//! Kernel density estimates on shared grids, Jensen-Shannon divergence and the
//! JSD-based feature similarity index of a channel pair.

pub mod campaign;
pub mod mwu;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;
use crate::selection::{choose_k_from_cov, standardized_covariance, Scatter, SelectionResult};
use crate::stats::{iqr, sorted_copy, std_dev};

pub use campaign::{
    campaign_pairs, histogram, per_channel_table, stage_tests, subject_summaries, Absence,
    ChannelRow, PairKind, PairOutcome, PairSpec, ScoreRecord, StageTest, SubjectSummary,
    HISTOGRAM_BINS,
};
pub use mwu::{mann_whitney_exact, mann_whitney_u, MannWhitney, PMethod, EXACT_LIMIT};

pub const DEFAULT_GRID: usize = 256;

/// Kernel tails beyond this many bandwidths are below 3e-18 of the peak and skipped.
const KERNEL_REACH: f64 = 9.0;

/// Which features enter the mean of `1 − JSD`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FsiMode {
    #[default]
    #[serde(rename = "subset")]
    Subset,
    #[serde(rename = "all45")]
    All45,
}

impl std::str::FromStr for FsiMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "subset" => Ok(FsiMode::Subset),
            "all45" => Ok(FsiMode::All45),
            _ => Err(Error::Invalid(format!(
                "unknown selection mode {s:?} (subset|all45)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimilarityConfig {
    pub grid_size: usize,
    pub mode: FsiMode,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        Self {
            grid_size: DEFAULT_GRID,
            mode: FsiMode::Subset,
        }
    }
}

/// Probability mass on evenly spaced abscissae.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PdfEstimate<T> {
    pub grid: Vec<T>,
    pub mass: Vec<T>,
    /// Mass collapsed to grid points because the kernel was narrower than the grid spacing.
    pub degenerate: bool,
}

/// `0.9 · min(SD, IQR/1.349) · n^(−1/5)`, falling back to SD when the IQR is zero.
pub fn silverman_bandwidth<T: Real>(values: &[T]) -> T {
    if values.len() < 2 {
        return T::zero();
    }
    let sd = std_dev(values);
    let spread = iqr(&sorted_copy(values)) / T::lit(1.349);
    let s = if spread > T::zero() {
        sd.min(spread)
    } else {
        sd
    };
    T::lit(0.9) * s * T::count(values.len()).powf(T::lit(-0.2))
}

/// `g` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace<T: Real>(lo: T, hi: T, g: usize) -> Vec<T> {
    if g == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / T::count(g - 1);
    (0..g)
        .map(|j| {
            if j == g - 1 {
                hi
            } else {
                lo + step * T::count(j)
            }
        })
        .collect()
}

fn nearest_index<T: Real>(x: T, lo: T, step: T, g: usize) -> usize {
    let t = ((x - lo) / step).round();
    if t <= T::zero() {
        0
    } else {
        t.to_usize().unwrap_or(g - 1).min(g - 1)
    }
}

/// Adds `exp(−(g_j − x)² / 2h²)` at every grid point within reach, walking outward
/// from the nearest point with a multiplicative recurrence.
fn add_kernel<T: Real>(acc: &mut [T], lo: T, step: T, h: T, x: T) {
    let g = acc.len();
    let j0 = nearest_index(x, lo, step, g);
    let d = step / h;
    let reach = T::lit(KERNEL_REACH);
    let q = (-d * d).exp();
    let u0 = (lo + step * T::count(j0) - x) / h;
    let peak = (-u0 * u0 / T::lit(2.0)).exp();
    acc[j0] += peak;
    for dir in [T::one(), -T::one()] {
        let u = u0 * dir;
        let mut k = peak;
        let mut a = (-u * d - d * d / T::lit(2.0)).exp();
        let mut v = u;
        let mut j = j0;
        loop {
            v += d;
            if v > reach {
                break;
            }
            if dir > T::zero() {
                if j + 1 >= g {
                    break;
                }
                j += 1;
            } else {
                if j == 0 {
                    break;
                }
                j -= 1;
            }
            k *= a;
            a *= q;
            acc[j] += k;
        }
    }
}

/// Gaussian KDE of `values` with bandwidth `h`, evaluated on `grid` and normalized to unit mass.
/// Falls back to a histogram at the nearest grid points when every kernel underflows.
pub fn kde_on_grid<T: Real>(values: &[T], h: T, grid: &[T]) -> Result<PdfEstimate<T>> {
    if values.is_empty() {
        return Err(Error::Empty("density estimate needs values"));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let g = grid.len();
    if g < 2 {
        return Err(Error::Invalid(
            "density grid needs at least two points".into(),
        ));
    }
    let lo = grid[0];
    let step = (grid[g - 1] - lo) / T::count(g - 1);
    if !(step > T::zero()) {
        return Err(Error::Invalid("density grid must be increasing".into()));
    }
    let mut mass = vec![T::zero(); g];
    let mut degenerate = false;
    if h > T::zero() {
        for &x in values {
            add_kernel(&mut mass, lo, step, h, x);
        }
    }
    let mut total: T = mass.iter().copied().sum();
    if !(total > T::zero()) || !total.is_finite() {
        mass.iter_mut().for_each(|m| *m = T::zero());
        for &x in values {
            mass[nearest_index(x, lo, step, g)] += T::one();
        }
        total = T::count(values.len());
        degenerate = true;
    }
    mass.iter_mut().for_each(|m| *m /= total);
    Ok(PdfEstimate {
        grid: grid.to_vec(),
        mass,
        degenerate,
    })
}

/// KDE with Silverman bandwidth on `g` points spanning `range`.
pub fn estimate_pdf<T: Real>(values: &[T], range: (T, T), g: usize) -> Result<PdfEstimate<T>> {
    if values.len() < 2 {
        return Err(Error::Empty("density estimate needs at least two values"));
    }
    if !(range.0 < range.1) {
        return Err(Error::Invalid("density range must satisfy lo < hi".into()));
    }
    let h = silverman_bandwidth(values);
    let mut p = kde_on_grid(values, h, &linspace(range.0, range.1, g))?;
    p.degenerate |= !(h > T::zero());
    Ok(p)
}

/// Densities of two samples on one grid covering both, extended by three of the larger bandwidth.
pub fn pair_pdfs<T: Real>(x: &[T], y: &[T], g: usize) -> Result<(PdfEstimate<T>, PdfEstimate<T>)> {
    if x.len() < 2 || y.len() < 2 {
        return Err(Error::Empty("density estimate needs at least two values"));
    }
    let (hx, hy) = (silverman_bandwidth(x), silverman_bandwidth(y));
    let fold = |(lo, hi): (T, T), &v: &T| (lo.min(v), hi.max(v));
    let (lo, hi) = x
        .iter()
        .chain(y)
        .fold((T::infinity(), T::neg_infinity()), fold);
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Invalid("density input is not finite".into()));
    }
    let pad = T::lit(3.0) * hx.max(hy);
    let (mut lo, mut hi) = (lo - pad, hi + pad);
    if !(lo < hi) {
        lo -= T::lit(0.5);
        hi += T::lit(0.5);
    }
    let grid = linspace(lo, hi, g);
    let mut p = kde_on_grid(x, hx, &grid)?;
    let mut q = kde_on_grid(y, hy, &grid)?;
    p.degenerate |= !(hx > T::zero());
    q.degenerate |= !(hy > T::zero());
    Ok((p, q))
}

/// Jensen-Shannon divergence in bits, in `[0, 1]`.
pub fn jsd<T: Real>(p: &PdfEstimate<T>, q: &PdfEstimate<T>) -> Result<T> {
    if p.grid != q.grid {
        return Err(Error::GridMismatch);
    }
    let half = T::lit(0.5);
    let mut kl_p = T::zero();
    let mut kl_q = T::zero();
    for (&a, &b) in p.mass.iter().zip(&q.mass) {
        let m = (a + b) * half;
        if a > T::zero() {
            kl_p += a * (a / m).log2();
        }
        if b > T::zero() {
            kl_q += b * (b / m).log2();
        }
    }
    Ok(((kl_p + kl_q) * half).max(T::zero()).min(T::one()))
}

/// `Σ min(p, q)` over the grid.
pub fn overlap_coefficient<T: Real>(p: &PdfEstimate<T>, q: &PdfEstimate<T>) -> Result<T> {
    if p.grid != q.grid {
        return Err(Error::GridMismatch);
    }
    Ok(p.mass
        .iter()
        .zip(&q.mass)
        .map(|(&a, &b)| a.min(b))
        .sum::<T>()
        .min(T::one()))
}

/// Overlap coefficient of the density estimates of two samples.
pub fn sample_overlap<T: Real>(x: &[T], y: &[T], g: usize) -> Result<T> {
    let (p, q) = pair_pdfs(x, y, g)?;
    overlap_coefficient(&p, &q)
}

/// JSD between the density estimates of two columns.
pub fn feature_jsd<T: Real>(x: &[T], y: &[T], g: usize) -> Result<T> {
    let (p, q) = pair_pdfs(x, y, g)?;
    jsd(&p, &q)
}

/// A stage dataset with its precomputed scatter statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct PreparedDataset<T> {
    pub matrix: Matrix<T>,
    pub scatter: Scatter<T>,
}

impl<T: Real> PreparedDataset<T> {
    pub fn new(matrix: Matrix<T>) -> Self {
        let scatter = Scatter::of(&matrix);
        Self { matrix, scatter }
    }

    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }
}

/// Selection outcome and JSD-FSI of one channel pair in one stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairScore<T> {
    pub selection: SelectionResult<T>,
    /// Features entering the score, in selection order (or catalog order for `all45`).
    pub features: Vec<usize>,
    pub jsd: Vec<T>,
    pub score: T,
}

/// Mean of `1 − JSD` over the given columns of both matrices.
pub fn jsd_fsi<T: Real>(
    dq: &Matrix<T>,
    dch: &Matrix<T>,
    features: &[usize],
    g: usize,
) -> Result<(T, Vec<T>)> {
    if features.is_empty() {
        return Err(Error::Empty("no features to compare"));
    }
    let jsds = features
        .iter()
        .map(|&j| feature_jsd(&dq.column(j), &dch.column(j), g))
        .collect::<Result<Vec<T>>>()?;
    let score = jsds.iter().map(|&v| T::one() - v).sum::<T>() / T::count(jsds.len());
    Ok((score, jsds))
}

/// Pooled z-scoring, feature selection and JSD-FSI of one pair.
pub fn score_pair<T: Real>(
    q: &PreparedDataset<T>,
    ch: &PreparedDataset<T>,
    cfg: &SimilarityConfig,
) -> Result<PairScore<T>> {
    if q.rows() < 2 || ch.rows() < 2 {
        return Err(Error::Empty(
            "each side of a pair needs at least two epochs",
        ));
    }
    let cov = q.scatter.pooled_covariance(&ch.scatter)?;
    let selection = choose_k_from_cov(&standardized_covariance(&cov))?;
    let features: Vec<usize> = match cfg.mode {
        FsiMode::Subset => selection.selected.clone(),
        FsiMode::All45 => (0..cov.rows()).collect(),
    };
    let (nq, nch) = (T::count(q.rows()), T::count(ch.rows()));
    let zscore = |m: &Matrix<T>, j: usize| -> Vec<T> {
        let mean = (q.scatter.means[j] * nq + ch.scatter.means[j] * nch) / (nq + nch);
        let sd = cov[(j, j)].max(T::zero()).sqrt();
        m.column(j)
            .into_iter()
            .map(|v| {
                if sd > T::zero() {
                    (v - mean) / sd
                } else {
                    T::zero()
                }
            })
            .collect()
    };
    let jsds = features
        .iter()
        .map(|&j| feature_jsd(&zscore(&q.matrix, j), &zscore(&ch.matrix, j), cfg.grid_size))
        .collect::<Result<Vec<T>>>()?;
    let score = jsds.iter().map(|&v| T::one() - v).sum::<T>() / T::count(jsds.len().max(1));
    Ok(PairScore {
        selection,
        features,
        jsd: jsds,
        score,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normal(rng: &mut ChaCha8Rng, n: usize, shift: f64) -> Vec<f64> {
        (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                shift + z
            })
            .collect()
    }

    fn direct_kde(values: &[f64], h: f64, grid: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = grid
            .iter()
            .map(|&g| {
                values
                    .iter()
                    .map(|&x| (-(g - x) * (g - x) / (2.0 * h * h)).exp())
                    .sum()
            })
            .collect();
        let s: f64 = out.iter().sum();
        out.iter_mut().for_each(|v| *v /= s);
        out
    }

    #[test]
    fn recurrence_matches_direct_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for (n, h) in [(50, 0.3), (200, 0.05), (30, 2.0), (10, 0.004)] {
            let x = normal(&mut rng, n, 0.0);
            let grid = linspace(-5.0, 5.0, 256);
            let p = kde_on_grid(&x, h, &grid).unwrap();
            let d = direct_kde(&x, h, &grid);
            for (a, b) in p.mass.iter().zip(&d) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn kde_moments_follow_sample() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let x = normal(&mut rng, 1000, 0.0);
        let (p, _) = pair_pdfs(&x, &x, DEFAULT_GRID).unwrap();
        let m: f64 = p.grid.iter().zip(&p.mass).map(|(g, w)| g * w).sum();
        let v: f64 = p
            .grid
            .iter()
            .zip(&p.mass)
            .map(|(g, w)| (g - m) * (g - m) * w)
            .sum();
        assert!((m - crate::stats::mean(&x)).abs() < 0.1);
        assert!((v.sqrt() - std_dev(&x)).abs() < 0.1);
        assert_abs_diff_eq!(p.mass.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn constant_column_is_a_flagged_spike() {
        let (p, q) = pair_pdfs(&[2.0; 5], &[2.0; 7], 256).unwrap();
        assert!(p.degenerate && q.degenerate);
        assert_eq!(p.mass.iter().filter(|&&m| m > 0.0).count(), 1);
        assert_eq!(jsd(&p, &q).unwrap(), 0.0);
        let (a, b) = pair_pdfs(&[0.0; 4], &[1.0; 4], 256).unwrap();
        assert_eq!(jsd(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn jsd_cases() {
        let grid = linspace(0.0, 1.0, 4);
        let p = PdfEstimate {
            grid: grid.clone(),
            mass: vec![0.5, 0.5, 0.0, 0.0],
            degenerate: false,
        };
        let q = PdfEstimate {
            grid: grid.clone(),
            mass: vec![0.0, 0.0, 0.5, 0.5],
            degenerate: false,
        };
        assert_eq!(jsd(&p, &p).unwrap(), 0.0);
        assert_eq!(jsd(&p, &q).unwrap(), 1.0);
        assert_eq!(overlap_coefficient(&p, &q).unwrap(), 0.0);
        let r = PdfEstimate {
            grid: linspace(0.0, 2.0, 4),
            ..p.clone()
        };
        assert!(matches!(jsd(&p, &r), Err(Error::GridMismatch)));
        // M = (¼, 0, ¾, 0)
        let s = PdfEstimate {
            grid,
            mass: vec![0.0, 0.0, 1.0, 0.0],
            degenerate: false,
        };
        let t = PdfEstimate {
            mass: vec![0.5, 0.0, 0.5, 0.0],
            ..s.clone()
        };
        let expected = 0.5 * ((4.0f64 / 3.0).log2() + 0.5 + 0.5 * (2.0f64 / 3.0).log2());
        assert_abs_diff_eq!(jsd(&s, &t).unwrap(), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(jsd(&t, &s).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn jsd_grows_with_separation() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let base = normal(&mut rng, 400, 0.0);
        let other = normal(&mut rng, 400, 0.0);
        let mut last = -1.0;
        for d in [0.0, 1.0, 2.0, 4.0] {
            let shifted: Vec<f64> = other.iter().map(|v| v + d).collect();
            let j = feature_jsd(&base, &shifted, 256).unwrap();
            assert!(j > last, "d={d}: {j} <= {last}");
            last = j;
        }
    }

    #[test]
    fn self_pair_scores_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let cols: Vec<Vec<f64>> = (0..6).map(|_| normal(&mut rng, 60, 0.0)).collect();
        let m = Matrix::from_columns(&cols).unwrap();
        let d = PreparedDataset::new(m);
        for mode in [FsiMode::Subset, FsiMode::All45] {
            let s = score_pair(
                &d,
                &d,
                &SimilarityConfig {
                    mode,
                    ..Default::default()
                },
            )
            .unwrap();
            assert_abs_diff_eq!(s.score, 1.0, epsilon = 1e-9);
        }
        let all = score_pair(
            &d,
            &d,
            &SimilarityConfig {
                mode: FsiMode::All45,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(all.features.len(), 6);
    }

    #[test]
    fn disjoint_pair_scores_zero() {
        let a =
            Matrix::from_columns(&[vec![0.0, 0.1, 0.2, 0.15], vec![1.0, 1.2, 1.1, 1.05]]).unwrap();
        let mut b = a.clone();
        for i in 0..b.rows() {
            for v in b.row_mut(i) {
                *v += 1000.0;
            }
        }
        let (pa, pb) = (PreparedDataset::new(a), PreparedDataset::new(b));
        let s = score_pair(&pa, &pb, &SimilarityConfig::default()).unwrap();
        assert_abs_diff_eq!(s.score, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn score_is_invariant_under_common_affine_maps() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let mk = |rng: &mut ChaCha8Rng, shift| {
            let cols: Vec<Vec<f64>> = (0..5).map(|_| normal(rng, 50, shift)).collect();
            Matrix::from_columns(&cols).unwrap()
        };
        let (a, b) = (mk(&mut rng, 0.0), mk(&mut rng, 0.4));
        let map = |m: &Matrix<f64>| {
            let mut o = m.clone();
            for i in 0..o.rows() {
                for (j, v) in o.row_mut(i).iter_mut().enumerate() {
                    *v = *v * (3.0 + j as f64) - 7.0;
                }
            }
            PreparedDataset::new(o)
        };
        let cfg = SimilarityConfig::default();
        let s1 = score_pair(
            &PreparedDataset::new(a.clone()),
            &PreparedDataset::new(b.clone()),
            &cfg,
        )
        .unwrap();
        let s2 = score_pair(&map(&a), &map(&b), &cfg).unwrap();
        assert_abs_diff_eq!(s1.score, s2.score, epsilon = 1e-6);
    }

    #[test]
    fn fsi_mode_parses() {
        assert_eq!("all45".parse::<FsiMode>().unwrap(), FsiMode::All45);
        assert!("every".parse::<FsiMode>().is_err());
    }
}
