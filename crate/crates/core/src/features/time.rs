//! The 18 time-domain epoch features.
//!
//! Amplitude-dependent members (std, IQR, max first derivative, Hjorth activity)
//! are computed on the epoch divided by its maximum absolute value.

use serde::{Deserialize, Serialize};

use super::Flagged;
use crate::catalog::idx;
use crate::linalg::{symmetric_eigenvalues, Matrix};
use crate::scalar::Real;
use crate::stats;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TimeFeatureConfig {
    /// Template length for approximate and sample entropy.
    pub entropy_dimension: usize,
    /// Tolerance as a multiple of the epoch's standard deviation.
    pub entropy_r_coeff: f64,
    pub svd_embedding: usize,
    pub svd_delay: usize,
    pub perm_order: usize,
    pub perm_delay: usize,
    pub higuchi_kmax: usize,
    /// Number of log-spaced DFA window lengths in `[4, N/4]` (before de-duplication).
    pub dfa_windows: usize,
}

impl Default for TimeFeatureConfig {
    fn default() -> Self {
        Self {
            entropy_dimension: 2,
            entropy_r_coeff: 0.2,
            svd_embedding: 3,
            svd_delay: 1,
            perm_order: 3,
            perm_delay: 1,
            higuchi_kmax: 10,
            dfa_windows: 10,
        }
    }
}

/// `x / max|x|`; all zeros stay zeros.
pub fn max_normalized<T: Real>(x: &[T]) -> Vec<T> {
    let m = x.iter().fold(T::zero(), |a, &v| a.max(v.abs()));
    if m == T::zero() {
        return vec![T::zero(); x.len()];
    }
    x.iter().map(|&v| v / m).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DescriptiveStats<T> {
    pub std: T,
    pub iqr: T,
    pub skewness: Flagged<T>,
    pub kurtosis: Flagged<T>,
    pub max_first_derivative: T,
    pub zero_crossings: T,
}

/// `x_norm` is the max-normalized epoch, `x` the raw one.
pub fn descriptive_stats<T: Real>(x: &[T], x_norm: &[T]) -> DescriptiveStats<T> {
    let (sk, ku) = stats::skew_kurtosis(x);
    let flat = stats::variance(x_norm) == T::zero() || (sk == T::zero() && ku == T::zero());
    let max_d = x_norm
        .windows(2)
        .fold(T::zero(), |a, w| a.max((w[1] - w[0]).abs()));
    DescriptiveStats {
        std: stats::std_dev(x_norm),
        iqr: stats::iqr(x_norm),
        skewness: Flagged::new(sk, flat),
        kurtosis: Flagged::new(ku, flat),
        max_first_derivative: max_d,
        zero_crossings: T::count(zero_crossings(x)),
    }
}

/// Sign changes between consecutive non-zero samples.
pub fn zero_crossings<T: Real>(x: &[T]) -> usize {
    let mut prev: Option<bool> = None;
    let mut n = 0;
    for &v in x {
        if v == T::zero() {
            continue;
        }
        let pos = v > T::zero();
        if prev.is_some_and(|p| p != pos) {
            n += 1;
        }
        prev = Some(pos);
    }
    n
}

/// Template match counts shared by approximate and sample entropy.
#[derive(Clone, Debug, PartialEq)]
pub struct MatchCounts {
    /// Per length-`d` template (N − d + 1 of them), matches including itself.
    pub c_d: Vec<u64>,
    /// Per length-`d+1` template (N − d of them), matches including itself.
    pub c_d1: Vec<u64>,
    /// Unordered pairs among the first N − d templates matching on `d` points.
    pub pairs_d: u64,
    /// Unordered pairs matching on `d + 1` points.
    pub pairs_d1: u64,
}

/// Chebyshev-distance template matching within tolerance `r`.
///
/// Templates are sorted by their first point, so each one is only compared with
/// the run of successors whose first point lies within `r`.
pub fn match_counts<T: Real>(x: &[T], d: usize, r: T) -> MatchCounts {
    let n = x.len();
    assert!(
        d >= 1 && n > d,
        "need more samples than the template length"
    );
    let m = n - d + 1;
    let (order, cd, cd1) = match d {
        2 => strip_counts(x, r).unwrap_or_else(|| sorted_counts(x, d, r)),
        _ => sorted_counts(x, d, r),
    };
    let last = order
        .iter()
        .position(|&s| s == m - 1)
        .expect("last template present");
    let mut c_d = vec![0u64; m];
    let mut tmp = vec![0u64; m];
    for (pos, &s) in order.iter().enumerate() {
        c_d[s] = u64::from(cd[pos]) + 1;
        tmp[s] = u64::from(cd1[pos]) + 1;
    }
    let all_d: u64 = cd.iter().map(|&c| u64::from(c)).sum::<u64>() / 2;
    let pairs_d1: u64 = cd1.iter().map(|&c| u64::from(c)).sum::<u64>() / 2;
    tmp.truncate(m - 1);
    MatchCounts {
        c_d,
        c_d1: tmp,
        // pairs involving the last template have no (d+1)-th point
        pairs_d: all_d - u64::from(cd[last]),
        pairs_d1,
    }
}

fn sorted_counts<T: Real>(x: &[T], d: usize, r: T) -> (Vec<usize>, Vec<u64>, Vec<u64>) {
    let n = x.len();
    let m = n - d + 1;
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        x[a].partial_cmp(&x[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    // coordinate k of each template in sorted order; the last template has no point d
    let coords: Vec<Vec<T>> = (0..=d)
        .map(|k| {
            order
                .iter()
                .map(|&s| if s + k < n { x[s + k] } else { T::nan() })
                .collect()
        })
        .collect();
    let mut cd = vec![0u64; m];
    let mut cd1 = vec![0u64; m];
    count_all(&coords, r, &mut cd, &mut cd1);
    (order, cd, cd1)
}

/// Counts for `d = 2`: templates are bucketed into strips of width just over `r`
/// on their first point and sorted by their second point within a strip, so a
/// template is only compared with its own strip and the next one, inside an
/// `r`-window on the second point.
/// `None` when the strips would outnumber the templates by far.
fn strip_counts<T: Real>(x: &[T], r: T) -> Option<(Vec<usize>, Vec<u64>, Vec<u64>)> {
    let n = x.len();
    let m = n - 1;
    let lo = x[..m].iter().fold(T::infinity(), |a, &b| a.min(b));
    let hi = x[..m].iter().fold(T::neg_infinity(), |a, &b| a.max(b));
    let w = r * T::lit(1.0 + 1e-6);
    let span = ((hi - lo) / w).floor().as_f64();
    if !(span.is_finite() && span <= 4.0 * m as f64) {
        return None;
    }
    let strips = span as usize + 1;
    let strip: Vec<usize> = x[..m]
        .iter()
        .map(|&v| (((v - lo) / w).floor().as_f64() as usize).min(strips - 1))
        .collect();
    // counting sort by strip, then by second point inside each strip
    let mut starts = vec![0usize; strips + 1];
    for &s in &strip {
        starts[s + 1] += 1;
    }
    for s in 0..strips {
        starts[s + 1] += starts[s];
    }
    let mut fill = starts.clone();
    let mut order = vec![0usize; m];
    for (t, &s) in strip.iter().enumerate() {
        order[fill[s]] = t;
        fill[s] += 1;
    }
    for s in 0..strips {
        order[starts[s]..starts[s + 1]].sort_unstable_by(|&a, &b| {
            x[a + 1]
                .partial_cmp(&x[b + 1])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
    }
    let coords: Vec<Vec<T>> = (0..3)
        .map(|k| {
            order
                .iter()
                .map(|&s| if s + k < n { x[s + k] } else { T::nan() })
                .collect()
        })
        .collect();
    let mut cd = vec![0u64; m];
    let mut cd1 = vec![0u64; m];
    scan_strips(&coords, &starts, r, &mut cd, &mut cd1);
    Some((order, cd, cd1))
}

fn scan_strips<T: Real>(
    coords: &[Vec<T>],
    starts: &[usize],
    r: T,
    cd: &mut [u64],
    cd1: &mut [u64],
) {
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx2") {
        // SAFETY: the CPU supports AVX2, checked just above.
        unsafe { scan_strips_avx2(coords, starts, r, cd, cd1) };
        return;
    }
    scan_strips_generic(coords, starts, r, cd, cd1);
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn scan_strips_avx2<T: Real>(
    coords: &[Vec<T>],
    starts: &[usize],
    r: T,
    cd: &mut [u64],
    cd1: &mut [u64],
) {
    scan_strips_generic(coords, starts, r, cd, cd1);
}

#[inline(always)]
fn scan_strips_generic<T: Real>(
    coords: &[Vec<T>],
    starts: &[usize],
    r: T,
    cd: &mut [u64],
    cd1: &mut [u64],
) {
    let a1 = &coords[1];
    let strips = starts.len() - 1;
    for s in 0..strips {
        let (bs, be) = (starts[s], starts[s + 1]);
        let (ns, ne) = if s + 1 < strips {
            (be, starts[s + 2])
        } else {
            (be, be)
        };
        let mut from = ns;
        let mut to = ns;
        for i in bs..be {
            let end = i + 1 + a1[i + 1..be].partition_point(|&v| v - a1[i] <= r);
            let (s1, s2) = scan3(coords, i, i + 1, end, r, cd, cd1);
            cd[i] += s1;
            cd1[i] += s2;
            // the next strip's window only moves forward as a1[i] grows
            while from < ne && a1[i] - a1[from] > r {
                from += 1;
            }
            to = to.max(from);
            while to < ne && a1[to] - a1[i] <= r {
                to += 1;
            }
            if from < to {
                let (s1, s2) = scan3(coords, i, from, to, r, cd, cd1);
                cd[i] += s1;
                cd1[i] += s2;
            }
        }
    }
}

#[inline(always)]
fn scan3<T: Real>(
    coords: &[Vec<T>],
    i: usize,
    from: usize,
    to: usize,
    r: T,
    cd: &mut [u64],
    cd1: &mut [u64],
) -> (u64, u64) {
    let (p0, p1, p2) = (coords[0][i], coords[1][i], coords[2][i]);
    let (b0, b1, b2) = (
        &coords[0][from..to],
        &coords[1][from..to],
        &coords[2][from..to],
    );
    let (c1, c2) = (&mut cd[from..to], &mut cd1[from..to]);
    let (mut s1, mut s2) = (0u64, 0u64);
    for ((((&v0, &v1), &v2), k1), k2) in b0
        .iter()
        .zip(b1)
        .zip(b2)
        .zip(c1.iter_mut())
        .zip(c2.iter_mut())
    {
        let m1 = u64::from((p0 - v0).abs() <= r) & u64::from((p1 - v1).abs() <= r);
        let m2 = m1 & u64::from((p2 - v2).abs() <= r);
        *k1 += m1;
        *k2 += m2;
        s1 += m1;
        s2 += m2;
    }
    (s1, s2)
}

fn count_all<T: Real>(coords: &[Vec<T>], r: T, cd: &mut [u64], cd1: &mut [u64]) {
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx2") {
        // SAFETY: the CPU supports AVX2, checked just above.
        unsafe { count_all_avx2(coords, r, cd, cd1) };
        return;
    }
    count_all_generic(coords, r, cd, cd1);
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn count_all_avx2<T: Real>(coords: &[Vec<T>], r: T, cd: &mut [u64], cd1: &mut [u64]) {
    count_all_generic(coords, r, cd, cd1);
}

#[inline(always)]
fn count_all_generic<T: Real>(coords: &[Vec<T>], r: T, cd: &mut [u64], cd1: &mut [u64]) {
    let a0 = &coords[0];
    for i in 0..a0.len() {
        let end = i + 1 + a0[i + 1..].partition_point(|&v| v - a0[i] <= r);
        let (s1, s2) = scan_pairs(coords, i, end, r, cd, cd1);
        cd[i] += s1;
        cd1[i] += s2;
    }
}

fn scan_pairs<T: Real>(
    coords: &[Vec<T>],
    i: usize,
    end: usize,
    r: T,
    cd: &mut [u64],
    cd1: &mut [u64],
) -> (u64, u64) {
    let d = coords.len() - 1;
    let (mut s1, mut s2) = (0u64, 0u64);
    for j in i + 1..end {
        if (1..d).all(|k| (coords[k][i] - coords[k][j]).abs() <= r) {
            cd[j] += 1;
            s1 += 1;
            if (coords[d][i] - coords[d][j]).abs() <= r {
                cd1[j] += 1;
                s2 += 1;
            }
        }
    }
    (s1, s2)
}

fn tolerance<T: Real>(x: &[T], coeff: f64) -> T {
    stats::std_dev(x) * T::lit(coeff)
}

fn phi(counts: &[u64]) -> f64 {
    let m = counts.len() as f64;
    counts.iter().map(|&c| (c as f64 / m).ln()).sum::<f64>() / m
}

/// Approximate entropy (natural log, self-matches included), from precomputed counts.
pub fn approximate_entropy_from(counts: &MatchCounts) -> f64 {
    phi(&counts.c_d) - phi(&counts.c_d1)
}

/// Sample entropy `−ln(A/B)` from precomputed counts; flagged 0 when `A` or `B` is 0.
pub fn sample_entropy_from(counts: &MatchCounts) -> Flagged<f64> {
    if counts.pairs_d == 0 || counts.pairs_d1 == 0 {
        return Flagged::degenerate(0.0);
    }
    Flagged::ok(-(counts.pairs_d1 as f64 / counts.pairs_d as f64).ln())
}

/// Approximate entropy with `r = r_coeff · SD(x)`; constant or too-short input gives a flagged 0.
pub fn approximate_entropy<T: Real>(x: &[T], d: usize, r_coeff: f64) -> Flagged<T> {
    let r = tolerance(x, r_coeff);
    if x.len() <= d + 1 || r <= T::zero() {
        return Flagged::degenerate(T::zero());
    }
    Flagged::ok(T::lit(approximate_entropy_from(&match_counts(x, d, r))))
}

pub fn sample_entropy<T: Real>(x: &[T], d: usize, r_coeff: f64) -> Flagged<T> {
    let r = tolerance(x, r_coeff);
    if x.len() <= d + 1 || r <= T::zero() {
        return Flagged::degenerate(T::zero());
    }
    sample_entropy_from(&match_counts(x, d, r)).map(T::lit)
}

/// Shannon entropy (bits) of the normalized singular values of the delay-embedding matrix.
pub fn svd_entropy<T: Real>(x: &[T], d_e: usize, tau: usize) -> Flagged<T> {
    if d_e == 0 || x.len() < (d_e - 1) * tau + 2 {
        return Flagged::degenerate(T::zero());
    }
    let rows = x.len() - (d_e - 1) * tau;
    let mut gram = Matrix::zeros(d_e, d_e);
    for a in 0..d_e {
        for b in a..d_e {
            let s: T = (0..rows).map(|i| x[i + a * tau] * x[i + b * tau]).sum();
            gram[(a, b)] = s;
            gram[(b, a)] = s;
        }
    }
    let Ok(eig) = symmetric_eigenvalues(&gram) else {
        return Flagged::degenerate(T::zero());
    };
    let sv: Vec<T> = eig.iter().map(|&l| l.max(T::zero()).sqrt()).collect();
    let total: T = sv.iter().copied().sum();
    if total <= T::zero() {
        return Flagged::degenerate(T::zero());
    }
    Flagged::ok(shannon_bits(sv.iter().map(|&s| s / total)))
}

fn shannon_bits<T: Real>(p: impl Iterator<Item = T>) -> T {
    let h: T = p.filter(|&q| q > T::zero()).map(|q| -q * q.log2()).sum();
    h.max(T::zero())
}

/// Ordinal pattern of `x[i], x[i+τ], …` as a rank code; equal values rank by position.
fn ordinal_code<T: Real>(x: &[T], start: usize, order: usize, tau: usize) -> usize {
    let mut idx: Vec<usize> = (0..order).collect();
    idx.sort_by(|&a, &b| {
        x[start + a * tau]
            .partial_cmp(&x[start + b * tau])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    idx.iter().fold(0, |acc, &k| acc * order + k)
}

/// Permutation entropy in bits (not normalized by `log2(D!)`).
pub fn permutation_entropy<T: Real>(x: &[T], order: usize, tau: usize) -> T {
    if order < 2 || x.len() < (order - 1) * tau + 1 {
        return T::zero();
    }
    let count = x.len() - (order - 1) * tau;
    let mut hist = std::collections::HashMap::new();
    for i in 0..count {
        *hist.entry(ordinal_code(x, i, order, tau)).or_insert(0usize) += 1;
    }
    let mut freqs: Vec<usize> = hist.into_values().collect();
    freqs.sort_unstable();
    shannon_bits(freqs.into_iter().map(|c| T::count(c) / T::count(count)))
}

/// Suffix automaton over a binary alphabet.
struct SuffixAutomaton {
    next: Vec<[u32; 2]>,
    link: Vec<u32>,
    len: Vec<u32>,
    last: u32,
}

const NONE: u32 = u32::MAX;

impl SuffixAutomaton {
    fn with_capacity(n: usize) -> Self {
        let mut s = Self {
            next: Vec::with_capacity(2 * n + 1),
            link: Vec::with_capacity(2 * n + 1),
            len: Vec::with_capacity(2 * n + 1),
            last: 0,
        };
        s.push_state(0, NONE, [NONE; 2]);
        s
    }

    fn push_state(&mut self, len: u32, link: u32, next: [u32; 2]) -> u32 {
        self.next.push(next);
        self.link.push(link);
        self.len.push(len);
        (self.next.len() - 1) as u32
    }

    fn extend(&mut self, c: usize) {
        let cur = self.push_state(self.len[self.last as usize] + 1, NONE, [NONE; 2]);
        let mut p = self.last;
        while p != NONE && self.next[p as usize][c] == NONE {
            self.next[p as usize][c] = cur;
            p = self.link[p as usize];
        }
        if p == NONE {
            self.link[cur as usize] = 0;
        } else {
            let q = self.next[p as usize][c];
            if self.len[p as usize] + 1 == self.len[q as usize] {
                self.link[cur as usize] = q;
            } else {
                let clone = self.push_state(
                    self.len[p as usize] + 1,
                    self.link[q as usize],
                    self.next[q as usize],
                );
                while p != NONE && self.next[p as usize][c] == q {
                    self.next[p as usize][c] = clone;
                    p = self.link[p as usize];
                }
                self.link[q as usize] = clone;
                self.link[cur as usize] = clone;
            }
        }
        self.last = cur;
    }

    /// The state holding the length-`len` string last read into `s`, after extensions
    /// may have moved it to a clone.
    fn relocate(&self, mut s: u32, len: usize) -> u32 {
        while s != 0 && self.len[self.link[s as usize] as usize] as usize >= len {
            s = self.link[s as usize];
        }
        s
    }
}

/// LZ76 phrase count of a binary sequence.
///
/// Each phrase is the longest prefix of the remainder that already occurs in the
/// history (overlap allowed) plus one new symbol; a final phrase that only copies
/// up to the end of the sequence is not counted.
pub fn lz76_phrase_count(bits: &[u8]) -> usize {
    let n = bits.len();
    let mut sam = SuffixAutomaton::with_capacity(n);
    let mut built = 0;
    let (mut i, mut c) = (0, 0);
    while i < n {
        // walk the automaton of the history along the phrase
        let (mut state, mut l) = (0u32, 0);
        loop {
            if i + l >= n {
                return c;
            }
            while built < i + l {
                sam.extend(bits[built] as usize);
                built += 1;
                state = sam.relocate(state, l);
            }
            let next = sam.next[state as usize][bits[i + l] as usize];
            if next == NONE {
                break;
            }
            state = next;
            l += 1;
        }
        c += 1;
        i += l + 1;
    }
    c
}

/// Median-threshold binarization: strictly above the median is 1.
pub fn binarize_median<T: Real>(x: &[T]) -> Vec<u8> {
    let med = stats::median(x);
    x.iter().map(|&v| u8::from(v > med)).collect()
}

/// Normalized LZ76 complexity `c(N)·log2(N)/N` of the median-binarized epoch.
pub fn lempel_ziv<T: Real>(x: &[T]) -> T {
    let n = x.len();
    if n < 2 {
        return T::zero();
    }
    let c = lz76_phrase_count(&binarize_median(x));
    T::count(c) * T::count(n).log2() / T::count(n)
}

/// Integer window lengths, log-spaced over `[4, n/4]`, de-duplicated.
pub fn dfa_window_lengths(n: usize, count: usize) -> Vec<usize> {
    let hi = n / 4;
    if hi < 4 || count == 0 {
        return Vec::new();
    }
    let (a, b) = (4f64.ln(), (hi as f64).ln());
    let mut out: Vec<usize> = (0..count)
        .map(|k| {
            let t = if count == 1 {
                0.0
            } else {
                k as f64 / (count - 1) as f64
            };
            ((a + t * (b - a)).exp().round() as usize).clamp(4, hi)
        })
        .collect();
    out.dedup();
    out
}

/// RMS of the linearly detrended profile over non-overlapping windows of length `w`.
pub fn dfa_fluctuation<T: Real>(profile: &[T], w: usize) -> T {
    let segs = profile.len() / w;
    let tbar = T::count(w - 1) / T::lit(2.0);
    let stt = T::count(w) * (T::count(w) * T::count(w) - T::one()) / T::lit(12.0);
    let mut total = T::zero();
    for s in 0..segs {
        let seg = &profile[s * w..(s + 1) * w];
        let ybar = stats::mean(seg);
        let (mut sty, mut syy) = (T::zero(), T::zero());
        for (t, &y) in seg.iter().enumerate() {
            let dy = y - ybar;
            sty += (T::count(t) - tbar) * dy;
            syy += dy * dy;
        }
        total += (syy - sty * sty / stt).max(T::zero());
    }
    (total / T::count(segs * w)).sqrt()
}

/// Detrended fluctuation analysis exponent; flagged 0 on zero variance or too-short input.
pub fn dfa_exponent<T: Real>(x: &[T], windows: usize) -> Flagged<T> {
    let ns = dfa_window_lengths(x.len(), windows);
    if ns.len() < 2 {
        return Flagged::degenerate(T::zero());
    }
    let m = stats::mean(x);
    let mut acc = T::zero();
    let profile: Vec<T> = x
        .iter()
        .map(|&v| {
            acc += v - m;
            acc
        })
        .collect();
    let mut lx = Vec::with_capacity(ns.len());
    let mut ly = Vec::with_capacity(ns.len());
    for &w in &ns {
        let f = dfa_fluctuation(&profile, w);
        if !(f > T::zero()) {
            return Flagged::degenerate(T::zero());
        }
        lx.push(T::count(w).ln());
        ly.push(f.ln());
    }
    Flagged::ok(stats::linear_fit(&lx, &ly).0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hjorth<T> {
    pub activity: T,
    pub mobility: T,
    pub complexity: T,
    pub degenerate: bool,
}

/// Hjorth parameters with one-sample differences; pass the max-normalized epoch.
pub fn hjorth<T: Real>(x: &[T]) -> Hjorth<T> {
    let zero = Hjorth {
        activity: T::zero(),
        mobility: T::zero(),
        complexity: T::zero(),
        degenerate: true,
    };
    if x.len() < 3 {
        return zero;
    }
    let dx: Vec<T> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let ddx: Vec<T> = dx.windows(2).map(|w| w[1] - w[0]).collect();
    let (v0, v1, v2) = (
        stats::variance(x),
        stats::variance(&dx),
        stats::variance(&ddx),
    );
    if v0 == T::zero() {
        return zero;
    }
    let mobility = (v1 / v0).sqrt();
    if v1 == T::zero() {
        return Hjorth {
            activity: v0,
            mobility,
            complexity: T::zero(),
            degenerate: true,
        };
    }
    Hjorth {
        activity: v0,
        mobility,
        complexity: (v2 / v1).sqrt() / mobility,
        degenerate: false,
    }
}

/// Katz fractal dimension on amplitude distances; a constant epoch gives a flagged 1.
pub fn katz_fd<T: Real>(x: &[T]) -> Flagged<T> {
    if x.len() < 2 {
        return Flagged::degenerate(T::one());
    }
    let l: T = x.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    let d = x.iter().fold(T::zero(), |a, &v| a.max((v - x[0]).abs()));
    if l == T::zero() || d == T::zero() {
        return Flagged::degenerate(T::one());
    }
    let n = T::count(x.len() - 1).log10();
    Flagged::ok(n / (n + (d / l).log10()))
}

/// Higuchi fractal dimension: slope of `ln L(k)` against `ln(1/k)`, `k = 1..=kmax`,
/// with `L(k)` the mean curve length over the `k` start offsets.
pub fn higuchi_fd<T: Real>(x: &[T], kmax: usize) -> Flagged<T> {
    let n = x.len();
    if kmax < 2 || n < kmax + 2 {
        return Flagged::degenerate(T::zero());
    }
    let mut lx = Vec::with_capacity(kmax);
    let mut ly = Vec::with_capacity(kmax);
    for k in 1..=kmax {
        let mut lk = T::zero();
        for m in 0..k {
            let steps = (n - 1 - m) / k;
            if steps == 0 {
                continue;
            }
            let mut s = T::zero();
            for i in 1..=steps {
                s += (x[m + i * k] - x[m + (i - 1) * k]).abs();
            }
            let norm = T::count(n - 1) / (T::count(steps) * T::count(k));
            lk += s * norm / T::count(k);
        }
        lk /= T::count(k);
        if !(lk > T::zero()) {
            return Flagged::degenerate(T::zero());
        }
        lx.push((T::one() / T::count(k)).ln());
        ly.push(lk.ln());
    }
    Flagged::ok(stats::linear_fit(&lx, &ly).0)
}

/// Petrosian fractal dimension from sign changes of the first difference.
pub fn petrosian_fd<T: Real>(x: &[T]) -> T {
    let n = x.len();
    if n < 3 {
        return T::one();
    }
    let dx: Vec<T> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let changes = dx.windows(2).filter(|w| w[0] * w[1] < T::zero()).count();
    let nf = T::count(n);
    let l = nf.log10();
    l / (l + (nf / (nf + T::lit(0.4) * T::count(changes))).log10())
}

/// Writes the 18 time-domain features into `out[0..18]`, returning the degenerate mask.
pub fn time_features<T: Real>(x: &[T], cfg: &TimeFeatureConfig, out: &mut [T]) -> u64 {
    let mut flags = 0u64;
    let mut set = |j: usize, f: Flagged<T>, out: &mut [T]| {
        out[j] = f.value;
        if f.degenerate {
            flags |= 1 << j;
        }
    };
    let xn = max_normalized(x);
    let ds = descriptive_stats(x, &xn);
    set(idx::STD, Flagged::ok(ds.std), out);
    set(idx::SKEWNESS, ds.skewness, out);
    set(idx::KURTOSIS, ds.kurtosis, out);
    set(
        idx::MAX_FIRST_DERIVATIVE,
        Flagged::ok(ds.max_first_derivative),
        out,
    );
    set(idx::IQR, Flagged::ok(ds.iqr), out);
    set(idx::ZERO_CROSSINGS, Flagged::ok(ds.zero_crossings), out);
    set(idx::DFA, dfa_exponent(x, cfg.dfa_windows), out);

    let d = cfg.entropy_dimension;
    let r = tolerance(x, cfg.entropy_r_coeff);
    if x.len() > d + 1 && r > T::zero() {
        let counts = match_counts(x, d, r);
        set(
            idx::APEN,
            Flagged::ok(T::lit(approximate_entropy_from(&counts))),
            out,
        );
        set(idx::SAMPEN, sample_entropy_from(&counts).map(T::lit), out);
    } else {
        set(idx::APEN, Flagged::degenerate(T::zero()), out);
        set(idx::SAMPEN, Flagged::degenerate(T::zero()), out);
    }
    set(
        idx::SVDEN,
        svd_entropy(x, cfg.svd_embedding, cfg.svd_delay),
        out,
    );
    set(
        idx::PERMEN,
        Flagged::ok(permutation_entropy(x, cfg.perm_order, cfg.perm_delay)),
        out,
    );
    set(idx::LZ, Flagged::ok(lempel_ziv(x)), out);
    let h = hjorth(&xn);
    set(
        idx::HJORTH_ACTIVITY,
        Flagged::new(h.activity, h.degenerate),
        out,
    );
    set(
        idx::HJORTH_MOBILITY,
        Flagged::new(h.mobility, h.degenerate),
        out,
    );
    set(
        idx::HJORTH_COMPLEXITY,
        Flagged::new(h.complexity, h.degenerate),
        out,
    );
    set(idx::KATZ, katz_fd(x), out);
    set(idx::HIGUCHI, higuchi_fd(x, cfg.higuchi_kmax), out);
    set(idx::PETROSIAN, Flagged::ok(petrosian_fd(x)), out);
    flags
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn noise(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    #[test]
    fn strip_matching_agrees_with_sorted_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (n, smooth) in [(500, false), (2000, true), (3000, true)] {
            let mut x = noise(&mut rng, n);
            if smooth {
                for i in 1..n {
                    x[i] = 0.9 * x[i - 1] + 0.1 * x[i];
                }
            }
            let r = stats::std_dev(&x) * 0.2;
            let (o1, a1, b1) = strip_counts(&x, r).unwrap();
            let (o2, a2, b2) = sorted_counts(&x, 2, r);
            let by_template = |o: &[usize], c: &[u64]| {
                let mut v = vec![0; c.len()];
                for (pos, &t) in o.iter().enumerate() {
                    v[t] = c[pos];
                }
                v
            };
            assert_eq!(by_template(&o1, &a1), by_template(&o2, &a2));
            assert_eq!(by_template(&o1, &b1), by_template(&o2, &b2));
        }
    }

    fn sine(n: usize, cycles_per_sample: f64) -> Vec<f64> {
        (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * cycles_per_sample * i as f64).sin())
            .collect()
    }

    fn median(mut v: Vec<f64>) -> f64 {
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    }

    #[test]
    fn alternating_sequence_stats() {
        let x: Vec<f64> = (0..10)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let xn = max_normalized(&x);
        let ds = descriptive_stats(&x, &xn);
        assert_eq!(ds.zero_crossings, 9.0);
        assert_abs_diff_eq!(ds.skewness.value, 0.0, epsilon = 1e-12);
        let ds = descriptive_stats(&[0.0, 0.5, 1.0], &[0.0, 0.5, 1.0]);
        assert_abs_diff_eq!(ds.max_first_derivative, 0.5);
    }

    #[test]
    fn zero_crossings_skip_exact_zeros() {
        assert_eq!(zero_crossings(&[1.0, 0.0, -1.0, 0.0, 0.0, -2.0, 3.0]), 2);
        assert_eq!(zero_crossings(&[0.0, 0.0]), 0);
    }

    #[test]
    fn constant_epoch_fallbacks() {
        let x = vec![3.0f64; 128];
        let mut out = [0.0f64; 18];
        let flags = time_features(&x, &TimeFeatureConfig::default(), &mut out);
        assert!(out.iter().all(|v| v.is_finite()));
        assert_eq!(out[idx::STD], 0.0);
        assert_eq!(out[idx::APEN], 0.0);
        assert_eq!(out[idx::KATZ], 1.0);
        assert_eq!(out[idx::HIGUCHI], 0.0);
        assert_eq!(out[idx::PETROSIAN], 1.0);
        assert_eq!(out[idx::PERMEN], 0.0);
        for j in [
            idx::SKEWNESS,
            idx::APEN,
            idx::SAMPEN,
            idx::DFA,
            idx::HJORTH_ACTIVITY,
            idx::KATZ,
            idx::HIGUCHI,
        ] {
            assert!(flags >> j & 1 == 1, "{j}");
        }
    }

    #[test]
    fn gaussian_kurtosis_near_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = noise(&mut rng, 20000);
        let (_, k) = stats::skew_kurtosis(&x);
        assert!(k.abs() < 0.2);
    }

    #[test]
    fn entropy_orderings() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut ap = Vec::new();
        let mut sa = Vec::new();
        for _ in 0..100 {
            let u: Vec<f64> = (0..300).map(|_| rng.gen::<f64>()).collect();
            let s = sine(300, 0.05);
            ap.push(approximate_entropy(&u, 2, 0.2).value - approximate_entropy(&s, 2, 0.2).value);
            sa.push(sample_entropy(&u, 2, 0.2).value - sample_entropy(&s, 2, 0.2).value);
        }
        assert!(median(ap) > 0.0);
        assert!(median(sa) > 0.0);
    }

    #[test]
    fn svd_entropy_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = noise(&mut rng, 2000);
        let s = sine(2000, 0.01);
        assert!(svd_entropy(&s, 3, 1).value < svd_entropy(&n, 3, 1).value);
        let ramp: Vec<f64> = (0..500).map(|i| 1.0 + i as f64).collect();
        assert!(svd_entropy(&ramp, 3, 1).value < 0.3);
        assert!(svd_entropy(&[0.0; 10], 3, 1).degenerate);
        // noise has nearly equal singular values: close to the log2(3) maximum
        assert!((svd_entropy(&noise(&mut rng, 20000), 3, 1).value - 3f64.log2()).abs() < 0.01);
    }

    #[test]
    fn permutation_entropy_cases() {
        let up: Vec<f64> = (0..50).map(f64::from).collect();
        assert_eq!(permutation_entropy(&up, 3, 1), 0.0);
        assert_eq!(permutation_entropy(&[2.0; 20], 3, 1), 0.0);
        let all_six = [0.0, 1.0, 5.0, 4.0, 3.0, 7.0, 2.0, 6.0];
        assert_abs_diff_eq!(
            permutation_entropy(&all_six, 3, 1),
            6f64.log2(),
            epsilon = 1e-12
        );
        let codes: std::collections::BTreeSet<usize> =
            (0..6).map(|i| ordinal_code(&all_six, i, 3, 1)).collect();
        assert_eq!(codes.len(), 6);
    }

    #[test]
    fn lz76_known_parses() {
        assert_eq!(lz76_phrase_count(&[0; 16]), 1);
        assert_eq!(lz76_phrase_count(&[0, 1, 0, 1, 0, 1, 0, 1, 0, 1]), 2);
        // 0 | 001 | 10 | 100 | 1000 | 101  (last phrase copies to the end)
        assert_eq!(
            lz76_phrase_count(&[0, 0, 0, 1, 1, 0, 1, 0, 0, 1, 0, 0, 0, 1, 0, 1]),
            5
        );
        let x = [0.0; 32];
        assert_abs_diff_eq!(lempel_ziv(&x), 5.0 / 32.0);
    }

    #[test]
    fn lz_random_above_periodic() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let diffs: Vec<f64> = (0..100)
            .map(|_| {
                let r = noise(&mut rng, 1000);
                lempel_ziv(&r) - lempel_ziv(&sine(1000, 0.013))
            })
            .collect();
        assert!(median(diffs) > 0.0);
    }

    #[test]
    fn dfa_windows_are_log_spaced() {
        let w = dfa_window_lengths(7680, 10);
        assert_eq!(w.first(), Some(&4));
        assert_eq!(w.last(), Some(&1920));
        assert!(w.windows(2).all(|p| p[0] < p[1]));
        assert!(dfa_window_lengths(15, 10).is_empty());
    }

    #[test]
    fn dfa_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let white: Vec<f64> = (0..50)
            .map(|_| dfa_exponent(&noise(&mut rng, 7680), 10).value)
            .collect();
        let a = median(white);
        assert!((a - 0.5).abs() < 0.05, "white {a}");
        let brown: Vec<f64> = (0..20)
            .map(|_| {
                let mut acc = 0.0;
                let walk: Vec<f64> = noise(&mut rng, 7680)
                    .into_iter()
                    .map(|v| {
                        acc += v;
                        acc
                    })
                    .collect();
                dfa_exponent(&walk, 10).value
            })
            .collect();
        let b = median(brown);
        assert!((b - 1.5).abs() < 0.1, "brown {b}");
        let anti: Vec<f64> = (0..20)
            .map(|_| {
                let n = noise(&mut rng, 7681);
                let d: Vec<f64> = n.windows(2).map(|w| w[1] - w[0]).collect();
                dfa_exponent(&d, 10).value
            })
            .collect();
        assert!(median(anti) < 0.5);
        assert!(dfa_exponent(&[1.0; 256], 10).degenerate);
    }

    #[test]
    fn hjorth_cases() {
        let h = hjorth(&max_normalized(&[1.0, -1.0, 1.0, -1.0]));
        assert_abs_diff_eq!(h.activity, 1.0);
        for f in [0.004, 0.02, 0.08] {
            let c = hjorth(&sine(7680, f)).complexity;
            assert!((c - 1.0).abs() < 0.02, "{f}: {c}");
        }
        assert!(
            hjorth(&sine(7680, 5.0 / 256.0)).mobility < hjorth(&sine(7680, 20.0 / 256.0)).mobility
        );
        let ramp: Vec<f64> = (0..10).map(f64::from).collect();
        assert!(hjorth(&ramp).degenerate);
    }

    #[test]
    fn fractal_dimension_cases() {
        let ramp: Vec<f64> = (0..100).map(|i| 0.5 * i as f64).collect();
        assert_abs_diff_eq!(katz_fd(&ramp).value, 1.0, epsilon = 1e-12);
        assert_eq!(petrosian_fd(&ramp), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let fds: Vec<f64> = (0..50)
            .map(|_| higuchi_fd(&noise(&mut rng, 7680), 10).value)
            .collect();
        let hfd = median(fds);
        assert!((hfd - 2.0).abs() < 0.15, "{hfd}");
        assert!(higuchi_fd(&sine(7680, 0.01), 10).value < hfd);
    }

    #[test]
    fn scale_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = noise(&mut rng, 2048);
        let y: Vec<f64> = x.iter().map(|v| 10.0 * v).collect();
        let cfg = TimeFeatureConfig::default();
        let (mut a, mut b) = ([0.0; 18], [0.0; 18]);
        time_features(&x, &cfg, &mut a);
        time_features(&y, &cfg, &mut b);
        for j in 0..18 {
            assert!(
                (a[j] - b[j]).abs() <= 1e-9 * a[j].abs().max(1.0),
                "{j}: {} vs {}",
                a[j],
                b[j]
            );
        }
    }

    #[test]
    fn f32_path_runs() {
        let x: Vec<f32> = sine(1024, 0.03).into_iter().map(|v| v as f32).collect();
        let mut out = [0f32; 18];
        time_features(&x, &TimeFeatureConfig::default(), &mut out);
        assert!(out.iter().all(|v| v.is_finite()));
    }
}
