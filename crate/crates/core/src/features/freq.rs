//! Welch power spectral density and the 27 frequency-domain epoch features.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftNum, FftPlanner};
use serde::{Deserialize, Serialize};

use super::Flagged;
use crate::catalog::{idx, TIME_FEATURES};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::stats;

/// How per-segment periodograms are combined.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentAverage {
    Median,
    Mean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WelchConfig {
    pub window_seconds: f64,
    pub overlap_fraction: f64,
    pub average: SegmentAverage,
}

impl Default for WelchConfig {
    fn default() -> Self {
        Self {
            window_seconds: 5.0,
            overlap_fraction: 0.5,
            average: SegmentAverage::Median,
        }
    }
}

/// Frequency bands in Hz: lower edge inclusive, upper exclusive (gamma includes 35 Hz).
pub const BANDS: [(&str, f64, f64); 6] = [
    ("delta", 0.5, 4.0),
    ("theta", 4.0, 8.0),
    ("alpha", 8.0, 12.0),
    ("sigma", 12.0, 16.0),
    ("beta", 16.0, 30.0),
    ("gamma", 30.0, 35.0),
];
pub const SPAN: (f64, f64) = (0.5, 35.0);
/// Lowest sampling rate that still resolves the analysis span.
pub const MIN_FS: f64 = 80.0;
const EDGE_TOL: f64 = 1e-9;

/// One-sided power spectral density.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsdEstimate<T> {
    pub freqs: Vec<T>,
    pub density: Vec<T>,
    pub df: T,
}

impl<T: Real> PsdEstimate<T> {
    /// Bin range covering `[0.5, 35]` Hz.
    pub fn span(&self) -> std::ops::Range<usize> {
        let lo = self
            .freqs
            .iter()
            .position(|f| f.as_f64() >= SPAN.0 - EDGE_TOL)
            .unwrap_or(self.freqs.len());
        let hi = self
            .freqs
            .iter()
            .rposition(|f| f.as_f64() <= SPAN.1 + EDGE_TOL)
            .map_or(lo, |i| i + 1);
        lo..hi.max(lo)
    }

    /// Total power `Σ density·Δf` over all bins.
    pub fn total_power(&self) -> T {
        self.density.iter().copied().sum::<T>() * self.df
    }
}

/// Scipy's bias correction for the median of chi-square(2) periodogram values.
fn median_bias(n: usize) -> f64 {
    let mut b = 1.0;
    let mut k = 2.0;
    for _ in 0..(n.saturating_sub(1)) / 2 {
        b += 1.0 / (k + 1.0) - 1.0 / k;
        k += 2.0;
    }
    b
}

/// Reusable Welch estimator for one sampling rate.
pub struct WelchPlan<T: FftNum> {
    fs: f64,
    seg_len: usize,
    step: usize,
    average: SegmentAverage,
    window: Vec<T>,
    scale: T,
    fft: Arc<dyn Fft<T>>,
    buf: Vec<Complex<T>>,
    scratch: Vec<Complex<T>>,
}

impl<T: Real + FftNum> WelchPlan<T> {
    pub fn new(fs: f64, cfg: &WelchConfig) -> Result<Self> {
        if !(fs >= MIN_FS) {
            return Err(Error::SamplingRateTooLow(fs));
        }
        if !(cfg.overlap_fraction >= 0.0 && cfg.overlap_fraction < 1.0) {
            return Err(Error::Invalid("overlap fraction must lie in [0, 1)".into()));
        }
        let seg_len = (cfg.window_seconds * fs).round() as usize;
        if seg_len < 8 {
            return Err(Error::Invalid("Welch window shorter than 8 samples".into()));
        }
        let step = (seg_len - (cfg.overlap_fraction * seg_len as f64).round() as usize).max(1);
        // periodic Hamming window
        let window: Vec<T> = (0..seg_len)
            .map(|i| {
                T::lit(0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / seg_len as f64).cos())
            })
            .collect();
        let wss: f64 = window.iter().map(|w| w.as_f64() * w.as_f64()).sum();
        let fft = FftPlanner::new().plan_fft_forward(seg_len);
        let scratch = vec![Complex::new(T::zero(), T::zero()); fft.get_inplace_scratch_len()];
        Ok(Self {
            fs,
            seg_len,
            step,
            average: cfg.average,
            window,
            scale: T::lit(1.0 / (fs * wss)),
            fft,
            buf: vec![Complex::new(T::zero(), T::zero()); seg_len],
            scratch,
        })
    }

    pub fn segment_count(&self, n: usize) -> usize {
        if n < self.seg_len {
            0
        } else {
            (n - self.seg_len) / self.step + 1
        }
    }

    pub fn estimate(&mut self, x: &[T]) -> Result<PsdEstimate<T>> {
        let segs = self.segment_count(x.len());
        if segs == 0 {
            return Err(Error::Invalid(format!(
                "epoch of {} samples is shorter than one Welch segment ({})",
                x.len(),
                self.seg_len
            )));
        }
        let bins = self.seg_len / 2 + 1;
        let mut per_bin: Vec<Vec<T>> = vec![Vec::with_capacity(segs); bins];
        for s in 0..segs {
            let seg = &x[s * self.step..s * self.step + self.seg_len];
            let m = stats::mean(seg);
            for ((b, &v), &w) in self.buf.iter_mut().zip(seg).zip(&self.window) {
                *b = Complex::new((v - m) * w, T::zero());
            }
            self.fft
                .process_with_scratch(&mut self.buf, &mut self.scratch);
            for (k, col) in per_bin.iter_mut().enumerate() {
                let mut p = self.buf[k].norm_sqr() * self.scale;
                let nyquist = self.seg_len % 2 == 0 && k == self.seg_len / 2;
                if k != 0 && !nyquist {
                    p = p + p;
                }
                col.push(p);
            }
        }
        let density = match self.average {
            SegmentAverage::Mean => per_bin.iter().map(|c| stats::mean(c)).collect(),
            SegmentAverage::Median => {
                let bias = T::lit(median_bias(segs));
                per_bin.iter().map(|c| stats::median(c) / bias).collect()
            }
        };
        let df = self.fs / self.seg_len as f64;
        Ok(PsdEstimate {
            freqs: (0..bins).map(|k| T::lit(k as f64 * df)).collect(),
            density,
            df: T::lit(df),
        })
    }
}

/// One-shot Welch estimate; prefer [`WelchPlan`] when estimating many epochs.
pub fn welch_psd<T: Real + FftNum>(x: &[T], fs: f64, cfg: &WelchConfig) -> Result<PsdEstimate<T>> {
    WelchPlan::new(fs, cfg)?.estimate(x)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandPowers<T> {
    /// Relative power of delta, theta, alpha, sigma, beta, gamma.
    pub relative: [T; 6],
    /// Absolute power over the analysis span.
    pub total: T,
    pub degenerate: bool,
}

fn in_band(f: f64, lo: f64, hi: f64, last: bool) -> bool {
    f >= lo - EDGE_TOL && (f < hi - EDGE_TOL || (last && f <= hi + EDGE_TOL))
}

pub fn band_powers<T: Real>(psd: &PsdEstimate<T>) -> BandPowers<T> {
    let span = psd.span();
    let mut abs = [T::zero(); 6];
    for k in span.clone() {
        let f = psd.freqs[k].as_f64();
        if let Some(b) = (0..6).find(|&b| in_band(f, BANDS[b].1, BANDS[b].2, b == 5)) {
            abs[b] += psd.density[k] * psd.df;
        }
    }
    let total: T = psd.density[span].iter().copied().sum::<T>() * psd.df;
    if !(total > T::zero()) {
        return BandPowers {
            relative: [T::zero(); 6],
            total: T::zero(),
            degenerate: true,
        };
    }
    BandPowers {
        relative: abs.map(|a| a / total),
        total,
        degenerate: false,
    }
}

/// Ratios returned for a zero denominator (and the upper cap on any ratio).
pub const RATIO_CAP: f64 = 1e6;

fn ratio<T: Real>(num: T, den: T) -> Flagged<T> {
    let cap = T::lit(RATIO_CAP);
    if den == T::zero() {
        return Flagged::degenerate(if num == T::zero() { T::zero() } else { cap });
    }
    let r = num / den;
    if r > cap {
        Flagged::degenerate(cap)
    } else {
        Flagged::ok(r)
    }
}

/// δ/θ, δ/σ, δ/β, δ/α, θ/α, α/β, δ/(α+β), θ/(α+β), δ/(α+β+θ) of relative powers.
pub fn band_ratios<T: Real>(rel: &[T; 6]) -> [Flagged<T>; 9] {
    let [d, t, a, s, b, _] = *rel;
    [
        ratio(d, t),
        ratio(d, s),
        ratio(d, b),
        ratio(d, a),
        ratio(t, a),
        ratio(a, b),
        ratio(d, a + b),
        ratio(t, a + b),
        ratio(d, a + b + t),
    ]
}

/// Spectral (Shannon, bits) and order-2 Rényi entropy of the span-normalized density.
pub fn spectral_entropies<T: Real>(psd: &PsdEstimate<T>) -> (Flagged<T>, Flagged<T>) {
    let d = &psd.density[psd.span()];
    let total: T = d.iter().copied().sum();
    if !(total > T::zero()) {
        return (
            Flagged::degenerate(T::zero()),
            Flagged::degenerate(T::zero()),
        );
    }
    let mut shannon = T::zero();
    let mut sq = T::zero();
    for &v in d {
        let p = v / total;
        if p > T::zero() {
            shannon -= p * p.log2();
        }
        sq += p * p;
    }
    (
        Flagged::ok(shannon.max(T::zero())),
        Flagged::ok((-sq.log2()).max(T::zero())),
    )
}

/// Smallest span frequency at which cumulative power reaches `fraction` of the span total.
pub fn spectral_rolloff<T: Real>(psd: &PsdEstimate<T>, fraction: f64) -> Flagged<T> {
    let span = psd.span();
    let d = &psd.density[span.clone()];
    let total: T = d.iter().copied().sum();
    if !(total > T::zero()) || span.is_empty() {
        return Flagged::degenerate(T::zero());
    }
    let target = total * T::lit(fraction);
    let mut acc = T::zero();
    for (k, &v) in d.iter().enumerate() {
        acc += v;
        if acc >= target {
            return Flagged::ok(psd.freqs[span.start + k]);
        }
    }
    Flagged::ok(psd.freqs[span.end - 1])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralShape<T> {
    pub centroid: Flagged<T>,
    pub crest: Flagged<T>,
    pub flatness: Flagged<T>,
    pub rolloff: Flagged<T>,
    pub spread: Flagged<T>,
    pub skewness: Flagged<T>,
    pub kurtosis: Flagged<T>,
}

pub fn spectral_shape<T: Real>(psd: &PsdEstimate<T>) -> SpectralShape<T> {
    let span = psd.span();
    let d = &psd.density[span.clone()];
    let f = &psd.freqs[span];
    let total: T = d.iter().copied().sum();
    if !(total > T::zero()) {
        let z = Flagged::degenerate(T::zero());
        return SpectralShape {
            centroid: z,
            crest: z,
            flatness: z,
            rolloff: z,
            spread: z,
            skewness: z,
            kurtosis: z,
        };
    }
    let centroid: T = d.iter().zip(f).map(|(&v, &fk)| fk * v / total).sum();
    let spread: T = d
        .iter()
        .zip(f)
        .map(|(&v, &fk)| (fk - centroid) * (fk - centroid) * v / total)
        .sum::<T>()
        .sqrt();
    let n = T::count(d.len());
    let mean = total / n;
    let max = d.iter().fold(T::zero(), |a, &v| a.max(v));
    let floor = max * T::epsilon();
    let log_mean: T = d.iter().map(|&v| v.max(floor).ln()).sum::<T>() / n;
    let (sk, ku) = stats::skew_kurtosis(d);
    let flat_values = sk == T::zero() && ku == T::zero();
    SpectralShape {
        centroid: Flagged::ok(centroid),
        crest: Flagged::ok(max / mean),
        flatness: Flagged::ok(log_mean.exp() / mean),
        rolloff: spectral_rolloff(psd, 0.85),
        spread: Flagged::ok(spread),
        skewness: Flagged::new(sk, flat_values),
        kurtosis: Flagged::new(ku, flat_values),
    }
}

/// Writes the 27 frequency-domain features into `out[18..45]`, returning the degenerate mask.
///
/// `max_abs` is the epoch's maximum absolute amplitude; the amplitude-dependent
/// spectral energy, mean and variance are reported for the max-normalized epoch.
pub fn freq_features<T: Real>(psd: &PsdEstimate<T>, max_abs: T, out: &mut [T]) -> u64 {
    let mut flags = 0u64;
    let mut set = |j: usize, f: Flagged<T>, out: &mut [T]| {
        out[j] = f.value;
        if f.degenerate {
            flags |= 1 << j;
        }
    };
    let bp = band_powers(psd);
    let norm2 = if max_abs > T::zero() {
        max_abs * max_abs
    } else {
        T::one()
    };
    set(idx::SPECTRAL_ENERGY, Flagged::ok(bp.total / norm2), out);
    for b in 0..6 {
        set(
            idx::REL_DELTA + b,
            Flagged::new(bp.relative[b], bp.degenerate),
            out,
        );
    }
    let (se, re) = spectral_entropies(psd);
    set(idx::SPECTRAL_ENTROPY, se, out);
    set(idx::RENYI_ENTROPY, re, out);
    for (k, r) in band_ratios(&bp.relative).into_iter().enumerate() {
        set(idx::RATIO_FIRST + k, r.or_flag(bp.degenerate), out);
    }
    let sh = spectral_shape(psd);
    set(idx::CENTROID, sh.centroid, out);
    set(idx::CREST, sh.crest, out);
    set(idx::FLATNESS, sh.flatness, out);
    set(idx::ROLLOFF, sh.rolloff, out);
    set(idx::SPREAD, sh.spread, out);
    let d = &psd.density[psd.span()];
    let zero_power = bp.degenerate;
    set(
        idx::SPECTRAL_MEAN,
        Flagged::new(stats::mean(d) / norm2, zero_power),
        out,
    );
    set(
        idx::SPECTRAL_VARIANCE,
        Flagged::new(stats::variance(d) / (norm2 * norm2), zero_power),
        out,
    );
    set(idx::SPECTRAL_SKEWNESS, sh.skewness, out);
    set(idx::SPECTRAL_KURTOSIS, sh.kurtosis, out);
    debug_assert!(flags.trailing_zeros() as usize >= TIME_FEATURES || flags == 0);
    flags
}
