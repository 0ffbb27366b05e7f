//! Per-epoch feature extraction: 18 time-domain and 27 frequency-domain values.

pub mod freq;
pub mod time;

use rustfft::FftNum;
use serde::{Deserialize, Serialize};

use crate::catalog::{FeatureDataset, N_FEATURES};
use crate::error::Result;
use crate::scalar::Real;
use crate::signal::SignalTrace;
use crate::stage::Stage3;

pub use freq::{PsdEstimate, SegmentAverage, WelchConfig, WelchPlan};
pub use time::TimeFeatureConfig;

/// A feature value plus whether it fell back to its documented degenerate value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Flagged<T> {
    pub value: T,
    pub degenerate: bool,
}

impl<T> Flagged<T> {
    pub fn new(value: T, degenerate: bool) -> Self {
        Self { value, degenerate }
    }

    pub fn ok(value: T) -> Self {
        Self::new(value, false)
    }

    pub fn degenerate(value: T) -> Self {
        Self::new(value, true)
    }

    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> Flagged<U> {
        Flagged::new(f(self.value), self.degenerate)
    }

    pub fn or_flag(self, flag: bool) -> Self {
        Self::new(self.value, self.degenerate || flag)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub time: TimeFeatureConfig,
    pub welch: WelchConfig,
}

/// Computes full feature vectors, reusing FFT plans across epochs.
pub struct FeatureExtractor<T: FftNum> {
    cfg: FeatureConfig,
    plans: Vec<(u64, WelchPlan<T>)>,
}

impl<T: Real + FftNum> FeatureExtractor<T> {
    pub fn new(cfg: FeatureConfig) -> Self {
        Self {
            cfg,
            plans: Vec::new(),
        }
    }

    fn plan(&mut self, fs: f64) -> Result<&mut WelchPlan<T>> {
        let key = fs.to_bits();
        let pos = match self.plans.iter().position(|(k, _)| *k == key) {
            Some(p) => p,
            None => {
                self.plans.push((key, WelchPlan::new(fs, &self.cfg.welch)?));
                self.plans.len() - 1
            }
        };
        Ok(&mut self.plans[pos].1)
    }

    /// All 45 features of one epoch and the bitmask of degenerate columns.
    pub fn extract(&mut self, epoch: &[T], fs: f64) -> Result<([T; N_FEATURES], u64)> {
        let mut out = [T::zero(); N_FEATURES];
        let mut flags = time::time_features(epoch, &self.cfg.time, &mut out);
        let max_abs = epoch.iter().fold(T::zero(), |a, &v| a.max(v.abs()));
        let psd = self.plan(fs)?.estimate(epoch)?;
        flags |= freq::freq_features(&psd, max_abs, &mut out);
        Ok((out, flags))
    }

    /// Feature matrix of `trace` over the listed epochs, in the given order.
    pub fn dataset(
        &mut self,
        subject: &str,
        trace: &SignalTrace<T>,
        stage: Stage3,
        epochs: &[usize],
    ) -> Result<FeatureDataset<T>> {
        let mut ds = FeatureDataset::new(subject, trace.channel(), stage);
        for &t in epochs {
            let (values, flags) = self.extract(trace.slice_epoch(t)?, trace.fs())?;
            ds.push(t, &values, flags)?;
        }
        Ok(ds)
    }
}

/// One-shot extraction of a single epoch.
pub fn extract_epoch<T: Real + FftNum>(
    epoch: &[T],
    fs: f64,
    cfg: &FeatureConfig,
) -> Result<([T; N_FEATURES], u64)> {
    FeatureExtractor::new(cfg.clone()).extract(epoch, fs)
}
