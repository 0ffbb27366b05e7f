//! Sampled channel traces and 30-second epoch arithmetic.

use crate::channel::ChannelId;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Scoring epoch length in seconds.
pub const EPOCH_SECONDS: f64 = 30.0;

/// Samples in one epoch at sampling rate `fs`.
pub fn samples_per_epoch(fs: f64) -> usize {
    (EPOCH_SECONDS * fs).round() as usize
}

/// One channel's voltage series (µV) with its sampling rate.
#[derive(Clone, Debug, PartialEq)]
pub struct SignalTrace<T> {
    channel: ChannelId,
    fs: f64,
    samples: Vec<T>,
}

impl<T: Real> SignalTrace<T> {
    pub fn new(channel: ChannelId, fs: f64, samples: Vec<T>) -> Result<Self> {
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::Invalid(format!(
                "sampling rate must be positive, got {fs}"
            )));
        }
        if samples.is_empty() {
            return Err(Error::Empty("signal trace"));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self {
            channel,
            fs,
            samples,
        })
    }

    pub fn channel(&self) -> ChannelId {
        self.channel
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.fs
    }

    pub fn samples_per_epoch(&self) -> usize {
        samples_per_epoch(self.fs)
    }

    /// Whole epochs contained in the trace; a trailing partial epoch is dropped.
    pub fn epoch_count(&self) -> usize {
        self.samples.len() / self.samples_per_epoch().max(1)
    }

    /// Samples `[t·30·fs, (t+1)·30·fs)`.
    pub fn slice_epoch(&self, t: usize) -> Result<&[T]> {
        let count = self.epoch_count();
        if t >= count {
            return Err(Error::EpochOutOfRange { index: t, count });
        }
        let n = self.samples_per_epoch();
        Ok(&self.samples[t * n..(t + 1) * n])
    }

    /// Same channel and rate with new samples (length may differ).
    pub fn with_samples(&self, samples: Vec<T>) -> Result<Self> {
        Self::new(self.channel, self.fs, samples)
    }
}

/// Epoch layout shared by all traces of a subject after trimming.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct EpochGrid {
    pub epoch_count: usize,
}

impl EpochGrid {
    pub const EPOCH_SECONDS: f64 = EPOCH_SECONDS;

    pub fn from_duration(seconds: f64) -> Self {
        Self {
            epoch_count: (seconds / EPOCH_SECONDS).floor().max(0.0) as usize,
        }
    }

    pub fn duration_seconds(&self) -> f64 {
        self.epoch_count as f64 * EPOCH_SECONDS
    }

    pub fn samples_per_epoch(&self, fs: f64) -> usize {
        samples_per_epoch(fs)
    }
}
