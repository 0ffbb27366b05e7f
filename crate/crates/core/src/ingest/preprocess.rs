//! Per-source band-pass, in-ear amplitude rescaling and common-length trimming.

use serde::{Deserialize, Serialize};

use super::filter::{butterworth_bandpass, filtfilt};
use crate::channel::ChannelId;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::signal::{EpochGrid, SignalTrace, EPOCH_SECONDS};
use crate::stats;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub psg_band: (f64, f64),
    pub inear_band: (f64, f64),
    pub filter_order: usize,
    /// PSG channel whose standard deviation the in-ear trace is rescaled to.
    pub rescale_reference: ChannelId,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            psg_band: (0.2, 35.0),
            inear_band: (0.5, 35.0),
            filter_order: 4,
            rescale_reference: "C3-M2".parse().expect("C3-M2 is a PSG channel"),
        }
    }
}

/// Zero-phase Butterworth band-pass; output length equals input length.
pub fn bandpass<T: Real>(
    trace: &SignalTrace<T>,
    low: f64,
    high: f64,
    order: usize,
) -> Result<SignalTrace<T>> {
    let sections = butterworth_bandpass(order, low, high, trace.fs())?;
    trace.with_samples(filtfilt(&sections, trace.samples())?)
}

/// Scales `inear` so its standard deviation equals that of `reference`.
pub fn rescale_inear<T: Real>(
    inear: &SignalTrace<T>,
    reference: &SignalTrace<T>,
) -> Result<SignalTrace<T>> {
    let s_in = stats::std_dev(inear.samples());
    let s_ref = stats::std_dev(reference.samples());
    if s_in == T::zero() {
        return Err(Error::ZeroStd("in-ear trace"));
    }
    if s_ref == T::zero() {
        return Err(Error::ZeroStd("rescale reference trace"));
    }
    let ratio = s_ref / s_in;
    inear.with_samples(inear.samples().iter().map(|&v| v * ratio).collect())
}

/// Truncates every trace to the shortest duration, floored to whole 30 s epochs.
pub fn trim_common<T: Real>(traces: &[SignalTrace<T>]) -> Result<(Vec<SignalTrace<T>>, EpochGrid)> {
    if traces.is_empty() {
        return Err(Error::Empty("traces"));
    }
    let shortest = traces
        .iter()
        .map(SignalTrace::duration_seconds)
        .fold(f64::INFINITY, f64::min);
    let grid = EpochGrid::from_duration(shortest);
    if grid.epoch_count == 0 {
        return Err(Error::TooShort { seconds: shortest });
    }
    let trimmed = traces
        .iter()
        .map(|t| {
            let n = grid.epoch_count * t.samples_per_epoch();
            t.with_samples(t.samples()[..n.min(t.len())].to_vec())
        })
        .collect::<Result<Vec<_>>>()?;
    debug_assert!(trimmed
        .iter()
        .all(|t| (t.duration_seconds() - grid.epoch_count as f64 * EPOCH_SECONDS).abs() < 1.0));
    Ok((trimmed, grid))
}
