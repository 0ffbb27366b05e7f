//! Loading recordings and preparing them for epoch-wise analysis.

pub mod filter;
pub mod manifest;
pub mod preprocess;

pub use manifest::{
    load_hypnograms, load_recording, missing_files, read_channel_csv, read_manifests,
    write_channel_csv, HypnogramEntry, Recording, RecordingManifest, SourceEntry,
};
pub use preprocess::{bandpass, rescale_inear, trim_common, PreprocessConfig};

use crate::error::{Error, Result};
use crate::hypnogram::Hypnogram;
use crate::signal::{EpochGrid, SignalTrace};

/// A subject after filtering, rescaling and trimming.
#[derive(Clone, Debug)]
pub struct PreparedSubject {
    pub subject: String,
    /// PSG traces in manifest order, then CH1 last.
    pub traces: Vec<SignalTrace<f64>>,
    pub grid: EpochGrid,
    /// Hypnograms truncated to the epoch grid.
    pub hypnograms: Vec<Hypnogram>,
}

/// Band-pass each source, rescale the in-ear trace to the reference PSG channel, trim.
pub fn prepare(recording: Recording, cfg: &PreprocessConfig) -> Result<PreparedSubject> {
    let (pl, ph) = cfg.psg_band;
    let psg = recording
        .psg
        .into_iter()
        .map(|t| bandpass(&t, pl, ph, cfg.filter_order))
        .collect::<Result<Vec<_>>>()?;
    let (il, ih) = cfg.inear_band;
    let inear = bandpass(&recording.inear, il, ih, cfg.filter_order)?;
    let reference = psg
        .iter()
        .find(|t| t.channel() == cfg.rescale_reference)
        .ok_or_else(|| {
            Error::Invalid(format!(
                "subject {}: rescale reference {} is not among the PSG channels",
                recording.subject, cfg.rescale_reference
            ))
        })?;
    let inear = rescale_inear(&inear, reference)?;
    let mut all = psg;
    all.push(inear);
    let (traces, grid) = trim_common(&all)?;
    let mut hypnograms = recording.hypnograms;
    for h in &mut hypnograms {
        if h.labels.len() < grid.epoch_count {
            return Err(Error::Invalid(format!(
                "subject {} scorer {} {} hypnogram has {} epochs, recording has {}",
                h.subject,
                h.scorer,
                h.source,
                h.labels.len(),
                grid.epoch_count
            )));
        }
        h.labels.truncate(grid.epoch_count);
    }
    Ok(PreparedSubject {
        subject: recording.subject,
        traces,
        grid,
        hypnograms,
    })
}
