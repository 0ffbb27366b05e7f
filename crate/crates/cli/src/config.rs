//! Run configuration and the synthetic-recording specification.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use earsim_core::features::FeatureConfig;
use earsim_core::ingest::PreprocessConfig;
use earsim_core::{ChannelId, SimilarityConfig, Stage3, EPOCH_SECONDS};
use serde::{Deserialize, Serialize};

use crate::InputError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub manifests: Vec<PathBuf>,
    /// Generate recordings in memory instead of reading manifests.
    pub synthetic: Option<SyntheticSpec>,
    pub preprocess: PreprocessConfig,
    pub features: FeatureConfig,
    pub similarity: SimilarityConfig,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub seed: u64,
    pub stage: Option<Stage3>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            manifests: Vec::new(),
            synthetic: None,
            preprocess: PreprocessConfig::default(),
            features: FeatureConfig::default(),
            similarity: SimilarityConfig::default(),
            out: None,
            jobs: None,
            seed: 0,
            stage: None,
        }
    }
}

impl PipelineConfig {
    /// Reads a JSON config; relative manifest paths resolve against the config's directory.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| InputError(format!("reading config {}: {e}", path.display())))?;
        let mut cfg: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| InputError(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for m in &mut cfg.manifests {
            if m.is_relative() {
                *m = base.join(&*m);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), InputError> {
        if let Some(s) = &self.synthetic {
            s.validate()?;
        }
        if self.similarity.grid_size < 2 {
            return Err(InputError("similarity.grid_size must be at least 2".into()));
        }
        if self.jobs == Some(0) {
            return Err(InputError("jobs must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub stage: Stage3,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub subjects: usize,
    pub duration_seconds: f64,
    pub psg_channels: Vec<ChannelId>,
    /// Weight of the shared stage-dependent source in each channel; the rest is independent noise.
    pub mixing: BTreeMap<ChannelId, f64>,
    /// Repeated until the recording duration is filled.
    pub stage_script: Vec<Segment>,
    /// Label-flip probability per PSG scorer (scorer ids 1, 2, ...).
    pub psg_scorer_noise: Vec<f64>,
    /// Label-flip probability per in-ear scorer (same ids as the PSG scorers).
    pub inear_scorer_noise: Vec<f64>,
    /// Corner frequency (Hz) of a first-order high-pass applied to each channel, drawn
    /// per channel log-uniformly from this range.
    pub low_corner_hz: (f64, f64),
    pub psg_fs: f64,
    pub inear_fs: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        let psg_channels: Vec<ChannelId> = ChannelId::psg_set().collect();
        let mut mixing: BTreeMap<ChannelId, f64> = psg_channels
            .iter()
            .enumerate()
            .map(|(i, &c)| (c, (95 - 3 * i) as f64 / 100.0))
            .collect();
        mixing.insert(ChannelId::CH1, 0.6);
        Self {
            subjects: 10,
            duration_seconds: 4.0 * 3600.0,
            psg_channels,
            mixing,
            stage_script: vec![
                Segment {
                    stage: Stage3::W,
                    seconds: 600.0,
                },
                Segment {
                    stage: Stage3::Nrem,
                    seconds: 3600.0,
                },
                Segment {
                    stage: Stage3::Rem,
                    seconds: 1200.0,
                },
            ],
            psg_scorer_noise: vec![0.03, 0.05, 0.08],
            inear_scorer_noise: vec![0.06, 0.1, 0.14],
            low_corner_hz: (0.1, 1.0),
            psg_fs: 256.0,
            inear_fs: 250.0,
        }
    }
}

fn is_epoch_multiple(seconds: f64) -> bool {
    let k = seconds / EPOCH_SECONDS;
    seconds > 0.0 && (k - k.round()).abs() < 1e-9
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), InputError> {
        let bad = |m: String| Err(InputError(format!("synthetic spec: {m}")));
        if self.subjects == 0 {
            return bad("subjects must be at least 1".into());
        }
        if !is_epoch_multiple(self.duration_seconds) {
            return bad("duration_seconds must be a positive multiple of 30".into());
        }
        if self.psg_channels.is_empty() || self.psg_channels.iter().any(|c| c.is_inear()) {
            return bad("psg_channels must list PSG channels".into());
        }
        let mut sorted = self.psg_channels.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.psg_channels.len() {
            return bad("psg_channels contains duplicates".into());
        }
        for (c, &s) in &self.mixing {
            if !(0.0..=1.0).contains(&s) {
                return bad(format!("mixing for {c} must lie in [0, 1], got {s}"));
            }
        }
        if self.stage_script.is_empty() {
            return bad("stage_script is empty".into());
        }
        for seg in &self.stage_script {
            if !is_epoch_multiple(seg.seconds) {
                return bad(format!(
                    "segment duration {} s is not a multiple of 30",
                    seg.seconds
                ));
            }
        }
        for p in self.psg_scorer_noise.iter().chain(&self.inear_scorer_noise) {
            if !(0.0..=1.0).contains(p) {
                return bad(format!("label-flip probability {p} outside [0, 1]"));
            }
        }
        if self.psg_scorer_noise.is_empty() || self.inear_scorer_noise.is_empty() {
            return bad("each source needs at least one scorer".into());
        }
        let (lo, hi) = self.low_corner_hz;
        if !(lo > 0.0 && lo <= hi && hi < 35.0) {
            return bad(format!(
                "low_corner_hz must satisfy 0 < low <= high < 35, got ({lo}, {hi})"
            ));
        }
        for fs in [self.psg_fs, self.inear_fs] {
            if !(fs >= 80.0) {
                return bad(format!("sampling rate {fs} Hz is below 80 Hz"));
            }
        }
        Ok(())
    }

    /// Mixing weight of a channel; channels not listed get 0.5.
    pub fn mixing_of(&self, ch: ChannelId) -> f64 {
        self.mixing.get(&ch).copied().unwrap_or(0.5)
    }

    pub fn epoch_count(&self) -> usize {
        (self.duration_seconds / EPOCH_SECONDS).round() as usize
    }

    /// True stage of every epoch.
    pub fn truth(&self) -> Vec<Stage3> {
        let mut out = Vec::with_capacity(self.epoch_count());
        'fill: loop {
            for seg in &self.stage_script {
                for _ in 0..(seg.seconds / EPOCH_SECONDS).round() as usize {
                    if out.len() == self.epoch_count() {
                        break 'fill;
                    }
                    out.push(seg.stage);
                }
            }
        }
        out
    }

    pub fn subject_id(&self, index: usize) -> String {
        let width = self.subjects.to_string().len();
        format!("S{:0width$}", index + 1)
    }
}
