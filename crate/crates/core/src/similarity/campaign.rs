//! The in-ear-vs-PSG and PSG-vs-PSG pair campaign and its summaries.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::mwu::{mann_whitney_u, MannWhitney};
use super::{score_pair, PreparedDataset, SimilarityConfig};
use crate::catalog::FEATURE_NAMES;
use crate::channel::ChannelId;
use crate::error::Result;
use crate::scalar::Real;
use crate::stage::Stage3;
use crate::stats::{mean, skew_kurtosis};

pub const HISTOGRAM_BINS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairKind {
    /// PSG channel against the in-ear channel.
    InEar,
    /// Two distinct PSG channels.
    Psg,
}

impl PairKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PairKind::InEar => "inear",
            PairKind::Psg => "psg",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairSpec {
    pub kind: PairKind,
    pub a: ChannelId,
    pub b: ChannelId,
}

/// `(q, CH1)` for every PSG channel, then every unordered PSG pair `i < j`.
pub fn campaign_pairs(psg: &[ChannelId]) -> Vec<PairSpec> {
    let mut out: Vec<PairSpec> = psg
        .iter()
        .map(|&q| PairSpec {
            kind: PairKind::InEar,
            a: q,
            b: ChannelId::CH1,
        })
        .collect();
    for (i, &a) in psg.iter().enumerate() {
        for &b in &psg[i + 1..] {
            out.push(PairSpec {
                kind: PairKind::Psg,
                a,
                b,
            });
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub subject: String,
    pub stage: Stage3,
    pub kind: PairKind,
    pub a: ChannelId,
    pub b: ChannelId,
    pub score: f64,
    pub n_features: usize,
    pub selected: Vec<String>,
    pub k_used: usize,
    pub epsilon: f64,
    pub h_r: f64,
    pub rr_subset: f64,
    pub rr_full: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub warning: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Absence {
    pub subject: String,
    pub stage: Stage3,
    pub kind: PairKind,
    pub a: ChannelId,
    pub b: ChannelId,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PairOutcome {
    Score(ScoreRecord),
    Absent(Absence),
}

fn missing_reason<T: Real>(
    stage: Stage3,
    ch: ChannelId,
    d: Option<&PreparedDataset<T>>,
) -> Option<String> {
    match d.map(|d| d.rows()).unwrap_or(0) {
        0 => Some(format!("no {stage} epochs for {ch}")),
        1 => Some(format!("only one {stage} epoch for {ch}")),
        _ => None,
    }
}

/// Scores one pair, or records why it could not be scored.
pub fn evaluate_pair<T: Real>(
    subject: &str,
    stage: Stage3,
    spec: PairSpec,
    a: Option<&PreparedDataset<T>>,
    b: Option<&PreparedDataset<T>>,
    cfg: &SimilarityConfig,
) -> Result<PairOutcome> {
    let reason = [
        missing_reason(stage, spec.a, a),
        missing_reason(stage, spec.b, b),
    ]
    .into_iter()
    .flatten()
    .collect::<Vec<_>>();
    if !reason.is_empty() {
        return Ok(PairOutcome::Absent(Absence {
            subject: subject.to_string(),
            stage,
            kind: spec.kind,
            a: spec.a,
            b: spec.b,
            reason: reason.join("; "),
        }));
    }
    let s = score_pair(a.expect("checked"), b.expect("checked"), cfg)?;
    Ok(PairOutcome::Score(ScoreRecord {
        subject: subject.to_string(),
        stage,
        kind: spec.kind,
        a: spec.a,
        b: spec.b,
        score: s.score.as_f64(),
        n_features: s.features.len(),
        selected: s
            .selection
            .selected
            .iter()
            .map(|&j| FEATURE_NAMES[j].to_string())
            .collect(),
        k_used: s.selection.k_used,
        epsilon: s.selection.epsilon.as_f64(),
        h_r: s.selection.h_r.as_f64(),
        rr_subset: s.selection.rr_subset.as_f64(),
        rr_full: s.selection.rr_full.as_f64(),
        warning: s.selection.warning,
    }))
}

/// Sample standard deviation (`n − 1`), 0 for fewer than two values.
fn sample_sd(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubjectSummary {
    pub subject: String,
    pub stage: Stage3,
    pub kind: PairKind,
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
}

/// Mean ± SD of the scores per (subject, stage, kind), ordered by subject, stage, kind.
pub fn subject_summaries(records: &[ScoreRecord]) -> Vec<SubjectSummary> {
    let mut groups: BTreeMap<(&str, Stage3, PairKind), Vec<f64>> = BTreeMap::new();
    for r in records {
        groups
            .entry((&r.subject, r.stage, r.kind))
            .or_default()
            .push(r.score);
    }
    groups
        .into_iter()
        .map(|((subject, stage, kind), v)| SubjectSummary {
            subject: subject.to_string(),
            stage,
            kind,
            n: v.len(),
            mean: mean(&v),
            sd: sample_sd(&v),
        })
        .collect()
}

/// Counts in 100 bins of width 0.01 on `[0, 1]`; 1.0 lands in the last bin.
pub fn histogram(scores: &[f64]) -> Vec<usize> {
    let mut bins = vec![0; HISTOGRAM_BINS];
    for &s in scores {
        let b = (s.clamp(0.0, 1.0) * HISTOGRAM_BINS as f64).floor() as usize;
        bins[b.min(HISTOGRAM_BINS - 1)] += 1;
    }
    bins
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelRow {
    pub channel: ChannelId,
    pub stage: Stage3,
    pub n_subjects: usize,
    pub mean: f64,
    pub sd: f64,
    pub per_subject: BTreeMap<String, f64>,
}

/// In-ear scores arranged by PSG channel and stage, averaged over subjects.
pub fn per_channel_table(records: &[ScoreRecord]) -> Vec<ChannelRow> {
    let mut groups: BTreeMap<(Stage3, ChannelId), BTreeMap<String, f64>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.kind == PairKind::InEar) {
        groups
            .entry((r.stage, r.a))
            .or_default()
            .insert(r.subject.clone(), r.score);
    }
    groups
        .into_iter()
        .map(|((stage, channel), per_subject)| {
            let v: Vec<f64> = per_subject.values().copied().collect();
            ChannelRow {
                channel,
                stage,
                n_subjects: v.len(),
                mean: mean(&v),
                sd: sample_sd(&v),
                per_subject,
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleShape {
    pub n: usize,
    pub mean: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

impl SampleShape {
    fn of(x: &[f64]) -> Self {
        let (skewness, excess_kurtosis) = skew_kurtosis(x);
        Self {
            n: x.len(),
            mean: mean(x),
            skewness,
            excess_kurtosis,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTest {
    pub first: Stage3,
    pub second: Stage3,
    pub first_sample: SampleShape,
    pub second_sample: SampleShape,
    pub alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub result: Option<MannWhitney>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reason: Option<String>,
}

pub const STAGE_TEST_ALPHA: f64 = 0.05;

/// Mann-Whitney tests of the pooled in-ear scores for W-NREM, W-REM and NREM-REM.
pub fn stage_tests(records: &[ScoreRecord]) -> Vec<StageTest> {
    let pooled = |s: Stage3| -> Vec<f64> {
        records
            .iter()
            .filter(|r| r.kind == PairKind::InEar && r.stage == s)
            .map(|r| r.score)
            .collect()
    };
    let pairs = [
        (Stage3::W, Stage3::Nrem),
        (Stage3::W, Stage3::Rem),
        (Stage3::Nrem, Stage3::Rem),
    ];
    pairs
        .into_iter()
        .map(|(first, second)| {
            let (a, b) = (pooled(first), pooled(second));
            let (result, reason) = match mann_whitney_u(&a, &b) {
                Ok(r) => (Some(r), None),
                Err(_) => (
                    None,
                    Some(format!(
                        "no scores for {}",
                        if a.is_empty() { first } else { second }
                    )),
                ),
            };
            StageTest {
                first,
                second,
                first_sample: SampleShape::of(&a),
                second_sample: SampleShape::of(&b),
                alpha: STAGE_TEST_ALPHA,
                result,
                reason,
            }
        })
        .collect()
}
