//! Report files written into the output directory.

use std::collections::BTreeMap;
use std::path::Path;

use earsim_core::consensus::{KappaReport, SubjectConsensus};
use earsim_core::similarity::campaign::STAGE_TEST_ALPHA;
use earsim_core::similarity::{
    histogram, per_channel_table, stage_tests, subject_summaries, Absence, ChannelRow, PairKind,
    PairOutcome, ScoreRecord, StageTest, SubjectSummary, HISTOGRAM_BINS,
};
use earsim_core::{ChannelId, FsiMode, Stage3, FEATURE_NAMES};
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::output::{csv_text, write_atomic, write_json};
use crate::pipeline::{ConsensusOutput, RunOptions, Timings};

pub const CONFIG_FILE: &str = "config.json";
pub const CONSENSUS_FILE: &str = "consensus.json";
pub const KAPPA_FILE: &str = "kappa.csv";
pub const SELECTION_FILE: &str = "selection.json";
pub const TALLY_FILE: &str = "selection_tally.csv";
pub const SIMILARITY_FILE: &str = "similarity.json";
pub const SCORES_INEAR_FILE: &str = "scores_inear.csv";
pub const SCORES_PSG_FILE: &str = "scores_psg.csv";
pub const CHANNEL_TABLE_FILE: &str = "channel_table.csv";
pub const HISTOGRAMS_FILE: &str = "histograms.json";
pub const STAGE_TESTS_FILE: &str = "stage_tests.json";
pub const RUN_SUMMARY_FILE: &str = "run_summary.json";

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RunCounts {
    pub subjects: usize,
    pub datasets: usize,
    pub notices: usize,
    pub scores: usize,
    pub absences: usize,
    pub warnings: usize,
}

fn num(v: f64) -> String {
    if v.is_finite() {
        ryu::Buffer::new().format(v).to_string()
    } else {
        String::new()
    }
}

/// The run configuration without the output location and thread count.
pub fn write_config(out: &Path, cfg: &PipelineConfig) -> anyhow::Result<()> {
    let mut cfg = cfg.clone();
    cfg.out = None;
    cfg.jobs = None;
    write_json(&out.join(CONFIG_FILE), &cfg)
}

#[derive(Serialize)]
struct ConsensusFile<'a> {
    stage_filter: Option<Stage3>,
    subjects: Vec<SubjectConsensus>,
    kappa: &'a KappaReport,
}

pub fn write_consensus(
    out: &Path,
    c: &ConsensusOutput,
    stage: Option<Stage3>,
) -> anyhow::Result<()> {
    let subjects = c
        .subjects
        .iter()
        .map(|s| {
            let mut s = s.clone();
            if let Some(st) = stage {
                s.intersection.counts.retain(|n| n.stage == st);
            }
            s
        })
        .collect();
    let file = ConsensusFile {
        stage_filter: stage,
        subjects,
        kappa: &c.kappa,
    };
    write_json(&out.join(CONSENSUS_FILE), &file)?;
    let rows = c.kappa.rows.iter().map(|r| {
        vec![
            r.subject.clone(),
            r.kind.as_str().to_string(),
            r.scorer_label(),
            num(r.value),
        ]
    });
    write_atomic(
        &out.join(KAPPA_FILE),
        &csv_text(&["subject", "kind", "scorers", "kappa"], rows),
    )
}

#[derive(Serialize)]
struct SelectionEntry<'a> {
    subject: &'a str,
    stage: Stage3,
    kind: PairKind,
    a: ChannelId,
    b: ChannelId,
    selected: &'a [String],
    k_used: usize,
    epsilon: f64,
    h_r: f64,
    rr_subset: f64,
    rr_full: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    warning: &'a Option<String>,
}

#[derive(Serialize)]
struct FeatureCount {
    feature: &'static str,
    count: usize,
}

#[derive(Serialize)]
struct StageTally {
    stage: Stage3,
    pairs: usize,
    counts: Vec<FeatureCount>,
}

#[derive(Serialize)]
struct SelectionFile<'a> {
    mode: FsiMode,
    pairs: Vec<SelectionEntry<'a>>,
    tally: Vec<StageTally>,
    warnings: usize,
}

#[derive(Serialize)]
struct ScoreEntry<'a> {
    subject: &'a str,
    stage: Stage3,
    kind: PairKind,
    a: ChannelId,
    b: ChannelId,
    score: f64,
    n_features: usize,
}

#[derive(Serialize)]
struct SimilarityFile<'a> {
    mode: FsiMode,
    grid_size: usize,
    stage_filter: Option<Stage3>,
    scores: Vec<ScoreEntry<'a>>,
    absences: Vec<&'a Absence>,
    subject_summaries: Vec<SubjectSummary>,
    channel_table: Vec<ChannelRow>,
}

#[derive(Serialize)]
struct HistogramEntry {
    #[serde(skip_serializing_if = "Option::is_none")]
    subject: Option<String>,
    stage: Stage3,
    kind: PairKind,
    n: usize,
    counts: Vec<usize>,
}

#[derive(Serialize)]
struct HistogramFile {
    bin_width: f64,
    bins: usize,
    entries: Vec<HistogramEntry>,
    pooled: Vec<HistogramEntry>,
}

#[derive(Serialize)]
struct StageTestFile {
    alpha: f64,
    tests: Vec<StageTest>,
}

fn tally(records: &[&ScoreRecord]) -> Vec<StageTally> {
    let mut by_stage: BTreeMap<Stage3, (usize, Vec<usize>)> = BTreeMap::new();
    for r in records {
        let (pairs, counts) = by_stage
            .entry(r.stage)
            .or_insert_with(|| (0, vec![0; FEATURE_NAMES.len()]));
        *pairs += 1;
        for name in &r.selected {
            if let Some(j) = FEATURE_NAMES.iter().position(|f| f == name) {
                counts[j] += 1;
            }
        }
    }
    by_stage
        .into_iter()
        .map(|(stage, (pairs, counts))| StageTally {
            stage,
            pairs,
            counts: FEATURE_NAMES
                .iter()
                .zip(counts)
                .map(|(&feature, count)| FeatureCount { feature, count })
                .collect(),
        })
        .collect()
}

fn score_csv(records: &[ScoreRecord], kind: PairKind) -> Vec<u8> {
    let rows = records.iter().filter(|r| r.kind == kind).map(|r| {
        vec![
            r.subject.clone(),
            r.stage.to_string(),
            r.a.to_string(),
            r.b.to_string(),
            num(r.score),
            r.n_features.to_string(),
        ]
    });
    csv_text(
        &[
            "subject",
            "stage",
            "channel_a",
            "channel_b",
            "score",
            "n_features",
        ],
        rows,
    )
}

fn histograms(records: &[ScoreRecord]) -> HistogramFile {
    let mut groups: BTreeMap<(&str, Stage3, PairKind), Vec<f64>> = BTreeMap::new();
    let mut pooled: BTreeMap<(Stage3, PairKind), Vec<f64>> = BTreeMap::new();
    for r in records {
        groups
            .entry((&r.subject, r.stage, r.kind))
            .or_default()
            .push(r.score);
        pooled.entry((r.stage, r.kind)).or_default().push(r.score);
    }
    HistogramFile {
        bin_width: 1.0 / HISTOGRAM_BINS as f64,
        bins: HISTOGRAM_BINS,
        entries: groups
            .into_iter()
            .map(|((subject, stage, kind), v)| HistogramEntry {
                subject: Some(subject.to_string()),
                stage,
                kind,
                n: v.len(),
                counts: histogram(&v),
            })
            .collect(),
        pooled: pooled
            .into_iter()
            .map(|((stage, kind), v)| HistogramEntry {
                subject: None,
                stage,
                kind,
                n: v.len(),
                counts: histogram(&v),
            })
            .collect(),
    }
}

/// Selection, score, summary, histogram and stage-test reports of a campaign.
pub fn write_similarity(
    out: &Path,
    outcomes: &[PairOutcome],
    opts: &RunOptions,
) -> anyhow::Result<RunCounts> {
    let sim = &opts.config.similarity;
    let mut records = Vec::new();
    let mut absences = Vec::new();
    for o in outcomes {
        match o {
            PairOutcome::Score(r) => records.push(r.clone()),
            PairOutcome::Absent(a) => absences.push(a),
        }
    }
    let warnings = records.iter().filter(|r| r.warning.is_some()).count();

    let refs: Vec<&ScoreRecord> = records.iter().collect();
    let selection = SelectionFile {
        mode: sim.mode,
        pairs: records
            .iter()
            .map(|r| SelectionEntry {
                subject: &r.subject,
                stage: r.stage,
                kind: r.kind,
                a: r.a,
                b: r.b,
                selected: &r.selected,
                k_used: r.k_used,
                epsilon: r.epsilon,
                h_r: r.h_r,
                rr_subset: r.rr_subset,
                rr_full: r.rr_full,
                warning: &r.warning,
            })
            .collect(),
        tally: tally(&refs),
        warnings,
    };
    write_json(&out.join(SELECTION_FILE), &selection)?;
    let tally_rows = selection.tally.iter().flat_map(|t| {
        t.counts.iter().map(move |c| {
            vec![
                t.stage.to_string(),
                c.feature.to_string(),
                c.count.to_string(),
                t.pairs.to_string(),
            ]
        })
    });
    write_atomic(
        &out.join(TALLY_FILE),
        &csv_text(&["stage", "feature", "count", "pairs"], tally_rows),
    )?;

    let channel_table = per_channel_table(&records);
    let similarity = SimilarityFile {
        mode: sim.mode,
        grid_size: sim.grid_size,
        stage_filter: opts.config.stage,
        scores: records
            .iter()
            .map(|r| ScoreEntry {
                subject: &r.subject,
                stage: r.stage,
                kind: r.kind,
                a: r.a,
                b: r.b,
                score: r.score,
                n_features: r.n_features,
            })
            .collect(),
        absences: absences.clone(),
        subject_summaries: subject_summaries(&records),
        channel_table: channel_table.clone(),
    };
    write_json(&out.join(SIMILARITY_FILE), &similarity)?;
    write_atomic(
        &out.join(SCORES_INEAR_FILE),
        &score_csv(&records, PairKind::InEar),
    )?;
    write_atomic(
        &out.join(SCORES_PSG_FILE),
        &score_csv(&records, PairKind::Psg),
    )?;
    let table_rows = channel_table.iter().map(|c| {
        vec![
            c.channel.to_string(),
            c.stage.to_string(),
            c.n_subjects.to_string(),
            num(c.mean),
            num(c.sd),
        ]
    });
    write_atomic(
        &out.join(CHANNEL_TABLE_FILE),
        &csv_text(
            &["channel", "stage", "n_subjects", "mean", "sd"],
            table_rows,
        ),
    )?;
    write_json(&out.join(HISTOGRAMS_FILE), &histograms(&records))?;
    let tests = StageTestFile {
        alpha: STAGE_TEST_ALPHA,
        tests: stage_tests(&records),
    };
    write_json(&out.join(STAGE_TESTS_FILE), &tests)?;
    Ok(RunCounts {
        scores: records.len(),
        absences: absences.len(),
        warnings,
        ..RunCounts::default()
    })
}

#[derive(Serialize)]
struct Timing {
    stage: &'static str,
    seconds: f64,
}

#[derive(Serialize)]
struct RunSummary<'a> {
    command: &'a str,
    version: &'static str,
    jobs: usize,
    out: String,
    seed: u64,
    counts: &'a RunCounts,
    timings: Vec<Timing>,
    config: &'a PipelineConfig,
}

/// Counts and wall-clock timings; the only output that differs between identical runs.
pub fn write_run_summary(
    out: &Path,
    command: &str,
    opts: &RunOptions,
    counts: &RunCounts,
    timings: &Timings,
) -> anyhow::Result<()> {
    let summary = RunSummary {
        command,
        version: env!("CARGO_PKG_VERSION"),
        jobs: opts.jobs,
        out: opts.out.display().to_string(),
        seed: opts.config.seed,
        counts,
        timings: timings
            .entries
            .iter()
            .map(|&(stage, seconds)| Timing { stage, seconds })
            .collect(),
        config: &opts.config,
    };
    write_json(&out.join(RUN_SUMMARY_FILE), &summary)
}
