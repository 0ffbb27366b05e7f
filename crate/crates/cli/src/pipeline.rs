//! Stage runners shared by the subcommands.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use earsim_core::consensus::{
    subject_consensus, variability_report, KappaReport, SubjectConsensus,
};
use earsim_core::features::FeatureExtractor;
use earsim_core::hypnogram::Hypnogram;
use earsim_core::ingest::{
    load_hypnograms, load_recording, missing_files, prepare, read_manifests, Recording,
    RecordingManifest,
};
use earsim_core::similarity::campaign::evaluate_pair;
use earsim_core::similarity::{campaign_pairs, PairKind, PairOutcome, PairSpec, PreparedDataset};
use earsim_core::{ChannelId, FeatureDataset, Stage3};
use rayon::prelude::*;

use crate::config::{PipelineConfig, SyntheticSpec};
use crate::report;
use crate::synth;
use crate::InputError;

/// Where recordings come from.
pub enum Inputs {
    Manifests(Vec<(PathBuf, RecordingManifest)>),
    Synthetic { spec: SyntheticSpec, seed: u64 },
}

impl Inputs {
    /// Manifests when any are given, else the synthetic spec of the config.
    pub fn from_config(cfg: &PipelineConfig) -> anyhow::Result<Self> {
        if !cfg.manifests.is_empty() {
            return Self::from_manifests(&cfg.manifests);
        }
        match &cfg.synthetic {
            Some(spec) => Ok(Inputs::Synthetic {
                spec: spec.clone(),
                seed: cfg.seed,
            }),
            None => Err(InputError(
                "no input: pass --manifest or a config with a synthetic section".into(),
            )
            .into()),
        }
    }

    pub fn from_manifests(paths: &[PathBuf]) -> anyhow::Result<Self> {
        let mut all = Vec::new();
        let mut missing = Vec::new();
        for path in paths {
            let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
            for m in read_manifests(path)? {
                m.validate()?;
                missing.extend(missing_files(&m, &base));
                all.push((base.clone(), m));
            }
        }
        if !missing.is_empty() {
            let list: Vec<String> = missing.iter().map(|p| p.display().to_string()).collect();
            return Err(
                InputError(format!("missing input files:\n  {}", list.join("\n  "))).into(),
            );
        }
        let mut ids: Vec<&str> = all.iter().map(|(_, m)| m.subject.as_str()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(InputError(format!("subject {} listed twice", w[0])).into());
        }
        Ok(Inputs::Manifests(all))
    }

    pub fn len(&self) -> usize {
        match self {
            Inputs::Manifests(m) => m.len(),
            Inputs::Synthetic { spec, .. } => spec.subjects,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn subject(&self, i: usize) -> String {
        match self {
            Inputs::Manifests(m) => m[i].1.subject.clone(),
            Inputs::Synthetic { spec, .. } => spec.subject_id(i),
        }
    }

    pub fn hypnograms(&self, i: usize) -> anyhow::Result<Vec<Hypnogram>> {
        match self {
            Inputs::Manifests(m) => Ok(load_hypnograms(&m[i].1, &m[i].0)?),
            Inputs::Synthetic { spec, seed } => Ok(synth::hypnograms(spec, *seed, i)),
        }
    }

    pub fn recording(&self, i: usize, cfg: &PipelineConfig) -> anyhow::Result<Recording> {
        match self {
            Inputs::Manifests(m) => Ok(load_recording(&m[i].1, &m[i].0)?),
            Inputs::Synthetic { spec, seed } => Ok(synth::generate_subject(
                spec,
                *seed,
                i,
                cfg.preprocess.psg_band.0,
                cfg.preprocess.inear_band.0,
            )),
        }
    }
}

pub struct RunOptions {
    pub config: PipelineConfig,
    pub out: PathBuf,
    pub jobs: usize,
    /// Replace the campaign by CH1-vs-CH1 comparisons.
    pub self_pair: bool,
}

impl RunOptions {
    pub fn stages(&self) -> Vec<Stage3> {
        match self.config.stage {
            Some(s) => vec![s],
            None => Stage3::ALL.to_vec(),
        }
    }

    /// Runs `f` on a dedicated pool of `jobs` threads.
    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> anyhow::Result<R> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()?;
        Ok(pool.install(f))
    }
}

pub struct ConsensusOutput {
    pub subjects: Vec<SubjectConsensus>,
    pub kappa: KappaReport,
}

pub fn run_consensus(inputs: &Inputs) -> anyhow::Result<ConsensusOutput> {
    let mut subjects = Vec::with_capacity(inputs.len());
    let mut all = Vec::new();
    for i in 0..inputs.len() {
        let id = inputs.subject(i);
        let hyps = inputs.hypnograms(i)?;
        let count = hyps.iter().map(|h| h.labels.len()).min().unwrap_or(0);
        subjects.push(subject_consensus(&id, &hyps, count)?);
        all.extend(hyps);
    }
    Ok(ConsensusOutput {
        subjects,
        kappa: variability_report(&all),
    })
}

pub struct FeatureOutput {
    pub datasets: Vec<FeatureDataset<f64>>,
    pub notices: Vec<String>,
}

/// Feature matrices of every channel over the intersection epochs of each stage.
pub fn run_features(
    inputs: &Inputs,
    consensus: &[SubjectConsensus],
    opts: &RunOptions,
) -> anyhow::Result<FeatureOutput> {
    let cfg = &opts.config;
    let mut datasets = Vec::new();
    let mut notices = Vec::new();
    for (i, cons) in consensus.iter().enumerate() {
        let rec = inputs.recording(i, cfg)?;
        let prepared = prepare(rec, &cfg.preprocess)
            .with_context(|| format!("preparing subject {}", cons.subject))?;
        let mut traces = prepared.traces;
        traces.sort_by_key(|t| t.channel());
        let mut stage_epochs = Vec::new();
        for stage in opts.stages() {
            let epochs: Vec<usize> = cons
                .intersection
                .epochs_of(stage)
                .into_iter()
                .filter(|&t| t < prepared.grid.epoch_count)
                .collect();
            if epochs.is_empty() {
                notices.push(format!(
                    "{}: no {stage} epochs in the consensus intersection; {stage} datasets omitted",
                    cons.subject
                ));
            } else {
                stage_epochs.push((stage, epochs));
            }
        }
        let tasks: Vec<(usize, usize)> = (0..traces.len())
            .flat_map(|c| (0..stage_epochs.len()).map(move |s| (c, s)))
            .collect();
        let subject_sets = opts.install(|| {
            tasks
                .par_iter()
                .map(|&(c, s)| {
                    let (stage, epochs) = &stage_epochs[s];
                    FeatureExtractor::new(cfg.features.clone()).dataset(
                        &cons.subject,
                        &traces[c],
                        *stage,
                        epochs,
                    )
                })
                .collect::<Result<Vec<_>, _>>()
        })??;
        datasets.extend(subject_sets);
    }
    Ok(FeatureOutput { datasets, notices })
}

pub struct SimilarityOutput {
    pub outcomes: Vec<PairOutcome>,
}

/// The pair campaign over all datasets: per subject and stage, 21 in-ear pairs and the PSG pairs.
pub fn run_similarity(
    datasets: &[FeatureDataset<f64>],
    opts: &RunOptions,
) -> anyhow::Result<SimilarityOutput> {
    let mut by_subject: BTreeMap<&str, BTreeMap<(Stage3, ChannelId), PreparedDataset<f64>>> =
        BTreeMap::new();
    let mut channels: BTreeMap<&str, Vec<ChannelId>> = BTreeMap::new();
    for ds in datasets {
        by_subject.entry(&ds.subject).or_default().insert(
            (ds.stage, ds.channel),
            PreparedDataset::new(ds.matrix.clone()),
        );
        let list = channels.entry(&ds.subject).or_default();
        if !ds.channel.is_inear() && !list.contains(&ds.channel) {
            list.push(ds.channel);
        }
    }
    let mut tasks: Vec<(&str, Stage3, PairSpec)> = Vec::new();
    for (subject, chans) in &mut channels {
        chans.sort();
        let pairs = if opts.self_pair {
            vec![PairSpec {
                kind: PairKind::InEar,
                a: ChannelId::CH1,
                b: ChannelId::CH1,
            }]
        } else {
            campaign_pairs(chans)
        };
        for stage in opts.stages() {
            tasks.extend(pairs.iter().map(|&p| (*subject, stage, p)));
        }
    }
    let sim = &opts.config.similarity;
    let outcomes = opts.install(|| {
        tasks
            .par_iter()
            .map(|&(subject, stage, spec)| {
                let sets = &by_subject[subject];
                evaluate_pair(
                    subject,
                    stage,
                    spec,
                    sets.get(&(stage, spec.a)),
                    sets.get(&(stage, spec.b)),
                    sim,
                )
            })
            .collect::<Result<Vec<_>, _>>()
    })??;
    Ok(SimilarityOutput { outcomes })
}

#[derive(Default)]
pub struct Timings {
    pub entries: Vec<(&'static str, f64)>,
}

impl Timings {
    pub fn time<R>(&mut self, name: &'static str, f: impl FnOnce() -> R) -> R {
        let t = Instant::now();
        let r = f();
        self.entries.push((name, t.elapsed().as_secs_f64()));
        r
    }
}

/// Consensus, features, selection, similarity and stage tests with every report.
pub fn run_pipeline(inputs: &Inputs, opts: &RunOptions) -> anyhow::Result<report::RunCounts> {
    let start = Instant::now();
    let mut timings = Timings::default();
    report::write_config(&opts.out, &opts.config)?;
    let consensus = timings
        .time("consensus", || run_consensus(inputs))
        .context("consensus stage")?;
    report::write_consensus(&opts.out, &consensus, opts.config.stage)?;
    let features = timings
        .time("features", || {
            run_features(inputs, &consensus.subjects, opts)
        })
        .context("features stage")?;
    crate::store::write_store(
        &opts.out.join("features"),
        &features.datasets,
        &features.notices,
    )?;
    let sim = timings
        .time("similarity", || run_similarity(&features.datasets, opts))
        .context("similarity stage")?;
    let counts = timings.time("reports", || {
        report::write_similarity(&opts.out, &sim.outcomes, opts)
    })?;
    let counts = report::RunCounts {
        subjects: consensus.subjects.len(),
        datasets: features.datasets.len(),
        notices: features.notices.len(),
        ..counts
    };
    timings
        .entries
        .push(("total", start.elapsed().as_secs_f64()));
    report::write_run_summary(&opts.out, "pipeline", opts, &counts, &timings)?;
    Ok(counts)
}
