//! Command-line interface.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use earsim_core::{FsiMode, Stage3};

use crate::config::{PipelineConfig, SyntheticSpec};
use crate::pipeline::{self, Inputs, RunOptions, Timings};
use crate::{report, store, synth, InputError};

#[derive(Debug, Parser)]
#[command(
    name = "earsim",
    version,
    about = "In-ear EEG vs PSG sleep-recording agreement analysis"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Recording manifest (JSON array or object); repeatable.
    #[arg(long, global = true)]
    pub manifest: Vec<PathBuf>,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true, env = "EARSIM_JOBS")]
    pub jobs: Option<usize>,
    /// Restrict the analysis to one stage (W, NREM or REM).
    #[arg(long, global = true)]
    pub stage: Option<Stage3>,
    /// Features compared per pair: the selected subset or all 45.
    #[arg(long, global = true)]
    pub selection_mode: Option<FsiMode>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scorer consensus, stage intersection and kappa.
    Consensus,
    /// Consensus, then feature matrices into <out>/features.
    Features,
    /// Selection and JSD-FSI scores from a feature store.
    Similarity {
        /// Feature store directory; defaults to <out>/features.
        #[arg(long)]
        features: Option<PathBuf>,
        /// Compare CH1 with itself instead of running the campaign.
        #[arg(long)]
        self_pair: bool,
    },
    /// Write a synthetic dataset with manifest.
    Synth {
        #[arg(long)]
        subjects: Option<usize>,
        /// Recording length in seconds.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Every stage end to end.
    Pipeline,
}

fn resolve(common: &CommonArgs) -> anyhow::Result<RunOptions> {
    let mut cfg = match &common.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if !common.manifest.is_empty() {
        cfg.manifests = common.manifest.clone();
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(s) = common.stage {
        cfg.stage = Some(s);
    }
    if let Some(m) = common.selection_mode {
        cfg.similarity.mode = m;
    }
    if common.jobs == Some(0) {
        return Err(InputError("--jobs must be at least 1".into()).into());
    }
    cfg.validate()?;
    let out = common
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .ok_or_else(|| InputError("no output directory: pass --out".into()))?;
    let jobs = common.jobs.or(cfg.jobs).unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    });
    Ok(RunOptions {
        config: cfg,
        out,
        jobs,
        self_pair: false,
    })
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let mut opts = resolve(&cli.common)?;
    let start = Instant::now();
    let mut timings = Timings::default();
    match cli.command {
        Command::Pipeline => {
            let inputs = Inputs::from_config(&opts.config)?;
            pipeline::run_pipeline(&inputs, &opts)?;
            return Ok(());
        }
        Command::Consensus => {
            let inputs = Inputs::from_config(&opts.config)?;
            report::write_config(&opts.out, &opts.config)?;
            let c = timings.time("consensus", || pipeline::run_consensus(&inputs))?;
            report::write_consensus(&opts.out, &c, opts.config.stage)?;
            let counts = report::RunCounts {
                subjects: c.subjects.len(),
                ..Default::default()
            };
            timings
                .entries
                .push(("total", start.elapsed().as_secs_f64()));
            report::write_run_summary(&opts.out, "consensus", &opts, &counts, &timings)?;
        }
        Command::Features => {
            let inputs = Inputs::from_config(&opts.config)?;
            report::write_config(&opts.out, &opts.config)?;
            let c = timings.time("consensus", || pipeline::run_consensus(&inputs))?;
            report::write_consensus(&opts.out, &c, opts.config.stage)?;
            let f = timings.time("features", || {
                pipeline::run_features(&inputs, &c.subjects, &opts)
            })?;
            store::write_store(&opts.out.join("features"), &f.datasets, &f.notices)?;
            let counts = report::RunCounts {
                subjects: c.subjects.len(),
                datasets: f.datasets.len(),
                notices: f.notices.len(),
                ..Default::default()
            };
            timings
                .entries
                .push(("total", start.elapsed().as_secs_f64()));
            report::write_run_summary(&opts.out, "features", &opts, &counts, &timings)?;
        }
        Command::Similarity {
            features,
            self_pair,
        } => {
            opts.self_pair = self_pair;
            let dir = features.unwrap_or_else(|| opts.out.join("features"));
            let (index, mut datasets) = store::read_store(&dir).context("loading feature store")?;
            if let Some(s) = opts.config.stage {
                datasets.retain(|d| d.stage == s);
            }
            let sim = timings.time("similarity", || pipeline::run_similarity(&datasets, &opts))?;
            let counts = report::write_similarity(&opts.out, &sim.outcomes, &opts)?;
            let counts = report::RunCounts {
                datasets: datasets.len(),
                notices: index.notices.len(),
                ..counts
            };
            timings
                .entries
                .push(("total", start.elapsed().as_secs_f64()));
            report::write_run_summary(&opts.out, "similarity", &opts, &counts, &timings)?;
        }
        Command::Synth { subjects, duration } => {
            let mut spec = opts.config.synthetic.clone().unwrap_or_default();
            if let Some(n) = subjects {
                spec.subjects = n;
            }
            if let Some(d) = duration {
                spec.duration_seconds = d;
            }
            spec.validate()?;
            let manifest = write_synth(&spec, &opts)?;
            println!("{}", manifest.display());
        }
    }
    Ok(())
}

fn write_synth(spec: &SyntheticSpec, opts: &RunOptions) -> anyhow::Result<PathBuf> {
    let pre = &opts.config.preprocess;
    opts.install(|| {
        synth::write_dataset(
            spec,
            opts.config.seed,
            pre.psg_band.0,
            pre.inear_band.0,
            &opts.out,
        )
    })?
}
