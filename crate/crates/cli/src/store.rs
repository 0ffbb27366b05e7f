//! On-disk feature store: one CSV matrix per (subject, channel, stage) plus an index.

use std::path::{Path, PathBuf};

use anyhow::Context;
use earsim_core::{ChannelId, FeatureDataset, Stage3, FEATURE_NAMES, N_FEATURES};
use serde::{Deserialize, Serialize};

use crate::output::{write_atomic, write_json};
use crate::InputError;

pub const INDEX_FILE: &str = "index.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoreEntry {
    pub subject: String,
    pub channel: ChannelId,
    pub stage: Stage3,
    pub rows: usize,
    /// Relative to the store directory.
    pub path: PathBuf,
    pub degenerate_counts: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StoreIndex {
    pub feature_names: Vec<String>,
    pub datasets: Vec<StoreEntry>,
    /// Datasets that were not written, with the reason.
    pub notices: Vec<String>,
}

fn fmt_f64(buf: &mut ryu::Buffer, v: f64) -> String {
    buf.format(v).to_string()
}

pub fn dataset_csv(ds: &FeatureDataset<f64>) -> Vec<u8> {
    let mut out = String::from("epoch");
    for name in FEATURE_NAMES {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    let mut buf = ryu::Buffer::new();
    for (i, &epoch) in ds.epochs.iter().enumerate() {
        out.push_str(&epoch.to_string());
        for &v in ds.matrix.row(i) {
            out.push(',');
            out.push_str(&fmt_f64(&mut buf, v));
        }
        out.push('\n');
    }
    out.into_bytes()
}

pub fn parse_dataset_csv(
    text: &str,
    entry: &StoreEntry,
    origin: &Path,
) -> Result<FeatureDataset<f64>, InputError> {
    let err = |line: usize, m: String| InputError(format!("{}:{line}: {m}", origin.display()));
    let mut lines = text.lines().enumerate();
    let expected: Vec<&str> = std::iter::once("epoch").chain(FEATURE_NAMES).collect();
    match lines.next() {
        Some((_, h)) if h.split(',').eq(expected.iter().copied()) => {}
        _ => {
            return Err(err(
                1,
                "header does not list epoch and the 45 features in order".into(),
            ))
        }
    }
    let mut ds = FeatureDataset::new(&entry.subject, entry.channel, entry.stage);
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let epoch: usize = cols
            .next()
            .and_then(|c| c.trim().parse().ok())
            .ok_or_else(|| err(i + 1, "bad epoch index".into()))?;
        let values: Vec<f64> = cols
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| err(i + 1, e.to_string()))?;
        if values.len() != N_FEATURES {
            return Err(err(
                i + 1,
                format!("expected {N_FEATURES} feature values, got {}", values.len()),
            ));
        }
        ds.push(epoch, &values, 0)
            .map_err(|e| err(i + 1, e.to_string()))?;
    }
    if ds.rows() != entry.rows {
        return Err(err(
            0,
            format!("index lists {} rows, file has {}", entry.rows, ds.rows()),
        ));
    }
    if entry.degenerate_counts.len() == N_FEATURES {
        ds.degenerate_counts = entry.degenerate_counts.clone();
    }
    Ok(ds)
}

fn relative_path(ds: &FeatureDataset<f64>) -> PathBuf {
    PathBuf::from(&ds.subject).join(format!("{}_{}.csv", ds.channel, ds.stage))
}

/// Writes every dataset and the index; datasets are listed in the given order.
pub fn write_store(
    dir: &Path,
    datasets: &[FeatureDataset<f64>],
    notices: &[String],
) -> anyhow::Result<StoreIndex> {
    let mut index = StoreIndex {
        feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        datasets: Vec::with_capacity(datasets.len()),
        notices: notices.to_vec(),
    };
    for ds in datasets {
        let rel = relative_path(ds);
        write_atomic(&dir.join(&rel), &dataset_csv(ds))?;
        index.datasets.push(StoreEntry {
            subject: ds.subject.clone(),
            channel: ds.channel,
            stage: ds.stage,
            rows: ds.rows(),
            path: rel,
            degenerate_counts: ds.degenerate_counts.clone(),
        });
    }
    write_json(&dir.join(INDEX_FILE), &index)?;
    Ok(index)
}

pub fn read_store(dir: &Path) -> anyhow::Result<(StoreIndex, Vec<FeatureDataset<f64>>)> {
    let index_path = dir.join(INDEX_FILE);
    let text = std::fs::read_to_string(&index_path)
        .map_err(|e| InputError(format!("{}: {e}", index_path.display())))?;
    let index: StoreIndex = serde_json::from_str(&text)
        .map_err(|e| InputError(format!("{}: {e}", index_path.display())))?;
    let mut out = Vec::with_capacity(index.datasets.len());
    for entry in &index.datasets {
        let path = dir.join(&entry.path);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| InputError(format!("{}: {e}", path.display())))?;
        out.push(parse_dataset_csv(&text, entry, &path).with_context(|| "reading feature store")?);
    }
    Ok((index, out))
}
