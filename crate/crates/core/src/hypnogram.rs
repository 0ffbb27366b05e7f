//! Per-scorer hypnograms and their `epoch,label` CSV form.

use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stage::StageLabel;

/// Which recording a hypnogram was scored on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Source {
    #[serde(rename = "PSG")]
    Psg,
    #[serde(rename = "InEar")]
    InEar,
}

impl Source {
    pub const ALL: [Source; 2] = [Source::Psg, Source::InEar];

    pub fn as_str(self) -> &'static str {
        match self {
            Source::Psg => "PSG",
            Source::InEar => "InEar",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "psg" => Ok(Source::Psg),
            "inear" | "in-ear" | "in_ear" => Ok(Source::InEar),
            other => Err(Error::Invalid(format!("unknown source {other:?}"))),
        }
    }
}

/// One scorer's labels for one source of one subject.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypnogram {
    pub subject: String,
    pub scorer: u32,
    pub source: Source,
    pub labels: Vec<StageLabel>,
}

impl Hypnogram {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Parses the `epoch,label` CSV body. Epoch indices must be 0-based and contiguous.
///
/// `origin` is only used to name the file in error messages.
pub fn parse_labels(reader: impl BufRead, origin: &Path) -> Result<Vec<StageLabel>> {
    let mut labels = Vec::new();
    let mut saw_header = false;
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(origin, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if !saw_header {
            let cols: Vec<_> = trimmed
                .split(',')
                .map(|c| c.trim().to_ascii_lowercase())
                .collect();
            if cols != ["epoch", "label"] {
                return Err(Error::parse(
                    origin,
                    lineno,
                    "expected header `epoch,label`",
                ));
            }
            saw_header = true;
            continue;
        }
        let mut cols = trimmed.split(',');
        let (Some(epoch), Some(label), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(Error::parse(origin, lineno, "expected two columns"));
        };
        let epoch: usize = epoch.trim().parse().map_err(|_| {
            Error::parse(
                origin,
                lineno,
                format!("bad epoch index {:?}", epoch.trim()),
            )
        })?;
        if epoch != labels.len() {
            return Err(Error::parse(
                origin,
                lineno,
                format!("epoch {epoch} out of sequence (expected {})", labels.len()),
            ));
        }
        let label = label
            .parse::<StageLabel>()
            .map_err(|e| Error::parse(origin, lineno, e.to_string()))?;
        labels.push(label);
    }
    if !saw_header {
        return Err(Error::parse(origin, 1, "missing header `epoch,label`"));
    }
    Ok(labels)
}

pub fn read_labels(path: &Path) -> Result<Vec<StageLabel>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_labels(std::io::BufReader::new(file), path)
}

pub fn write_labels(mut w: impl Write, labels: &[StageLabel]) -> std::io::Result<()> {
    writeln!(w, "epoch,label")?;
    for (t, l) in labels.iter().enumerate() {
        writeln!(w, "{t},{l}")?;
    }
    Ok(())
}
