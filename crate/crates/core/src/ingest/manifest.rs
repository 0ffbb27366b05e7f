//! Recording manifests and channel-data CSV files.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::ChannelId;
use crate::error::{Error, Result};
use crate::hypnogram::{read_labels, Hypnogram, Source};
use crate::signal::SignalTrace;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceEntry {
    pub kind: Source,
    pub fs: f64,
    pub data_path: PathBuf,
    pub channel_names: Vec<ChannelId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypnogramEntry {
    pub scorer: u32,
    pub source: Source,
    pub path: PathBuf,
}

/// Where one subject's data and hypnograms live. Relative paths resolve against
/// the manifest file's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordingManifest {
    pub subject: String,
    pub sources: Vec<SourceEntry>,
    pub hypnogram_paths: Vec<HypnogramEntry>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ManifestFile {
    One(RecordingManifest),
    Many(Vec<RecordingManifest>),
}

impl RecordingManifest {
    pub fn source(&self, kind: Source) -> Option<&SourceEntry> {
        self.sources.iter().find(|s| s.kind == kind)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Invalid(format!("subject {}: {m}", self.subject)));
        for kind in Source::ALL {
            let n = self.sources.iter().filter(|s| s.kind == kind).count();
            if n != 1 {
                return bad(format!("expected exactly one {kind} source, found {n}"));
            }
        }
        for s in &self.sources {
            if !(s.fs.is_finite() && s.fs > 0.0) {
                return bad(format!("{} sampling rate must be positive", s.kind));
            }
        }
        let psg = self.source(Source::Psg).expect("checked above");
        if psg.channel_names.is_empty() {
            return bad("PSG source lists no channels".into());
        }
        let mut seen = std::collections::BTreeSet::new();
        for c in &psg.channel_names {
            if c.is_inear() {
                return bad("CH1 listed under PSG".into());
            }
            if !seen.insert(*c) {
                return bad(format!("duplicate PSG channel {c}"));
            }
        }
        let inear = self.source(Source::InEar).expect("checked above");
        if inear.channel_names != [ChannelId::CH1] {
            return bad("in-ear source must list exactly [CH1]".into());
        }
        Ok(())
    }

    /// Every file the manifest refers to, resolved against `base`.
    pub fn referenced_paths(&self, base: &Path) -> Vec<PathBuf> {
        self.sources
            .iter()
            .map(|s| base.join(&s.data_path))
            .chain(self.hypnogram_paths.iter().map(|h| base.join(&h.path)))
            .collect()
    }
}

/// Reads a manifest file holding one subject object or an array of them.
pub fn read_manifests(path: &Path) -> Result<Vec<RecordingManifest>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parsed: ManifestFile = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    let manifests = match parsed {
        ManifestFile::One(m) => vec![m],
        ManifestFile::Many(v) => v,
    };
    for m in &manifests {
        m.validate()?;
    }
    Ok(manifests)
}

fn open_maybe_gz(path: &Path) -> Result<Box<dyn BufRead>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader: Box<dyn Read> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(flate2::read::GzDecoder::new(file))
    } else {
        Box::new(file)
    };
    Ok(Box::new(BufReader::with_capacity(1 << 16, reader)))
}

/// Parses channel data: one column per channel in `channels` order, one row per sample.
/// An optional header row must name the same channels.
pub fn parse_channel_csv(
    reader: impl BufRead,
    channels: &[ChannelId],
    origin: &Path,
) -> Result<Vec<Vec<f64>>> {
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); channels.len()];
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(origin, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != channels.len() {
            return Err(Error::parse(
                origin,
                lineno,
                format!(
                    "expected {} columns, found {}",
                    channels.len(),
                    fields.len()
                ),
            ));
        }
        if lineno == 1 && fields[0].parse::<f64>().is_err() {
            for (f, c) in fields.iter().zip(channels) {
                let named: ChannelId = f
                    .parse()
                    .map_err(|e: Error| Error::parse(origin, lineno, e.to_string()))?;
                if named != *c {
                    return Err(Error::parse(
                        origin,
                        lineno,
                        format!("header names {named} where manifest expects {c}"),
                    ));
                }
            }
            continue;
        }
        for (col, f) in columns.iter_mut().zip(&fields) {
            let v: f64 = f
                .parse()
                .map_err(|_| Error::parse(origin, lineno, format!("not a number: {f:?}")))?;
            if !v.is_finite() {
                return Err(Error::parse(origin, lineno, "non-finite sample"));
            }
            col.push(v);
        }
    }
    Ok(columns)
}

pub fn read_channel_csv(path: &Path, channels: &[ChannelId]) -> Result<Vec<Vec<f64>>> {
    parse_channel_csv(open_maybe_gz(path)?, channels, path)
}

/// Writes channel data with a header row; `.gz` paths are gzip-compressed.
pub fn write_channel_csv(path: &Path, traces: &[SignalTrace<f64>], decimals: usize) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w: Box<dyn Write> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(flate2::write::GzEncoder::new(
            file,
            flate2::Compression::fast(),
        ))
    } else {
        Box::new(file)
    };
    let io = |e| Error::io(path, e);
    let mut out = std::io::BufWriter::with_capacity(1 << 16, &mut w);
    let header: Vec<&str> = traces.iter().map(|t| t.channel().name()).collect();
    writeln!(out, "{}", header.join(",")).map_err(io)?;
    let n = traces.iter().map(SignalTrace::len).min().unwrap_or(0);
    let mut line = String::new();
    for i in 0..n {
        line.clear();
        for (k, t) in traces.iter().enumerate() {
            if k > 0 {
                line.push(',');
            }
            use std::fmt::Write as _;
            let _ = write!(line, "{:.*}", decimals, t.samples()[i]);
        }
        line.push('\n');
        out.write_all(line.as_bytes()).map_err(io)?;
    }
    out.flush().map_err(io)?;
    drop(out);
    w.flush().map_err(io)?;
    Ok(())
}

/// One subject's raw inputs.
#[derive(Clone, Debug)]
pub struct Recording {
    pub subject: String,
    pub psg: Vec<SignalTrace<f64>>,
    pub inear: SignalTrace<f64>,
    pub hypnograms: Vec<Hypnogram>,
}

/// Lists referenced files that do not exist.
pub fn missing_files(manifest: &RecordingManifest, base: &Path) -> Vec<PathBuf> {
    manifest
        .referenced_paths(base)
        .into_iter()
        .filter(|p| !p.exists())
        .collect()
}

pub fn load_hypnograms(manifest: &RecordingManifest, base: &Path) -> Result<Vec<Hypnogram>> {
    manifest
        .hypnogram_paths
        .iter()
        .map(|h| {
            Ok(Hypnogram {
                subject: manifest.subject.clone(),
                scorer: h.scorer,
                source: h.source,
                labels: read_labels(&base.join(&h.path))?,
            })
        })
        .collect()
}

pub fn load_recording(manifest: &RecordingManifest, base: &Path) -> Result<Recording> {
    manifest.validate()?;
    let load = |kind: Source| -> Result<Vec<SignalTrace<f64>>> {
        let entry = manifest.source(kind).expect("validated");
        let columns = read_channel_csv(&base.join(&entry.data_path), &entry.channel_names)?;
        columns
            .into_iter()
            .zip(&entry.channel_names)
            .map(|(col, &ch)| SignalTrace::new(ch, entry.fs, col))
            .collect()
    };
    let psg = load(Source::Psg)?;
    let inear = load(Source::InEar)?.pop().expect("one in-ear channel");
    Ok(Recording {
        subject: manifest.subject.clone(),
        psg,
        inear,
        hypnograms: load_hypnograms(manifest, base)?,
    })
}
