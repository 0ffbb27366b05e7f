//! Synthetic multi-channel recordings with scripted sleep stages and noisy scorers.
//!
//! Every 30 s epoch is synthesized from complex amplitudes on the 1/30 Hz grid, so
//! the same shared component can be rendered at 256 Hz and 250 Hz alike. Channel
//! `c` carries `s_c · shared + (1 − s_c) · own pink noise`, seen through a
//! channel-specific first-order high-pass.

use std::path::{Path, PathBuf};

use anyhow::Context;
use earsim_core::hypnogram::{write_labels, Hypnogram, Source};
use earsim_core::ingest::{
    write_channel_csv, HypnogramEntry, Recording, RecordingManifest, SourceEntry,
};
use earsim_core::{ChannelId, SignalTrace, Stage3, StageLabel, EPOCH_SECONDS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::config::SyntheticSpec;
use crate::output::write_atomic;

const TOP_HZ: f64 = 35.0;
const SCALE_UV: f64 = 20.0;
const NOISE_SD: f64 = 1.0;
/// Log-scale spread of the per-epoch secondary-rhythm weight.
const COMPOSITION_SD: f64 = 0.7;

/// RNG stream layout within one subject.
const STREAMS_PER_SUBJECT: u64 = 1024;
const SHARED_STREAM: u64 = 0;
const SCORER_STREAM: u64 = 1;
const CHANNEL_STREAM: u64 = 16;

fn rng(seed: u64, subject: usize, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(subject as u64 * STREAMS_PER_SUBJECT + stream);
    r
}

fn bump(f: f64, centre: f64, width: f64) -> f64 {
    (-(f - centre) * (f - centre) / (2.0 * width * width)).exp()
}

/// Relative power at `f` for a stage; `shift` jitters the peak frequencies and `mix`
/// scales the secondary rhythm per epoch.
fn stage_power(stage: Stage3, f: f64, shift: f64, mix: f64) -> f64 {
    let pink = 1.0 / f.max(0.2);
    match stage {
        Stage3::W => {
            bump(f, 10.0 + shift, 1.2) + 0.4 * mix * bump(f, 20.0 + 2.0 * shift, 4.0) + 0.05 * pink
        }
        Stage3::Nrem => {
            bump(f, 1.5 + 0.3 * shift, 1.0) + 0.15 * mix * bump(f, 13.0 + shift, 1.0) + 0.05 * pink
        }
        Stage3::Rem => {
            bump(f, 6.0 + 0.5 * shift, 1.5) + 0.2 * mix * bump(f, 20.0, 5.0) + 0.1 * pink
        }
    }
}

fn stage_sd(stage: Stage3) -> f64 {
    match stage {
        Stage3::W => 1.0,
        Stage3::Nrem => 2.5,
        Stage3::Rem => 1.2,
    }
}

fn top_bin() -> usize {
    (TOP_HZ * EPOCH_SECONDS).floor() as usize
}

/// Complex amplitudes for bins `1..=top` whose rendered epoch has standard deviation `sd`
/// in expectation and power shaped like `power`.
fn shaped(rng: &mut ChaCha8Rng, sd: f64, power: impl Fn(f64) -> f64) -> Vec<Complex<f64>> {
    let top = top_bin();
    let p: Vec<f64> = (1..=top).map(|k| power(k as f64 / EPOCH_SECONDS)).collect();
    let total: f64 = p.iter().sum();
    p.iter()
        .map(|&pk| {
            let a = sd * (pk / (4.0 * total)).sqrt();
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex::new(a * re, a * im)
        })
        .collect()
}

/// Per-epoch shared spectra of one subject.
fn shared_spectra(truth: &[Stage3], seed: u64, subject: usize) -> Vec<Vec<Complex<f64>>> {
    let mut r = rng(seed, subject, SHARED_STREAM);
    truth
        .iter()
        .map(|&stage| {
            let z: f64 = StandardNormal.sample(&mut r);
            let shift = 0.5 * z;
            let z: f64 = StandardNormal.sample(&mut r);
            let sd = stage_sd(stage) * (0.2 * z).exp();
            let z: f64 = StandardNormal.sample(&mut r);
            let mix = (COMPOSITION_SD * z).exp();
            shaped(&mut r, sd, |f| stage_power(stage, f, shift, mix))
        })
        .collect()
}

fn render_channel(
    spec: &SyntheticSpec,
    shared: &[Vec<Complex<f64>>],
    ch: ChannelId,
    fs: f64,
    low_hz: f64,
    seed: u64,
    subject: usize,
) -> Vec<f64> {
    let n = (fs * EPOCH_SECONDS).round() as usize;
    let s = spec.mixing_of(ch);
    let mut r = rng(seed, subject, CHANNEL_STREAM + ch.index() as u64);
    let gain = SCALE_UV * r.gen_range(0.8..1.2);
    let (lo, hi) = spec.low_corner_hz;
    let corner = lo * (hi / lo).powf(r.gen::<f64>());
    let fft = FftPlanner::new().plan_fft_inverse(n);
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    let mut out = Vec::with_capacity(n * shared.len());
    for epoch in shared {
        let z: f64 = StandardNormal.sample(&mut r);
        let noise = shaped(&mut r, NOISE_SD * (0.2 * z).exp(), |f| 1.0 / f);
        buf.iter_mut().for_each(|v| *v = Complex::new(0.0, 0.0));
        for (i, (&a, &b)) in epoch.iter().zip(&noise).enumerate() {
            let k = i + 1;
            let f = k as f64 / EPOCH_SECONDS;
            if f < low_hz || k >= n / 2 {
                continue;
            }
            let v = (a * s + b * (1.0 - s)) * (gain * f / f.hypot(corner));
            buf[k] = v;
            buf[n - k] = v.conj();
        }
        fft.process(&mut buf);
        out.extend(buf.iter().map(|c| c.re));
    }
    out
}

/// Scorer label for a true stage; NREM runs are split into N1, N2 and N3 by position.
fn labels_for(truth: &[Stage3]) -> Vec<StageLabel> {
    let mut out = Vec::with_capacity(truth.len());
    let mut t = 0;
    while t < truth.len() {
        let mut e = t + 1;
        while e < truth.len() && truth[e] == truth[t] {
            e += 1;
        }
        let len = e - t;
        for i in 0..len {
            out.push(match truth[t] {
                Stage3::W => StageLabel::W,
                Stage3::Rem => StageLabel::Rem,
                Stage3::Nrem if 10 * i < len => StageLabel::N1,
                Stage3::Nrem if 10 * i < 6 * len => StageLabel::N2,
                Stage3::Nrem => StageLabel::N3,
            });
        }
        t = e;
    }
    out
}

fn flip_label(r: &mut ChaCha8Rng, truth: Stage3) -> StageLabel {
    let others: Vec<Stage3> = Stage3::ALL.into_iter().filter(|&s| s != truth).collect();
    match others[r.gen_range(0..others.len())] {
        Stage3::W => StageLabel::W,
        Stage3::Nrem => StageLabel::N2,
        Stage3::Rem => StageLabel::Rem,
    }
}

/// Scorer hypnograms: the true labels with independent flips at each scorer's rate.
pub fn hypnograms(spec: &SyntheticSpec, seed: u64, subject: usize) -> Vec<Hypnogram> {
    let truth = spec.truth();
    let clean = labels_for(&truth);
    let mut r = rng(seed, subject, SCORER_STREAM);
    let id = spec.subject_id(subject);
    let mut out = Vec::new();
    for (source, noise) in [
        (Source::Psg, &spec.psg_scorer_noise),
        (Source::InEar, &spec.inear_scorer_noise),
    ] {
        for (j, &p) in noise.iter().enumerate() {
            let labels = truth
                .iter()
                .zip(&clean)
                .map(|(&t, &l)| {
                    if r.gen_bool(p) {
                        flip_label(&mut r, t)
                    } else {
                        l
                    }
                })
                .collect();
            out.push(Hypnogram {
                subject: id.clone(),
                scorer: j as u32 + 1,
                source,
                labels,
            });
        }
    }
    out
}

/// One synthetic subject, fully in memory.
pub fn generate_subject(
    spec: &SyntheticSpec,
    seed: u64,
    subject: usize,
    psg_low_hz: f64,
    inear_low_hz: f64,
) -> Recording {
    let truth = spec.truth();
    let shared = shared_spectra(&truth, seed, subject);
    let mut channels: Vec<(ChannelId, f64, f64)> = spec
        .psg_channels
        .iter()
        .map(|&c| (c, spec.psg_fs, psg_low_hz))
        .collect();
    channels.push((ChannelId::CH1, spec.inear_fs, inear_low_hz));
    let mut traces: Vec<SignalTrace<f64>> = channels
        .par_iter()
        .map(|&(ch, fs, low)| {
            let x = render_channel(spec, &shared, ch, fs, low, seed, subject);
            SignalTrace::new(ch, fs, x).expect("finite synthetic samples")
        })
        .collect();
    let inear = traces.pop().expect("in-ear trace");
    Recording {
        subject: spec.subject_id(subject),
        psg: traces,
        inear,
        hypnograms: hypnograms(spec, seed, subject),
    }
}

/// Writes every subject's channel data, hypnograms and a manifest; returns the manifest path.
pub fn write_dataset(
    spec: &SyntheticSpec,
    seed: u64,
    psg_low_hz: f64,
    inear_low_hz: f64,
    out: &Path,
) -> anyhow::Result<PathBuf> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut manifests = Vec::with_capacity(spec.subjects);
    for subject in 0..spec.subjects {
        let rec = generate_subject(spec, seed, subject, psg_low_hz, inear_low_hz);
        let dir = PathBuf::from(&rec.subject);
        std::fs::create_dir_all(out.join(&dir))?;
        let psg_path = dir.join("psg.csv.gz");
        let inear_path = dir.join("inear.csv.gz");
        write_channel_csv(&out.join(&psg_path), &rec.psg, 3)?;
        write_channel_csv(&out.join(&inear_path), std::slice::from_ref(&rec.inear), 3)?;
        let mut entries = Vec::new();
        for h in &rec.hypnograms {
            let path = dir.join(format!("hypnogram_{}_scorer{}.csv", h.source, h.scorer));
            let mut text = Vec::new();
            write_labels(&mut text, &h.labels)?;
            write_atomic(&out.join(&path), &text)?;
            entries.push(HypnogramEntry {
                scorer: h.scorer,
                source: h.source,
                path,
            });
        }
        manifests.push(RecordingManifest {
            subject: rec.subject.clone(),
            sources: vec![
                SourceEntry {
                    kind: Source::Psg,
                    fs: spec.psg_fs,
                    data_path: psg_path,
                    channel_names: spec.psg_channels.clone(),
                },
                SourceEntry {
                    kind: Source::InEar,
                    fs: spec.inear_fs,
                    data_path: inear_path,
                    channel_names: vec![ChannelId::CH1],
                },
            ],
            hypnogram_paths: entries,
        });
    }
    let path = out.join("manifest.json");
    write_atomic(&path, &crate::output::json_bytes(&manifests)?)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SyntheticSpec {
        SyntheticSpec {
            subjects: 2,
            duration_seconds: 600.0,
            psg_channels: vec!["C3-M2".parse().unwrap(), "O1-M2".parse().unwrap()],
            ..Default::default()
        }
    }

    #[test]
    fn shapes_and_determinism() {
        let spec = small();
        let a = generate_subject(&spec, 7, 1, 0.2, 0.5);
        let b = generate_subject(&spec, 7, 1, 0.2, 0.5);
        assert_eq!(a.psg.len(), 2);
        assert_eq!(a.psg[0].len(), 600 * 256);
        assert_eq!(a.inear.len(), 600 * 250);
        assert_eq!(a.psg[0].samples(), b.psg[0].samples());
        assert_eq!(a.hypnograms, b.hypnograms);
        let c = generate_subject(&spec, 8, 1, 0.2, 0.5);
        assert_ne!(a.psg[0].samples(), c.psg[0].samples());
        assert_eq!(a.subject, "S2");
    }

    #[test]
    fn zero_flip_rate_gives_identical_scorers() {
        let spec = SyntheticSpec {
            psg_scorer_noise: vec![0.0; 3],
            inear_scorer_noise: vec![0.0; 2],
            ..small()
        };
        let h = hypnograms(&spec, 1, 0);
        assert_eq!(h.len(), 5);
        assert!(h.iter().all(|x| x.labels == h[0].labels));
        assert_eq!(h[0].labels.len(), 20);
    }

    #[test]
    fn shared_component_matches_across_rates() {
        // with s = 1 both sources render the same band-limited waveform
        let mut spec = small();
        spec.mixing.insert("C3-M2".parse().unwrap(), 1.0);
        spec.mixing.insert(ChannelId::CH1, 1.0);
        let rec = generate_subject(&spec, 3, 0, 0.5, 0.5);
        let (p, q) = (rec.psg[0].samples(), rec.inear.samples());
        let ratio = {
            let sp = p.iter().map(|v| v * v).sum::<f64>() / p.len() as f64;
            let sq = q.iter().map(|v| v * v).sum::<f64>() / q.len() as f64;
            (sp / sq).sqrt()
        };
        // compare at t = 1.0 s inside the first epoch: sample 256 vs 250
        let a = p[256];
        let b = q[250] * ratio;
        assert!((a - b).abs() < 0.25 * a.abs().max(1.0), "{a} {b}");
    }

    #[test]
    fn nrem_runs_get_substages() {
        let truth = vec![Stage3::Nrem; 20];
        let l = labels_for(&truth);
        assert_eq!(l[0], StageLabel::N1);
        assert_eq!(l[5], StageLabel::N2);
        assert_eq!(l[19], StageLabel::N3);
    }
}
