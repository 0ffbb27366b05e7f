//! Scorer agreement: soft-agreement, ranking, majority vote, cross-source
//! intersection and Cohen's kappa.
//!
//! Epochs where any scorer of a source gave MOVEMENT or UNKNOWN are excluded
//! from that source's soft-agreement and consensus; kappa drops an epoch when
//! either of its two sequences has no three-class label there.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypnogram::{Hypnogram, Source};
use crate::stage::{Stage3, StageLabel};

const K: usize = Stage3::K;

/// Collapsed labels per scorer, `None` on excluded epochs (shared across scorers).
struct Panel {
    columns: Vec<Vec<Option<Stage3>>>,
    len: usize,
    excluded: usize,
}

impl Panel {
    fn new(hyps: &[&[StageLabel]]) -> Result<Self> {
        if hyps.len() < 2 {
            return Err(Error::TooFewScorers(hyps.len()));
        }
        let len = hyps[0].len();
        if let Some(h) = hyps.iter().find(|h| h.len() != len) {
            return Err(Error::LengthMismatch {
                expected: len,
                actual: h.len(),
            });
        }
        if len == 0 {
            return Err(Error::Empty("hypnogram"));
        }
        let mut columns: Vec<Vec<Option<Stage3>>> = hyps
            .iter()
            .map(|h| h.iter().map(|l| l.collapse()).collect())
            .collect();
        let mut excluded = 0;
        for t in 0..len {
            if columns.iter().any(|c| c[t].is_none()) {
                excluded += 1;
                for c in &mut columns {
                    c[t] = None;
                }
            }
        }
        Ok(Self {
            columns,
            len,
            excluded,
        })
    }

    fn votes(&self, t: usize) -> Option<[usize; K]> {
        let mut counts = [0; K];
        for c in &self.columns {
            counts[c[t]?.index()] += 1;
        }
        Some(counts)
    }
}

/// Soft-agreement of each scorer against the other `J − 1`, in input order.
pub fn soft_agreement(hyps: &[&[StageLabel]]) -> Result<Vec<f64>> {
    let panel = Panel::new(hyps)?;
    let kept = panel.len - panel.excluded;
    if kept == 0 {
        return Err(Error::Empty(
            "epochs with a three-class label from every scorer",
        ));
    }
    let mut sums = vec![0.0; hyps.len()];
    for t in 0..panel.len {
        let Some(counts) = panel.votes(t) else {
            continue;
        };
        for (j, col) in panel.columns.iter().enumerate() {
            let own = col[t].expect("kept epoch").index();
            let mut others = counts;
            others[own] -= 1;
            let top = *others.iter().max().expect("K > 0");
            sums[j] += others[own] as f64 / top as f64;
        }
    }
    Ok(sums.into_iter().map(|s| s / kept as f64).collect())
}

/// Scorer ids by descending score; equal scores keep ascending id order.
pub fn rank_scorers(scorers: &[u32], scores: &[f64]) -> Vec<u32> {
    let mut order: Vec<(u32, f64)> = scorers
        .iter()
        .copied()
        .zip(scores.iter().copied())
        .collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    order.into_iter().map(|(id, _)| id).collect()
}

/// Per-epoch consensus of one source.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsensusHypnogram {
    pub labels: Vec<Option<Stage3>>,
    pub tie_flags: Vec<bool>,
}

/// Most-voted class per epoch. On a tie, the label of the best-ranked scorer
/// whose label is one of the tied classes.
pub fn majority_vote(
    hyps: &[&[StageLabel]],
    scorers: &[u32],
    ranking: &[u32],
) -> Result<ConsensusHypnogram> {
    let panel = Panel::new(hyps)?;
    if scorers.len() != hyps.len() {
        return Err(Error::LengthMismatch {
            expected: hyps.len(),
            actual: scorers.len(),
        });
    }
    let rank_cols: Vec<usize> = ranking
        .iter()
        .map(|id| {
            scorers
                .iter()
                .position(|s| s == id)
                .ok_or_else(|| Error::Invalid(format!("ranking names unknown scorer {id}")))
        })
        .collect::<Result<_>>()?;
    let mut labels = Vec::with_capacity(panel.len);
    let mut tie_flags = Vec::with_capacity(panel.len);
    for t in 0..panel.len {
        let Some(counts) = panel.votes(t) else {
            labels.push(None);
            tie_flags.push(false);
            continue;
        };
        let top = *counts.iter().max().expect("K > 0");
        let tied = counts.iter().filter(|&&c| c == top).count();
        if tied == 1 {
            let k = counts.iter().position(|&c| c == top).expect("present");
            labels.push(Stage3::from_index(k));
            tie_flags.push(false);
        } else {
            let pick = rank_cols
                .iter()
                .filter_map(|&j| panel.columns[j][t])
                .find(|s| counts[s.index()] == top);
            labels.push(pick);
            tie_flags.push(true);
        }
    }
    Ok(ConsensusHypnogram { labels, tie_flags })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageCount {
    pub stage: Stage3,
    pub epochs: usize,
    pub percent: f64,
}

/// Epochs on which both consensuses agree, with per-stage counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Intersection {
    pub labels: Vec<Option<Stage3>>,
    pub counts: Vec<StageCount>,
    pub total: usize,
}

impl Intersection {
    pub fn epochs_of(&self, stage: Stage3) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == Some(stage))
            .map(|(t, _)| t)
            .collect()
    }

    pub fn count(&self, stage: Stage3) -> usize {
        self.counts[stage.index()].epochs
    }
}

pub fn stage_intersection(
    psg: &ConsensusHypnogram,
    inear: &ConsensusHypnogram,
) -> Result<Intersection> {
    if psg.labels.len() != inear.labels.len() {
        return Err(Error::LengthMismatch {
            expected: psg.labels.len(),
            actual: inear.labels.len(),
        });
    }
    let labels: Vec<Option<Stage3>> = psg
        .labels
        .iter()
        .zip(&inear.labels)
        .map(|(a, b)| if a == b { *a } else { None })
        .collect();
    let mut n = [0usize; K];
    for s in labels.iter().flatten() {
        n[s.index()] += 1;
    }
    let total: usize = n.iter().sum();
    let counts = Stage3::ALL
        .iter()
        .map(|&stage| StageCount {
            stage,
            epochs: n[stage.index()],
            percent: if total == 0 {
                0.0
            } else {
                100.0 * n[stage.index()] as f64 / total as f64
            },
        })
        .collect();
    Ok(Intersection {
        labels,
        counts,
        total,
    })
}

/// Unweighted three-class Cohen's kappa.
pub fn cohens_kappa(a: &[Stage3], b: &[Stage3]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::Empty("label sequence"));
    }
    let n = a.len() as f64;
    let mut table = [[0usize; K]; K];
    for (x, y) in a.iter().zip(b) {
        table[x.index()][y.index()] += 1;
    }
    let p_o = (0..K).map(|k| table[k][k]).sum::<usize>() as f64 / n;
    let p_e: f64 = (0..K)
        .map(|k| {
            let ra = table[k].iter().sum::<usize>() as f64 / n;
            let cb = (0..K).map(|i| table[i][k]).sum::<usize>() as f64 / n;
            ra * cb
        })
        .sum();
    if (1.0 - p_e).abs() < 1e-15 {
        // both raters used one and the same class throughout
        return Ok(1.0);
    }
    Ok(((p_o - p_e) / (1.0 - p_e)).clamp(-1.0, 1.0))
}

/// Kappa over raw labels, skipping epochs where either side has no three-class label.
pub fn kappa_labels(a: &[StageLabel], b: &[StageLabel]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let (x, y): (Vec<Stage3>, Vec<Stage3>) = a
        .iter()
        .zip(b)
        .filter_map(|(p, q)| Some((p.collapse()?, q.collapse()?)))
        .unzip();
    cohens_kappa(&x, &y)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KappaKind {
    /// Same scorer, PSG vs in-ear hypnogram.
    #[serde(rename = "intra")]
    Intra,
    #[serde(rename = "inter-PSG")]
    InterPsg,
    #[serde(rename = "inter-InEar")]
    InterInEar,
}

impl KappaKind {
    pub fn as_str(self) -> &'static str {
        match self {
            KappaKind::Intra => "intra",
            KappaKind::InterPsg => "inter-PSG",
            KappaKind::InterInEar => "inter-InEar",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaRow {
    pub subject: String,
    pub kind: KappaKind,
    /// One scorer for intra rows, two for inter rows.
    pub scorers: Vec<u32>,
    pub value: f64,
}

impl KappaRow {
    pub fn scorer_label(&self) -> String {
        self.scorers
            .iter()
            .map(u32::to_string)
            .collect::<Vec<_>>()
            .join("-")
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KappaReport {
    pub rows: Vec<KappaRow>,
    /// Hypnograms needed for a comparison but absent, or comparisons with no usable epoch.
    pub missing: Vec<String>,
}

/// Intra-scorer (PSG vs in-ear) and inter-scorer (per source) kappa for every subject.
pub fn variability_report(hyps: &[Hypnogram]) -> KappaReport {
    let mut report = KappaReport::default();
    let mut subjects: Vec<&str> = hyps.iter().map(|h| h.subject.as_str()).collect();
    subjects.sort_unstable();
    subjects.dedup();
    for subject in subjects {
        let of = |source: Source| {
            let mut v: Vec<&Hypnogram> = hyps
                .iter()
                .filter(|h| h.subject == subject && h.source == source)
                .collect();
            v.sort_by_key(|h| h.scorer);
            v
        };
        let (psg, inear) = (of(Source::Psg), of(Source::InEar));
        let mut ids: Vec<u32> = psg.iter().chain(&inear).map(|h| h.scorer).collect();
        ids.sort_unstable();
        ids.dedup();
        for id in ids {
            let p = psg.iter().find(|h| h.scorer == id);
            let q = inear.iter().find(|h| h.scorer == id);
            match (p, q) {
                (Some(p), Some(q)) => {
                    push_kappa(&mut report, subject, KappaKind::Intra, vec![id], p, q)
                }
                (Some(_), None) => report.missing.push(format!(
                    "subject {subject}: scorer {id} has no InEar hypnogram"
                )),
                (None, Some(_)) => report.missing.push(format!(
                    "subject {subject}: scorer {id} has no PSG hypnogram"
                )),
                (None, None) => {}
            }
        }
        for (kind, set) in [(KappaKind::InterPsg, &psg), (KappaKind::InterInEar, &inear)] {
            for i in 0..set.len() {
                for j in i + 1..set.len() {
                    let ids = vec![set[i].scorer, set[j].scorer];
                    push_kappa(&mut report, subject, kind, ids, set[i], set[j]);
                }
            }
        }
    }
    report
}

fn push_kappa(
    report: &mut KappaReport,
    subject: &str,
    kind: KappaKind,
    scorers: Vec<u32>,
    a: &Hypnogram,
    b: &Hypnogram,
) {
    let n = a.labels.len().min(b.labels.len());
    match kappa_labels(&a.labels[..n], &b.labels[..n]) {
        Ok(value) => report.rows.push(KappaRow {
            subject: subject.to_string(),
            kind,
            scorers,
            value,
        }),
        Err(e) => report.missing.push(format!(
            "subject {subject}: {} kappa for scorers {scorers:?}: {e}",
            kind.as_str()
        )),
    }
}

/// Soft-agreement, ranking and consensus of one source.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceConsensus {
    pub source: Source,
    pub scorers: Vec<u32>,
    pub soft_agreement: Vec<f64>,
    pub ranking: Vec<u32>,
    pub consensus: ConsensusHypnogram,
    /// Epochs dropped because a scorer gave MOVEMENT or UNKNOWN.
    pub excluded_epochs: usize,
}

pub fn source_consensus(source: Source, hyps: &[&Hypnogram]) -> Result<SourceConsensus> {
    let mut hyps = hyps.to_vec();
    hyps.sort_by_key(|h| h.scorer);
    let scorers: Vec<u32> = hyps.iter().map(|h| h.scorer).collect();
    let labels: Vec<&[StageLabel]> = hyps.iter().map(|h| h.labels.as_slice()).collect();
    let panel = Panel::new(&labels)?;
    let scores = soft_agreement(&labels)?;
    let ranking = rank_scorers(&scorers, &scores);
    let consensus = majority_vote(&labels, &scorers, &ranking)?;
    Ok(SourceConsensus {
        source,
        scorers,
        soft_agreement: scores,
        ranking,
        consensus,
        excluded_epochs: panel.excluded,
    })
}

/// Both sources' consensus and their intersection for one subject.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubjectConsensus {
    pub subject: String,
    pub epoch_count: usize,
    pub psg: SourceConsensus,
    pub inear: SourceConsensus,
    pub intersection: Intersection,
}

/// Runs the consensus over a subject's hypnograms, each truncated to `epoch_count`.
pub fn subject_consensus(
    subject: &str,
    hyps: &[Hypnogram],
    epoch_count: usize,
) -> Result<SubjectConsensus> {
    let mut trimmed = Vec::with_capacity(hyps.len());
    for h in hyps.iter().filter(|h| h.subject == subject) {
        if h.labels.len() < epoch_count {
            return Err(Error::Invalid(format!(
                "subject {subject} scorer {} {} hypnogram has {} epochs, expected {epoch_count}",
                h.scorer,
                h.source,
                h.labels.len()
            )));
        }
        let mut h = h.clone();
        h.labels.truncate(epoch_count);
        trimmed.push(h);
    }
    let of = |source: Source| -> Result<SourceConsensus> {
        let set: Vec<&Hypnogram> = trimmed.iter().filter(|h| h.source == source).collect();
        source_consensus(source, &set).map_err(|e| match e {
            Error::TooFewScorers(n) => Error::Invalid(format!(
                "subject {subject}: {source} needs at least 2 scorers, found {n}"
            )),
            other => other,
        })
    };
    let psg = of(Source::Psg)?;
    let inear = of(Source::InEar)?;
    let intersection = stage_intersection(&psg.consensus, &inear.consensus)?;
    Ok(SubjectConsensus {
        subject: subject.to_string(),
        epoch_count,
        psg,
        inear,
        intersection,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use StageLabel::*;

    #[test]
    fn soft_agreement_hand_cases() {
        let a = [W, N2, Rem, N3];
        assert_eq!(soft_agreement(&[&a, &a, &a]).unwrap(), vec![1.0, 1.0, 1.0]);
        let s = soft_agreement(&[&[W], &[W], &[N1]]).unwrap();
        assert_eq!(s, vec![1.0, 1.0, 0.0]);
        // N1/N2/N3 collapse to the same class
        let s = soft_agreement(&[&[N1], &[N3], &[N2]]).unwrap();
        assert_eq!(s, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn soft_agreement_excludes_movement_epochs() {
        let s = soft_agreement(&[&[W, Movement], &[W, Rem], &[Rem, W]]).unwrap();
        assert_eq!(s, vec![1.0, 1.0, 0.0]);
        assert!(soft_agreement(&[&[Unknown], &[W]]).is_err());
    }

    #[test]
    fn soft_agreement_rejects_bad_input() {
        assert!(matches!(
            soft_agreement(&[&[W]]),
            Err(Error::TooFewScorers(1))
        ));
        assert!(matches!(
            soft_agreement(&[&[W, W], &[W]]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn ranking_orders_and_breaks_ties() {
        assert_eq!(rank_scorers(&[1, 2, 3], &[0.9, 0.8, 0.95]), vec![3, 1, 2]);
        assert_eq!(rank_scorers(&[1, 2, 3], &[0.9, 0.9, 0.1]), vec![1, 2, 3]);
        assert_eq!(rank_scorers(&[1, 2, 3], &[0.5030, 0.6653, 0.6834])[0], 3);
    }

    #[test]
    fn majority_vote_cases() {
        let ids = [1, 2, 3];
        let c = majority_vote(&[&[W], &[W], &[Rem]], &ids, &[1, 2, 3]).unwrap();
        assert_eq!((c.labels[0], c.tie_flags[0]), (Some(Stage3::W), false));
        let c = majority_vote(&[&[W], &[N2], &[Rem]], &ids, &[2, 1, 3]).unwrap();
        assert_eq!((c.labels[0], c.tie_flags[0]), (Some(Stage3::Nrem), true));
        let c = majority_vote(&[&[N1], &[N2], &[N3]], &ids, &[3, 2, 1]).unwrap();
        assert_eq!((c.labels[0], c.tie_flags[0]), (Some(Stage3::Nrem), false));
    }

    #[test]
    fn tie_skips_top_scorer_outside_tied_classes() {
        // five scorers: W=2, REM=2, NREM=1, top-ranked scorer said NREM
        let hyps: [&[StageLabel]; 5] = [&[N2], &[W], &[W], &[Rem], &[Rem]];
        let c = majority_vote(&hyps, &[1, 2, 3, 4, 5], &[1, 4, 2, 3, 5]).unwrap();
        assert_eq!(c.labels[0], Some(Stage3::Rem));
        assert!(c.tie_flags[0]);
    }

    #[test]
    fn intersection_keeps_agreeing_epochs() {
        let p = ConsensusHypnogram {
            labels: vec![Some(Stage3::W), Some(Stage3::Nrem), None, Some(Stage3::Rem)],
            tie_flags: vec![false; 4],
        };
        let q = ConsensusHypnogram {
            labels: vec![Some(Stage3::W), Some(Stage3::Rem), None, Some(Stage3::Rem)],
            tie_flags: vec![false; 4],
        };
        let i = stage_intersection(&p, &q).unwrap();
        assert_eq!(
            i.labels,
            vec![Some(Stage3::W), None, None, Some(Stage3::Rem)]
        );
        assert_eq!(i.total, 2);
        assert_eq!(i.count(Stage3::W), 1);
        assert_eq!(i.counts[2].percent, 50.0);
        assert_eq!(i.epochs_of(Stage3::Rem), vec![3]);
    }

    #[test]
    fn kappa_cases() {
        use Stage3::*;
        let a = [W, Nrem, Rem, Nrem];
        assert_eq!(cohens_kappa(&a, &a).unwrap(), 1.0);
        assert_eq!(
            cohens_kappa(&[W, W, Nrem, Nrem], &[Nrem, Nrem, W, W]).unwrap(),
            -1.0
        );
        assert_eq!(cohens_kappa(&[W, W], &[W, W]).unwrap(), 1.0);
        assert!(cohens_kappa(&[], &[]).is_err());
        // p_o = 0.5, p_e = 0.5 -> 0
        assert_eq!(
            cohens_kappa(&[W, W, Nrem, Nrem], &[W, Nrem, W, Nrem]).unwrap(),
            0.0
        );
    }

    #[test]
    fn variability_report_shapes() {
        let h = |scorer, source, labels: &[StageLabel]| Hypnogram {
            subject: "S1".into(),
            scorer,
            source,
            labels: labels.to_vec(),
        };
        let a = [W, N2, Rem, N2, W, Rem];
        let b = [Rem, W, N2, W, Rem, N2];
        let hyps = vec![
            h(1, Source::Psg, &a),
            h(2, Source::Psg, &a),
            h(1, Source::InEar, &a),
            h(2, Source::InEar, &b),
            h(3, Source::Psg, &a),
        ];
        let r = variability_report(&hyps);
        let intra: Vec<&KappaRow> = r
            .rows
            .iter()
            .filter(|r| r.kind == KappaKind::Intra)
            .collect();
        assert_eq!(intra.len(), 2);
        assert_eq!(intra[0].value, 1.0);
        assert!(intra[1].value < intra[0].value);
        assert_eq!(
            r.rows
                .iter()
                .filter(|r| r.kind == KappaKind::InterPsg)
                .count(),
            3
        );
        assert_eq!(
            r.rows
                .iter()
                .filter(|r| r.kind == KappaKind::InterInEar)
                .count(),
            1
        );
        assert_eq!(r.missing.len(), 1);
        assert!(variability_report(&[]).rows.is_empty());
    }
}
