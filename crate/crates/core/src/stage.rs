//! Sleep-stage label taxonomy.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// A scorer's per-epoch label as stored in hypnogram files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StageLabel {
    #[serde(rename = "W")]
    W,
    #[serde(rename = "N1")]
    N1,
    #[serde(rename = "N2")]
    N2,
    #[serde(rename = "N3")]
    N3,
    #[serde(rename = "REM")]
    Rem,
    #[serde(rename = "MOVEMENT")]
    Movement,
    #[serde(rename = "UNKNOWN")]
    Unknown,
}

impl StageLabel {
    pub const ALL: [StageLabel; 7] = [
        StageLabel::W,
        StageLabel::N1,
        StageLabel::N2,
        StageLabel::N3,
        StageLabel::Rem,
        StageLabel::Movement,
        StageLabel::Unknown,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StageLabel::W => "W",
            StageLabel::N1 => "N1",
            StageLabel::N2 => "N2",
            StageLabel::N3 => "N3",
            StageLabel::Rem => "REM",
            StageLabel::Movement => "MOVEMENT",
            StageLabel::Unknown => "UNKNOWN",
        }
    }

    /// Collapses to the three-class taxonomy; MOVEMENT and UNKNOWN have no class.
    pub fn collapse(self) -> Option<Stage3> {
        collapse_label(self)
    }
}

impl fmt::Display for StageLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StageLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        StageLabel::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(t))
            .ok_or_else(|| Error::Invalid(format!("unknown stage label {t:?}")))
    }
}

/// Three-class stage used by every downstream analysis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Stage3 {
    #[serde(rename = "W")]
    W,
    #[serde(rename = "NREM")]
    Nrem,
    #[serde(rename = "REM")]
    Rem,
}

impl Stage3 {
    pub const ALL: [Stage3; 3] = [Stage3::W, Stage3::Nrem, Stage3::Rem];
    /// Number of collapsed classes.
    pub const K: usize = 3;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Stage3> {
        Stage3::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stage3::W => "W",
            Stage3::Nrem => "NREM",
            Stage3::Rem => "REM",
        }
    }
}

impl fmt::Display for Stage3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage3 {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        Stage3::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(t))
            .ok_or_else(|| Error::Invalid(format!("unknown stage {t:?}")))
    }
}

/// W -> W, N1/N2/N3 -> NREM, REM -> REM, MOVEMENT/UNKNOWN -> None.
pub fn collapse_label(label: StageLabel) -> Option<Stage3> {
    match label {
        StageLabel::W => Some(Stage3::W),
        StageLabel::N1 | StageLabel::N2 | StageLabel::N3 => Some(Stage3::Nrem),
        StageLabel::Rem => Some(Stage3::Rem),
        StageLabel::Movement | StageLabel::Unknown => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn collapse_examples() {
        assert_eq!(collapse_label(StageLabel::N2), Some(Stage3::Nrem));
        assert_eq!(collapse_label(StageLabel::W), Some(Stage3::W));
        assert_eq!(collapse_label(StageLabel::Movement), None);
    }

    #[test]
    fn collapse_is_total_and_surjective() {
        let image: BTreeSet<_> = StageLabel::ALL.iter().map(|&l| collapse_label(l)).collect();
        let expected: BTreeSet<_> = [None, Some(Stage3::W), Some(Stage3::Nrem), Some(Stage3::Rem)]
            .into_iter()
            .collect();
        assert_eq!(image, expected);
    }

    #[test]
    fn parse_is_case_insensitive_and_trims() {
        assert_eq!(" rem ".parse::<StageLabel>().unwrap(), StageLabel::Rem);
        assert_eq!(
            "Movement".parse::<StageLabel>().unwrap(),
            StageLabel::Movement
        );
        assert_eq!("n3\t".parse::<StageLabel>().unwrap(), StageLabel::N3);
        assert!("N4".parse::<StageLabel>().is_err());
        assert!("".parse::<StageLabel>().is_err());
        for l in StageLabel::ALL {
            assert_eq!(l.as_str().parse::<StageLabel>().unwrap(), l);
        }
    }
}
