//! The 45-feature catalog and per-(subject, channel, stage) feature matrices.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelId;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;
use crate::stage::Stage3;

pub const TIME_FEATURES: usize = 18;
pub const FREQ_FEATURES: usize = 27;
pub const N_FEATURES: usize = TIME_FEATURES + FREQ_FEATURES;

/// Column names; time-domain block first, then frequency-domain.
pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "std",
    "skewness",
    "kurtosis",
    "max_first_derivative",
    "iqr",
    "zero_crossings",
    "dfa_exponent",
    "approximate_entropy",
    "sample_entropy",
    "svd_entropy",
    "permutation_entropy",
    "lempel_ziv",
    "hjorth_activity",
    "hjorth_mobility",
    "hjorth_complexity",
    "katz_fd",
    "higuchi_fd",
    "petrosian_fd",
    "spectral_energy",
    "rel_delta",
    "rel_theta",
    "rel_alpha",
    "rel_sigma",
    "rel_beta",
    "rel_gamma",
    "spectral_entropy",
    "renyi_entropy",
    "ratio_delta_theta",
    "ratio_delta_sigma",
    "ratio_delta_beta",
    "ratio_delta_alpha",
    "ratio_theta_alpha",
    "ratio_alpha_beta",
    "ratio_delta_alpha_beta",
    "ratio_theta_alpha_beta",
    "ratio_delta_alpha_beta_theta",
    "spectral_centroid",
    "spectral_crest",
    "spectral_flatness",
    "spectral_rolloff",
    "spectral_spread",
    "spectral_mean",
    "spectral_variance",
    "spectral_skewness",
    "spectral_kurtosis",
];

/// Features computed on the max-normalized epoch.
pub const AMPLITUDE_DEPENDENT: [&str; 7] = [
    "std",
    "max_first_derivative",
    "iqr",
    "hjorth_activity",
    "spectral_energy",
    "spectral_mean",
    "spectral_variance",
];

/// Column indices, kept in step with [`FEATURE_NAMES`].
pub mod idx {
    pub const STD: usize = 0;
    pub const SKEWNESS: usize = 1;
    pub const KURTOSIS: usize = 2;
    pub const MAX_FIRST_DERIVATIVE: usize = 3;
    pub const IQR: usize = 4;
    pub const ZERO_CROSSINGS: usize = 5;
    pub const DFA: usize = 6;
    pub const APEN: usize = 7;
    pub const SAMPEN: usize = 8;
    pub const SVDEN: usize = 9;
    pub const PERMEN: usize = 10;
    pub const LZ: usize = 11;
    pub const HJORTH_ACTIVITY: usize = 12;
    pub const HJORTH_MOBILITY: usize = 13;
    pub const HJORTH_COMPLEXITY: usize = 14;
    pub const KATZ: usize = 15;
    pub const HIGUCHI: usize = 16;
    pub const PETROSIAN: usize = 17;
    pub const SPECTRAL_ENERGY: usize = 18;
    pub const REL_DELTA: usize = 19;
    pub const SPECTRAL_ENTROPY: usize = 25;
    pub const RENYI_ENTROPY: usize = 26;
    pub const RATIO_FIRST: usize = 27;
    pub const CENTROID: usize = 36;
    pub const CREST: usize = 37;
    pub const FLATNESS: usize = 38;
    pub const ROLLOFF: usize = 39;
    pub const SPREAD: usize = 40;
    pub const SPECTRAL_MEAN: usize = 41;
    pub const SPECTRAL_VARIANCE: usize = 42;
    pub const SPECTRAL_SKEWNESS: usize = 43;
    pub const SPECTRAL_KURTOSIS: usize = 44;
}

/// Static view of the catalog.
#[derive(Clone, Copy, Debug, Default)]
pub struct FeatureCatalog;

impl FeatureCatalog {
    pub fn names(&self) -> &'static [&'static str; N_FEATURES] {
        &FEATURE_NAMES
    }

    pub fn len(&self) -> usize {
        N_FEATURES
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        FEATURE_NAMES.iter().position(|n| *n == name)
    }

    pub fn is_amplitude_dependent(&self, index: usize) -> bool {
        FEATURE_NAMES
            .get(index)
            .is_some_and(|n| AMPLITUDE_DEPENDENT.contains(n))
    }

    pub fn is_time_domain(&self, index: usize) -> bool {
        index < TIME_FEATURES
    }
}

/// Feature matrix `M epochs × 45` for one (subject, channel, stage).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureDataset<T> {
    pub subject: String,
    pub channel: ChannelId,
    pub stage: Stage3,
    /// Source epoch index of each row.
    pub epochs: Vec<usize>,
    pub matrix: Matrix<T>,
    /// Rows where each column fell back to its degenerate value.
    pub degenerate_counts: Vec<usize>,
}

impl<T: Real> FeatureDataset<T> {
    pub fn new(subject: impl Into<String>, channel: ChannelId, stage: Stage3) -> Self {
        Self {
            subject: subject.into(),
            channel,
            stage,
            epochs: Vec::new(),
            matrix: Matrix::zeros(0, N_FEATURES),
            degenerate_counts: vec![0; N_FEATURES],
        }
    }

    pub fn feature_names(&self) -> &'static [&'static str] {
        &FEATURE_NAMES
    }

    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.rows() == 0
    }

    /// Appends one epoch's feature vector; `degenerate` is a bitmask over columns.
    pub fn push(&mut self, epoch: usize, values: &[T], degenerate: u64) -> Result<()> {
        if values.len() != N_FEATURES {
            return Err(Error::LengthMismatch {
                expected: N_FEATURES,
                actual: values.len(),
            });
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!(
                "feature {} is not finite at epoch {epoch}",
                FEATURE_NAMES[j]
            )));
        }
        self.matrix.push_row(values)?;
        self.epochs.push(epoch);
        for (j, c) in self.degenerate_counts.iter_mut().enumerate() {
            if degenerate >> j & 1 == 1 {
                *c += 1;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn catalog_shape() {
        assert_eq!(FEATURE_NAMES.len(), 45);
        let unique: HashSet<_> = FEATURE_NAMES.iter().collect();
        assert_eq!(unique.len(), 45);
        let cat = FeatureCatalog;
        assert_eq!((0..45).filter(|&i| cat.is_time_domain(i)).count(), 18);
        assert_eq!(
            (0..45).filter(|&i| cat.is_amplitude_dependent(i)).count(),
            7
        );
        for n in AMPLITUDE_DEPENDENT {
            assert!(cat.index_of(n).is_some(), "{n}");
        }
    }

    #[test]
    fn index_constants_match_names() {
        let cat = FeatureCatalog;
        let check = [
            (idx::STD, "std"),
            (idx::ZERO_CROSSINGS, "zero_crossings"),
            (idx::DFA, "dfa_exponent"),
            (idx::LZ, "lempel_ziv"),
            (idx::PETROSIAN, "petrosian_fd"),
            (idx::SPECTRAL_ENERGY, "spectral_energy"),
            (idx::REL_DELTA, "rel_delta"),
            (idx::SPECTRAL_ENTROPY, "spectral_entropy"),
            (idx::RENYI_ENTROPY, "renyi_entropy"),
            (idx::RATIO_FIRST, "ratio_delta_theta"),
            (idx::CENTROID, "spectral_centroid"),
            (idx::ROLLOFF, "spectral_rolloff"),
            (idx::SPECTRAL_MEAN, "spectral_mean"),
            (idx::SPECTRAL_KURTOSIS, "spectral_kurtosis"),
        ];
        for (i, n) in check {
            assert_eq!(cat.index_of(n), Some(i));
        }
    }

    #[test]
    fn dataset_push_validates() {
        let mut d = FeatureDataset::<f64>::new("s1", ChannelId::CH1, Stage3::W);
        assert!(d.push(0, &[0.0; 44], 0).is_err());
        let mut row = [1.0; 45];
        d.push(3, &row, 0b101).unwrap();
        row[2] = f64::NAN;
        assert!(d.push(4, &row, 0).is_err());
        assert_eq!(d.rows(), 1);
        assert_eq!(d.epochs, vec![3]);
        assert_eq!(d.degenerate_counts[0], 1);
        assert_eq!(d.degenerate_counts[1], 0);
        assert_eq!(d.degenerate_counts[2], 1);
    }
}
