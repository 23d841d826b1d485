//! Privacy attacks: exact match, membership inference, attribute inference and
//! nearest-neighbour adversarial accuracy.

pub mod aia;
pub mod exact;
pub mod mia;
pub mod neighbors;
pub mod nnaa;

use serde::{Deserialize, Serialize};

pub use aia::{aia_scores, AiaResult, AiaTarget, KNN_K};
pub use exact::{exact_match, ExactMatch, EXACT_MATCH_TOLERANCE};
pub use mia::{mia_accuracy, MiaResult};
pub use neighbors::{nearest_distances, PointSet};
pub use nnaa::{nnaa, nnaa_points, NnaaResult};

use crate::data::DataTable;
use crate::error::Result;
use crate::seed::{self, DEFAULT_SEED};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrivacyConfig {
    pub mia_folds: usize,
    pub aia_folds: usize,
    pub nnaa_iterations: usize,
    pub seed: u64,
}

impl Default for PrivacyConfig {
    fn default() -> Self {
        PrivacyConfig {
            mia_folds: 4,
            aia_folds: 5,
            nnaa_iterations: 30,
            seed: DEFAULT_SEED,
        }
    }
}

/// Result of one privacy assessment; a failure is kept as its message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome<T> {
    Ok(T),
    Failed(String),
}

impl<T> Outcome<T> {
    pub fn from_result(r: Result<T>) -> Self {
        match r {
            Ok(v) => Outcome::Ok(v),
            Err(e) => Outcome::Failed(e.to_string()),
        }
    }

    pub fn ok(&self) -> Option<&T> {
        match self {
            Outcome::Ok(v) => Some(v),
            Outcome::Failed(_) => None,
        }
    }

    pub fn is_failed(&self) -> bool {
        matches!(self, Outcome::Failed(_))
    }

    pub fn failure(&self) -> Option<&str> {
        match self {
            Outcome::Failed(m) => Some(m),
            Outcome::Ok(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyReport {
    pub exact_match: Outcome<ExactMatch>,
    pub mia: Outcome<MiaResult>,
    pub aia: Outcome<AiaResult>,
    pub nnaa: Outcome<NnaaResult>,
}

impl PrivacyReport {
    pub fn failures(&self) -> Vec<String> {
        [
            ("exact_match", self.exact_match.failure()),
            ("mia", self.mia.failure()),
            ("aia", self.aia.failure()),
            ("nnaa", self.nnaa.failure()),
        ]
        .into_iter()
        .filter_map(|(name, m)| m.map(|m| format!("{name}: {m}")))
        .collect()
    }
}

/// All four assessments. `train` is the generator's training data, `test` the held-out real
/// records; exact matches are searched in both.
pub fn privacy_report(train: &DataTable, test: &DataTable, synth: &DataTable, cfg: &PrivacyConfig) -> PrivacyReport {
    let real = DataTable::concat(&[train, test]);
    PrivacyReport {
        exact_match: Outcome::from_result(real.and_then(|r| exact_match(&r, synth))),
        mia: Outcome::from_result(mia_accuracy(train, test, synth, cfg.mia_folds, seed::derive(cfg.seed, "mia"))),
        aia: Outcome::from_result(aia_scores(train, test, synth, cfg.aia_folds, seed::derive(cfg.seed, "aia"))),
        nnaa: Outcome::from_result(nnaa(train, test, synth, cfg.nnaa_iterations, seed::derive(cfg.seed, "nnaa"))),
    }
}
