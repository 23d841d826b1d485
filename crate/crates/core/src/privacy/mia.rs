use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::data::DataTable;
use crate::error::{AuditError, Result};
use crate::privacy::neighbors::{distance_space, encode_points, nearest_distances};
use crate::seed;
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiaResult {
    pub accuracy: f64,
    pub fold_accuracies: Vec<f64>,
    pub thresholds: Vec<f64>,
}

/// Distance-to-closest-synthetic-record membership attack. Each fold draws as many members from
/// `train` as there are non-members in `test`, thresholds at the median pooled distance and
/// calls strictly closer records members.
pub fn mia_accuracy(train: &DataTable, test: &DataTable, synth: &DataTable, folds: usize, seed_value: u64) -> Result<MiaResult> {
    if folds == 0 {
        return Err(AuditError::Config("membership attack needs at least one fold".into()));
    }
    if test.n_rows() > train.n_rows() {
        return Err(AuditError::InsufficientData(format!(
            "membership attack needs |test| <= |train| ({} > {})",
            test.n_rows(),
            train.n_rows()
        )));
    }
    if test.n_rows() == 0 || synth.n_rows() == 0 {
        return Err(AuditError::InsufficientData("membership attack needs test and synthetic rows".into()));
    }
    train.schema().ensure_compatible(test.schema())?;
    train.schema().ensure_compatible(synth.schema())?;
    let (encoder, _) = distance_space(&[train, synth])?;
    let s = encode_points(&encoder, synth)?;
    let tr = encode_points(&encoder, train)?;
    let te = encode_points(&encoder, test)?;
    let member_d = nearest_distances(&tr, &s, false);
    let non_d = nearest_distances(&te, &s, false);
    let m = test.n_rows();
    let mut fold_accuracies = Vec::with_capacity(folds);
    let mut thresholds = Vec::with_capacity(folds);
    for k in 0..folds {
        let mut rng = seed::rng(seed::derive_indexed(seed_value, "mia", k as u64));
        let members: Vec<f64> = sample(&mut rng, train.n_rows(), m).iter().map(|i| member_d[i]).collect();
        let pooled: Vec<f64> = members.iter().chain(&non_d).copied().collect();
        let theta = stats::median(&pooled);
        let hits = members.iter().filter(|&&d| d < theta).count() + non_d.iter().filter(|&&d| d >= theta).count();
        fold_accuracies.push(hits as f64 / (2 * m) as f64);
        thresholds.push(theta);
    }
    Ok(MiaResult {
        accuracy: stats::mean(&fold_accuracies),
        fold_accuracies,
        thresholds,
    })
}
