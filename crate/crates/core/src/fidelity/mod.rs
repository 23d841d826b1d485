//! Distributional and structural similarity between real and synthetic tables.

pub mod correlation;
pub mod km_metrics;
pub mod marginal;
pub mod preservation;
pub mod significance;

use serde::{Deserialize, Serialize};

pub use correlation::{
    corr_score_categorical, corr_score_continuous, correlation_scores, correlation_similarity, PairKind, PairScore,
};
pub use km_metrics::{km_metrics, KmMetrics};
pub use marginal::{dimwise_categorical, dimwise_continuous, dimwise_scores, ks_statistic, ColumnScore};
pub use preservation::{feature_preservation, FeatureDetail, FeaturePreservation};
pub use significance::{
    chi_square, fisher_exact, mann_whitney_u, significance_battery, welch_t, ColumnTests, SampleSummary, TestKind,
    TestResult, SIGNIFICANCE_LEVEL,
};

use crate::data::DataTable;
use crate::error::Result;

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Dimension-wise and correlation similarity for one real/synthetic pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityScores {
    pub dimwise_mean: Option<f64>,
    pub correlation_mean: Option<f64>,
    pub continuous_correlation_mean: Option<f64>,
    pub categorical_correlation_mean: Option<f64>,
    pub skipped_pairs: usize,
    pub dimwise: Vec<ColumnScore>,
    pub correlations: Vec<PairScore>,
}

pub fn similarity_scores(real: &DataTable, synth: &DataTable) -> Result<SimilarityScores> {
    let dimwise = dimwise_scores(real, synth)?;
    let correlations = correlation_scores(real, synth)?;
    let kind_mean = |k: PairKind| mean_of(correlations.iter().filter(|p| p.kind == k).map(|p| p.score));
    Ok(SimilarityScores {
        dimwise_mean: mean_of(dimwise.iter().map(|c| c.score)),
        correlation_mean: mean_of(correlations.iter().map(|p| p.score)),
        continuous_correlation_mean: kind_mean(PairKind::Continuous),
        categorical_correlation_mean: kind_mean(PairKind::Categorical),
        skipped_pairs: correlations.iter().filter(|p| p.score.is_none()).count(),
        dimwise,
        correlations,
    })
}
