use nalgebra::DMatrix;

use crate::data::{DataTable, Encoder, NormalizationParams};
use crate::error::{AuditError, Result};

/// Outcome times, event flags and a numeric covariate matrix (one row per subject).
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalData {
    pub times: Vec<f64>,
    pub events: Vec<bool>,
    pub x: DMatrix<f64>,
    pub feature_names: Vec<String>,
}

impl SurvivalData {
    pub fn new(times: Vec<f64>, events: Vec<bool>, x: DMatrix<f64>, feature_names: Vec<String>) -> Result<Self> {
        let n = times.len();
        if events.len() != n || x.nrows() != n {
            return Err(AuditError::InsufficientData(format!(
                "survival data lengths differ: {} times, {} events, {} covariate rows",
                n,
                events.len(),
                x.nrows()
            )));
        }
        if feature_names.len() != x.ncols() {
            return Err(AuditError::InsufficientData("feature name count differs from covariate width".into()));
        }
        if let Some(t) = times.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(AuditError::InsufficientData(format!("survival time {t} is not positive")));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(AuditError::Numerical("non-finite covariate value".into()));
        }
        Ok(SurvivalData {
            times,
            events,
            x,
            feature_names,
        })
    }

    /// Model-facing encoder for a table's features: categorical columns one-hot with the
    /// reference level dropped, continuous columns rescaled by `scaling` when given.
    pub fn encoder(table: &DataTable, scaling: Option<&NormalizationParams>) -> Encoder {
        Encoder::new(table.schema(), &table.schema().feature_indices(), true, scaling)
    }

    pub fn from_table(table: &DataTable, encoder: &Encoder) -> Result<Self> {
        let schema = table.schema();
        let tcol = table.column(schema.time_index());
        let ecol = table.column(schema.event_index());
        if tcol.has_missing() || ecol.has_missing() {
            return Err(AuditError::InsufficientData("missing time or event values".into()));
        }
        let times = (0..table.n_rows()).map(|r| tcol.get(r).unwrap_or(f64::NAN)).collect();
        let events = (0..table.n_rows()).map(|r| ecol.code(r) == Some(1)).collect();
        SurvivalData::new(times, events, encoder.matrix(table)?, encoder.names())
    }

    pub fn n(&self) -> usize {
        self.times.len()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn n_events(&self) -> usize {
        self.events.iter().filter(|&&e| e).count()
    }

    pub fn select(&self, rows: &[usize]) -> SurvivalData {
        SurvivalData {
            times: rows.iter().map(|&r| self.times[r]).collect(),
            events: rows.iter().map(|&r| self.events[r]).collect(),
            x: self.x.select_rows(rows),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Single-covariate view.
    pub fn column(&self, j: usize) -> SurvivalData {
        SurvivalData {
            times: self.times.clone(),
            events: self.events.clone(),
            x: self.x.columns(j, 1).into_owned(),
            feature_names: vec![self.feature_names[j].clone()],
        }
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.x.row(i).iter().copied().collect()
    }
}
