use serde::{Deserialize, Serialize};

use crate::data::table::{Column, ColumnData, DataTable};
use crate::error::{AuditError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationMode {
    MinMax,
    ZScore,
}

/// Per-column location/scale. For min-max `center` is the minimum and `scale` is max - min;
/// for z-score they are the mean and the population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub name: String,
    pub center: f64,
    pub scale: f64,
}

impl ColumnStats {
    pub fn is_degenerate(&self) -> bool {
        !(self.scale > 0.0)
    }

    /// Degenerate columns map to 0.
    pub fn apply(&self, v: f64) -> f64 {
        if self.is_degenerate() {
            0.0
        } else {
            (v - self.center) / self.scale
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub mode: NormalizationMode,
    /// One entry per continuous column, in schema order.
    pub stats: Vec<ColumnStats>,
    pub fitted_on: String,
}

impl NormalizationParams {
    pub fn get(&self, name: &str) -> Option<&ColumnStats> {
        self.stats.iter().find(|s| s.name == name)
    }
}

/// Fits statistics for every continuous column over the pooled observed cells of `tables`.
pub fn fit_normalization(
    tables: &[&DataTable],
    mode: NormalizationMode,
    fitted_on: impl Into<String>,
) -> Result<NormalizationParams> {
    let first = tables
        .first()
        .ok_or_else(|| AuditError::InsufficientData("no tables to fit normalization on".into()))?;
    for t in &tables[1..] {
        first.schema().ensure_compatible(t.schema())?;
    }
    let mut stats = Vec::new();
    for (ci, spec) in first.schema().columns().iter().enumerate() {
        if !spec.is_continuous() {
            continue;
        }
        let pooled: Vec<f64> = tables.iter().flat_map(|t| t.column(ci).observed_reals()).collect();
        if pooled.is_empty() {
            return Err(AuditError::EmptyColumn(spec.name.clone()));
        }
        let (center, scale) = match mode {
            NormalizationMode::MinMax => {
                let lo = pooled.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = pooled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi - lo)
            }
            NormalizationMode::ZScore => {
                let n = pooled.len() as f64;
                let mean = pooled.iter().sum::<f64>() / n;
                let var = pooled.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                (mean, var.sqrt())
            }
        };
        stats.push(ColumnStats {
            name: spec.name.clone(),
            center,
            scale,
        });
    }
    Ok(NormalizationParams {
        mode,
        stats,
        fitted_on: fitted_on.into(),
    })
}

/// Transforms continuous columns; coded columns and the missing mask pass through untouched.
pub fn apply_normalization(table: &DataTable, params: &NormalizationParams) -> Result<DataTable> {
    let mut columns = Vec::with_capacity(table.n_columns());
    for (ci, spec) in table.schema().columns().iter().enumerate() {
        let col = table.column(ci);
        if !spec.is_continuous() {
            columns.push(col.clone());
            continue;
        }
        let stats = params.get(&spec.name).ok_or_else(|| {
            AuditError::SchemaMismatch(format!("no normalization statistics for '{}'", spec.name))
        })?;
        let values = col.reals().expect("continuous column stores reals");
        let mask = col.missing_mask();
        let out: Vec<f64> = values
            .iter()
            .zip(mask)
            .map(|(&v, &m)| if m { v } else { stats.apply(v) })
            .collect();
        columns.push(Column::new(ColumnData::Real(out), mask.to_vec())?);
    }
    DataTable::new(table.schema_arc().clone(), columns)
}
