use serde::{Deserialize, Serialize};

use crate::data::{Column, DataTable};
use crate::error::{AuditError, Result};
use crate::generate::copula::interpolate_quantile;
use crate::stats;

/// Quantile-to-quantile map onto a reference sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileMap {
    reference: Vec<f64>,
}

impl QuantileMap {
    pub fn reference(&self) -> &[f64] {
        &self.reference
    }

    /// Reference quantile at probability `u`.
    pub fn quantile(&self, u: f64) -> f64 {
        interpolate_quantile(&self.reference, u)
    }

    /// Maps each value through its mid-rank CDF position in `values`: `v -> Q_ref(F(v))`.
    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        let n = values.len() as f64;
        stats::average_ranks(values)
            .into_iter()
            .map(|r| self.quantile((r - 0.5) / n))
            .collect()
    }
}

pub fn fit_equalizer(reference: &[f64]) -> Result<QuantileMap> {
    let sorted = stats::sorted(reference);
    if sorted.iter().any(|v| !v.is_finite()) {
        return Err(AuditError::Numerical("non-finite reference value".into()));
    }
    if sorted.len() < 2 || sorted[0] == sorted[sorted.len() - 1] {
        return Err(AuditError::InsufficientData("equalizer reference needs two distinct values".into()));
    }
    Ok(QuantileMap { reference: sorted })
}

/// Equalizes the observed cells of a continuous column; masked cells stay masked.
pub fn apply_equalizer(map: &QuantileMap, column: &Column) -> Result<Column> {
    let reals = column
        .reals()
        .ok_or_else(|| AuditError::Config("only continuous columns can be equalized".into()))?;
    let rows: Vec<usize> = (0..column.len()).filter(|&r| !column.is_missing(r)).collect();
    if rows.is_empty() {
        return Err(AuditError::InsufficientData("no observed values to equalize".into()));
    }
    let mapped = map.apply(&rows.iter().map(|&r| reals[r]).collect::<Vec<_>>());
    let mut out = reals.to_vec();
    for (&r, v) in rows.iter().zip(mapped) {
        out[r] = v;
    }
    Column::real(out).with_mask(column.missing_mask().to_vec())
}

/// Replaces column `name` of `table` by its equalized version; every other column is untouched.
pub fn equalize_column(table: &DataTable, name: &str, map: &QuantileMap) -> Result<DataTable> {
    let idx = table.schema().require(name)?;
    table.with_column(idx, apply_equalizer(map, table.column(idx))?)
}
