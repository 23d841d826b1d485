use serde::{Deserialize, Serialize};

use crate::data::{Column, DataTable, MISSING_INDICATOR_SUFFIX};
use crate::error::{AuditError, Result};
use crate::ingest::io::indicator_spec;

/// Appends `<name>__miss` (1 = missing, 0 = present) for every column with at least one
/// masked cell. The original mask is kept.
pub fn add_missingness_indicators(table: &DataTable) -> Result<DataTable> {
    let extra: Vec<_> = table
        .schema()
        .columns()
        .iter()
        .zip(table.columns())
        .filter(|(spec, col)| col.has_missing() && !spec.is_missing_indicator())
        .map(|(spec, col)| {
            let codes = col.missing_mask().iter().map(|&m| u32::from(m)).collect();
            (indicator_spec(&spec.name), Column::codes(codes))
        })
        .collect();
    if extra.is_empty() {
        return Ok(table.clone());
    }
    table.with_extra_columns(extra)
}

/// Masks the cells of `complete` flagged by the indicator columns of `indicators`, then drops
/// any indicator columns from the result. Indicator cells that are themselves masked count as 0.
pub fn reapply_missingness(complete: &DataTable, indicators: &DataTable) -> Result<DataTable> {
    if complete.n_rows() != indicators.n_rows() {
        return Err(AuditError::SchemaMismatch(format!(
            "indicator table has {} rows, complete table has {}",
            indicators.n_rows(),
            complete.n_rows()
        )));
    }
    let mut columns: Vec<Column> = complete.columns().to_vec();
    for (ii, spec) in indicators.schema().columns().iter().enumerate() {
        let Some(base) = spec.name.strip_suffix(MISSING_INDICATOR_SUFFIX) else {
            continue;
        };
        let target = complete.schema().index_of(base).ok_or_else(|| {
            AuditError::SchemaMismatch(format!("indicator '{}' has no base column", spec.name))
        })?;
        let ind = indicators.column(ii);
        let mask: Vec<bool> = (0..complete.n_rows())
            .map(|r| columns[target].is_missing(r) || ind.code(r) == Some(1))
            .collect();
        columns[target] = columns[target].with_mask(mask)?;
    }
    let keep: Vec<usize> = (0..complete.n_columns())
        .filter(|&i| !complete.spec(i).is_missing_indicator())
        .collect();
    let rebuilt = DataTable::new(complete.schema_arc().clone(), columns)?;
    if keep.len() == complete.n_columns() {
        Ok(rebuilt)
    } else {
        rebuilt.project(&keep)
    }
}

/// [`reapply_missingness`] for a table that carries its own indicator columns, as emitted by
/// generators trained on indicator-augmented data.
pub fn reapply_embedded_missingness(table: &DataTable) -> Result<DataTable> {
    reapply_missingness(table, table)
}

pub fn has_indicator_columns(table: &DataTable) -> bool {
    table.schema().columns().iter().any(|c| c.is_missing_indicator())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingnessProfile {
    pub n_rows: usize,
    /// (column, masked cells / rows) in schema order.
    pub fractions: Vec<(String, f64)>,
}

impl MissingnessProfile {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.fractions.iter().find(|(n, _)| n == name).map(|(_, f)| *f)
    }
}

pub fn missingness_profile(table: &DataTable) -> MissingnessProfile {
    let n = table.n_rows();
    let fractions = table
        .schema()
        .columns()
        .iter()
        .zip(table.columns())
        .map(|(spec, col)| {
            let f = if n == 0 { 0.0 } else { col.n_missing() as f64 / n as f64 };
            (spec.name.clone(), f)
        })
        .collect();
    MissingnessProfile { n_rows: n, fractions }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingnessComparison {
    pub column: String,
    pub real: f64,
    pub synthetic: f64,
}

/// Per-column missing fractions of two tables side by side (columns present in both).
pub fn compare_profiles(real: &MissingnessProfile, synth: &MissingnessProfile) -> Vec<MissingnessComparison> {
    real.fractions
        .iter()
        .filter_map(|(name, r)| {
            synth.get(name).map(|s| MissingnessComparison {
                column: name.clone(),
                real: *r,
                synthetic: s,
            })
        })
        .collect()
}
