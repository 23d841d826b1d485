//! Clinical plausibility: clipping for real data, row filtering for synthetic data.

use serde::{Deserialize, Serialize};

use crate::data::{Column, ColumnData, DataTable, DatasetSchema};
use crate::error::Result;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClipReport {
    /// (column, number of clipped cells), continuous columns with a range only.
    pub clipped: Vec<(String, usize)>,
}

impl ClipReport {
    pub fn total(&self) -> usize {
        self.clipped.iter().map(|(_, n)| n).sum()
    }
}

/// Replaces observed continuous values outside the plausible range by the nearest bound.
/// Masked cells are left alone.
pub fn clip_to_ranges(table: &DataTable) -> Result<(DataTable, ClipReport)> {
    let mut columns = Vec::with_capacity(table.n_columns());
    let mut report = ClipReport::default();
    for (ci, spec) in table.schema().columns().iter().enumerate() {
        let col = table.column(ci);
        let (lo, hi) = (spec.plausible_min, spec.plausible_max);
        if !spec.is_continuous() || (lo.is_none() && hi.is_none()) {
            columns.push(col.clone());
            continue;
        }
        let lo = lo.unwrap_or(f64::NEG_INFINITY);
        let hi = hi.unwrap_or(f64::INFINITY);
        let mut n = 0;
        let values: Vec<f64> = col
            .reals()
            .unwrap()
            .iter()
            .zip(col.missing_mask())
            .map(|(&v, &m)| {
                if m || (lo..=hi).contains(&v) {
                    v
                } else {
                    n += 1;
                    v.clamp(lo, hi)
                }
            })
            .collect();
        report.clipped.push((spec.name.clone(), n));
        columns.push(Column::new(ColumnData::Real(values), col.missing_mask().to_vec())?);
    }
    Ok((DataTable::new(table.schema_arc().clone(), columns)?, report))
}

/// Row-level constraints applied to synthetic records after generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlausibilityRules {
    /// (systolic, diastolic) column names; rows with systolic <= diastolic are dropped.
    pub pressure: Option<(String, String)>,
    pub ranges: bool,
    pub positive_time: bool,
}

impl PlausibilityRules {
    /// Pressure rule enabled when the schema has both `SBP` and `DBP`.
    pub fn for_schema(schema: &DatasetSchema) -> Self {
        let pressure = match (schema.index_of("SBP"), schema.index_of("DBP")) {
            (Some(_), Some(_)) => Some(("SBP".to_string(), "DBP".to_string())),
            _ => None,
        };
        PlausibilityRules {
            pressure,
            ranges: true,
            positive_time: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub table: DataTable,
    /// Indices (into the input) of removed rows, ascending.
    pub dropped: Vec<usize>,
}

impl FilterOutcome {
    pub fn drop_rate(&self) -> f64 {
        let n = self.table.n_rows() + self.dropped.len();
        if n == 0 {
            0.0
        } else {
            self.dropped.len() as f64 / n as f64
        }
    }
}

/// Drops rows that break a constraint. A constraint never fires on a missing cell.
pub fn filter_implausible(table: &DataTable, rules: &PlausibilityRules) -> Result<FilterOutcome> {
    let schema = table.schema();
    let pressure = match &rules.pressure {
        Some((s, d)) => Some((schema.require(s)?, schema.require(d)?)),
        None => None,
    };
    let time_idx = schema.time_index();
    let ranged: Vec<(usize, f64, f64)> = if rules.ranges {
        schema
            .columns()
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_continuous() && (c.plausible_min.is_some() || c.plausible_max.is_some()))
            .map(|(i, c)| {
                (
                    i,
                    c.plausible_min.unwrap_or(f64::NEG_INFINITY),
                    c.plausible_max.unwrap_or(f64::INFINITY),
                )
            })
            .collect()
    } else {
        Vec::new()
    };

    let mut keep = Vec::with_capacity(table.n_rows());
    let mut dropped = Vec::new();
    for row in 0..table.n_rows() {
        let pressure_bad = pressure.is_some_and(|(s, d)| match (table.value(row, s), table.value(row, d)) {
            (Some(sbp), Some(dbp)) => sbp <= dbp,
            _ => false,
        });
        let range_bad = ranged
            .iter()
            .any(|&(c, lo, hi)| table.value(row, c).is_some_and(|v| !(lo..=hi).contains(&v)));
        let time_bad = rules.positive_time && table.value(row, time_idx).is_some_and(|t| !(t > 0.0));
        if pressure_bad || range_bad || time_bad {
            dropped.push(row);
        } else {
            keep.push(row);
        }
    }
    Ok(FilterOutcome {
        table: table.select_rows(&keep),
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::data::{validate, ColumnRole, ColumnSpec, DatasetSchema, Violation};

    fn schema() -> Arc<DatasetSchema> {
        Arc::new(
            DatasetSchema::new(
                vec![
                    ColumnSpec::continuous("SBP").with_range(40.0, 250.0),
                    ColumnSpec::continuous("DBP").with_range(20.0, 200.0),
                    ColumnSpec::continuous("Creatinine").with_range(0.1, 30.0),
                    ColumnSpec::continuous("SPO2").with_range(20.0, 100.0),
                    ColumnSpec::continuous("Days").with_role(ColumnRole::Time),
                    ColumnSpec::binary("dead").with_role(ColumnRole::Event),
                ],
                vec![],
            )
            .unwrap(),
        )
    }

    fn table(rows: &[[Option<f64>; 4]]) -> DataTable {
        let col = |j: usize| Column::real_opt(rows.iter().map(|r| r[j]));
        let n = rows.len();
        DataTable::new(
            schema(),
            vec![
                col(0),
                col(1),
                col(2),
                col(3),
                Column::real(vec![10.0; n]),
                Column::codes(vec![1; n]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn clip_creatinine_to_max() {
        let t = table(&[[Some(120.0), Some(80.0), Some(45.0), Some(99.0)], [None, None, None, None]]);
        let (out, rep) = clip_to_ranges(&t).unwrap();
        assert_eq!(out.value(0, 2), Some(30.0));
        assert_eq!(out.value(0, 3), Some(99.0));
        assert!(out.column(2).is_missing(1));
        assert_eq!(rep.total(), 1);
        assert!(validate(&out).range_violations().next().is_none());
    }

    #[test]
    fn pressure_rule() {
        let t = table(&[
            [Some(120.0), Some(130.0), Some(1.0), Some(95.0)],
            [Some(120.0), Some(120.0), Some(1.0), Some(95.0)],
            [Some(148.0), Some(82.0), Some(1.0), Some(95.0)],
            [None, Some(82.0), Some(1.0), Some(95.0)],
            [Some(148.0), Some(82.0), Some(40.0), Some(95.0)],
        ]);
        let out = filter_implausible(&t, &PlausibilityRules::for_schema(t.schema())).unwrap();
        assert_eq!(out.dropped, vec![0, 1, 4]);
        assert_eq!(out.table.n_rows(), 2);
        assert!((out.drop_rate() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn filter_is_identity_on_valid_table() {
        let t = table(&[[Some(148.0), Some(82.0), Some(1.0), Some(95.0)]; 4]);
        assert!(validate(&t).is_valid());
        let out = filter_implausible(&t, &PlausibilityRules::for_schema(t.schema())).unwrap();
        assert_eq!(out.table, t.select_rows(&[0, 1, 2, 3]));
        assert!(out.dropped.is_empty());
        assert!(!validate(&out.table).violations.iter().any(|v| matches!(v, Violation::OutOfRange { .. })));
    }
}
