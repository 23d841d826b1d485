use serde::{Deserialize, Serialize};

use crate::data::table::DataTable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    OutOfRange {
        column: String,
        row: usize,
        value: f64,
        min: Option<f64>,
        max: Option<f64>,
    },
    InvalidCode {
        column: String,
        row: usize,
        code: u32,
        n_categories: usize,
    },
    MissingOutcome {
        column: String,
        row: usize,
    },
    NonPositiveTime {
        column: String,
        row: usize,
        value: f64,
    },
    NonFinite {
        column: String,
        row: usize,
    },
}

impl Violation {
    pub fn column(&self) -> &str {
        match self {
            Violation::OutOfRange { column, .. }
            | Violation::InvalidCode { column, .. }
            | Violation::MissingOutcome { column, .. }
            | Violation::NonPositiveTime { column, .. }
            | Violation::NonFinite { column, .. } => column,
        }
    }

    /// Range violations are repairable (clip or filter); the rest make a table unusable.
    pub fn is_structural(&self) -> bool {
        !matches!(self, Violation::OutOfRange { .. })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn range_violations(&self) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(|v| !v.is_structural())
    }

    pub fn structural_violations(&self) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(|v| v.is_structural())
    }
}

/// Lists every out-of-range value, invalid category code, non-finite real and missing or
/// non-positive outcome cell. Never fails.
pub fn validate(table: &DataTable) -> ValidationReport {
    let schema = table.schema();
    let time_idx = schema.time_index();
    let event_idx = schema.event_index();
    let mut violations = Vec::new();
    for (ci, spec) in schema.columns().iter().enumerate() {
        let col = table.column(ci);
        for row in 0..table.n_rows() {
            if col.is_missing(row) {
                if ci == time_idx || ci == event_idx {
                    violations.push(Violation::MissingOutcome {
                        column: spec.name.clone(),
                        row,
                    });
                }
                continue;
            }
            if spec.is_continuous() {
                let v = col.get(row).unwrap();
                if !v.is_finite() {
                    violations.push(Violation::NonFinite {
                        column: spec.name.clone(),
                        row,
                    });
                    continue;
                }
                let below = spec.plausible_min.is_some_and(|lo| v < lo);
                let above = spec.plausible_max.is_some_and(|hi| v > hi);
                if below || above {
                    violations.push(Violation::OutOfRange {
                        column: spec.name.clone(),
                        row,
                        value: v,
                        min: spec.plausible_min,
                        max: spec.plausible_max,
                    });
                }
                if ci == time_idx && v <= 0.0 {
                    violations.push(Violation::NonPositiveTime {
                        column: spec.name.clone(),
                        row,
                        value: v,
                    });
                }
            } else {
                let code = col.code(row).unwrap();
                if code as usize >= spec.n_categories() {
                    violations.push(Violation::InvalidCode {
                        column: spec.name.clone(),
                        row,
                        code,
                        n_categories: spec.n_categories(),
                    });
                }
            }
        }
    }
    ValidationReport { violations }
}
