use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};

/// Suffix of the binary indicator columns appended for missing cells.
pub const MISSING_INDICATOR_SUFFIX: &str = "__miss";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Continuous,
    Binary,
    Categorical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnRole {
    Feature,
    Time,
    Event,
    QuasiIdentifierFeature,
}

impl ColumnRole {
    /// Features are everything a model may use as a covariate.
    pub fn is_feature(self) -> bool {
        matches!(self, ColumnRole::Feature | ColumnRole::QuasiIdentifierFeature)
    }

    pub fn is_outcome(self) -> bool {
        matches!(self, ColumnRole::Time | ColumnRole::Event)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    pub role: ColumnRole,
    #[serde(default)]
    pub unit: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plausible_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plausible_max: Option<f64>,
    /// Ordered labels; the position of a label is its stored code.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<String>,
    #[serde(default = "default_true")]
    pub missingness_allowed: bool,
}

fn default_true() -> bool {
    true
}

impl ColumnSpec {
    pub fn continuous(name: impl Into<String>) -> Self {
        ColumnSpec {
            name: name.into(),
            kind: ColumnKind::Continuous,
            role: ColumnRole::Feature,
            unit: String::new(),
            plausible_min: None,
            plausible_max: None,
            categories: Vec::new(),
            missingness_allowed: true,
        }
    }

    pub fn binary(name: impl Into<String>) -> Self {
        ColumnSpec {
            kind: ColumnKind::Binary,
            categories: vec!["0".into(), "1".into()],
            ..ColumnSpec::continuous(name)
        }
    }

    pub fn categorical<S: Into<String>>(name: impl Into<String>, labels: impl IntoIterator<Item = S>) -> Self {
        ColumnSpec {
            kind: ColumnKind::Categorical,
            categories: labels.into_iter().map(Into::into).collect(),
            ..ColumnSpec::continuous(name)
        }
    }

    pub fn with_role(mut self, role: ColumnRole) -> Self {
        self.role = role;
        self
    }

    pub fn with_range(mut self, min: f64, max: f64) -> Self {
        self.plausible_min = Some(min);
        self.plausible_max = Some(max);
        self
    }

    pub fn with_unit(mut self, unit: impl Into<String>) -> Self {
        self.unit = unit.into();
        self
    }

    pub fn is_continuous(&self) -> bool {
        self.kind == ColumnKind::Continuous
    }

    /// Binary and categorical columns are both stored as codes.
    pub fn is_coded(&self) -> bool {
        !self.is_continuous()
    }

    pub fn n_categories(&self) -> usize {
        self.categories.len()
    }

    pub fn is_missing_indicator(&self) -> bool {
        self.name.ends_with(MISSING_INDICATOR_SUFFIX)
    }

    fn check(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(AuditError::Schema("column with empty name".into()));
        }
        match self.kind {
            ColumnKind::Continuous => {
                if !self.categories.is_empty() {
                    return Err(AuditError::Schema(format!(
                        "continuous column '{}' must not declare categories",
                        self.name
                    )));
                }
                if let (Some(lo), Some(hi)) = (self.plausible_min, self.plausible_max) {
                    if !(lo < hi) {
                        return Err(AuditError::Schema(format!(
                            "column '{}': plausible_min {lo} must be below plausible_max {hi}",
                            self.name
                        )));
                    }
                }
            }
            ColumnKind::Binary => {
                if self.categories != ["0", "1"] {
                    return Err(AuditError::Schema(format!(
                        "binary column '{}' must have categories [\"0\", \"1\"]",
                        self.name
                    )));
                }
            }
            ColumnKind::Categorical => {
                if self.categories.len() < 2 {
                    return Err(AuditError::Schema(format!(
                        "categorical column '{}' needs at least two categories",
                        self.name
                    )));
                }
                let unique: HashSet<&String> = self.categories.iter().collect();
                if unique.len() != self.categories.len() {
                    return Err(AuditError::Schema(format!(
                        "categorical column '{}' has duplicate labels",
                        self.name
                    )));
                }
            }
        }
        if self.is_coded() && (self.plausible_min.is_some() || self.plausible_max.is_some()) {
            return Err(AuditError::Schema(format!(
                "plausible range only applies to continuous columns ('{}')",
                self.name
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSchema {
    columns: Vec<ColumnSpec>,
    quasi_identifiers: Vec<String>,
}

impl DatasetSchema {
    /// Builds and validates a schema: unique names, exactly one time and one event column,
    /// quasi-identifiers drawn from the column set.
    pub fn new(columns: Vec<ColumnSpec>, quasi_identifiers: Vec<String>) -> Result<Self> {
        let mut seen = HashSet::new();
        for col in &columns {
            col.check()?;
            if !seen.insert(col.name.as_str()) {
                return Err(AuditError::Schema(format!("duplicate column '{}'", col.name)));
            }
        }
        let n_time = columns.iter().filter(|c| c.role == ColumnRole::Time).count();
        let n_event = columns.iter().filter(|c| c.role == ColumnRole::Event).count();
        if n_time != 1 || n_event != 1 {
            return Err(AuditError::Schema(format!(
                "expected exactly one time and one event column, found {n_time} and {n_event}"
            )));
        }
        let time = columns.iter().find(|c| c.role == ColumnRole::Time).unwrap();
        if time.kind != ColumnKind::Continuous {
            return Err(AuditError::Schema(format!("time column '{}' must be continuous", time.name)));
        }
        let event = columns.iter().find(|c| c.role == ColumnRole::Event).unwrap();
        if event.kind != ColumnKind::Binary {
            return Err(AuditError::Schema(format!("event column '{}' must be binary", event.name)));
        }
        let mut qis = quasi_identifiers;
        for col in &columns {
            if col.role == ColumnRole::QuasiIdentifierFeature && !qis.contains(&col.name) {
                qis.push(col.name.clone());
            }
        }
        for q in &qis {
            match columns.iter().find(|c| &c.name == q) {
                None => {
                    return Err(AuditError::Schema(format!("quasi-identifier '{q}' is not a column")))
                }
                Some(c) if c.role.is_outcome() => {
                    return Err(AuditError::Schema(format!("quasi-identifier '{q}' is an outcome column")))
                }
                Some(_) => {}
            }
        }
        Ok(DatasetSchema {
            columns,
            quasi_identifiers: qis,
        })
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.columns
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, idx: usize) -> &ColumnSpec {
        &self.columns[idx]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn require(&self, name: &str) -> Result<usize> {
        self.index_of(name)
            .ok_or_else(|| AuditError::SchemaMismatch(format!("no column named '{name}'")))
    }

    pub fn quasi_identifiers(&self) -> &[String] {
        &self.quasi_identifiers
    }

    pub fn is_quasi_identifier(&self, name: &str) -> bool {
        self.quasi_identifiers.iter().any(|q| q == name)
    }

    pub fn time_index(&self) -> usize {
        self.columns.iter().position(|c| c.role == ColumnRole::Time).unwrap()
    }

    pub fn event_index(&self) -> usize {
        self.columns.iter().position(|c| c.role == ColumnRole::Event).unwrap()
    }

    /// Indices of covariate columns (everything except time and event).
    pub fn feature_indices(&self) -> Vec<usize> {
        (0..self.columns.len()).filter(|&i| self.columns[i].role.is_feature()).collect()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    /// Same schema plus additional columns; used for indicator columns.
    pub fn extended(&self, extra: Vec<ColumnSpec>) -> Result<Self> {
        let mut cols = self.columns.clone();
        cols.extend(extra);
        DatasetSchema::new(cols, self.quasi_identifiers.clone())
    }

    /// Schema restricted to the columns whose indices are given, in that order.
    pub fn project(&self, indices: &[usize]) -> Result<Self> {
        let cols: Vec<ColumnSpec> = indices.iter().map(|&i| self.columns[i].clone()).collect();
        let qis = self
            .quasi_identifiers
            .iter()
            .filter(|q| cols.iter().any(|c| &c.name == *q))
            .cloned()
            .collect();
        DatasetSchema::new(cols, qis)
    }

    /// True when both schemas have the same column names, kinds and categories in the same order.
    pub fn is_compatible(&self, other: &DatasetSchema) -> bool {
        self.columns.len() == other.columns.len()
            && self
                .columns
                .iter()
                .zip(&other.columns)
                .all(|(a, b)| a.name == b.name && a.kind == b.kind && a.categories == b.categories)
    }

    pub fn ensure_compatible(&self, other: &DatasetSchema) -> Result<()> {
        if self.is_compatible(other) {
            Ok(())
        } else {
            Err(AuditError::SchemaMismatch(
                "tables do not share column names, kinds and categories".into(),
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> Vec<ColumnSpec> {
        vec![
            ColumnSpec::continuous("Age"),
            ColumnSpec::continuous("Days").with_role(ColumnRole::Time),
            ColumnSpec::binary("dead").with_role(ColumnRole::Event),
        ]
    }

    #[test]
    fn accepts_minimal_schema() {
        let s = DatasetSchema::new(base(), vec!["Age".into()]).unwrap();
        assert_eq!(s.time_index(), 1);
        assert_eq!(s.event_index(), 2);
        assert_eq!(s.feature_indices(), vec![0]);
    }

    #[test]
    fn rejects_duplicate_names() {
        let mut cols = base();
        cols.push(ColumnSpec::continuous("Age"));
        assert!(DatasetSchema::new(cols, vec![]).is_err());
    }

    #[test]
    fn rejects_inverted_range() {
        let mut cols = base();
        cols.push(ColumnSpec::continuous("SBP").with_range(250.0, 40.0));
        assert!(DatasetSchema::new(cols, vec![]).is_err());
    }

    #[test]
    fn rejects_missing_event() {
        let cols = vec![
            ColumnSpec::continuous("Age"),
            ColumnSpec::continuous("Days").with_role(ColumnRole::Time),
        ];
        assert!(DatasetSchema::new(cols, vec![]).is_err());
    }

    #[test]
    fn rejects_unknown_quasi_identifier() {
        assert!(DatasetSchema::new(base(), vec!["HIGH".into()]).is_err());
    }

    #[test]
    fn binary_categories_are_fixed() {
        let mut cols = base();
        let mut b = ColumnSpec::binary("AF");
        b.categories = vec!["no".into(), "yes".into()];
        cols.push(b);
        assert!(DatasetSchema::new(cols, vec![]).is_err());
    }
}
