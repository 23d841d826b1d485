//! Textual schema configuration (TOML).
//!
//! ```toml
//! time = "Days"
//! event = "dead"
//! quasi_identifiers = ["HIGH", "BW", "Age", "Gender"]
//!
//! [[columns]]
//! name = "SBP"
//! kind = "continuous"
//! unit = "mmHg"
//! min = 40
//! max = 250
//!
//! [[columns]]
//! name = "type"
//! kind = "categorical"
//! categories = ["HFpEF", "HFmrEF", "HFrEF"]
//! ```

use std::path::Path;

use serde::Deserialize;

use crate::data::{ColumnKind, ColumnRole, ColumnSpec, DatasetSchema};
use crate::error::{AuditError, Result};

/// The reference heart-failure schema shipped with the crate.
pub const REFERENCE_SCHEMA: &str = include_str!("../../schemas/heart_failure.toml");

pub const DEFAULT_MISSING_TOKENS: [&str; 4] = ["NA", "NaN", "nan", "null"];

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    time: Option<String>,
    event: Option<String>,
    #[serde(default)]
    quasi_identifiers: Vec<String>,
    missing_tokens: Option<Vec<String>>,
    columns: Vec<RawColumn>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawColumn {
    name: String,
    kind: ColumnKind,
    role: Option<ColumnRole>,
    #[serde(default)]
    unit: String,
    #[serde(default)]
    description: String,
    min: Option<f64>,
    max: Option<f64>,
    #[serde(default)]
    categories: Vec<String>,
    missing: Option<bool>,
}

/// A parsed schema file: the schema plus the tokens that denote missing cells.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaConfig {
    pub schema: DatasetSchema,
    pub missing_tokens: Vec<String>,
}

impl SchemaConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| AuditError::SchemaConfig(e.to_string()))?;
        let mut columns = Vec::with_capacity(raw.columns.len());
        for rc in raw.columns {
            let _ = rc.description;
            let mut role = rc.role.unwrap_or(ColumnRole::Feature);
            if raw.time.as_deref() == Some(rc.name.as_str()) {
                role = ColumnRole::Time;
            } else if raw.event.as_deref() == Some(rc.name.as_str()) {
                role = ColumnRole::Event;
            }
            let categories = match rc.kind {
                ColumnKind::Binary if rc.categories.is_empty() => vec!["0".to_string(), "1".to_string()],
                _ => rc.categories,
            };
            let outcome = role.is_outcome();
            columns.push(ColumnSpec {
                name: rc.name,
                kind: rc.kind,
                role,
                unit: rc.unit,
                plausible_min: rc.min,
                plausible_max: rc.max,
                categories,
                missingness_allowed: rc.missing.unwrap_or(!outcome),
            });
        }
        let schema = DatasetSchema::new(columns, raw.quasi_identifiers)?;
        let missing_tokens = raw
            .missing_tokens
            .unwrap_or_else(|| DEFAULT_MISSING_TOKENS.iter().map(|s| s.to_string()).collect());
        Ok(SchemaConfig { schema, missing_tokens })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| AuditError::io(path.display().to_string(), e))?;
        Self::parse(&text).map_err(|e| e.context(path.display().to_string()))
    }

    pub fn reference() -> Self {
        Self::parse(REFERENCE_SCHEMA).expect("bundled reference schema is valid")
    }
}
