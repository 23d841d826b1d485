//! Schema and table model shared by every other module.

pub mod encode;
pub mod normalize;
pub mod schema;
pub mod table;
pub mod validate;

pub use encode::{EncodedColumn, Encoder, Encoding};
pub use normalize::{apply_normalization, fit_normalization, ColumnStats, NormalizationMode, NormalizationParams};
pub use schema::{ColumnKind, ColumnRole, ColumnSpec, DatasetSchema, MISSING_INDICATOR_SUFFIX};
pub use table::{Column, ColumnData, DataTable};
pub use validate::{validate, ValidationReport, Violation};
