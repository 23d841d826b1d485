use std::sync::Arc;

use crate::data::schema::{ColumnSpec, DatasetSchema};
use crate::error::{AuditError, Result};

/// Raw storage for one column: reals for continuous columns, category codes otherwise.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Real(Vec<f64>),
    Codes(Vec<u32>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Real(v) => v.len(),
            ColumnData::Codes(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A column plus its missingness mask. The mask is authoritative: the stored value of a
/// masked cell is a placeholder and must never be read as data.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    data: ColumnData,
    missing: Vec<bool>,
}

impl Column {
    pub fn new(data: ColumnData, missing: Vec<bool>) -> Result<Self> {
        if data.len() != missing.len() {
            return Err(AuditError::InsufficientData(format!(
                "column data has {} cells but mask has {}",
                data.len(),
                missing.len()
            )));
        }
        Ok(Column { data, missing })
    }

    pub fn real(values: Vec<f64>) -> Self {
        let missing = vec![false; values.len()];
        Column {
            data: ColumnData::Real(values),
            missing,
        }
    }

    pub fn codes(codes: Vec<u32>) -> Self {
        let missing = vec![false; codes.len()];
        Column {
            data: ColumnData::Codes(codes),
            missing,
        }
    }

    /// `None` entries become masked cells.
    pub fn real_opt(values: impl IntoIterator<Item = Option<f64>>) -> Self {
        let (data, missing): (Vec<f64>, Vec<bool>) = values
            .into_iter()
            .map(|v| match v {
                Some(x) => (x, false),
                None => (f64::NAN, true),
            })
            .unzip();
        Column {
            data: ColumnData::Real(data),
            missing,
        }
    }

    pub fn codes_opt(values: impl IntoIterator<Item = Option<u32>>) -> Self {
        let (data, missing): (Vec<u32>, Vec<bool>) = values
            .into_iter()
            .map(|v| match v {
                Some(x) => (x, false),
                None => (0, true),
            })
            .unzip();
        Column {
            data: ColumnData::Codes(data),
            missing,
        }
    }

    pub fn len(&self) -> usize {
        self.missing.len()
    }

    pub fn is_empty(&self) -> bool {
        self.missing.is_empty()
    }

    pub fn data(&self) -> &ColumnData {
        &self.data
    }

    pub fn missing_mask(&self) -> &[bool] {
        &self.missing
    }

    pub fn is_missing(&self, row: usize) -> bool {
        self.missing[row]
    }

    pub fn n_missing(&self) -> usize {
        self.missing.iter().filter(|&&m| m).count()
    }

    pub fn has_missing(&self) -> bool {
        self.missing.iter().any(|&m| m)
    }

    /// Cell value as a real (codes are widened); `None` for masked cells.
    pub fn get(&self, row: usize) -> Option<f64> {
        if self.missing[row] {
            return None;
        }
        Some(match &self.data {
            ColumnData::Real(v) => v[row],
            ColumnData::Codes(v) => f64::from(v[row]),
        })
    }

    pub fn code(&self, row: usize) -> Option<u32> {
        match &self.data {
            ColumnData::Codes(v) if !self.missing[row] => Some(v[row]),
            _ => None,
        }
    }

    pub fn reals(&self) -> Option<&[f64]> {
        match &self.data {
            ColumnData::Real(v) => Some(v),
            ColumnData::Codes(_) => None,
        }
    }

    pub fn raw_codes(&self) -> Option<&[u32]> {
        match &self.data {
            ColumnData::Codes(v) => Some(v),
            ColumnData::Real(_) => None,
        }
    }

    pub fn observed_reals(&self) -> Vec<f64> {
        (0..self.len()).filter_map(|i| self.get(i)).collect()
    }

    pub fn observed_codes(&self) -> Vec<u32> {
        (0..self.len()).filter_map(|i| self.code(i)).collect()
    }

    pub fn select(&self, rows: &[usize]) -> Column {
        let data = match &self.data {
            ColumnData::Real(v) => ColumnData::Real(rows.iter().map(|&r| v[r]).collect()),
            ColumnData::Codes(v) => ColumnData::Codes(rows.iter().map(|&r| v[r]).collect()),
        };
        Column {
            data,
            missing: rows.iter().map(|&r| self.missing[r]).collect(),
        }
    }

    /// Same values with a different mask.
    pub fn with_mask(&self, missing: Vec<bool>) -> Result<Column> {
        Column::new(self.data.clone(), missing)
    }

    fn append(&mut self, other: &Column) -> Result<()> {
        match (&mut self.data, &other.data) {
            (ColumnData::Real(a), ColumnData::Real(b)) => a.extend_from_slice(b),
            (ColumnData::Codes(a), ColumnData::Codes(b)) => a.extend_from_slice(b),
            _ => return Err(AuditError::SchemaMismatch("column storage kinds differ".into())),
        }
        self.missing.extend_from_slice(&other.missing);
        Ok(())
    }

    fn matches_spec(&self, spec: &ColumnSpec) -> bool {
        matches!(
            (&self.data, spec.is_continuous()),
            (ColumnData::Real(_), true) | (ColumnData::Codes(_), false)
        )
    }
}

/// Column-major table bound to a schema. Immutable once built; transformations return new tables.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTable {
    schema: Arc<DatasetSchema>,
    n_rows: usize,
    columns: Vec<Column>,
}

impl DataTable {
    pub fn new(schema: Arc<DatasetSchema>, columns: Vec<Column>) -> Result<Self> {
        if columns.len() != schema.n_columns() {
            return Err(AuditError::SchemaMismatch(format!(
                "schema has {} columns, got {}",
                schema.n_columns(),
                columns.len()
            )));
        }
        let n_rows = columns.first().map_or(0, Column::len);
        for (col, spec) in columns.iter().zip(schema.columns()) {
            if col.len() != n_rows {
                return Err(AuditError::SchemaMismatch(format!(
                    "column '{}' has {} rows, expected {n_rows}",
                    spec.name,
                    col.len()
                )));
            }
            if !col.matches_spec(spec) {
                return Err(AuditError::SchemaMismatch(format!(
                    "column '{}' storage does not match its kind",
                    spec.name
                )));
            }
        }
        Ok(DataTable {
            schema,
            n_rows,
            columns,
        })
    }

    /// Zero-row table for `schema`.
    pub fn empty(schema: Arc<DatasetSchema>) -> Self {
        let columns = schema
            .columns()
            .iter()
            .map(|c| if c.is_continuous() { Column::real(Vec::new()) } else { Column::codes(Vec::new()) })
            .collect();
        DataTable {
            schema,
            n_rows: 0,
            columns,
        }
    }

    pub fn schema(&self) -> &DatasetSchema {
        &self.schema
    }

    pub fn schema_arc(&self) -> &Arc<DatasetSchema> {
        &self.schema
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, idx: usize) -> &Column {
        &self.columns[idx]
    }

    pub fn column_by_name(&self, name: &str) -> Result<&Column> {
        Ok(&self.columns[self.schema.require(name)?])
    }

    pub fn spec(&self, idx: usize) -> &ColumnSpec {
        self.schema.column(idx)
    }

    pub fn value(&self, row: usize, col: usize) -> Option<f64> {
        self.columns[col].get(row)
    }

    pub fn has_missing(&self) -> bool {
        self.columns.iter().any(Column::has_missing)
    }

    pub fn into_columns(self) -> Vec<Column> {
        self.columns
    }

    pub fn select_rows(&self, rows: &[usize]) -> DataTable {
        DataTable {
            schema: Arc::clone(&self.schema),
            n_rows: rows.len(),
            columns: self.columns.iter().map(|c| c.select(rows)).collect(),
        }
    }

    /// Rows of every table stacked in order. Schemas must be compatible.
    pub fn concat(tables: &[&DataTable]) -> Result<DataTable> {
        let first = tables
            .first()
            .ok_or_else(|| AuditError::InsufficientData("nothing to concatenate".into()))?;
        let mut columns = first.columns.clone();
        for t in &tables[1..] {
            first.schema.ensure_compatible(&t.schema)?;
            for (dst, src) in columns.iter_mut().zip(&t.columns) {
                dst.append(src)?;
            }
        }
        DataTable::new(Arc::clone(&first.schema), columns)
    }

    pub fn with_column(&self, idx: usize, column: Column) -> Result<DataTable> {
        let mut columns = self.columns.clone();
        columns[idx] = column;
        DataTable::new(Arc::clone(&self.schema), columns)
    }

    /// Same cells under another (compatible) schema, e.g. one with tighter metadata.
    pub fn with_schema(&self, schema: Arc<DatasetSchema>) -> Result<DataTable> {
        self.schema.ensure_compatible(&schema)?;
        DataTable::new(schema, self.columns.clone())
    }

    pub fn with_extra_columns(&self, extra: Vec<(ColumnSpec, Column)>) -> Result<DataTable> {
        let (specs, cols): (Vec<_>, Vec<_>) = extra.into_iter().unzip();
        let schema = Arc::new(self.schema.extended(specs)?);
        let mut columns = self.columns.clone();
        columns.extend(cols);
        DataTable::new(schema, columns)
    }

    /// Keeps only the listed columns (in the given order).
    pub fn project(&self, indices: &[usize]) -> Result<DataTable> {
        let schema = Arc::new(self.schema.project(indices)?);
        DataTable::new(schema, indices.iter().map(|&i| self.columns[i].clone()).collect())
    }

    /// Survival times (time column); masked cells yield `None`.
    pub fn times(&self) -> Vec<Option<f64>> {
        let c = &self.columns[self.schema.time_index()];
        (0..self.n_rows).map(|i| c.get(i)).collect()
    }

    pub fn events(&self) -> Vec<Option<bool>> {
        let c = &self.columns[self.schema.event_index()];
        (0..self.n_rows).map(|i| c.code(i).map(|v| v == 1)).collect()
    }
}
