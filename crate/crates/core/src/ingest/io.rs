//! Delimiter-separated table files: header row, UTF-8, empty field = missing.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::data::{Column, ColumnData, ColumnRole, ColumnSpec, DataTable, DatasetSchema, MISSING_INDICATOR_SUFFIX};
use crate::error::{AuditError, Result};
use crate::ingest::config::DEFAULT_MISSING_TOKENS;

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub delimiter: u8,
    /// Field values (besides the empty string) read as missing.
    pub missing_tokens: Vec<String>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            delimiter: b',',
            missing_tokens: DEFAULT_MISSING_TOKENS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

pub fn load_table(path: impl AsRef<Path>, schema: &DatasetSchema) -> Result<DataTable> {
    load_table_with(path, schema, &LoadOptions::default())
}

pub fn load_table_with(path: impl AsRef<Path>, schema: &DatasetSchema, opts: &LoadOptions) -> Result<DataTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| AuditError::io(path.display().to_string(), e))?;
    read_table(file, schema, opts, &path.display().to_string())
}

/// Indicator spec for `<base>__miss`.
pub fn indicator_spec(base: &str) -> ColumnSpec {
    let mut spec = ColumnSpec::binary(format!("{base}{MISSING_INDICATOR_SUFFIX}")).with_role(ColumnRole::Feature);
    spec.missingness_allowed = false;
    spec
}

/// Parses a table from any reader. Header columns may come in any order; every schema
/// column must be present. Headers of the form `<column>__miss` are accepted as missingness
/// indicator columns and appended to the schema.
pub fn read_table<R: Read>(reader: R, schema: &DatasetSchema, opts: &LoadOptions, source: &str) -> Result<DataTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(opts.delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| AuditError::Format {
            path: source.to_string(),
            message: e.to_string(),
        })?
        .clone();

    let mut extra = Vec::new();
    let mut position: HashMap<&str, usize> = HashMap::new();
    for (pos, h) in headers.iter().enumerate() {
        if position.insert(h, pos).is_some() {
            return Err(AuditError::Format {
                path: source.to_string(),
                message: format!("duplicate header '{h}'"),
            });
        }
        if schema.index_of(h).is_none() {
            match h.strip_suffix(MISSING_INDICATOR_SUFFIX) {
                Some(base) if schema.index_of(base).is_some() => extra.push(indicator_spec(base)),
                _ => {
                    return Err(AuditError::Parse {
                        path: source.to_string(),
                        row: 1,
                        column: h.to_string(),
                        message: "unknown column".into(),
                    })
                }
            }
        }
    }
    let schema = if extra.is_empty() { schema.clone() } else { schema.extended(extra)? };
    let mut source_pos = Vec::with_capacity(schema.n_columns());
    for spec in schema.columns() {
        match position.get(spec.name.as_str()) {
            Some(&p) => source_pos.push(p),
            None => {
                return Err(AuditError::Format {
                    path: source.to_string(),
                    message: format!("missing column '{}'", spec.name),
                })
            }
        }
    }

    let label_maps: Vec<HashMap<&str, u32>> = schema
        .columns()
        .iter()
        .map(|c| c.categories.iter().enumerate().map(|(i, l)| (l.as_str(), i as u32)).collect())
        .collect();

    let mut reals: Vec<Vec<f64>> = vec![Vec::new(); schema.n_columns()];
    let mut codes: Vec<Vec<u32>> = vec![Vec::new(); schema.n_columns()];
    let mut masks: Vec<Vec<bool>> = vec![Vec::new(); schema.n_columns()];

    for rec in rdr.records() {
        let rec = rec.map_err(|e| AuditError::Format {
            path: source.to_string(),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        for (ci, spec) in schema.columns().iter().enumerate() {
            let field = rec.get(source_pos[ci]).unwrap_or("");
            let is_missing = field.is_empty() || opts.missing_tokens.iter().any(|t| t == field);
            masks[ci].push(is_missing);
            let parse_err = |message: String| AuditError::Parse {
                path: source.to_string(),
                row: line,
                column: spec.name.clone(),
                message,
            };
            if spec.is_continuous() {
                let v = if is_missing {
                    f64::NAN
                } else {
                    field
                        .parse::<f64>()
                        .map_err(|_| parse_err(format!("cannot parse '{field}' as a number")))?
                };
                reals[ci].push(v);
            } else {
                let code = if is_missing {
                    0
                } else if let Some(&c) = label_maps[ci].get(field) {
                    c
                } else {
                    // Binary cells written as 0.0 / 1.0 by numeric tooling.
                    match field.parse::<f64>() {
                        Ok(v) if spec.kind == crate::data::ColumnKind::Binary && (v == 0.0 || v == 1.0) => v as u32,
                        _ => return Err(parse_err(format!("unknown category label '{field}'"))),
                    }
                };
                codes[ci].push(code);
            }
        }
    }

    let columns = schema
        .columns()
        .iter()
        .enumerate()
        .map(|(ci, spec)| {
            let data = if spec.is_continuous() {
                ColumnData::Real(std::mem::take(&mut reals[ci]))
            } else {
                ColumnData::Codes(std::mem::take(&mut codes[ci]))
            };
            Column::new(data, std::mem::take(&mut masks[ci]))
        })
        .collect::<Result<Vec<_>>>()?;
    DataTable::new(Arc::new(schema), columns)
}

/// Text form of one cell: shortest round-trip real, category label, or empty when missing.
pub fn format_cell(table: &DataTable, row: usize, col: usize) -> String {
    let c = table.column(col);
    if c.is_missing(row) {
        return String::new();
    }
    match c.data() {
        ColumnData::Real(v) => format!("{}", v[row]),
        ColumnData::Codes(v) => {
            let spec = table.spec(col);
            spec.categories
                .get(v[row] as usize)
                .cloned()
                .unwrap_or_else(|| v[row].to_string())
        }
    }
}

pub fn write_table_to<W: Write>(writer: W, table: &DataTable) -> Result<()> {
    let mut w = csv::WriterBuilder::new().from_writer(writer);
    let io_err = |e: csv::Error| AuditError::Format {
        path: "<output>".into(),
        message: e.to_string(),
    };
    w.write_record(table.schema().names()).map_err(io_err)?;
    for row in 0..table.n_rows() {
        let rec: Vec<String> = (0..table.n_columns()).map(|c| format_cell(table, row, c)).collect();
        w.write_record(&rec).map_err(io_err)?;
    }
    w.flush().map_err(|e| AuditError::io("<output>", e))?;
    Ok(())
}

pub fn write_table(path: impl AsRef<Path>, table: &DataTable) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| AuditError::io(path.display().to_string(), e))?;
    write_table_to(std::io::BufWriter::new(file), table).map_err(|e| e.context(path.display().to_string()))
}

pub fn table_to_string(table: &DataTable) -> String {
    let mut buf = Vec::new();
    write_table_to(&mut buf, table).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("table text is UTF-8")
}
