//! Numeric design matrices from tables: reals pass through (optionally rescaled), coded
//! columns become 0/1 indicator columns.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::normalize::NormalizationParams;
use crate::data::schema::{ColumnKind, DatasetSchema};
use crate::data::table::DataTable;
use crate::error::{AuditError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Encoding {
    /// `(value - center) / scale`, or 0 for degenerate scale.
    Real { center: f64, scale: f64 },
    /// 1 when the cell holds `code`.
    Indicator { code: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedColumn {
    pub source: usize,
    pub name: String,
    pub encoding: Encoding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    columns: Vec<EncodedColumn>,
}

impl Encoder {
    /// Encodes `sources` of `schema`. Multi-category columns drop their first level when
    /// `drop_reference` is set (model covariates) and keep every level otherwise (distances).
    /// Continuous columns found in `scaling` are rescaled with it.
    pub fn new(
        schema: &DatasetSchema,
        sources: &[usize],
        drop_reference: bool,
        scaling: Option<&NormalizationParams>,
    ) -> Encoder {
        let mut columns = Vec::new();
        for &s in sources {
            let spec = schema.column(s);
            match spec.kind {
                ColumnKind::Continuous => {
                    let (center, scale) = scaling
                        .and_then(|p| p.get(&spec.name))
                        .map_or((0.0, 1.0), |st| (st.center, st.scale));
                    columns.push(EncodedColumn {
                        source: s,
                        name: spec.name.clone(),
                        encoding: Encoding::Real { center, scale },
                    });
                }
                ColumnKind::Binary => columns.push(EncodedColumn {
                    source: s,
                    name: spec.name.clone(),
                    encoding: Encoding::Indicator { code: 1 },
                }),
                ColumnKind::Categorical => {
                    let start = usize::from(drop_reference);
                    for (code, label) in spec.categories.iter().enumerate().skip(start) {
                        columns.push(EncodedColumn {
                            source: s,
                            name: format!("{}={}", spec.name, label),
                            encoding: Encoding::Indicator { code: code as u32 },
                        });
                    }
                }
            }
        }
        Encoder { columns }
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[EncodedColumn] {
        &self.columns
    }

    pub fn names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    /// Encoded value of one cell; NaN when the cell is masked.
    pub fn encode_cell(&self, table: &DataTable, row: usize, k: usize) -> f64 {
        let ec = &self.columns[k];
        let col = table.column(ec.source);
        match (&ec.encoding, col.get(row)) {
            (_, None) => f64::NAN,
            (Encoding::Real { center, scale }, Some(v)) => {
                if *scale > 0.0 {
                    (v - center) / scale
                } else {
                    0.0
                }
            }
            (Encoding::Indicator { code }, Some(v)) => f64::from(u8::from(v as u32 == *code)),
        }
    }

    pub fn encode_row(&self, table: &DataTable, row: usize, out: &mut [f64]) {
        for (k, slot) in out.iter_mut().enumerate().take(self.columns.len()) {
            *slot = self.encode_cell(table, row, k);
        }
    }

    /// `n_rows x width` matrix. Errors if any encoded cell is masked.
    pub fn matrix(&self, table: &DataTable) -> Result<DMatrix<f64>> {
        let (n, w) = (table.n_rows(), self.width());
        let mut m = DMatrix::zeros(n, w);
        for k in 0..w {
            let src = self.columns[k].source;
            if table.column(src).has_missing() {
                return Err(AuditError::InsufficientData(format!(
                    "column '{}' has missing cells; impute before encoding",
                    table.spec(src).name
                )));
            }
            for i in 0..n {
                m[(i, k)] = self.encode_cell(table, i, k);
            }
        }
        Ok(m)
    }

    /// Row-major `n_rows * width` buffer (same contents as [`Encoder::matrix`]).
    pub fn rows(&self, table: &DataTable) -> Result<Vec<f64>> {
        let m = self.matrix(table)?;
        let (n, w) = m.shape();
        let mut out = Vec::with_capacity(n * w);
        for i in 0..n {
            for k in 0..w {
                out.push(m[(i, k)]);
            }
        }
        Ok(out)
    }
}
