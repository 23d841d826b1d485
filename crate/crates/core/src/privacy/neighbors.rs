use crate::data::{DataTable, Encoder, NormalizationMode, NormalizationParams};
use crate::data::fit_normalization;
use crate::error::Result;
use crate::par;

/// Row-major points in a common encoded space.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize, data: Vec<f64>) -> Self {
        assert!(dim == 0 || data.len().is_multiple_of(dim), "point buffer is not a multiple of the dimension");
        PointSet { dim, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let dim = rows.first().map_or(0, Vec::len);
        PointSet::new(dim, rows.concat())
    }

    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn select(&self, rows: &[usize]) -> PointSet {
        let mut data = Vec::with_capacity(rows.len() * self.dim);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        PointSet { dim: self.dim, data }
    }
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Squared distance from `query` to its nearest point of `set`, skipping index `exclude`.
pub fn nearest_squared(query: &[f64], set: &PointSet, exclude: Option<usize>) -> f64 {
    let mut best = f64::INFINITY;
    for j in 0..set.len() {
        if Some(j) == exclude {
            continue;
        }
        let d = squared_distance(query, set.row(j));
        if d < best {
            best = d;
        }
    }
    best
}

/// Nearest-neighbour Euclidean distance of every row of `queries` into `set`. With `self_set`
/// the query's own index is excluded (queries and set are the same points).
pub fn nearest_distances(queries: &PointSet, set: &PointSet, self_set: bool) -> Vec<f64> {
    par::map_range(queries.len(), |i| {
        nearest_squared(queries.row(i), set, self_set.then_some(i)).sqrt()
    })
}

/// Min-max parameters fitted on `fit_on`, with every non-indicator column encoded and
/// multi-category columns fully one-hot.
pub fn distance_space(fit_on: &[&DataTable]) -> Result<(Encoder, NormalizationParams)> {
    let params = fit_normalization(fit_on, NormalizationMode::MinMax, "privacy")?;
    let schema = fit_on[0].schema();
    let cols: Vec<usize> = (0..schema.n_columns())
        .filter(|&c| !schema.column(c).is_missing_indicator())
        .collect();
    Ok((Encoder::new(schema, &cols, false, Some(&params)), params))
}

pub fn encode_points(encoder: &Encoder, table: &DataTable) -> Result<PointSet> {
    Ok(PointSet::new(encoder.width(), encoder.rows(table)?))
}
