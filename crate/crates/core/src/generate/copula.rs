use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{Column, DataTable, DatasetSchema};
use crate::error::{AuditError, Result};
use crate::par;
use crate::seed;
use crate::stats;

/// Eigenvalue floor used when repairing the latent correlation matrix.
pub const EIGEN_FLOOR: f64 = 1e-8;
const CHUNK: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Marginal {
    /// Sorted observed values.
    Continuous(Vec<f64>),
    /// Cumulative category frequencies (last entry 1).
    Coded(Vec<f64>),
}

impl Marginal {
    /// Inverse CDF at `u`. Continuous marginals interpolate linearly between order statistics.
    pub fn quantile(&self, u: f64) -> f64 {
        match self {
            Marginal::Continuous(sorted) => interpolate_quantile(sorted, u),
            Marginal::Coded(cum) => cum.iter().position(|&c| u <= c).unwrap_or(cum.len() - 1) as f64,
        }
    }
}

/// Empirical quantile with plotting positions `(i + 0.5) / n`, clamped to the sample range.
pub fn interpolate_quantile(sorted: &[f64], u: f64) -> f64 {
    let n = sorted.len();
    let h = (u * n as f64 - 0.5).clamp(0.0, (n - 1) as f64);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq)]
pub struct CopulaModel {
    pub schema: Arc<DatasetSchema>,
    pub marginals: Vec<Marginal>,
    /// Repaired latent correlation (unit diagonal, positive definite).
    pub correlation: DMatrix<f64>,
    pub missing_rates: Vec<f64>,
    pub seed: u64,
    cholesky: DMatrix<f64>,
}

impl CopulaModel {
    pub fn with_seed(mut self, seed_value: u64) -> Self {
        self.seed = seed_value;
        self
    }
}

fn normal_scores(col: &Column) -> Vec<f64> {
    let observed: Vec<usize> = (0..col.len()).filter(|&r| !col.is_missing(r)).collect();
    let vals: Vec<f64> = observed.iter().filter_map(|&r| col.get(r)).collect();
    let ranks = stats::average_ranks(&vals);
    let n = vals.len() as f64;
    let mut out = vec![f64::NAN; col.len()];
    for (k, &r) in observed.iter().enumerate() {
        out[r] = stats::normal_quantile((ranks[k] - 0.5) / n);
    }
    out
}

/// Nearest correlation matrix with eigenvalues at least [`EIGEN_FLOOR`] and unit diagonal.
pub fn repair_correlation(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let clipped = eig.eigenvalues.map(|v| v.max(EIGEN_FLOOR));
    let rebuilt = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    let d: DVector<f64> = rebuilt.diagonal().map(|v| 1.0 / v.sqrt());
    let mut out = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| rebuilt[(i, j)] * d[i] * d[j]);
    for i in 0..m.nrows() {
        out[(i, i)] = 1.0;
    }
    out
}

/// Gaussian copula over rank normal scores with empirical marginals.
pub fn fit_copula(table: &DataTable, seed_value: u64) -> Result<CopulaModel> {
    let p = table.n_columns();
    let mut marginals = Vec::with_capacity(p);
    for c in 0..p {
        let col = table.column(c);
        let spec = table.spec(c);
        if col.n_missing() == col.len() {
            return Err(AuditError::EmptyColumn(spec.name.clone()));
        }
        marginals.push(if spec.is_continuous() {
            Marginal::Continuous(stats::sorted(&col.observed_reals()))
        } else {
            let freqs = crate::fidelity::marginal::frequencies(&col.observed_codes(), spec.n_categories());
            let mut acc = 0.0;
            let mut cum: Vec<f64> = freqs.iter().map(|f| {
                acc += f;
                acc
            }).collect();
            if let Some(last) = cum.last_mut() {
                *last = 1.0;
            }
            Marginal::Coded(cum)
        });
    }
    let scores: Vec<Vec<f64>> = par::map(table.columns(), normal_scores);
    let mut corr = DMatrix::identity(p, p);
    for i in 0..p {
        for j in i + 1..p {
            let (a, b): (Vec<f64>, Vec<f64>) = scores[i]
                .iter()
                .zip(&scores[j])
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|(x, y)| (*x, *y))
                .unzip();
            let r = stats::pearson(&a, &b).unwrap_or(0.0);
            corr[(i, j)] = r;
            corr[(j, i)] = r;
        }
    }
    let correlation = repair_correlation(&corr);
    let cholesky = correlation
        .clone()
        .cholesky()
        .ok_or_else(|| AuditError::Numerical("latent correlation is not positive definite".into()))?
        .l();
    Ok(CopulaModel {
        schema: table.schema_arc().clone(),
        marginals,
        correlation,
        missing_rates: table.columns().iter().map(|c| c.n_missing() as f64 / c.len().max(1) as f64).collect(),
        seed: seed_value,
        cholesky,
    })
}

/// Draws `n` rows. Rows are generated in fixed-size chunks, each from its own seed stream, so
/// the output does not depend on the number of threads.
pub fn sample_copula(model: &CopulaModel, n: usize, with_missingness: bool) -> Result<DataTable> {
    let p = model.marginals.len();
    let n_chunks = n.div_ceil(CHUNK);
    let chunks = par::map_range(n_chunks, |c| {
        let mut rng = seed::rng(seed::derive_indexed(model.seed, "copula-chunk", c as u64));
        let rows = CHUNK.min(n - c * CHUNK);
        let mut cells: Vec<Vec<Option<f64>>> = vec![Vec::with_capacity(rows); p];
        let mut eps = DVector::<f64>::zeros(p);
        for _ in 0..rows {
            eps.iter_mut().for_each(|e| *e = rng.sample(StandardNormal));
            let z = &model.cholesky * &eps;
            for j in 0..p {
                let v = model.marginals[j].quantile(stats::normal_cdf(z[j]));
                let masked = with_missingness && model.missing_rates[j] > 0.0 && rng.random::<f64>() < model.missing_rates[j];
                cells[j].push((!masked).then_some(v));
            }
        }
        cells
    });
    let columns = (0..p)
        .map(|j| {
            let values = chunks.iter().flat_map(|ch| ch[j].iter().copied());
            match model.marginals[j] {
                Marginal::Continuous(_) => Column::real_opt(values),
                Marginal::Coded(_) => Column::codes_opt(values.map(|v| v.map(|x| x as u32))),
            }
        })
        .collect();
    DataTable::new(model.schema.clone(), columns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ColumnRole, ColumnSpec};
    use crate::fidelity::dimwise_continuous;

    fn schema() -> Arc<DatasetSchema> {
        Arc::new(
            DatasetSchema::new(
                vec![
                    ColumnSpec::continuous("a"),
                    ColumnSpec::continuous("b"),
                    ColumnSpec::categorical("type", ["x", "y", "z"]),
                    ColumnSpec::continuous("Days").with_role(ColumnRole::Time),
                    ColumnSpec::binary("dead").with_role(ColumnRole::Event),
                ],
                vec![],
            )
            .unwrap(),
        )
    }

    fn independent(n: usize, s: u64) -> DataTable {
        let mut rng = seed::rng(s);
        let a: Vec<Option<f64>> = (0..n).map(|i| (i % 10 != 0).then(|| rng.sample(StandardNormal))).collect();
        DataTable::new(
            schema(),
            vec![
                Column::real_opt(a),
                Column::real((0..n).map(|_| rng.random::<f64>() * 5.0).collect()),
                Column::codes((0..n).map(|_| rng.random_range(0..3)).collect()),
                Column::real((0..n).map(|_| rng.random_range(1.0..100.0)).collect()),
                Column::codes((0..n).map(|_| u32::from(rng.random_bool(0.3))).collect()),
            ],
        )
        .unwrap()
    }

    #[test]
    fn independent_columns_have_small_latent_correlation() {
        let n = 2000;
        let m = fit_copula(&independent(n, 1), 1).unwrap();
        let bound = 3.0 / (n as f64).sqrt();
        for i in 0..5 {
            for j in 0..5 {
                if i != j {
                    assert!(m.correlation[(i, j)].abs() < bound, "{i},{j}: {}", m.correlation[(i, j)]);
                }
            }
        }
    }

    #[test]
    fn monotone_pair_is_fully_correlated() {
        let t = independent(500, 2);
        let a: Vec<f64> = t.column(1).observed_reals();
        let t = t.with_column(3, Column::real(a.iter().map(|v| v.exp() + 1.0).collect())).unwrap();
        let m = fit_copula(&t, 1).unwrap();
        assert!(m.correlation[(1, 3)] > 0.999);
    }

    #[test]
    fn samples_follow_marginals_and_missing_rates() {
        let t = independent(3000, 3);
        let m = fit_copula(&t, 9).unwrap();
        let s = sample_copula(&m, 10_000, true).unwrap();
        assert_eq!(s.n_rows(), 10_000);
        assert!(dimwise_continuous(t.column(1), s.column(1)).unwrap() >= 0.97);
        let rate = s.column(0).n_missing() as f64 / 10_000.0;
        assert!((rate - 0.1).abs() < 0.02, "{rate}");
        assert!(!s.column(1).has_missing());
        let again = sample_copula(&m, 10_000, true).unwrap();
        assert_eq!(crate::ingest::table_to_string(&again), crate::ingest::table_to_string(&s));
        assert_eq!(sample_copula(&m, 0, false).unwrap().n_rows(), 0);
    }

    #[test]
    fn repair_gives_unit_diagonal_pd() {
        let bad = DMatrix::from_row_slice(3, 3, &[1.0, 0.9, -0.9, 0.9, 1.0, 0.9, -0.9, 0.9, 1.0]);
        let r = repair_correlation(&bad);
        assert!(r.clone().cholesky().is_some());
        assert!((0..3).all(|i| r[(i, i)] == 1.0));
    }
}
