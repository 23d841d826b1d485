use std::ops::Range;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{DataTable, Encoder};
use crate::error::{AuditError, Result};
use crate::par;
use crate::privacy::exact::numeric_match;
use crate::privacy::neighbors::{distance_space, encode_points, squared_distance, PointSet};
use crate::regress::{fit_least_squares, Classifier};
use crate::seed;

/// Neighbours used by the nonlinear attacker.
pub const KNN_K: usize = 5;
const RIDGE_LAMBDA: f64 = 1.0;
const LOGISTIC_LAMBDA: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AiaTarget {
    pub column: String,
    pub continuous: bool,
    /// Linear attacker trained on synthetic data, accuracy on real training records.
    pub linear: f64,
    /// k-NN attacker trained on synthetic data, accuracy on real training records.
    pub knn: f64,
    /// Linear attacker trained on real training data, accuracy on real test records.
    pub baseline_linear: f64,
    pub baseline_knn: f64,
    /// Target constant in the synthetic data, so any attacker is trivial.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AiaResult {
    pub linear_score: f64,
    pub knn_score: f64,
    pub baseline_linear: f64,
    pub baseline_knn: f64,
    pub targets: Vec<AiaTarget>,
}

#[derive(Debug, Clone)]
struct TargetInfo {
    column: usize,
    block: Range<usize>,
    continuous: bool,
}

fn targets(table: &DataTable, encoder: &Encoder) -> Vec<TargetInfo> {
    let schema = table.schema();
    schema
        .feature_indices()
        .into_iter()
        .filter(|&c| {
            let spec = schema.column(c);
            !spec.is_missing_indicator() && !schema.is_quasi_identifier(&spec.name)
        })
        .map(|c| {
            let cols = encoder.columns();
            let start = cols.iter().position(|e| e.source == c).unwrap_or(0);
            let end = cols.iter().rposition(|e| e.source == c).map_or(start, |p| p + 1);
            TargetInfo {
                column: c,
                block: start..end,
                continuous: schema.column(c).is_continuous(),
            }
        })
        .collect()
}

fn values(table: &DataTable, col: usize, rows: &[usize]) -> Vec<f64> {
    rows.iter().map(|&r| table.value(r, col).unwrap_or(f64::NAN)).collect()
}

fn correct(continuous: bool, pred: f64, truth: f64) -> bool {
    if continuous {
        numeric_match(Some(pred), Some(truth))
    } else {
        pred == truth
    }
}

fn knn_predict(neigh: &[(f64, usize)], y: &[f64], continuous: bool) -> f64 {
    let exact: Vec<usize> = neigh.iter().filter(|n| n.0 == 0.0).map(|n| n.1).collect();
    let weighted: Vec<(f64, f64)> = if exact.is_empty() {
        neigh.iter().map(|&(d2, j)| (1.0 / d2.sqrt(), y[j])).collect()
    } else {
        exact.iter().map(|&j| (1.0, y[j])).collect()
    };
    if continuous {
        let wsum: f64 = weighted.iter().map(|w| w.0).sum();
        weighted.iter().map(|(w, v)| w * v).sum::<f64>() / wsum
    } else {
        let mut votes: Vec<(f64, f64)> = Vec::new();
        for (w, v) in weighted {
            match votes.iter_mut().find(|e| e.0 == v) {
                Some(e) => e.1 += w,
                None => votes.push((v, w)),
            }
        }
        votes.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.total_cmp(&b.0)));
        votes[0].0
    }
}

/// Per-target `(linear correct, knn correct)` counts for attackers trained on `a` and
/// evaluated on `b`.
fn attack(
    a: &PointSet,
    a_vals: &[Vec<f64>],
    b: &PointSet,
    b_vals: &[Vec<f64>],
    infos: &[TargetInfo],
) -> Vec<(usize, usize)> {
    let dim = a.dim;
    let full_a = DMatrix::from_row_slice(a.len(), dim, &a.data);
    let linear: Vec<usize> = par::map(&(0..infos.len()).collect::<Vec<_>>(), |&t| {
        let info = &infos[t];
        let keep: Vec<usize> = (0..dim).filter(|c| !info.block.contains(c)).collect();
        let x = full_a.select_columns(&keep);
        let mut row = vec![0.0; keep.len()];
        let mut hits = 0;
        if info.continuous {
            let m = fit_least_squares(&x, &a_vals[t], RIDGE_LAMBDA);
            for i in 0..b.len() {
                keep.iter().zip(row.iter_mut()).for_each(|(&c, r)| *r = b.row(i)[c]);
                hits += usize::from(correct(true, m.predict_row(&row), b_vals[t][i]));
            }
        } else {
            let y: Vec<u32> = a_vals[t].iter().map(|&v| v as u32).collect();
            let m = Classifier::fit(&x, &y, LOGISTIC_LAMBDA);
            for i in 0..b.len() {
                keep.iter().zip(row.iter_mut()).for_each(|(&c, r)| *r = b.row(i)[c]);
                hits += usize::from(f64::from(m.predict_row(&row)) == b_vals[t][i]);
            }
        }
        hits
    });
    let per_query: Vec<Vec<bool>> = par::map_range(b.len(), |i| {
        let q = b.row(i);
        let full: Vec<f64> = (0..a.len()).map(|j| squared_distance(q, a.row(j))).collect();
        infos
            .iter()
            .enumerate()
            .map(|(t, info)| {
                let mut cand: Vec<(f64, usize)> = (0..a.len())
                    .map(|j| {
                        let r = a.row(j);
                        let own: f64 = info.block.clone().map(|c| (q[c] - r[c]) * (q[c] - r[c])).sum();
                        ((full[j] - own).max(0.0), j)
                    })
                    .collect();
                let k = KNN_K.min(cand.len());
                let cmp = |x: &(f64, usize), y: &(f64, usize)| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1));
                if k < cand.len() {
                    cand.select_nth_unstable_by(k - 1, cmp);
                }
                cand.truncate(k);
                correct(info.continuous, knn_predict(&cand, &a_vals[t], info.continuous), b_vals[t][i])
            })
            .collect()
    });
    (0..infos.len())
        .map(|t| (linear[t], per_query.iter().filter(|hits| hits[t]).count()))
        .collect()
}

fn folds_of(n: usize, k: usize, seed_value: u64) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seed::rng(seed_value));
    let mut out = vec![Vec::new(); k];
    for (i, v) in idx.into_iter().enumerate() {
        out[i % k].push(v);
    }
    out.iter_mut().for_each(|f| f.sort_unstable());
    out
}

fn complement(n: usize, fold: &[usize]) -> Vec<usize> {
    let mut mark = vec![false; n];
    fold.iter().for_each(|&i| mark[i] = true);
    (0..n).filter(|&i| !mark[i]).collect()
}

/// Attribute inference with every non-quasi-identifier feature as the sensitive target and all
/// other columns as attacker inputs.
pub fn aia_scores(train: &DataTable, test: &DataTable, synth: &DataTable, folds: usize, seed_value: u64) -> Result<AiaResult> {
    if folds < 2 {
        return Err(AuditError::Config("attribute inference needs at least two folds".into()));
    }
    if synth.n_rows() < folds || train.n_rows() < folds || test.n_rows() == 0 {
        return Err(AuditError::InsufficientData("too few rows for attribute-inference folds".into()));
    }
    train.schema().ensure_compatible(test.schema())?;
    train.schema().ensure_compatible(synth.schema())?;
    let (encoder, _) = distance_space(&[train, synth])?;
    let infos = targets(train, &encoder);
    if infos.is_empty() {
        return Err(AuditError::InsufficientData("no sensitive target columns".into()));
    }
    let (s_pts, t_pts, e_pts) = (
        encode_points(&encoder, synth)?,
        encode_points(&encoder, train)?,
        encode_points(&encoder, test)?,
    );
    let synth_folds = folds_of(synth.n_rows(), folds, seed::derive(seed_value, "aia-synth"));
    let train_folds = folds_of(train.n_rows(), folds, seed::derive(seed_value, "aia-real"));
    let test_rows: Vec<usize> = (0..test.n_rows()).collect();
    let cols_vals = |table: &DataTable, rows: &[usize]| -> Vec<Vec<f64>> {
        infos.iter().map(|i| values(table, i.column, rows)).collect()
    };
    let test_vals = cols_vals(test, &test_rows);

    let nt = infos.len();
    let mut hits = vec![(0usize, 0usize); nt];
    let mut evaluated = 0usize;
    let mut base = vec![(0.0, 0.0); nt];
    for k in 0..folds {
        let fit_rows = complement(synth.n_rows(), &synth_folds[k]);
        let eval_rows = &train_folds[k];
        let res = attack(
            &s_pts.select(&fit_rows),
            &cols_vals(synth, &fit_rows),
            &t_pts.select(eval_rows),
            &cols_vals(train, eval_rows),
            &infos,
        );
        for (h, r) in hits.iter_mut().zip(res) {
            h.0 += r.0;
            h.1 += r.1;
        }
        evaluated += eval_rows.len();

        let real_fit = complement(train.n_rows(), &train_folds[k]);
        let res = attack(&t_pts.select(&real_fit), &cols_vals(train, &real_fit), &e_pts, &test_vals, &infos);
        let m = test.n_rows() as f64;
        for (b, r) in base.iter_mut().zip(res) {
            b.0 += r.0 as f64 / m / folds as f64;
            b.1 += r.1 as f64 / m / folds as f64;
        }
    }
    let targets: Vec<AiaTarget> = infos
        .iter()
        .enumerate()
        .map(|(t, info)| {
            let observed = synth.column(info.column).observed_reals();
            AiaTarget {
                column: synth.spec(info.column).name.clone(),
                continuous: info.continuous,
                linear: hits[t].0 as f64 / evaluated as f64,
                knn: hits[t].1 as f64 / evaluated as f64,
                baseline_linear: base[t].0,
                baseline_knn: base[t].1,
                degenerate: observed.windows(2).all(|w| w[0] == w[1]),
            }
        })
        .collect();
    let mean = |f: fn(&AiaTarget) -> f64| targets.iter().map(f).sum::<f64>() / nt as f64;
    Ok(AiaResult {
        linear_score: mean(|t| t.linear),
        knn_score: mean(|t| t.knn),
        baseline_linear: mean(|t| t.baseline_linear),
        baseline_knn: mean(|t| t.baseline_knn),
        targets,
    })
}
