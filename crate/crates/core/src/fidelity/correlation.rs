use serde::{Deserialize, Serialize};

use crate::data::{Column, DataTable};
use crate::error::Result;
use crate::par;
use crate::stats::pearson;

/// `1 - |S - R| / 2`.
pub fn correlation_similarity(real_r: f64, synth_r: f64) -> f64 {
    1.0 - (synth_r - real_r).abs() / 2.0
}

fn complete_pairs(a: &Column, b: &Column) -> (Vec<f64>, Vec<f64>) {
    (0..a.len())
        .filter_map(|r| Some((a.get(r)?, b.get(r)?)))
        .unzip()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKind {
    Continuous,
    Categorical,
}

/// Similarity of Pearson correlations over pairwise-complete rows; `None` when either side
/// has fewer than two complete rows or a constant column.
pub fn corr_score_continuous(real: (&Column, &Column), synth: (&Column, &Column)) -> Option<f64> {
    let (rx, ry) = complete_pairs(real.0, real.1);
    let (sx, sy) = complete_pairs(synth.0, synth.1);
    Some(correlation_similarity(pearson(&rx, &ry)?, pearson(&sx, &sy)?))
}

fn joint(a: &Column, b: &Column, ka: usize, kb: usize) -> Option<Vec<f64>> {
    let mut f = vec![0.0; ka * kb];
    let mut n = 0.0;
    for r in 0..a.len() {
        if let (Some(x), Some(y)) = (a.code(r), b.code(r)) {
            if (x as usize) < ka && (y as usize) < kb {
                f[x as usize * kb + y as usize] += 1.0;
                n += 1.0;
            }
        }
    }
    if n == 0.0 {
        return None;
    }
    f.iter_mut().for_each(|v| *v /= n);
    Some(f)
}

/// `1 - ½ Σ |S_xy - R_xy|` over normalised joint frequency tables.
pub fn corr_score_categorical(real: (&Column, &Column), synth: (&Column, &Column), ka: usize, kb: usize) -> Option<f64> {
    let r = joint(real.0, real.1, ka, kb)?;
    let s = joint(synth.0, synth.1, ka, kb)?;
    Some(1.0 - 0.5 * r.iter().zip(&s).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub a: String,
    pub b: String,
    pub kind: PairKind,
    pub score: Option<f64>,
}

/// Scores for every same-kind column pair; mixed continuous/coded pairs are not scored.
pub fn correlation_scores(real: &DataTable, synth: &DataTable) -> Result<Vec<PairScore>> {
    real.schema().ensure_compatible(synth.schema())?;
    let cols: Vec<usize> = (0..real.n_columns()).filter(|&c| !real.spec(c).is_missing_indicator()).collect();
    let mut pairs = Vec::new();
    for (k, &i) in cols.iter().enumerate() {
        for &j in &cols[k + 1..] {
            if real.spec(i).is_continuous() == real.spec(j).is_continuous() {
                pairs.push((i, j));
            }
        }
    }
    Ok(par::map(&pairs, |&(i, j)| {
        let (si, sj) = (real.spec(i), real.spec(j));
        let rc = (real.column(i), real.column(j));
        let sc = (synth.column(i), synth.column(j));
        let (kind, score) = if si.is_continuous() {
            (PairKind::Continuous, corr_score_continuous(rc, sc))
        } else {
            (
                PairKind::Categorical,
                corr_score_categorical(rc, sc, si.n_categories(), sj.n_categories()),
            )
        };
        PairScore {
            a: si.name.clone(),
            b: sj.name.clone(),
            kind,
            score,
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula_points() {
        assert_eq!(correlation_similarity(0.4, 0.4), 1.0);
        assert_eq!(correlation_similarity(-1.0, 1.0), 0.0);
        assert!((correlation_similarity(0.3, 0.5) - 0.9).abs() < 1e-15);
    }

    #[test]
    fn categorical_joint_examples() {
        let ra = Column::codes(vec![0, 1, 0, 1]);
        let rb = Column::codes(vec![0, 1, 0, 1]);
        let sa = Column::codes(vec![0, 0, 1, 1]);
        let sb = Column::codes(vec![0, 1, 0, 1]);
        assert_eq!(corr_score_categorical((&ra, &rb), (&sa, &sb), 2, 2), Some(0.5));
        assert_eq!(corr_score_categorical((&ra, &rb), (&ra, &rb), 2, 2), Some(1.0));
        let da = Column::codes(vec![1, 1]);
        let db = Column::codes(vec![0, 0]);
        assert_eq!(corr_score_categorical((&ra, &rb), (&da, &db), 2, 2), Some(0.0));
    }

    #[test]
    fn constant_column_is_skipped() {
        let a = Column::real(vec![1.0, 2.0, 3.0]);
        let c = Column::real(vec![1.0, 1.0, 1.0]);
        assert_eq!(corr_score_continuous((&a, &c), (&a, &a)), None);
        assert_eq!(corr_score_continuous((&a, &a), (&a, &a)), Some(1.0));
    }
}
