use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::data::DataTable;
use crate::error::{AuditError, Result};
use crate::privacy::neighbors::{distance_space, encode_points, nearest_distances, PointSet};
use crate::seed::{self, AuditRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NnaaResult {
    /// NNAA(train, synthetic).
    pub nnaa_ts: f64,
    /// NNAA(test, synthetic).
    pub nnaa_es: f64,
    /// `nnaa_es - nnaa_ts`.
    pub privacy_loss: f64,
}

fn nnaa_once(p: &PointSet, q: &PointSet) -> f64 {
    let pq = nearest_distances(p, q, false);
    let pp = nearest_distances(p, p, true);
    let qp = nearest_distances(q, p, false);
    let qq = nearest_distances(q, q, true);
    let frac = |cross: &[f64], within: &[f64]| {
        cross.iter().zip(within).filter(|(c, w)| c > w).count() as f64 / cross.len() as f64
    };
    0.5 * (frac(&pq, &pp) + frac(&qp, &qq))
}

/// Nearest-neighbour adversarial accuracy between two point sets. When their sizes differ the
/// larger is subsampled (without replacement) to the smaller in each of `iterations` rounds.
pub fn nnaa_points(p: &PointSet, q: &PointSet, iterations: usize, rng: &mut AuditRng) -> Result<f64> {
    if p.len() < 2 || q.len() < 2 {
        return Err(AuditError::InsufficientData("NNAA needs at least two rows per set".into()));
    }
    if p.len() == q.len() {
        return Ok(nnaa_once(p, q));
    }
    let iterations = iterations.max(1);
    let m = p.len().min(q.len());
    let mut total = 0.0;
    for _ in 0..iterations {
        let value = if p.len() > q.len() {
            nnaa_once(&p.select(&sample(rng, p.len(), m).into_vec()), q)
        } else {
            nnaa_once(p, &q.select(&sample(rng, q.len(), m).into_vec()))
        };
        total += value;
    }
    Ok(total / iterations as f64)
}

/// NNAA of train and of test against the synthetic table, in a min-max space fitted on all three.
pub fn nnaa(train: &DataTable, test: &DataTable, synth: &DataTable, iterations: usize, seed_value: u64) -> Result<NnaaResult> {
    train.schema().ensure_compatible(test.schema())?;
    train.schema().ensure_compatible(synth.schema())?;
    let (encoder, _) = distance_space(&[train, test, synth])?;
    let (t, e, s) = (
        encode_points(&encoder, train)?,
        encode_points(&encoder, test)?,
        encode_points(&encoder, synth)?,
    );
    let nnaa_ts = nnaa_points(&t, &s, iterations, &mut seed::rng(seed::derive(seed_value, "nnaa-train")))?;
    let nnaa_es = nnaa_points(&e, &s, iterations, &mut seed::rng(seed::derive(seed_value, "nnaa-test")))?;
    Ok(NnaaResult {
        nnaa_ts,
        nnaa_es,
        privacy_loss: nnaa_es - nnaa_ts,
    })
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::*;

    fn cloud(n: usize, offset: f64, s: u64) -> PointSet {
        let mut rng = seed::rng(s);
        PointSet::from_rows(&(0..n).map(|_| vec![offset + rng.random::<f64>(), offset + rng.random::<f64>()]).collect::<Vec<_>>())
    }

    #[test]
    fn copy_gives_zero_and_clusters_give_one() {
        let p = cloud(50, 0.0, 1);
        let mut rng = seed::rng(0);
        assert_eq!(nnaa_points(&p, &p.clone(), 30, &mut rng).unwrap(), 0.0);
        let q = cloud(50, 100.0, 2);
        assert_eq!(nnaa_points(&p, &q, 30, &mut rng).unwrap(), 1.0);
        let q_big = cloud(80, 100.0, 3);
        assert_eq!(nnaa_points(&p, &q_big, 30, &mut rng).unwrap(), 1.0);
    }

    #[test]
    fn symmetric_for_equal_sizes() {
        let p = cloud(40, 0.0, 4);
        let q = cloud(40, 0.3, 5);
        let mut rng = seed::rng(0);
        assert_eq!(nnaa_points(&p, &q, 1, &mut rng).unwrap(), nnaa_points(&q, &p, 1, &mut rng).unwrap());
    }

    #[test]
    fn distance_ties_count_as_not_greater() {
        // every cross distance equals every within distance (1.0)
        let p = PointSet::from_rows(&[vec![0.0], vec![2.0]]);
        let q = PointSet::from_rows(&[vec![1.0], vec![3.0]]);
        let mut rng = seed::rng(0);
        assert_eq!(nnaa_points(&p, &q, 1, &mut rng).unwrap(), 0.0);
        let tiny = PointSet::from_rows(&[vec![0.0]]);
        assert!(nnaa_points(&tiny, &q, 1, &mut rng).is_err());
    }
}
