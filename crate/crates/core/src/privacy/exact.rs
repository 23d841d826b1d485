use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::data::DataTable;
use crate::error::Result;

/// Relative tolerance for numeric cells.
pub const EXACT_MATCH_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactMatch {
    pub rate: f64,
    pub n_matched: usize,
    pub n_synthetic: usize,
    /// `(synthetic row, first matching real row)`.
    pub pairs: Vec<(usize, usize)>,
}

pub(crate) fn numeric_match(vs: Option<f64>, vr: Option<f64>) -> bool {
    match (vs, vr) {
        (None, None) => true,
        (Some(s), Some(r)) => {
            if r == 0.0 {
                s == 0.0
            } else {
                (s - r).abs() <= EXACT_MATCH_TOLERANCE * r.abs() * (1.0 + 1e-9)
            }
        }
        _ => false,
    }
}

/// Share of synthetic rows that duplicate some real row: coded cells equal, numeric cells
/// within 5% of the real value, missing only matching missing.
pub fn exact_match(real: &DataTable, synth: &DataTable) -> Result<ExactMatch> {
    real.schema().ensure_compatible(synth.schema())?;
    let cols: Vec<usize> = (0..real.n_columns()).filter(|&c| !real.spec(c).is_missing_indicator()).collect();
    let (coded, numeric): (Vec<usize>, Vec<usize>) = cols.into_iter().partition(|&c| !real.spec(c).is_continuous());
    let key = |t: &DataTable, r: usize| -> Vec<Option<u32>> { coded.iter().map(|&c| t.column(c).code(r)).collect() };
    let mut buckets: HashMap<Vec<Option<u32>>, Vec<usize>> = HashMap::new();
    for r in 0..real.n_rows() {
        buckets.entry(key(real, r)).or_default().push(r);
    }
    let mut pairs = Vec::new();
    for s in 0..synth.n_rows() {
        if let Some(candidates) = buckets.get(&key(synth, s)) {
            if let Some(&r) = candidates
                .iter()
                .find(|&&r| numeric.iter().all(|&c| numeric_match(synth.value(s, c), real.value(r, c))))
            {
                pairs.push((s, r));
            }
        }
    }
    let n = synth.n_rows();
    Ok(ExactMatch {
        rate: if n == 0 { 0.0 } else { pairs.len() as f64 / n as f64 },
        n_matched: pairs.len(),
        n_synthetic: n,
        pairs,
    })
}
