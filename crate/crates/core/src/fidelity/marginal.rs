use serde::{Deserialize, Serialize};

use crate::data::{Column, DataTable};
use crate::error::{AuditError, Result};
use crate::par;

/// Two-sample Kolmogorov-Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() || j < b.len() {
        let v = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => break,
        };
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// `1 - KS` over observed cells.
pub fn dimwise_continuous(real: &Column, synth: &Column) -> Result<f64> {
    let (r, s) = (real.observed_reals(), synth.observed_reals());
    if r.is_empty() || s.is_empty() {
        return Err(AuditError::InsufficientData("no observed values for the KS comparison".into()));
    }
    Ok(1.0 - ks_statistic(&r, &s))
}

/// Category frequencies over observed cells.
pub fn frequencies(codes: &[u32], n_categories: usize) -> Vec<f64> {
    let mut f = vec![0.0; n_categories];
    for &c in codes {
        if (c as usize) < n_categories {
            f[c as usize] += 1.0;
        }
    }
    let n = codes.len() as f64;
    f.iter_mut().for_each(|v| *v /= n);
    f
}

/// `1 - mean_c |freq_real(c) - freq_synth(c)|` over the schema's categories.
pub fn dimwise_categorical(real: &Column, synth: &Column, n_categories: usize) -> Result<f64> {
    let (r, s) = (real.observed_codes(), synth.observed_codes());
    if r.is_empty() || s.is_empty() || n_categories == 0 {
        return Err(AuditError::InsufficientData("no observed values for the frequency comparison".into()));
    }
    let (fr, fs) = (frequencies(&r, n_categories), frequencies(&s, n_categories));
    let mad = fr.iter().zip(&fs).map(|(a, b)| (a - b).abs()).sum::<f64>() / n_categories as f64;
    Ok(1.0 - mad)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnScore {
    pub column: String,
    pub continuous: bool,
    pub score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Dimension-wise score for every non-indicator column of two schema-compatible tables.
pub fn dimwise_scores(real: &DataTable, synth: &DataTable) -> Result<Vec<ColumnScore>> {
    real.schema().ensure_compatible(synth.schema())?;
    let cols: Vec<usize> = (0..real.n_columns()).filter(|&c| !real.spec(c).is_missing_indicator()).collect();
    Ok(par::map(&cols, |&c| {
        let spec = real.spec(c);
        let res = if spec.is_continuous() {
            dimwise_continuous(real.column(c), synth.column(c))
        } else {
            dimwise_categorical(real.column(c), synth.column(c), spec.n_categories())
        };
        ColumnScore {
            column: spec.name.clone(),
            continuous: spec.is_continuous(),
            score: res.as_ref().ok().copied(),
            note: res.err().map(|e| e.to_string()),
        }
    }))
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn brute(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .chain(b)
            .map(|&x| {
                let fa = a.iter().filter(|&&v| v <= x).count() as f64 / a.len() as f64;
                let fb = b.iter().filter(|&&v| v <= x).count() as f64 / b.len() as f64;
                (fa - fb).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn ks_examples() {
        assert_eq!(ks_statistic(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 10.0]), 0.25);
        assert_eq!(ks_statistic(&[1.0, 2.0], &[5.0, 6.0]), 1.0);
        assert_eq!(ks_statistic(&[1.0, 2.0], &[2.0, 1.0]), 0.0);
    }

    #[test]
    fn categorical_examples() {
        let r = Column::codes(vec![0, 1, 0, 1]);
        let s = Column::codes(vec![1, 1, 1, 1]);
        assert_eq!(dimwise_categorical(&r, &s, 2).unwrap(), 0.5);
        assert_eq!(dimwise_categorical(&r, &r, 2).unwrap(), 1.0);
        let masked = Column::codes_opt(vec![None, None]);
        assert!(dimwise_categorical(&masked, &r, 2).is_err());
    }

    #[test]
    fn matching_prevalence_scores_one() {
        let real: Vec<u32> = (0..100).map(|i| u32::from(i < 36)).collect();
        let synth: Vec<u32> = (0..50).map(|i| u32::from(i % 50 < 18)).collect();
        let s = dimwise_categorical(&Column::codes(real), &Column::codes(synth), 2).unwrap();
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn masked_cells_are_ignored() {
        let r = Column::real_opt(vec![Some(1.0), None, Some(2.0)]);
        let s = Column::real(vec![1.0, 2.0]);
        assert_eq!(dimwise_continuous(&r, &s).unwrap(), 1.0);
    }

    proptest! {
        #[test]
        fn ks_matches_brute_force(
            a in prop::collection::vec(-20i32..20, 1..80),
            b in prop::collection::vec(-20i32..20, 1..80),
        ) {
            let a: Vec<f64> = a.into_iter().map(|v| f64::from(v) / 2.0).collect();
            let b: Vec<f64> = b.into_iter().map(|v| f64::from(v) / 2.0).collect();
            prop_assert!((ks_statistic(&a, &b) - brute(&a, &b)).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&ks_statistic(&a, &b)));
        }
    }
}
