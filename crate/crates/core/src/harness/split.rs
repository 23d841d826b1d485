use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::DataTable;
use crate::error::{AuditError, Result};
use crate::seed;

pub const MIN_SPLIT_ROWS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions {
            train: 0.7,
            valid: 0.1,
            test: 0.2,
        }
    }
}

/// Row indices (ascending) of the train, validation and test parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub seed: u64,
    pub fractions: SplitFractions,
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitPlan {
    /// Train and validation rows together: the generator's training data.
    pub fn train_valid(&self) -> Vec<usize> {
        let mut rows: Vec<usize> = self.train.iter().chain(&self.valid).copied().collect();
        rows.sort_unstable();
        rows
    }

    pub fn n_rows(&self) -> usize {
        self.train.len() + self.valid.len() + self.test.len()
    }
}

/// Splits `n` into parts proportional to `weights`, giving leftover units to the largest
/// remainders (earlier parts first on ties).
fn largest_remainder(n: usize, weights: [f64; 3]) -> [usize; 3] {
    let exact = weights.map(|w| w * n as f64);
    let mut counts = exact.map(|e| e.floor() as usize);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())));
    let assigned: usize = counts.iter().sum();
    for &k in order.iter().cycle().take(n.saturating_sub(assigned)) {
        counts[k] += 1;
    }
    counts
}

/// Shuffles each event stratum and allocates it proportionally to the three parts.
pub fn stratified_split(table: &DataTable, seed_value: u64) -> Result<SplitPlan> {
    stratified_split_with(table, seed_value, SplitFractions::default())
}

pub fn stratified_split_with(table: &DataTable, seed_value: u64, fractions: SplitFractions) -> Result<SplitPlan> {
    let n = table.n_rows();
    if n < MIN_SPLIT_ROWS {
        return Err(AuditError::InsufficientData(format!(
            "a split needs at least {MIN_SPLIT_ROWS} rows, got {n}"
        )));
    }
    let weights = [fractions.train, fractions.valid, fractions.test];
    if weights.iter().any(|w| !(*w >= 0.0)) || ((weights.iter().sum::<f64>()) - 1.0).abs() > 1e-9 {
        return Err(AuditError::Config("split fractions must be non-negative and sum to 1".into()));
    }
    let events = table.column(table.schema().event_index());
    if events.has_missing() {
        return Err(AuditError::InsufficientData("event indicator has missing values".into()));
    }
    let mut strata: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for r in 0..n {
        strata[usize::from(events.code(r) == Some(1))].push(r);
    }
    let mut rng = seed::rng(seed::derive(seed_value, "split"));
    let mut parts: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for stratum in &mut strata {
        stratum.shuffle(&mut rng);
        let counts = largest_remainder(stratum.len(), weights);
        let mut start = 0;
        for (part, &c) in parts.iter_mut().zip(&counts) {
            part.extend_from_slice(&stratum[start..start + c]);
            start += c;
        }
    }
    for part in &mut parts {
        part.sort_unstable();
    }
    let [train, valid, test] = parts;
    Ok(SplitPlan {
        seed: seed_value,
        fractions,
        train,
        valid,
        test,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use proptest::prelude::*;

    use super::*;
    use crate::data::{Column, ColumnRole, ColumnSpec, DatasetSchema};

    fn table(events: &[u32]) -> DataTable {
        let schema = DatasetSchema::new(
            vec![
                ColumnSpec::continuous("Days").with_role(ColumnRole::Time),
                ColumnSpec::binary("dead").with_role(ColumnRole::Event),
            ],
            vec![],
        )
        .unwrap();
        DataTable::new(
            Arc::new(schema),
            vec![Column::real((1..=events.len()).map(|v| v as f64).collect()), Column::codes(events.to_vec())],
        )
        .unwrap()
    }

    #[test]
    fn hundred_rows_thirty_six_events() {
        let ev: Vec<u32> = (0..100).map(|i| u32::from(i < 36)).collect();
        let t = table(&ev);
        let p = stratified_split(&t, 3).unwrap();
        assert_eq!((p.train.len(), p.valid.len(), p.test.len()), (70, 10, 20));
        let events_in = |rows: &[usize]| rows.iter().filter(|&&r| ev[r] == 1).count();
        assert!((7..=8).contains(&events_in(&p.test)));
        assert_eq!(stratified_split(&t, 3).unwrap(), p);
        assert_ne!(stratified_split(&t, 4).unwrap(), p);
    }

    #[test]
    fn too_small() {
        assert!(stratified_split(&table(&[1; 9]), 1).is_err());
        assert!(stratified_split(&table(&[1; 10]), 1).is_ok());
    }

    proptest! {
        #[test]
        fn parts_partition_rows(events in prop::collection::vec(0u32..2, 10..300), s in any::<u64>()) {
            let p = stratified_split(&table(&events), s).unwrap();
            let mut all: Vec<usize> = p.train.iter().chain(&p.valid).chain(&p.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..events.len()).collect::<Vec<_>>());
            let n_ev = events.iter().filter(|&&e| e == 1).count() as f64;
            for (part, f) in [(&p.train, 0.7), (&p.valid, 0.1), (&p.test, 0.2)] {
                let k = part.iter().filter(|&&r| events[r] == 1).count() as f64;
                prop_assert!((k - n_ev * f).abs() < 1.0 + 1e-9);
                prop_assert!((part.len() as f64 - events.len() as f64 * f).abs() < 2.0);
            }
        }
    }
}
