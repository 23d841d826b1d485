use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};
use crate::stats;
use crate::survival::km::{kaplan_meier, KmCurve};

/// Floor applied to the censoring survival when forming inverse weights.
pub const G_MIN: f64 = 1e-4;

struct CountTree {
    tree: Vec<u64>,
}

impl CountTree {
    fn new(n: usize) -> Self {
        CountTree { tree: vec![0; n + 1] }
    }

    fn add(&mut self, pos: usize) {
        let mut i = pos + 1;
        while i < self.tree.len() {
            self.tree[i] += 1;
            i += i & i.wrapping_neg();
        }
    }

    /// Count at positions `< pos`.
    fn prefix(&self, pos: usize) -> u64 {
        let mut i = pos;
        let mut s = 0;
        while i > 0 {
            s += self.tree[i];
            i -= i & i.wrapping_neg();
        }
        s
    }
}

/// Harrell's concordance index in O(n log n). Pairs with `t_i < t_j` and an event at `t_i` are
/// comparable; higher risk for the earlier failure is concordant, equal risks count one half.
pub fn c_index(times: &[f64], events: &[bool], risks: &[f64]) -> Result<f64> {
    let n = times.len();
    if events.len() != n || risks.len() != n {
        return Err(AuditError::InsufficientData("c_index inputs differ in length".into()));
    }
    if risks.iter().chain(times).any(|v| v.is_nan()) {
        return Err(AuditError::Numerical("NaN time or risk in c_index".into()));
    }
    let mut levels = risks.to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let rank = |r: f64| levels.partition_point(|&v| v < r);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| times[b].total_cmp(&times[a]));
    let mut tree = CountTree::new(levels.len());
    let (mut concordant, mut tied, mut comparable) = (0u64, 0u64, 0u64);
    let mut inserted = 0u64;
    let mut i = 0;
    while i < n {
        let t = times[order[i]];
        let mut j = i;
        while j < n && times[order[j]] == t {
            j += 1;
        }
        for &k in &order[i..j] {
            if events[k] {
                let r = rank(risks[k]);
                let below = tree.prefix(r);
                let upto = tree.prefix(r + 1);
                concordant += below;
                tied += upto - below;
                comparable += inserted;
            }
        }
        for &k in &order[i..j] {
            tree.add(rank(risks[k]));
            inserted += 1;
        }
        i = j;
    }
    if comparable == 0 {
        return Err(AuditError::InsufficientData("no comparable pairs for the concordance index".into()));
    }
    Ok((concordant as f64 + 0.5 * tied as f64) / comparable as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrierResult {
    pub ibs: f64,
    pub grid: Vec<f64>,
    pub brier: Vec<f64>,
    /// True when some weight used the `G_MIN` floor.
    pub weights_capped: bool,
}

/// Evaluation grid: the unique event times strictly inside `[P10, P90]` of the observed times,
/// plus both percentiles.
pub fn ibs_grid(times: &[f64], events: &[bool]) -> Result<Vec<f64>> {
    if times.is_empty() {
        return Err(AuditError::InsufficientData("empty evaluation set".into()));
    }
    let sorted = stats::sorted(times);
    let lo = stats::quantile_sorted(&sorted, 0.1);
    let hi = stats::quantile_sorted(&sorted, 0.9);
    if !(hi > lo) {
        return Err(AuditError::InsufficientData("follow-up percentiles P10 and P90 coincide".into()));
    }
    let mut grid = vec![lo];
    let mut inner: Vec<f64> = times
        .iter()
        .zip(events)
        .filter(|(t, e)| **e && **t > lo && **t < hi)
        .map(|(t, _)| *t)
        .collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    grid.extend(inner);
    grid.push(hi);
    Ok(grid)
}

/// Kaplan-Meier of the censoring distribution (event flags inverted).
pub fn censoring_km(times: &[f64], events: &[bool]) -> Result<KmCurve> {
    let inverted: Vec<bool> = events.iter().map(|e| !e).collect();
    kaplan_meier(times, &inverted)
}

/// Graf's IPCW Brier score at every grid time and its trapezoidal time-average.
pub fn integrated_brier(
    surv: &DMatrix<f64>,
    grid: &[f64],
    times: &[f64],
    events: &[bool],
    censor: &KmCurve,
) -> Result<BrierResult> {
    let n = times.len();
    if surv.nrows() != n || surv.ncols() != grid.len() || events.len() != n {
        return Err(AuditError::InsufficientData("survival matrix does not match evaluation data".into()));
    }
    if grid.len() < 2 || !(grid[grid.len() - 1] > grid[0]) {
        return Err(AuditError::InsufficientData("Brier grid needs a positive span".into()));
    }
    let mut capped = false;
    let mut weight = |g: f64| {
        if g < G_MIN {
            capped = true;
            1.0 / G_MIN
        } else {
            1.0 / g
        }
    };
    let before: Vec<f64> = times.iter().map(|&t| censor.survival_before(t)).collect();
    let mut brier = Vec::with_capacity(grid.len());
    for (k, &t) in grid.iter().enumerate() {
        let g_t = censor.survival_at(t);
        let mut total = 0.0;
        for i in 0..n {
            let s = surv[(i, k)];
            if times[i] <= t && events[i] {
                total += s * s * weight(before[i]);
            } else if times[i] > t {
                total += (1.0 - s) * (1.0 - s) * weight(g_t);
            }
        }
        brier.push(total / n as f64);
    }
    let mut area = 0.0;
    for k in 1..grid.len() {
        area += (grid[k] - grid[k - 1]) * (brier[k] + brier[k - 1]) / 2.0;
    }
    let ibs = area / (grid[grid.len() - 1] - grid[0]);
    Ok(BrierResult {
        ibs,
        grid: grid.to_vec(),
        brier,
        weights_capped: capped,
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn oracle(times: &[f64], events: &[bool], risks: &[f64]) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..times.len() {
            for j in 0..times.len() {
                if times[i] < times[j] && events[i] {
                    den += 1.0;
                    if risks[i] > risks[j] {
                        num += 1.0;
                    } else if risks[i] == risks[j] {
                        num += 0.5;
                    }
                }
            }
        }
        num / den
    }

    #[test]
    fn hand_case() {
        let c = c_index(&[2.0, 4.0, 6.0], &[true, true, false], &[0.9, 0.3, 0.5]).unwrap();
        assert!((c - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn perfect_and_tied() {
        let t = [1.0, 2.0, 3.0, 4.0];
        let e = [true; 4];
        assert_eq!(c_index(&t, &e, &[4.0, 3.0, 2.0, 1.0]).unwrap(), 1.0);
        assert_eq!(c_index(&t, &e, &[1.0; 4]).unwrap(), 0.5);
        assert!(c_index(&t, &[false; 4], &[1.0; 4]).is_err());
    }

    proptest! {
        #[test]
        fn matches_all_pairs(data in prop::collection::vec((1u32..20, any::<bool>(), 0u32..6), 2..60)) {
            let t: Vec<f64> = data.iter().map(|d| f64::from(d.0)).collect();
            let e: Vec<bool> = data.iter().map(|d| d.1).collect();
            let r: Vec<f64> = data.iter().map(|d| f64::from(d.2)).collect();
            let fast = c_index(&t, &e, &r);
            let slow = oracle(&t, &e, &r);
            if slow.is_nan() {
                prop_assert!(fast.is_err());
            } else {
                prop_assert!((fast.unwrap() - slow).abs() < 1e-12);
            }
        }

        #[test]
        fn invariant_under_monotone_transform(data in prop::collection::vec((1u32..20, any::<bool>(), -3.0f64..3.0), 2..40)) {
            let t: Vec<f64> = data.iter().map(|d| f64::from(d.0)).collect();
            let e: Vec<bool> = data.iter().map(|d| d.1).collect();
            let r: Vec<f64> = data.iter().map(|d| d.2).collect();
            let r2: Vec<f64> = r.iter().map(|v| v.exp() * 3.0 + 1.0).collect();
            if let Ok(a) = c_index(&t, &e, &r) {
                prop_assert_eq!(a, c_index(&t, &e, &r2).unwrap());
            }
        }
    }

    #[test]
    fn constant_half_prediction_gives_quarter() {
        let times: Vec<f64> = (1..=20).map(f64::from).collect();
        let events = vec![true; 20];
        let grid = ibs_grid(&times, &events).unwrap();
        let surv = DMatrix::from_element(20, grid.len(), 0.5);
        let g = censoring_km(&times, &events).unwrap();
        let r = integrated_brier(&surv, &grid, &times, &events, &g).unwrap();
        assert!((r.ibs - 0.25).abs() < 1e-12);
        assert!(!r.weights_capped);
    }

    #[test]
    fn oracle_steps_give_zero() {
        let times: Vec<f64> = (1..=20).map(f64::from).collect();
        let events = vec![true; 20];
        let grid = ibs_grid(&times, &events).unwrap();
        let surv = DMatrix::from_fn(20, grid.len(), |i, k| if grid[k] < times[i] { 1.0 } else { 0.0 });
        let g = censoring_km(&times, &events).unwrap();
        assert_eq!(integrated_brier(&surv, &grid, &times, &events, &g).unwrap().ibs, 0.0);
    }

    #[test]
    fn grid_is_bounded_by_percentiles() {
        let times: Vec<f64> = (1..=11).map(f64::from).collect();
        let g = ibs_grid(&times, &[true; 11]).unwrap();
        assert_eq!(g.first(), Some(&2.0));
        assert_eq!(g.last(), Some(&10.0));
        assert_eq!(g.len(), 9);
    }
}
