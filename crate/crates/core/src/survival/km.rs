use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};

/// Product-limit survival curve. `survival[i]` holds on `[times[i], times[i + 1])`; before
/// the first event time the curve is 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmCurve {
    pub times: Vec<f64>,
    pub survival: Vec<f64>,
    pub at_risk: Vec<usize>,
    pub events: Vec<usize>,
    /// Largest observed time, event or censoring.
    pub t_end: f64,
}

pub fn kaplan_meier(times: &[f64], events: &[bool]) -> Result<KmCurve> {
    if times.is_empty() {
        return Err(AuditError::InsufficientData("Kaplan-Meier needs at least one subject".into()));
    }
    if times.len() != events.len() {
        return Err(AuditError::InsufficientData("times and events differ in length".into()));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(AuditError::Numerical("non-finite survival time".into()));
    }
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
    let mut curve = KmCurve {
        times: Vec::new(),
        survival: Vec::new(),
        at_risk: Vec::new(),
        events: Vec::new(),
        t_end: times[order[order.len() - 1]],
    };
    let mut s = 1.0;
    let mut remaining = times.len();
    let mut i = 0;
    while i < order.len() {
        let t = times[order[i]];
        let mut j = i;
        let mut d = 0;
        while j < order.len() && times[order[j]] == t {
            d += usize::from(events[order[j]]);
            j += 1;
        }
        if d > 0 {
            s *= 1.0 - d as f64 / remaining as f64;
            curve.times.push(t);
            curve.survival.push(s);
            curve.at_risk.push(remaining);
            curve.events.push(d);
        }
        remaining -= j - i;
        i = j;
    }
    Ok(curve)
}

impl KmCurve {
    /// `S(t)`, right-continuous.
    pub fn survival_at(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&x| x <= t);
        if k == 0 {
            1.0
        } else {
            self.survival[k - 1]
        }
    }

    /// `S(t-)`, the value just before `t`.
    pub fn survival_before(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&x| x < t);
        if k == 0 {
            1.0
        } else {
            self.survival[k - 1]
        }
    }

    /// Exact integral of the step function over `[0, upper]`.
    pub fn integral(&self, upper: f64) -> f64 {
        let mut total = 0.0;
        let mut prev_t = 0.0;
        let mut prev_s = 1.0;
        for (&t, &s) in self.times.iter().zip(&self.survival) {
            if t >= upper {
                break;
            }
            total += prev_s * (t - prev_t);
            prev_t = t;
            prev_s = s;
        }
        total + prev_s * (upper - prev_t).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn hand_case() {
        let km = kaplan_meier(&[1.0, 2.0, 3.0], &[true, false, true]).unwrap();
        assert!((km.survival_at(1.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((km.survival_at(2.5) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(km.survival_at(3.0), 0.0);
        assert_eq!(km.survival_at(0.5), 1.0);
        assert_eq!(km.t_end, 3.0);
    }

    #[test]
    fn all_censored_stays_at_one() {
        let km = kaplan_meier(&[1.0, 2.0, 4.0], &[false; 3]).unwrap();
        for t in [1.0, 2.0, 4.0] {
            assert_eq!(km.survival_at(t), 1.0);
        }
        assert!(km.times.is_empty());
    }

    #[test]
    fn single_subject() {
        let km = kaplan_meier(&[5.0], &[true]).unwrap();
        assert_eq!(km.survival_at(5.0), 0.0);
        assert_eq!(km.survival_before(5.0), 1.0);
        assert!(kaplan_meier(&[], &[]).is_err());
    }

    #[test]
    fn censored_at_event_time_counts_at_risk() {
        // two subjects at t=2: one death, one censored -> 1 - 1/3 at t=2
        let km = kaplan_meier(&[2.0, 2.0, 5.0], &[true, false, true]).unwrap();
        assert_eq!(km.at_risk[0], 3);
        assert!((km.survival_at(2.0) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn step_integral() {
        let km = kaplan_meier(&[1.0, 2.0, 3.0], &[true, false, true]).unwrap();
        // 1 on [0,1), 2/3 on [1,3), 0 after
        assert!((km.integral(4.0) - (1.0 + 4.0 / 3.0)).abs() < 1e-12);
        assert!((km.integral(0.5) - 0.5).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn uncensored_equals_empirical_survival(ts in prop::collection::vec(1u32..30, 1..60), probe in 0.0f64..35.0) {
            let times: Vec<f64> = ts.iter().map(|&t| f64::from(t)).collect();
            let km = kaplan_meier(&times, &vec![true; times.len()]).unwrap();
            let empirical = times.iter().filter(|&&t| t > probe).count() as f64 / times.len() as f64;
            prop_assert!((km.survival_at(probe) - empirical).abs() < 1e-12);
        }

        #[test]
        fn curve_is_monotone(ts in prop::collection::vec((1u32..30, any::<bool>()), 1..60)) {
            let times: Vec<f64> = ts.iter().map(|p| f64::from(p.0)).collect();
            let events: Vec<bool> = ts.iter().map(|p| p.1).collect();
            let km = kaplan_meier(&times, &events).unwrap();
            let mut prev = 1.0;
            for &s in &km.survival {
                prop_assert!(s <= prev && (0.0..=1.0).contains(&s));
                prev = s;
            }
        }
    }
}
