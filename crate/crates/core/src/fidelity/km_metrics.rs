use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};
use crate::survival::KmCurve;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KmMetrics {
    /// Mean gap in survival over `[0, T*]`, positive when synthetic survival is longer.
    pub optimism: f64,
    /// Mean absolute gap between the curves over `[0, T*]`.
    pub km_divergence: f64,
    /// Relative shortfall of the synthetic follow-up horizon.
    pub short_sightedness: f64,
    /// `T* = min(t_end_real, t_end_synth)`.
    pub horizon: f64,
}

/// Compares two product-limit curves by exact integration of the step functions on `[0, T*]`.
pub fn km_metrics(real: &KmCurve, synth: &KmCurve) -> Result<KmMetrics> {
    let horizon = real.t_end.min(synth.t_end);
    if !(horizon > 0.0) {
        return Err(AuditError::InsufficientData("Kaplan-Meier horizon must be positive".into()));
    }
    let mut cuts: Vec<f64> = real
        .times
        .iter()
        .chain(&synth.times)
        .copied()
        .filter(|&t| t > 0.0 && t < horizon)
        .collect();
    cuts.push(0.0);
    cuts.push(horizon);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let (mut signed, mut absolute) = (0.0, 0.0);
    for w in cuts.windows(2) {
        let width = w[1] - w[0];
        let gap = synth.survival_at(w[0]) - real.survival_at(w[0]);
        signed += gap * width;
        absolute += gap.abs() * width;
    }
    let short = if real.t_end > 0.0 {
        ((real.t_end - synth.t_end) / real.t_end).max(0.0)
    } else {
        0.0
    };
    Ok(KmMetrics {
        optimism: signed / horizon,
        km_divergence: absolute / horizon,
        short_sightedness: short,
        horizon,
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::survival::kaplan_meier;

    fn curve(times: Vec<f64>, survival: Vec<f64>, t_end: f64) -> KmCurve {
        let n = times.len();
        KmCurve {
            times,
            survival,
            at_risk: vec![1; n],
            events: vec![1; n],
            t_end,
        }
    }

    #[test]
    fn identical_curves() {
        let c = kaplan_meier(&[1.0, 2.0, 3.0, 5.0], &[true, false, true, true]).unwrap();
        let m = km_metrics(&c, &c).unwrap();
        assert_eq!((m.optimism, m.km_divergence, m.short_sightedness), (0.0, 0.0, 0.0));
    }

    #[test]
    fn half_horizon() {
        let real = curve(vec![], vec![], 10.0);
        let synth = curve(vec![], vec![], 5.0);
        assert_eq!(km_metrics(&real, &synth).unwrap().short_sightedness, 0.5);
        assert_eq!(km_metrics(&synth, &real).unwrap().short_sightedness, 0.0);
    }

    #[test]
    fn constant_gap() {
        let real = curve(vec![], vec![], 10.0);
        let synth = curve(vec![1e-12], vec![0.8], 10.0);
        let m = km_metrics(&real, &synth).unwrap();
        assert!((m.optimism + 0.2).abs() < 1e-9);
        assert!((m.km_divergence - 0.2).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn optimism_is_antisymmetric(
            a in prop::collection::vec((1u32..40, any::<bool>()), 1..40),
            b in prop::collection::vec((1u32..40, any::<bool>()), 1..40),
        ) {
            let ca = kaplan_meier(&a.iter().map(|p| f64::from(p.0)).collect::<Vec<_>>(), &a.iter().map(|p| p.1).collect::<Vec<_>>()).unwrap();
            let cb = kaplan_meier(&b.iter().map(|p| f64::from(p.0)).collect::<Vec<_>>(), &b.iter().map(|p| p.1).collect::<Vec<_>>()).unwrap();
            let ab = km_metrics(&ca, &cb).unwrap();
            let ba = km_metrics(&cb, &ca).unwrap();
            prop_assert!((ab.optimism + ba.optimism).abs() < 1e-12);
            prop_assert!((ab.km_divergence - ba.km_divergence).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&ab.optimism));
            prop_assert!((0.0..=1.0).contains(&ab.km_divergence));
        }
    }
}
