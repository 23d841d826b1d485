use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};
use crate::par;
use crate::survival::{cox_univariate, SurvivalData, UnivariateCox};

use super::significance::SIGNIFICANCE_LEVEL;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDetail {
    pub feature: String,
    pub real: UnivariateCox,
    pub synthetic: UnivariateCox,
    /// Significant in both with the same coefficient sign.
    pub preserved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturePreservation {
    /// `None` when no feature is significant in the real data.
    pub recall: Option<f64>,
    /// `None` when no feature is significant in the synthetic data.
    pub precision: Option<f64>,
    pub n_real_significant: usize,
    pub n_synth_significant: usize,
    pub n_preserved: usize,
    pub detail: Vec<FeatureDetail>,
}

/// Agreement of univariate Cox significance and sign between real and synthetic data.
pub fn feature_preservation(real: &SurvivalData, synth: &SurvivalData) -> Result<FeaturePreservation> {
    if real.feature_names != synth.feature_names {
        return Err(AuditError::SchemaMismatch("real and synthetic feature sets differ".into()));
    }
    let features: Vec<usize> = (0..real.n_features()).collect();
    let fits = par::map(&features, |&j| Ok::<_, AuditError>((cox_univariate(real, j)?, cox_univariate(synth, j)?)));
    let mut detail = Vec::with_capacity(features.len());
    for (j, fit) in fits.into_iter().enumerate() {
        let (r, s) = fit?;
        let preserved = r.significant(SIGNIFICANCE_LEVEL) && s.significant(SIGNIFICANCE_LEVEL) && r.sign() == s.sign();
        detail.push(FeatureDetail {
            feature: real.feature_names[j].clone(),
            real: r,
            synthetic: s,
            preserved,
        });
    }
    let n_real = detail.iter().filter(|d| d.real.significant(SIGNIFICANCE_LEVEL)).count();
    let n_synth = detail.iter().filter(|d| d.synthetic.significant(SIGNIFICANCE_LEVEL)).count();
    let tp = detail.iter().filter(|d| d.preserved).count();
    Ok(FeaturePreservation {
        recall: (n_real > 0).then(|| tp as f64 / n_real as f64),
        precision: (n_synth > 0).then(|| tp as f64 / n_synth as f64),
        n_real_significant: n_real,
        n_synth_significant: n_synth,
        n_preserved: tp,
        detail,
    })
}

#[cfg(test)]
mod tests {
    use nalgebra::DMatrix;
    use rand::Rng;
    use rand_distr::{Distribution, Exp, StandardNormal};

    use super::*;
    use crate::seed;

    /// Three signal covariates (β = 0.8, -0.6, 0.5) and one noise covariate.
    fn simulate(n: usize, s: u64) -> SurvivalData {
        let mut rng = seed::rng(s);
        let beta = [0.8, -0.6, 0.5, 0.0];
        let mut x = DMatrix::zeros(n, 4);
        let (mut times, mut events) = (Vec::new(), Vec::new());
        for i in 0..n {
            let mut eta = 0.0;
            for j in 0..4 {
                let v: f64 = rng.sample(StandardNormal);
                x[(i, j)] = v;
                eta += beta[j] * v;
            }
            let t = Exp::new(f64::exp(eta) * 0.1).unwrap().sample(&mut rng);
            let c = Exp::new(0.05).unwrap().sample(&mut rng);
            times.push(t.min(c).max(1e-6));
            events.push(t <= c);
        }
        SurvivalData::new(times, events, x, (0..4).map(|j| format!("x{j}")).collect()).unwrap()
    }

    #[test]
    fn copy_is_fully_preserved() {
        let d = simulate(600, 1);
        let fp = feature_preservation(&d, &d).unwrap();
        assert_eq!(fp.recall, Some(1.0));
        assert_eq!(fp.precision, Some(1.0));
    }

    #[test]
    fn sign_flip_counts_against_both() {
        let d = simulate(600, 2);
        let mut flipped = d.clone();
        for i in 0..flipped.n() {
            flipped.x[(i, 1)] = -flipped.x[(i, 1)];
        }
        let base = feature_preservation(&d, &d).unwrap();
        let fp = feature_preservation(&d, &flipped).unwrap();
        assert_eq!(fp.n_preserved + 1, base.n_preserved);
        assert!(fp.recall.unwrap() < 1.0 && fp.precision.unwrap() < 1.0);
    }

    #[test]
    fn shuffled_signal_loses_exactly_one() {
        let d = simulate(800, 3);
        let mut shuffled = d.clone();
        let mut rng = seed::rng(44);
        let n = d.n();
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        for i in 0..n {
            shuffled.x[(i, 2)] = d.x[(perm[i], 2)];
        }
        let fp = feature_preservation(&d, &shuffled).unwrap();
        let n_real = fp.n_real_significant as f64;
        assert!(!fp.detail[2].synthetic.significant(0.05));
        assert_eq!(fp.recall, Some((n_real - 1.0) / n_real));
    }
}
