use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};
use crate::stats;
use crate::survival::data::SurvivalData;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoxConfig {
    /// Overall penalty strength λ.
    pub penalty: f64,
    /// Share of the L1 term, α.
    pub l1_ratio: f64,
    pub max_cycles: usize,
    pub tol: f64,
}

impl CoxConfig {
    pub fn new(penalty: f64, l1_ratio: f64) -> Self {
        CoxConfig {
            penalty,
            l1_ratio,
            max_cycles: 1000,
            tol: 1e-7,
        }
    }

    pub fn unpenalized() -> Self {
        CoxConfig::new(0.0, 0.0)
    }
}

/// Breslow cumulative baseline hazard at the distinct training event times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineHazard {
    pub times: Vec<f64>,
    pub cumhaz: Vec<f64>,
}

impl BaselineHazard {
    pub fn at(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&x| x <= t);
        if k == 0 {
            0.0
        } else {
            self.cumhaz[k - 1]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxModel {
    pub coefficients: Vec<f64>,
    pub feature_names: Vec<String>,
    pub penalty: f64,
    pub l1_ratio: f64,
    pub baseline: BaselineHazard,
    pub converged: bool,
    pub cycles: usize,
    /// Penalised objective (to be minimised) after each cycle, starting with β = 0.
    pub objective_trace: Vec<f64>,
}

/// Risk-set bookkeeping for the Efron partial likelihood.
#[derive(Debug, Clone)]
pub struct PartialLikelihood {
    /// Subject indices sorted by time.
    order: Vec<usize>,
    /// `(start, end)` ranges into `order` sharing one time, ascending.
    groups: Vec<(usize, usize)>,
    events: Vec<bool>,
    n: usize,
}

impl PartialLikelihood {
    pub fn new(times: &[f64], events: &[bool]) -> Self {
        let n = times.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| times[a].total_cmp(&times[b]).then(a.cmp(&b)));
        let mut groups = Vec::new();
        let mut i = 0;
        while i < n {
            let mut j = i + 1;
            while j < n && times[order[j]] == times[order[i]] {
                j += 1;
            }
            groups.push((i, j));
            i = j;
        }
        PartialLikelihood {
            order,
            groups,
            events: events.to_vec(),
            n,
        }
    }

    /// Efron log partial likelihood at linear predictor `eta`.
    pub fn loglik(&self, eta: &[f64]) -> f64 {
        let shift = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let shift = if shift.is_finite() { shift } else { 0.0 };
        let mut risk = 0.0;
        let mut ll = 0.0;
        for &(s, e) in self.groups.iter().rev() {
            let mut tie = 0.0;
            let mut eta_d = 0.0;
            let mut d = 0usize;
            for &i in &self.order[s..e] {
                let w = (eta[i] - shift).exp();
                risk += w;
                if self.events[i] {
                    tie += w;
                    eta_d += eta[i] - shift;
                    d += 1;
                }
            }
            if d == 0 {
                continue;
            }
            ll += eta_d;
            for l in 0..d {
                ll -= (risk - l as f64 / d as f64 * tie).ln();
            }
        }
        ll
    }

    /// First derivative and negative second derivative of the log partial likelihood with
    /// respect to the coefficient of covariate `x`.
    pub fn coordinate_derivatives(&self, eta: &[f64], x: &[f64]) -> (f64, f64) {
        let shift = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let shift = if shift.is_finite() { shift } else { 0.0 };
        let (mut r0, mut r1, mut r2) = (0.0, 0.0, 0.0);
        let (mut grad, mut info) = (0.0, 0.0);
        for &(s, e) in self.groups.iter().rev() {
            let (mut t0, mut t1, mut t2) = (0.0, 0.0, 0.0);
            let mut xd = 0.0;
            let mut d = 0usize;
            for &i in &self.order[s..e] {
                let w = (eta[i] - shift).exp();
                let xi = x[i];
                r0 += w;
                r1 += w * xi;
                r2 += w * xi * xi;
                if self.events[i] {
                    t0 += w;
                    t1 += w * xi;
                    t2 += w * xi * xi;
                    xd += xi;
                    d += 1;
                }
            }
            if d == 0 {
                continue;
            }
            grad += xd;
            for l in 0..d {
                let f = l as f64 / d as f64;
                let a0 = r0 - f * t0;
                let a1 = r1 - f * t1;
                let a2 = r2 - f * t2;
                let m = a1 / a0;
                grad -= m;
                info += a2 / a0 - m * m;
            }
        }
        (grad, info)
    }

    /// Full gradient of the log partial likelihood.
    pub fn gradient(&self, eta: &[f64], x: &DMatrix<f64>) -> Vec<f64> {
        (0..x.ncols())
            .map(|j| {
                let col: Vec<f64> = x.column(j).iter().copied().collect();
                self.coordinate_derivatives(eta, &col).0
            })
            .collect()
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

pub fn linear_predictor(x: &DMatrix<f64>, beta: &[f64]) -> Vec<f64> {
    (0..x.nrows())
        .map(|i| (0..x.ncols()).map(|j| x[(i, j)] * beta[j]).sum())
        .collect()
}

/// Log partial likelihood at `beta`; convenience for checks.
pub fn log_partial_likelihood(data: &SurvivalData, beta: &[f64]) -> f64 {
    PartialLikelihood::new(&data.times, &data.events).loglik(&linear_predictor(&data.x, beta))
}

pub fn partial_likelihood_gradient(data: &SurvivalData, beta: &[f64]) -> Vec<f64> {
    let pl = PartialLikelihood::new(&data.times, &data.events);
    pl.gradient(&linear_predictor(&data.x, beta), &data.x)
}

fn penalty_term(beta: &[f64], lambda: f64, alpha: f64) -> f64 {
    let l1: f64 = beta.iter().map(|b| b.abs()).sum();
    let l2: f64 = beta.iter().map(|b| b * b).sum();
    lambda * (alpha * l1 + (1.0 - alpha) * l2 / 2.0)
}

fn soft_threshold(z: f64, g: f64) -> f64 {
    if z > g {
        z - g
    } else if z < -g {
        z + g
    } else {
        0.0
    }
}

/// Minimises `-loglik / n + λ[α|β|₁ + (1-α)|β|²/2]` by cyclic coordinate-wise Newton steps with
/// step halving, so the objective never increases.
pub fn fit_cox(data: &SurvivalData, cfg: &CoxConfig) -> Result<CoxModel> {
    if data.n_events() == 0 {
        return Err(AuditError::InsufficientData("Cox model needs at least one event".into()));
    }
    if !(cfg.penalty >= 0.0) || !(0.0..=1.0).contains(&cfg.l1_ratio) {
        return Err(AuditError::Config(format!(
            "invalid Cox penalty {} / l1_ratio {}",
            cfg.penalty, cfg.l1_ratio
        )));
    }
    let (n, p) = (data.n(), data.n_features());
    let nf = n as f64;
    let (lambda, alpha) = (cfg.penalty, cfg.l1_ratio);
    let pl = PartialLikelihood::new(&data.times, &data.events);
    let columns: Vec<Vec<f64>> = (0..p).map(|j| data.x.column(j).iter().copied().collect()).collect();
    let mut beta = vec![0.0; p];
    let mut eta = vec![0.0; n];
    let mut objective = -pl.loglik(&eta) / nf;
    if !objective.is_finite() {
        return Err(AuditError::Numerical("non-finite partial likelihood at zero".into()));
    }
    let mut trace = vec![objective];
    let mut converged = p == 0;
    let mut cycles = 0;
    let mut trial = vec![0.0; n];
    while !converged && cycles < cfg.max_cycles {
        let mut max_change: f64 = 0.0;
        for j in 0..p {
            let xj = &columns[j];
            let (g, h) = pl.coordinate_derivatives(&eta, xj);
            let (g, h) = (-g / nf, h / nf);
            let denom = h + lambda * (1.0 - alpha);
            if !(denom > 0.0) {
                continue;
            }
            let target = soft_threshold(h * beta[j] - g, lambda * alpha) / denom;
            let mut delta = target - beta[j];
            if delta == 0.0 {
                continue;
            }
            let mut accepted = false;
            for _ in 0..60 {
                for i in 0..n {
                    trial[i] = eta[i] + delta * xj[i];
                }
                let old_bj = beta[j];
                beta[j] = old_bj + delta;
                let cand = -pl.loglik(&trial) / nf + penalty_term(&beta, lambda, alpha);
                beta[j] = old_bj;
                if cand.is_finite() && cand <= objective {
                    beta[j] += delta;
                    std::mem::swap(&mut eta, &mut trial);
                    objective = cand;
                    accepted = true;
                    break;
                }
                delta /= 2.0;
                if delta.abs() < 1e-15 {
                    break;
                }
            }
            if accepted {
                max_change = max_change.max(delta.abs());
            }
        }
        cycles += 1;
        trace.push(objective);
        if max_change < cfg.tol {
            converged = true;
        }
    }
    let baseline = breslow(&pl, &data.times, &data.events, &eta);
    Ok(CoxModel {
        coefficients: beta,
        feature_names: data.feature_names.clone(),
        penalty: lambda,
        l1_ratio: alpha,
        baseline,
        converged,
        cycles,
        objective_trace: trace,
    })
}

fn breslow(pl: &PartialLikelihood, times: &[f64], events: &[bool], eta: &[f64]) -> BaselineHazard {
    let shift = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max).max(0.0);
    let mut steps = Vec::new();
    let mut risk = 0.0;
    for &(s, e) in pl.groups.iter().rev() {
        let mut d = 0usize;
        for &i in &pl.order[s..e] {
            risk += (eta[i] - shift).exp();
            d += usize::from(events[i]);
        }
        if d > 0 {
            steps.push((times[pl.order[s]], d as f64 / risk * (-shift).exp()));
        }
    }
    steps.reverse();
    let mut acc = 0.0;
    let mut out = BaselineHazard {
        times: Vec::with_capacity(steps.len()),
        cumhaz: Vec::with_capacity(steps.len()),
    };
    for (t, dh) in steps {
        acc += dh;
        out.times.push(t);
        out.cumhaz.push(acc);
    }
    out
}

impl CoxModel {
    fn check_width(&self, x: &DMatrix<f64>) -> Result<()> {
        if x.ncols() != self.coefficients.len() {
            return Err(AuditError::SchemaMismatch(format!(
                "Cox model has {} coefficients, covariates have {} columns",
                self.coefficients.len(),
                x.ncols()
            )));
        }
        Ok(())
    }

    /// Linear predictor βᵀx; ranking-equivalent to the hazard ratio exp(βᵀx).
    pub fn predict_risk(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        self.check_width(x)?;
        Ok(linear_predictor(x, &self.coefficients))
    }

    /// `n x grid` matrix of `exp(-H0(t) exp(βᵀx))`.
    pub fn predict_survival(&self, x: &DMatrix<f64>, grid: &[f64]) -> Result<DMatrix<f64>> {
        let eta = self.predict_risk(x)?;
        let h0: Vec<f64> = grid.iter().map(|&t| self.baseline.at(t)).collect();
        Ok(DMatrix::from_fn(eta.len(), grid.len(), |i, k| (-h0[k] * eta[i].exp()).exp()))
    }
}

/// Wald summary of an unpenalised single-covariate Cox fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnivariateCox {
    pub feature: String,
    pub estimable: bool,
    pub beta: f64,
    pub se: f64,
    pub z: f64,
    pub p_value: f64,
}

impl UnivariateCox {
    /// -1, 0 or +1.
    pub fn sign(&self) -> i8 {
        if !self.estimable || self.beta == 0.0 {
            0
        } else if self.beta > 0.0 {
            1
        } else {
            -1
        }
    }

    pub fn significant(&self, level: f64) -> bool {
        self.estimable && self.p_value < level
    }

    fn non_estimable(feature: String) -> Self {
        UnivariateCox {
            feature,
            estimable: false,
            beta: 0.0,
            se: f64::NAN,
            z: 0.0,
            p_value: 1.0,
        }
    }
}

/// Univariate fit of feature `j`, with standard error from the observed information at β̂.
pub fn cox_univariate(data: &SurvivalData, j: usize) -> Result<UnivariateCox> {
    let name = data.feature_names[j].clone();
    let raw: Vec<f64> = data.x.column(j).iter().copied().collect();
    let sd = stats::population_sd(&raw);
    if !(sd > 1e-12) || data.n_events() == 0 {
        return Ok(UnivariateCox::non_estimable(name));
    }
    let m = stats::mean(&raw);
    let xs: Vec<f64> = raw.iter().map(|v| (v - m) / sd).collect();
    let single = SurvivalData {
        times: data.times.clone(),
        events: data.events.clone(),
        x: DMatrix::from_column_slice(xs.len(), 1, &xs),
        feature_names: vec![name.clone()],
    };
    let mut cfg = CoxConfig::unpenalized();
    cfg.tol = 1e-10;
    let fit = fit_cox(&single, &cfg)?;
    let b = fit.coefficients[0];
    let pl = PartialLikelihood::new(&single.times, &single.events);
    let eta: Vec<f64> = xs.iter().map(|v| v * b).collect();
    let (_, info) = pl.coordinate_derivatives(&eta, &xs);
    if !(info > 1e-10) || !b.is_finite() || b.abs() > 50.0 {
        return Ok(UnivariateCox::non_estimable(name));
    }
    let se_std = 1.0 / info.sqrt();
    let z = b / se_std;
    Ok(UnivariateCox {
        feature: name,
        estimable: true,
        beta: b / sd,
        se: se_std / sd,
        z,
        p_value: stats::two_sided_normal_p(z),
    })
}
