use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};
use crate::par;
use crate::survival::{c_index, fit_cox, fit_rsf, CoxConfig, CoxModel, ForestModel, ForestParams, SurvivalData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelFamily {
    #[serde(rename = "CoxPH")]
    Cox,
    #[serde(rename = "RSF")]
    Rsf,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 2] = [ModelFamily::Cox, ModelFamily::Rsf];
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelFamily::Cox => "CoxPH",
            ModelFamily::Rsf => "RSF",
        })
    }
}

impl FromStr for ModelFamily {
    type Err = AuditError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cox" | "coxph" => Ok(ModelFamily::Cox),
            "rsf" => Ok(ModelFamily::Rsf),
            other => Err(AuditError::Config(format!("unknown model family '{other}' (expected cox or rsf)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxGrid {
    pub l1_ratios: Vec<f64>,
    pub penalties: Vec<f64>,
}

impl Default for CoxGrid {
    fn default() -> Self {
        CoxGrid {
            l1_ratios: vec![0.0, 0.5, 1.0],
            penalties: vec![0.1, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RsfGrid {
    pub n_estimators: Vec<usize>,
    pub max_depth: Vec<usize>,
    pub min_samples_split: Vec<usize>,
    pub min_samples_leaf: Vec<usize>,
}

impl Default for RsfGrid {
    fn default() -> Self {
        RsfGrid {
            n_estimators: vec![5, 20, 50],
            max_depth: vec![2, 5, 10],
            min_samples_split: vec![2, 5, 10],
            min_samples_leaf: vec![1, 2, 4],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelGrids {
    pub cox: CoxGrid,
    pub rsf: RsfGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hyperparameters {
    Cox { l1_ratio: f64, penalty: f64 },
    Rsf(ForestParams),
}

impl ModelGrids {
    /// Candidates in listed order, the first list varying slowest.
    pub fn candidates(&self, family: ModelFamily) -> Vec<Hyperparameters> {
        match family {
            ModelFamily::Cox => self
                .cox
                .l1_ratios
                .iter()
                .flat_map(|&l1_ratio| {
                    self.cox.penalties.iter().map(move |&penalty| Hyperparameters::Cox { l1_ratio, penalty })
                })
                .collect(),
            ModelFamily::Rsf => {
                let g = &self.rsf;
                let mut out = Vec::new();
                for &n_estimators in &g.n_estimators {
                    for &max_depth in &g.max_depth {
                        for &min_samples_split in &g.min_samples_split {
                            for &min_samples_leaf in &g.min_samples_leaf {
                                out.push(Hyperparameters::Rsf(ForestParams {
                                    n_estimators,
                                    max_depth,
                                    min_samples_split,
                                    min_samples_leaf,
                                }));
                            }
                        }
                    }
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum FittedModel {
    Cox(CoxModel),
    /// Risk is the ensemble cumulative hazard at `horizon`, the last training time.
    Rsf { model: ForestModel, horizon: f64 },
}

impl FittedModel {
    pub fn risk(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        match self {
            FittedModel::Cox(m) => m.predict_risk(x),
            FittedModel::Rsf { model, horizon } => model.predict_risk(x, *horizon),
        }
    }

    pub fn survival(&self, x: &DMatrix<f64>, grid: &[f64]) -> Result<DMatrix<f64>> {
        match self {
            FittedModel::Cox(m) => m.predict_survival(x, grid),
            FittedModel::Rsf { model, .. } => model.predict_survival(x, grid),
        }
    }
}

pub fn fit_model(train: &SurvivalData, params: &Hyperparameters, seed_value: u64) -> Result<FittedModel> {
    match params {
        Hyperparameters::Cox { l1_ratio, penalty } => Ok(FittedModel::Cox(fit_cox(train, &CoxConfig::new(*penalty, *l1_ratio))?)),
        Hyperparameters::Rsf(p) => Ok(FittedModel::Rsf {
            model: fit_rsf(train, p, seed_value)?,
            horizon: train.times.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }),
    }
}

#[derive(Debug, Clone)]
pub struct GridOutcome {
    pub best: Hyperparameters,
    pub model: FittedModel,
    pub validation_c_index: f64,
    /// Candidates whose fit or validation scoring failed.
    pub n_failed: usize,
}

/// Fits every candidate on `train` and keeps the one with the highest validation C-index;
/// the earliest candidate wins ties.
pub fn grid_search(
    train: &SurvivalData,
    valid: &SurvivalData,
    candidates: &[Hyperparameters],
    seed_value: u64,
) -> Result<GridOutcome> {
    if candidates.is_empty() {
        return Err(AuditError::Config("empty hyperparameter grid".into()));
    }
    let fits = par::map(candidates, |p| -> Result<(FittedModel, f64)> {
        let model = fit_model(train, p, seed_value)?;
        let c = c_index(&valid.times, &valid.events, &model.risk(&valid.x)?)?;
        Ok((model, c))
    });
    let mut best: Option<(usize, FittedModel, f64)> = None;
    let mut n_failed = 0;
    let mut last_error = None;
    for (k, fit) in fits.into_iter().enumerate() {
        match fit {
            Ok((model, c)) => {
                if best.as_ref().is_none_or(|(_, _, bc)| c > *bc) {
                    best = Some((k, model, c));
                }
            }
            Err(e) => {
                n_failed += 1;
                last_error = Some(e);
            }
        }
    }
    match best {
        Some((k, model, c)) => Ok(GridOutcome {
            best: candidates[k],
            model,
            validation_c_index: c,
            n_failed,
        }),
        None => Err(last_error.expect("non-empty grid").context("every grid candidate failed")),
    }
}
