use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{fit_normalization, DataTable, NormalizationMode};
use crate::error::{AuditError, Result};
use crate::harness::grid::{grid_search, Hyperparameters, ModelFamily, ModelGrids};
use crate::harness::split::{stratified_split, SplitPlan};
use crate::impute::{apply_imputer, fit_imputer, ImputeConfig, ImputerModel};
use crate::ingest::clip_to_ranges;
use crate::seed;
use crate::survival::{c_index, censoring_km, ibs_grid, integrated_brier, SurvivalData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Paradigm {
    Trtr,
    Tstr,
    Trts,
    Tsts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Real,
    Synthetic,
}

impl Paradigm {
    pub const ALL: [Paradigm; 4] = [Paradigm::Trtr, Paradigm::Tstr, Paradigm::Trts, Paradigm::Tsts];
    pub const SYNTHETIC: [Paradigm; 3] = [Paradigm::Tstr, Paradigm::Trts, Paradigm::Tsts];

    pub fn train_source(self) -> Source {
        match self {
            Paradigm::Trtr | Paradigm::Trts => Source::Real,
            Paradigm::Tstr | Paradigm::Tsts => Source::Synthetic,
        }
    }

    pub fn test_source(self) -> Source {
        match self {
            Paradigm::Trtr | Paradigm::Tstr => Source::Real,
            Paradigm::Trts | Paradigm::Tsts => Source::Synthetic,
        }
    }
}

impl fmt::Display for Paradigm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Paradigm::Trtr => "TRTR",
            Paradigm::Tstr => "TSTR",
            Paradigm::Trts => "TRTS",
            Paradigm::Tsts => "TSTS",
        })
    }
}

impl FromStr for Paradigm {
    type Err = AuditError;

    fn from_str(s: &str) -> Result<Self> {
        Paradigm::ALL
            .into_iter()
            .find(|p| p.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| AuditError::Config(format!("unknown paradigm '{s}'")))
    }
}

/// One dataset ready for modelling: its split, the imputer fitted on its train+valid rows
/// and the whole table imputed by that imputer and clipped to plausible ranges.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub raw: DataTable,
    pub plan: SplitPlan,
    pub imputer: ImputerModel,
    pub imputed: DataTable,
}

impl PreparedData {
    pub fn new(raw: DataTable, impute: &ImputeConfig, seed_value: u64) -> Result<Self> {
        let plan = stratified_split(&raw, seed_value)?;
        let imputer = fit_imputer(&raw.select_rows(&plan.train_valid()), impute)?;
        let imputed = clip_to_ranges(&apply_imputer(&imputer, &raw)?)?.0;
        Ok(PreparedData {
            raw,
            plan,
            imputer,
            imputed,
        })
    }

    pub fn train_valid(&self) -> DataTable {
        self.imputed.select_rows(&self.plan.train_valid())
    }

    pub fn test(&self) -> DataTable {
        self.imputed.select_rows(&self.plan.test)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityScore {
    pub c_index: f64,
    pub ibs: f64,
    pub validation_c_index: f64,
    pub hyperparameters: Hyperparameters,
    pub failed_candidates: usize,
}

/// Tunes `family` on the training source (fit on train, select on valid) and scores it on the
/// test split of the testing source. That test split is imputed by the training source's
/// imputer; features are z-scored with statistics of the training source's train+valid rows.
pub fn run_paradigm(
    real: &PreparedData,
    synth: Option<&PreparedData>,
    paradigm: Paradigm,
    family: ModelFamily,
    grids: &ModelGrids,
    seed_value: u64,
) -> Result<UtilityScore> {
    let pick = |s: Source| match s {
        Source::Real => Ok(real),
        Source::Synthetic => synth.ok_or_else(|| AuditError::Config(format!("{paradigm} needs a synthetic dataset"))),
    };
    let (tr, te) = (pick(paradigm.train_source())?, pick(paradigm.test_source())?);
    let run = || -> Result<UtilityScore> {
        let scaling = fit_normalization(&[&tr.train_valid()], NormalizationMode::ZScore, "train+valid")?;
        let encoder = SurvivalData::encoder(&tr.imputed, Some(&scaling));
        let train = SurvivalData::from_table(&tr.imputed.select_rows(&tr.plan.train), &encoder)?;
        let valid = SurvivalData::from_table(&tr.imputed.select_rows(&tr.plan.valid), &encoder)?;
        let test_table = clip_to_ranges(&apply_imputer(&tr.imputer, &te.raw.select_rows(&te.plan.test))?)?.0;
        let test = SurvivalData::from_table(&test_table, &encoder)?;
        let search = grid_search(&train, &valid, &grids.candidates(family), seed::derive(seed_value, "model"))?;
        let c = c_index(&test.times, &test.events, &search.model.risk(&test.x)?)?;
        let grid = ibs_grid(&test.times, &test.events)?;
        let surv = search.model.survival(&test.x, &grid)?;
        let censor = censoring_km(&test.times, &test.events)?;
        let brier = integrated_brier(&surv, &grid, &test.times, &test.events, &censor)?;
        Ok(UtilityScore {
            c_index: c,
            ibs: brier.ibs,
            validation_c_index: search.validation_c_index,
            hyperparameters: search.best,
            failed_candidates: search.n_failed,
        })
    };
    run().map_err(|e| e.context(format!("{paradigm} {family}")))
}
