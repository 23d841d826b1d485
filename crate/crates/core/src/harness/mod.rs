//! Splits, hyperparameter grids, the train/test paradigms and the audit report.

pub mod audit;
pub mod grid;
pub mod paradigm;
pub mod split;

pub use audit::{
    full_audit, AuditConfig, DatasetInfo, FilterSummary, MetricReport, RealSection, SplitSummary, SyntheticBody,
    SyntheticInput, SyntheticSection, UtilityCell,
};
pub use grid::{fit_model, grid_search, CoxGrid, FittedModel, GridOutcome, Hyperparameters, ModelFamily, ModelGrids, RsfGrid};
pub use paradigm::{run_paradigm, Paradigm, PreparedData, Source, UtilityScore};
pub use split::{stratified_split, stratified_split_with, SplitFractions, SplitPlan, MIN_SPLIT_ROWS};
