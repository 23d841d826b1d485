//! Survival estimators and their scores.

pub mod cox;
pub mod data;
pub mod forest;
pub mod km;
pub mod metrics;

pub use cox::{
    cox_univariate, fit_cox, log_partial_likelihood, partial_likelihood_gradient, BaselineHazard, CoxConfig, CoxModel,
    PartialLikelihood, UnivariateCox,
};
pub use data::SurvivalData;
pub use forest::{fit_rsf, ForestModel, ForestParams, Node, Tree};
pub use km::{kaplan_meier, KmCurve};
pub use metrics::{c_index, censoring_km, ibs_grid, integrated_brier, BrierResult, G_MIN};
