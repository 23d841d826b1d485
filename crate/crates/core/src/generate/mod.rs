//! Baseline Gaussian-copula generator and the quantile-map equalizer.

pub mod copula;
pub mod equalize;

pub use copula::{fit_copula, repair_correlation, sample_copula, CopulaModel, Marginal, EIGEN_FLOOR};
pub use equalize::{apply_equalizer, equalize_column, fit_equalizer, QuantileMap};
