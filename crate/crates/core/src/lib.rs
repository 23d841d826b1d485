//! Auditing of synthetic tabular survival data against a real reference: statistical
//! fidelity, survival-model utility, Kaplan-Meier similarity and privacy attacks.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments, clippy::needless_range_loop)]

pub mod data;
pub mod error;
pub mod fidelity;
pub mod generate;
pub mod harness;
pub mod impute;
pub mod ingest;
pub mod par;
pub mod privacy;
pub mod regress;
pub mod seed;
pub mod simulate;
pub mod stats;
pub mod survival;

pub use error::{AuditError, Result};
