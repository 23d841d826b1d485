//! File I/O, schema configuration, plausibility constraints and missingness bookkeeping.

pub mod config;
pub mod constraints;
pub mod io;
pub mod missingness;

pub use config::{SchemaConfig, REFERENCE_SCHEMA};
pub use constraints::{clip_to_ranges, filter_implausible, ClipReport, FilterOutcome, PlausibilityRules};
pub use io::{load_table, load_table_with, read_table, table_to_string, write_table, write_table_to, LoadOptions};
pub use missingness::{
    add_missingness_indicators, compare_profiles, has_indicator_columns, missingness_profile, reapply_embedded_missingness,
    reapply_missingness, MissingnessComparison, MissingnessProfile,
};
