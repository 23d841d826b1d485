//! Single imputation: median/mode fill and chained equations.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::{Column, ColumnKind, DataTable, DatasetSchema};
use crate::error::{AuditError, Result};
use crate::regress::{fit_least_squares, Classifier, LinearModel};
use crate::seed::DEFAULT_SEED;

/// L2 strength of the logistic models used for coded targets.
const LOGISTIC_LAMBDA: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImputeMethod {
    Median,
    Chained,
}

impl fmt::Display for ImputeMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ImputeMethod::Median => "median",
            ImputeMethod::Chained => "chained",
        })
    }
}

impl FromStr for ImputeMethod {
    type Err = AuditError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "median" => Ok(ImputeMethod::Median),
            "chained" | "mice" => Ok(ImputeMethod::Chained),
            other => Err(AuditError::Config(format!("unknown imputation method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputeConfig {
    pub method: ImputeMethod,
    pub max_iterations: usize,
    /// Mean absolute change of imputed continuous cells, in training standard deviations.
    pub convergence_tol: f64,
    /// Recorded for provenance; the chained imputer is deterministic.
    pub seed: u64,
}

impl Default for ImputeConfig {
    fn default() -> Self {
        ImputeConfig {
            method: ImputeMethod::Chained,
            max_iterations: 100,
            convergence_tol: 1e-3,
            seed: DEFAULT_SEED,
        }
    }
}

impl ImputeConfig {
    pub fn median() -> Self {
        ImputeConfig {
            method: ImputeMethod::Median,
            ..ImputeConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(AuditError::Config("max_iterations must be at least 1".into()));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(AuditError::Config("convergence_tol must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ImputeOutcome {
    pub table: DataTable,
    pub iterations: usize,
    pub converged: bool,
    /// Stopping statistic after the last cycle (infinite when no cycle ran).
    pub final_change: f64,
    /// Coded cells whose imputed class changed in the last cycle.
    pub categorical_changes: usize,
}

/// How one feature enters other columns' regressions.
#[derive(Debug, Clone, PartialEq)]
enum Block {
    Real { column: usize, mean: f64, sd: f64 },
    Codes { column: usize, levels: Vec<u32> },
}

impl Block {
    fn column(&self) -> usize {
        match self {
            Block::Real { column, .. } | Block::Codes { column, .. } => *column,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Regressor {
    Linear(LinearModel),
    Class(Classifier),
}

/// Frozen imputation statistics and per-column regressors.
#[derive(Debug, Clone, PartialEq)]
pub struct ImputerModel {
    method: ImputeMethod,
    schema: Arc<DatasetSchema>,
    fills: Vec<Option<f64>>,
    scales: Vec<f64>,
    blocks: Vec<Block>,
    regressors: Vec<Option<Regressor>>,
    max_iterations: usize,
    convergence_tol: f64,
}

impl ImputerModel {
    pub fn method(&self) -> ImputeMethod {
        self.method
    }

    /// Initial fill value of a column (median, or modal code).
    pub fn fill_value(&self, column: usize) -> Option<f64> {
        self.fills[column]
    }

    pub fn has_regressor(&self, column: usize) -> bool {
        self.regressors[column].is_some()
    }
}

fn mode(codes: &[u32]) -> Option<u32> {
    let max = *codes.iter().max()?;
    let mut counts = vec![0usize; max as usize + 1];
    for &c in codes {
        counts[c as usize] += 1;
    }
    let best = counts.iter().copied().max()?;
    counts.iter().position(|&n| n == best).map(|p| p as u32)
}

fn fill_values(table: &DataTable) -> Vec<Option<f64>> {
    table
        .columns()
        .iter()
        .map(|col| match col.reals() {
            Some(_) => {
                let obs = col.observed_reals();
                (!obs.is_empty()).then(|| crate::stats::median(&obs))
            }
            None => mode(&col.observed_codes()).map(f64::from),
        })
        .collect()
}

fn column_scales(table: &DataTable) -> Vec<f64> {
    table
        .columns()
        .iter()
        .map(|col| {
            let obs = col.observed_reals();
            if col.reals().is_none() || obs.len() < 2 {
                return 1.0;
            }
            let sd = crate::stats::population_sd(&obs);
            if sd > 0.0 {
                sd
            } else {
                1.0
            }
        })
        .collect()
}

fn feature_blocks(table: &DataTable) -> Vec<Block> {
    let schema = table.schema();
    schema
        .feature_indices()
        .into_iter()
        .map(|c| {
            let spec = schema.column(c);
            match spec.kind {
                ColumnKind::Continuous => {
                    let obs = table.column(c).observed_reals();
                    let (mean, sd) = if obs.is_empty() {
                        (0.0, 0.0)
                    } else {
                        (crate::stats::mean(&obs), crate::stats::population_sd(&obs))
                    };
                    Block::Real { column: c, mean, sd }
                }
                ColumnKind::Binary => Block::Codes {
                    column: c,
                    levels: vec![1],
                },
                ColumnKind::Categorical => Block::Codes {
                    column: c,
                    levels: (1..spec.n_categories() as u32).collect(),
                },
            }
        })
        .collect()
}

/// Working copy of a table with every masked cell replaced by its fill value.
fn initial_fill(table: &DataTable, fills: &[Option<f64>]) -> Result<Vec<Vec<f64>>> {
    (0..table.n_columns())
        .map(|c| {
            let col = table.column(c);
            if col.has_missing() && fills[c].is_none() {
                return Err(AuditError::EmptyColumn(table.spec(c).name.clone()));
            }
            Ok((0..table.n_rows())
                .map(|r| col.get(r).unwrap_or_else(|| fills[c].unwrap_or(0.0)))
                .collect())
        })
        .collect()
}

fn rebuild(table: &DataTable, work: Vec<Vec<f64>>) -> Result<DataTable> {
    let columns = work
        .into_iter()
        .enumerate()
        .map(|(c, values)| {
            let col = table.column(c);
            if !col.has_missing() {
                return col.clone();
            }
            match col.reals() {
                Some(_) => Column::real(values),
                None => Column::codes(values.into_iter().map(|v| v as u32).collect()),
            }
        })
        .collect();
    DataTable::new(table.schema_arc().clone(), columns)
}

fn design_width(blocks: &[Block], target: usize) -> usize {
    blocks
        .iter()
        .filter(|b| b.column() != target)
        .map(|b| match b {
            Block::Real { .. } => 1,
            Block::Codes { levels, .. } => levels.len(),
        })
        .sum()
}

fn design_row(work: &[Vec<f64>], blocks: &[Block], target: usize, row: usize, out: &mut Vec<f64>) {
    out.clear();
    for b in blocks.iter().filter(|b| b.column() != target) {
        match b {
            Block::Real { column, mean, sd } => {
                out.push(if *sd > 0.0 { (work[*column][row] - mean) / sd } else { 0.0 });
            }
            Block::Codes { column, levels } => {
                let v = work[*column][row] as u32;
                out.extend(levels.iter().map(|&l| f64::from(u8::from(v == l))));
            }
        }
    }
}

fn fit_regressor(
    work: &[Vec<f64>],
    blocks: &[Block],
    target: usize,
    rows: &[usize],
    continuous: bool,
) -> Regressor {
    let width = design_width(blocks, target);
    let mut x = DMatrix::zeros(rows.len(), width);
    let mut buf = Vec::with_capacity(width);
    for (i, &r) in rows.iter().enumerate() {
        design_row(work, blocks, target, r, &mut buf);
        for (j, v) in buf.iter().enumerate() {
            x[(i, j)] = *v;
        }
    }
    if continuous {
        let y: Vec<f64> = rows.iter().map(|&r| work[target][r]).collect();
        Regressor::Linear(fit_least_squares(&x, &y, 0.0))
    } else {
        let y: Vec<u32> = rows.iter().map(|&r| work[target][r] as u32).collect();
        Regressor::Class(Classifier::fit(&x, &y, LOGISTIC_LAMBDA))
    }
}

fn predict(reg: &Regressor, work: &[Vec<f64>], blocks: &[Block], target: usize, row: usize, buf: &mut Vec<f64>) -> f64 {
    design_row(work, blocks, target, row, buf);
    match reg {
        Regressor::Linear(m) => m.predict_row(buf),
        Regressor::Class(c) => f64::from(c.predict_row(buf)),
    }
}

struct CycleStats {
    change: f64,
    categorical_changes: usize,
}

/// One pass over `targets` in schema order. With `regressors` entries set to `None` for a
/// target, a model is fitted on the currently observed rows and stored.
fn run_cycle(
    work: &mut [Vec<f64>],
    masks: &[Vec<bool>],
    targets: &[usize],
    blocks: &[Block],
    scales: &[f64],
    continuous: &[bool],
    regressors: &mut [Option<Regressor>],
    refit: bool,
) -> CycleStats {
    let mut abs_change = 0.0;
    let mut n_cells = 0usize;
    let mut categorical_changes = 0;
    let mut buf = Vec::new();
    for &t in targets {
        let missing_rows: Vec<usize> = (0..masks[t].len()).filter(|&r| masks[t][r]).collect();
        if refit {
            let observed: Vec<usize> = (0..masks[t].len()).filter(|&r| !masks[t][r]).collect();
            regressors[t] = Some(fit_regressor(work, blocks, t, &observed, continuous[t]));
        }
        let Some(reg) = regressors[t].as_ref() else {
            continue;
        };
        for &r in &missing_rows {
            let new = predict(reg, work, blocks, t, r, &mut buf);
            let old = work[t][r];
            if continuous[t] {
                abs_change += (new - old).abs() / scales[t];
                n_cells += 1;
            } else if new != old {
                categorical_changes += 1;
            }
            work[t][r] = new;
        }
    }
    CycleStats {
        change: if n_cells == 0 { 0.0 } else { abs_change / n_cells as f64 },
        categorical_changes,
    }
}

/// Fills every masked cell with its column median (continuous) or mode (coded, lowest code on ties).
pub fn impute_median(table: &DataTable) -> Result<DataTable> {
    let fills = fill_values(table);
    let work = initial_fill(table, &fills)?;
    rebuild(table, work)
}

struct ChainedRun {
    work: Vec<Vec<f64>>,
    iterations: usize,
    change: f64,
    categorical_changes: usize,
}

fn chained_in_sample(
    table: &DataTable,
    cfg: &ImputeConfig,
    fills: &[Option<f64>],
    blocks: &[Block],
    scales: &[f64],
) -> Result<ChainedRun> {
    let mut work = initial_fill(table, fills)?;
    let masks: Vec<Vec<bool>> = table.columns().iter().map(|c| c.missing_mask().to_vec()).collect();
    let continuous: Vec<bool> = table.schema().columns().iter().map(|s| s.is_continuous()).collect();
    let targets: Vec<usize> = table
        .schema()
        .feature_indices()
        .into_iter()
        .filter(|&c| table.column(c).has_missing())
        .collect();
    let mut regressors = vec![None; table.n_columns()];
    let (mut iterations, mut change, mut categorical_changes) = (0, f64::INFINITY, 0);
    while iterations < cfg.max_iterations && change > cfg.convergence_tol {
        let stats = run_cycle(&mut work, &masks, &targets, blocks, scales, &continuous, &mut regressors, true);
        change = stats.change;
        categorical_changes = stats.categorical_changes;
        iterations += 1;
    }
    Ok(ChainedRun {
        work,
        iterations,
        change,
        categorical_changes,
    })
}

/// Chained-equations imputation of `table` in place of its own masked cells. Outcome columns
/// are neither regressed nor used as predictors; their masked cells (if any) keep the initial fill.
pub fn impute_chained(table: &DataTable, cfg: &ImputeConfig) -> Result<ImputeOutcome> {
    cfg.validate()?;
    let fills = fill_values(table);
    if cfg.method == ImputeMethod::Median {
        return Ok(ImputeOutcome {
            table: rebuild(table, initial_fill(table, &fills)?)?,
            iterations: 0,
            converged: true,
            final_change: 0.0,
            categorical_changes: 0,
        });
    }
    let blocks = feature_blocks(table);
    let scales = column_scales(table);
    let run = chained_in_sample(table, cfg, &fills, &blocks, &scales)?;
    Ok(ImputeOutcome {
        table: rebuild(table, run.work)?,
        iterations: run.iterations,
        converged: run.change <= cfg.convergence_tol,
        final_change: run.change,
        categorical_changes: run.categorical_changes,
    })
}

/// Imputes with the configured method.
pub fn impute(table: &DataTable, cfg: &ImputeConfig) -> Result<DataTable> {
    impute_chained(table, cfg).map(|o| o.table)
}

/// Fits fill values and, for the chained method, one regressor per feature column on the
/// completed training table.
pub fn fit_imputer(train: &DataTable, cfg: &ImputeConfig) -> Result<ImputerModel> {
    cfg.validate()?;
    let fills = fill_values(train);
    let scales = column_scales(train);
    let blocks = feature_blocks(train);
    let mut regressors = vec![None; train.n_columns()];
    if cfg.method == ImputeMethod::Chained {
        let run = chained_in_sample(train, cfg, &fills, &blocks, &scales)?;
        for c in train.schema().feature_indices() {
            let observed: Vec<usize> = (0..train.n_rows()).filter(|&r| !train.column(c).is_missing(r)).collect();
            if observed.is_empty() {
                continue;
            }
            let continuous = train.spec(c).is_continuous();
            regressors[c] = Some(fit_regressor(&run.work, &blocks, c, &observed, continuous));
        }
    }
    Ok(ImputerModel {
        method: cfg.method,
        schema: train.schema_arc().clone(),
        fills,
        scales,
        blocks,
        regressors,
        max_iterations: cfg.max_iterations,
        convergence_tol: cfg.convergence_tol,
    })
}

/// Imputes `other` with frozen statistics; nothing is refitted on `other`.
pub fn apply_imputer(model: &ImputerModel, other: &DataTable) -> Result<DataTable> {
    model.schema.ensure_compatible(other.schema())?;
    let mut work = initial_fill(other, &model.fills)?;
    if model.method == ImputeMethod::Chained {
        let masks: Vec<Vec<bool>> = other.columns().iter().map(|c| c.missing_mask().to_vec()).collect();
        let continuous: Vec<bool> = other.schema().columns().iter().map(|s| s.is_continuous()).collect();
        let targets: Vec<usize> = other
            .schema()
            .feature_indices()
            .into_iter()
            .filter(|&c| other.column(c).has_missing() && model.regressors[c].is_some())
            .collect();
        let mut regressors = model.regressors.clone();
        let (mut iterations, mut change) = (0, f64::INFINITY);
        while iterations < model.max_iterations && change > model.convergence_tol {
            change = run_cycle(
                &mut work,
                &masks,
                &targets,
                &model.blocks,
                &model.scales,
                &continuous,
                &mut regressors,
                false,
            )
            .change;
            iterations += 1;
        }
    }
    rebuild(other, work)
}
