use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::DataTable;
use crate::error::{AuditError, Result};
use crate::fidelity::{feature_preservation, km_metrics, similarity_scores, FeaturePreservation, KmMetrics, SimilarityScores};
use crate::generate::{equalize_column, fit_equalizer};
use crate::harness::grid::{ModelFamily, ModelGrids};
use crate::harness::paradigm::{run_paradigm, Paradigm, PreparedData, UtilityScore};
use crate::harness::split::SplitPlan;
use crate::impute::{ImputeConfig, ImputeMethod};
use crate::ingest::{
    clip_to_ranges, compare_profiles, filter_implausible, has_indicator_columns, missingness_profile,
    reapply_embedded_missingness, table_to_string, ClipReport, MissingnessComparison, PlausibilityRules,
};
use crate::par;
use crate::privacy::{exact_match, privacy_report, Outcome, PrivacyConfig, PrivacyReport};
use crate::seed::{self, DEFAULT_SEED};
use crate::survival::{kaplan_meier, SurvivalData};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    pub seed: u64,
    pub impute_method: ImputeMethod,
    pub impute_max_iterations: usize,
    pub impute_tolerance: f64,
    pub families: Vec<ModelFamily>,
    pub grids: ModelGrids,
    pub mia_folds: usize,
    pub aia_folds: usize,
    pub nnaa_iterations: usize,
    /// Drop implausible synthetic rows before anything else.
    pub filter_synthetic: bool,
}

impl Default for AuditConfig {
    fn default() -> Self {
        let privacy = PrivacyConfig::default();
        let impute = ImputeConfig::default();
        AuditConfig {
            seed: DEFAULT_SEED,
            impute_method: impute.method,
            impute_max_iterations: impute.max_iterations,
            impute_tolerance: impute.convergence_tol,
            families: ModelFamily::ALL.to_vec(),
            grids: ModelGrids::default(),
            mia_folds: privacy.mia_folds,
            aia_folds: privacy.aia_folds,
            nnaa_iterations: privacy.nnaa_iterations,
            filter_synthetic: true,
        }
    }
}

impl AuditConfig {
    pub fn impute_config(&self) -> ImputeConfig {
        ImputeConfig {
            method: self.impute_method,
            max_iterations: self.impute_max_iterations,
            convergence_tol: self.impute_tolerance,
            seed: seed::derive(self.seed, "impute"),
        }
    }

    pub fn privacy_config(&self) -> PrivacyConfig {
        PrivacyConfig {
            mia_folds: self.mia_folds,
            aia_folds: self.aia_folds,
            nnaa_iterations: self.nnaa_iterations,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.impute_config().validate()?;
        if self.families.is_empty() {
            return Err(AuditError::Config("no model families selected".into()));
        }
        for f in &self.families {
            if self.grids.candidates(*f).is_empty() {
                return Err(AuditError::Config(format!("empty {f} grid")));
            }
        }
        if self.mia_folds < 2 || self.aia_folds < 2 || self.nnaa_iterations == 0 {
            return Err(AuditError::Config("folds must be at least 2 and iterations at least 1".into()));
        }
        Ok(())
    }
}

/// A synthetic table to audit. With `equalize`, the report gets a second section for the same
/// data with its time column equalized to the real train+valid times.
#[derive(Debug, Clone)]
pub struct SyntheticInput {
    pub name: String,
    pub table: DataTable,
    pub equalize: bool,
}

impl SyntheticInput {
    pub fn new(name: impl Into<String>, table: DataTable) -> Self {
        SyntheticInput {
            name: name.into(),
            table,
            equalize: false,
        }
    }

    pub fn equalized(mut self, on: bool) -> Self {
        self.equalize = on;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub train: usize,
    pub valid: usize,
    pub test: usize,
    pub events_train: usize,
    pub events_valid: usize,
    pub events_test: usize,
}

impl SplitSummary {
    fn new(table: &DataTable, plan: &SplitPlan) -> Self {
        let ev = table.column(table.schema().event_index());
        let count = |rows: &[usize]| rows.iter().filter(|&&r| ev.code(r) == Some(1)).count();
        SplitSummary {
            train: plan.train.len(),
            valid: plan.valid.len(),
            test: plan.test.len(),
            events_train: count(&plan.train),
            events_valid: count(&plan.valid),
            events_test: count(&plan.test),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub name: String,
    /// SHA-256 of the input table in the canonical text format.
    pub sha256: String,
    pub n_rows: usize,
    pub n_columns: usize,
    pub missing_cells: usize,
}

impl DatasetInfo {
    fn of(name: &str, table: &DataTable) -> Self {
        DatasetInfo {
            name: name.to_string(),
            sha256: hex::encode(Sha256::digest(table_to_string(table).as_bytes())),
            n_rows: table.n_rows(),
            n_columns: table.n_columns(),
            missing_cells: table.columns().iter().map(|c| c.n_missing()).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityCell {
    pub paradigm: Paradigm,
    pub family: ModelFamily,
    pub result: Outcome<UtilityScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealSection {
    pub input: DatasetInfo,
    pub clipped: ClipReport,
    pub split: SplitSummary,
    pub utility: Vec<UtilityCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSummary {
    pub rows_in: usize,
    pub rows_dropped: usize,
    pub drop_rate: f64,
    pub indicators_applied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticBody {
    pub filter: FilterSummary,
    pub split: SplitSummary,
    pub missingness: Vec<MissingnessComparison>,
    pub fidelity: Outcome<SimilarityScores>,
    pub km: Outcome<KmMetrics>,
    pub preservation: Outcome<FeaturePreservation>,
    pub utility: Vec<UtilityCell>,
    pub privacy: PrivacyReport,
    /// Some synthetic row duplicates a real record.
    pub leakage: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSection {
    pub name: String,
    pub equalized: bool,
    pub input: DatasetInfo,
    pub body: Outcome<SyntheticBody>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub tool: String,
    pub version: String,
    pub config: AuditConfig,
    pub real: RealSection,
    pub synthetic: Vec<SyntheticSection>,
}

fn failures_of<T>(prefix: &str, o: &Outcome<T>) -> Option<String> {
    o.failure().map(|m| format!("{prefix}: {m}"))
}

fn utility_failures(prefix: &str, cells: &[UtilityCell]) -> Vec<String> {
    cells
        .iter()
        .filter_map(|c| failures_of(&format!("{prefix} {} {}", c.paradigm, c.family), &c.result))
        .collect()
}

impl MetricReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| AuditError::Numerical(format!("report serialization: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| AuditError::Config(format!("report parse: {e}")))
    }

    /// Every failed section or metric, as `<location>: <message>`.
    pub fn failures(&self) -> Vec<String> {
        let mut out = utility_failures("real", &self.real.utility);
        for s in &self.synthetic {
            let label = if s.equalized { format!("{} (equalized)", s.name) } else { s.name.clone() };
            match &s.body {
                Outcome::Failed(m) => out.push(format!("{label}: {m}")),
                Outcome::Ok(b) => {
                    out.extend(failures_of(&format!("{label} fidelity"), &b.fidelity));
                    out.extend(failures_of(&format!("{label} km"), &b.km));
                    out.extend(failures_of(&format!("{label} preservation"), &b.preservation));
                    out.extend(utility_failures(&label, &b.utility));
                    out.extend(b.privacy.failures().into_iter().map(|m| format!("{label} privacy {m}")));
                }
            }
        }
        out
    }

    /// Tab-separated utility table: one row per dataset and paradigm, one column per model
    /// family, cells `C-index (IBS)`.
    pub fn utility_table(&self) -> String {
        let mut out = String::from("dataset\tparadigm");
        for f in &self.config.families {
            out.push('\t');
            out.push_str(&f.to_string());
        }
        out.push('\n');
        let mut rows = |name: &str, cells: &[UtilityCell]| {
            let mut paradigms: Vec<Paradigm> = cells.iter().map(|c| c.paradigm).collect();
            paradigms.dedup();
            for p in paradigms {
                out.push_str(&format!("{name}\t{p}"));
                for f in &self.config.families {
                    let cell = cells.iter().find(|c| c.paradigm == p && c.family == *f);
                    out.push('\t');
                    out.push_str(&match cell.map(|c| &c.result) {
                        Some(Outcome::Ok(u)) => format!("{:.3} ({:.3})", u.c_index, u.ibs),
                        Some(Outcome::Failed(_)) => "failed".to_string(),
                        None => "-".to_string(),
                    });
                }
                out.push('\n');
            }
        };
        rows("real", &self.real.utility);
        for s in &self.synthetic {
            let name = if s.equalized { format!("{}+eq", s.name) } else { s.name.clone() };
            match &s.body {
                Outcome::Ok(b) => rows(&name, &b.utility),
                Outcome::Failed(_) => rows(&name, &[]),
            }
        }
        out
    }
}

fn base_table(table: &DataTable) -> Result<DataTable> {
    let keep: Vec<usize> = (0..table.n_columns()).filter(|&c| !table.spec(c).is_missing_indicator()).collect();
    if keep.len() == table.n_columns() {
        Ok(table.clone())
    } else {
        table.project(&keep)
    }
}

fn utility_cells(
    real: &PreparedData,
    synth: Option<&PreparedData>,
    paradigms: &[Paradigm],
    cfg: &AuditConfig,
) -> Vec<UtilityCell> {
    let jobs: Vec<(Paradigm, ModelFamily)> =
        paradigms.iter().flat_map(|&p| cfg.families.iter().map(move |&f| (p, f))).collect();
    par::map(&jobs, |&(paradigm, family)| UtilityCell {
        paradigm,
        family,
        result: Outcome::from_result(run_paradigm(real, synth, paradigm, family, &cfg.grids, cfg.seed)),
    })
}

struct Prepared<'a> {
    input: &'a SyntheticInput,
    equalize: bool,
}

fn synthetic_body(
    real: &PreparedData,
    real_raw: &DataTable,
    job: &Prepared<'_>,
    cfg: &AuditConfig,
) -> Result<SyntheticBody> {
    let input = &job.input.table;
    real.raw.schema().ensure_compatible(base_table(input)?.schema())?;
    let filtered = if cfg.filter_synthetic {
        filter_implausible(input, &PlausibilityRules::for_schema(input.schema()))?
    } else {
        filter_implausible(
            input,
            &PlausibilityRules {
                pressure: None,
                ranges: false,
                positive_time: false,
            },
        )?
    };
    let indicators_applied = has_indicator_columns(&filtered.table);
    let mut table = if indicators_applied {
        reapply_embedded_missingness(&filtered.table)?
    } else {
        filtered.table.clone()
    };
    if job.equalize {
        let schema = real.raw.schema();
        let time = &schema.column(schema.time_index()).name;
        let reference = real.raw.select_rows(&real.plan.train_valid()).column(schema.time_index()).observed_reals();
        table = equalize_column(&table, time, &fit_equalizer(&reference)?)?;
    }
    let table = table.with_schema(real.raw.schema_arc().clone())?;
    let filter = FilterSummary {
        rows_in: input.n_rows(),
        rows_dropped: filtered.dropped.len(),
        drop_rate: filtered.drop_rate(),
        indicators_applied,
    };
    let synth = PreparedData::new(table, &cfg.impute_config(), cfg.seed)?;
    let real_tv = real.train_valid();
    let missingness = compare_profiles(
        &missingness_profile(&real.raw.select_rows(&real.plan.train_valid())),
        &missingness_profile(&synth.raw),
    );
    let fidelity = Outcome::from_result(similarity_scores(&real_tv, &synth.imputed));
    let km = Outcome::from_result((|| {
        let curve = |t: &DataTable| -> Result<_> {
            let times: Vec<f64> = t.times().into_iter().map(|v| v.unwrap_or(f64::NAN)).collect();
            let events: Vec<bool> = t.events().into_iter().map(|v| v == Some(true)).collect();
            kaplan_meier(&times, &events)
        };
        km_metrics(&curve(&real_tv)?, &curve(&synth.imputed)?)
    })());
    let preservation = Outcome::from_result((|| {
        let enc = SurvivalData::encoder(&real_tv, None);
        feature_preservation(&SurvivalData::from_table(&real_tv, &enc)?, &SurvivalData::from_table(&synth.imputed, &enc)?)
    })());
    let utility = utility_cells(real, Some(&synth), &Paradigm::SYNTHETIC, cfg);
    let mut privacy = privacy_report(&real_tv, &real.test(), &synth.imputed, &cfg.privacy_config());
    privacy.exact_match = Outcome::from_result(exact_match(real_raw, &synth.raw));
    let leakage = privacy.exact_match.ok().is_some_and(|m| m.n_matched > 0);
    Ok(SyntheticBody {
        filter,
        split: SplitSummary::new(&synth.raw, &synth.plan),
        missingness,
        fidelity,
        km,
        preservation,
        utility,
        privacy,
        leakage,
    })
}

/// Audits every synthetic table against `real`. Only problems with the real table or the
/// configuration are errors; anything failing inside a synthetic section is recorded there.
pub fn full_audit(real: &DataTable, synths: &[SyntheticInput], cfg: &AuditConfig) -> Result<MetricReport> {
    cfg.validate()?;
    let base = base_table(real)?;
    let (clipped_raw, clipped) = clip_to_ranges(&base)?;
    let prepared = PreparedData::new(clipped_raw, &cfg.impute_config(), cfg.seed)
        .map_err(|e| e.context("real data"))?;
    let real_section = RealSection {
        input: DatasetInfo::of("real", real),
        clipped,
        split: SplitSummary::new(&prepared.raw, &prepared.plan),
        utility: utility_cells(&prepared, None, &[Paradigm::Trtr], cfg),
    };
    let jobs: Vec<Prepared<'_>> = synths
        .iter()
        .flat_map(|s| {
            let plain = std::iter::once(Prepared { input: s, equalize: false });
            plain.chain(s.equalize.then_some(Prepared { input: s, equalize: true }))
        })
        .collect();
    let synthetic = par::map(&jobs, |job| SyntheticSection {
        name: job.input.name.clone(),
        equalized: job.equalize,
        input: DatasetInfo::of(&job.input.name, &job.input.table),
        body: Outcome::from_result(synthetic_body(&prepared, &base, job, cfg)),
    });
    Ok(MetricReport {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        real: real_section,
        synthetic,
    })
}
