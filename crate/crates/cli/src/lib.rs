//! Command-line front end: argument parsing and the subcommand drivers.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use synthaudit::data::{DataTable, DatasetSchema};
use synthaudit::generate::{equalize_column, fit_copula, fit_equalizer, sample_copula};
use synthaudit::harness::{full_audit, stratified_split, AuditConfig, ModelFamily, SyntheticInput};
use synthaudit::impute::{impute, ImputeConfig, ImputeMethod};
use synthaudit::ingest::{load_table_with, write_table, LoadOptions, SchemaConfig};
use synthaudit::seed::{self, DEFAULT_SEED};
use synthaudit::{par, AuditError};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INVALID: u8 = 1;
pub const EXIT_PARTIAL: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "synthaudit", version, about = "Audit synthetic survival data against the real cohort it imitates")]
pub struct Cli {
    /// Worker threads; 0 uses every core
    #[arg(long, global = true, env = "SYNTHAUDIT_THREADS", default_value_t = 0)]
    pub threads: usize,
    /// Print progress to stderr
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fidelity, utility and privacy report for one or more synthetic tables
    Audit(AuditArgs),
    /// Fit a Gaussian copula to a table and sample from it
    Generate(GenerateArgs),
    /// Map one column onto the distribution of the same column in a reference table
    Equalize(EqualizeArgs),
    /// Fill missing feature cells
    Impute(ImputeArgs),
    /// Stratified 70/10/20 train/validation/test split
    Split(SplitArgs),
}

#[derive(Debug, Args)]
pub struct SchemaArg {
    /// Schema file (TOML); defaults to the bundled heart-failure schema
    #[arg(long, value_name = "PATH")]
    pub schema: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    /// Real data table
    #[arg(long, value_name = "PATH")]
    pub real: PathBuf,
    /// Synthetic table, optionally named as NAME=PATH; repeatable
    #[arg(long = "synth", value_name = "[NAME=]PATH", required = true)]
    pub synth: Vec<String>,
    #[command(flatten)]
    pub schema: SchemaArg,
    /// Report output (JSON)
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// Also write the utility table (TSV)
    #[arg(long, value_name = "PATH")]
    pub table: Option<PathBuf>,
    /// Imputation method: median or chained
    #[arg(long, default_value = "chained")]
    pub impute: ImputeMethod,
    /// Add a section per synthetic table with its time column equalized to the real one
    #[arg(long)]
    pub equalize: bool,
    /// Keep implausible synthetic rows
    #[arg(long)]
    pub no_filter: bool,
    /// Model families, comma separated: cox, rsf
    #[arg(long, value_delimiter = ',', default_value = "cox,rsf")]
    pub models: Vec<ModelFamily>,
    /// Root seed
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Folds of the membership attack
    #[arg(long, default_value_t = 4)]
    pub mia_folds: usize,
    /// Folds of the attribute attack
    #[arg(long, default_value_t = 5)]
    pub aia_folds: usize,
    /// Subsampling rounds of the adversarial accuracy
    #[arg(long, default_value_t = 30)]
    pub nnaa_iterations: usize,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Table to fit
    #[arg(long, value_name = "PATH")]
    pub fit: PathBuf,
    /// Rows to sample
    #[arg(long)]
    pub n: usize,
    /// Random seed
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Output table
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// Do not mask cells at the fitted missing rates
    #[arg(long)]
    pub complete: bool,
    #[command(flatten)]
    pub schema: SchemaArg,
}

#[derive(Debug, Args)]
pub struct EqualizeArgs {
    /// Column to equalize
    #[arg(long, default_value = "Days")]
    pub col: String,
    /// Table whose column is the target distribution
    #[arg(long, value_name = "PATH")]
    pub reference: PathBuf,
    /// Table to transform
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    /// Output table
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    #[command(flatten)]
    pub schema: SchemaArg,
}

#[derive(Debug, Args)]
pub struct ImputeArgs {
    /// Table to fill
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    /// Output table
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// median or chained
    #[arg(long, default_value = "chained")]
    pub method: ImputeMethod,
    /// Cycle limit of chained imputation
    #[arg(long, default_value_t = 100)]
    pub max_iterations: usize,
    /// Random seed
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub schema: SchemaArg,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Table to split
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    /// Prefix of the train.csv, valid.csv and test.csv outputs
    #[arg(long, value_name = "PREFIX")]
    pub out_prefix: String,
    /// Random seed
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub schema: SchemaArg,
}

#[derive(Debug)]
enum Failure {
    Invalid(AuditError),
    Partial(Vec<String>),
}

impl From<AuditError> for Failure {
    fn from(e: AuditError) -> Self {
        Failure::Invalid(e)
    }
}

struct Inputs {
    schema: DatasetSchema,
    options: LoadOptions,
}

impl Inputs {
    fn new(arg: &SchemaArg) -> Result<Self, Failure> {
        let cfg = match &arg.schema {
            Some(p) => SchemaConfig::load(p)?,
            None => SchemaConfig::reference(),
        };
        Ok(Inputs {
            schema: cfg.schema,
            options: LoadOptions {
                missing_tokens: cfg.missing_tokens,
                ..LoadOptions::default()
            },
        })
    }

    fn load(&self, path: &Path) -> Result<DataTable, Failure> {
        let mut opts = self.options.clone();
        if matches!(path.extension().and_then(|e| e.to_str()), Some("tsv" | "tab")) {
            opts.delimiter = b'\t';
        }
        Ok(load_table_with(path, &self.schema, &opts)?)
    }
}

fn require_files<'a>(paths: impl IntoIterator<Item = &'a Path>) -> Result<(), Failure> {
    for p in paths {
        if !p.is_file() {
            return Err(Failure::Invalid(AuditError::Config(format!("no such file: {}", p.display()))));
        }
    }
    Ok(())
}

fn named_input(spec: &str) -> (String, PathBuf) {
    match spec.split_once('=') {
        Some((name, path)) if !name.is_empty() => (name.to_string(), PathBuf::from(path)),
        _ => {
            let path = PathBuf::from(spec);
            let name = path.file_stem().map_or_else(|| spec.to_string(), |s| s.to_string_lossy().into_owned());
            (name, path)
        }
    }
}

fn audit(args: &AuditArgs, verbose: bool) -> Result<(), Failure> {
    let synths: Vec<(String, PathBuf)> = args.synth.iter().map(|s| named_input(s)).collect();
    let mut paths: Vec<&Path> = vec![&args.real];
    paths.extend(synths.iter().map(|(_, p)| p.as_path()));
    paths.extend(args.schema.schema.as_deref());
    require_files(paths)?;
    let inputs = Inputs::new(&args.schema)?;
    let real = inputs.load(&args.real)?;
    let mut synthetic = Vec::with_capacity(synths.len());
    for (name, path) in &synths {
        synthetic.push(SyntheticInput::new(name.clone(), inputs.load(path)?).equalized(args.equalize));
    }
    let cfg = AuditConfig {
        seed: args.seed,
        impute_method: args.impute,
        families: args.models.clone(),
        mia_folds: args.mia_folds,
        aia_folds: args.aia_folds,
        nnaa_iterations: args.nnaa_iterations,
        filter_synthetic: !args.no_filter,
        ..AuditConfig::default()
    };
    if verbose {
        eprintln!("auditing {} synthetic table(s) against {} real rows", synthetic.len(), real.n_rows());
    }
    let report = full_audit(&real, &synthetic, &cfg)?;
    let json = report.to_json()?;
    std::fs::write(&args.out, json + "\n").map_err(|e| AuditError::io(args.out.display().to_string(), e))?;
    if let Some(path) = &args.table {
        std::fs::write(path, report.utility_table()).map_err(|e| AuditError::io(path.display().to_string(), e))?;
    }
    if verbose {
        eprint!("{}", report.utility_table());
    }
    let failures = report.failures();
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Partial(failures))
    }
}

fn generate(args: &GenerateArgs) -> Result<(), Failure> {
    require_files([args.fit.as_path()].into_iter().chain(args.schema.schema.as_deref()))?;
    let inputs = Inputs::new(&args.schema)?;
    let model = fit_copula(&inputs.load(&args.fit)?, seed::derive(args.seed, "copula"))?;
    write_table(&args.out, &sample_copula(&model, args.n, !args.complete)?)?;
    Ok(())
}

fn equalize(args: &EqualizeArgs) -> Result<(), Failure> {
    require_files([args.reference.as_path(), &args.input].into_iter().chain(args.schema.schema.as_deref()))?;
    let inputs = Inputs::new(&args.schema)?;
    let reference = inputs.load(&args.reference)?;
    let map = fit_equalizer(&reference.column_by_name(&args.col)?.observed_reals())?;
    write_table(&args.out, &equalize_column(&inputs.load(&args.input)?, &args.col, &map)?)?;
    Ok(())
}

fn impute_cmd(args: &ImputeArgs) -> Result<(), Failure> {
    require_files([args.input.as_path()].into_iter().chain(args.schema.schema.as_deref()))?;
    let inputs = Inputs::new(&args.schema)?;
    let cfg = ImputeConfig {
        method: args.method,
        max_iterations: args.max_iterations,
        seed: seed::derive(args.seed, "impute"),
        ..ImputeConfig::default()
    };
    write_table(&args.out, &impute(&inputs.load(&args.input)?, &cfg)?)?;
    Ok(())
}

fn split(args: &SplitArgs) -> Result<(), Failure> {
    require_files([args.input.as_path()].into_iter().chain(args.schema.schema.as_deref()))?;
    let inputs = Inputs::new(&args.schema)?;
    let table = inputs.load(&args.input)?;
    let plan = stratified_split(&table, args.seed)?;
    for (part, rows) in [("train", &plan.train), ("valid", &plan.valid), ("test", &plan.test)] {
        write_table(format!("{}{part}.csv", args.out_prefix), &table.select_rows(rows))?;
    }
    Ok(())
}

/// Runs a parsed command line; the exit code is 0 on success, 1 on invalid input or
/// configuration and 2 when the audit report was written but some metric failed.
pub fn run(cli: &Cli) -> ExitCode {
    let outcome = par::with_threads(cli.threads, || match &cli.command {
        Command::Audit(a) => audit(a, cli.verbose),
        Command::Generate(a) => generate(a),
        Command::Equalize(a) => equalize(a),
        Command::Impute(a) => impute_cmd(a),
        Command::Split(a) => split(a),
    });
    match outcome {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INVALID)
        }
        Err(Failure::Partial(failures)) => {
            for f in failures {
                eprintln!("metric failed: {f}");
            }
            ExitCode::from(EXIT_PARTIAL)
        }
    }
}
