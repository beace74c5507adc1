//! Command-line driver.
//!
//! Every subcommand renders all of its outputs in memory first and writes
//! them only once nothing can fail, so a non-zero exit leaves no files
//! behind. Without `--out` the primary output goes to stdout.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::baseline::{baseline_relations, BaselineConfig};
use crate::error::Error;
use crate::inference::{infer_dataset, ConstraintMode, OnInfeasible, SolverConfig, Threads};
use crate::ingest::{load_dataset, read_records, render_records, DatasetFormat, ParsedDataset, Record};
use crate::metrics::{evaluate, mcnemar};
use crate::model::{build_groups, ExactlyOnePolicy, GroupingMode, ValidationReport};
use crate::selftrain::{filter_labels, gold_pairs, relation_accuracy};
use crate::synth::{generate, render_bundle, SynthConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "mcinfer", version, about = "Consistency inference over multiple-choice answers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Count entities and list integrity violations.
    Validate {
        #[command(flatten)]
        dataset: DatasetArgs,
        /// Exit with status 2 when there are violations.
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score every in-group pair with the lexical baseline.
    BaselineRelations {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[arg(long, value_enum, default_value_t = ModeArg::WithinQuestion)]
        mode: ModeArg,
        /// Jaccard overlap at which a pair stops being neutral.
        #[arg(long, default_value_t = 0.5)]
        overlap: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve every group and write predictions.
    Infer {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        relations: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate relation labels from gold, optionally filtered by predictions.
    Selftrain {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[arg(long, value_enum, default_value_t = ModeArg::WithinQuestion)]
        mode: ModeArg,
        /// Predicted relations; without them labels come from gold alone.
        #[arg(long)]
        relations: Option<PathBuf>,
        /// Where to write the accuracy of the predicted relations on gold pairs.
        #[arg(long, requires = "relations")]
        report: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a seeded synthetic bundle.
    Synth {
        /// JSON configuration; missing fields take their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Exact match, accuracy and an optional McNemar comparison.
    Eval {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[arg(long)]
        predictions: PathBuf,
        /// Second prediction file to compare against with McNemar's test.
        #[arg(long)]
        predictions_b: Option<PathBuf>,
        /// McNemar's statistic without continuity correction.
        #[arg(long)]
        uncorrected: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct DatasetArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Canonical)]
    format: FormatArg,
}

#[derive(Debug, Args)]
struct SolverArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::WithinQuestion)]
    mode: ModeArg,
    #[arg(long, value_enum, default_value_t = ExactlyOneArg::Auto)]
    exactly_one: ExactlyOneArg,
    #[arg(long, value_enum, default_value_t = ConstraintArg::Soft)]
    constraint: ConstraintArg,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 0.5)]
    tau: f64,
    #[arg(long, value_enum, default_value_t = OnInfeasibleArg::FallbackSoft)]
    on_infeasible: OnInfeasibleArg,
    /// Worker threads: a positive integer or `auto`.
    #[arg(long, default_value = "auto", value_parser = parse_threads)]
    threads: Threads,
}

fn parse_threads(s: &str) -> Result<Threads, String> {
    if s == "auto" {
        return Ok(Threads::Auto);
    }
    match s.parse::<usize>() {
        Ok(n) if n > 0 => Ok(Threads::Fixed(n)),
        _ => Err(format!("expected a positive integer or 'auto', got '{s}'")),
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Canonical,
    Multirc,
    Semeval,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    WithinQuestion,
    CrossQuestion,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ExactlyOneArg {
    Auto,
    On,
    Off,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ConstraintArg {
    Soft,
    Hard,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OnInfeasibleArg {
    Error,
    FallbackSoft,
}

impl From<FormatArg> for DatasetFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Canonical => DatasetFormat::Canonical,
            FormatArg::Multirc => DatasetFormat::Multirc,
            FormatArg::Semeval => DatasetFormat::Semeval,
        }
    }
}

impl From<ModeArg> for GroupingMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::WithinQuestion => GroupingMode::WithinQuestion,
            ModeArg::CrossQuestion => GroupingMode::CrossQuestion,
        }
    }
}

impl From<ExactlyOneArg> for ExactlyOnePolicy {
    fn from(e: ExactlyOneArg) -> Self {
        match e {
            ExactlyOneArg::Auto => ExactlyOnePolicy::Auto,
            ExactlyOneArg::On => ExactlyOnePolicy::On,
            ExactlyOneArg::Off => ExactlyOnePolicy::Off,
        }
    }
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            constraint_mode: match self.constraint {
                ConstraintArg::Soft => ConstraintMode::Soft,
                ConstraintArg::Hard => ConstraintMode::Hard,
            },
            lambda: self.lambda,
            tau_rel: self.tau,
            on_infeasible: match self.on_infeasible {
                OnInfeasibleArg::Error => OnInfeasible::Error,
                OnInfeasibleArg::FallbackSoft => OnInfeasible::FallbackSoft,
            },
        }
    }
}

/// A failed run: exit status plus message.
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Infeasible { .. } => EXIT_INFEASIBLE,
            _ => EXIT_DATA,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

/// Everything a run produces, held back until the run has succeeded.
#[derive(Default)]
struct Outputs {
    files: Vec<(PathBuf, String)>,
    stdout: String,
    warnings: Vec<String>,
}

impl Outputs {
    fn primary(&mut self, out: Option<PathBuf>, text: String) {
        match out {
            Some(path) => self.files.push((path, text)),
            None => self.stdout.push_str(&text),
        }
    }

    fn commit(self, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), Failure> {
        for warning in &self.warnings {
            let _ = writeln!(stderr, "warning: {warning}");
        }
        for (path, text) in &self.files {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            fs::write(path, text).map_err(|e| Error::io(path, e))?;
        }
        let _ = stdout.write_all(self.stdout.as_bytes());
        Ok(())
    }
}

fn pretty<T: Serialize>(value: &T) -> Result<String, Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::schema(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

fn load(args: &DatasetArgs, outputs: &mut Outputs) -> Result<ParsedDataset, Failure> {
    let parsed = load_dataset(&args.dataset, args.format.into())?;
    if parsed.missing_gold > 0 {
        outputs.warnings.push(format!(
            "{}: {} choice(s) have no gold label",
            args.dataset.display(),
            parsed.missing_gold
        ));
    }
    Ok(parsed)
}

/// Load a dataset that must pass integrity checks.
fn load_valid(args: &DatasetArgs, outputs: &mut Outputs) -> Result<ParsedDataset, Failure> {
    let parsed = load(args, outputs)?;
    let structural = crate::model::validate_dataset(&parsed.dataset);
    if let Some(first) = structural.violations.first() {
        return Err(Error::schema(format!(
            "{}: {} integrity violation(s), first: {first}",
            args.dataset.display(),
            structural.violations.len()
        ))
        .into());
    }
    Ok(parsed)
}

fn records<T: Record>(path: &Path, outputs: &mut Outputs) -> Result<Vec<T>, Failure> {
    let file = read_records::<T>(path)?;
    if file.unknown_fields > 0 {
        outputs
            .warnings
            .push(format!("{}: ignored {} unknown field(s)", path.display(), file.unknown_fields));
    }
    Ok(file.records)
}

#[derive(Serialize)]
struct ValidateReport<'a> {
    #[serde(flatten)]
    report: &'a ValidationReport,
    missing_gold: usize,
    valid: bool,
}

fn execute(cli: Cli, outputs: &mut Outputs) -> Result<(), Failure> {
    match cli.command {
        Command::Validate { dataset, strict, out } => {
            let parsed = load(&dataset, outputs)?;
            let valid = parsed.report.is_valid();
            if strict && !valid {
                return Err(Failure {
                    code: EXIT_DATA,
                    message: format!(
                        "{}: {} violation(s), first: {}",
                        dataset.dataset.display(),
                        parsed.report.violations.len(),
                        parsed.report.violations[0]
                    ),
                });
            }
            let text = pretty(&ValidateReport {
                report: &parsed.report,
                missing_gold: parsed.missing_gold,
                valid,
            })?;
            outputs.primary(out, text);
        }
        Command::BaselineRelations {
            dataset,
            mode,
            overlap,
            out,
        } => {
            if !(0.0..=1.0).contains(&overlap) {
                return Err(usage(format!("--overlap must lie in [0, 1], got {overlap}")));
            }
            let parsed = load_valid(&dataset, outputs)?;
            let groups = build_groups(&parsed.dataset, mode.into(), ExactlyOnePolicy::Off)?;
            let config = BaselineConfig {
                overlap_threshold: overlap,
            };
            let relations = baseline_relations(&parsed.dataset, &groups, &config)?;
            outputs.primary(out, render_records(&relations)?);
        }
        Command::Infer {
            dataset,
            scores,
            relations,
            solver,
            out,
        } => {
            let config = solver.config();
            config.check().map_err(|e| usage(e.to_string()))?;
            let parsed = load_valid(&dataset, outputs)?;
            let scores = records(&scores, outputs)?;
            let relations = records(&relations, outputs)?;
            let output = infer_dataset(
                &parsed.dataset,
                &scores,
                &relations,
                solver.mode.into(),
                solver.exactly_one.into(),
                &config,
                solver.threads,
            )?;
            if !output.fell_back.is_empty() {
                outputs.warnings.push(format!(
                    "{} group(s) had infeasible hard constraints and were solved softly: {}",
                    output.fell_back.len(),
                    output.fell_back.join(", ")
                ));
            }
            outputs.primary(out, render_records(&output.predictions)?);
        }
        Command::Selftrain {
            dataset,
            mode,
            relations,
            report,
            out,
        } => {
            let parsed = load_valid(&dataset, outputs)?;
            let gold = gold_pairs(&parsed.dataset, mode.into())?;
            let pairs = match &relations {
                None => gold,
                Some(path) => {
                    let predicted = records(path, outputs)?;
                    let filtered = filter_labels(&predicted, &parsed.dataset.gold_labels())?;
                    if let Some(report) = report {
                        let accuracy = relation_accuracy(&predicted, &gold)?;
                        outputs.files.push((report, pretty(&accuracy)?));
                    }
                    filtered
                }
            };
            outputs.primary(out, render_records(&pairs)?);
        }
        Command::Synth {
            config,
            seed,
            mode,
            out_dir,
        } => {
            let mut synth = match &config {
                Some(path) => {
                    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                    serde_json::from_str::<SynthConfig>(&text).map_err(|e| {
                        Error::schema(format!("{}: line {}: {e}", path.display(), e.line()))
                    })?
                }
                None => SynthConfig::default(),
            };
            if let Some(seed) = seed {
                synth.seed = seed;
            }
            if let Some(mode) = mode {
                synth.mode = mode.into();
            }
            let bundle = generate(&synth)?;
            for (name, text) in render_bundle(&bundle, &synth)? {
                outputs.files.push((out_dir.join(name), text));
            }
        }
        Command::Eval {
            dataset,
            predictions,
            predictions_b,
            uncorrected,
            out,
        } => {
            let parsed = load_valid(&dataset, outputs)?;
            let preds = records(&predictions, outputs)?;
            let mut report = evaluate(&parsed.dataset, &preds)?;
            if report.unlabeled_predictions > 0 {
                outputs.warnings.push(format!(
                    "{}: {} prediction(s) for unlabeled choices were ignored",
                    predictions.display(),
                    report.unlabeled_predictions
                ));
            }
            if let Some(path) = &predictions_b {
                let other = records(path, outputs)?;
                report.mcnemar = Some(mcnemar(&parsed.dataset, &preds, &other, !uncorrected)?);
            }
            outputs.primary(out, pretty(&report)?);
        }
    }
    Ok(())
}

/// Run with explicit streams; returns the exit status.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = stderr.write_all(rendered.as_bytes());
            } else {
                let _ = stdout.write_all(rendered.as_bytes());
            }
            return code;
        }
    };
    let mut outputs = Outputs::default();
    let result = execute(cli, &mut outputs).and_then(|()| outputs.commit(stdout, stderr));
    match result {
        Ok(()) => EXIT_OK,
        Err(failure) => {
            let _ = writeln!(stderr, "error: {}", failure.message);
            failure.code
        }
    }
}

/// Run against the process's stdout and stderr; `args[0]` is the program name.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run_with(std::iter::once("mcinfer").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run_capture(&[]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["frobnicate"]).0, EXIT_USAGE);
        let (code, _, err) = run_capture(&["infer", "--dataset", "d", "--scores", "s", "--relations", "r", "--threads", "0"]);
        assert_eq!(code, EXIT_USAGE, "{err}");
        let (code, _, err) = run_capture(&["infer", "--dataset", "d", "--scores", "s", "--relations", "r", "--tau", "2"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("tau"), "{err}");
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run_capture(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("infer"));
    }

    #[test]
    fn missing_dataset_exits_two() {
        let (code, _, err) = run_capture(&["validate", "--dataset", "/nonexistent/d.json"]);
        assert_eq!(code, EXIT_DATA);
        assert!(err.contains("/nonexistent/d.json"), "{err}");
    }

    #[test]
    fn thread_flag() {
        assert_eq!(parse_threads("auto"), Ok(Threads::Auto));
        assert_eq!(parse_threads("8"), Ok(Threads::Fixed(8)));
        assert!(parse_threads("-1").is_err());
    }
}
