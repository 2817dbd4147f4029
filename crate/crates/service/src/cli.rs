//! `combscore` command line.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use combscore_core::dataset::{export_canonical, load_canonical, load_source, split_paths, stats_for_splits, SourceMapping};
use combscore_core::evaluation::{evaluate_corpus, load_predictions};
use combscore_core::model::CombinationRecord;
use combscore_core::{Error as CoreError, TaskMode};
use combscore_synthesis::sft::write_jsonl;
use combscore_synthesis::{build_sft_dataset, run_corpus, ChatBackend, HttpBackend, SynthesisError};
use serde::Serialize;

use crate::api::{self, ApiError, GroupScoreRequest, ScoreRequest};
use crate::config::AppConfig;

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_BACKEND: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "combscore", version, about = "Scoring, evaluation and trace synthesis for drug-combination extraction")]
pub struct Cli {
    /// TOML config file. Environment variables COMBSCORE_<SECTION>__<KEY>
    /// override it; --set overrides both.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Config override as dotted.key=value (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Drugcomb,
    Ddi13,
}

impl From<ModeArg> for TaskMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Drugcomb => TaskMode::DrugComb,
            ModeArg::Ddi13 => TaskMode::Ddi13,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Corpus metrics for a prediction file against canonical gold.
    Eval(EvalArgs),
    /// Score one response (or a group) against gold combinations.
    Reward(RewardArgs),
    /// Run the HTTP scoring service.
    Serve(ServeArgs),
    /// Synthesize reasoning traces for a canonical corpus.
    Synthesize(SynthesizeArgs),
    /// Dataset statistics tables.
    Stats(StatsArgs),
    /// Convert a source corpus file to canonical JSON-lines.
    Convert(ConvertArgs),
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Prediction JSON-lines ({"id", "gold"|"combinations"|"response", "entities"?}).
    #[arg(long, value_name = "FILE")]
    pub predictions: PathBuf,
    /// Canonical gold JSON-lines.
    #[arg(long, value_name = "FILE")]
    pub gold: PathBuf,
    /// Defaults to the mode recorded in the gold file.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct RewardArgs {
    /// Gold combinations as a JSON array, or @FILE to read it from a file.
    #[arg(long, value_name = "JSON|@FILE")]
    pub gold: String,
    /// Response text file; `-` reads stdin.
    #[arg(long, value_name = "FILE", default_value = "-")]
    pub response: String,
    /// JSON array of response strings scored as one group (adds advantages).
    #[arg(long, value_name = "FILE", conflicts_with = "response")]
    pub group: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Parse the extended answer format with entity and relation regions.
    #[arg(long)]
    pub extended: bool,
    /// Gold entity names as a JSON array (NER term, when its weight is set).
    #[arg(long, value_name = "JSON")]
    pub entities: Option<String>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Listen address; overrides server.bind.
    #[arg(long)]
    pub bind: Option<String>,
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    /// Canonical JSON-lines instances.
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Receives outcomes.jsonl, sft.jsonl, errors.jsonl and summary.json.
    #[arg(long, value_name = "DIR")]
    pub output_dir: PathBuf,
    /// Only the first N instances.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Chat-completions URL; overrides synthesis.backend_endpoint.
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Instances synthesized concurrently; overrides synthesis.max_concurrent_requests.
    #[arg(long)]
    pub max_concurrent: Option<usize>,
    /// Overrides synthesis.analyst.model.
    #[arg(long)]
    pub analyst_model: Option<String>,
    /// Overrides synthesis.reviewer.model.
    #[arg(long)]
    pub reviewer_model: Option<String>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long, value_enum)]
    pub mode: ModeArg,
    /// Directory holding the train and test files named in the field mapping.
    #[arg(long, value_name = "DIR", required_unless_present_any = ["train", "test"])]
    pub dir: Option<PathBuf>,
    #[arg(long, value_name = "FILE", conflicts_with = "dir")]
    pub train: Option<PathBuf>,
    #[arg(long, value_name = "FILE", conflicts_with = "dir")]
    pub test: Option<PathBuf>,
    /// Field-mapping TOML; overrides data.mapping_file.
    #[arg(long, value_name = "FILE")]
    pub mapping: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[arg(long, value_enum)]
    pub mode: ModeArg,
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub mapping: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Backend(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Backend(_) => EXIT_BACKEND,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidConfig(_) | CoreError::InvalidWeights(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(format!("{}: {e}", e.kind())),
        }
    }
}

impl From<ApiError> for CliError {
    fn from(e: ApiError) -> Self {
        CliError::Data(format!("{}: {}", e.error, e.message))
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("IoError: {}: {e}", path.display()))
}

/// Stdout writes ignore errors so a closed pipe (`| head`) is not a panic.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn print_json<T: Serialize>(value: &T) {
    emit(&(serde_json::to_string_pretty(value).expect("serializable output") + "\n"));
}

/// Parse arguments, run, and map the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = AppConfig::from_process(cli.config.as_deref(), &cli.overrides).map_err(|e| CliError::Usage(e.to_string()))?;
    match cli.command {
        Command::Eval(a) => eval(&config, a),
        Command::Reward(a) => reward(&config, a),
        Command::Serve(a) => {
            if let Some(bind) = a.bind {
                config.server.bind = bind;
            }
            runtime()?
                .block_on(crate::http::serve(config))
                .map_err(|e| CliError::Usage(format!("cannot serve: {e}")))
        }
        Command::Synthesize(a) => synthesize(config, a),
        Command::Stats(a) => stats(&config, a),
        Command::Convert(a) => convert(&config, a),
    }
}

fn runtime() -> Result<tokio::runtime::Runtime, CliError> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start runtime: {e}")))
}

fn eval(config: &AppConfig, a: EvalArgs) -> Result<(), CliError> {
    let gold = load_canonical(&a.gold)?;
    let predictions = load_predictions(&a.predictions)?;
    let mode = a
        .mode
        .map(TaskMode::from)
        .or_else(|| gold.first().map(|g| g.mode))
        .unwrap_or(config.scoring.mode);
    let report = evaluate_corpus(&predictions, &gold, mode, &config.scoring.normalization)?;
    match a.format {
        Format::Text => {
            emit(&format!("{} instances, mode {}\n", report.instances, report.mode));
            emit(&report.render_table());
        }
        Format::Json => print_json(&report),
    }
    Ok(())
}

fn read_arg_or_file(value: &str) -> Result<String, CliError> {
    match value.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path).map_err(|e| io_err(Path::new(path), e)),
        None => Ok(value.to_string()),
    }
}

fn reward(config: &AppConfig, a: RewardArgs) -> Result<(), CliError> {
    let gold: Vec<CombinationRecord> =
        serde_json::from_str(&read_arg_or_file(&a.gold)?).map_err(|e| CliError::Usage(format!("--gold: {e}")))?;
    let entities: Option<Vec<String>> = a
        .entities
        .as_deref()
        .map(serde_json::from_str)
        .transpose()
        .map_err(|e| CliError::Usage(format!("--entities: {e}")))?;
    let mode = a.mode.map(TaskMode::from);

    if let Some(path) = a.group {
        let text = std::fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        let responses: Vec<String> =
            serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: expected a JSON array of strings: {e}", path.display())))?;
        let req = GroupScoreRequest {
            responses,
            gold,
            mode,
            extended: a.extended,
            weights: None,
            epsilon_std: None,
            entities,
        };
        print_json(&api::score_group(&config.scoring, &req)?);
        return Ok(());
    }

    let response_text = if a.response == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| CliError::Data(format!("stdin: {e}")))?;
        buf
    } else {
        let path = Path::new(&a.response);
        let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
        String::from_utf8_lossy(&bytes).into_owned()
    };
    let req = ScoreRequest {
        response_text,
        gold,
        mode,
        extended: a.extended,
        weights: None,
        entities,
    };
    print_json(&api::score(&config.scoring, &req)?);
    Ok(())
}

fn mapping(config: &AppConfig, flag: Option<&Path>) -> Result<SourceMapping, CliError> {
    match flag.or(config.data.mapping_file.as_deref()) {
        Some(path) => SourceMapping::from_file(path).map_err(|e| CliError::Usage(e.to_string())),
        None => Ok(SourceMapping::default()),
    }
}

fn stats(config: &AppConfig, a: StatsArgs) -> Result<(), CliError> {
    let mode = TaskMode::from(a.mode);
    let mapping = mapping(config, a.mapping.as_deref())?;
    let mut splits: Vec<(&str, PathBuf)> = Vec::new();
    if let Some(dir) = &a.dir {
        let (train, test) = split_paths(dir, mode, &mapping);
        splits.push(("Train", train));
        splits.push(("Test", test));
    } else {
        if let Some(t) = &a.train {
            splits.push(("Train", t.clone()));
        }
        if let Some(t) = &a.test {
            splits.push(("Test", t.clone()));
        }
    }
    let refs: Vec<(&str, &Path)> = splits.iter().map(|(n, p)| (*n, p.as_path())).collect();
    let (stats, warnings) = stats_for_splits(mode, &refs, &mapping, &config.scoring.normalization)?;
    for w in &warnings {
        tracing::warn!("{w}");
    }
    if !warnings.is_empty() {
        eprintln!("{} loader warning(s); set RUST_LOG=warn to list them", warnings.len());
    }
    match a.format {
        Format::Text => emit(&stats.render_table()),
        Format::Json => print_json(&stats.to_json()),
    }
    Ok(())
}

fn convert(config: &AppConfig, a: ConvertArgs) -> Result<(), CliError> {
    let mapping = mapping(config, a.mapping.as_deref())?;
    let corpus = load_source(&a.input, a.mode.into(), &mapping, &config.scoring.normalization)?;
    for w in &corpus.warnings {
        eprintln!("warning: {w}");
    }
    export_canonical(&corpus.instances, &a.output)?;
    eprintln!("wrote {} instances to {}", corpus.instances.len(), a.output.display());
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

fn synthesize(mut config: AppConfig, a: SynthesizeArgs) -> Result<(), CliError> {
    let s = &mut config.synthesis;
    if let Some(e) = a.endpoint {
        s.backend_endpoint = e;
    }
    if let Some(n) = a.max_concurrent {
        s.max_concurrent_requests = n;
    }
    if let Some(m) = a.analyst_model {
        s.analyst.model = m;
    }
    if let Some(m) = a.reviewer_model {
        s.reviewer.model = m;
    }
    s.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let cfg = s.clone();
    let instruction = cfg.instruction().map_err(|e| CliError::Usage(e.to_string()))?;

    let mut instances = load_canonical(&a.input)?;
    if let Some(limit) = a.limit {
        instances.truncate(limit);
    }
    let backend: Arc<dyn ChatBackend> =
        Arc::new(HttpBackend::from_config(&cfg).map_err(|e| CliError::Backend(e.to_string()))?);
    let results = runtime()?
        .block_on(run_corpus(&instances, &cfg, backend))
        .map_err(|e| CliError::Usage(e.to_string()))?;

    std::fs::create_dir_all(&a.output_dir).map_err(|e| io_err(&a.output_dir, e))?;
    let mut done = Vec::new();
    let mut done_instances = Vec::new();
    let mut failures = Vec::new();
    let mut backend_failures = 0;
    for (instance, result) in instances.iter().zip(results) {
        match result {
            Ok(outcome) => {
                done.push(outcome);
                done_instances.push(instance.clone());
            }
            Err(e) => {
                if matches!(e, SynthesisError::Backend { .. }) {
                    backend_failures += 1;
                }
                failures.push(serde_json::json!({"id": instance.id, "error": e.kind(), "message": e.to_string()}));
            }
        }
    }
    let (records, summary) = build_sft_dataset(&done, &done_instances, &instruction).map_err(|e| CliError::Data(e.to_string()))?;

    let write = |name: &str, f: &dyn Fn(&mut BufWriter<File>) -> std::io::Result<()>| -> Result<(), CliError> {
        let path = a.output_dir.join(name);
        let mut out = create(&path)?;
        f(&mut out).and_then(|_| out.flush()).map_err(|e| io_err(&path, e))
    };
    write("outcomes.jsonl", &|out| write_jsonl(&done, out))?;
    write("sft.jsonl", &|out| write_jsonl(&records, out))?;
    write("errors.jsonl", &|out| write_jsonl(&failures, out))?;
    let summary_json = serde_json::json!({
        "total": summary.total,
        "accepted": summary.accepted,
        "rejected": summary.rejected,
        "acceptance_rate": summary.acceptance_rate,
        "failed": failures.len(),
    });
    write("summary.json", &|out| serde_json::to_writer_pretty(&mut *out, &summary_json).map_err(std::io::Error::other))?;
    print_json(&summary_json);

    if backend_failures > 0 {
        return Err(CliError::Backend(format!("{backend_failures} instance(s) failed on backend errors; see errors.jsonl")));
    }
    Ok(())
}
