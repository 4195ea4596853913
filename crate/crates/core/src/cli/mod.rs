//! Command-line front end: `bench`, `analyze`, `classify`, `roofline` and
//! `events`.
//!
//! Exit codes: 0 on success, 1 for input errors, 2 when the requested
//! counter backend is unavailable.

mod bench;
mod report;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::classifier::{ClassifierConfig, RllcThreshold};
use crate::collector::{CollectorError, Variant};
use crate::machine::MachineModel;
use crate::roofline::{plot, roofline_dataset, RooflineConfig};
use crate::workloads::{StreamOp, WorkloadError};

pub use bench::{bench, BenchOutcome, BenchPlan, KernelChoice};
pub use report::{
    analyses_document, analysis_csv, analysis_text, classify_entries, events_csv, events_text, FailedAnalysis,
    load_analysis_input, AnalysisEntry,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}\nhint: use `--backend replay --replay <measurements.json>` or `--backend synthetic` on hosts without PMU access")]
    BackendUnavailable(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::BackendUnavailable(_) => 2,
        }
    }
}

impl From<CollectorError> for CliError {
    fn from(e: CollectorError) -> Self {
        if e.is_backend_unavailable() {
            CliError::BackendUnavailable(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

impl From<WorkloadError> for CliError {
    fn from(e: WorkloadError) -> Self {
        match e {
            WorkloadError::Collector(c) => c.into(),
            e => CliError::Input(e.to_string()),
        }
    }
}

fn input<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Live,
    Replay,
    Synthetic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "vecscope", version, about = "Vectorization profiling and bottleneck classification")]
pub struct Cli {
    /// Machine model: a built-in name (`grace`) or a JSON file.
    #[arg(long, global = true, default_value = "grace")]
    pub machine: String,
    #[arg(long, global = true, value_enum, default_value_t = BackendArg::Synthetic)]
    pub backend: BackendArg,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Thread counts, comma separated.
    #[arg(long, global = true, env = "OMP_NUM_THREADS", value_delimiter = ',', default_value = "1")]
    pub threads: Vec<u32>,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Suppress progress summaries on stderr (warnings are still printed).
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a calibration kernel under the ROI collector and emit measurements.
    Bench(BenchArgs),
    /// Derive vectorization metrics from a measurement document.
    Analyze(InputArgs),
    /// Classify kernels from measurements or analyses.
    Classify(ClassifyArgs),
    /// Emit roofline data (CSV/JSON) and optionally an SVG chart.
    Roofline(RooflineArgs),
    /// List the PMU event registry.
    Events,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum, default_value_t = KernelChoice::Spmv)]
    pub kernel: KernelChoice,
    /// Matrix dimension (spmv) or array length (stream).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0.01)]
    pub density: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Matrix Market file used instead of the generator.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub repeat: u32,
    #[arg(long, default_value_t = 64)]
    pub elen: u32,
    #[arg(long, default_value = "copy")]
    pub op: StreamOp,
    #[arg(long, value_delimiter = ',', default_value = "baseline,asimd,sve")]
    pub variants: Vec<Variant>,
    /// Measured windows per session (at least 5).
    #[arg(long, default_value_t = 5)]
    pub windows: u32,
    /// Minimum ROI duration per window, in milliseconds.
    #[arg(long, default_value_t = 100)]
    pub min_roi_ms: u64,
    /// Events to collect (names or 0x hexcodes); defaults to the standard six.
    #[arg(long, value_delimiter = ',')]
    pub events: Vec<String>,
    /// Synthetic script (JSON) used for every variant instead of the model.
    #[arg(long)]
    pub script: Option<PathBuf>,
    /// Measurement document to replay (replay backend).
    #[arg(long)]
    pub replay: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Measurement document (JSON array of records).
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Measurement or analysis document.
    pub input: PathBuf,
    #[arg(long, default_value_t = 1.2)]
    pub reduction_threshold: f64,
    /// Fixed LLC miss-ratio threshold; defaults to the ideal streaming ratio.
    #[arg(long)]
    pub rllc_threshold: Option<f64>,
    /// Suppress the transition-region warning.
    #[arg(long)]
    pub no_shift_warning: bool,
    /// Print only the kernel × threads grid (text format).
    #[arg(long)]
    pub grid: bool,
}

#[derive(Debug, Args)]
pub struct RooflineArgs {
    /// Measurement or analysis document; omit for roofs only.
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 64)]
    pub elen: u32,
    /// Divide throughput by the scalar peak.
    #[arg(long)]
    pub normalize: bool,
    /// Also write an SVG chart here.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

/// Parses arguments, runs, reports errors on stderr, maps to an exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let output = execute(cli)?;
    emit(cli.out.as_deref(), &output)
}

/// Runs the subcommand and returns its main output.
pub fn execute(cli: &Cli) -> Result<String, CliError> {
    let model = MachineModel::resolve(&cli.machine).map_err(input)?;
    if cli.threads.is_empty() {
        return Err(CliError::Input("--threads needs at least one value".into()));
    }
    for t in &cli.threads {
        model.check_threads(*t).map_err(input)?;
    }
    match &cli.command {
        Command::Bench(args) => {
            let plan = BenchPlan::from_args(args, cli)?;
            let outcome = bench(&plan, &model)?;
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            if !cli.quiet {
                for line in &outcome.summary {
                    eprintln!("{line}");
                }
            }
            Ok(crate::collector::to_document(&outcome.records))
        }
        Command::Analyze(args) => {
            let entries = load_analysis_input(&read(&args.input)?, &model)?;
            Ok(match cli.format {
                Format::Text => analysis_text(&entries),
                Format::Csv => analysis_csv(&entries),
                Format::Json => analyses_document(&entries),
            })
        }
        Command::Classify(args) => {
            let cconfig = ClassifierConfig {
                reduction_threshold: args.reduction_threshold,
                rllc_threshold: args.rllc_threshold.map_or(RllcThreshold::Ideal, RllcThreshold::Fixed),
                use_vector_inflection_warning: !args.no_shift_warning,
                ..Default::default()
            };
            cconfig.validate().map_err(input)?;
            let entries = load_analysis_input(&read(&args.input)?, &model)?;
            let table = classify_entries(&entries, &model, &cconfig);
            for (row, e) in table.errors() {
                eprintln!("warning: {}@{}t not classified: {e}", row.kernel_name, row.threads);
            }
            Ok(match (cli.format, args.grid) {
                (Format::Text, true) => table.to_grid(),
                (Format::Text, false) => table.to_text(),
                (Format::Csv, _) => table.to_csv(),
                (Format::Json, _) => json(&table),
            })
        }
        Command::Roofline(args) => {
            let [threads] = cli.threads[..] else {
                return Err(CliError::Input("roofline takes a single --threads value".into()));
            };
            let config = RooflineConfig::new(model.clone(), args.elen, threads).map_err(input)?;
            let analyses: Vec<_> = match &args.input {
                Some(p) => load_analysis_input(&read(p)?, &model)?
                    .into_iter()
                    .filter_map(AnalysisEntry::into_analysis)
                    .filter(|a| a.threads == threads)
                    .collect(),
                None => Vec::new(),
            };
            let dataset = roofline_dataset(&config, &analyses, args.normalize).map_err(input)?;
            if let Some(svg) = &args.svg {
                write_file(svg, &plot::render_svg(&dataset))?;
            }
            Ok(match cli.format {
                Format::Json => json(&dataset),
                _ => plot::render_csv(&dataset),
            })
        }
        Command::Events => Ok(match cli.format {
            Format::Json => json(&crate::machine::events::registry()),
            Format::Csv => events_csv(),
            Format::Text => events_text(),
        }),
    }
}

fn json<T: serde::Serialize + ?Sized>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable output");
    s.push('\n');
    s
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => write_file(p, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|()| stdout.flush())
                .map_err(input)
        }
    }
}
