//! `hepdesk`: one executable over the full toolkit — toy generation,
//! detector smearing, format conversion, schema validation, selections,
//! histograms, η–φ images, format benchmarks, and the end-to-end W→μν study.
//!
//! Exit codes: 0 success, 1 validation findings, 2 config/IO/data errors,
//! 64 command-line usage errors. Diagnostics go to stderr; machine-readable
//! results (cutflow tables, benchmark CSV) go to stdout or files.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use hepdesk_columnar::{ColumnarError, Compression, FileFormat, FormatKind};
use hepdesk_core::analysis::{AnalysisError, MetSource, ObjectCollection};
use hepdesk_core::event::EventModelError;
use hepdesk_core::jetclust::JetClustError;
use hepdesk_core::toygen::{Process, ToyGenError};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad command-line usage → exit 64.
    #[error("{0}")]
    Usage(String),
    /// The input failed validation → exit 1.
    #[error("{0}")]
    Validation(String),
    /// Config, IO or data errors → exit 2.
    #[error("{0}")]
    Data(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 64,
            CliError::Validation(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ColumnarError> for CliError {
    fn from(e: ColumnarError) -> Self {
        match e {
            // Only arguments produce these; file contents cannot.
            ColumnarError::BadArgument { .. } | ColumnarError::UnsupportedCombination { .. } => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::UnknownQuantity { .. }
            | AnalysisError::BadEdges { .. }
            | AnalysisError::BadArgument { .. } => CliError::Usage(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<ToyGenError> for CliError {
    fn from(e: ToyGenError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<EventModelError> for CliError {
    fn from(e: EventModelError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<JetClustError> for CliError {
    fn from(e: JetClustError) -> Self {
        CliError::Data(e.to_string())
    }
}

fn parse_process(s: &str) -> Result<Process, String> {
    s.parse().map_err(|e: ToyGenError| e.to_string())
}

fn parse_format_kind(s: &str) -> Result<FormatKind, String> {
    s.parse().map_err(|e: ColumnarError| e.to_string())
}

/// `kind` or `kind+compression`, e.g. `parquet`, `arrow-ipc+zstd`, `jsonl+gzip`.
/// A bare kind means no compression.
fn parse_format(s: &str) -> Result<FileFormat, String> {
    let (kind, compression) = match s.split_once('+') {
        Some((k, c)) => (
            k.trim().parse().map_err(|e: ColumnarError| e.to_string())?,
            c.trim().parse().map_err(|e: ColumnarError| e.to_string())?,
        ),
        None => (
            s.trim().parse().map_err(|e: ColumnarError| e.to_string())?,
            Compression::None,
        ),
    };
    FileFormat::new(kind, compression).map_err(|e| e.to_string())
}

fn parse_met(s: &str) -> Result<MetSource, String> {
    match s {
        "stored" => Ok(MetSource::Stored),
        "recomputed" => Ok(MetSource::Recomputed),
        other => Err(format!(
            "unknown MET source {other:?} (expected stored or recomputed)"
        )),
    }
}

fn parse_collection(s: &str) -> Result<ObjectCollection, String> {
    s.parse().map_err(|e: AnalysisError| e.to_string())
}

#[derive(Parser)]
#[command(
    name = "hepdesk",
    version,
    about = "Collider-event toolkit: toy generation, detector smearing, \
             selections, histograms and columnar event I/O"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Generate truth-level toy events
    Generate(GenerateArgs),
    /// Apply the parameterized detector response to truth events
    Smear(SmearArgs),
    /// Convert an event file between formats
    Convert(ConvertArgs),
    /// Check an event file against the column schema
    Validate(ValidateArgs),
    /// Apply a selection spec and print the cutflow
    Select(SelectArgs),
    /// Histogram a per-event quantity
    Hist(HistArgs),
    /// Render one event as an eta-phi transverse-momentum image
    Image(ImageArgs),
    /// Benchmark serialization formats on an event table
    Bench(BenchArgs),
    /// Run the W->mu nu selection study end to end
    #[command(name = "analyze-w")]
    AnalyzeW(AnalyzeWArgs),
}

#[derive(Args)]
pub struct GenerateArgs {
    /// Physics process: z-mumu, w-munu or multijet
    #[arg(long, value_parser = parse_process)]
    pub process: Process,
    /// Number of events to generate
    #[arg(short = 'n', long = "events")]
    pub events: usize,
    /// Generator seed
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Process-parameter config file (`key = value` lines, `#` comments)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output event file
    #[arg(short, long)]
    pub output: PathBuf,
    /// Output format `kind[+compression]`; inferred from the file
    /// extension when omitted
    #[arg(long, value_parser = parse_format)]
    pub format: Option<FileFormat>,
}

#[derive(Args)]
pub struct SmearArgs {
    /// Truth-level input event file
    pub input: PathBuf,
    /// Input format when the file cannot be sniffed
    #[arg(long, value_parser = parse_format_kind)]
    pub from: Option<FormatKind>,
    /// Detector-parameter config file
    #[arg(long, conflicts_with = "identity")]
    pub config: Option<PathBuf>,
    /// Pass-through detector: exact kinematics, full efficiency, no
    /// fakes, no pile-up
    #[arg(long)]
    pub identity: bool,
    /// Override the detector seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Anti-kt radius for the reco jets
    #[arg(long, default_value_t = 0.4)]
    pub jet_r: f64,
    /// Minimum reco-jet pt (GeV)
    #[arg(long, default_value_t = 15.0)]
    pub jet_min_pt: f64,
    /// Output event file
    #[arg(short, long)]
    pub output: PathBuf,
    /// Output format `kind[+compression]`
    #[arg(long, value_parser = parse_format)]
    pub format: Option<FileFormat>,
}

#[derive(Args)]
pub struct ConvertArgs {
    /// Input event file (format auto-detected)
    pub input: PathBuf,
    /// Input format when the file cannot be sniffed
    #[arg(long, value_parser = parse_format_kind)]
    pub from: Option<FormatKind>,
    /// Output event file
    #[arg(short, long)]
    pub output: PathBuf,
    /// Output format `kind[+compression]`
    #[arg(long, value_parser = parse_format)]
    pub format: Option<FileFormat>,
}

#[derive(Args)]
pub struct ValidateArgs {
    /// Event file to check
    pub input: PathBuf,
    /// Input format when the file cannot be sniffed
    #[arg(long, value_parser = parse_format_kind)]
    pub from: Option<FormatKind>,
}

#[derive(Args)]
pub struct SelectArgs {
    /// Input event file
    pub input: PathBuf,
    /// Input format when the file cannot be sniffed
    #[arg(long, value_parser = parse_format_kind)]
    pub from: Option<FormatKind>,
    /// Selection spec file (`name quantity comparator threshold` lines)
    #[arg(long)]
    pub spec: PathBuf,
    /// Per-event sample weight
    #[arg(long, default_value_t = 1.0)]
    pub weight: f64,
    /// MET source: stored or recomputed
    #[arg(long, value_parser = parse_met, default_value = "stored")]
    pub met: MetSource,
    /// Write the passing events here
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Output format `kind[+compression]`
    #[arg(long, value_parser = parse_format)]
    pub format: Option<FileFormat>,
}

#[derive(Args)]
pub struct HistArgs {
    /// Input event file
    pub input: PathBuf,
    /// Input format when the file cannot be sniffed
    #[arg(long, value_parser = parse_format_kind)]
    pub from: Option<FormatKind>,
    /// Quantity id, e.g. met_pt, leading_muon_pt, dimuon_mass
    #[arg(short, long)]
    pub quantity: String,
    /// Number of bins
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    /// Lower histogram edge
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub min: f64,
    /// Upper histogram edge
    #[arg(long, default_value_t = 100.0, allow_hyphen_values = true)]
    pub max: f64,
    /// Per-event sample weight
    #[arg(long, default_value_t = 1.0)]
    pub weight: f64,
    /// MET source: stored or recomputed
    #[arg(long, value_parser = parse_met, default_value = "stored")]
    pub met: MetSource,
    /// Normalize the histogram area to one before writing
    #[arg(long)]
    pub normalize: bool,
    /// Output file(s); repeatable, dispatched on extension (.csv/.json/.svg)
    #[arg(short, long, required = true)]
    pub output: Vec<PathBuf>,
}

#[derive(Args)]
pub struct ImageArgs {
    /// Input event file
    pub input: PathBuf,
    /// Input format when the file cannot be sniffed
    #[arg(long, value_parser = parse_format_kind)]
    pub from: Option<FormatKind>,
    /// Event index within the file
    #[arg(long, default_value_t = 0)]
    pub event: usize,
    /// Object collection: pf, muons, electrons, taus, photons, jets, mctruth
    #[arg(long, value_parser = parse_collection, default_value = "pf")]
    pub collection: ObjectCollection,
    #[arg(long, default_value_t = 40)]
    pub n_eta: usize,
    #[arg(long, default_value_t = 40)]
    pub n_phi: usize,
    #[arg(long, default_value_t = -4.0, allow_hyphen_values = true)]
    pub eta_min: f64,
    #[arg(long, default_value_t = 4.0, allow_hyphen_values = true)]
    pub eta_max: f64,
    #[arg(long, default_value_t = -std::f64::consts::PI, allow_hyphen_values = true)]
    pub phi_min: f64,
    #[arg(long, default_value_t = std::f64::consts::PI, allow_hyphen_values = true)]
    pub phi_max: f64,
    /// Output file(s); repeatable, dispatched on extension (.pgm/.csv)
    #[arg(short, long, required = true)]
    pub output: Vec<PathBuf>,
}

#[derive(Args)]
pub struct BenchArgs {
    /// Event table to benchmark
    pub input: PathBuf,
    /// Input format when the file cannot be sniffed
    #[arg(long, value_parser = parse_format_kind)]
    pub from: Option<FormatKind>,
    /// Timed repetitions per (format, compression) pair (min 3)
    #[arg(long, default_value_t = 5)]
    pub repetitions: usize,
    /// Comma-separated `kind[+compression]` pairs; defaults to every
    /// supported pair
    #[arg(long, value_delimiter = ',', value_parser = parse_format)]
    pub formats: Vec<FileFormat>,
    /// Write the CSV report here (it always goes to stdout too)
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
    /// Write the full JSON report (raw timings, failures) here
    #[arg(long)]
    pub out_json: Option<PathBuf>,
    /// Scratch directory for benchmark files (default: a temp dir)
    #[arg(long)]
    pub workdir: Option<PathBuf>,
}

#[derive(Args)]
pub struct AnalyzeWArgs {
    /// Signal sample (toy W->mu nu)
    #[arg(long)]
    pub signal: PathBuf,
    /// Signal weight applied when stacking
    #[arg(long, default_value_t = 1.0)]
    pub signal_weight: f64,
    /// Background sample; repeatable, paired with --background-weight
    #[arg(long)]
    pub background: Vec<PathBuf>,
    /// Weight for the matching --background occurrence
    #[arg(long)]
    pub background_weight: Vec<f64>,
    /// The sample treated as data (weight 1)
    #[arg(long)]
    pub data: PathBuf,
    /// Selection spec; defaults to the built-in W selection
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// MET source: stored or recomputed
    #[arg(long, value_parser = parse_met, default_value = "stored")]
    pub met: MetSource,
    /// Directory for histograms, cutflow and summary
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
