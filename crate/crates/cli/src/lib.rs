//! Command-line driver for the tastemap pipeline.
//!
//! Every command reads its inputs from explicit paths or from the fixed
//! layout under `--out-dir`, writes its outputs there and records a
//! manifest with input and output digests and stage timings:
//! `manifest.json` per stage directory, `manifest_<analysis>.json` under
//! `experiments/`.
//!
//! ```text
//! <out-dir>/
//!   ingest/       aggregates.jsonl locations.tsv eligibility.tsv
//!                 sampled_days.tsv meta.tsv run.toml
//!   genres/       taxonomy.json tree.nwk sweep.csv
//!   profiles/     listeners.csv regions.csv rarefaction.csv
//!   experiments/  short_term.json short_term_pairs.csv
//!                 long_term.json long_term_pairs.csv
//!                 regions_z.csv region_diversity.csv
//!                 region_diversity_listeners.csv
//!                 song_ages.csv age_matrix.csv age_matrix_cells.csv
//!                 age_argmax.csv
//!   score/        recovery.json
//! ```

mod manifest;
mod stages;

pub use manifest::{FileDigest, ManifestBuilder, RunManifest, StageTiming};

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tastemap_core::Error as CoreError;

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_MISSING_INPUT: i32 = 2;
pub const EXIT_BAD_CONFIG: i32 = 3;
pub const EXIT_DEGENERATE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "tastemap", version, about = "Musical taste analytics over listening logs")]
pub struct Cli {
    /// Seed for every random choice; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Configuration file (TOML). A synthetic population config for
    /// `synth`, a run config otherwise.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Print the effective configuration as TOML and exit.
    #[arg(long, global = true)]
    pub dump_config: bool,

    /// Root directory of all outputs.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,

    #[arg(long, global = true, value_enum, default_value_t = LogLevel::Warn)]
    pub log_level: LogLevel,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LogLevel {
    Error,
    Warn,
    Info,
    Debug,
}

impl LogLevel {
    pub fn filter(self) -> log::LevelFilter {
        match self {
            LogLevel::Error => log::LevelFilter::Error,
            LogLevel::Warn => log::LevelFilter::Warn,
            LogLevel::Info => log::LevelFilter::Info,
            LogLevel::Debug => log::LevelFilter::Debug,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset with planted ground truth.
    Synth,
    /// Parse an event log into period aggregates, locations and eligibility.
    Ingest(IngestArgs),
    /// Derive genres from artist transitions and sweep cluster counts.
    DeriveGenres(GenreArgs),
    /// Build listener and region taste profiles and rarefaction curves.
    Profiles(ProfileArgs),
    /// Run one of the analyses.
    #[command(subcommand)]
    Experiment(Experiment),
    /// Compare pipeline outputs with a synthetic ground truth.
    Score(ScoreArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Event log (TSV).
    #[arg(long)]
    pub events: PathBuf,
    /// Listener metadata (TSV).
    #[arg(long)]
    pub meta: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenreArgs {
    /// Event log the ingest stage read.
    #[arg(long)]
    pub events: PathBuf,
    /// Artist tags (TSV) used to score and name clusters.
    #[arg(long)]
    pub tags: Option<PathBuf>,
    /// Cluster counts of the sweep.
    #[arg(long, value_delimiter = ',', default_values_t = [10, 15, 20, 30, 40])]
    pub sweep_k: Vec<usize>,
    /// Clustering methods of the sweep.
    #[arg(long, value_delimiter = ',', default_values = ["agglomerative", "kmeans"])]
    pub sweep_methods: Vec<Method>,
    /// Method of the final partition into the configured number of genres.
    #[arg(long, value_enum, default_value_t = Method::Agglomerative)]
    pub method: Method,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Agglomerative,
    Kmeans,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    /// Rarefaction depths in streams.
    #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 5, 10, 20, 50, 100, 200, 300, 500, 1000])]
    pub depths: Vec<usize>,
    /// Subsamples per depth.
    #[arg(long, default_value_t = 20)]
    pub replicates: usize,
    /// Listeners with a rarefaction curve, first in id order.
    #[arg(long, default_value_t = 100)]
    pub rarefaction_listeners: usize,
    /// Curve of Rao-Stirling diversity instead of unique genres.
    #[arg(long)]
    pub rao_stirling: bool,
}

#[derive(Debug, Subcommand)]
pub enum Experiment {
    /// Movers between P1 and P2 against matched stable residents.
    ShortTerm(QuasiArgs),
    /// Movers inferred from holiday travel against matched residents.
    LongTerm(LongTermArgs),
    /// Region genre z-scores and diversity distributions.
    Regions(RegionArgs),
    /// Song age by listener age and listener age at release.
    Ages(AgeArgs),
}

#[derive(Debug, Args)]
pub struct QuasiArgs {
    /// Pairs sampled per origin region; 0 keeps every pair.
    #[arg(long)]
    pub per_origin: Option<usize>,
    /// Also match on the most-streamed genre in P1.
    #[arg(long)]
    pub favorite_genre: bool,
    /// Leave a listener's own streams out of its region's profile.
    #[arg(long)]
    pub leave_self_out: bool,
}

#[derive(Debug, Args)]
pub struct LongTermArgs {
    #[command(flatten)]
    pub quasi: QuasiArgs,
    /// Keep residents seen away from home on a holiday in the control pool.
    #[arg(long)]
    pub lenient_controls: bool,
    /// Region borders (TSV with region_a and region_b); US states by default.
    #[arg(long)]
    pub adjacency: Option<PathBuf>,
    /// Skip the diversity test without moves between bordering regions.
    #[arg(long, conflicts_with = "adjacency")]
    pub no_adjacency: bool,
}

#[derive(Debug, Args)]
pub struct RegionArgs {
    /// Genres to map; the six most streamed by default.
    #[arg(long, value_delimiter = ',')]
    pub genres: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct AgeArgs {
    /// Cells with fewer streams are masked before standardizing.
    #[arg(long, default_value_t = 1000)]
    pub min_cell_streams: u64,
    /// Standardize within listener-age columns or release-year rows.
    #[arg(long, value_enum, default_value_t = Axis::Column)]
    pub axis: Axis,
    /// Year song ages are measured from; the latest release year by default.
    #[arg(long)]
    pub reference_year: Option<i32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    Column,
    Row,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Ground truth document written by `synth`.
    #[arg(long)]
    pub truth: PathBuf,
}

/// A required input file or upstream artifact is absent.
#[derive(Debug)]
pub struct MissingInput {
    pub path: PathBuf,
    pub hint: &'static str,
}

impl fmt::Display for MissingInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "missing input {} ({})", self.path.display(), self.hint)
    }
}

impl std::error::Error for MissingInput {}

/// Process exit code for an error.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.downcast_ref::<MissingInput>().is_some() {
            return EXIT_MISSING_INPUT;
        }
        if let Some(e) = cause.downcast_ref::<CoreError>() {
            return match e {
                CoreError::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => EXIT_MISSING_INPUT,
                CoreError::Config(_) => EXIT_BAD_CONFIG,
                e if e.is_degenerate() => EXIT_DEGENERATE,
                _ => EXIT_FAILURE,
            };
        }
    }
    EXIT_FAILURE
}

/// Run a parsed command line. The thread pool must be configured first.
pub fn run(cli: &Cli) -> anyhow::Result<()> {
    stages::dispatch(cli)
}

/// Parse arguments, configure threads and logging once, run, and return
/// the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_MISSING_INPUT } else { 0 };
        }
    };
    let _ = env_logger::Builder::new()
        .filter_level(cli.log_level.filter())
        .format_timestamp(None)
        .try_init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            log::warn!("thread pool already configured: {e}");
        }
    }
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}
