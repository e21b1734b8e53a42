//! The `asvplan` command line: scenario runs, Monte-Carlo batches, classifier
//! training and evaluation, accident replay and gain-field dumps.
//!
//! Every command writes into its `--out` directory only and leaves exactly one
//! `manifest.json` there. Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0    | success |
//! | 2    | the episode ended in a collision or near miss |
//! | 64   | usage error |
//! | 65   | malformed or inconsistent input |
//! | 70   | classifier training diverged |
//! | 74   | output could not be written |

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use asvplan_core::Variant;

mod commands;
pub mod data;
pub mod manifest;
pub mod snapshot;
pub mod svg;

pub use commands::{run, CliError};
pub use manifest::RunManifest;

pub const EXIT_OK: u8 = 0;
pub const EXIT_UNSAFE: u8 = 2;
pub const EXIT_USAGE: u8 = 64;
pub const EXIT_DATAERR: u8 = 65;
pub const EXIT_SOFTWARE: u8 = 70;
pub const EXIT_IOERR: u8 = 74;

/// Worker count from `ASVPLAN_THREADS`; unset or 0 means one per core.
pub const THREADS_ENV: &str = "ASVPLAN_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "asvplan",
    version,
    about = "Intention-aware collision avoidance planner and simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Planner configuration (key = value file).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Master seed; overrides the scenario, batch or replay seed.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,

    /// MOA_LSTM, MOA_PLUS, MOA, VO_PLUS or VO.
    #[arg(long, global = true, value_name = "NAME")]
    pub variant: Option<Variant>,

    /// Output directory; created if missing.
    #[arg(long, global = true, value_name = "DIR", default_value = "asvplan-out")]
    pub out: PathBuf,

    /// Classifier weights (JSON). The bundled model is used when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub weights: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario file.
    Simulate { scenario: PathBuf },
    /// Monte-Carlo grid over obstacle counts, mixes, noise settings and variants.
    Batch {
        /// Batch specification file; overrides `--preset`.
        spec: Option<PathBuf>,
        #[arg(long, default_value = "smoke")]
        preset: String,
    },
    /// Train the passing classifier on a CSV dataset or generated encounters.
    Train {
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Generated training encounters when no dataset is given.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// Generated held-out encounters for the report.
        #[arg(long, default_value_t = 2_000)]
        test_samples: usize,
        /// Defaults to 40.
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        hidden: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        /// Continue from these weights instead of a fresh initialization.
        #[arg(long, value_name = "PATH")]
        resume: Option<PathBuf>,
    },
    /// Score classifier weights on a CSV dataset or generated encounters.
    Eval {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long, default_value_t = 2_000)]
        samples: usize,
    },
    /// Replay a recorded encounter with one vessel as the ego.
    Replay {
        /// AIS CSV; the bundled Kodomari reconstruction when omitted.
        ais: Option<PathBuf>,
        #[arg(long)]
        ego_id: u32,
        #[arg(long, value_enum, default_value_t = ReplayKind::Planned)]
        mode: ReplayKind,
        /// Vessel dimensions as `id:length:beam`; defaults to the Kodomari pair.
        #[arg(long = "dims", value_name = "ID:L:B")]
        dims: Vec<String>,
    },
    /// Information-cost field over the action grid for one snapshot.
    Gainfield {
        snapshot: PathBuf,
        /// Speed step reported as the minimum-cost heading row.
        #[arg(long, default_value_t = 4)]
        speed_step: u8,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate { .. } => "simulate",
            Command::Batch { .. } => "batch",
            Command::Train { .. } => "train",
            Command::Eval { .. } => "eval",
            Command::Replay { .. } => "replay",
            Command::Gainfield { .. } => "gainfield",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReplayKind {
    /// The recorded ego track.
    Historical,
    /// The planner with classifier beliefs.
    Planned,
    /// The planner with uniformly random beliefs.
    Randomized,
}
