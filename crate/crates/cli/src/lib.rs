//! Command-line front end: configuration, experiment orchestration, CSV and
//! SVG output, and the `tx`/`tap`/`rx` wire roles.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub mod commands;
pub mod config;
pub mod svg;

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_PARAMETER: u8 = 2;
pub const EXIT_CAPACITY: u8 = 3;
pub const EXIT_USAGE: u8 = 64;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("capacity error: {0}")]
    Capacity(String),
    #[error(transparent)]
    Core(#[from] aeta::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parameter(_) => EXIT_PARAMETER,
            CliError::Capacity(_) => EXIT_CAPACITY,
            CliError::Core(e) => match e {
                aeta::Error::Parameter(_) | aeta::Error::Wire(_) => EXIT_PARAMETER,
                aeta::Error::Capacity(_) | aeta::Error::Truncation { .. } => EXIT_CAPACITY,
                _ => EXIT_FAILURE,
            },
            CliError::Io(_) => EXIT_FAILURE,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "aeta", version, about = "Keyed coherent-state cipher simulator")]
pub struct Cli {
    #[command(flatten)]
    pub flags: Flags,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand. Values here override `--config`.
#[derive(Debug, Default, Args)]
pub struct Flags {
    /// Number of polarization points M
    #[arg(long, global = true)]
    pub m: Option<u32>,
    /// Mean photon number <n> = |alpha|^2 at the transmitter
    #[arg(long, global = true)]
    pub alpha2: Option<f64>,
    /// Channel transmissivity T
    #[arg(long, global = true)]
    pub t: Option<f64>,
    /// Dark count rate per detector
    #[arg(long, global = true)]
    pub dark: Option<f64>,
    /// Seed key in hex (4 bits per digit)
    #[arg(long, global = true)]
    pub key: Option<String>,
    /// LFSR taps, comma separated
    #[arg(long, global = true)]
    pub taps: Option<String>,
    /// EOM half-wave voltage
    #[arg(long, global = true)]
    pub vpi: Option<f64>,
    /// EOM phase offset in radians
    #[arg(long, global = true)]
    pub phi0: Option<f64>,
    /// Master seed for all randomness
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte Carlo trials per point
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    /// Number of data bits (symbols)
    #[arg(long, global = true)]
    pub bits: Option<u64>,
    /// M values: start:stop:step or a comma list
    #[arg(long = "m-list", global = true)]
    pub m_list: Option<String>,
    /// Mean photon numbers: start:stop:step or a comma list
    #[arg(long = "n-list", global = true)]
    pub n_list: Option<String>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Also write an SVG plot
    #[arg(long, global = true)]
    pub svg: bool,
    /// Flat key = value configuration file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Accept one connection on host:port instead of reading stdin
    #[arg(long, global = true)]
    pub listen: Option<String>,
    /// Connect to host:port instead of writing stdout
    #[arg(long, global = true)]
    pub connect: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Expand the seed key into a running key (running_key.csv)
    Expand,
    /// Run one Alice -> Bob transmission with an opaque or keyed Eve
    Simulate {
        #[arg(long, value_enum, default_value_t = EveArg::Unkeyed)]
        eve: EveArg,
    },
    /// Eavesdropping analyses
    Attack {
        #[arg(value_enum)]
        kind: AttackKind,
    },
    /// Reproduce a figure's data
    Figure {
        #[arg(value_enum)]
        which: FigureKind,
        /// Allow Fock-space dimensions above 512 (e.g. <n> = 1000 in fig1)
        #[arg(long)]
        heavy: bool,
    },
    /// Alice: write an encoded session to stdout or --connect
    Tx,
    /// Receiver: read a session from stdin or --listen and decide bits
    Rx {
        #[arg(long, value_enum, default_value_t = RoleArg::Bob)]
        role: RoleArg,
    },
    /// Channel: apply loss, split each symbol, forward Bob's share
    Tap {
        /// Fraction of each symbol's mean Eve keeps; omit for an opaque tap
        #[arg(long)]
        fraction: Option<f64>,
        /// File for Eve's stream (default <out>/eve.aeta)
        #[arg(long)]
        eve_out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EveArg {
    Unkeyed,
    Keyed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RoleArg {
    Bob,
    Eve,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AttackKind {
    Povm,
    Opaque,
    Kpa,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FigureKind {
    Fig1,
    Fig4,
    Fig5,
    Fig6c,
    Fig7,
    #[value(name = "seqS", alias = "seqs")]
    SeqS,
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match commands::run(&cli, &argv) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("aeta: {e}");
            e.exit_code()
        }
    }
}
