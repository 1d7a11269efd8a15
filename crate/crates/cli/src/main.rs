//! implifit command line: problem-file ingestion, one subcommand per
//! workflow, deterministic reports and CSV exports.
//!
//! Exit codes: 0 success, 1 hypothesis-failure verdict (rank witness,
//! non-coercive witness, failed uniqueness audit), 2 usage or parse error,
//! 3 internal numeric failure.

mod commands;
mod fixtures;
mod output;

use clap::{ArgAction, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "implifit", version, about = "Global implicit-function and inversion analysis for piecewise-smooth maps")]
pub struct Cli {
    /// Output directory for reports, CSVs, and the run manifest.
    #[arg(long, global = true, default_value = "implifit-out")]
    pub out: PathBuf,

    /// Master seed; all randomness in a run derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads (default: hardware parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Value substituted for the `$a` token in parameterized problems.
    #[arg(long, global = true)]
    pub a: Option<f64>,

    /// Print per-step detail to stderr.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand)]
pub enum Cmd {
    /// Certificates for one problem: spectral condition, rank over the box,
    /// coercivity evidence, growth constants.
    Check {
        /// Problem file path (bundled `fixtures/<name>.prob` also resolves).
        problem: String,
        /// Family mode for the rank certificate.
        #[arg(long, default_value = "outer-global")]
        mode: String,
    },
    /// Multistart roots of F(., y) = 0 with audit verdict.
    Solve {
        problem: String,
        /// Parameter vector, comma separated (omit for m = 0).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        y: Vec<f64>,
        #[arg(long)]
        multistart: Option<usize>,
    },
    /// Warm-started continuation along a parameter path `start:end:count`
    /// (vectors comma separated), over y, or over xi in algebraic mode.
    Atlas {
        problem: String,
        #[arg(long, allow_hyphen_values = true)]
        path: String,
    },
    /// Solve f(x) = target for a pure map (m = 0).
    Invert {
        problem: String,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        target: Vec<f64>,
    },
    /// Hypothesis checklist plus audited solve of A x = F(x) + xi.
    Algebraic {
        problem: String,
        /// Override the problem file's xi.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        xi: Option<Vec<f64>>,
    },
    /// Mountain-pass uniqueness probe between the two best audited roots.
    Mpass {
        problem: String,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        y: Vec<f64>,
        #[arg(long, default_value_t = 32)]
        beads: usize,
        #[arg(long, default_value_t = 300)]
        max_iters: usize,
    },
    /// Compare the global-inversion conditions on one pure map.
    Compare {
        problem: String,
        /// Number of random inversion targets to audit.
        #[arg(long, default_value_t = 50)]
        targets: usize,
    },
    /// List, run, or verify the bundled problems.
    Fixtures {
        #[arg(long)]
        list: bool,
        /// Run every bundled problem and assert its expected verdicts.
        #[arg(long)]
        verify: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match commands::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            if let Some(parse) = err.downcast_ref::<implifit::expr::ParseError>() {
                eprintln!("parse error: {parse}");
                ExitCode::from(2)
            } else {
                eprintln!("error: {err:#}");
                ExitCode::from(3)
            }
        }
    }
}
