mod commands;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use pandora_core::corpus::SolverClass;
use pandora_core::instances::ClassTag;

use crate::report::RunReport;

#[derive(Parser)]
#[command(
    name = "pandora",
    version,
    about = "Exact solvers and verification suites for Pandora's box with combinatorial inspection costs"
)]
struct Cli {
    /// Print a plain-text summary instead of JSON.
    #[arg(long, global = true)]
    human: bool,
    /// Worker threads for parallel solvers and suites (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
#[group(required = true, multiple = false)]
pub struct InstanceArgs {
    /// Instance JSON file, or `-` for standard input.
    #[arg(short = 'i', long = "instance", value_name = "FILE")]
    pub file: Option<PathBuf>,
    /// Built-in instance, e.g. `example1` or `hardness(n=12,alpha=8,beta=3)`.
    #[arg(long, value_name = "NAME")]
    pub canonical: Option<String>,
}

#[derive(Args, Clone, Copy)]
pub struct HardnessArgs {
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    /// Overrides α; requires --beta.
    #[arg(long, requires = "beta")]
    pub alpha: Option<usize>,
    /// Overrides β; requires --alpha.
    #[arg(long, requires = "alpha")]
    pub beta: Option<usize>,
}

#[derive(Subcommand)]
pub enum Command {
    /// Optimal utility and strategy of one strategy class.
    Solve {
        #[command(flatten)]
        input: InstanceArgs,
        /// adaptive, fixed, impulsive or weitzman.
        #[arg(long)]
        class: SolverClass,
    },
    /// Adaptive, fixed-order and impulsive optima side by side.
    Gap {
        #[command(flatten)]
        input: InstanceArgs,
    },
    /// Exhaustive cost-class check with a witness on failure.
    Validate {
        #[command(flatten)]
        input: InstanceArgs,
        /// monotone_normalized, submodular, subadditive, matroid_rank,
        /// gross_substitutes or budget_additive.
        #[arg(long)]
        class: String,
    },
    /// Instance transformations.
    #[command(subcommand)]
    Transform(TransformCommand),
    /// Lower-bound family experiments.
    #[command(subcommand)]
    Hardness(HardnessCommand),
    /// The built-in corpus of instances with known answers.
    #[command(subcommand)]
    Corpus(CorpusCommand),
    /// Randomized property suites.
    Verify {
        /// Suite name (impulsive_optimality, fixed_order_optimality,
        /// dummy_split, cancellation, preservation, chain, transforms,
        /// weitzman; short ids T31, T44, L35) or `all`.
        #[arg(long)]
        theorem: String,
        /// Trials per suite (default: the suite's own count).
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Print a built-in instance as JSON.
    Canonical {
        name: String,
        /// Write the instance here instead of standard output.
        #[arg(short = 'o', long = "output", value_name = "FILE")]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
pub enum TransformCommand {
    /// Caps values at κ_ε and rounds them down to multiples of ε.
    Discretize {
        #[command(flatten)]
        input: InstanceArgs,
        /// Grid step as `p/q`.
        #[arg(long)]
        epsilon: String,
        #[arg(short = 'o', long = "output", value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Splits every box into weighted Bernoulli copies.
    Bernoullify {
        #[command(flatten)]
        input: InstanceArgs,
        #[arg(short = 'o', long = "output", value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Checks that Bernoullification keeps a cost class.
    Preserve {
        #[command(flatten)]
        input: InstanceArgs,
        #[arg(long)]
        class: ClassTag,
    },
}

#[derive(Subcommand)]
pub enum HardnessCommand {
    /// Scans every symmetric strategy on the baseline cost and the planted strategy.
    Family {
        #[command(flatten)]
        params: HardnessArgs,
    },
    /// Utility of the impulsive strategy opening `s` symmetric boxes.
    Utility {
        #[command(flatten)]
        params: HardnessArgs,
        #[arg(long)]
        s: usize,
        /// baseline or planted.
        #[arg(long, default_value = "baseline")]
        variant: String,
    },
    /// Replays random α-set queries against planted costs.
    Distinguish {
        #[command(flatten)]
        params: HardnessArgs,
        #[arg(long, default_value_t = 8)]
        queries: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Extra tail thresholds k for P(|S∩R| > k).
        #[arg(long = "threshold")]
        thresholds: Vec<usize>,
    },
    /// Compares baseline and planted costs on every subset (n <= 20).
    Agree {
        #[command(flatten)]
        params: HardnessArgs,
        /// Number of random planted sets.
        #[arg(long, default_value_t = 4)]
        plants: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

#[derive(Subcommand)]
pub enum CorpusCommand {
    /// Re-derives every expectation in the corpus.
    Run {
        /// Include the n = 100000 hardness entry.
        #[arg(long)]
        large: bool,
    },
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|()| out.flush());
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("cannot start {jobs} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    let start = Instant::now();
    let outcome = commands::run(&cli.command);
    let elapsed = start.elapsed();

    let (report, code) = match outcome {
        Ok(commands::Outcome::Raw(text)) => {
            emit(&format!("{text}\n"));
            return ExitCode::SUCCESS;
        }
        Ok(commands::Outcome::Report(done)) => {
            let code = if done.pass { 0 } else { 1 };
            (RunReport::finished(argv, done, elapsed), code)
        }
        Err(failure) => {
            let code = failure.exit_code();
            (RunReport::failed(argv, &failure, elapsed), code)
        }
    };
    if cli.human {
        emit(&report.render_human());
    } else {
        emit(&format!("{}\n", report.to_json()));
    }
    ExitCode::from(code)
}
