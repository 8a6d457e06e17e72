use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{Overrides, Suite};
use crate::report::{render_table, summarize};
use crate::runner::run_suite;
use crate::selftest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "psga-bench",
    version,
    about = "Run and summarize stochastic proximal optimizer benchmarks"
)]
pub struct Cli {
    /// Runs to execute concurrently.
    #[arg(long, global = true, default_value_t = default_jobs())]
    pub jobs: usize,
    /// Seed for every run, replacing the suite's.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Iteration limit for every run.
    #[arg(long, global = true)]
    pub max_iters: Option<u64>,
    /// Output directory for every run.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Execute a suite file and write traces plus a summary.
    Run { config: PathBuf },
    /// Recompute reference values and the summary of an output directory.
    Summarize { dir: PathBuf },
    /// Check the optimizers' invariants on small synthetic problems.
    Selftest,
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit code. Output goes to stdout, diagnostics to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if cli.jobs == 0 {
        eprintln!("error: --jobs must be at least 1");
        return EXIT_CONFIG;
    }
    match cli.command {
        Command::Run { ref config } => run(&cli, config),
        Command::Summarize { ref dir } => match summarize(dir) {
            Ok(rows) => {
                print!("{}", render_table(&rows));
                EXIT_OK
            }
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_CONFIG
            }
        },
        Command::Selftest => {
            let mut failed = false;
            for check in selftest::run_all() {
                match check.result {
                    Ok(()) => println!("PASS  {}", check.name),
                    Err(msg) => {
                        failed = true;
                        println!("FAIL  {}: {msg}", check.name);
                    }
                }
            }
            if failed {
                EXIT_FAILURE
            } else {
                EXIT_OK
            }
        }
    }
}

fn run(cli: &Cli, config: &std::path::Path) -> i32 {
    let mut suite = match Suite::load(config) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    suite.apply(&Overrides {
        seed: cli.seed,
        max_iters: cli.max_iters,
        output_dir: cli.output.clone(),
    });
    match run_suite(&suite, cli.jobs, true) {
        Ok(report) => {
            for (dir, rows) in &report.summaries {
                println!("{}", dir.display());
                print!("{}", render_table(rows));
            }
            if report.any_numeric_failure() {
                EXIT_FAILURE
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}
