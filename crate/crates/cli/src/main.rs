use std::io::Read;
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use scoreforge::folds::DEFAULT_CONFIG_BUDGET;
use scoreforge::lp::DEFAULT_NODE_LIMIT;
use scoreforge_cli::document::{EpsMode, ProblemDocument};
use scoreforge_cli::plan::{plan, PlannedProblem};
use scoreforge_cli::report::{exit_code, Status, VerdictDocument};
use scoreforge_cli::runner::{count_all, run_all, RunOptions, WitnessChoice};

const EXIT_INPUT: u8 = 64;

/// Decide whether reported classification scores are consistent with the
/// described experiment.
#[derive(Debug, Parser)]
#[command(name = "scoreforge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every problem of a document and print the verdicts as JSON.
    Run(RunArgs),
    /// Check a document without running any test.
    Validate {
        /// Problem document, or `-` for standard input.
        file: PathBuf,
    },
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// Problem document, or `-` for standard input.
    file: PathBuf,
    /// Report the first witness or all of them.
    #[arg(long, value_enum, default_value_t = WitnessChoice::First)]
    witnesses: WitnessChoice,
    /// Uncertainty implied by the written digits when a problem states
    /// neither eps nor eps_mode.
    #[arg(long, value_enum)]
    eps_mode: Option<EpsMode>,
    /// Branch-and-bound nodes allowed per fold configuration.
    #[arg(long, default_value_t = DEFAULT_NODE_LIMIT)]
    budget_nodes: u64,
    /// Fold configurations examined per problem before giving up.
    #[arg(long, default_value_t = DEFAULT_CONFIG_BUDGET as u64)]
    budget_configs: u64,
    /// Worker threads.
    #[arg(long, env = "SCOREFORGE_JOBS")]
    jobs: Option<NonZeroUsize>,
    /// Only count fold configurations; no test is run.
    #[arg(long)]
    count_configs: bool,
    /// Examine every fold configuration even after a witness is found.
    #[arg(long)]
    full_count: bool,
    /// Include wall-clock timings in the output.
    #[arg(long)]
    timing: bool,
}

fn read_input(path: &Path) -> Result<String, String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| format!("standard input: {e}"))?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
    }
}

fn load(path: &Path, eps_mode: Option<EpsMode>) -> Result<Vec<PlannedProblem>, ()> {
    let text = read_input(path).map_err(|e| eprintln!("error: {e}"))?;
    let doc = ProblemDocument::parse(&text).map_err(|e| eprintln!("error: {e}"))?;
    plan(&doc, eps_mode).map_err(|errors| {
        for e in errors {
            eprintln!("error: {e}");
        }
    })
}

fn run(args: RunArgs) -> ExitCode {
    let Ok(problems) = load(&args.file, args.eps_mode) else {
        return ExitCode::from(EXIT_INPUT);
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = args.jobs {
        pool = pool.num_threads(jobs.get());
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    };
    if args.count_configs {
        let doc = pool.install(|| count_all(&problems));
        println!(
            "{}",
            serde_json::to_string_pretty(&doc).expect("counts serialize")
        );
        return ExitCode::SUCCESS;
    }
    let options = RunOptions {
        witnesses: args.witnesses,
        node_limit: args.budget_nodes,
        config_budget: u128::from(args.budget_configs),
        full_count: args.full_count,
        timing: args.timing,
    };
    let start = Instant::now();
    let results = pool.install(|| run_all(&problems, &options));
    let total = args.timing.then(|| start.elapsed().as_secs_f64() * 1e3);
    let doc = VerdictDocument::new(results, total);
    for r in doc.results.iter().filter(|r| r.status == Status::Error) {
        eprintln!(
            "error: problem {:?}: {}",
            r.id,
            r.error.as_deref().unwrap_or("failed")
        );
    }
    println!("{}", doc.to_json());
    ExitCode::from(exit_code(doc.status))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INPUT)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match cli.command {
        Command::Run(args) => run(args),
        Command::Validate { file } => match load(&file, None) {
            Ok(problems) => {
                eprintln!("valid: {} problem(s)", problems.len());
                ExitCode::SUCCESS
            }
            Err(()) => ExitCode::from(EXIT_INPUT),
        },
    }
}
