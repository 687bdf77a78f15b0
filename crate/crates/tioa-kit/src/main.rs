use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tioa_core::operators::OpOptions;
use tioa_core::oracle::Limits;
use tioa_core::model::serialize_models;
use tioa_kit::eval::{CliError, Models};
use tioa_kit::gen::{seed_from_env, Generator, Shape};
use tioa_kit::report::{run_query, Outcome, RunOptions};

#[derive(Parser)]
#[command(name = "tioa-kit", version, about = "Verification of timed I/O automata specifications")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run queries against a model file and print JSON reports.
    Check {
        /// Model file.
        #[arg(short, long)]
        model: PathBuf,
        /// A query such as `refinement: Machine2 <= Machine`.
        #[arg(short, long, required_unless_present = "queries")]
        query: Option<String>,
        /// File with one query per line; blank lines and `#` comments are skipped.
        #[arg(long, conflicts_with = "query")]
        queries: Option<PathBuf>,
        /// Cross-check every verdict with the region-graph oracle.
        #[arg(long)]
        oracle: bool,
        /// Write DOT renderings of the query operands.
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Keep unreachable product locations.
        #[arg(long)]
        no_reach_prune: bool,
        /// Worker threads for a query file.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Print a random model file (seed from TIOA_SEED unless given).
    Random {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 2)]
        count: usize,
    },
}

fn read(path: &PathBuf) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::new("io", e.to_string()).at(path.display().to_string()))
}

fn run_all(models: &Models, queries: &[String], opts: RunOptions, jobs: usize) -> Vec<Outcome> {
    let jobs = jobs.clamp(1, queries.len().max(1));
    let mut out: Vec<Option<Outcome>> = vec![None; queries.len()];
    std::thread::scope(|s| {
        let chunks: Vec<_> = out.chunks_mut(queries.len().div_ceil(jobs).max(1)).collect();
        let mut start = 0;
        for slot in chunks {
            let qs = &queries[start..start + slot.len()];
            start += slot.len();
            s.spawn(move || {
                for (o, q) in slot.iter_mut().zip(qs) {
                    *o = Some(run_query(models, q, opts));
                }
            });
        }
    });
    out.into_iter().map(|o| o.expect("every query is run")).collect()
}

fn check(
    model: PathBuf,
    query: Option<String>,
    queries: Option<PathBuf>,
    opts: RunOptions,
    dot: Option<PathBuf>,
    jobs: usize,
) -> Result<i32, CliError> {
    let models = Models::parse(&read(&model)?).map_err(|e| match e.location {
        Some(_) => e,
        None => e.at(model.display().to_string()),
    })?;
    let list: Vec<String> = match (query, queries) {
        (Some(q), _) => vec![q],
        (None, Some(f)) => read(&f)?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(String::from)
            .collect(),
        (None, None) => return Err(CliError::new("usage", "one of --query or --queries is required")),
    };
    let outcomes = run_all(&models, &list, opts, jobs);
    for o in &outcomes {
        println!("{}", o.line());
    }
    if let Some(path) = dot {
        let text: String = outcomes.iter().flat_map(|o| o.dots.iter().cloned()).collect();
        fs::write(&path, text).map_err(|e| CliError::new("io", e.to_string()).at(path.display().to_string()))?;
    }
    Ok(outcomes.iter().map(|o| o.code).max().unwrap_or(0))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check { model, query, queries, oracle, dot, no_reach_prune, jobs } => {
            let opts = RunOptions {
                ops: OpOptions { reach_prune: !no_reach_prune },
                oracle: oracle.then_some(Limits::EXTENDED),
            };
            check(model, query, queries, opts, dot, jobs)
        }
        Command::Random { seed, count } => {
            let mut g = Generator::new(seed.unwrap_or_else(seed_from_env), Shape::default());
            let ts: Vec<_> = (0..count)
                .map(|i| {
                    let mut t = g.automaton(&["a", "b"], &["c", "d"]);
                    t.name = format!("R{i}");
                    t
                })
                .collect();
            println!("{}", serialize_models(&ts));
            Ok(0)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            println!("{}", serde_json::to_string(&e.to_json()).expect("error serialization cannot fail"));
            ExitCode::from(2)
        }
    }
}
