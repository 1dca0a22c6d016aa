//! Command-line front end: build counting box splines from problem files,
//! evaluate and pretty-print artifacts, and verify against the oracles.
//!
//! Exit codes: 0 success, 1 verification mismatch, 2 input/schema error,
//! 3 construction precondition violated, 4 evaluation outside the domain.

use boxcount::oracle::{diff_test_with, Problem};
use boxcount::scalar::{Int, Rat};
use boxcount::spline::BoxSpline;
use boxcount::Error;
use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

#[derive(Parser)]
#[command(name = "boxcount", version, about = "Exact counting box splines")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build the counting box spline of a problem file and write it as JSON.
    Count {
        #[arg(long)]
        input: PathBuf,
        /// Output path; standard output when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Evaluate a box-spline artifact at an integer point.
    Eval {
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated integer coordinates, e.g. "2,3".
        #[arg(long, allow_hyphen_values = true)]
        point: String,
    },
    /// Compare the symbolic construction against the brute-force oracle on a grid.
    Verify {
        #[arg(long)]
        input: PathBuf,
        /// Grid bound B: the grid is [0,B]^t, or [-B,B]^t for partition functions.
        #[arg(long)]
        bound: i64,
        /// Replay a previously written artifact instead of rebuilding.
        #[arg(long)]
        artifact: Option<PathBuf>,
        /// Worker threads for the grid scan; defaults to the rayon heuristic.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Pretty-print the regions and quasi-polynomials of an artifact.
    Show {
        #[arg(long)]
        input: PathBuf,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T, u8> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        2u8
    })?;
    serde_json::from_str(&text).map_err(|e| {
        eprintln!("error: {} {} is not valid: {e}", what, path.display());
        2u8
    })
}

/// Maps a construction-time error to the exit-code taxonomy.
fn construction_exit(e: &Error) -> u8 {
    match e {
        Error::DimensionMismatch { .. } | Error::InvalidInput(_) => 2,
        _ => 3,
    }
}

fn parse_point(s: &str) -> Result<Vec<Int>, u8> {
    s.split(',')
        .map(|part| {
            Int::from_str(part.trim()).map_err(|_| {
                eprintln!("error: invalid point coordinate {part:?}");
                2u8
            })
        })
        .collect()
}

fn format_value(v: &Rat) -> String {
    if v.is_integer() {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

fn cmd_count(input: &Path, output: Option<&Path>) -> Result<(), u8> {
    let problem: Problem = read_json(input, "problem file")?;
    let spline = problem.construct().map_err(|e| {
        eprintln!("error: construction failed: {e}");
        construction_exit(&e)
    })?;
    let json = serde_json::to_string(&spline).expect("box splines always serialize");
    match output {
        Some(path) => std::fs::write(path, json + "\n").map_err(|e| {
            eprintln!("error: cannot write {}: {e}", path.display());
            2u8
        })?,
        None => println!("{json}"),
    }
    Ok(())
}

fn cmd_eval(input: &Path, point: &str) -> Result<(), u8> {
    let spline: BoxSpline = read_json(input, "artifact")?;
    let point = parse_point(point)?;
    match spline.eval(&point) {
        Ok(v) => {
            println!("{}", format_value(&v));
            Ok(())
        }
        Err(e @ Error::DimensionMismatch { .. }) => {
            eprintln!("error: {e}");
            Err(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            Err(4)
        }
    }
}

fn cmd_verify(
    input: &Path,
    bound: i64,
    artifact: Option<&Path>,
    jobs: Option<usize>,
) -> Result<(), u8> {
    let problem: Problem = read_json(input, "problem file")?;
    let spline = match artifact {
        Some(path) => read_json(path, "artifact")?,
        None => problem.construct().map_err(|e| {
            eprintln!("error: construction failed: {e}");
            construction_exit(&e)
        })?,
    };
    let run = || diff_test_with(&problem, &spline, bound);
    let report = match jobs {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| {
                eprintln!("error: cannot build thread pool: {e}");
                2u8
            })?
            .install(run),
        None => run(),
    }
    .map_err(|e| {
        eprintln!("error: verification failed to run: {e}");
        construction_exit(&e)
    })?;
    let clean = report.mismatches.is_empty();
    println!(
        "{}",
        serde_json::to_string(&report).expect("reports always serialize")
    );
    if clean {
        Ok(())
    } else {
        Err(1)
    }
}

fn cmd_show(input: &Path) -> Result<(), u8> {
    let spline: BoxSpline = read_json(input, "artifact")?;
    let dim = spline.arrangement().dim();
    let names: Vec<String> = (1..=dim).map(|i| format!("n{i}")).collect();
    println!("{}", spline.render(&names));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Count { input, output } => cmd_count(input, output.as_deref()),
        Cmd::Eval { input, point } => cmd_eval(input, point),
        Cmd::Verify {
            input,
            bound,
            artifact,
            jobs,
        } => cmd_verify(input, *bound, artifact.as_deref(), *jobs),
        Cmd::Show { input } => cmd_show(input),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => ExitCode::from(code),
    }
}
