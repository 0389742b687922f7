use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use soliton_cli::params::{parse_overrides, read_config};
use soliton_cli::report::Verdict;
use soliton_cli::runner::{self, RunResult, Spec, DEFAULT_SEED};
use soliton_cli::{catalog, patches};

#[derive(Parser)]
#[command(
    name = "soliton-lab",
    version,
    about = "Numerical experiments on translating solitons and their models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the experiments.
    List {
        /// Machine-readable catalog with default parameters.
        #[arg(long)]
        json: bool,
    },
    /// Run one experiment: `run <name> [key=value | --key value]... [--seed N] [--out DIR] [--threads K] [--config FILE]`.
    Run {
        experiment: String,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        args: Vec<String>,
    },
    /// Run every experiment with default parameters.
    RunAll {
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value = "soliton-lab-out")]
        out: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Re-run the spec recorded in a manifest.json.
    Rerun {
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Write or summarize surface patches in the JSON container format.
    Patch {
        #[command(subcommand)]
        action: PatchAction,
    },
}

#[derive(Subcommand)]
enum PatchAction {
    /// Export a model surface: cylinder, sphere-cylinder, bowl-line or bowl3.
    Export { model: String, file: PathBuf },
    /// Print kind, grid size and mean-curvature range of a patch file.
    Inspect { file: PathBuf },
}

struct RunArgs {
    overrides: Vec<(String, String)>,
    seed: u64,
    out: Option<PathBuf>,
    threads: Option<usize>,
}

/// Pulls the runner flags out of the free-form argument list; the rest are
/// parameter overrides. A config file is applied before command-line values.
fn split_run_args(args: &[String]) -> Result<RunArgs> {
    let mut seed = DEFAULT_SEED;
    let mut out = None;
    let mut threads = None;
    let mut config = Vec::new();
    let mut rest = Vec::new();
    for (k, v) in parse_overrides(args)? {
        match k.as_str() {
            "seed" => seed = v.parse().context("--seed expects a 64-bit integer")?,
            "out" => out = Some(PathBuf::from(v)),
            "threads" => threads = Some(v.parse().context("--threads expects a count")?),
            "config" => config.extend(read_config(&PathBuf::from(v))?),
            _ => rest.push((k, v)),
        }
    }
    config.extend(rest);
    Ok(RunArgs {
        overrides: config,
        seed,
        out,
        threads,
    })
}

fn print_result(r: &RunResult) {
    let rep = &r.report;
    println!(
        "{:<22} {}  ({:.2}s)",
        rep.experiment,
        if rep.passed { "PASS" } else { "FAIL" },
        r.manifest.wall_seconds
    );
    for (name, v) in &rep.verdicts {
        if *v == Verdict::Fail {
            println!("    failed: {name}");
        }
    }
    if let Some(e) = &rep.error {
        println!("    error: {e}");
    }
}

/// 0 when every verdict passes, 1 on a failed verdict, 2 when the run errored.
fn status(r: &RunResult) -> u8 {
    match (&r.report.error, r.report.passed) {
        (Some(_), _) => 2,
        (None, true) => 0,
        (None, false) => 1,
    }
}

fn real_main() -> Result<u8> {
    let cli = Cli::parse();
    match cli.command {
        Command::List { json } => {
            print!(
                "{}",
                if json {
                    catalog::json()
                } else {
                    catalog::text()
                }
            );
            Ok(0)
        }
        Command::Run { experiment, args } => {
            let a = split_run_args(&args)?;
            let spec = Spec::new(&experiment, &a.overrides, a.seed)?;
            let out = a
                .out
                .unwrap_or_else(|| PathBuf::from("soliton-lab-out").join(&experiment));
            let r = runner::run(&spec, &out, a.threads)?;
            print_result(&r);
            println!("report: {}", out.join("report.json").display());
            Ok(status(&r))
        }
        Command::RunAll { seed, out, threads } => {
            let (_, results) = runner::run_all(seed, &out, threads, print_result)?;
            println!("summary: {}", out.join("summary.json").display());
            Ok(results.iter().map(status).max().unwrap_or(0))
        }
        Command::Rerun {
            manifest,
            out,
            threads,
        } => {
            let spec = Spec::from_manifest(&manifest)?;
            let out = match out {
                Some(o) => o,
                None => bail!("rerun needs --out so the original outputs are kept"),
            };
            let r = runner::run(&spec, &out, threads)?;
            print_result(&r);
            Ok(status(&r))
        }
        Command::Patch { action } => {
            match action {
                PatchAction::Export { model, file } => {
                    patches::export(&model, &file)?;
                    println!("wrote {}", file.display());
                }
                PatchAction::Inspect { file } => {
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&patches::inspect(&file)?)?
                    );
                }
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
