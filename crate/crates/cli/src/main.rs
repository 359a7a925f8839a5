//! `mfd-glht` command-line front end.

mod report;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mfd_glht::dataset::{load_csv, LoadOptions};
use mfd_glht::glht::{load_c0_csv, load_contrast_csv, ContrastSpec};
use mfd_glht::simulation::{are_rows, size_power_study_with, write_results_csv, StudyPlan};
use mfd_glht::stats::{run_glht, STATISTIC_NAMES};
use mfd_glht::GlhtError;
use serde_json::json;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "mfd-glht", version, about = "Linear hypothesis tests for multivariate functional data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test C M(t) = C0(t) on a dataset and write a JSON report.
    Test(TestArgs),
    /// Run a Monte Carlo size/power study.
    Simulate(SimulateArgs),
    /// Turn a results CSV into an SVG chart or an annotated CSV.
    Report(ReportArgs),
}

#[derive(Args)]
struct TestArgs {
    /// Long-format CSV: group,obs,component,time_index,value[,time].
    #[arg(long)]
    data: PathBuf,
    /// Contrast matrix C as row,col,value (1-based).
    #[arg(long)]
    contrast: PathBuf,
    /// Optional C0 as row,component,time_index,value; zero when omitted.
    #[arg(long)]
    c0: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Time domain used when the data has no `time` column.
    #[arg(long, num_args = 2, value_names = ["START", "END"], default_values_t = [0.0, 1.0])]
    domain: Vec<f64>,
    /// Report path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON config: one setting, or {"base": {...}, "sweep": {...}}.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, env = "MFD_GLHT_THREADS")]
    threads: Option<usize>,
    /// Results CSV.
    #[arg(long)]
    out: PathBuf,
    /// JSON summary path; standard output when omitted.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Svg,
    Csv,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "svg")]
    format: Format,
    #[arg(long)]
    out: PathBuf,
}

/// A failure with its exit code: 2 for bad input, 3 for numerical degeneracy.
struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl From<GlhtError> for Failure {
    fn from(e: GlhtError) -> Self {
        Failure { code: if e.is_numerical() { 3 } else { 2 }, kind: e.kind(), message: e.to_string() }
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure { code: 2, kind: "io", message: format!("{}: {e}", path.display()) }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, kind: "usage", message: message.into() }
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path).map(BufReader::new).map_err(|e| io_failure(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| io_failure(path, e))
}

fn write_json(path: Option<&Path>, value: &serde_json::Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    match path {
        Some(p) => {
            let mut f = create(p)?;
            writeln!(f, "{text}").and_then(|_| f.flush()).map_err(|e| io_failure(p, e))
        }
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn cmd_test(a: TestArgs) -> Result<(), Failure> {
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(usage(format!("--alpha must lie in (0, 1), got {}", a.alpha)));
    }
    let opts = LoadOptions { domain: (a.domain[0], a.domain[1]), grid: None };
    let ds = load_csv(open(&a.data)?, &opts)?;
    let c = load_contrast_csv(open(&a.contrast)?, Some(ds.k()))?;
    let c0 = match &a.c0 {
        Some(path) => Some(load_c0_csv(open(path)?, c.nrows(), ds.p(), ds.m())?),
        None => None,
    };
    let spec = ContrastSpec::new(c, c0)?;
    let report = run_glht(&ds, &spec, a.alpha)?;
    write_json(a.out.as_deref(), &serde_json::to_value(&report).expect("serializable"))
}

fn cmd_simulate(a: SimulateArgs) -> Result<(), Failure> {
    if a.threads == Some(0) {
        return Err(usage("--threads must be at least 1"));
    }
    let text = std::fs::read_to_string(&a.config).map_err(|e| io_failure(&a.config, e))?;
    let plan = StudyPlan::from_json(&text)?.with_overrides(a.reps, a.seed)?;
    let mut results = Vec::with_capacity(plan.settings.len());
    for cfg in &plan.settings {
        results.push(size_power_study_with(cfg, a.threads)?);
    }
    let mut out = create(&a.out)?;
    write_results_csv(&results, &mut out).and_then(|_| out.flush()).map_err(|e| io_failure(&a.out, e))?;

    let settings: Vec<_> = results
        .iter()
        .map(|r| {
            json!({
                "label": r.label,
                "rates": r.rates,
                "reps_ok": r.reps_ok,
                "reps_failed": r.reps_failed,
                "failures": r.failures,
                "mean_d_b": r.mean_d_b,
                "mean_d_e": r.mean_d_e,
                "seed": r.seed,
                "elapsed_secs": r.elapsed_secs,
            })
        })
        .collect();
    let are = are_rows(&results).map(|t| {
        STATISTIC_NAMES.iter().zip(t.as_array()).map(|(n, v)| (n.to_string(), json!(v))).collect::<serde_json::Map<_, _>>()
    });
    write_json(a.summary.as_deref(), &json!({ "settings": settings, "are": are }))
}

fn cmd_report(a: ReportArgs) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&a.input).map_err(|e| io_failure(&a.input, e))?;
    let table = report::ResultsTable::parse(&text).map_err(|m| Failure { code: 2, kind: "malformed_results", message: m })?;
    let body = match a.format {
        Format::Svg => report::svg(&table),
        Format::Csv => table.with_mc_se(),
    };
    std::fs::write(&a.out, body).map_err(|e| io_failure(&a.out, e))
}

fn fail(f: Failure) -> ExitCode {
    let line = json!({ "error": { "kind": f.kind, "message": f.message, "exit_code": f.code } });
    eprintln!("{line}");
    ExitCode::from(f.code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version.
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            return fail(usage(first.to_string()));
        }
    };
    let res = match cli.command {
        Command::Test(a) => cmd_test(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Report(a) => cmd_report(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => fail(f),
    }
}
