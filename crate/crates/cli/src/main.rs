use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use imbergman::plan::{self, ExperimentPlan, PlotKind};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "imbergman", version, about = "Runs verification suites and emits plot data")]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand)]
enum Commands {
    /// Run an experiment plan and write the summary and detail tables.
    Run {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// overrides the plan seed
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print one series of a summary as CSV.
    Emit {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        kind: String,
    },
}

fn run(plan_path: PathBuf, out: PathBuf, seed: Option<u64>, threads: Option<usize>) -> Result<bool> {
    if let Some(k) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build_global()
            .context("thread pool")?;
    }
    let bytes = std::fs::read(&plan_path).with_context(|| format!("reading {}", plan_path.display()))?;
    let text = String::from_utf8(bytes.clone()).context("plan is not UTF-8")?;
    let mut p = ExperimentPlan::from_json(&text)?;
    if let Some(s) = seed {
        p.seed = s;
    }
    let base = plan_path.parent().map(PathBuf::from).unwrap_or_default();
    let (report, art) = plan::run_plan(&p, &bytes, &base)?;
    let summary = plan::write_outputs(&report, &art, &p.outputs, &out)?;
    for r in &report.results {
        for c in &r.checks {
            let tag = if c.passed { "pass" } else if c.hard { "FAIL" } else { "soft-fail" };
            println!("{tag:9} {}/{}/{}", r.suite, r.domain, c.name);
        }
    }
    eprintln!("summary: {}", summary.display());
    Ok(report.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Commands::Run { plan, out, seed, threads } => run(plan, out, seed, threads),
        Commands::Emit { report, kind } => (|| {
            let kind: PlotKind = kind.parse()?;
            let r = plan::read_report(&report)?;
            plan::emit(&r, kind, std::io::stdout().lock())?;
            Ok(true)
        })(),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
