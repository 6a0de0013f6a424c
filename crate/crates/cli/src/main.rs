// SPDX-License-Identifier: Apache-2.0

//! `rtlsmith`: plan, run, report and benchmark from the command line.
//!
//! Exit status is 0 only when every requested design ends with a verified
//! top task (for `run` and `bench`) or the command otherwise succeeded.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rtlsmith::ec::EcRunner;
use rtlsmith::metrics::{
    compute_report, render_json, render_table, run_benchmark, BenchmarkManifest, MetricsReport, RunLedger,
};
use rtlsmith::pipeline::{backend_from_config, checker_from_config, Mode, Pipeline};
use rtlsmith::planner::DesignPlan;
use rtlsmith::{DesignInput, PipelineConfig, Workspace};

const LEDGER_FILE: &str = "ledger.jsonl";

#[derive(Parser, Debug)]
#[command(name = "rtlsmith", version, about = "Generate equivalence-checked RTL from C reference models")]
struct Cli {
    /// Configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Workspace root; overrides the configuration.
    #[arg(long, global = true)]
    workspace: Option<PathBuf>,
    /// Replay recorded model transcripts from this directory.
    #[arg(long, global = true)]
    replay: Option<PathBuf>,
    /// Repair iterations per task.
    #[arg(long, global = true)]
    limit: Option<u32>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decompose designs into scheduled tasks without generating RTL.
    Plan(DesignArgs),
    /// Plan, generate, check and repair; then write the ledger and report.
    Run {
        #[command(flatten)]
        designs: DesignArgs,
        #[arg(long, value_enum, default_value_t = ModeArg::Decomposed)]
        mode: ModeArg,
    },
    /// Render metrics from the persisted ledger.
    Report {
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        /// Report a benchmark ledger of this mode instead of the run ledger.
        #[arg(long, value_enum)]
        bench: Option<ModeArg>,
    },
    /// Repeat every manifest design in independent workspaces.
    Bench {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Decomposed)]
        mode: ModeArg,
        /// Runs per design; overrides the manifest.
        #[arg(long)]
        runs: Option<u32>,
    },
}

#[derive(Args, Debug)]
struct DesignArgs {
    /// Benchmark manifest listing the designs.
    #[arg(long, conflicts_with_all = ["c_source", "spec", "top", "name"])]
    manifest: Option<PathBuf>,
    /// C reference model of a single design.
    #[arg(long = "c", requires_all = ["spec", "top"])]
    c_source: Option<PathBuf>,
    /// Natural-language specification of the design.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Entry function of the design.
    #[arg(long)]
    top: Option<String>,
    /// Design name; defaults to the C file stem.
    #[arg(long)]
    name: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Decomposed,
    Monolithic,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Decomposed => Mode::Decomposed,
            ModeArg::Monolithic => Mode::Monolithic,
        }
    }
}

impl ModeArg {
    fn label(self) -> &'static str {
        match self {
            ModeArg::Decomposed => "decomposed",
            ModeArg::Monolithic => "monolithic",
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Json,
}

/// A design to process and the configuration that applies to it.
struct Job {
    input: DesignInput,
    config: PipelineConfig,
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_env("RTLSMITH_LOG")
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::FAILURE
        }
    }
}

/// The error chain, skipping causes whose text a wrapper already includes.
fn describe(e: &anyhow::Error) -> String {
    let mut out = e.to_string();
    for cause in e.chain().skip(1) {
        let text = cause.to_string();
        if !out.ends_with(&text) {
            out.push_str(": ");
            out.push_str(&text);
        }
    }
    out
}

fn load_config(cli: &Cli, needs_backend: bool) -> Result<PipelineConfig> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let mut c = PipelineConfig::from_toml(&text).with_context(|| format!("parsing {}", path.display()))?;
            c.resolve_paths(path.parent().unwrap_or(Path::new("")));
            c
        }
        None => PipelineConfig::default(),
    };
    if let Some(ws) = &cli.workspace {
        config.workspace = ws.clone();
    }
    if let Some(dir) = &cli.replay {
        config.use_replay(dir.clone());
    }
    if let Some(limit) = cli.limit {
        config.limit = limit;
    }
    if needs_backend {
        config.validate()?;
    }
    Ok(config)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn jobs(args: &DesignArgs, config: &PipelineConfig) -> Result<Vec<Job>> {
    if let Some(path) = &args.manifest {
        let manifest = BenchmarkManifest::load(path)?;
        return manifest
            .designs
            .iter()
            .map(|e| Ok(Job { input: manifest.input(e)?, config: e.configure(config) }))
            .collect();
    }
    let (Some(c), Some(spec), Some(top)) = (&args.c_source, &args.spec, &args.top) else {
        bail!("give either --manifest or --c, --spec and --top");
    };
    let name = match &args.name {
        Some(n) => n.clone(),
        None => c.file_stem().and_then(|s| s.to_str()).context("C file has no usable stem")?.to_string(),
    };
    let input =
        DesignInput { design_name: name, top_function: top.clone(), c_source: read(c)?, spec_text: read(spec)? };
    Ok(vec![Job { input, config: config.clone() }])
}

fn backends(config: &PipelineConfig) -> Result<(Arc<dyn rtlsmith::gateway::ModelBackend>, Arc<EcRunner>)> {
    Ok((backend_from_config(config)?, Arc::new(checker_from_config(config)?)))
}

fn dispatch(cli: Cli) -> Result<bool> {
    match &cli.command {
        Command::Plan(args) => cmd_plan(&load_config(&cli, true)?, args),
        Command::Run { designs, mode } => cmd_run(&load_config(&cli, true)?, designs, (*mode).into()),
        Command::Report { format, bench } => cmd_report(&load_config(&cli, false)?, *format, *bench),
        Command::Bench { manifest, mode, runs } => cmd_bench(&load_config(&cli, true)?, manifest, *mode, *runs),
    }
}

fn cmd_plan(config: &PipelineConfig, args: &DesignArgs) -> Result<bool> {
    let jobs = jobs(args, config)?;
    let ws = Workspace::open(&config.workspace, true)?;
    let (backend, checker) = backends(config)?;
    for job in &jobs {
        let pipeline = Pipeline::new(&job.config, ws.clone(), backend.clone(), checker.clone() as _)?;
        pipeline.plan(&job.input, Mode::Decomposed)?;
        let plan = ws.plan(&job.input.design_name).context("plan was not saved")?;
        println!("design {} (top {}): {} task(s)", plan.design, plan.top, plan.schedule.len());
        for (i, name) in plan.schedule.iter().enumerate() {
            let owner = plan.owner_of(name);
            let task = ws.resolve(&plan.design, name).context("planned task missing")?;
            let reused = if owner != plan.design { format!(" (reused from {owner})") } else { String::new() };
            println!(
                "  {:>2}. {:<28} {:>5} bundle lines  deps: [{}]{}",
                i + 1,
                name,
                task.bundle.source_text.lines().count(),
                plan.graph.dependencies(name).join(", "),
                reused
            );
        }
    }
    Ok(true)
}

fn cmd_run(config: &PipelineConfig, args: &DesignArgs, mode: Mode) -> Result<bool> {
    let jobs = jobs(args, config)?;
    let ws = Workspace::open(&config.workspace, true)?;
    let (backend, checker) = backends(config)?;
    let mut all_verified = true;
    let mut model_requests = 0;
    for job in &jobs {
        let pipeline = Pipeline::new(&job.config, ws.clone(), backend.clone(), checker.clone() as _)?;
        let summary = pipeline.run(std::slice::from_ref(&job.input), mode)?.remove(0);
        for (task, result) in &summary.tasks {
            println!("{}/{}: {}", summary.design, task, serde_json::to_string(result)?);
        }
        let verified = summary.top_verified();
        println!(
            "design {}: top {} {}",
            summary.design,
            summary.top,
            if verified { "verified" } else { "NOT verified" }
        );
        all_verified &= verified;
        model_requests += pipeline.gateway.call_count();
    }
    println!("model requests: {model_requests}, equivalence checks: {}", checker.call_count());
    let ledger = RunLedger::from_workspace(&ws, config.limit);
    ledger.write(&ws.reports_dir().join(LEDGER_FILE))?;
    match compute_report(&ledger, &plans(&ws)) {
        Ok(report) => {
            ws.write_report("report.txt", render_table(&report).as_bytes())?;
            ws.write_report("report.json", render_json(&report).as_bytes())?;
        }
        Err(e) => eprintln!("warning: report not written: {e}"),
    }
    Ok(all_verified)
}

fn plans(ws: &Workspace) -> Vec<DesignPlan> {
    ws.designs().iter().filter_map(|d| ws.plan(d)).collect()
}

/// Plans of a benchmark, taken from the first run workspace holding each design.
fn bench_plans(mode_dir: &Path, ledger: &RunLedger) -> Result<Vec<DesignPlan>> {
    let mut designs: Vec<&str> = ledger.records.iter().map(|r| r.design.as_str()).collect();
    designs.dedup();
    designs.sort_unstable();
    designs.dedup();
    let mut runs: Vec<PathBuf> = std::fs::read_dir(mode_dir)
        .with_context(|| format!("reading {}", mode_dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    runs.sort_by_key(|p| {
        p.file_name()
            .and_then(|n| n.to_str())
            .and_then(|n| n.strip_prefix("run-"))
            .and_then(|k| k.parse::<u32>().ok())
            .unwrap_or(u32::MAX)
    });
    let mut out = Vec::new();
    for design in designs {
        let plan = runs.iter().filter_map(|r| Workspace::open(r, false).ok()).find_map(|ws| ws.plan(design));
        // A design whose planning failed in every run has no rows.
        out.extend(plan);
    }
    Ok(out)
}

/// Writes to stdout; a closed pipe (as with `| head`) is not an error.
fn emit(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn print_report(report: &MetricsReport, format: Format) {
    match format {
        Format::Table => emit(&render_table(report)),
        Format::Json => emit(&(render_json(report) + "\n")),
    }
}

fn cmd_report(config: &PipelineConfig, format: Format, bench: Option<ModeArg>) -> Result<bool> {
    let Ok(ws) = Workspace::open(&config.workspace, false) else {
        eprintln!("no runs: {} is not a workspace", config.workspace.display());
        return Ok(false);
    };
    let ledger_path = match bench {
        Some(m) => ws.reports_dir().join(format!("bench-{}.jsonl", m.label())),
        None => ws.reports_dir().join(LEDGER_FILE),
    };
    if !ledger_path.is_file() {
        eprintln!("no runs recorded in {}", ws.root().display());
        return Ok(false);
    }
    let ledger = RunLedger::read(&ledger_path)?;
    if ledger.records.is_empty() {
        eprintln!("no runs recorded in {}", ws.root().display());
        return Ok(false);
    }
    let plans = match bench {
        Some(m) => bench_plans(&ws.root().join("bench").join(m.label()), &ledger)?,
        None => plans(&ws),
    };
    let report = compute_report(&ledger, &plans)?;
    print_report(&report, format);
    Ok(true)
}

fn cmd_bench(config: &PipelineConfig, manifest: &Path, mode: ModeArg, runs: Option<u32>) -> Result<bool> {
    let manifest = BenchmarkManifest::load(manifest)?;
    let ws = Workspace::open(&config.workspace, true)?;
    let (backend, checker) = backends(config)?;
    let root = ws.root().join("bench");
    let ledger = run_benchmark(&manifest, mode.into(), config, &root, backend, checker as _, runs)?;
    ledger.write(&ws.reports_dir().join(format!("bench-{}.jsonl", mode.label())))?;
    let report = compute_report(&ledger, &bench_plans(&root.join(mode.label()), &ledger)?)?;
    ws.write_report(&format!("bench-{}.txt", mode.label()), render_table(&report).as_bytes())?;
    ws.write_report(&format!("bench-{}.json", mode.label()), render_json(&report).as_bytes())?;
    emit(&render_table(&report));
    Ok(report.designs.iter().all(|d| d.design_fsr > 0.0))
}
