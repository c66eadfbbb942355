use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use tinyquant::io;
use tinyquant::pipeline::{self, CompileOptions, Planner};
use tinyquant::synth::{self, SynthConfig};
use tinyquant_core::codegen::{emit_memory_map, memory_map_json};
use tinyquant_core::haunter::BitwidthAssignment;
use tinyquant_core::interp::FixedSemantics;
use tinyquant_core::numrep::Representation;

/// Mixed-precision quantization and scratch-memory planning for tiny models.
#[derive(Parser)]
#[command(name = "tinyquant", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Explore bitwidths, plan memory and emit artifacts.
    Compile(CompileArgs),
    /// Explore bitwidths and print the report only.
    Explore(CompileArgs),
    /// Plan a live-range trace.
    Plan(PlanArgs),
    /// Evaluate assignments against the float reference.
    Eval(EvalArgs),
    /// Walk the two-weight example through every phase.
    Demo(DemoArgs),
    /// Write a seeded synthetic benchmark (TINYQUANT_SEED).
    Synth(SynthArgs),
}

fn parse_rep(s: &str) -> Result<Representation, String> {
    s.parse().map_err(|e| format!("{e}"))
}

#[derive(Args, Clone)]
struct RepArgs {
    #[arg(long, value_parser = parse_rep, default_value = "posit")]
    rep: Representation,
    #[arg(long, default_value_t = 8)]
    low: u32,
    #[arg(long, default_value_t = 16)]
    high: u32,
    /// posit es candidates for the low bitwidth
    #[arg(long, value_delimiter = ',')]
    es_low: Option<Vec<u32>>,
    /// posit es candidates for the high bitwidth
    #[arg(long, value_delimiter = ',')]
    es_high: Option<Vec<u32>>,
}

#[derive(Args, Clone)]
struct ModelArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct BudgetArgs {
    /// bytes
    #[arg(long)]
    mem_limit: u64,
    #[arg(long, default_value_t = 1.0)]
    soft_limit: f64,
    #[arg(long, default_value_t = 1)]
    coarsen: u64,
    #[arg(long, default_value_t = 7200)]
    timeout_secs: u64,
    #[arg(long, value_enum, default_value_t = Planner::Exact)]
    planner: Planner,
}

#[derive(Args)]
struct CompileArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    rep: RepArgs,
    #[command(flatten)]
    budget: BudgetArgs,
    /// choose the bitwidth pair from these options instead of --low/--high
    #[arg(long, value_delimiter = ',')]
    pair_from: Option<Vec<u32>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlanArgs {
    /// trace JSON: {"ranges": [{"name", "size", "start", "end"}, ...]}
    trace: PathBuf,
    #[arg(long, default_value_t = 1)]
    coarsen: u64,
    #[arg(long, default_value_t = 7200)]
    timeout_secs: u64,
    #[arg(long, value_enum, default_value_t = Planner::Exact)]
    planner: Planner,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    rep: RepArgs,
    /// assignment JSON (tensor -> bits); default evaluates all-low and all-high
    #[arg(long)]
    rho: Option<PathBuf>,
    /// integer fixed-point arithmetic, as in the emitted C
    #[arg(long)]
    integer: bool,
}

#[derive(Args)]
struct DemoArgs {
    #[arg(long, value_parser = parse_rep, default_value = "posit")]
    rep: Representation,
    #[arg(long, default_value_t = 3)]
    mem_limit: u64,
    #[arg(long, default_value_t = 1.0)]
    soft_limit: f64,
    /// let stage I choose es instead of fixing it at 2
    #[arg(long)]
    select_es: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value_t = 16)]
    samples: usize,
}

/// Exit status for runs whose plan does not fit the budget.
const OVER_BUDGET: u8 = 2;

fn options(rep: &RepArgs, budget: &BudgetArgs) -> Result<CompileOptions> {
    if !(budget.soft_limit.is_finite() && budget.soft_limit > 0.0) {
        bail!("--soft-limit must be a positive real");
    }
    if budget.coarsen == 0 {
        bail!("--coarsen must be at least 1");
    }
    let mut o = CompileOptions::new(rep.rep, rep.low, rep.high, budget.mem_limit);
    o.es_low = rep.es_low.clone();
    o.es_high = rep.es_high.clone();
    o.soft_limit = budget.soft_limit;
    o.coarsen = budget.coarsen;
    o.timeout = Duration::from_secs(budget.timeout_secs);
    o.planner = budget.planner;
    Ok(o)
}

fn budget_status(report: &pipeline::RunReport) -> u8 {
    if report.within_budget {
        0
    } else {
        eprintln!(
            "warning: planned RAM {} bytes exceeds the limit of {} x {}",
            report.ram_bytes, report.memory_limit, report.soft_limit
        );
        OVER_BUDGET
    }
}

fn cmd_compile(args: CompileArgs, write: bool) -> Result<u8> {
    let model = io::load_model(&args.model.model, args.model.weights.as_deref()).context("phase `load` failed")?;
    let data = io::load_dataset(args.model.data.as_deref(), &model).context("phase `load` failed")?;
    let mut opts = options(&args.rep, &args.budget)?;
    opts.pair_from = args.pair_from;
    let compiled = pipeline::compile(&model, &data, &opts)?;
    print!("{}", pipeline::report_text(&compiled.report));
    match (&args.out, write) {
        (Some(out), true) => {
            pipeline::write_artifacts(out, &compiled).context("phase `write` failed")?;
            println!("artifacts written to {}", out.display());
        }
        (Some(out), false) => {
            io::write(&out.join("report.json"), &pipeline::report_json(&compiled.report))?;
            io::write(&out.join("ledger.jsonl"), &io::ledger_jsonl(&compiled.exploration.ledger))?;
        }
        (None, _) => {}
    }
    Ok(budget_status(&compiled.report))
}

fn cmd_plan(args: PlanArgs) -> Result<u8> {
    if args.coarsen == 0 {
        bail!("--coarsen must be at least 1");
    }
    let ranges = io::parse_trace(&io::read(&args.trace)?).with_context(|| format!("in {}", args.trace.display()))?;
    let (report, outcome) =
        pipeline::plan_trace(&ranges, args.planner, args.coarsen, Duration::from_secs(args.timeout_secs))
            .context("phase `plan` failed")?;
    let text = emit_memory_map(&ranges, &outcome.chosen);
    println!("lower bound {} bytes, first-fit {} bytes", report.lower_bound, report.first_fit_peak);
    print!("{text}");
    if let Some(out) = &args.out {
        io::write(&out.join("plan.json"), &(serde_json::to_string_pretty(&report)? + "\n"))?;
        io::write(&out.join("memory_map.json"), &(memory_map_json(&outcome.chosen) + "\n"))?;
        io::write(&out.join("memory_map.txt"), &text)?;
    }
    Ok(0)
}

fn cmd_eval(args: EvalArgs) -> Result<u8> {
    let model = io::load_model(&args.model.model, args.model.weights.as_deref()).context("phase `load` failed")?;
    let data = io::load_dataset(args.model.data.as_deref(), &model).context("phase `load` failed")?;
    let budget = BudgetArgs { mem_limit: 0, soft_limit: 1.0, coarsen: 1, timeout_secs: 0, planner: Planner::FirstFit };
    let opts = options(&args.rep, &budget)?;
    let assignments = match &args.rho {
        Some(p) => vec![(p.display().to_string(), io::parse_assignment(&io::read(p)?)?)],
        None => vec![
            ("all-low".into(), BitwidthAssignment::uniform(&model, args.rep.low)),
            ("all-high".into(), BitwidthAssignment::uniform(&model, args.rep.high)),
        ],
    };
    let semantics = if args.integer { FixedSemantics::Integer } else { FixedSemantics::QuantizeCompute };
    let (reference, params, rows) =
        pipeline::eval(&model, &data, &opts, &assignments, semantics).context("phase `eval` failed")?;
    println!("parameters {}", serde_json::to_string(&params)?);
    println!("float      score {:.6}", reference.score);
    for row in rows {
        println!(
            "{:<10} score {:.6} invalid {} RAM {} bytes",
            row.label, row.accuracy.score, row.accuracy.invalid, row.ram_bytes
        );
    }
    Ok(0)
}

fn cmd_demo(args: DemoArgs) -> Result<u8> {
    let mut opts = CompileOptions::new(args.rep, 8, 16, args.mem_limit);
    opts.soft_limit = args.soft_limit;
    if !args.select_es {
        opts.es_low = Some(vec![2]);
        opts.es_high = Some(vec![2]);
    }
    let (text, compiled) = tinyquant::demo::walkthrough(&opts)?;
    print!("{text}");
    if let Some(out) = &args.out {
        pipeline::write_artifacts(out, &compiled)?;
    }
    Ok(budget_status(&compiled.report))
}

fn write_synthetic(dir: &Path, s: &synth::Synthetic) -> Result<()> {
    io::write(&dir.join("model.tq"), &s.program.to_string())?;
    io::write(&dir.join("weights.json"), &(serde_json::to_string_pretty(&s.weights)? + "\n"))?;
    io::write(&dir.join("data.json"), &(io::dataset_json(&s.dataset) + "\n"))
}

fn cmd_synth(args: SynthArgs) -> Result<u8> {
    let seed = synth::seed_from_env()?;
    let mut rng = synth::rng(seed);
    let cfg = SynthConfig { samples: args.samples, ..SynthConfig::default() };
    for i in 0..args.count {
        let s = synth::generate(&mut rng, &cfg);
        let dir = if args.count == 1 { args.out.clone() } else { args.out.join(format!("bench{i:03}")) };
        write_synthetic(&dir, &s)?;
        println!("{}: {} tensors", dir.display(), s.tensor_count());
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compile(a) => cmd_compile(a, true),
        Command::Explore(a) => cmd_compile(a, false),
        Command::Plan(a) => cmd_plan(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Demo(a) => cmd_demo(a),
        Command::Synth(a) => cmd_synth(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
