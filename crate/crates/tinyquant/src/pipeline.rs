//! End-to-end runs: exploration, final memory plan and C emission, plus the
//! report and artifacts written for each.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use tinyquant_core::codegen::{emit_c, emit_memory_map, memory_map_json, EmittedProgram};
use tinyquant_core::haunter::{BitwidthAssignment, Exploration, ExploreConfig, ExploreStats, Explorer, RepParams};
use tinyquant_core::interp::{Accuracy, Dataset, FixedSemantics};
use tinyquant_core::ir::Model;
use tinyquant_core::memplan::{self, ExactStats, LiveRange, MemoryMap};
use tinyquant_core::numrep::Representation;

use crate::budget::WallClock;
use crate::io;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Planner {
    Exact,
    #[value(name = "firstfit")]
    #[serde(rename = "firstfit")]
    FirstFit,
}

#[derive(Debug, Clone)]
pub struct CompileOptions {
    pub representation: Representation,
    pub low: u32,
    pub high: u32,
    /// posit es candidates; `None` uses the defaults per bitwidth
    pub es_low: Option<Vec<u32>>,
    pub es_high: Option<Vec<u32>>,
    pub memory_limit: u64,
    pub soft_limit: f64,
    pub coarsen: u64,
    pub timeout: Duration,
    pub planner: Planner,
    /// choose `(low, high)` from these bitwidths before exploring
    pub pair_from: Option<Vec<u32>>,
}

impl CompileOptions {
    pub fn new(representation: Representation, low: u32, high: u32, memory_limit: u64) -> Self {
        Self {
            representation,
            low,
            high,
            es_low: None,
            es_high: None,
            memory_limit,
            soft_limit: 1.0,
            coarsen: 1,
            timeout: Duration::from_secs(7200),
            planner: Planner::Exact,
            pair_from: None,
        }
    }

    fn explore_config(&self, low: u32, high: u32) -> ExploreConfig {
        let mut cfg = ExploreConfig::new(self.representation, low, high, self.memory_limit);
        cfg.soft_limit = self.soft_limit;
        if let Some(es) = &self.es_low {
            cfg.es_low = es.clone();
        }
        if let Some(es) = &self.es_high {
            cfg.es_high = es.clone();
        }
        cfg
    }
}

/// Everything about a run that is reproducible. Wall-clock times live in
/// [`Timings`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub representation: Representation,
    pub low: u32,
    pub high: u32,
    pub memory_limit: u64,
    pub soft_limit: f64,
    pub coarsen: u64,
    pub planner: Planner,
    pub rho: BitwidthAssignment,
    pub params: RepParams,
    pub accuracy: Accuracy,
    pub reference_accuracy: Accuracy,
    pub all_low_accuracy: Accuracy,
    pub all_low_ram_bytes: u64,
    pub first_fit_ram_bytes: u64,
    /// `None` with the first-fit planner
    pub exact_ram_bytes: Option<u64>,
    /// peak of the emitted memory map
    pub ram_bytes: u64,
    pub plan_optimal: bool,
    /// all-low fits the soft-scaled limit
    pub feasible: bool,
    /// `ram_bytes <= memory_limit * soft_limit`
    pub within_budget: bool,
    pub heat_map: Vec<(String, f64)>,
    pub promotion_order: Vec<String>,
    pub overshooting: Vec<String>,
    pub ledger_entries: usize,
    pub stats: ExploreStats,
    /// scratch size of the emitted C, fixed-point only
    pub c_scratch_bytes: Option<u64>,
}

/// Seconds per phase.
pub type Timings = BTreeMap<String, f64>;

#[derive(Debug, Clone)]
pub struct Compiled {
    pub report: RunReport,
    pub exploration: Exploration,
    pub ranges: Vec<LiveRange>,
    pub map: MemoryMap,
    pub c: Option<EmittedProgram>,
    pub timings: Timings,
}

fn timed<T>(timings: &mut Timings, phase: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let t = Instant::now();
    let out = f().with_context(|| format!("phase `{phase}` failed"));
    timings.insert(phase.into(), t.elapsed().as_secs_f64());
    out
}

/// Final plan: the exact planner under the wall-clock budget, or the
/// first-fit map when that is no larger.
pub fn plan(ranges: &[LiveRange], planner: Planner, coarsen: u64, timeout: Duration) -> Result<PlanOutcome> {
    let first_fit = memplan::solve_first_fit(ranges);
    let (exact, stats) = match planner {
        Planner::FirstFit => (None, None),
        Planner::Exact => {
            let (m, s) = memplan::solve_exact_with_stats(ranges, coarsen, &mut WallClock::new(timeout))?;
            (Some(m), Some(s))
        }
    };
    let chosen = match &exact {
        Some(e) if e.peak_bytes <= first_fit.peak_bytes => e.clone(),
        _ => first_fit.clone(),
    };
    memplan::validate(ranges, &chosen)?;
    Ok(PlanOutcome { first_fit, exact, stats, chosen })
}

#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub first_fit: MemoryMap,
    pub exact: Option<MemoryMap>,
    pub stats: Option<ExactStats>,
    pub chosen: MemoryMap,
}

/// Bitwidth pair selection, exploration, final plan and C. C is emitted for
/// fixed point with 8- and 16-bit tensors only.
pub fn compile(model: &Model, dataset: &Dataset, opts: &CompileOptions) -> Result<Compiled> {
    let mut timings = Timings::new();
    dataset.validate(model).context("dataset does not fit the program")?;

    let mut pair_runs = 0;
    let (low, high) = match &opts.pair_from {
        Some(options) => timed(&mut timings, "pair-selection", || {
            let lo = *options.iter().min().context("empty bitwidth list")?;
            let hi = *options.iter().max().expect("non-empty");
            let mut ex = Explorer::new(model, dataset, opts.explore_config(lo, hi.max(lo + 1)))?;
            let pair = ex.select_bitwidth_pair(options)?;
            pair_runs = ex.stats().pair_selection_execution_calls;
            Ok(pair)
        })?,
        None => (opts.low, opts.high),
    };

    let exploration = timed(&mut timings, "explore", || {
        let cfg = opts.explore_config(low, high);
        Ok(Explorer::new(model, dataset, cfg)?.explore()?)
    })?;
    let reference_accuracy = timed(&mut timings, "reference", || {
        let ex = Explorer::new(model, dataset, opts.explore_config(low, high))?;
        Ok(ex.reference_accuracy()?)
    })?;

    let ranges = memplan::live_ranges(model, &exploration.rho).context("phase `plan` failed")?;
    let outcome = timed(&mut timings, "plan", || plan(&ranges, opts.planner, opts.coarsen, opts.timeout))?;

    let integer_widths = [low, high].iter().all(|b| matches!(b, 8 | 16));
    let c = if matches!(exploration.params, RepParams::Fixed { .. }) && integer_widths {
        Some(timed(&mut timings, "codegen", || {
            Ok(emit_c(model, &exploration.params, &exploration.rho, &outcome.chosen)?)
        })?)
    } else {
        None
    };

    let mut stats = exploration.stats;
    stats.pair_selection_execution_calls += pair_runs;
    let ram = outcome.chosen.peak_bytes;
    let report = RunReport {
        representation: opts.representation,
        low,
        high,
        memory_limit: opts.memory_limit,
        soft_limit: opts.soft_limit,
        coarsen: opts.coarsen,
        planner: opts.planner,
        rho: exploration.rho.clone(),
        params: exploration.params.clone(),
        accuracy: exploration.accuracy,
        reference_accuracy,
        all_low_accuracy: exploration.ledger[0].accuracy,
        all_low_ram_bytes: exploration.all_low_usage,
        first_fit_ram_bytes: outcome.first_fit.peak_bytes,
        exact_ram_bytes: outcome.exact.as_ref().map(|m| m.peak_bytes),
        ram_bytes: ram,
        plan_optimal: outcome.chosen.optimal,
        feasible: exploration.feasible,
        within_budget: ram as f64 <= opts.memory_limit as f64 * opts.soft_limit,
        heat_map: exploration.heat_map.scores.clone(),
        promotion_order: exploration.heat_map.order.clone(),
        overshooting: exploration.overshooting.clone(),
        ledger_entries: exploration.ledger.len(),
        stats,
        c_scratch_bytes: c.as_ref().map(|c| c.scratch_bytes),
    };
    Ok(Compiled { report, exploration, ranges, map: outcome.chosen, c, timings })
}

pub fn report_json(report: &RunReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes") + "\n"
}

/// Human-readable summary of a report.
pub fn report_text(r: &RunReport) -> String {
    let mut s = String::new();
    let acc = |a: &Accuracy| match a.error() {
        Some(e) => format!("mean abs error {e:.6} ({} invalid)", a.invalid),
        None => format!("accuracy {:.4} ({} invalid)", a.score, a.invalid),
    };
    s += &format!("representation  {} {}/{} bits\n", r.representation, r.low, r.high);
    s += &format!("memory limit    {} bytes x {}\n", r.memory_limit, r.soft_limit);
    s += &format!("float           {}\n", acc(&r.reference_accuracy));
    s += &format!("all-low         {}\n", acc(&r.all_low_accuracy));
    s += &format!("chosen          {}\n", acc(&r.accuracy));
    let high: Vec<&str> = r.rho.names_at(r.high).collect();
    s += &format!("at {} bits      {}\n", r.high, if high.is_empty() { "-".into() } else { high.join(", ") });
    s += &format!("RAM first-fit   {} bytes\n", r.first_fit_ram_bytes);
    if let Some(e) = r.exact_ram_bytes {
        s += &format!("RAM exact       {e} bytes{}\n", if r.plan_optimal { " (optimal)" } else { "" });
    }
    if !r.feasible {
        s += "warning: even the all-low assignment exceeds the memory limit\n";
    } else if !r.within_budget {
        s += "warning: planned RAM exceeds the memory limit\n";
    }
    s
}

/// Writes `report.json`, `report.txt`, `timings.json`, `ledger.jsonl`,
/// `trace.json`, `memory_map.json`, `memory_map.txt` and, for fixed point,
/// `model.c`.
pub fn write_artifacts(out: &Path, c: &Compiled) -> Result<()> {
    io::write(&out.join("report.json"), &report_json(&c.report))?;
    io::write(&out.join("report.txt"), &report_text(&c.report))?;
    io::write(&out.join("timings.json"), &(serde_json::to_string_pretty(&c.timings)? + "\n"))?;
    io::write(&out.join("ledger.jsonl"), &io::ledger_jsonl(&c.exploration.ledger))?;
    io::write(&out.join("trace.json"), &(io::trace_json(&c.ranges) + "\n"))?;
    io::write(&out.join("memory_map.json"), &(memory_map_json(&c.map) + "\n"))?;
    io::write(&out.join("memory_map.txt"), &emit_memory_map(&c.ranges, &c.map))?;
    if let Some(prog) = &c.c {
        io::write(&out.join("model.c"), &prog.source)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub tensors: usize,
    pub lower_bound: u64,
    pub first_fit_peak: u64,
    pub exact_peak: Option<u64>,
    pub peak: u64,
    pub optimal: bool,
}

/// Planner-only mode: returns the report and the memory map text.
pub fn plan_trace(
    ranges: &[LiveRange],
    planner: Planner,
    coarsen: u64,
    timeout: Duration,
) -> Result<(PlanReport, PlanOutcome)> {
    let outcome = plan(ranges, planner, coarsen, timeout)?;
    let report = PlanReport {
        tensors: ranges.len(),
        lower_bound: memplan::lower_bound(ranges),
        first_fit_peak: outcome.first_fit.peak_bytes,
        exact_peak: outcome.exact.as_ref().map(|m| m.peak_bytes),
        peak: outcome.chosen.peak_bytes,
        optimal: outcome.chosen.optimal,
    };
    Ok((report, outcome))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub label: String,
    pub accuracy: Accuracy,
    pub ram_bytes: u64,
}

/// Accuracy and first-fit RAM of each assignment, after fitting parameters
/// for `(low, high)`.
pub fn eval(
    model: &Model,
    dataset: &Dataset,
    opts: &CompileOptions,
    assignments: &[(String, BitwidthAssignment)],
    semantics: FixedSemantics,
) -> Result<(Accuracy, RepParams, Vec<EvalRow>)> {
    let mut cfg = opts.explore_config(opts.low, opts.high);
    cfg.fixed_semantics = semantics;
    let mut ex = Explorer::new(model, dataset, cfg)?;
    ex.preprocess()?;
    let reference = ex.reference_accuracy()?;
    let params = ex.params().clone();
    let mut rows = Vec::new();
    for (label, rho) in assignments {
        let accuracy = ex.evaluate(rho).with_context(|| format!("evaluating `{label}`"))?;
        let ranges = memplan::live_ranges(model, rho)?;
        let ram_bytes = memplan::solve_first_fit(&ranges).peak_bytes;
        rows.push(EvalRow { label: label.clone(), accuracy, ram_bytes });
    }
    Ok((reference, params, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tinyquant_core::demo;

    fn demo_opts(limit: u64) -> CompileOptions {
        let mut o = CompileOptions::new(Representation::Posit, 8, 16, limit);
        o.es_low = Some(vec![2]);
        o.es_high = Some(vec![2]);
        o
    }

    #[test]
    fn worked_example_end_to_end() {
        let m = demo::model();
        let c = compile(&m, &Dataset::single_empty(), &demo_opts(3)).unwrap();
        assert_eq!(c.report.rho.get("t2"), Some(8));
        for n in ["t1", "X1", "B1", "W1"] {
            assert_eq!(c.report.rho.get(n), Some(16));
        }
        assert_eq!(c.report.exact_ram_bytes, Some(3));
        assert!(c.report.within_budget && c.report.feasible);
        assert!(c.c.is_none());
    }

    #[test]
    fn zero_limit_is_infeasible() {
        let m = demo::model();
        let c = compile(&m, &Dataset::single_empty(), &demo_opts(0)).unwrap();
        assert!(!c.report.feasible && !c.report.within_budget);
        assert_eq!(c.report.rho, BitwidthAssignment::uniform(&m, 8));
    }

    #[test]
    fn reports_are_reproducible() {
        let m = demo::model();
        let a = compile(&m, &Dataset::single_empty(), &demo_opts(3)).unwrap();
        let b = compile(&m, &Dataset::single_empty(), &demo_opts(3)).unwrap();
        assert_eq!(report_json(&a.report), report_json(&b.report));
        let back: RunReport = serde_json::from_str(&report_json(&a.report)).unwrap();
        assert_eq!(back, a.report);
    }

    #[test]
    fn fixed_point_emits_c() {
        let m = demo::model();
        let opts = CompileOptions::new(Representation::Fixed, 8, 16, 3);
        let c = compile(&m, &Dataset::single_empty(), &opts).unwrap();
        let prog = c.c.expect("fixed point emits C");
        assert_eq!(prog.scratch_bytes, c.report.ram_bytes);
    }

    #[test]
    fn pair_selection_counts_runs() {
        let m = demo::model();
        let mut opts = demo_opts(3);
        opts.es_low = None;
        opts.es_high = None;
        opts.pair_from = Some(vec![4, 8, 16]);
        let c = compile(&m, &Dataset::single_empty(), &opts).unwrap();
        assert_eq!(c.report.stats.pair_selection_execution_calls, 3);
        assert!(c.report.low < c.report.high);
    }
}
