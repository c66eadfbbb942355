//! The two-weight linear model walked through every phase, with each table
//! recomputed.

use std::fmt::Write;

use anyhow::Result;

use tinyquant_core::codegen::emit_memory_map;
use tinyquant_core::demo;
use tinyquant_core::haunter::BitwidthAssignment;
use tinyquant_core::interp::{self, Dataset, RunOptions, ValueMap};
use tinyquant_core::numrep::RepParams;

use crate::pipeline::{compile, CompileOptions, Compiled};

fn values(params: &RepParams, rho: &BitwidthAssignment) -> Result<ValueMap> {
    let m = demo::model();
    let res = interp::run(&m, &Dataset::single_empty(), params, rho, RunOptions::logged())?;
    Ok(res.value_map.unwrap_or_default())
}

fn output(params: &RepParams, rho: &BitwidthAssignment) -> Result<f64> {
    let m = demo::model();
    let res = interp::run(&m, &Dataset::single_empty(), params, rho, RunOptions::default())?;
    Ok(res.outputs[0].values[0])
}

/// Runs the pipeline on the demo model and renders the walkthrough.
pub fn walkthrough(opts: &CompileOptions) -> Result<(String, Compiled)> {
    let m = demo::model();
    let c = compile(&m, &Dataset::single_empty(), opts)?;
    let r = &c.report;
    let params = &c.exploration.params;
    let mut s = String::new();

    writeln!(s, "program\n")?;
    for line in demo::PROGRAM.lines() {
        writeln!(s, "    {line}")?;
    }
    writeln!(s, "\nweights")?;
    for (k, v) in demo::weights() {
        writeln!(s, "    {k} = {v:?}")?;
    }

    let float = values(&RepParams::Float, &BitwidthAssignment::new())?;
    let high = values(params, &BitwidthAssignment::uniform(&m, r.high))?;
    let low = values(params, &BitwidthAssignment::uniform(&m, r.low))?;
    writeln!(s, "\n{} parameters: {}", r.representation, serde_json::to_string(params)?)?;
    writeln!(s, "\nvalue maps (first element per tensor)\n")?;
    writeln!(s, "    {:<6} {:>12} {:>12} {:>12} {:>10}", "tensor", "float", r.high, r.low, "score")?;
    for (name, score) in &r.heat_map {
        let first = |vm: &ValueMap| vm.get(name).and_then(|v| v.first().copied()).unwrap_or(f64::NAN);
        writeln!(
            s,
            "    {:<6} {:>12.6} {:>12.6} {:>12.6} {:>10.5}",
            name,
            first(&float),
            first(&high),
            first(&low),
            score
        )?;
    }
    writeln!(s, "\npromotion order: {}", r.promotion_order.join(", "))?;
    writeln!(s, "overshooting:    {}", if r.overshooting.is_empty() { "-".into() } else { r.overshooting.join(", ") })?;

    let reference = output(&RepParams::Float, &BitwidthAssignment::new())?;
    writeln!(s, "\nledger (float output {reference:.6})\n")?;
    writeln!(
        s,
        "    {:<13} {:<24} {:>5} {:>12} {:>10}",
        "stage",
        format!("at {} bits", r.high),
        "RAM",
        "output",
        "|error|"
    )?;
    for e in &c.exploration.ledger {
        let out = output(params, &e.rho)?;
        let promoted: Vec<&str> = e.rho.names_at(r.high).collect();
        let promoted = if promoted.is_empty() { "-".into() } else { promoted.join(",") };
        writeln!(
            s,
            "    {:<13} {:<24} {:>5} {:>12.6} {:>10.5}",
            format!("{:?}", e.stage),
            promoted,
            e.planned_ram_bytes,
            out,
            (out - reference).abs()
        )?;
    }

    writeln!(s, "\nchosen")?;
    for (name, bits) in r.rho.iter() {
        writeln!(s, "    {name}: {bits}")?;
    }
    writeln!(s)?;
    s += &crate::pipeline::report_text(r);
    writeln!(s)?;
    s += &emit_memory_map(&c.ranges, &c.map);
    Ok((s, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tinyquant_core::numrep::Representation;

    #[test]
    fn posit_walkthrough_tables() {
        let mut opts = CompileOptions::new(Representation::Posit, 8, 16, 3);
        opts.es_low = Some(vec![2]);
        opts.es_high = Some(vec![2]);
        let (text, c) = walkthrough(&opts).unwrap();
        for row in ["0.00513", "0.00543", "0.02197", "0.30469", "0.45117"] {
            assert!(text.contains(row), "{row} missing from\n{text}");
        }
        for err in ["0.45047", "0.04953"] {
            assert!(text.contains(err), "{err} missing from\n{text}");
        }
        assert_eq!(c.report.ram_bytes, 3);
    }

    #[test]
    fn roomy_limit_keeps_everything_high() {
        let mut opts = CompileOptions::new(Representation::Posit, 8, 16, 4);
        opts.es_low = Some(vec![2]);
        opts.es_high = Some(vec![2]);
        let (_, c) = walkthrough(&opts).unwrap();
        assert_eq!(c.report.rho, BitwidthAssignment::uniform(&demo::model(), 16));
    }

    #[test]
    fn fixed_point_walkthrough() {
        let opts = CompileOptions::new(Representation::Fixed, 8, 16, 3);
        let (text, c) = walkthrough(&opts).unwrap();
        assert!(text.contains("fixed parameters"));
        assert!(c.c.is_some());
    }
}
