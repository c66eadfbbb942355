//! Command-line driver for `tinyquant-core`: JSON and DSL file formats,
//! seeded synthetic benchmarks, wall-clock budgets and the compile pipeline.

pub mod budget;
pub mod demo;
pub mod io;
pub mod pipeline;
pub mod synth;
