#![no_std]

extern crate alloc;

pub mod codegen;
pub mod demo;
pub mod haunter;
pub mod interp;
pub mod ir;
pub mod memplan;
pub mod numrep;
