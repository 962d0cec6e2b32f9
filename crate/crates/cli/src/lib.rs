//! Benchmark driver for `vem-core`: patch tests, convergence studies,
//! stabilization sweeps, Cook's membrane and config-driven solves.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod commands;
pub mod config;
pub mod problems;
