//! Experiment harness for the multi-access coded caching simulator:
//! config ingestion, sweeps with Monte Carlo validation, and reference
//! artifact reproduction. The `macc` binary is a thin CLI over this.

pub mod config;
pub mod reproduce;
pub mod sweep;
