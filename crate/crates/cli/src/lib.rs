//! Config ingestion, sweep orchestration, and CSV emission for the
//! `flowbal` binary.

pub mod config;
pub mod csv;
pub mod runner;
