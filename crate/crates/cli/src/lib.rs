//! Command-line front end: pipeline configuration, execution engine, and the
//! `mask` / `run` / `analyze` commands.

pub mod commands;
pub mod config;
pub mod engine;
pub mod report;
