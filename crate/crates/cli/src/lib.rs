//! Command-line runner and HTTP triage service built on `actriage-core`.

pub mod commands;
pub mod datasets;
pub mod http;
pub mod sessions;
