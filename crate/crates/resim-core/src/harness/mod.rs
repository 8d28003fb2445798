//! Benchmark orchestration: TOML configuration, test execution, and reports.

pub mod config;
pub mod report;
pub mod runner;

pub use config::{ConfigError, OutputDiff, RunConfig, RunSection, TestKind, TestSection};
pub use report::{aggregate, render_csv, render_json, render_table, write_report, BenchmarkReport, Cell};
pub use runner::{run, HarnessError};
