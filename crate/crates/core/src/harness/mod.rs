//! Experiment runner: scenario files, bounded repeated runs with a fresh
//! world each time, per-run artifacts and the results table.
//!
//! Per run, under the output directory: `runN.console` (capture log),
//! `runN.afhmap` (one channel map estimate per second), `runN.spectrum`
//! (per-second peak energy per channel), plus `metrics.csv`, `summary.txt`
//! and the `scenario.txt` the runs were made from.

mod logs;
mod report;
mod run;
mod scenario;

pub use logs::{export_afh_map, parse_afh_line, parse_console, AfhLineError, ParsedConsole};
pub use report::{csv_row, render_csv, summarize, Summary, CSV_HEADER};
pub use run::{report_dir, run_once, run_scenario, run_seed, HarnessError, RunOutput, ScenarioOutput};
pub use scenario::{AfhChoice, RfCondition, ScenarioConfig, ScenarioError, TrafficChoice};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "SIMBT_OUT_DIR";
