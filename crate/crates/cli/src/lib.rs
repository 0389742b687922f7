//! Experiment runner behind the `soliton-lab` binary.
//!
//! Every experiment resolves typed parameters from defaults plus overrides,
//! runs against `soliton-core`, and writes a deterministic `report.json`,
//! a `manifest.json` with timing, and one CSV per series.

pub mod catalog;
pub mod experiments;
pub mod params;
pub mod patches;
pub mod report;
pub mod runner;

pub use params::{Params, Value};
pub use report::{Outcome, Provenance, Report, Verdict};
pub use runner::{run, run_all, Spec, Summary, DEFAULT_SEED};
