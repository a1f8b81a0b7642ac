//! Monte-Carlo experiment runner: configuration, trials over an SNR grid,
//! CSV/JSON output and quick self checks.

mod config;
mod output;
mod run;
mod selftest;

pub use config::{parse_snr, EstimatorKind, Geometry, Preset, SimConfig};
pub use output::{format_csv, sidecar_json, write_outputs, CSV_HEADER};
pub use run::{
    run, trial_seed, EstimatorTrial, IterStats, PointResult, ResultRow, Scenario, SweepResult, TrialDraw,
    TrialOutcome,
};
pub use selftest::{selftest, CheckResult};
