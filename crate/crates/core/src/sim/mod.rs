//! Scenario runner, logs, metrics, basin audits and gain sweeps.

mod basin;
mod config;
mod log;
mod metrics;
mod runner;
mod sweep;

pub use basin::{basin_report, BasinEntry, BasinReport};
pub use config::{AttitudeThrust, ControllerKind, InitialState, ScenarioConfig, PRESETS};
pub use log::{LogRow, RunLog, CSV_HEADER};
pub use metrics::{compare, compare_matched_rms, rms_effort, settling_time, ComparisonReport, RunMetrics, Winner};
pub use runner::{attitude_reference_at, realize_phase, run};
pub use sweep::{grid_points, sweep, write_sweep_csv, SweepGrid, SweepRow};
