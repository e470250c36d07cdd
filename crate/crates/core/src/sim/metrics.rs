//! Effort and error metrics over run logs, and side-by-side comparison of
//! two scenarios.

use serde::{Deserialize, Serialize};

use crate::error::SimError;

use super::config::{ControllerKind, ScenarioConfig};
use super::log::RunLog;
use super::runner::run;

/// `f_RMS(t) = √((1/t) Σ_k ‖F_k‖² dt)` over the steps with `t_k < t`
/// (rectangle rule).
pub fn rms_effort(log: &RunLog, t: f64) -> f64 {
    if !(t > 0.0) {
        return 0.0;
    }
    let steps = ((t / log.dt) + 1e-9).floor() as usize;
    let sum: f64 = log.rows.iter().take(steps).map(|r| r.thrusts.norm_squared()).sum();
    (sum * log.dt / t).sqrt()
}

/// Time after which `Ψ` stays at or below `fraction · max Ψ`.
pub fn settling_time(log: &RunLog, fraction: f64) -> f64 {
    let peak = log.rows.iter().map(|r| r.psi).fold(0.0, f64::max);
    if peak <= 0.0 {
        return log.rows.first().map_or(0.0, |r| r.t);
    }
    let threshold = fraction * peak;
    match log.rows.iter().rposition(|r| r.psi > threshold) {
        None => log.rows[0].t,
        Some(i) if i + 1 < log.rows.len() => log.rows[i + 1].t,
        Some(i) => log.rows[i].t + log.dt,
    }
}

/// Summary of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub name: String,
    pub controller: ControllerKind,
    pub rms_effort: f64,
    pub max_psi: f64,
    pub final_psi: f64,
    /// `∫Ψ dt`
    pub iae_psi: f64,
    /// Time to enter and stay in the 2 % band of the peak `Ψ`.
    pub settling_time_psi: f64,
    pub max_e_x: f64,
    /// `∫‖e_x‖ dt`
    pub iae_e_x: f64,
    pub saturation_count: usize,
    pub min_thrust: f64,
    pub max_thrust: f64,
}

impl RunMetrics {
    pub fn from_log(cfg: &ScenarioConfig, log: &RunLog) -> Self {
        let last = log.rows.last().expect("a run has at least one row");
        let thrusts = log.rows.iter().flat_map(|r| r.thrusts.iter().copied());
        let (min_thrust, max_thrust) =
            thrusts.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), f| (lo.min(f), hi.max(f)));
        Self {
            name: cfg.name.clone(),
            controller: cfg.controller,
            rms_effort: rms_effort(log, last.t),
            max_psi: log.rows.iter().map(|r| r.psi).fold(0.0, f64::max),
            final_psi: last.psi,
            iae_psi: log.rows.iter().map(|r| r.psi).sum::<f64>() * log.dt,
            settling_time_psi: settling_time(log, 0.02),
            max_e_x: log.rows.iter().map(|r| r.e_x).fold(0.0, f64::max),
            iae_e_x: log.rows.iter().map(|r| r.e_x).sum::<f64>() * log.dt,
            saturation_count: log.saturation_count(),
            min_thrust,
            max_thrust,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Winner {
    A,
    B,
    Tie,
}

fn lower(a: f64, b: f64) -> Winner {
    if a < b {
        Winner::A
    } else if b < a {
        Winner::B
    } else {
        Winner::Tie
    }
}

/// Side-by-side metrics. The lower-error controller is the one with the
/// smaller integrated error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub a: RunMetrics,
    pub b: RunMetrics,
    pub lower_attitude_error: Winner,
    pub lower_position_error: Winner,
    pub faster_settling: Winner,
    /// Attitude-gain time scale applied to `b` when efforts were matched.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_attitude_scale: Option<f64>,
}

impl ComparisonReport {
    fn new(a: RunMetrics, b: RunMetrics, scale: Option<f64>) -> Self {
        Self {
            lower_attitude_error: lower(a.iae_psi, b.iae_psi),
            lower_position_error: lower(a.iae_e_x, b.iae_e_x),
            faster_settling: lower(a.settling_time_psi, b.settling_time_psi),
            a,
            b,
            b_attitude_scale: scale,
        }
    }

    pub fn to_toml_string(&self) -> Result<String, SimError> {
        toml::to_string(self).map_err(|e| SimError::Config(e.to_string()))
    }
}

fn check_same_schedule(a: &ScenarioConfig, b: &ScenarioConfig) -> Result<(), SimError> {
    if a.schedule != b.schedule || a.dt != b.dt || a.t_final != b.t_final {
        return Err(SimError::Config(
            "compared scenarios must share schedule, dt and t_final".into(),
        ));
    }
    Ok(())
}

/// Runs both scenarios and compares them.
pub fn compare(a: &ScenarioConfig, b: &ScenarioConfig) -> Result<ComparisonReport, SimError> {
    check_same_schedule(a, b)?;
    let la = run(a)?;
    let lb = run(b)?;
    Ok(ComparisonReport::new(
        RunMetrics::from_log(a, &la),
        RunMetrics::from_log(b, &lb),
        None,
    ))
}

/// Like [`compare`], but first time-scales the benchmark attitude gains of
/// `b` (`k_R → s²k_R`, `k_ω → s k_ω`) until its RMS effort matches that of
/// `a` to a relative `1e-6`.
pub fn compare_matched_rms(a: &ScenarioConfig, b: &ScenarioConfig) -> Result<ComparisonReport, SimError> {
    check_same_schedule(a, b)?;
    if b.controller != ControllerKind::Benchmark {
        return Err(SimError::Config(
            "effort matching scales the benchmark controller; set b.controller = \"benchmark\"".into(),
        ));
    }
    let la = run(a)?;
    let ma = RunMetrics::from_log(a, &la);
    let target = ma.rms_effort;
    let eval = |s: f64| -> Result<(RunMetrics, f64), SimError> {
        let mut cfg = b.clone();
        cfg.benchmark = b.benchmark.scaled_attitude(s);
        let log = run(&cfg)?;
        let m = RunMetrics::from_log(&cfg, &log);
        let r = m.rms_effort;
        Ok((m, r))
    };
    // effort grows with the gain scale; bracket then bisect in log-space
    let (mut lo, mut hi) = (1.0f64, 1.0f64);
    while eval(lo)?.1 > target {
        lo /= 2.0;
        if lo < 1e-3 {
            return Err(SimError::Config("cannot lower benchmark effort to the target".into()));
        }
    }
    while eval(hi)?.1 < target {
        hi *= 2.0;
        if hi > 1e3 {
            return Err(SimError::Config("cannot raise benchmark effort to the target".into()));
        }
    }
    let mut best = eval(hi)?;
    let mut scale = hi;
    for _ in 0..100 {
        let mid = (lo * hi).sqrt();
        let (m, r) = eval(mid)?;
        if r < target {
            lo = mid;
        } else {
            hi = mid;
        }
        let done = ((r - target) / target).abs() <= 1e-6;
        best = (m, r);
        scale = mid;
        if done {
            break;
        }
    }
    Ok(ComparisonReport::new(ma, best.0, Some(scale)))
}
