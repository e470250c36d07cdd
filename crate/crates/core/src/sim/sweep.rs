//! Gain-grid sweep over the basin certificates, evaluated in parallel.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::controllers::GainSet;
use crate::error::SimError;
use crate::roa::{self, BasinVariant};

use super::config::ScenarioConfig;

/// Values to sweep per gain; an empty list keeps the scenario's gain.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepGrid {
    pub eta: Vec<f64>,
    pub k_r: Vec<f64>,
    pub k_omega: Vec<f64>,
    pub a: Vec<f64>,
    pub k_x: Vec<f64>,
    pub k_v: Vec<f64>,
    /// Acceleration bound; defaults to `1.01 m g` (hover command).
    pub b: Option<f64>,
}

/// Certificates for one gain combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eta: f64,
    pub k_r: f64,
    pub k_omega: f64,
    pub a: f64,
    pub k_x: f64,
    pub k_v: f64,
    pub tau: f64,
    pub w1_pd: bool,
    pub w2_pd: bool,
    pub theta_max: f64,
    pub theta_max_bounded: f64,
    /// Largest certified `ψ_p` (0 when the gain condition fails at `θ = 0`).
    pub psi_p: f64,
    pub w3_ok: bool,
}

fn axis(values: &[f64], default: f64) -> Vec<f64> {
    if values.is_empty() {
        vec![default]
    } else {
        values.to_vec()
    }
}

/// All gain combinations in row-major order (`eta` slowest, `k_v` fastest).
pub fn grid_points(cfg: &ScenarioConfig) -> Vec<GainSet> {
    let g = &cfg.gains;
    let s = &cfg.sweep;
    let mut out = Vec::new();
    for &eta in &axis(&s.eta, g.eta) {
        for &k_r in &axis(&s.k_r, g.k_r) {
            for &k_omega in &axis(&s.k_omega, g.k_omega) {
                for &a in &axis(&s.a, g.a) {
                    for &k_x in &axis(&s.k_x, g.k_x) {
                        for &k_v in &axis(&s.k_v, g.k_v) {
                            out.push(GainSet {
                                eta,
                                k_r,
                                k_omega,
                                a,
                                k_x,
                                k_v,
                                ..g.clone()
                            });
                        }
                    }
                }
            }
        }
    }
    out
}

fn evaluate(g: &GainSet, cfg: &ScenarioConfig, b: f64) -> Result<SweepRow, SimError> {
    g.validate().map_err(|e| SimError::Config(e.to_string()))?;
    let p = &cfg.params;
    let att = roa::certificate_matrices_attitude(g, 1.0)?;
    let psi_p = roa::max_certified_psi_p(g, p, b, BasinVariant::PositionFree, None)?;
    Ok(SweepRow {
        eta: g.eta,
        k_r: g.k_r,
        k_omega: g.k_omega,
        a: g.a,
        k_x: g.k_x,
        k_v: g.k_v,
        tau: att.tau,
        w1_pd: roa::is_positive_definite(&att.w1),
        w2_pd: roa::is_positive_definite(&att.w2),
        theta_max: roa::theta_max_position_free(g, p),
        theta_max_bounded: roa::theta_max_bounded(g, p),
        psi_p: psi_p.unwrap_or(0.0),
        w3_ok: psi_p.is_some(),
    })
}

/// Evaluates every grid point on the rayon pool; rows come back in grid order.
pub fn sweep(cfg: &ScenarioConfig) -> Result<Vec<SweepRow>, SimError> {
    let b = cfg.sweep.b.unwrap_or(1.01 * cfg.params.mass * cfg.params.gravity);
    grid_points(cfg).par_iter().map(|g| evaluate(g, cfg, b)).collect()
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], w: W) -> Result<(), SimError> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record([
        "eta",
        "k_r",
        "k_omega",
        "a",
        "k_x",
        "k_v",
        "tau",
        "w1_pd",
        "w2_pd",
        "theta_max",
        "theta_max_bounded",
        "psi_p",
        "w3_ok",
    ])?;
    for r in rows {
        let f = |x: f64| format!("{x:.16e}");
        wtr.write_record([
            f(r.eta),
            f(r.k_r),
            f(r.k_omega),
            f(r.a),
            f(r.k_x),
            f(r.k_v),
            f(r.tau),
            r.w1_pd.to_string(),
            r.w2_pd.to_string(),
            f(r.theta_max),
            f(r.theta_max_bounded),
            f(r.psi_p),
            r.w3_ok.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
