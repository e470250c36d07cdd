//! Basin-of-attraction audit of a scenario at its initial condition and at
//! every mode switch.

use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::reference::PositionCommand;
use crate::roa::{self, AttitudeBasinReport, AttitudeEnvelope, BasinVariant, PositionBasinReport};
use crate::so3::AttitudeErrorState;
use crate::trajectory::{ActiveCommand, FlightMode};

use super::config::ScenarioConfig;
use super::runner::{attitude_reference_at, realize_phase, run};

/// Certificates evaluated at the entry of one schedule phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinEntry {
    pub phase: usize,
    pub t: f64,
    pub mode: FlightMode,
    /// Attitude basin against the phase's attitude reference (the induced
    /// attitude in position mode).
    pub attitude: AttitudeBasinReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub envelope: Option<AttitudeEnvelope>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub position: Option<PositionBasinReport>,
    /// `false` only on the measure-zero set where the closed loop is at rest
    /// at an antipodal equilibrium (`e_R = 0`, `e_ω = 0`, `Ψ = 2`); every
    /// other initial condition is attracted, possibly after leaving the
    /// exponential basin.
    pub attractive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinReport {
    pub scenario: String,
    pub entries: Vec<BasinEntry>,
}

impl BasinReport {
    pub fn to_toml_string(&self) -> Result<String, SimError> {
        toml::to_string(self).map_err(|e| SimError::Config(e.to_string()))
    }
}

fn attractive(e: &AttitudeErrorState) -> bool {
    !(e.psi > 1.0 && e.e_r.norm() < 1e-9 && e.e_omega.norm() < 1e-9)
}

/// Runs the scenario and audits the basins at `t = 0` and at each phase
/// entry, using the state actually reached there.
pub fn basin_report(cfg: &ScenarioConfig) -> Result<BasinReport, SimError> {
    let log = run(cfg)?;
    let mut entries = Vec::new();
    for (phase, spec) in cfg.schedule.phases.iter().enumerate() {
        let Some(row) = log.rows.iter().find(|r| r.phase == phase) else {
            continue;
        };
        let s = row.state();
        let cmd = realize_phase(cfg, phase, &s)?;
        let target = attitude_reference_at(cfg, &cmd, &s, row.t)?;
        let errors = AttitudeErrorState::new(&s.r, &s.omega, &target.r, &target.omega);
        let attitude = roa::attitude_basin(&s, &target, &cfg.gains);
        let envelope = if attitude.inside {
            roa::attitude_envelope(&errors, &cfg.gains).ok()
        } else {
            None
        };
        let position = match &cmd {
            ActiveCommand::Position(pos) => {
                let end = spec.t_end.min(cfg.t_final);
                let b = roa::acceleration_bound(pos, row.t, end, cfg.dt, &cfg.params);
                Some(roa::position_basin(
                    &s,
                    &pos.at(row.t),
                    &cfg.gains,
                    &cfg.params,
                    b,
                    BasinVariant::PositionFree,
                    None,
                    None,
                )?)
            }
            ActiveCommand::Attitude { .. } => None,
        };
        entries.push(BasinEntry {
            phase,
            t: row.t,
            mode: cmd.mode(),
            attitude,
            envelope,
            position,
            attractive: attractive(&errors),
        });
    }
    Ok(BasinReport {
        scenario: cfg.name.clone(),
        entries,
    })
}
