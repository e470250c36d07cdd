//! Deterministic closed-loop rollout of a scenario.

use nalgebra::Vector4;

use crate::allocation::{position_mode_thrusts, secondary_thrust_fp, thrust_and_moment, Allocator, AllocatorState};
use crate::controllers::{
    attitude_control, benchmark_attitude, benchmark_control, position_control_with, position_induced_attitude,
    ForceLaw, PositionErrorState, RateEstimator,
};
use crate::dynamics::{self, RigidBodyState};
use crate::error::{DynamicsError, SimError};
use crate::reference::{AttitudeCommand, PositionCommand, PositionTarget};
use crate::roa;
use crate::so3::{AttitudeErrorState, Vec3};
use crate::trajectory::ActiveCommand;

use super::config::{AttitudeThrust, ControllerKind, ScenarioConfig};
use super::log::{LogRow, RunLog};

/// Control applied over one step, with the errors it was computed from.
struct StepControl {
    f: f64,
    u: Vec3,
    thrusts: Vector4<f64>,
    attitude: AttitudeErrorState,
    position: PositionErrorState,
    outside_l2: bool,
}

/// Snaps a sample time so that `k·dt` lands exactly on phase boundaries.
fn snap(t: f64) -> f64 {
    (t * 1e9).round() / 1e9
}

struct Runner<'a> {
    cfg: &'a ScenarioConfig,
    allocator: Allocator,
    alloc_state: AllocatorState,
    rates: RateEstimator,
}

impl Runner<'_> {
    fn control(&mut self, s: &RigidBodyState, cmd: &ActiveCommand, t: f64) -> Result<StepControl, SimError> {
        let cfg = self.cfg;
        let p = &cfg.params;
        let ctrl_err = |source| SimError::Control { t, source };
        let position_target: PositionTarget = cmd.position().at(t);
        let position = PositionErrorState::new(s, &position_target, &cfg.gains);
        match cmd {
            ActiveCommand::Position(_) => {
                let (f, u, attitude, outside_l2) = match cfg.controller {
                    ControllerKind::Proposed => {
                        let c = position_control_with(s, &position_target, &cfg.gains, p, &mut self.rates, cfg.dt)
                            .map_err(ctrl_err)?;
                        (c.f, c.u, c.attitude.errors, c.attitude.outside_l2)
                    }
                    ControllerKind::Benchmark => {
                        let c = benchmark_control(s, &position_target, &cfg.benchmark, p).map_err(ctrl_err)?;
                        (c.f, c.u, c.attitude_errors, c.attitude_errors.psi >= 2.0)
                    }
                };
                Ok(StepControl {
                    f,
                    u,
                    thrusts: position_mode_thrusts(f, &u, p),
                    attitude,
                    position,
                    outside_l2,
                })
            }
            ActiveCommand::Attitude {
                attitude: reference, ..
            } => {
                let target = reference.at(t);
                let (u, attitude, outside_l2) = match cfg.controller {
                    ControllerKind::Proposed => {
                        let c = attitude_control(s, &target, &cfg.gains, p);
                        (c.u, c.errors, c.outside_l2)
                    }
                    ControllerKind::Benchmark => {
                        let (u, e) = benchmark_attitude(s, &target, &cfg.benchmark, p);
                        (u, e, e.psi >= 2.0)
                    }
                };
                if cfg.strategy_enabled {
                    let f_p = if cfg.fp_enabled {
                        secondary_thrust_fp(s, &position_target, &cfg.gains, p)
                    } else {
                        0.0
                    };
                    let thrusts = self.allocator.allocate(&u, f_p, &mut self.alloc_state, cfg.dt);
                    let (f, u) = thrust_and_moment(&thrusts, p);
                    Ok(StepControl {
                        f,
                        u,
                        thrusts,
                        attitude,
                        position,
                        outside_l2,
                    })
                } else {
                    let f = match cfg.attitude_thrust {
                        AttitudeThrust::Hover => p.mass * p.gravity,
                        AttitudeThrust::PositionHold => {
                            let law = match cfg.controller {
                                ControllerKind::Proposed => ForceLaw::proposed(&cfg.gains, p),
                                ControllerKind::Benchmark => ForceLaw {
                                    kp: cfg.benchmark.k_x,
                                    kd: cfg.benchmark.k_v,
                                },
                            };
                            law.force(s, &position_target, p).dot(&(s.r * Vec3::z()))
                        }
                    };
                    Ok(StepControl {
                        f,
                        u,
                        thrusts: position_mode_thrusts(f, &u, p),
                        attitude,
                        position,
                        outside_l2,
                    })
                }
            }
        }
    }
}

/// Runs the scenario from `t = 0` to `t_final` with a fixed step. Phases are
/// realised from the state at their entry; the allocator integral and the
/// rate history are reset on every phase switch.
pub fn run(cfg: &ScenarioConfig) -> Result<RunLog, SimError> {
    cfg.validate()?;
    let p = &cfg.params;
    let mut runner = Runner {
        cfg,
        allocator: Allocator::new(p, cfg.allocation.clone()),
        alloc_state: AllocatorState::default(),
        rates: RateEstimator::new(cfg.rate_scheme),
    };
    let n = (cfg.t_final / cfg.dt).round() as usize;
    let mut log = RunLog {
        dt: cfg.dt,
        rows: Vec::with_capacity(n + 1),
        outside_l2_steps: 0,
    };
    let mut s = cfg.initial_state();
    let mut active: Option<(usize, ActiveCommand)> = None;

    for k in 0..=n {
        let t = k as f64 * cfg.dt;
        let idx = cfg
            .schedule
            .phase_index(snap(t))
            .ok_or_else(|| SimError::Config(format!("no schedule phase covers t = {t}")))?;
        let cmd = match active {
            Some((i, c)) if i == idx => c,
            _ => {
                let c = cfg.schedule.phases[idx].realize(&s)?;
                runner.alloc_state.reset();
                runner.rates.reset();
                active = Some((idx, c));
                c
            }
        };

        let c = runner.control(&s, &cmd, t)?;
        if c.outside_l2 {
            log.outside_l2_steps += 1;
        }
        let lyap = roa::lyapunov_sample(&c.attitude, Some(&c.position), &cfg.gains, p, 1.0)?;
        log.rows.push(LogRow {
            t,
            x: s.x,
            v: s.v,
            r: s.r,
            omega: s.omega,
            f: c.f,
            u: c.u,
            thrusts: c.thrusts,
            psi: c.attitude.psi,
            e_r: c.attitude.e_r.norm(),
            e_omega: c.attitude.e_omega.norm(),
            e_x: c.position.e_x.norm(),
            e_v: c.position.e_v.norm(),
            v_att: lyap.v,
            v_psi: lyap.v_psi,
            v_x: lyap.v_x,
            v_g: lyap.v_g,
            mode: cmd.mode(),
            phase: idx,
            saturated: !cfg.allocation.within_limits(&c.thrusts),
        });

        if k < n {
            if !(c.f.is_finite() && c.u.iter().all(|x| x.is_finite())) {
                return Err(SimError::Blowup {
                    t,
                    source: DynamicsError::NumericalBlowup {
                        magnitude: f64::INFINITY,
                    },
                });
            }
            s = dynamics::step(&s, c.f, &c.u, p, cfg.dt).map_err(|e| match e {
                DynamicsError::NumericalBlowup { .. } => SimError::Blowup { t, source: e },
                other => SimError::Dynamics(other),
            })?;
        }
    }
    Ok(log)
}

/// Realised command of phase `index` for an entry state (as `run` does).
pub fn realize_phase(cfg: &ScenarioConfig, index: usize, entry: &RigidBodyState) -> Result<ActiveCommand, SimError> {
    let phase = cfg
        .schedule
        .phases
        .get(index)
        .ok_or_else(|| SimError::Config(format!("phase {index} does not exist")))?;
    Ok(phase.realize(entry)?)
}

/// Attitude reference of a realised command at `t` (induced from the
/// position reference in position mode).
pub fn attitude_reference_at(
    cfg: &ScenarioConfig,
    cmd: &ActiveCommand,
    s: &RigidBodyState,
    t: f64,
) -> Result<crate::reference::AttitudeTarget, SimError> {
    match cmd {
        ActiveCommand::Attitude { attitude, .. } => Ok(attitude.at(t)),
        ActiveCommand::Position(pos) => {
            let law = ForceLaw::proposed(&cfg.gains, &cfg.params);
            position_induced_attitude(s, &pos.at(t), &law, &cfg.params)
                .map(|i| i.target())
                .map_err(|source| SimError::Control { t, source })
        }
    }
}
