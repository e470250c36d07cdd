//! Scenario configuration: shipped presets, TOML files layered over a
//! preset, and dotted `key=value` overrides.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::allocation::AllocationConfig;
use crate::controllers::{BenchmarkGains, GainSet, RateScheme};
use crate::dynamics::{QuadParams, RigidBodyState};
use crate::error::SimError;
use crate::so3::{self, Vec3};
use crate::trajectory::FlightSchedule;

use super::sweep::SweepGrid;

/// Names accepted by [`ScenarioConfig::preset`].
pub const PRESETS: [&str; 4] = ["hover", "step90", "step_position_1cm", "flip_full"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    Proposed,
    Benchmark,
}

/// Total thrust used in attitude mode when the null-space strategy is off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttitudeThrust {
    /// `f = Uᵀ R e₃` with `U` the force that would hold the phase's position
    /// reference.
    #[default]
    PositionHold,
    /// Constant `f = m g`.
    Hover,
}

/// Initial vehicle state. The attitude is given in axis-angle form; when
/// `random_tilt > 0` an extra rotation with a seeded random axis and an
/// angle uniform in `[0, random_tilt)` is applied on the right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub x: [f64; 3],
    pub v: [f64; 3],
    pub attitude_axis: [f64; 3],
    pub attitude_angle: f64,
    pub omega: [f64; 3],
    #[serde(default)]
    pub random_tilt: f64,
}

impl Default for InitialState {
    fn default() -> Self {
        Self {
            x: [0.0; 3],
            v: [0.0; 3],
            attitude_axis: [0.0, 0.0, 1.0],
            attitude_angle: 0.0,
            omega: [0.0; 3],
            random_tilt: 0.0,
        }
    }
}

impl InitialState {
    pub fn to_state(&self, seed: u64) -> RigidBodyState {
        let mut r = so3::axis_angle(&Vec3::from(self.attitude_axis), self.attitude_angle);
        if self.random_tilt > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let axis = loop {
                let v = Vec3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                );
                let n = v.norm();
                if n > 1e-3 && n <= 1.0 {
                    break v / n;
                }
            };
            r *= so3::axis_angle(&axis, rng.random_range(0.0..self.random_tilt));
        }
        RigidBodyState {
            x: Vec3::from(self.x),
            v: Vec3::from(self.v),
            r,
            omega: Vec3::from(self.omega),
        }
    }
}

/// Everything needed for one deterministic closed-loop run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub params: QuadParams,
    pub gains: GainSet,
    pub benchmark: BenchmarkGains,
    pub allocation: AllocationConfig,
    pub schedule: FlightSchedule,
    pub initial: InitialState,
    pub dt: f64,
    pub t_final: f64,
    pub controller: ControllerKind,
    pub strategy_enabled: bool,
    pub fp_enabled: bool,
    pub rate_scheme: RateScheme,
    pub attitude_thrust: AttitudeThrust,
    pub seed: u64,
    #[serde(default)]
    pub sweep: SweepGrid,
}

impl ScenarioConfig {
    fn base(name: &str, schedule: FlightSchedule, t_final: f64) -> Self {
        let params = QuadParams::reference();
        Self {
            name: name.to_string(),
            allocation: AllocationConfig::for_vehicle(&params),
            params,
            gains: GainSet::reference(),
            benchmark: BenchmarkGains::reference(),
            schedule,
            initial: InitialState::default(),
            dt: 1e-3,
            t_final,
            controller: ControllerKind::Proposed,
            strategy_enabled: false,
            fp_enabled: true,
            rate_scheme: RateScheme::Analytic,
            attitude_thrust: AttitudeThrust::PositionHold,
            seed: 0,
            sweep: SweepGrid::default(),
        }
    }

    /// One of the shipped scenarios (see [`PRESETS`]).
    pub fn preset(name: &str) -> Result<Self, SimError> {
        Ok(match name {
            "hover" => Self::base(name, FlightSchedule::hover(1.0), 1.0),
            "step90" => Self {
                attitude_thrust: AttitudeThrust::Hover,
                ..Self::base(name, FlightSchedule::step90(2.0), 2.0)
            },
            "step_position_1cm" => Self::base(name, FlightSchedule::step_position_1cm(3.0), 3.0),
            "flip_full" => Self {
                strategy_enabled: true,
                ..Self::base(name, FlightSchedule::flip_full(), 10.0)
            },
            other => {
                return Err(SimError::Config(format!(
                    "unknown preset {other:?}; expected one of {}",
                    PRESETS.join(", ")
                )))
            }
        })
    }

    /// Parses a TOML document layered over a preset. The optional top-level
    /// key `preset` selects the base (default `hover`); `overrides` are
    /// `dotted.key=value` strings applied last.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self, SimError> {
        let mut doc: toml::Table = text
            .parse()
            .map_err(|e| SimError::Config(format!("invalid TOML: {e}")))?;
        let preset = match doc.remove("preset") {
            Some(toml::Value::String(s)) => s,
            Some(other) => return Err(SimError::Config(format!("preset must be a string, got {other}"))),
            None => "hover".to_string(),
        };
        Self::layered(&preset, doc, overrides)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text, overrides)
    }

    /// A preset with overrides applied.
    pub fn preset_with(name: &str, overrides: &[String]) -> Result<Self, SimError> {
        Self::layered(name, toml::Table::new(), overrides)
    }

    fn layered(preset: &str, doc: toml::Table, overrides: &[String]) -> Result<Self, SimError> {
        let base = Self::preset(preset)?;
        let mut merged = toml::Value::try_from(&base).map_err(|e| SimError::Config(e.to_string()))?;
        merge(&mut merged, toml::Value::Table(doc));
        for o in overrides {
            apply_override(&mut merged, o)?;
        }
        let mut cfg: Self = merged
            .try_into()
            .map_err(|e: toml::de::Error| SimError::Config(e.to_string()))?;
        cfg.normalize();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Extends the last phase to `t_final` if the schedule is shorter.
    fn normalize(&mut self) {
        if let Some(last) = self.schedule.phases.last_mut() {
            if last.t_end < self.t_final {
                last.t_end = self.t_final;
            }
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let cfg_err = |m: String| Err(SimError::Config(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return cfg_err(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_final >= self.dt) {
            return cfg_err(format!("t_final must be at least dt, got {}", self.t_final));
        }
        self.params.validate().map_err(|e| SimError::Config(e.to_string()))?;
        self.gains.validate().map_err(|e| SimError::Config(e.to_string()))?;
        self.benchmark.validate().map_err(|e| SimError::Config(e.to_string()))?;
        self.allocation
            .validate()
            .map_err(|e| SimError::Config(e.to_string()))?;
        self.schedule.validate().map_err(|e| SimError::Config(e.to_string()))?;
        if self.schedule.t_start() > 0.0 {
            return cfg_err("schedule must start at t = 0".into());
        }
        Ok(())
    }

    pub fn initial_state(&self) -> RigidBodyState {
        self.initial.to_state(self.seed)
    }

    pub fn to_toml_string(&self) -> Result<String, SimError> {
        toml::to_string(self).map_err(|e| SimError::Config(e.to_string()))
    }
}

fn merge(base: &mut toml::Value, overlay: toml::Value) {
    match (base, overlay) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn parse_value(text: &str) -> toml::Value {
    format!("v = {text}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(text.to_string()))
}

/// Applies `a.b.c=value`; numeric segments index into arrays.
fn apply_override(doc: &mut toml::Value, assignment: &str) -> Result<(), SimError> {
    let (path, value) = assignment
        .split_once('=')
        .ok_or_else(|| SimError::Config(format!("override {assignment:?} is not key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(SimError::Config(format!("bad override key {path:?}")));
    }
    let mut node = doc;
    for key in &keys[..keys.len() - 1] {
        node = step_into(node, key, path)?;
    }
    let last = keys[keys.len() - 1];
    let value = parse_value(value.trim());
    match node {
        toml::Value::Table(t) => {
            t.insert(last.to_string(), value);
        }
        toml::Value::Array(a) => {
            let i: usize = last
                .parse()
                .map_err(|_| SimError::Config(format!("{path:?}: {last:?} is not an array index")))?;
            let slot = a
                .get_mut(i)
                .ok_or_else(|| SimError::Config(format!("{path:?}: index {i} out of range")))?;
            *slot = value;
        }
        _ => return Err(SimError::Config(format!("{path:?} does not name a table entry"))),
    }
    Ok(())
}

fn step_into<'a>(node: &'a mut toml::Value, key: &str, path: &str) -> Result<&'a mut toml::Value, SimError> {
    match node {
        toml::Value::Table(t) => Ok(t
            .entry(key.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))),
        toml::Value::Array(a) => {
            let i: usize = key
                .parse()
                .map_err(|_| SimError::Config(format!("{path:?}: {key:?} is not an array index")))?;
            a.get_mut(i)
                .ok_or_else(|| SimError::Config(format!("{path:?}: index {i} out of range")))
        }
        _ => Err(SimError::Config(format!("{path:?}: {key:?} is not a table"))),
    }
}
