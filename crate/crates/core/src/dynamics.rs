//! Rigid-body quadrotor equations of motion and a fixed-step integrator.
//!
//! ```text
//! ẋ = v
//! m v̇ = −m g E₃ + f R e₃
//! J ω̇ = u − ω × J ω
//! Ṙ = R hat(ω)
//! ```

use nalgebra::{Matrix3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::DynamicsError;
use crate::so3::{self, Mat3, Vec3};

/// Any state component above this magnitude is treated as divergence.
pub const BLOWUP_LIMIT: f64 = 1e9;

/// Physical parameters of the vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadParams {
    /// Mass (kg).
    pub mass: f64,
    /// Inertia matrix in the body frame (kg·m²).
    pub inertia: Matrix3<f64>,
    /// Distance from the centre of mass to each rotor axis (m).
    pub arm_length: f64,
    /// Rotor torque coefficient (m).
    pub torque_coefficient: f64,
    /// Gravitational acceleration (m/s²).
    pub gravity: f64,
}

impl QuadParams {
    /// The vehicle used in the reference flip and tuning scenarios.
    pub fn reference() -> Self {
        Self {
            mass: 1.34,
            inertia: Matrix3::from_diagonal(&Vec3::new(0.072, 0.0734, 0.1477)),
            arm_length: 0.30,
            torque_coefficient: 9.001e-3,
            gravity: 9.81,
        }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |what: &str| Err(DynamicsError::InvalidParams(what.to_string()));
        if !(self.mass > 0.0) {
            return bad("mass must be positive");
        }
        if !(self.arm_length > 0.0) {
            return bad("arm length must be positive");
        }
        if !(self.torque_coefficient > 0.0) {
            return bad("torque coefficient must be positive");
        }
        if (self.inertia - self.inertia.transpose()).norm() > 1e-12 {
            return bad("inertia must be symmetric");
        }
        if self.inertia.cholesky().is_none() {
            return bad("inertia must be positive definite");
        }
        Ok(())
    }

    pub fn inertia_inverse(&self) -> Result<Mat3, DynamicsError> {
        self.inertia.try_inverse().ok_or(DynamicsError::SingularInertia)
    }

    /// Hover thrust per rotor, `m g / 4`.
    pub fn hover_rotor_thrust(&self) -> f64 {
        self.mass * self.gravity / 4.0
    }
}

/// Position, velocity, attitude and body rate of the vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidBodyState {
    pub x: Vec3,
    pub v: Vec3,
    pub r: Mat3,
    pub omega: Vec3,
}

impl Default for RigidBodyState {
    fn default() -> Self {
        Self {
            x: Vec3::zeros(),
            v: Vec3::zeros(),
            r: Mat3::identity(),
            omega: Vec3::zeros(),
        }
    }
}

impl RigidBodyState {
    pub fn is_finite(&self) -> bool {
        self.x
            .iter()
            .chain(self.v.iter())
            .chain(self.r.iter())
            .chain(self.omega.iter())
            .all(|c| c.is_finite())
    }

    fn max_abs(&self) -> f64 {
        self.x
            .iter()
            .chain(self.v.iter())
            .chain(self.r.iter())
            .chain(self.omega.iter())
            .fold(
                0.0f64,
                |acc, c| if c.is_finite() { acc.max(c.abs()) } else { f64::INFINITY },
            )
    }
}

/// Total thrust, body moment and the per-rotor thrusts that realise them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    pub f: f64,
    pub u: Vec3,
    pub thrusts: Vector4<f64>,
}

impl ControlOutput {
    pub fn hover(p: &QuadParams) -> Self {
        let t = p.hover_rotor_thrust();
        Self {
            f: 4.0 * t,
            u: Vec3::zeros(),
            thrusts: Vector4::repeat(t),
        }
    }
}

/// Time derivative of a [`RigidBodyState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDerivative {
    pub x_dot: Vec3,
    pub v_dot: Vec3,
    pub r_dot: Mat3,
    pub omega_dot: Vec3,
}

/// Evaluates the equations of motion for thrust `f` and moment `u`.
pub fn state_derivative(
    s: &RigidBodyState,
    f: f64,
    u: &Vec3,
    p: &QuadParams,
) -> Result<StateDerivative, DynamicsError> {
    let j_inv = p.inertia_inverse()?;
    Ok(derivative_with(s, f, u, p, &j_inv))
}

fn derivative_with(s: &RigidBodyState, f: f64, u: &Vec3, p: &QuadParams, j_inv: &Mat3) -> StateDerivative {
    let e3 = Vec3::z();
    StateDerivative {
        x_dot: s.v,
        v_dot: -p.gravity * e3 + (f / p.mass) * (s.r * e3),
        r_dot: s.r * so3::hat(&s.omega),
        omega_dot: j_inv * (u - s.omega.cross(&(p.inertia * s.omega))),
    }
}

fn advance(s: &RigidBodyState, k: &StateDerivative, h: f64) -> RigidBodyState {
    RigidBodyState {
        x: s.x + h * k.x_dot,
        v: s.v + h * k.v_dot,
        r: s.r + h * k.r_dot,
        omega: s.omega + h * k.omega_dot,
    }
}

/// One classical RK4 step with the input held constant over `dt`, followed
/// by projection of `R` back onto SO(3).
pub fn step(s: &RigidBodyState, f: f64, u: &Vec3, p: &QuadParams, dt: f64) -> Result<RigidBodyState, DynamicsError> {
    if !(dt > 0.0) {
        return Err(DynamicsError::InvalidStep(dt));
    }
    let j_inv = p.inertia_inverse()?;
    let k1 = derivative_with(s, f, u, p, &j_inv);
    let k2 = derivative_with(&advance(s, &k1, 0.5 * dt), f, u, p, &j_inv);
    let k3 = derivative_with(&advance(s, &k2, 0.5 * dt), f, u, p, &j_inv);
    let k4 = derivative_with(&advance(s, &k3, dt), f, u, p, &j_inv);
    let w = dt / 6.0;
    let mut next = RigidBodyState {
        x: s.x + w * (k1.x_dot + 2.0 * k2.x_dot + 2.0 * k3.x_dot + k4.x_dot),
        v: s.v + w * (k1.v_dot + 2.0 * k2.v_dot + 2.0 * k3.v_dot + k4.v_dot),
        r: s.r + w * (k1.r_dot + 2.0 * k2.r_dot + 2.0 * k3.r_dot + k4.r_dot),
        omega: s.omega + w * (k1.omega_dot + 2.0 * k2.omega_dot + 2.0 * k3.omega_dot + k4.omega_dot),
    };
    let magnitude = next.max_abs();
    if magnitude > BLOWUP_LIMIT {
        return Err(DynamicsError::NumericalBlowup { magnitude });
    }
    next.r = so3::project_to_so3(&next.r);
    Ok(next)
}
