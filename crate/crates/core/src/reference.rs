//! Reference signals consumed by the controllers.

use crate::so3::{Mat3, Vec3};

/// Desired attitude with its body rate and rate derivative at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeTarget {
    pub r: Mat3,
    pub omega: Vec3,
    pub omega_dot: Vec3,
}

impl AttitudeTarget {
    pub fn fixed(r: Mat3) -> Self {
        Self {
            r,
            omega: Vec3::zeros(),
            omega_dot: Vec3::zeros(),
        }
    }
}

/// Desired position with derivatives up to snap, and the heading direction
/// `e_1d` with its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionTarget {
    pub x: Vec3,
    pub v: Vec3,
    pub a: Vec3,
    pub jerk: Vec3,
    pub snap: Vec3,
    pub heading: Vec3,
    pub heading_dot: Vec3,
    pub heading_ddot: Vec3,
}

impl PositionTarget {
    /// Hold `x` with heading `E₁`.
    pub fn hold(x: Vec3) -> Self {
        Self::hold_with_heading(x, Vec3::x())
    }

    pub fn hold_with_heading(x: Vec3, heading: Vec3) -> Self {
        Self {
            x,
            v: Vec3::zeros(),
            a: Vec3::zeros(),
            jerk: Vec3::zeros(),
            snap: Vec3::zeros(),
            heading: heading.normalize(),
            heading_dot: Vec3::zeros(),
            heading_ddot: Vec3::zeros(),
        }
    }
}

/// Time-parameterised attitude command `t ↦ (R_d, ω_d, ω̇_d)`.
pub trait AttitudeCommand {
    fn at(&self, t: f64) -> AttitudeTarget;
}

/// Time-parameterised position command `t ↦ (x_d, …, e_1d)`.
pub trait PositionCommand {
    fn at(&self, t: f64) -> PositionTarget;
}

impl AttitudeCommand for AttitudeTarget {
    fn at(&self, _t: f64) -> AttitudeTarget {
        *self
    }
}

impl PositionCommand for PositionTarget {
    fn at(&self, _t: f64) -> PositionTarget {
        *self
    }
}

/// Constant body-rate command `R_d(t) = R_0 exp(hat(ω) (t − t_0))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantRateCommand {
    pub r0: Mat3,
    pub omega: Vec3,
    pub t0: f64,
}

impl AttitudeCommand for ConstantRateCommand {
    fn at(&self, t: f64) -> AttitudeTarget {
        AttitudeTarget {
            r: self.r0 * crate::so3::exp_map(&(self.omega * (t - self.t0))),
            omega: self.omega,
            omega_dot: Vec3::zeros(),
        }
    }
}
