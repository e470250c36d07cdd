use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::dynamics::{QuadParams, RigidBodyState};
use crate::error::ControlError;
use crate::reference::{AttitudeTarget, PositionTarget};
use crate::so3::{self, Mat3, Vec3};

use super::{attitude_control, AttitudeControl, GainSet};

/// Smallest admissible `‖U‖` (N) before the thrust direction is undefined.
pub const DEFAULT_EPS_DEN: f64 = 1e-6;
/// Smallest admissible angle (rad) between the heading and thrust direction.
pub const DEFAULT_EPS_PAR: f64 = 1e-4;

/// Position/velocity tracking errors and the position surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionErrorState {
    pub e_x: Vec3,
    pub e_v: Vec3,
    /// `s_x = k_x e_x + k_v e_v`
    pub s_x: Vec3,
}

impl PositionErrorState {
    pub fn new(s: &RigidBodyState, target: &PositionTarget, gains: &GainSet) -> Self {
        let e_x = s.x - target.x;
        let e_v = s.v - target.v;
        Self {
            e_x,
            e_v,
            s_x: gains.k_x * e_x + gains.k_v * e_v,
        }
    }
}

/// Required force `U = m g E₃ + m ẍ_d − K_p e_x − K_d e_v`.
///
/// The proposed law `m g E₃ − m (k_x/k_v) e_v − a s_x + m ẍ_d` has
/// `K_p = a k_x`, `K_d = m k_x/k_v + a k_v`; the benchmark uses
/// `K_p = k_x`, `K_d = k_v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceLaw {
    pub kp: f64,
    pub kd: f64,
}

impl ForceLaw {
    pub fn proposed(gains: &GainSet, p: &QuadParams) -> Self {
        Self {
            kp: gains.a * gains.k_x,
            kd: p.mass * gains.k_x / gains.k_v + gains.a * gains.k_v,
        }
    }

    pub fn force(&self, s: &RigidBodyState, target: &PositionTarget, p: &QuadParams) -> Vec3 {
        let e_x = s.x - target.x;
        let e_v = s.v - target.v;
        p.mass * p.gravity * Vec3::z() + p.mass * target.a - self.kp * e_x - self.kd * e_v
    }
}

/// Attitude induced by the required force, with its body rate and rate
/// derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InducedAttitude {
    pub r_x: Mat3,
    pub omega_x: Vec3,
    pub omega_x_dot: Vec3,
    /// Required force `U`.
    pub force: Vec3,
}

impl InducedAttitude {
    pub fn target(&self) -> AttitudeTarget {
        AttitudeTarget {
            r: self.r_x,
            omega: self.omega_x,
            omega_dot: self.omega_x_dot,
        }
    }
}

/// Unit vector `b/‖b‖` and its first two time derivatives.
fn normalized_with_derivatives(b: &Vec3, b_dot: &Vec3, b_ddot: &Vec3) -> (Vec3, Vec3, Vec3) {
    let nb = b.norm();
    let n = b / nb;
    let n_dot = (b_dot - n * n.dot(b_dot)) / nb;
    let n_ddot = (b_ddot - 2.0 * n_dot * n.dot(b_dot) - n * (n_dot.dot(b_dot) + n.dot(b_ddot))) / nb;
    (n, n_dot, n_ddot)
}

/// Builds `R_x = [e_1h, e_3x × e_1h, e_3x]` from `U` and the heading, and
/// differentiates it exactly through the closed-loop translational dynamics
/// (the applied thrust is `f = Uᵀ R e₃`).
pub fn position_induced_attitude(
    s: &RigidBodyState,
    target: &PositionTarget,
    law: &ForceLaw,
    p: &QuadParams,
) -> Result<InducedAttitude, ControlError> {
    let e3 = Vec3::z();
    let m = p.mass;
    let u = law.force(s, target, p);
    let u_norm = u.norm();
    if !(u_norm >= DEFAULT_EPS_DEN) {
        return Err(ControlError::DegenerateThrustDirection(u_norm));
    }

    let b3 = s.r * e3;
    let b3_dot = s.r * s.omega.cross(&e3);
    let f = u.dot(&b3);
    let e_v = s.v - target.v;
    let e_v_dot = -p.gravity * e3 + (f / m) * b3 - target.a;
    let u_dot = -law.kp * e_v - law.kd * e_v_dot + m * target.jerk;
    let f_dot = u_dot.dot(&b3) + u.dot(&b3_dot);
    let v_ddot = (f_dot * b3 + f * b3_dot) / m;
    let u_ddot = -law.kp * e_v_dot - law.kd * (v_ddot - target.jerk) + m * target.snap;

    let (c3, c3_dot, c3_ddot) = normalized_with_derivatives(&u, &u_dot, &u_ddot);

    let h = target.heading;
    let (h_dot, h_ddot) = (target.heading_dot, target.heading_ddot);
    let angle = c3
        .cross(&h)
        .norm()
        .atan2(c3.dot(&h))
        .min(c3.cross(&(-h)).norm().atan2(-c3.dot(&h)));
    if !(angle >= DEFAULT_EPS_PAR) {
        return Err(ControlError::HeadingParallel(angle));
    }
    let proj = c3.dot(&h);
    let proj_dot = c3_dot.dot(&h) + c3.dot(&h_dot);
    let proj_ddot = c3_ddot.dot(&h) + 2.0 * c3_dot.dot(&h_dot) + c3.dot(&h_ddot);
    let b = h - proj * c3;
    let b_dot = h_dot - proj_dot * c3 - proj * c3_dot;
    let b_ddot = h_ddot - proj_ddot * c3 - 2.0 * proj_dot * c3_dot - proj * c3_ddot;
    let (c1, c1_dot, c1_ddot) = normalized_with_derivatives(&b, &b_dot, &b_ddot);

    let c2 = c3.cross(&c1);
    let c2_dot = c3_dot.cross(&c1) + c3.cross(&c1_dot);
    let c2_ddot = c3_ddot.cross(&c1) + 2.0 * c3_dot.cross(&c1_dot) + c3.cross(&c1_ddot);

    let r_x = Mat3::from_columns(&[c1, c2, c3]);
    let r_x_dot = Mat3::from_columns(&[c1_dot, c2_dot, c3_dot]);
    let r_x_ddot = Mat3::from_columns(&[c1_ddot, c2_ddot, c3_ddot]);

    let omega_x = so3::vee_skew_part(&(r_x.transpose() * r_x_dot));
    let w_hat = so3::hat(&omega_x);
    let omega_x_dot = so3::vee_skew_part(&(r_x.transpose() * r_x_ddot - w_hat * w_hat));

    Ok(InducedAttitude {
        r_x,
        omega_x,
        omega_x_dot,
        force: u,
    })
}

/// How `ω_x`, `ω̇_x` are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateScheme {
    /// Exact differentiation through the closed-loop dynamics.
    #[default]
    Analytic,
    /// Second-order backward differences of `R_x` (and of `ω_x`) across
    /// controller steps; zero for the first two steps of a mode.
    FiniteDifference,
}

/// Per-mode history for the finite-difference rate scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct RateEstimator {
    scheme: RateScheme,
    attitudes: VecDeque<Mat3>,
    rates: VecDeque<Vec3>,
}

impl RateEstimator {
    pub fn new(scheme: RateScheme) -> Self {
        Self {
            scheme,
            attitudes: VecDeque::with_capacity(3),
            rates: VecDeque::with_capacity(3),
        }
    }

    pub fn scheme(&self) -> RateScheme {
        self.scheme
    }

    pub fn reset(&mut self) {
        self.attitudes.clear();
        self.rates.clear();
    }

    /// Returns `(ω_x, ω̇_x)` for the current step.
    pub fn rates(&mut self, induced: &InducedAttitude, dt: f64) -> (Vec3, Vec3) {
        match self.scheme {
            RateScheme::Analytic => (induced.omega_x, induced.omega_x_dot),
            RateScheme::FiniteDifference => {
                push_bounded(&mut self.attitudes, induced.r_x);
                let omega = match bdf2(&self.attitudes, dt) {
                    Some(r_dot) => so3::vee_skew_part(&(induced.r_x.transpose() * r_dot)),
                    None => Vec3::zeros(),
                };
                push_bounded(&mut self.rates, omega);
                let omega_dot = bdf2(&self.rates, dt).unwrap_or_else(Vec3::zeros);
                (omega, omega_dot)
            }
        }
    }
}

fn push_bounded<T>(buf: &mut VecDeque<T>, item: T) {
    if buf.len() == 3 {
        buf.pop_front();
    }
    buf.push_back(item);
}

fn bdf2<T>(buf: &VecDeque<T>, dt: f64) -> Option<T>
where
    T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T> + std::ops::Sub<Output = T>,
{
    (buf.len() == 3).then(|| (buf[2] * 3.0 - buf[1] * 4.0 + buf[0]) * (0.5 / dt))
}

/// Output of the position controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionControl {
    pub f: f64,
    pub u: Vec3,
    pub errors: PositionErrorState,
    pub induced: InducedAttitude,
    pub attitude: AttitudeControl,
}

/// Position controller with analytic induced-attitude rates:
/// `f = Uᵀ R e₃`, `u` from the attitude controller tracking `R_x`.
pub fn position_control(
    s: &RigidBodyState,
    target: &PositionTarget,
    gains: &GainSet,
    p: &QuadParams,
) -> Result<PositionControl, ControlError> {
    let mut est = RateEstimator::new(RateScheme::Analytic);
    position_control_with(s, target, gains, p, &mut est, 0.0)
}

/// Position controller with a caller-owned rate estimator.
pub fn position_control_with(
    s: &RigidBodyState,
    target: &PositionTarget,
    gains: &GainSet,
    p: &QuadParams,
    estimator: &mut RateEstimator,
    dt: f64,
) -> Result<PositionControl, ControlError> {
    let law = ForceLaw::proposed(gains, p);
    let mut induced = position_induced_attitude(s, target, &law, p)?;
    let (w, w_dot) = estimator.rates(&induced, dt);
    induced.omega_x = w;
    induced.omega_x_dot = w_dot;
    let attitude = attitude_control(s, &induced.target(), gains, p);
    Ok(PositionControl {
        f: induced.force.dot(&(s.r * Vec3::z())),
        u: attitude.u,
        errors: PositionErrorState::new(s, target, gains),
        induced,
        attitude,
    })
}
