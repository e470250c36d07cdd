use crate::dynamics::QuadParams;
use crate::dynamics::RigidBodyState;
use crate::reference::AttitudeTarget;
use crate::so3::{self, AttitudeErrorState, Vec3};

use super::GainSet;

/// Nonlinear attitude surface `s_R = k_R e_R + k_ω e_ω`.
pub fn attitude_surface(e_r: &Vec3, e_omega: &Vec3, gains: &GainSet) -> Vec3 {
    gains.k_r * e_r + gains.k_omega * e_omega
}

/// Body moment together with the errors it was computed from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeControl {
    pub u: Vec3,
    pub errors: AttitudeErrorState,
    /// Set when `Ψ ≥ 2`, i.e. outside the domain of the exponential
    /// certificate. The moment is still returned.
    pub outside_l2: bool,
}

/// Surface-based attitude controller
/// `u = ω × Jω − J((k_R/k_ω) E e_ω + a_d + η s_R)`.
pub fn attitude_control(
    s: &RigidBodyState,
    target: &AttitudeTarget,
    gains: &GainSet,
    p: &QuadParams,
) -> AttitudeControl {
    let errors = AttitudeErrorState::new(&s.r, &s.omega, &target.r, &target.omega);
    let e_dot = so3::error_jacobian(&s.r, &target.r) * errors.e_omega;
    let a_d = so3::feedforward_ad(&s.r, &s.omega, &target.r, &target.omega, &target.omega_dot);
    let s_r = attitude_surface(&errors.e_r, &errors.e_omega, gains);
    let j = &p.inertia;
    let u = s.omega.cross(&(j * s.omega)) - j * ((gains.k_r / gains.k_omega) * e_dot + a_d + gains.eta * s_r);
    AttitudeControl {
        u,
        errors,
        outside_l2: errors.psi >= 2.0,
    }
}
