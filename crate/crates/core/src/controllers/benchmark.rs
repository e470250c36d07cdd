//! Standard geometric tracking controller on SE(3) with diagonal matrix
//! gains, used as the comparison baseline.

use crate::dynamics::{QuadParams, RigidBodyState};
use crate::error::ControlError;
use crate::reference::{AttitudeTarget, PositionTarget};
use crate::so3::{self, AttitudeErrorState, Vec3};

use super::{position_induced_attitude, BenchmarkGains, ForceLaw, InducedAttitude};

/// Attitude law `u = −K_R e_R − K_ω e_ω + ω × Jω − J a_d`.
pub fn benchmark_attitude(
    s: &RigidBodyState,
    target: &AttitudeTarget,
    gains: &BenchmarkGains,
    p: &QuadParams,
) -> (Vec3, AttitudeErrorState) {
    let errors = AttitudeErrorState::new(&s.r, &s.omega, &target.r, &target.omega);
    let a_d = so3::feedforward_ad(&s.r, &s.omega, &target.r, &target.omega, &target.omega_dot);
    let j = &p.inertia;
    let u = -gains.k_r_matrix() * errors.e_r - gains.k_omega_matrix() * errors.e_omega + s.omega.cross(&(j * s.omega))
        - j * a_d;
    (u, errors)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkControl {
    pub f: f64,
    pub u: Vec3,
    pub induced: InducedAttitude,
    pub attitude_errors: AttitudeErrorState,
}

/// Position tracking: `A = m g E₃ + m ẍ_d − k_x e_x − k_v e_v`, `f = Aᵀ R e₃`,
/// with the commanded attitude built from `A` and the heading.
pub fn benchmark_control(
    s: &RigidBodyState,
    target: &PositionTarget,
    gains: &BenchmarkGains,
    p: &QuadParams,
) -> Result<BenchmarkControl, ControlError> {
    let law = ForceLaw {
        kp: gains.k_x,
        kd: gains.k_v,
    };
    let induced = position_induced_attitude(s, target, &law, p)?;
    let (u, attitude_errors) = benchmark_attitude(s, &induced.target(), gains, p);
    Ok(BenchmarkControl {
        f: induced.force.dot(&(s.r * Vec3::z())),
        u,
        induced,
        attitude_errors,
    })
}
