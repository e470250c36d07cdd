//! Rotation-group primitives and the attitude-error geometry used by the
//! controllers.
//!
//! Rotations are plain `Matrix3<f64>` values mapping body coordinates to the
//! inertial frame. The error function `Ψ(R, R_d) = ½ tr[I − R_dᵀR]` and the
//! associated error vectors are defined on pairs of such matrices.

use nalgebra::{Matrix3, Vector3};

use crate::error::GeometryError;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Default tolerance for orthonormality and skewness checks.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Cross-product map: `hat(v) * w == v × w`.
#[rustfmt::skip]
pub fn hat(v: &Vec3) -> Mat3 {
    Mat3::new(
         0.0, -v.z,  v.y,
         v.z,  0.0, -v.x,
        -v.y,  v.x,  0.0,
    )
}

/// Inverse of [`hat`]. Fails when `m` is not skew-symmetric to within
/// [`DEFAULT_TOLERANCE`].
pub fn vee(m: &Mat3) -> Result<Vec3, GeometryError> {
    let asym = (m + m.transpose()).norm();
    if asym > DEFAULT_TOLERANCE {
        return Err(GeometryError::NonSkew(asym));
    }
    Ok(Vec3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)]))
}

/// `vee` of the skew-symmetric part `(M − Mᵀ)/2`. Never fails.
pub fn vee_skew_part(m: &Mat3) -> Vec3 {
    0.5 * Vec3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)])
}

/// Exponential map on so(3) (Rodrigues' formula).
pub fn exp_map(w: &Vec3) -> Mat3 {
    let theta = w.norm();
    let k = hat(w);
    if theta < 1e-8 {
        // second-order Taylor expansion
        return Mat3::identity() + k + 0.5 * k * k;
    }
    let a = theta.sin() / theta;
    let b = (1.0 - theta.cos()) / (theta * theta);
    Mat3::identity() + a * k + b * k * k
}

/// Rotation by `angle` about the (not necessarily unit) `axis`.
pub fn axis_angle(axis: &Vec3, angle: f64) -> Mat3 {
    exp_map(&(axis.normalize() * angle))
}

/// Closest rotation in Frobenius norm (polar projection).
pub fn project_to_so3(m: &Mat3) -> Mat3 {
    let svd = m.svd(true, true);
    let u = svd.u.expect("svd u requested");
    let v_t = svd.v_t.expect("svd v_t requested");
    let mut r = u * v_t;
    if r.determinant() < 0.0 {
        let mut u = u;
        u.column_mut(2).neg_mut();
        r = u * v_t;
    }
    r
}

/// Returns `true` if `RᵀR = I` and `det R = 1` within `tol`.
pub fn is_rotation(r: &Mat3, tol: f64) -> bool {
    let orth = (r.transpose() * r - Mat3::identity()).norm();
    orth <= tol && (r.determinant() - 1.0).abs() <= tol && r.iter().all(|x| x.is_finite())
}

/// Attitude error function `Ψ(R, R_d) = ½ tr[I − R_dᵀR]`.
pub fn psi_error(r: &Mat3, rd: &Mat3) -> f64 {
    0.5 * (3.0 - (rd.transpose() * r).trace())
}

/// Attitude error vector `e_R = ½ vee(R_dᵀR − RᵀR_d)`.
pub fn attitude_error_vector(r: &Mat3, rd: &Mat3) -> Vec3 {
    let q = rd.transpose() * r;
    vee_skew_part(&q)
}

/// Angular velocity error `e_ω = ω − RᵀR_d ω_d`.
pub fn angular_velocity_error(r: &Mat3, omega: &Vec3, rd: &Mat3, omega_d: &Vec3) -> Vec3 {
    omega - r.transpose() * rd * omega_d
}

/// `E(R, R_d) = ½ (tr[RᵀR_d] I − RᵀR_d)`, so that `ė_R = E e_ω`.
pub fn error_jacobian(r: &Mat3, rd: &Mat3) -> Mat3 {
    let q = r.transpose() * rd;
    0.5 * (Mat3::identity() * q.trace() - q)
}

/// Feed-forward term `a_d = hat(ω) RᵀR_d ω_d − RᵀR_d ω̇_d`.
pub fn feedforward_ad(r: &Mat3, omega: &Vec3, rd: &Mat3, omega_d: &Vec3, omega_d_dot: &Vec3) -> Vec3 {
    let q = r.transpose() * rd;
    hat(omega) * q * omega_d - q * omega_d_dot
}

/// Bundle of the attitude tracking errors at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeErrorState {
    pub psi: f64,
    pub e_r: Vec3,
    pub e_omega: Vec3,
}

impl AttitudeErrorState {
    pub fn new(r: &Mat3, omega: &Vec3, rd: &Mat3, omega_d: &Vec3) -> Self {
        Self {
            psi: psi_error(r, rd),
            e_r: attitude_error_vector(r, rd),
            e_omega: angular_velocity_error(r, omega, rd, omega_d),
        }
    }
}

/// Checks `½‖e_R‖² ≤ Ψ ≤ ‖e_R‖² / (2 − ψ_cap)`, valid while `Ψ < ψ_cap < 2`.
pub fn psi_bounds_check(psi: f64, e_r: &Vec3, psi_cap: f64) -> Result<bool, GeometryError> {
    if !(psi < psi_cap && psi_cap < 2.0) {
        return Err(GeometryError::DomainViolation { psi, cap: psi_cap });
    }
    let n2 = e_r.norm_squared();
    let tol = DEFAULT_TOLERANCE;
    Ok(0.5 * n2 <= psi + tol && psi <= n2 / (2.0 - psi_cap) + tol)
}
