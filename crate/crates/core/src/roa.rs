//! Numerical evaluation of the stability certificates: attitude and position
//! basins of attraction, the quadratic-form matrices that sandwich and bound
//! the Lyapunov candidates, and Lyapunov diagnostics along trajectories.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::controllers::{position_induced_attitude, ForceLaw, GainSet, PositionErrorState};
use crate::dynamics::{QuadParams, RigidBodyState};
use crate::error::{CertificateError, GeometryError};
use crate::reference::{AttitudeTarget, PositionCommand, PositionTarget};
use crate::so3::{self, AttitudeErrorState, Mat3, Vec3};

pub type Mat2 = Matrix2<f64>;

/// Smallest eigenvalue of a symmetric 2×2 matrix.
pub fn lambda_min(m: &Mat2) -> f64 {
    m.symmetric_eigenvalues().min()
}

/// Largest eigenvalue of a symmetric 2×2 matrix.
pub fn lambda_max(m: &Mat2) -> f64 {
    m.symmetric_eigenvalues().max()
}

/// Spectral norm of a general 2×2 matrix.
pub fn spectral_norm(m: &Mat2) -> f64 {
    m.singular_values().max()
}

/// Leading-minor test for a symmetric 2×2 matrix.
pub fn is_positive_definite(m: &Mat2) -> bool {
    m[(0, 0)] > 0.0 && m.determinant() > 0.0
}

/// Initial-condition check of the attitude basin:
/// `Ψ(0) < 2` and `‖e_ω(0)‖² < 2 η k_R (2 − Ψ(0))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttitudeBasinReport {
    pub psi0: f64,
    pub e_omega0_normsq: f64,
    pub bound: f64,
    pub inside: bool,
}

pub fn attitude_basin(s0: &RigidBodyState, target: &AttitudeTarget, gains: &GainSet) -> AttitudeBasinReport {
    let e = AttitudeErrorState::new(&s0.r, &s0.omega, &target.r, &target.omega);
    attitude_basin_from_errors(e.psi, e.e_omega.norm_squared(), gains)
}

pub fn attitude_basin_from_errors(psi0: f64, e_omega0_normsq: f64, gains: &GainSet) -> AttitudeBasinReport {
    let bound = 2.0 * gains.eta * gains.k_r * (2.0 - psi0);
    AttitudeBasinReport {
        psi0,
        e_omega0_normsq,
        bound,
        inside: psi0 < 2.0 && e_omega0_normsq < bound,
    }
}

/// Matrices bounding the attitude Lyapunov function
/// `V = ‖s_R‖²/(2k_ω) + 2ηk_Rk_ωΨ` and its derivative in `z_R = (‖e_R‖, ‖e_ω‖)`:
/// `z_RᵀW₁z_R ≤ V ≤ z_RᵀW₂z_R`, `V̇ = −η(k_R²‖e_R‖² + k_ω²‖e_ω‖²) = −η z_RᵀW₃z_R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeCertificates {
    pub psi_cap: f64,
    pub w1: Mat2,
    pub w2: Mat2,
    pub w3: Mat2,
    /// Exponential rate `η λ_min(W₃) / λ_max(W₂)`.
    pub tau: f64,
}

pub fn certificate_matrices_attitude(gains: &GainSet, psi_cap: f64) -> Result<AttitudeCertificates, CertificateError> {
    if !(psi_cap > 0.0 && psi_cap < 2.0) {
        return Err(CertificateError::InvalidPsiCap(psi_cap));
    }
    let (kr, kw, eta) = (gains.k_r, gains.k_omega, gains.eta);
    let w1 = Mat2::new(kr * kr / (2.0 * kw) + eta * kr * kw, -kr / 2.0, -kr / 2.0, kw / 2.0);
    let w2 = Mat2::new(
        kr * kr / (2.0 * kw) + (2.0 / (2.0 - psi_cap)) * eta * kr * kw,
        kr / 2.0,
        kr / 2.0,
        kw / 2.0,
    );
    let w3 = Mat2::new(kr * kr, 0.0, 0.0, kw * kw);
    let tau = eta * lambda_min(&w3) / lambda_max(&w2);
    Ok(AttitudeCertificates {
        psi_cap,
        w1,
        w2,
        w3,
        tau,
    })
}

/// `V = ‖s_R‖²/(2k_ω) + 2ηk_Rk_ωΨ`.
pub fn attitude_lyapunov(e: &AttitudeErrorState, gains: &GainSet) -> f64 {
    let s_r = gains.k_r * e.e_r + gains.k_omega * e.e_omega;
    s_r.norm_squared() / (2.0 * gains.k_omega) + 2.0 * gains.eta * gains.k_r * gains.k_omega * e.psi
}

/// `V_Ψ = ½‖e_ω‖² + ηk_RΨ`.
pub fn attitude_rate_lyapunov(e: &AttitudeErrorState, gains: &GainSet) -> f64 {
    0.5 * e.e_omega.norm_squared() + gains.eta * gains.k_r * e.psi
}

/// `V_x = (m/(2k_v))‖s_x‖² + a k_x k_v ‖e_x‖²`.
pub fn position_lyapunov(e: &PositionErrorState, gains: &GainSet, p: &QuadParams) -> f64 {
    p.mass / (2.0 * gains.k_v) * e.s_x.norm_squared() + gains.a * gains.k_x * gains.k_v * e.e_x.norm_squared()
}

/// Exponential envelope `Ψ(t) ≤ μ e^{−τt}` certified for an attitude-mode
/// initial condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttitudeEnvelope {
    pub v0: f64,
    /// `V_Ψ(0)/(ηk_R)`: bound on `Ψ(t)` used as the certificate cap.
    pub psi_a: f64,
    /// `V(0)/(ηk_R)`: the alternative reading of the same bound.
    pub psi_a_from_v: f64,
    pub mu: f64,
    pub tau: f64,
}

/// Builds the envelope from the initial errors. Fails when the cap
/// `ψ_a` is not below 2 (initial condition outside the basin).
pub fn attitude_envelope(e0: &AttitudeErrorState, gains: &GainSet) -> Result<AttitudeEnvelope, CertificateError> {
    let v0 = attitude_lyapunov(e0, gains);
    let psi_a = attitude_rate_lyapunov(e0, gains) / (gains.eta * gains.k_r);
    let psi_a_from_v = v0 / (gains.eta * gains.k_r);
    // a zero-error start has ψ_a = 0; any positive cap certifies it
    let cap = psi_a.max(f64::EPSILON);
    let certs = certificate_matrices_attitude(gains, cap)?;
    // V ≥ λ_min(W₁)‖e_R‖² ≥ λ_min(W₁)(2 − ψ_a)Ψ
    let mu = v0 / ((2.0 - cap) * lambda_min(&certs.w1));
    Ok(AttitudeEnvelope {
        v0,
        psi_a,
        psi_a_from_v,
        mu,
        tau: certs.tau,
    })
}

/// First branch of the position-free `θ_max`: `a k_v² / (a k_v² + m k_x)`.
pub fn theta_first_branch(gains: &GainSet, p: &QuadParams) -> f64 {
    let akv2 = gains.a * gains.k_v * gains.k_v;
    akv2 / (akv2 + p.mass * gains.k_x)
}

/// `δ₁ + δ₂` with `r = a k_v²/(m k_x)`: `2r√(4r² + 4r + 2) − 4r² − 2r`.
pub fn theta_delta_sum(gains: &GainSet, p: &QuadParams) -> f64 {
    let r = gains.a * gains.k_v * gains.k_v / (p.mass * gains.k_x);
    2.0 * r * (4.0 * r * r + 4.0 * r + 2.0).sqrt() - 4.0 * r * r - 2.0 * r
}

/// `θ_max = min{a k_v²/(a k_v² + m k_x), δ₁ + δ₂}` for the position-free basin.
pub fn theta_max_position_free(gains: &GainSet, p: &QuadParams) -> f64 {
    theta_first_branch(gains, p).min(theta_delta_sum(gains, p))
}

/// `θ_max = a k_v²/(a k_v² + m k_x)` for the bounded-error basins.
pub fn theta_max_bounded(gains: &GainSet, p: &QuadParams) -> f64 {
    theta_first_branch(gains, p)
}

/// `θ = √(ψ(2 − ψ))`, the bound on `‖e_R‖` implied by `Ψ ≤ ψ`.
pub fn theta_of_psi(psi: f64) -> f64 {
    (psi * (2.0 - psi)).max(0.0).sqrt()
}

/// Inverse of [`theta_of_psi`] on `ψ ∈ [0, 1]`.
pub fn psi_of_theta(theta: f64) -> f64 {
    1.0 - (1.0 - theta * theta).max(0.0).sqrt()
}

/// Which form of the position basin is certified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasinVariant {
    PositionFree,
    /// Requires `‖e_x‖ ≤ e_x_max`.
    PositionBounded,
    /// Requires `‖e_v‖ ≤ e_v_max`.
    VelocityBounded,
}

/// Matrices of the combined position/attitude certificate in
/// `z_x = (‖e_x‖, ‖e_v‖)`, `z_R = (‖e_R‖, ‖e_ω‖)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionCertificates {
    pub theta: f64,
    pub pi1: Mat2,
    pub pi2: Mat2,
    pub pi3: Mat2,
    pub pi4: Mat2,
    pub pi5: Mat2,
    /// `λ_min(W₃) > ‖Π₂‖²/(4ηλ_min(Π₁))` with `λ_min(Π₁) > 0`.
    pub w3_ok: bool,
}

pub fn position_certificates(
    gains: &GainSet,
    p: &QuadParams,
    b: f64,
    theta: f64,
    variant: BasinVariant,
    e_bound: Option<f64>,
) -> Result<PositionCertificates, CertificateError> {
    let (a, kx, kv, m) = (gains.a, gains.k_x, gains.k_v, p.mass);
    let cross = 2.0 * a * kx * kv + m * kx * kx / kv;
    let (pi1, pi2) = match variant {
        BasinVariant::PositionFree => {
            let off = -a * kx * kv * theta - m * kx * kx * theta / (2.0 * kv);
            (
                Mat2::new(
                    a * kx * kx * (1.0 - theta),
                    off,
                    off,
                    a * kv * kv - theta * (m * kx + a * kv * kv),
                ),
                Mat2::new(b * kx, 0.0, b * kv, 0.0),
            )
        }
        BasinVariant::PositionBounded | BasinVariant::VelocityBounded => {
            let e_max = e_bound.ok_or_else(|| CertificateError::InvalidVariant(format!("{variant:?}")))?;
            let pi1 = Mat2::new(
                a * kx * kx * (1.0 - theta),
                0.0,
                0.0,
                a * kv * kv - theta * (m * kx + a * kv * kv),
            );
            let pi2 = if variant == BasinVariant::PositionBounded {
                Mat2::new(b * kx, 0.0, b * kv + cross * e_max, 0.0)
            } else {
                Mat2::new(b * kx + cross * e_max, 0.0, b * kv, 0.0)
            };
            (pi1, pi2)
        }
    };
    let pi3 = Mat2::new(
        a * kx * kv + m * kx * kx / (2.0 * kv),
        -m * kx / 2.0,
        -m * kx / 2.0,
        m * kv / 2.0,
    );
    let pi4 = Mat2::new(
        a * kx * kv + m * kx * kx / (2.0 * kv),
        m * kx / 2.0,
        m * kx / 2.0,
        m * kv / 2.0,
    );
    let w3_min = gains.k_r.powi(2).min(gains.k_omega.powi(2));
    let n2 = spectral_norm(&pi2);
    let l1 = lambda_min(&pi1);
    let pi5 = Mat2::new(l1, -0.5 * n2, -0.5 * n2, gains.eta * w3_min);
    let w3_ok = l1 > 0.0 && w3_min > n2 * n2 / (4.0 * gains.eta * l1);
    Ok(PositionCertificates {
        theta,
        pi1,
        pi2,
        pi3,
        pi4,
        pi5,
        w3_ok,
    })
}

fn theta_max_for(variant: BasinVariant, gains: &GainSet, p: &QuadParams) -> f64 {
    match variant {
        BasinVariant::PositionFree => theta_max_position_free(gains, p),
        _ => theta_max_bounded(gains, p),
    }
}

/// Largest `ψ_p < 1` (within `1e-12` relative) for which `θ_p = √(ψ_p(2−ψ_p))`
/// stays below `θ_max` and the gain condition holds with `Π₁(θ_p)`.
/// Returns `None` if the gain condition fails even at `θ = 0`.
pub fn max_certified_psi_p(
    gains: &GainSet,
    p: &QuadParams,
    b: f64,
    variant: BasinVariant,
    e_bound: Option<f64>,
) -> Result<Option<f64>, CertificateError> {
    let ok = |psi: f64| -> Result<bool, CertificateError> {
        let th = theta_of_psi(psi);
        Ok(th < theta_max_for(variant, gains, p) && position_certificates(gains, p, b, th, variant, e_bound)?.w3_ok)
    };
    if !ok(0.0)? {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    if ok(hi)? {
        return Ok(Some(hi));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ok(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    Ok(Some(lo))
}

/// Position-mode basin audit for one initial condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositionBasinReport {
    pub variant: BasinVariant,
    /// Acceleration bound `B ≥ sup‖m g E₃ + m ẍ_d‖`.
    pub b: f64,
    /// `Ψ(R(0), R_x(0))`.
    pub psi0: f64,
    pub psi_p: f64,
    /// `√(Ψ(0)(2 − Ψ(0)))`, the audited `‖e_R(0)‖` bound.
    pub theta: f64,
    /// `√(ψ_p(2 − ψ_p))`, the value at which `Π₁` is evaluated.
    pub theta_p: f64,
    pub theta_max: f64,
    pub w3_ok: bool,
    /// `‖e_ω(0)‖² < 2ηk_R(ψ_p − Ψ(0))`.
    pub e_omega_bound_ok: bool,
    pub e_xv_max: Option<f64>,
    /// The bounded variants also require the initial error to respect the bound.
    pub error_bound_ok: bool,
    pub inside: bool,
}

/// Evaluates the position basin at `s0` against `target`. When `psi_p` is
/// `None`, the largest certified value from [`max_certified_psi_p`] is used.
#[allow(clippy::too_many_arguments)]
pub fn position_basin(
    s0: &RigidBodyState,
    target: &PositionTarget,
    gains: &GainSet,
    p: &QuadParams,
    b: f64,
    variant: BasinVariant,
    e_bound: Option<f64>,
    psi_p: Option<f64>,
) -> Result<PositionBasinReport, CertificateError> {
    if variant != BasinVariant::PositionFree && e_bound.is_none() {
        return Err(CertificateError::InvalidVariant(format!("{variant:?}")));
    }
    let induced = position_induced_attitude(s0, target, &ForceLaw::proposed(gains, p), p)?;
    let e = AttitudeErrorState::new(&s0.r, &s0.omega, &induced.r_x, &induced.omega_x);
    let pos = PositionErrorState::new(s0, target, gains);
    let theta_max = theta_max_for(variant, gains, p);
    let (psi_p, w3_ok) = match psi_p {
        Some(v) => {
            if !(v > 0.0 && v < 1.0) {
                return Err(CertificateError::InvalidPsiCap(v));
            }
            let certs = position_certificates(gains, p, b, theta_of_psi(v), variant, e_bound)?;
            (v, certs.w3_ok)
        }
        None => match max_certified_psi_p(gains, p, b, variant, e_bound)? {
            Some(v) => (v, true),
            None => (0.0, false),
        },
    };
    let theta_p = theta_of_psi(psi_p);
    let e_omega_bound_ok = e.e_omega.norm_squared() < 2.0 * gains.eta * gains.k_r * (psi_p - e.psi);
    let error_bound_ok = match (variant, e_bound) {
        (BasinVariant::PositionBounded, Some(m)) => pos.e_x.norm() <= m,
        (BasinVariant::VelocityBounded, Some(m)) => pos.e_v.norm() <= m,
        _ => true,
    };
    let inside = e.psi < psi_p && psi_p < 1.0 && theta_p < theta_max && w3_ok && e_omega_bound_ok && error_bound_ok;
    Ok(PositionBasinReport {
        variant,
        b,
        psi0: e.psi,
        psi_p,
        theta: theta_of_psi(e.psi),
        theta_p,
        theta_max,
        w3_ok,
        e_omega_bound_ok,
        e_xv_max: e_bound,
        error_bound_ok,
        inside,
    })
}

/// `B = 1.01 · max ‖m g E₃ + m ẍ_d‖` over a uniform grid on `[t0, t1]`.
pub fn acceleration_bound(cmd: &dyn PositionCommand, t0: f64, t1: f64, step: f64, p: &QuadParams) -> f64 {
    let n = ((t1 - t0) / step).ceil().max(1.0) as usize;
    let peak = (0..=n)
        .map(|k| {
            let t = (t0 + k as f64 * step).min(t1);
            (p.mass * p.gravity * Vec3::z() + p.mass * cmd.at(t).a).norm()
        })
        .fold(0.0, f64::max);
    1.01 * peak
}

/// Lyapunov candidates and sandwich bounds at one sample.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LyapunovSample {
    pub v: f64,
    pub v_psi: f64,
    pub v_x: f64,
    pub v_g: f64,
    /// `z_RᵀW₁z_R + z_xᵀΠ₃z_x`
    pub bound_lhs: f64,
    /// `z_RᵀW₂z_R + z_xᵀΠ₄z_x`
    pub bound_rhs: f64,
}

impl LyapunovSample {
    pub fn sandwich_holds(&self, tol: f64) -> bool {
        self.bound_lhs <= self.v_g + tol * (1.0 + self.v_g) && self.v_g <= self.bound_rhs + tol * (1.0 + self.v_g)
    }
}

fn quad(m: &Mat2, z: &Vector2<f64>) -> f64 {
    (z.transpose() * m * z)[(0, 0)]
}

/// Evaluates all candidates for one sample; `pos` is `None` in attitude mode.
pub fn lyapunov_sample(
    att: &AttitudeErrorState,
    pos: Option<&PositionErrorState>,
    gains: &GainSet,
    p: &QuadParams,
    psi_cap: f64,
) -> Result<LyapunovSample, CertificateError> {
    let certs = certificate_matrices_attitude(gains, psi_cap)?;
    let v = attitude_lyapunov(att, gains);
    let z_r = Vector2::new(att.e_r.norm(), att.e_omega.norm());
    let (v_x, z_x) = match pos {
        Some(e) => (position_lyapunov(e, gains, p), Vector2::new(e.e_x.norm(), e.e_v.norm())),
        None => (0.0, Vector2::zeros()),
    };
    let pc = position_certificates(gains, p, 0.0, 0.0, BasinVariant::PositionFree, None)?;
    Ok(LyapunovSample {
        v,
        v_psi: attitude_rate_lyapunov(att, gains),
        v_x,
        v_g: v_x + v,
        bound_lhs: quad(&certs.w1, &z_r) + quad(&pc.pi3, &z_x),
        bound_rhs: quad(&certs.w2, &z_r) + quad(&pc.pi4, &z_x),
    })
}

/// Lyapunov trace along a sampled trajectory of error states.
pub fn lyapunov_trace(
    samples: &[(AttitudeErrorState, Option<PositionErrorState>)],
    gains: &GainSet,
    p: &QuadParams,
    psi_cap: f64,
) -> Result<Vec<LyapunovSample>, CertificateError> {
    samples
        .iter()
        .map(|(a, x)| lyapunov_sample(a, x.as_ref(), gains, p, psi_cap))
        .collect()
}

/// Tilt bounds between the actual and induced attitude, valid for `Ψ < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropABounds {
    /// `(R_x e₃)ᵀ R e₃ ≥ 1 − Ψ(R, R_x) > 0`
    pub cos_lb_ok: bool,
    /// `‖((R_x e₃)ᵀ R e₃) R e₃ − R_x e₃‖ ≤ ‖e_R‖`
    pub sine_le_e_r: bool,
}

pub fn prop_a_bounds(r: &Mat3, r_x: &Mat3) -> Result<PropABounds, GeometryError> {
    prop_a_bounds_tol(r, r_x, 0.0)
}

pub fn prop_a_bounds_tol(r: &Mat3, r_x: &Mat3, tol: f64) -> Result<PropABounds, GeometryError> {
    let psi = so3::psi_error(r, r_x);
    if !(psi < 1.0) {
        return Err(GeometryError::DomainViolation { psi, cap: 1.0 });
    }
    let b3 = r * Vec3::z();
    let c3 = r_x * Vec3::z();
    let cos = c3.dot(&b3);
    let e_r = so3::attitude_error_vector(r, r_x);
    Ok(PropABounds {
        cos_lb_ok: cos + tol >= 1.0 - psi && 1.0 - psi > 0.0,
        sine_le_e_r: (cos * b3 - c3).norm() <= e_r.norm() + tol,
    })
}
