//! Rotor thrust distribution, moment-only allocation through the
//! pseudoinverse, and the null-space strategy that keeps rotor thrusts away
//! from their limits while a secondary thrust task is tracked.
//!
//! Rotor thrusts `F = (f₁, f₂, f₃, f₄)` map to total thrust and body moment
//! through
//!
//! ```text
//! ⎡ f  ⎤   ⎡  1    1    1    1  ⎤
//! ⎢ u₁ ⎥ = ⎢  0    d    0   −d  ⎥ F
//! ⎢ u₂ ⎥   ⎢ −d    0    d    0  ⎥
//! ⎣ u₃ ⎦   ⎣ −b_T  b_T −b_T  b_T⎦
//! ```

use std::f64::consts::PI;

use nalgebra::{Matrix3x4, Matrix4, Matrix4x3, Vector4};
use serde::{Deserialize, Serialize};

use crate::controllers::{GainSet, PositionErrorState};
use crate::dynamics::{QuadParams, RigidBodyState};
use crate::error::AllocationError;
use crate::reference::PositionTarget;
use crate::so3::Vec3;

/// Rotor thrust limits, idle set point and barrier gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationConfig {
    pub f_min: f64,
    pub f_idl: f64,
    pub f_max: f64,
    pub k_h1: f64,
    pub k_h2: f64,
    /// Magnitude used for gradient components outside the barrier domain
    /// and as a cap on all components (N/s).
    pub g_clamp: f64,
}

impl AllocationConfig {
    /// Limits `[0, 20]` N with the idle thrust at the hover share `m g / 4`.
    pub fn for_vehicle(p: &QuadParams) -> Self {
        Self {
            f_min: 0.0,
            f_idl: p.hover_rotor_thrust(),
            f_max: 20.0,
            k_h1: 2.0,
            k_h2: 3.0,
            g_clamp: 1e4,
        }
    }

    pub fn validate(&self) -> Result<(), AllocationError> {
        if !(0.0 <= self.f_min && self.f_min < self.f_idl && self.f_idl < self.f_max) {
            return Err(AllocationError::InvalidConfig(format!(
                "need 0 ≤ f_min < f_idl < f_max, got {} / {} / {}",
                self.f_min, self.f_idl, self.f_max
            )));
        }
        if !(self.k_h1 > 0.0 && self.k_h2 > 0.0 && self.g_clamp > 0.0) {
            return Err(AllocationError::InvalidConfig(
                "barrier gains and g_clamp must be positive".into(),
            ));
        }
        Ok(())
    }

    /// `true` if every rotor thrust lies in `[f_min, f_max]`.
    pub fn within_limits(&self, thrusts: &Vector4<f64>) -> bool {
        thrusts.iter().all(|&f| f >= self.f_min && f <= self.f_max)
    }
}

/// The 4×4 thrust-distribution matrix `M` and its inverse.
pub fn mixer_matrix(p: &QuadParams) -> (Matrix4<f64>, Matrix4<f64>) {
    let (d, b) = (p.arm_length, p.torque_coefficient);
    #[rustfmt::skip]
    let m = Matrix4::new(
        1.0, 1.0, 1.0, 1.0,
        0.0,   d, 0.0,  -d,
         -d, 0.0,   d, 0.0,
         -b,   b,  -b,   b,
    );
    // closed form; M is invertible for any d, b_T ≠ 0
    let (hd, hb) = (0.5 / d, 0.25 / b);
    #[rustfmt::skip]
    let m_inv = Matrix4::new(
        0.25, 0.0, -hd, -hb,
        0.25,  hd, 0.0,  hb,
        0.25, 0.0,  hd, -hb,
        0.25, -hd, 0.0,  hb,
    );
    (m, m_inv)
}

/// Moment rows `A` of the mixer (3×4).
pub fn moment_matrix(p: &QuadParams) -> Matrix3x4<f64> {
    mixer_matrix(p).0.fixed_rows::<3>(1).into_owned()
}

/// Right inverse `A# = Aᵀ (A Aᵀ)⁻¹`.
pub fn moment_pseudoinverse(p: &QuadParams) -> Matrix4x3<f64> {
    let a = moment_matrix(p);
    let gram = (a * a.transpose())
        .try_inverse()
        .expect("A has full row rank for d, b_T ≠ 0");
    a.transpose() * gram
}

/// Null-space projector `I − A# A`.
pub fn null_space_projector(p: &QuadParams) -> Matrix4<f64> {
    Matrix4::identity() - moment_pseudoinverse(p) * moment_matrix(p)
}

/// Rotor thrusts realising total thrust `f` and moment `u`: `F = M⁻¹ (f; u)`.
pub fn position_mode_thrusts(f: f64, u: &Vec3, p: &QuadParams) -> Vector4<f64> {
    mixer_matrix(p).1 * Vector4::new(f, u.x, u.y, u.z)
}

/// Total thrust and moment produced by rotor thrusts: `(f; u) = M F`.
pub fn thrust_and_moment(thrusts: &Vector4<f64>, p: &QuadParams) -> (f64, Vec3) {
    let w = mixer_matrix(p).0 * thrusts;
    (w[0], Vec3::new(w[1], w[2], w[3]))
}

fn lower_scale(cfg: &AllocationConfig) -> f64 {
    PI / (2.0 * (cfg.f_idl - cfg.f_min))
}

fn in_domain(f: f64, cfg: &AllocationConfig) -> bool {
    let a = f.abs();
    a > cfg.f_min && a < cfg.f_max
}

fn domain_error(index: usize, thrust: f64, cfg: &AllocationConfig) -> AllocationError {
    AllocationError::OutOfBarrierDomain {
        index,
        thrust,
        f_min: cfg.f_min,
        f_max: cfg.f_max,
    }
}

/// Barrier `h(f)`: `k_h1 tan²(π(|f| − f_idl) / (2(f_idl − f_min)))` for
/// `f_min < |f| ≤ f_idl`, and `(k_h2/2)(|f| − f_idl)² + (|f| − f_idl)²/(f_max − |f|)`
/// for `f_idl < |f| < f_max`. Zero at `f_idl`, unbounded at both limits.
pub fn barrier_value(f: f64, cfg: &AllocationConfig) -> Result<f64, AllocationError> {
    if !in_domain(f, cfg) {
        return Err(domain_error(0, f, cfg));
    }
    let a = f.abs();
    let e = a - cfg.f_idl;
    Ok(if a <= cfg.f_idl {
        cfg.k_h1 * (lower_scale(cfg) * e).tan().powi(2)
    } else {
        0.5 * cfg.k_h2 * e * e + e * e / (cfg.f_max - a)
    })
}

/// `H(F) = Σ h(f_i)`.
pub fn barrier_cost(thrusts: &Vector4<f64>, cfg: &AllocationConfig) -> Result<f64, AllocationError> {
    thrusts.iter().enumerate().try_fold(0.0, |acc, (i, &f)| {
        barrier_value(f, cfg)
            .map(|h| acc + h)
            .map_err(|_| domain_error(i, f, cfg))
    })
}

/// `dh/d|f|` on the interior.
fn barrier_slope(a: f64, cfg: &AllocationConfig) -> f64 {
    let e = a - cfg.f_idl;
    if a <= cfg.f_idl {
        let c = lower_scale(cfg);
        let x = c * e;
        let sec = 1.0 / x.cos();
        cfg.k_h1 * 2.0 * x.tan() * sec * sec * c
    } else {
        let den = cfg.f_max - a;
        cfg.k_h2 * e + (2.0 * e * den + e * e) / (den * den)
    }
}

/// Gradient `∇_F H`. Fails if any `|f_i|` is outside `(f_min, f_max)`.
pub fn barrier_gradient(thrusts: &Vector4<f64>, cfg: &AllocationConfig) -> Result<Vector4<f64>, AllocationError> {
    let mut g = Vector4::zeros();
    for (i, &f) in thrusts.iter().enumerate() {
        if !in_domain(f, cfg) {
            return Err(domain_error(i, f, cfg));
        }
        g[i] = barrier_slope(f.abs(), cfg) * f.signum();
    }
    Ok(g)
}

/// Gradient used by the allocator. A rotor at or below `f_min` (signed) gets
/// `−g_clamp`, at or above `f_max` gets `+g_clamp`; interior components are
/// clipped to `±g_clamp`.
pub fn clamped_barrier_gradient(thrusts: &Vector4<f64>, cfg: &AllocationConfig) -> Vector4<f64> {
    thrusts.map(|f| {
        if f.is_nan() {
            0.0
        } else if f <= cfg.f_min {
            -cfg.g_clamp
        } else if f >= cfg.f_max {
            cfg.g_clamp
        } else {
            barrier_slope(f, cfg).clamp(-cfg.g_clamp, cfg.g_clamp)
        }
    })
}

/// Desired total thrust of the secondary task:
/// `f_p = (diag(ι)(m g E₃ − m (k_x/k_v) e_v − k_ξ s_x + m ẍ_d))ᵀ R e₃`,
/// with `s_x` formed from the position gains.
pub fn secondary_thrust_fp(s: &RigidBodyState, target: &PositionTarget, gains: &GainSet, p: &QuadParams) -> f64 {
    let e = PositionErrorState::new(s, target, gains);
    let m = p.mass;
    let force = m * p.gravity * Vec3::z() - m * (gains.k_x / gains.k_v) * e.e_v - gains.k_xi * e.s_x + m * target.a;
    (gains.iota_matrix() * force).dot(&(s.r * Vec3::z()))
}

/// Running integral of the barrier descent direction.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AllocatorState {
    pub xi_accum: Vector4<f64>,
    /// Thrusts realised at the previous step (the gradient argument).
    pub previous: Option<Vector4<f64>>,
}

impl AllocatorState {
    /// Clears the integral; called on flight-mode entry.
    pub fn reset(&mut self) {
        *self = Self::default();
    }
}

/// Precomputed matrices for the null-space allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocator {
    pub cfg: AllocationConfig,
    a_pinv: Matrix4x3<f64>,
    null: Matrix4<f64>,
    m_inv: Matrix4<f64>,
}

impl Allocator {
    pub fn new(p: &QuadParams, cfg: AllocationConfig) -> Self {
        Self {
            cfg,
            a_pinv: moment_pseudoinverse(p),
            null: null_space_projector(p),
            m_inv: mixer_matrix(p).1,
        }
    }

    /// `F = A# u + (I − A# A) ξ` with `ξ = ξ_acc + M⁻¹ (f_p, 0, 0, 0)`.
    ///
    /// Before forming `ξ`, the accumulator descends the barrier:
    /// `ξ_acc ← ξ_acc − ∇H(F_prev) dt`.
    pub fn allocate(&self, u: &Vec3, f_p: f64, st: &mut AllocatorState, dt: f64) -> Vector4<f64> {
        if let Some(prev) = st.previous {
            st.xi_accum -= clamped_barrier_gradient(&prev, &self.cfg) * dt;
        }
        let xi = st.xi_accum + self.m_inv * Vector4::new(f_p, 0.0, 0.0, 0.0);
        let thrusts = self.a_pinv * u + self.null * xi;
        st.previous = Some(thrusts);
        thrusts
    }
}

/// One allocation step with the secondary thrust task computed from the
/// state; returns the rotor thrusts and the updated accumulator.
#[allow(clippy::too_many_arguments)]
pub fn allocate_with_constraints(
    u: &Vec3,
    s: &RigidBodyState,
    target: &PositionTarget,
    gains: &GainSet,
    p: &QuadParams,
    cfg: &AllocationConfig,
    st: AllocatorState,
    dt: f64,
) -> (Vector4<f64>, AllocatorState) {
    let mut st = st;
    let f_p = secondary_thrust_fp(s, target, gains, p);
    let thrusts = Allocator::new(p, cfg.clone()).allocate(u, f_p, &mut st, dt);
    (thrusts, st)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Matrix3;

    fn p() -> QuadParams {
        QuadParams::reference()
    }

    #[test]
    fn mixer_examples() {
        let p = p();
        let (m, m_inv) = mixer_matrix(&p);
        let w = m * Vector4::repeat(1.0);
        assert_eq!(w, Vector4::new(4.0, 0.0, 0.0, 0.0));
        let w = m * Vector4::new(0.0, 1.0, 0.0, 0.0);
        assert_eq!(w, Vector4::new(1.0, 0.3, 0.0, 9.001e-3));
        assert!((m * m_inv - Matrix4::identity()).norm() < 1e-12);
        assert!((m.try_inverse().unwrap() - m_inv).norm() < 1e-9);
    }

    #[test]
    fn pseudoinverse_examples() {
        let p = p();
        let a = moment_matrix(&p);
        let a_pinv = moment_pseudoinverse(&p);
        assert!((a * a_pinv - Matrix3::identity()).norm() < 1e-12);
        let u = Vec3::new(1.0, 2.0, 3.0);
        assert_relative_eq!(a * a_pinv * u, u, epsilon = 1e-12);
        let n = null_space_projector(&p);
        assert!((a * n).norm() < 1e-12);
        let sv = n.singular_values();
        assert_eq!(sv.iter().filter(|&&s| s > 1e-9).count(), 1);
    }

    #[test]
    fn position_mode_examples() {
        let p = p();
        assert_relative_eq!(
            position_mode_thrusts(4.0, &Vec3::zeros(), &p),
            Vector4::repeat(1.0),
            epsilon = 1e-15
        );
        let hover = position_mode_thrusts(p.mass * p.gravity, &Vec3::zeros(), &p);
        for f in hover.iter() {
            assert_relative_eq!(*f, 1.34 * 9.81 / 4.0, epsilon = 1e-12);
            assert_relative_eq!(*f, 3.2864, epsilon = 1e-4);
        }
        let u = Vec3::new(0.1, -0.2, 0.05);
        let (f, back) = thrust_and_moment(&position_mode_thrusts(12.0, &u, &p), &p);
        assert_relative_eq!(f, 12.0, epsilon = 1e-12);
        assert_relative_eq!(back, u, epsilon = 1e-12);
    }

    #[test]
    fn barrier_minimum_and_poles() {
        let cfg = AllocationConfig::for_vehicle(&p());
        let idle = Vector4::repeat(cfg.f_idl);
        assert_eq!(barrier_gradient(&idle, &cfg).unwrap(), Vector4::zeros());
        assert_eq!(barrier_value(cfg.f_idl, &cfg).unwrap(), 0.0);
        let near = |f: f64| barrier_gradient(&Vector4::new(f, cfg.f_idl, cfg.f_idl, cfg.f_idl), &cfg).unwrap()[0];
        assert!(near(cfg.f_max - 1e-3) > near(cfg.f_max - 1e-2));
        assert!(near(cfg.f_max - 1e-2) > 0.0);
        assert!(near(cfg.f_min + 1e-3) < near(cfg.f_min + 1e-2));
        assert!(barrier_value(cfg.f_max - 1e-6, &cfg).unwrap() > 1e6);
    }

    #[test]
    fn barrier_domain_errors() {
        let cfg = AllocationConfig::for_vehicle(&p());
        let bad = Vector4::new(1.0, 20.0, 1.0, 1.0);
        assert!(matches!(
            barrier_gradient(&bad, &cfg),
            Err(AllocationError::OutOfBarrierDomain { index: 1, .. })
        ));
        assert!(barrier_gradient(&Vector4::new(0.0, 1.0, 1.0, 1.0), &cfg).is_err());
    }

    #[test]
    fn clamp_rule() {
        let cfg = AllocationConfig::for_vehicle(&p());
        let g = clamped_barrier_gradient(&Vector4::new(-0.5, 0.0, 25.0, cfg.f_idl), &cfg);
        assert_eq!(g, Vector4::new(-cfg.g_clamp, -cfg.g_clamp, cfg.g_clamp, 0.0));
        let g = clamped_barrier_gradient(&Vector4::new(19.999999, 1.0, 5.0, 3.0), &cfg);
        assert_eq!(g[0], cfg.g_clamp);
        assert!(g.iter().all(|x| x.abs() <= cfg.g_clamp));
    }

    #[test]
    fn secondary_thrust_examples() {
        let p = p();
        let mut g = GainSet::reference();
        let s = RigidBodyState::default();
        let hold = PositionTarget::hold(Vec3::zeros());
        assert_relative_eq!(
            secondary_thrust_fp(&s, &hold, &g, &p),
            2.3 * p.mass * p.gravity,
            epsilon = 1e-12
        );
        g.iota = [1.0, 1.0, 1.0];
        assert_relative_eq!(
            secondary_thrust_fp(&s, &hold, &g, &p),
            p.mass * p.gravity,
            epsilon = 1e-12
        );
    }

    #[test]
    fn zero_xi_gives_minimum_norm_moment() {
        let p = p();
        let alloc = Allocator::new(&p, AllocationConfig::for_vehicle(&p));
        let u = Vec3::new(0.3, -0.1, 0.02);
        let mut st = AllocatorState::default();
        let f = alloc.allocate(&u, 0.0, &mut st, 1e-3);
        assert_relative_eq!(f, moment_pseudoinverse(&p) * u, epsilon = 1e-15);
        // second call accumulates the barrier descent but keeps the moment
        let f2 = alloc.allocate(&u, 5.0, &mut st, 1e-3);
        assert!((moment_matrix(&p) * f2 - u).norm() < 1e-10);
        assert!(st.xi_accum.norm() > 0.0);
        st.reset();
        assert_eq!(st, AllocatorState::default());
    }

    #[test]
    fn strategy_total_thrust_is_fp_at_first_step() {
        let p = p();
        let g = GainSet::reference();
        let cfg = AllocationConfig::for_vehicle(&p);
        let s = RigidBodyState::default();
        let (f, st) = allocate_with_constraints(
            &Vec3::zeros(),
            &s,
            &PositionTarget::hold(Vec3::zeros()),
            &g,
            &p,
            &cfg,
            AllocatorState::default(),
            1e-3,
        );
        assert_relative_eq!(
            f.sum(),
            secondary_thrust_fp(&s, &PositionTarget::hold(Vec3::zeros()), &g, &p),
            epsilon = 1e-12
        );
        assert_eq!(st.previous, Some(f));
    }
}
