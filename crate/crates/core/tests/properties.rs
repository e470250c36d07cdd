use approx::assert_relative_eq;
use geoquad::allocation::{self, AllocationConfig};
use geoquad::dynamics::QuadParams;
use geoquad::so3::{self, Vec3};
use nalgebra::Vector4;
use proptest::prelude::*;

fn axis() -> impl Strategy<Value = Vec3> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
        .prop_filter("non-degenerate axis", |(x, y, z)| x * x + y * y + z * z > 1e-4)
        .prop_map(|(x, y, z)| Vec3::new(x, y, z).normalize())
}

fn rotation() -> impl Strategy<Value = so3::Mat3> {
    (axis(), 0.0..std::f64::consts::PI).prop_map(|(a, th)| so3::axis_angle(&a, th))
}

proptest! {
    #[test]
    fn hat_vee_round_trip(x in -10.0..10.0f64, y in -10.0..10.0f64, z in -10.0..10.0f64) {
        let v = Vec3::new(x, y, z);
        let back = so3::vee(&so3::hat(&v)).unwrap();
        prop_assert!((back - v).norm() <= 1e-14);
    }

    #[test]
    fn exp_map_is_a_rotation(a in axis(), th in -10.0..10.0f64) {
        prop_assert!(so3::is_rotation(&so3::exp_map(&(a * th)), 1e-12));
    }

    #[test]
    fn psi_is_symmetric_and_bounded(r in rotation(), rd in rotation()) {
        let psi = so3::psi_error(&r, &rd);
        prop_assert!((-1e-12..=2.0 + 1e-12).contains(&psi));
        prop_assert!((psi - so3::psi_error(&rd, &r)).abs() <= 1e-12);
    }

    #[test]
    fn error_vector_norm_matches_psi(r in rotation(), rd in rotation()) {
        let psi = so3::psi_error(&r, &rd);
        let e2 = so3::attitude_error_vector(&r, &rd).norm_squared();
        prop_assert!((e2 - psi * (2.0 - psi)).abs() <= 1e-12);
    }

    #[test]
    fn null_space_projector_is_idempotent(x in prop::array::uniform4(-50.0..50.0f64)) {
        let p = QuadParams::reference();
        let n = allocation::null_space_projector(&p);
        let xi = Vector4::from(x);
        prop_assert!((n * n * xi - n * xi).norm() <= 1e-10 * xi.norm().max(1.0));
        prop_assert!((allocation::moment_matrix(&p) * n * xi).norm() <= 1e-10 * xi.norm().max(1.0));
    }

    #[test]
    fn barrier_gradient_matches_finite_difference(x in prop::array::uniform4(0.5..19.5f64)) {
        let cfg = AllocationConfig::for_vehicle(&QuadParams::reference());
        let f = Vector4::from(x);
        let g = allocation::barrier_gradient(&f, &cfg).unwrap();
        for i in 0..4 {
            let h = 1e-6 * f[i].max(1.0);
            let (mut fp, mut fm) = (f, f);
            fp[i] += h;
            fm[i] -= h;
            let fd = (allocation::barrier_cost(&fp, &cfg).unwrap() - allocation::barrier_cost(&fm, &cfg).unwrap()) / (2.0 * h);
            prop_assert!((fd - g[i]).abs() <= 1e-6 * g.norm().max(1.0));
        }
    }

    #[test]
    fn mixer_round_trip(f in 0.0..40.0f64, u in prop::array::uniform3(-5.0..5.0f64)) {
        let p = QuadParams::reference();
        let u = Vec3::from(u);
        let thrusts = allocation::position_mode_thrusts(f, &u, &p);
        let (f2, u2) = allocation::thrust_and_moment(&thrusts, &p);
        prop_assert!((f2 - f).abs() <= 1e-10);
        prop_assert!((u2 - u).norm() <= 1e-10);
    }
}

#[test]
fn pseudoinverse_is_a_right_inverse() {
    let p = QuadParams::reference();
    let a = allocation::moment_matrix(&p);
    let a_pinv = allocation::moment_pseudoinverse(&p);
    let id = a * a_pinv;
    for i in 0..3 {
        for j in 0..3 {
            assert_relative_eq!(id[(i, j)], if i == j { 1.0 } else { 0.0 }, epsilon = 1e-12);
        }
    }
}
