#![allow(dead_code)]

use geoquad::so3::{self, Mat3, Vec3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Unit vector uniform on the sphere.
pub fn random_axis(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Rotation with axis uniform on the sphere and angle uniform in `[0, max_angle)`.
pub fn random_rotation(rng: &mut ChaCha8Rng, max_angle: f64) -> Mat3 {
    let axis = random_axis(rng);
    so3::axis_angle(&axis, rng.random_range(0.0..max_angle))
}

/// Vector with uniform direction and norm uniform in `[0, max_norm)`.
pub fn random_vector(rng: &mut ChaCha8Rng, max_norm: f64) -> Vec3 {
    random_axis(rng) * rng.random_range(0.0..max_norm)
}
