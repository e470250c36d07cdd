//! Surface-based attitude and position controllers and the benchmark
//! geometric tracking controller used for comparison.

mod attitude;
mod benchmark;
mod position;

pub use attitude::{attitude_control, attitude_surface, AttitudeControl};
pub use benchmark::{benchmark_attitude, benchmark_control, BenchmarkControl};
pub use position::{
    position_control, position_control_with, position_induced_attitude, ForceLaw, InducedAttitude, PositionControl,
    PositionErrorState, RateEstimator, RateScheme, DEFAULT_EPS_DEN, DEFAULT_EPS_PAR,
};

use serde::{Deserialize, Serialize};

use crate::error::ControlError;
use crate::so3::{Mat3, Vec3};

/// Gains of the proposed controllers and of the secondary thrust task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainSet {
    pub eta: f64,
    pub k_r: f64,
    pub k_omega: f64,
    pub a: f64,
    pub k_x: f64,
    pub k_v: f64,
    /// Position-surface gain of the null-space thrust task.
    pub k_xi: f64,
    /// Per-axis weights of the null-space thrust task.
    pub iota: [f64; 3],
}

impl GainSet {
    /// Gains used for the flip and step scenarios.
    pub fn reference() -> Self {
        Self {
            eta: 0.809261,
            k_r: 5625.0,
            k_omega: 150.0,
            a: 0.5540514,
            k_x: 900.0,
            k_v: 60.0,
            k_xi: 0.0028,
            iota: [1.0, 1.0, 2.3],
        }
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        let named = [
            ("eta", self.eta),
            ("k_r", self.k_r),
            ("k_omega", self.k_omega),
            ("a", self.a),
            ("k_x", self.k_x),
            ("k_v", self.k_v),
            ("k_xi", self.k_xi),
            ("iota[0]", self.iota[0]),
            ("iota[1]", self.iota[1]),
            ("iota[2]", self.iota[2]),
        ];
        for (name, v) in named {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ControlError::InvalidGains(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn iota_matrix(&self) -> Mat3 {
        Mat3::from_diagonal(&Vec3::from(self.iota))
    }
}

/// Diagonal matrix gains of the benchmark tracking controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkGains {
    pub k_r: [f64; 3],
    pub k_omega: [f64; 3],
    pub k_x: f64,
    pub k_v: f64,
}

impl BenchmarkGains {
    pub fn reference() -> Self {
        Self {
            k_r: [259.2, 264.24, 531.72],
            k_omega: [8.64, 8.808, 17.724],
            k_x: 501.977,
            k_v: 51.871,
        }
    }

    /// Time-scales the attitude loop: `k_R → s² k_R`, `k_ω → s k_ω`. This
    /// keeps the damping ratio while changing the bandwidth by `s`.
    pub fn scaled_attitude(&self, s: f64) -> Self {
        Self {
            k_r: self.k_r.map(|k| k * s * s),
            k_omega: self.k_omega.map(|k| k * s),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        let scalars = [self.k_x, self.k_v];
        for &v in self.k_r.iter().chain(self.k_omega.iter()).chain(scalars.iter()) {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ControlError::InvalidGains(format!(
                    "benchmark gains must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn k_r_matrix(&self) -> Mat3 {
        Mat3::from_diagonal(&Vec3::from(self.k_r))
    }

    pub fn k_omega_matrix(&self) -> Mat3 {
        Mat3::from_diagonal(&Vec3::from(self.k_omega))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_gains_are_valid() {
        GainSet::reference().validate().unwrap();
        BenchmarkGains::reference().validate().unwrap();
    }

    #[test]
    fn non_positive_gain_rejected() {
        let mut g = GainSet::reference();
        g.k_v = 0.0;
        assert!(matches!(g.validate(), Err(ControlError::InvalidGains(_))));
        let mut b = BenchmarkGains::reference();
        b.k_r[1] = -1.0;
        assert!(b.validate().is_err());
    }

    #[test]
    fn attitude_scaling() {
        let b = BenchmarkGains::reference().scaled_attitude(2.0);
        assert_eq!(b.k_r[0], 4.0 * 259.2);
        assert_eq!(b.k_omega[2], 2.0 * 17.724);
        assert_eq!(b.k_x, 501.977);
    }
}
