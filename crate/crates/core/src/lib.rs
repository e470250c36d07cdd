//! Geometric control of a quadrotor on SE(3): rotation-group primitives,
//! rigid-body dynamics, surface-based attitude and position controllers,
//! null-space thrust allocation with barrier constraints, numerical
//! stability certificates, reference generation and a scenario runner.

// `!(x > 0.0)`-style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod allocation;
pub mod controllers;
pub mod dynamics;
pub mod error;
pub mod reference;
pub mod roa;
pub mod sim;
pub mod so3;
pub mod trajectory;

pub use dynamics::{ControlOutput, QuadParams, RigidBodyState};
pub use error::{
    AllocationError, CertificateError, ControlError, DynamicsError, GeometryError, SimError, TrajectoryError,
};
