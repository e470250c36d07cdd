use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("matrix is not skew-symmetric (|M + Mᵀ| = {0:e})")]
    NonSkew(f64),
    #[error("attitude error {psi} is outside the admissible domain (cap {cap})")]
    DomainViolation { psi: f64, cap: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("inertia matrix is not invertible")]
    SingularInertia,
    #[error("invalid vehicle parameters: {0}")]
    InvalidParams(String),
    #[error("state diverged (|component| = {magnitude:e})")]
    NumericalBlowup { magnitude: f64 },
    #[error("time step must be positive, got {0}")]
    InvalidStep(f64),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("required thrust vector is degenerate (|U| = {0:e} N)")]
    DegenerateThrustDirection(f64),
    #[error("desired heading is parallel to the thrust direction (angle {0:e} rad)")]
    HeadingParallel(f64),
    #[error("invalid gains: {0}")]
    InvalidGains(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AllocationError {
    #[error("rotor {index} thrust {thrust} N is outside the barrier domain ({f_min}, {f_max})")]
    OutOfBarrierDomain {
        index: usize,
        thrust: f64,
        f_min: f64,
        f_max: f64,
    },
    #[error("invalid allocation config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertificateError {
    #[error("psi cap must lie in (0, 2), got {0}")]
    InvalidPsiCap(f64),
    #[error("basin variant {0:?} requires an initial error bound")]
    InvalidVariant(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Control(#[from] ControlError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrajectoryError {
    #[error("segment end time {t1} must exceed start time {t0}")]
    InvalidInterval { t0: f64, t1: f64 },
    #[error("boundary-condition system is ill-conditioned (cond = {0:e})")]
    IllConditioned(f64),
    #[error("schedule phases are not contiguous at t = {0}")]
    NonContiguous(f64),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
}

/// Top-level error for scenario runs.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical blowup at t = {t} s: {source}")]
    Blowup { t: f64, source: DynamicsError },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("control failure at t = {t} s: {source}")]
    Control { t: f64, source: ControlError },
    #[error(transparent)]
    Allocation(#[from] AllocationError),
    #[error(transparent)]
    Certificate(#[from] CertificateError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl SimError {
    /// Process exit code used by the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Blowup { .. } => 3,
            SimError::Dynamics(DynamicsError::NumericalBlowup { .. }) => 3,
            SimError::Config(_)
            | SimError::Dynamics(_)
            | SimError::Certificate(_)
            | SimError::Trajectory(_)
            | SimError::Allocation(AllocationError::InvalidConfig(_)) => 2,
            _ => 1,
        }
    }
}
