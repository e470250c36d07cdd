//! Eighth-degree polynomial references, the pitch-flip attitude command and
//! multi-phase flight schedules.
//!
//! A degree-8 polynomial has nine coefficients. Position, velocity,
//! acceleration and jerk are imposed at both ends (eight conditions) and the
//! remaining freedom is fixed by the snap at the start (zero for rest starts).

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::RigidBodyState;
use crate::error::TrajectoryError;
use crate::reference::{AttitudeCommand, AttitudeTarget, PositionCommand, PositionTarget};
use crate::so3::{self, Mat3, Vec3};

const DEGREE: usize = 8;
const N_COEFFS: usize = DEGREE + 1;
const MAX_CONDITION: f64 = 1e12;

type Square9 = SMatrix<f64, N_COEFFS, N_COEFFS>;

fn falling_factorial(n: usize, k: usize) -> f64 {
    (0..k).map(|i| (n - i) as f64).product()
}

/// Boundary data for a single axis: `(x, ẋ, ẍ, x⃛, x⃜)` at the start and
/// `(x, ẋ, ẍ, x⃛)` at the end.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AxisBoundary {
    pub start: [f64; 5],
    pub end: [f64; 4],
}

impl AxisBoundary {
    pub fn rest_to_rest(from: f64, to: f64) -> Self {
        Self {
            start: [from, 0.0, 0.0, 0.0, 0.0],
            end: [to, 0.0, 0.0, 0.0],
        }
    }
}

/// Scalar degree-8 polynomial over `[0, duration]`, stored in normalised
/// time `τ = s / duration`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Poly8 {
    coeffs: [f64; N_COEFFS],
    duration: f64,
}

fn boundary_matrix(duration: f64) -> Square9 {
    let mut a = Square9::zeros();
    // start: derivatives 0..=4 at s = 0
    for k in 0..5 {
        a[(k, k)] = falling_factorial(k, k);
    }
    // end: derivatives 0..=3 at s = duration
    for k in 0..4 {
        for n in k..N_COEFFS {
            a[(5 + k, n)] = falling_factorial(n, k) * duration.powi((n - k) as i32);
        }
    }
    a
}

fn condition_number(a: &Square9) -> f64 {
    let sv = a.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

impl Poly8 {
    /// Fits the boundary data over `[0, duration]`.
    pub fn fit(boundary: &AxisBoundary, duration: f64) -> Result<Self, TrajectoryError> {
        if !(duration > 0.0) {
            return Err(TrajectoryError::InvalidInterval { t0: 0.0, t1: duration });
        }
        let cond = condition_number(&boundary_matrix(duration));
        if !(cond <= MAX_CONDITION) {
            return Err(TrajectoryError::IllConditioned(cond));
        }
        // Solve in normalised time; derivative k scales by duration^k.
        let a = boundary_matrix(1.0);
        let mut rhs = SVector::<f64, N_COEFFS>::zeros();
        for k in 0..5 {
            rhs[k] = boundary.start[k] * duration.powi(k as i32);
        }
        for k in 0..4 {
            rhs[5 + k] = boundary.end[k] * duration.powi(k as i32);
        }
        let sol = a
            .lu()
            .solve(&rhs)
            .ok_or(TrajectoryError::IllConditioned(f64::INFINITY))?;
        let mut coeffs = [0.0; N_COEFFS];
        coeffs.copy_from_slice(sol.as_slice());
        Ok(Self { coeffs, duration })
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// Value and derivatives 1..=4 at elapsed time `s`, evaluated exactly from
    /// the coefficients. `s` is clamped to `[0, duration]`.
    pub fn eval(&self, s: f64) -> [f64; 5] {
        let tau = (s / self.duration).clamp(0.0, 1.0);
        let mut out = [0.0; 5];
        for (k, slot) in out.iter_mut().enumerate() {
            // Horner on the k-th derivative
            let mut acc = 0.0;
            for n in (k..N_COEFFS).rev() {
                acc = acc * tau + self.coeffs[n] * falling_factorial(n, k);
            }
            *slot = acc / self.duration.powi(k as i32);
        }
        out
    }
}

/// Three-axis polynomial segment on `[t_start, t_end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolynomialSegment {
    pub axes: [Poly8; 3],
    pub t_start: f64,
    pub t_end: f64,
}

/// Boundary data for all three axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Boundary3 {
    /// `[x, ẋ, ẍ, x⃛, x⃜]` at the start.
    pub start: [Vec3; 5],
    /// `[x, ẋ, ẍ, x⃛]` at the end.
    pub end: [Vec3; 4],
}

impl Boundary3 {
    pub fn rest_to_rest(from: Vec3, to: Vec3) -> Self {
        let z = Vec3::zeros();
        Self {
            start: [from, z, z, z, z],
            end: [to, z, z, z],
        }
    }

    /// Starts from the measured position and velocity with zero higher
    /// derivatives, ends at rest at `to`.
    pub fn from_state(x: Vec3, v: Vec3, to: Vec3) -> Self {
        let z = Vec3::zeros();
        Self {
            start: [x, v, z, z, z],
            end: [to, z, z, z],
        }
    }

    fn axis(&self, i: usize) -> AxisBoundary {
        let mut b = AxisBoundary::default();
        for k in 0..5 {
            b.start[k] = self.start[k][i];
        }
        for k in 0..4 {
            b.end[k] = self.end[k][i];
        }
        b
    }
}

/// Fits one degree-8 polynomial per axis to `boundary` over `[t0, t1]`.
pub fn fit_segment(boundary: &Boundary3, t0: f64, t1: f64) -> Result<PolynomialSegment, TrajectoryError> {
    if !(t1 > t0) {
        return Err(TrajectoryError::InvalidInterval { t0, t1 });
    }
    let d = t1 - t0;
    Ok(PolynomialSegment {
        axes: [
            Poly8::fit(&boundary.axis(0), d)?,
            Poly8::fit(&boundary.axis(1), d)?,
            Poly8::fit(&boundary.axis(2), d)?,
        ],
        t_start: t0,
        t_end: t1,
    })
}

impl PolynomialSegment {
    /// `[x, ẋ, ẍ, x⃛, x⃜]` at time `t`. Outside the segment the endpoint
    /// position is held with zero derivatives.
    pub fn eval(&self, t: f64) -> [Vec3; 5] {
        let outside = t < self.t_start || t > self.t_end;
        let mut out = [Vec3::zeros(); 5];
        for (i, axis) in self.axes.iter().enumerate() {
            let d = axis.eval(t - self.t_start);
            for k in 0..5 {
                out[k][i] = if outside && k > 0 { 0.0 } else { d[k] };
            }
        }
        out
    }
}

/// Position reference made of a hold point followed by an optional segment,
/// with a constant heading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionTrajectory {
    pub hold: Vec3,
    pub segment: Option<PolynomialSegment>,
    pub heading: Vec3,
}

impl PositionCommand for PositionTrajectory {
    fn at(&self, t: f64) -> PositionTarget {
        let mut target = PositionTarget::hold_with_heading(self.hold, self.heading);
        if let Some(seg) = &self.segment {
            if t >= seg.t_start {
                let [x, v, a, j, s] = seg.eval(t);
                target.x = x;
                target.v = v;
                target.a = a;
                target.jerk = j;
                target.snap = s;
            }
        }
        target
    }
}

/// Rotation about a fixed body axis following a rest-to-rest degree-8
/// angle profile: `R_d = R_0 exp(hat(n) φ(t))`, `ω_d = φ̇ n`, `ω̇_d = φ̈ n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlipCommand {
    pub base: Mat3,
    pub axis: Vec3,
    pub profile: Poly8,
    pub t0: f64,
    pub t1: f64,
}

/// Builds a rest-to-rest rotation of `total_angle` about `axis` on `[t0, t1]`.
pub fn flip_command(axis: &Vec3, total_angle: f64, t0: f64, t1: f64) -> Result<FlipCommand, TrajectoryError> {
    flip_command_from(Mat3::identity(), axis, total_angle, t0, t1)
}

pub fn flip_command_from(
    base: Mat3,
    axis: &Vec3,
    total_angle: f64,
    t0: f64,
    t1: f64,
) -> Result<FlipCommand, TrajectoryError> {
    if !(t1 > t0) {
        return Err(TrajectoryError::InvalidInterval { t0, t1 });
    }
    let profile = Poly8::fit(&AxisBoundary::rest_to_rest(0.0, total_angle), t1 - t0)?;
    Ok(FlipCommand {
        base,
        axis: axis.normalize(),
        profile,
        t0,
        t1,
    })
}

impl FlipCommand {
    /// Pitch angle and its first two derivatives.
    pub fn angle(&self, t: f64) -> (f64, f64, f64) {
        let d = self.profile.eval(t - self.t0);
        if t < self.t0 || t > self.t1 {
            (d[0], 0.0, 0.0)
        } else {
            (d[0], d[1], d[2])
        }
    }
}

impl AttitudeCommand for FlipCommand {
    fn at(&self, t: f64) -> AttitudeTarget {
        let (phi, rate, accel) = self.angle(t);
        AttitudeTarget {
            r: self.base * so3::exp_map(&(self.axis * phi)),
            omega: self.axis * rate,
            omega_dot: self.axis * accel,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlightMode {
    Attitude,
    Position,
}

/// What a schedule phase commands. Plans are realised into concrete
/// references when the phase is entered, so they may depend on the vehicle
/// state at that moment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhasePlan {
    /// Hold a position (the entry position when `position` is absent).
    Hold {
        #[serde(default)]
        position: Option<[f64; 3]>,
        #[serde(default = "default_heading")]
        heading: [f64; 3],
    },
    /// Move from the entry state to `to` on `[move_start, move_end]`.
    Translate {
        to: [f64; 3],
        move_start: f64,
        move_end: f64,
        #[serde(default = "default_heading")]
        heading: [f64; 3],
    },
    /// Rotate by `angle` about body `axis` over the whole phase while the
    /// secondary position task holds `hold` (entry position when absent).
    Flip {
        axis: [f64; 3],
        angle: f64,
        #[serde(default)]
        hold: Option<[f64; 3]>,
    },
    /// Step attitude command `R_d = R_entry · rot(axis, angle)`.
    AttitudeStep {
        axis: [f64; 3],
        angle: f64,
        #[serde(default)]
        hold: Option<[f64; 3]>,
    },
}

fn default_heading() -> [f64; 3] {
    [1.0, 0.0, 0.0]
}

fn v3(a: &[f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

impl FlightMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            FlightMode::Attitude => "attitude",
            FlightMode::Position => "position",
        }
    }
}

impl PhasePlan {
    pub fn mode(&self) -> FlightMode {
        match self {
            PhasePlan::Hold { .. } | PhasePlan::Translate { .. } => FlightMode::Position,
            PhasePlan::Flip { .. } | PhasePlan::AttitudeStep { .. } => FlightMode::Attitude,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub t_start: f64,
    pub t_end: f64,
    #[serde(flatten)]
    pub plan: PhasePlan,
}

/// Attitude references a phase can produce.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttitudeReference {
    Fixed(AttitudeTarget),
    Flip(FlipCommand),
}

impl AttitudeCommand for AttitudeReference {
    fn at(&self, t: f64) -> AttitudeTarget {
        match self {
            AttitudeReference::Fixed(a) => *a,
            AttitudeReference::Flip(f) => f.at(t),
        }
    }
}

/// A phase plan realised against the entry state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActiveCommand {
    Position(PositionTrajectory),
    Attitude {
        attitude: AttitudeReference,
        /// Position reference for the secondary thrust task.
        hold: PositionTrajectory,
    },
}

impl ActiveCommand {
    pub fn mode(&self) -> FlightMode {
        match self {
            ActiveCommand::Position(_) => FlightMode::Position,
            ActiveCommand::Attitude { .. } => FlightMode::Attitude,
        }
    }

    /// Position reference in force (the hold target in attitude mode).
    pub fn position(&self) -> &PositionTrajectory {
        match self {
            ActiveCommand::Position(p) => p,
            ActiveCommand::Attitude { hold, .. } => hold,
        }
    }
}

impl Phase {
    /// Builds the references for this phase from the state at entry.
    pub fn realize(&self, entry: &RigidBodyState) -> Result<ActiveCommand, TrajectoryError> {
        let hold_at = |p: &Option<[f64; 3]>| p.as_ref().map(v3).unwrap_or(entry.x);
        match &self.plan {
            PhasePlan::Hold { position, heading } => Ok(ActiveCommand::Position(PositionTrajectory {
                hold: hold_at(position),
                segment: None,
                heading: v3(heading).normalize(),
            })),
            PhasePlan::Translate {
                to,
                move_start,
                move_end,
                heading,
            } => {
                let segment = fit_segment(&Boundary3::from_state(entry.x, entry.v, v3(to)), *move_start, *move_end)?;
                Ok(ActiveCommand::Position(PositionTrajectory {
                    hold: entry.x,
                    segment: Some(segment),
                    heading: v3(heading).normalize(),
                }))
            }
            PhasePlan::Flip { axis, angle, hold } => {
                let flip = flip_command_from(entry.r, &v3(axis), *angle, self.t_start, self.t_end)?;
                Ok(ActiveCommand::Attitude {
                    attitude: AttitudeReference::Flip(flip),
                    hold: PositionTrajectory {
                        hold: hold_at(hold),
                        segment: None,
                        heading: Vec3::x(),
                    },
                })
            }
            PhasePlan::AttitudeStep { axis, angle, hold } => Ok(ActiveCommand::Attitude {
                attitude: AttitudeReference::Fixed(AttitudeTarget::fixed(entry.r * so3::axis_angle(&v3(axis), *angle))),
                hold: PositionTrajectory {
                    hold: hold_at(hold),
                    segment: None,
                    heading: Vec3::x(),
                },
            }),
        }
    }
}

/// Ordered, contiguous sequence of flight phases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightSchedule {
    pub phases: Vec<Phase>,
}

impl FlightSchedule {
    pub fn validate(&self) -> Result<(), TrajectoryError> {
        if self.phases.is_empty() {
            return Err(TrajectoryError::InvalidSchedule("no phases".into()));
        }
        for p in &self.phases {
            if !(p.t_end > p.t_start) {
                return Err(TrajectoryError::InvalidInterval {
                    t0: p.t_start,
                    t1: p.t_end,
                });
            }
            if let PhasePlan::Translate {
                move_start, move_end, ..
            } = &p.plan
            {
                if !(*move_start >= p.t_start && move_end > move_start && *move_end <= p.t_end) {
                    return Err(TrajectoryError::InvalidSchedule(format!(
                        "translation window [{move_start}, {move_end}] must lie inside its phase [{}, {}]",
                        p.t_start, p.t_end
                    )));
                }
            }
        }
        for w in self.phases.windows(2) {
            if w[0].t_end != w[1].t_start {
                return Err(TrajectoryError::NonContiguous(w[0].t_end));
            }
        }
        Ok(())
    }

    pub fn t_start(&self) -> f64 {
        self.phases.first().map_or(0.0, |p| p.t_start)
    }

    pub fn t_end(&self) -> f64 {
        self.phases.last().map_or(0.0, |p| p.t_end)
    }

    /// Index of the phase active at `t`; phases are half-open except the last.
    pub fn phase_index(&self, t: f64) -> Option<usize> {
        let last = self.phases.len().checked_sub(1)?;
        self.phases
            .iter()
            .position(|p| t >= p.t_start && t < p.t_end)
            .or_else(|| (t >= self.phases[last].t_start && t <= self.phases[last].t_end).then_some(last))
    }

    /// Switch times between consecutive phases.
    pub fn switch_times(&self) -> Vec<f64> {
        self.phases.iter().skip(1).map(|p| p.t_start).collect()
    }

    pub fn hover(duration: f64) -> Self {
        Self {
            phases: vec![Phase {
                t_start: 0.0,
                t_end: duration,
                plan: PhasePlan::Hold {
                    position: None,
                    heading: default_heading(),
                },
            }],
        }
    }

    /// 90° pitch step in attitude mode.
    pub fn step90(duration: f64) -> Self {
        Self {
            phases: vec![Phase {
                t_start: 0.0,
                t_end: duration,
                plan: PhasePlan::AttitudeStep {
                    axis: [0.0, 1.0, 0.0],
                    angle: std::f64::consts::FRAC_PI_2,
                    hold: None,
                },
            }],
        }
    }

    /// Position step to (1, 1, 1) cm.
    pub fn step_position_1cm(duration: f64) -> Self {
        Self {
            phases: vec![Phase {
                t_start: 0.0,
                t_end: duration,
                plan: PhasePlan::Hold {
                    position: Some([0.01, 0.01, 0.01]),
                    heading: default_heading(),
                },
            }],
        }
    }

    /// Translate to (2, 0, 5), flip 360° about e₂ on [6, 7), then re-fit from
    /// the post-flip state back to the waypoint on [7, 10].
    pub fn flip_full() -> Self {
        let goal = [2.0, 0.0, 5.0];
        Self {
            phases: vec![
                Phase {
                    t_start: 0.0,
                    t_end: 6.0,
                    plan: PhasePlan::Translate {
                        to: goal,
                        move_start: 0.5,
                        move_end: 5.5,
                        heading: default_heading(),
                    },
                },
                Phase {
                    t_start: 6.0,
                    t_end: 7.0,
                    plan: PhasePlan::Flip {
                        axis: [0.0, 1.0, 0.0],
                        angle: 2.0 * std::f64::consts::PI,
                        hold: Some(goal),
                    },
                },
                Phase {
                    t_start: 7.0,
                    t_end: 10.0,
                    plan: PhasePlan::Translate {
                        to: goal,
                        move_start: 7.0,
                        move_end: 10.0,
                        heading: default_heading(),
                    },
                },
            ],
        }
    }
}
