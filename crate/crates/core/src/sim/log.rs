//! Per-step run log and its CSV form.

use std::io::Write;
use std::path::Path;

use nalgebra::Vector4;

use crate::error::SimError;
use crate::so3::{Mat3, Vec3};
use crate::trajectory::FlightMode;

/// CSV header, in column order.
pub const CSV_HEADER: [&str; 39] = [
    "t",
    "x1",
    "x2",
    "x3",
    "v1",
    "v2",
    "v3",
    "r11",
    "r12",
    "r13",
    "r21",
    "r22",
    "r23",
    "r31",
    "r32",
    "r33",
    "omega1",
    "omega2",
    "omega3",
    "f",
    "u1",
    "u2",
    "u3",
    "f1",
    "f2",
    "f3",
    "f4",
    "psi",
    "e_r",
    "e_omega",
    "e_x",
    "e_v",
    "v_att",
    "v_psi",
    "v_x",
    "v_g",
    "mode",
    "phase",
    "saturated",
];

/// One integration step: the state at `t` and the control applied over
/// `[t, t + dt)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRow {
    pub t: f64,
    pub x: Vec3,
    pub v: Vec3,
    pub r: Mat3,
    pub omega: Vec3,
    pub f: f64,
    pub u: Vec3,
    pub thrusts: Vector4<f64>,
    pub psi: f64,
    pub e_r: f64,
    pub e_omega: f64,
    pub e_x: f64,
    pub e_v: f64,
    pub v_att: f64,
    pub v_psi: f64,
    pub v_x: f64,
    pub v_g: f64,
    pub mode: FlightMode,
    pub phase: usize,
    pub saturated: bool,
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

impl LogRow {
    pub fn state(&self) -> crate::dynamics::RigidBodyState {
        crate::dynamics::RigidBodyState {
            x: self.x,
            v: self.v,
            r: self.r,
            omega: self.omega,
        }
    }

    fn record(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(CSV_HEADER.len());
        out.push(fmt(self.t));
        out.extend(self.x.iter().chain(self.v.iter()).map(|&c| fmt(c)));
        for i in 0..3 {
            for j in 0..3 {
                out.push(fmt(self.r[(i, j)]));
            }
        }
        out.extend(self.omega.iter().map(|&c| fmt(c)));
        out.push(fmt(self.f));
        out.extend(self.u.iter().chain(self.thrusts.iter()).map(|&c| fmt(c)));
        for c in [
            self.psi,
            self.e_r,
            self.e_omega,
            self.e_x,
            self.e_v,
            self.v_att,
            self.v_psi,
            self.v_x,
            self.v_g,
        ] {
            out.push(fmt(c));
        }
        out.push(self.mode.as_str().to_string());
        out.push(self.phase.to_string());
        out.push(u8::from(self.saturated).to_string());
        out
    }
}

/// Closed-loop rollout, one row per integration step including `t_final`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunLog {
    pub dt: f64,
    pub rows: Vec<LogRow>,
    /// Steps at which the attitude error was outside `Ψ < 2`.
    pub outside_l2_steps: usize,
}

impl RunLog {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), SimError> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(CSV_HEADER)?;
        for row in &self.rows {
            wtr.write_record(row.record())?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<(), SimError> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn to_csv_string(&self) -> Result<String, SimError> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("CSV output is UTF-8"))
    }

    /// Rows belonging to schedule phase `index`.
    pub fn phase_rows(&self, index: usize) -> impl Iterator<Item = &LogRow> {
        self.rows.iter().filter(move |r| r.phase == index)
    }

    pub fn saturation_count(&self) -> usize {
        self.rows.iter().filter(|r| r.saturated).count()
    }
}
