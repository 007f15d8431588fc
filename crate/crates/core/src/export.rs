//! Text output shared by the library and the CLI.
//!
//! Floats are written with 12 significant digits in scientific notation so
//! identical inputs give byte-identical files.

use std::io::{self, Write};

use crate::analytic::coherence;
use crate::lgti::ViolationReport;
use crate::oracle::Trajectory;

pub fn format_float(x: f64) -> String {
    format!("{x:.11e}")
}

pub const TRAJECTORY_COLUMNS: [&str; 11] = [
    "t",
    "re_rho_ee",
    "im_rho_ee",
    "re_rho_eg",
    "im_rho_eg",
    "re_rho_ge",
    "im_rho_ge",
    "re_rho_gg",
    "im_rho_gg",
    "p_g",
    "coherence",
];

/// Oracle trajectory as CSV, one row per sample.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, mut out: W) -> io::Result<()> {
    writeln!(out, "{}", TRAJECTORY_COLUMNS.join(","))?;
    for (t, rho) in &traj.samples {
        let m = rho.matrix();
        let c = coherence(rho).unwrap_or(f64::NAN);
        let fields = [
            *t,
            m[(0, 0)].re,
            m[(0, 0)].im,
            m[(0, 1)].re,
            m[(0, 1)].im,
            m[(1, 0)].re,
            m[(1, 0)].im,
            m[(1, 1)].re,
            m[(1, 1)].im,
            rho.ground_probability(),
            c,
        ];
        let row: Vec<String> = fields.iter().map(|&v| format_float(v)).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn report_to_json(report: &ViolationReport) -> serde_json::Value {
    serde_json::to_value(report).expect("report fields are plain data")
}
