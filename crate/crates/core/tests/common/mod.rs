#![allow(dead_code)]

use qubit_lgti::{SystemParams, Temperature};

pub const OMEGA0: f64 = 0.5;
pub const GRID_T_MAX: f64 = 20.0;
pub const GRID_SAMPLES: usize = 50;

/// Largest relaxation rate (in units of Ω) kept in the equivalence grid.
/// Beyond it the explicit oracle needs more than ~10⁶ stability-limited steps
/// per trajectory.
pub const MAX_GRID_RATE: f64 = 2e5;

const RATIOS: [f64; 6] = [1e-3, 1e-2, 0.05, 0.5, 5.0, 10.0];
const TEMPERATURES: [Temperature; 6] = [
    Temperature::Beta(1e-3),
    Temperature::Beta(0.1),
    Temperature::Beta(1.0),
    Temperature::Beta(10.0),
    Temperature::Beta(100.0),
    Temperature::Zero,
];
const SQUEEZING: [f64; 5] = [0.0, 0.5, 1.0, 2.0, 3.5];

fn fastest_rate(p: &SystemParams) -> f64 {
    let n_th = p.thermal_occupation().unwrap();
    let scale = p.gamma0 * (2.0 * n_th + 1.0);
    let s2 = 2.0 * p.squeeze_s;
    scale * s2.cosh().max(0.5 * (s2.cosh() + s2.sinh()))
}

/// Factorial grid over R, β (plus zero temperature) and s at Ω = 1, minus the
/// stiffest corner.
pub fn parameter_grid() -> Vec<SystemParams> {
    let mut grid = Vec::new();
    for &r in &RATIOS {
        for &t in &TEMPERATURES {
            for &s in &SQUEEZING {
                let p = SystemParams::from_ratio(OMEGA0, 1.0, r, t, s).unwrap();
                if fastest_rate(&p) <= MAX_GRID_RATE {
                    grid.push(p);
                }
            }
        }
    }
    grid
}

pub fn time_grid() -> Vec<f64> {
    (0..GRID_SAMPLES)
        .map(|i| GRID_T_MAX * i as f64 / (GRID_SAMPLES - 1) as f64)
        .collect()
}

pub fn preset(ratio_r: f64, temperature: Temperature, s: f64) -> SystemParams {
    SystemParams::from_ratio(OMEGA0, 1.0, ratio_r, temperature, s).unwrap()
}

/// Default scan window and resolution: t ∈ [0, 25/Ω], 2001 samples.
pub const SCAN_RANGE: (f64, f64) = (0.0, 25.0);
pub const SCAN_SAMPLES: usize = 2001;
