//! Dormand–Prince 5(4) with adaptive step control.
//!
//! Steps are clipped so every requested output time is hit exactly, which
//! keeps sampled values at full integrator accuracy without interpolation.

use nalgebra::SVector;

/// Step-size control settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 50_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepFailure {
    /// Step size fell below the resolvable increment at `time`.
    Underflow {
        time: f64,
        step: f64,
    },
    TooManySteps {
        time: f64,
    },
    NonFinite {
        time: f64,
    },
}

impl StepFailure {
    pub fn last_good_time(&self) -> f64 {
        match *self {
            StepFailure::Underflow { time, .. }
            | StepFailure::TooManySteps { time }
            | StepFailure::NonFinite { time } => time,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth-order weights minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;

/// Integrates `dy/dt = f(t, y)` from `t0`, calling `observe` at each time in
/// `outputs` (strictly increasing, all ≥ `t0`). Returns the step statistics.
pub fn dopri5<const N: usize, F, O>(
    mut f: F,
    t0: f64,
    y0: SVector<f64, N>,
    outputs: &[f64],
    control: &StepControl,
    mut observe: O,
) -> Result<StepStats, StepFailure>
where
    F: FnMut(f64, &SVector<f64, N>) -> SVector<f64, N>,
    O: FnMut(f64, &SVector<f64, N>) -> Result<(), StepFailure>,
{
    let mut stats = StepStats::default();
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    stats.rhs_evaluations += 1;

    let Some(&t_final) = outputs.last() else {
        return Ok(stats);
    };
    let mut h = initial_step(&mut f, t, &y, &k1, t_final - t0, control);
    stats.rhs_evaluations += 1;
    let mut err_prev: f64 = 1e-4;

    for &target in outputs {
        while t < target {
            if stats.accepted + stats.rejected >= control.max_steps {
                return Err(StepFailure::TooManySteps { time: t });
            }
            let remaining = target - t;
            let clipped = h >= remaining;
            let step = if clipped { remaining } else { h };
            if step <= 16.0 * f64::EPSILON * t.abs().max(1.0) && !clipped {
                return Err(StepFailure::Underflow { time: t, step });
            }

            let k2 = f(t + C2 * step, &(y + k1 * (A21 * step)));
            let k3 = f(t + C3 * step, &(y + (k1 * A31 + k2 * A32) * step));
            let k4 = f(
                t + C4 * step,
                &(y + (k1 * A41 + k2 * A42 + k3 * A43) * step),
            );
            let k5 = f(
                t + C5 * step,
                &(y + (k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54) * step),
            );
            let k6 = f(
                t + step,
                &(y + (k1 * A61 + k2 * A62 + k3 * A63 + k4 * A64 + k5 * A65) * step),
            );
            let y_new = y + (k1 * A71 + k3 * A73 + k4 * A74 + k5 * A75 + k6 * A76) * step;
            let k7 = f(t + step, &y_new);
            stats.rhs_evaluations += 6;

            let err_vec = (k1 * E1 + k3 * E3 + k4 * E4 + k5 * E5 + k6 * E6 + k7 * E7) * step;
            let err = error_norm(&err_vec, &y, &y_new, control);
            if !err.is_finite() {
                return Err(StepFailure::NonFinite { time: t });
            }

            if err <= 1.0 {
                // PI controller (Gustafsson)
                let fac = SAFETY * err.max(1e-10).powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0);
                let fac = fac.clamp(FAC_MIN, FAC_MAX);
                err_prev = err.max(1e-4);
                stats.accepted += 1;
                t = if clipped { target } else { t + step };
                y = y_new;
                k1 = k7;
                let proposed = step * fac;
                // a clipped step says nothing about the natural step size
                h = if clipped { h.max(proposed) } else { proposed };
            } else {
                stats.rejected += 1;
                let fac = (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 1.0);
                h = step * fac;
            }
        }
        observe(t, &y)?;
    }
    Ok(stats)
}

fn error_norm<const N: usize>(
    err: &SVector<f64, N>,
    y: &SVector<f64, N>,
    y_new: &SVector<f64, N>,
    control: &StepControl,
) -> f64 {
    let mut acc = 0.0;
    for i in 0..N {
        let scale = control.atol + control.rtol * y[i].abs().max(y_new[i].abs());
        acc += (err[i] / scale).powi(2);
    }
    (acc / N as f64).sqrt()
}

fn initial_step<const N: usize, F>(
    f: &mut F,
    t: f64,
    y: &SVector<f64, N>,
    dy: &SVector<f64, N>,
    span: f64,
    control: &StepControl,
) -> f64
where
    F: FnMut(f64, &SVector<f64, N>) -> SVector<f64, N>,
{
    let scale = y.map(|v| control.atol + control.rtol * v.abs());
    let d0 = (y.component_div(&scale).norm_squared() / N as f64).sqrt();
    let d1 = (dy.component_div(&scale).norm_squared() / N as f64).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(span.abs());
    let y1 = y + dy * h0;
    let dy1 = f(t + h0, &y1);
    let d2 = ((dy1 - dy).component_div(&scale).norm_squared() / N as f64).sqrt() / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span.abs()).max(f64::EPSILON)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector2;

    #[test]
    fn exponential_decay() {
        let times: Vec<f64> = (1..=10).map(|i| i as f64 * 0.5).collect();
        let mut got = Vec::new();
        let stats = dopri5(
            |_, y: &SVector<f64, 1>| -y * 1.3,
            0.0,
            SVector::<f64, 1>::new(2.0),
            &times,
            &StepControl::default(),
            |t, y| {
                got.push((t, y[0]));
                Ok(())
            },
        )
        .unwrap();
        assert_eq!(got.len(), times.len());
        for (t, y) in got {
            assert!((y - 2.0 * (-1.3 * t).exp()).abs() < 1e-10);
        }
        assert!(stats.accepted > 0);
    }

    #[test]
    fn harmonic_oscillator_hits_outputs_exactly() {
        let times = [0.0, 0.1, 1.0, 3.0, 10.0];
        let mut got = Vec::new();
        dopri5(
            |_, y: &Vector2<f64>| Vector2::new(y[1], -y[0]),
            0.0,
            Vector2::new(1.0, 0.0),
            &times,
            &StepControl::default(),
            |t, y| {
                got.push((t, *y));
                Ok(())
            },
        )
        .unwrap();
        for ((t, y), want) in got.iter().zip(times) {
            assert_eq!(*t, want);
            assert!((y[0] - t.cos()).abs() < 1e-9);
            assert!((y[1] + t.sin()).abs() < 1e-9);
        }
    }

    #[test]
    fn blow_up_reports_last_good_time() {
        let control = StepControl {
            max_steps: 100_000,
            ..StepControl::default()
        };
        // y' = y^2, y(0) = 1 explodes at t = 1
        let res = dopri5(
            |_, y: &SVector<f64, 1>| y.component_mul(y),
            0.0,
            SVector::<f64, 1>::new(1.0),
            &[2.0],
            &control,
            |_, _| Ok(()),
        );
        let failure = res.unwrap_err();
        let t = failure.last_good_time();
        assert!(t > 0.9 && t <= 1.0, "failed at {t}");
    }
}
