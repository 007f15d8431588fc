use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{LgQuantity, LgtiError};

/// K counts as violating when K − 1 exceeds this.
pub const VIOLATION_THRESHOLD: f64 = 1e-9;
const ENDPOINT_TOLERANCE: f64 = 1e-6;
const ARGMAX_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub which: LgQuantity,
    pub k_max: f64,
    pub t_at_max: f64,
    pub violation_intervals: Vec<(f64, f64)>,
    pub total_violation_time: f64,
}

impl ViolationReport {
    pub fn violates(&self) -> bool {
        !self.violation_intervals.is_empty()
    }
}

/// Dense sampling of `f` on `t_range`, golden-section refinement of the best
/// sample, and bisection of every crossing of `f = 1 + VIOLATION_THRESHOLD`.
pub fn scan_function<F>(
    f: F,
    t_range: (f64, f64),
    n_samples: usize,
    which: LgQuantity,
) -> Result<ViolationReport, LgtiError>
where
    F: Fn(f64) -> Result<f64, LgtiError> + Sync,
{
    let (lo, hi) = t_range;
    if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi > lo) {
        return Err(LgtiError::InvalidRange(lo, hi));
    }
    if n_samples < 2 {
        return Err(LgtiError::TooFewSamples(n_samples));
    }
    let step = (hi - lo) / (n_samples - 1) as f64;
    let times: Vec<f64> = (0..n_samples)
        .map(|i| {
            if i + 1 == n_samples {
                hi
            } else {
                lo + step * i as f64
            }
        })
        .collect();
    let values: Vec<f64> = times.par_iter().map(|&t| f(t)).collect::<Result<_, _>>()?;

    // earliest of (numerically) tied maxima
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let best = values
        .iter()
        .position(|&v| v >= top - 1e-12 * top.abs().max(1.0))
        .expect("at least two samples");
    let left = times[best.saturating_sub(1)];
    let right = times[(best + 1).min(n_samples - 1)];
    let (mut t_at_max, mut k_max) = (times[best], values[best]);
    let (t_ref, k_ref) = golden_section_max(&f, left, right)?;
    if k_ref > k_max {
        t_at_max = t_ref;
        k_max = k_ref;
    }

    let excess = |t: f64| -> Result<f64, LgtiError> { Ok(f(t)? - 1.0 - VIOLATION_THRESHOLD) };
    let inside: Vec<bool> = values
        .iter()
        .map(|v| v - 1.0 - VIOLATION_THRESHOLD > 0.0)
        .collect();

    let mut intervals = Vec::new();
    let mut i = 0;
    while i < n_samples {
        if !inside[i] {
            i += 1;
            continue;
        }
        let start_idx = i;
        while i + 1 < n_samples && inside[i + 1] {
            i += 1;
        }
        let end_idx = i;
        let start = if start_idx == 0 {
            times[0]
        } else {
            bisect(&excess, times[start_idx - 1], times[start_idx])?
        };
        let end = if end_idx + 1 == n_samples {
            times[end_idx]
        } else {
            bisect(&excess, times[end_idx + 1], times[end_idx])?
        };
        intervals.push((start, end));
        i += 1;
    }

    // a violation narrower than the sample spacing shows up only in the
    // refined maximum
    let refined_violates = k_max - 1.0 - VIOLATION_THRESHOLD > 0.0;
    let covered = intervals
        .iter()
        .any(|&(a, b)| a <= t_at_max && t_at_max <= b);
    if refined_violates && !covered {
        let start = if excess(left)? > 0.0 {
            left
        } else {
            bisect(&excess, left, t_at_max)?
        };
        let end = if excess(right)? > 0.0 {
            right
        } else {
            bisect(&excess, right, t_at_max)?
        };
        intervals.push((start, end));
        intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
    }

    let total_violation_time = intervals.iter().fold(0.0, |acc, (a, b)| acc + (b - a));
    Ok(ViolationReport {
        which,
        k_max,
        t_at_max,
        violation_intervals: intervals,
        total_violation_time,
    })
}

/// Bisection between `outside` (excess ≤ 0) and `inside` (excess > 0).
fn bisect<F>(excess: &F, mut outside: f64, mut inside: f64) -> Result<f64, LgtiError>
where
    F: Fn(f64) -> Result<f64, LgtiError>,
{
    while (inside - outside).abs() > ENDPOINT_TOLERANCE {
        let mid = 0.5 * (outside + inside);
        if excess(mid)? > 0.0 {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    Ok(0.5 * (outside + inside))
}

fn golden_section_max<F>(f: &F, mut a: f64, mut b: f64) -> Result<(f64, f64), LgtiError>
where
    F: Fn(f64) -> Result<f64, LgtiError>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while b - a > ARGMAX_TOLERANCE {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1)?;
        }
    }
    Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn trigonometric_optimum() {
        let f = |t: f64| Ok(2.0 * t.cos() - (2.0 * t).cos());
        let r = scan_function(f, (0.0, 2.0 * PI), 2001, LgQuantity::KPlus).unwrap();
        assert!((r.k_max - 1.5).abs() < 1e-6);
        assert!((r.t_at_max - PI / 3.0).abs() < 1e-4);
        // 2c − 2c² + 1 > 1 ⇔ 0 < cos t < 1
        assert_eq!(r.violation_intervals.len(), 2);
        let (a, b) = r.violation_intervals[0];
        assert!(a < 1e-3 && (b - PI / 2.0).abs() < 1e-5);
        let (c, d) = r.violation_intervals[1];
        assert!((c - 1.5 * PI).abs() < 1e-5 && d > 2.0 * PI - 1e-3);
    }

    #[test]
    fn narrow_peak_between_samples() {
        let f = |t: f64| Ok(0.999 + 0.0011 * (-((t - 0.53) / 0.05).powi(2)).exp());
        let r = scan_function(f, (0.0, 1.0), 11, LgQuantity::KPlus).unwrap();
        assert!((r.k_max - 1.0001).abs() < 1e-12);
        assert!((r.t_at_max - 0.53).abs() < 1e-5);
        assert_eq!(r.violation_intervals.len(), 1);
        let (a, b) = r.violation_intervals[0];
        // 0.0011 e^{-x²} > 0.001 + 1e-9 with x = (t − 0.53)/0.05
        let half = 0.05 * (1.1f64 / (1.0 + 1e-6)).ln().sqrt();
        assert!((a - (0.53 - half)).abs() < 1e-6 && (b - (0.53 + half)).abs() < 1e-6);
    }

    #[test]
    fn no_violation() {
        let r = scan_function(|t| Ok(1.0 - t * t), (0.0, 3.0), 50, LgQuantity::KPlus).unwrap();
        assert!(!r.violates());
        assert_eq!(r.total_violation_time, 0.0);
        assert_eq!(r.k_max, 1.0);
    }

    #[test]
    fn rejects_bad_ranges() {
        let f = |_: f64| Ok(0.0);
        assert!(scan_function(f, (1.0, 1.0), 10, LgQuantity::KPlus).is_err());
        assert!(scan_function(f, (0.0, 1.0), 1, LgQuantity::KPlus).is_err());
        assert!(scan_function(f, (-1.0, 1.0), 10, LgQuantity::KPlus).is_err());
    }
}
