//! Brute-force integration of the full master equation at the density-matrix
//! level. Nothing here goes through the Bloch-vector algebra of
//! [`crate::analytic`], so the two paths check each other.

mod density;
pub mod integrator;

pub use density::DensityMatrix;
pub use integrator::{StepControl, StepStats};

use nalgebra::{Matrix2, SVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::params::{ParamsError, SystemParams};

pub const TRACE_TOLERANCE: f64 = 1e-12;
pub const HERMITICITY_TOLERANCE: f64 = 1e-12;
pub const POSITIVITY_TOLERANCE: f64 = 1e-10;

/// Measurement branches with less weight than this are dropped.
const ZERO_BRANCH: f64 = 1e-300;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error("invalid oracle input: {0}")]
    InvalidInput(String),
    #[error("integration failed after t = {last_good_time}: {reason}")]
    IntegrationFailure { last_good_time: f64, reason: String },
    #[error("unphysical state: {0}")]
    Physicality(String),
}

pub(crate) fn max_modulus(m: &Matrix2<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// σ₊ = |e⟩⟨g| in the (|e⟩, |g⟩) basis.
pub fn sigma_plus() -> Matrix2<Complex64> {
    Matrix2::new(c(0.0), c(1.0), c(0.0), c(0.0))
}

pub fn sigma_minus() -> Matrix2<Complex64> {
    Matrix2::new(c(0.0), c(0.0), c(1.0), c(0.0))
}

/// Right-hand side of the master equation for one parameter set, with any
/// squeezing phase.
#[derive(Debug, Clone, Copy)]
pub struct MasterEquation {
    rabi: f64,
    gamma0: f64,
    n: f64,
    m: Complex64,
}

impl MasterEquation {
    pub fn new(params: &SystemParams) -> Result<Self, ParamsError> {
        params.validate()?;
        Ok(MasterEquation {
            rabi: params.rabi,
            gamma0: params.gamma0,
            n: params.effective_occupation()?,
            m: params.squeeze_moment()?,
        })
    }

    pub fn rhs(&self, rho: &Matrix2<Complex64>) -> Matrix2<Complex64> {
        let sp = sigma_plus();
        let sm = sigma_minus();
        let drive = sp + sm;
        let coherent = (drive * rho - rho * drive) * Complex64::new(0.0, 0.5 * self.rabi);

        let smsp = sm * sp;
        let absorption = sp * rho * sm - (smsp * rho) * c(0.5) - (rho * smsp) * c(0.5);
        let spsm = sp * sm;
        let emission = sm * rho * sp - (spsm * rho) * c(0.5) - (rho * spsm) * c(0.5);
        let squeeze = (sp * rho * sp) * self.m + (sm * rho * sm) * self.m.conj();

        coherent + absorption * c(self.gamma0 * self.n) + emission * c(self.gamma0 * (self.n + 1.0))
            - squeeze * c(self.gamma0)
    }
}

/// dρ/dt of the master equation.
pub fn lindblad_rhs(
    rho: &DensityMatrix,
    params: &SystemParams,
) -> Result<Matrix2<Complex64>, ParamsError> {
    Ok(MasterEquation::new(params)?.rhs(rho.matrix()))
}

fn pack(m: &Matrix2<Complex64>) -> SVector<f64, 8> {
    SVector::<f64, 8>::from_column_slice(&[
        m[(0, 0)].re,
        m[(0, 0)].im,
        m[(0, 1)].re,
        m[(0, 1)].im,
        m[(1, 0)].re,
        m[(1, 0)].im,
        m[(1, 1)].re,
        m[(1, 1)].im,
    ])
}

fn unpack(y: &SVector<f64, 8>) -> Matrix2<Complex64> {
    Matrix2::new(
        Complex64::new(y[0], y[1]),
        Complex64::new(y[2], y[3]),
        Complex64::new(y[4], y[5]),
        Complex64::new(y[6], y[7]),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<(f64, DensityMatrix)>,
    pub params: SystemParams,
    pub control: StepControl,
    pub stats: StepStats,
}

impl Trajectory {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|(t, _)| *t)
    }

    /// Sample recorded at exactly `t`.
    pub fn at(&self, t: f64) -> Option<&DensityMatrix> {
        self.samples
            .binary_search_by(|(s, _)| s.total_cmp(&t))
            .ok()
            .map(|i| &self.samples[i].1)
    }

    pub fn last(&self) -> &DensityMatrix {
        &self
            .samples
            .last()
            .expect("trajectory always holds the initial state")
            .1
    }
}

/// Integrates the master equation from ρ(0) = `rho0`.
///
/// Samples are emitted at t = 0, at every point of `sample_grid` and at
/// `t_end`; the grid must be strictly increasing inside `[0, t_end]`.
pub fn integrate(
    rho0: &DensityMatrix,
    params: &SystemParams,
    t_end: f64,
    sample_grid: &[f64],
    control: &StepControl,
) -> Result<Trajectory, OracleError> {
    if !(control.rtol > 0.0 && control.atol > 0.0) {
        return Err(OracleError::InvalidInput(format!(
            "tolerances must be positive (rtol = {}, atol = {})",
            control.rtol, control.atol
        )));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(OracleError::InvalidInput(format!(
            "invalid end time {t_end}"
        )));
    }
    if sample_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(OracleError::InvalidInput(
            "sample grid is not strictly increasing".into(),
        ));
    }
    if sample_grid.iter().any(|&t| !(0.0..=t_end).contains(&t)) {
        return Err(OracleError::InvalidInput(format!(
            "sample grid leaves [0, {t_end}]"
        )));
    }
    rho0.check_physical(0.0)?;
    let equation = MasterEquation::new(params)?;

    let mut outputs: Vec<f64> = sample_grid.iter().copied().filter(|&t| t > 0.0).collect();
    if t_end > 0.0 && outputs.last() != Some(&t_end) {
        outputs.push(t_end);
    }

    let mut samples = vec![(0.0, *rho0)];
    let mut violation: Option<OracleError> = None;
    let stats = integrator::dopri5(
        |_, y| pack(&equation.rhs(&unpack(y))),
        0.0,
        pack(rho0.matrix()),
        &outputs,
        control,
        |t, y| {
            let rho = DensityMatrix::from_matrix_unchecked(unpack(y));
            if let Err(e) = rho.check_physical(0.0) {
                violation = Some(OracleError::Physicality(format!("at t = {t}: {e}")));
                return Err(integrator::StepFailure::NonFinite { time: t });
            }
            samples.push((t, rho));
            Ok(())
        },
    );
    if let Some(v) = violation {
        return Err(v);
    }
    let stats = stats.map_err(|failure| OracleError::IntegrationFailure {
        last_good_time: failure.last_good_time(),
        reason: format!("{failure:?}"),
    })?;
    Ok(Trajectory {
        samples,
        params: *params,
        control: *control,
        stats,
    })
}

/// Complete orthogonal pair of projectors for a dichotomic ±1 observable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectorPair {
    pub plus: Matrix2<Complex64>,
    pub minus: Matrix2<Complex64>,
}

impl ProjectorPair {
    /// Π⁺ = |g⟩⟨g|, Π⁻ = |e⟩⟨e|.
    pub fn ground_excited() -> Self {
        ProjectorPair {
            plus: *DensityMatrix::ground().matrix(),
            minus: *DensityMatrix::excited().matrix(),
        }
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        let tol = 1e-12;
        let id = Matrix2::<Complex64>::identity();
        let checks = [
            (
                max_modulus(&(self.plus + self.minus - id)),
                "plus + minus != identity",
            ),
            (
                max_modulus(&(self.plus * self.plus - self.plus)),
                "plus is not idempotent",
            ),
            (
                max_modulus(&(self.minus * self.minus - self.minus)),
                "minus is not idempotent",
            ),
            (
                max_modulus(&(self.plus * self.minus)),
                "projectors are not orthogonal",
            ),
            (
                max_modulus(&(self.plus - self.plus.adjoint())),
                "plus is not Hermitian",
            ),
        ];
        for (dev, what) in checks {
            if dev > tol {
                return Err(OracleError::InvalidInput(format!(
                    "{what} (deviation {dev:e})"
                )));
            }
        }
        Ok(())
    }
}

/// Two-time correlator `Σ_{m,n} m n Tr[Π^m ℰ_τ[Π^n ρ Π^n]]` at each lag τ,
/// with every measurement branch integrated independently.
pub fn two_time_correlation_oracle(
    prep: &DensityMatrix,
    lags: &[f64],
    params: &SystemParams,
    projectors: &ProjectorPair,
    control: &StepControl,
) -> Result<Vec<f64>, OracleError> {
    projectors.validate()?;
    let Some(&t_end) = lags.last() else {
        return Ok(Vec::new());
    };
    let mut correlation = vec![0.0; lags.len()];
    for (n_sign, pi_n) in [(1.0, projectors.plus), (-1.0, projectors.minus)] {
        let collapsed = pi_n * prep.matrix() * pi_n;
        let weight = collapsed.trace().re;
        if weight <= ZERO_BRANCH {
            continue;
        }
        let branch = DensityMatrix::from_matrix_unchecked(collapsed / c(weight));
        let traj = integrate(&branch, params, t_end, lags, control)?;
        for (out, &lag) in correlation.iter_mut().zip(lags) {
            let rho = traj.at(lag).expect("integrate samples every lag").matrix();
            let p_plus = (projectors.plus * rho).trace().re;
            let p_minus = (projectors.minus * rho).trace().re;
            *out += n_sign * weight * (p_plus - p_minus);
        }
    }
    Ok(correlation)
}
