//! Leggett-Garg-type inequality machinery.
//!
//! All quantities assume the dichotomic observable `O = |g⟩⟨g| − |e⟩⟨e|`
//! and, unless a preparation is passed explicitly, the atom prepared in
//! `|g⟩` at t₀ = 0. Correlators follow the invasive branching protocol:
//! project, evolve each branch with the exact propagator, then recombine.

mod scan;

pub use scan::{scan_function, ViolationReport, VIOLATION_THRESHOLD};

use log::debug;
use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::{AnalyticError, BlochDynamics, BlochVector};
use crate::oracle::{DensityMatrix, ProjectorPair};
use crate::params::{DerivedRates, SystemParams};

/// Agreement required between the coefficient form of ℱ and 2p_g.
pub const F_IDENTITY_TOLERANCE: f64 = 1e-8;
/// Below this |μ_s| the coefficient form is not evaluated.
const MU_FLOOR: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LgtiError {
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error("measurement sharpness must lie in (0, 1], got {0}")]
    InvalidSharpness(f64),
    #[error("invalid time range [{0}, {1}]")]
    InvalidRange(f64, f64),
    #[error("need at least two samples, got {0}")]
    TooFewSamples(usize),
    #[error("weak-measurement routes disagree by {0:e}")]
    WeakRouteMismatch(f64),
}

impl From<crate::params::ParamsError> for LgtiError {
    fn from(e: crate::params::ParamsError) -> Self {
        LgtiError::Analytic(e.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LgQuantity {
    KPlus,
    KMinus,
    K3,
}

impl LgQuantity {
    pub fn as_str(&self) -> &'static str {
        match self {
            LgQuantity::KPlus => "k_plus",
            LgQuantity::KMinus => "k_minus",
            LgQuantity::K3 => "k3",
        }
    }
}

impl std::str::FromStr for LgQuantity {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "k_plus" | "kplus" | "K+" => Ok(LgQuantity::KPlus),
            "k_minus" | "kminus" | "K-" => Ok(LgQuantity::KMinus),
            "k3" | "K3" => Ok(LgQuantity::K3),
            other => Err(format!(
                "unknown LG quantity {other:?} (expected k_plus, k_minus or k3)"
            )),
        }
    }
}

/// Ground/excited projectors plus the sharpness ξ of the unsharp version
/// `W^± = ((1 ± ξ)/2) Π⁺ + ((1 ∓ ξ)/2) Π⁻`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementPair {
    pub projectors: ProjectorPair,
    pub xi: f64,
}

impl MeasurementPair {
    pub fn new(xi: f64) -> Result<Self, LgtiError> {
        if !(xi > 0.0 && xi <= 1.0) {
            return Err(LgtiError::InvalidSharpness(xi));
        }
        Ok(MeasurementPair {
            projectors: ProjectorPair::ground_excited(),
            xi,
        })
    }

    pub fn projective() -> Self {
        MeasurementPair {
            projectors: ProjectorPair::ground_excited(),
            xi: 1.0,
        }
    }

    /// (W⁺, W⁻).
    pub fn effects(&self) -> (Matrix2<Complex64>, Matrix2<Complex64>) {
        let p = &self.projectors;
        let plus = p.plus * Complex64::from(0.5 * (1.0 + self.xi))
            + p.minus * Complex64::from(0.5 * (1.0 - self.xi));
        let minus = p.plus * Complex64::from(0.5 * (1.0 - self.xi))
            + p.minus * Complex64::from(0.5 * (1.0 + self.xi));
        (plus, minus)
    }

    /// Kraus operators √W^± (the effects are diagonal in the measured basis).
    pub fn kraus(&self) -> (Matrix2<Complex64>, Matrix2<Complex64>) {
        let p = &self.projectors;
        let root = |a: f64, b: f64| {
            p.plus * Complex64::from((0.5 * a).sqrt()) + p.minus * Complex64::from((0.5 * b).sqrt())
        };
        (
            root(1.0 + self.xi, 1.0 - self.xi),
            root(1.0 - self.xi, 1.0 + self.xi),
        )
    }
}

/// Coefficients of ℱ(t) = 𝒜[ℬ + e^{κt}(𝒞 cos μ_s t + 𝒟 sin μ_s t)], with
/// κ = −(3γ − 2γ₀M)/4. Complex because μ_s is imaginary when overdamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LgCoefficients {
    pub a_coef: Complex64,
    pub b_coef: Complex64,
    pub c_coef: Complex64,
    pub d_coef: Complex64,
    mu_s: Complex64,
    kappa: f64,
}

impl LgCoefficients {
    /// `None` when μ_s vanishes (critical damping).
    pub fn new(rates: &DerivedRates, rabi: f64) -> Option<Self> {
        let mu = rates.mu_s;
        if mu.norm() < MU_FLOOR {
            return None;
        }
        let (g, g0, m) = (rates.gamma, rates.gamma0, rates.m_param);
        let om2 = rabi * rabi;
        let anti = g - 2.0 * g0 * m;
        let denom = g * anti + 2.0 * om2;
        let excited_weight = (g - g0) * anti + 2.0 * om2;
        Some(LgCoefficients {
            a_coef: 1.0 / (4.0 * mu * denom),
            b_coef: 4.0 * mu * ((g + g0) * anti + 2.0 * om2),
            c_coef: 4.0 * mu * excited_weight,
            d_coef: Complex64::from(8.0 * om2 * g0 - rates.gamma_s * excited_weight),
            mu_s: mu,
            kappa: 0.5 * g0 * m - 0.75 * g,
        })
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        let i_mu = Complex64::i() * self.mu_s;
        let up = ((self.kappa + i_mu) * t).exp();
        let down = ((self.kappa - i_mu) * t).exp();
        let damped_cos = 0.5 * (up + down);
        let damped_sin = (up - down) / (2.0 * Complex64::i());
        let f = self.a_coef * (self.b_coef + self.c_coef * damped_cos + self.d_coef * damped_sin);
        f.re
    }
}

/// Alternative coefficient form of ℱ − 1 in which only the cosine term is
/// damped and 𝒞, 𝒟 carry M-dependent factors that are exact only for M = 0:
///
/// 𝒜[ℬ + 𝒞 e^{κt} cos μ_s t + 𝒟 sin μ_s t] − 1 with
/// 𝒞 = −2(γ₀M − 2μ_s)[(γ−γ₀)(γ−2γ₀M) + 2Ω²] and
/// 𝒟 = −γ(γ−γ₀)(γ−2γ₀M) − 2(γ−4γ₀)Ω².
///
/// Never used for physics. It exists so tests can pin down where it departs
/// from 2p_g − 1 (see `damp_sine`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncorrectedFForm {
    a_coef: Complex64,
    b_coef: Complex64,
    c_coef: Complex64,
    d_coef: Complex64,
    mu_s: Complex64,
    kappa: f64,
}

impl UncorrectedFForm {
    pub fn new(rates: &DerivedRates, rabi: f64) -> Option<Self> {
        let mu = rates.mu_s;
        if mu.norm() < MU_FLOOR {
            return None;
        }
        let (g, g0, m) = (rates.gamma, rates.gamma0, rates.m_param);
        let om2 = rabi * rabi;
        let anti = g - 2.0 * g0 * m;
        let excited_weight = (g - g0) * anti + 2.0 * om2;
        Some(UncorrectedFForm {
            a_coef: 1.0 / (4.0 * mu * (g * g - 2.0 * g * g0 * m + 2.0 * om2)),
            b_coef: 4.0 * (g + g0) * anti * mu + 8.0 * mu * om2,
            c_coef: -2.0 * (g0 * m - 2.0 * mu) * excited_weight,
            d_coef: Complex64::from(-g * (g - g0) * anti - 2.0 * (g - 4.0 * g0) * om2),
            mu_s: mu,
            kappa: 0.5 * g0 * m - 0.75 * g,
        })
    }

    /// With `damp_sine` the sine term gets the same e^{κt} as the cosine.
    pub fn evaluate(&self, t: f64, damp_sine: bool) -> f64 {
        let i_mu = Complex64::i() * self.mu_s;
        let cos = 0.5 * ((i_mu * t).exp() + (-i_mu * t).exp());
        let sin = ((i_mu * t).exp() - (-i_mu * t).exp()) / (2.0 * Complex64::i());
        let envelope = (self.kappa * t).exp();
        let sine_envelope = if damp_sine { envelope } else { 1.0 };
        let f = self.a_coef
            * (self.b_coef + self.c_coef * envelope * cos + self.d_coef * sine_envelope * sin);
        f.re - 1.0
    }
}

/// K± = ±2cos(Ωt) − cos(2Ωt).
pub fn k_pm_strong_driving(rabi: f64, t: f64) -> (f64, f64) {
    let c1 = (rabi * t).cos();
    let c2 = (2.0 * rabi * t).cos();
    (2.0 * c1 - c2, -2.0 * c1 - c2)
}

/// ξ²·K.
pub fn apply_weak_measurement(k_value: f64, xi: f64) -> Result<f64, LgtiError> {
    if !(xi > 0.0 && xi <= 1.0) {
        return Err(LgtiError::InvalidSharpness(xi));
    }
    Ok(xi * xi * k_value)
}

/// Leggett-Garg quantities for one parameter set.
#[derive(Debug, Clone)]
pub struct LgModel {
    dynamics: BlochDynamics,
    coefficients: Option<LgCoefficients>,
}

impl LgModel {
    pub fn new(params: &SystemParams) -> Result<Self, LgtiError> {
        let dynamics = BlochDynamics::new(params)?;
        let coefficients = LgCoefficients::new(dynamics.rates(), params.rabi);
        Ok(LgModel {
            dynamics,
            coefficients,
        })
    }

    pub fn dynamics(&self) -> &BlochDynamics {
        &self.dynamics
    }

    pub fn coefficients(&self) -> Option<&LgCoefficients> {
        self.coefficients.as_ref()
    }

    pub fn ground_probability(&self, t: f64) -> Result<f64, LgtiError> {
        Ok(self
            .dynamics
            .ground_probability(&BlochVector::ground(), t)?)
    }

    /// C(t₀, t₀ + t) for ground-state preparation: 2p_g(t) − 1.
    pub fn correlation_ground_prep(&self, t: f64) -> Result<f64, LgtiError> {
        Ok(2.0 * self.ground_probability(t)? - 1.0)
    }

    /// Projective two-time correlator for an arbitrary state at the first
    /// measurement, by explicit branching.
    pub fn correlation(&self, state: &BlochVector, tau: f64) -> Result<f64, LgtiError> {
        let p_g = state.ground_probability();
        let mut total = 0.0;
        for (sign, weight, branch) in [
            (1.0, p_g, BlochVector::ground()),
            (-1.0, 1.0 - p_g, BlochVector::excited()),
        ] {
            if weight <= 0.0 {
                continue;
            }
            let later = self.dynamics.evolve(&branch, tau)?;
            // ⟨O⟩ = p_g − p_e = −v₃
            total += sign * weight * (-later.v3);
        }
        Ok(total)
    }

    /// Unsharp two-time correlator built from the Kraus operators √W^± and
    /// effects W^±.
    pub fn weak_correlation(
        &self,
        state: &BlochVector,
        tau: f64,
        measurement: &MeasurementPair,
    ) -> Result<f64, LgtiError> {
        let rho = DensityMatrix::from_bloch(state);
        let (k_plus, k_minus) = measurement.kraus();
        let (w_plus, w_minus) = measurement.effects();
        let mut total = 0.0;
        for (sign, kraus) in [(1.0, k_plus), (-1.0, k_minus)] {
            let post = kraus * rho.matrix() * kraus.adjoint();
            let weight = post.trace().re;
            if weight <= 0.0 {
                continue;
            }
            let branch = DensityMatrix::from_matrix_unchecked(post / Complex64::from(weight));
            let later = self.dynamics.evolve(&branch.to_bloch(), tau)?;
            let later = DensityMatrix::from_bloch(&later);
            let outcome =
                (w_plus * later.matrix()).trace().re - (w_minus * later.matrix()).trace().re;
            total += sign * weight * outcome;
        }
        Ok(total)
    }

    /// ℱ(t), which equals 2p_g(t). The coefficient form is used when
    /// available; a mismatch beyond [`F_IDENTITY_TOLERANCE`] falls back to
    /// 2p_g and is logged.
    pub fn f_function(&self, t: f64) -> Result<f64, LgtiError> {
        let reference = 2.0 * self.ground_probability(t)?;
        match &self.coefficients {
            Some(coef) => {
                let value = coef.evaluate(t);
                let deviation = (value - reference).abs();
                if deviation > F_IDENTITY_TOLERANCE || !value.is_finite() {
                    debug!(
                        "coefficient form of F deviates by {deviation:e} at t = {t}; using 2 p_g"
                    );
                    Ok(reference)
                } else {
                    Ok(value)
                }
            }
            None => Ok(reference),
        }
    }

    /// K± = ±2C(t₀,t) − C(t₀,2t).
    pub fn k_pm(&self, t: f64) -> Result<(f64, f64), LgtiError> {
        let c1 = self.correlation_ground_prep(t)?;
        let c2 = self.correlation_ground_prep(2.0 * t)?;
        Ok((2.0 * c1 - c2, -2.0 * c1 - c2))
    }

    /// K± through ℱ: K₊ = 2ℱ(t) − ℱ(2t) − 1 and K₋ = −2ℱ(t) − ℱ(2t) + 3.
    pub fn k_pm_from_f(&self, t: f64) -> Result<(f64, f64), LgtiError> {
        let f1 = self.f_function(t)?;
        let f2 = self.f_function(2.0 * t)?;
        Ok((2.0 * f1 - f2 - 1.0, -2.0 * f1 - f2 + 3.0))
    }

    /// K± with unsharp measurements, built constructively from W^±.
    pub fn weak_k_pm(
        &self,
        t: f64,
        measurement: &MeasurementPair,
    ) -> Result<(f64, f64), LgtiError> {
        let g = BlochVector::ground();
        let c1 = self.weak_correlation(&g, t, measurement)?;
        let c2 = self.weak_correlation(&g, 2.0 * t, measurement)?;
        Ok((2.0 * c1 - c2, -2.0 * c1 - c2))
    }

    /// K± with unsharp measurements: ξ²-scaled sharp values, checked against
    /// the constructive route to 1e-12.
    pub fn k_pm_weak(&self, t: f64, xi: f64) -> Result<(f64, f64), LgtiError> {
        let measurement = MeasurementPair::new(xi)?;
        let (kp, km) = self.k_pm(t)?;
        let scaled = (
            apply_weak_measurement(kp, xi)?,
            apply_weak_measurement(km, xi)?,
        );
        let built = self.weak_k_pm(t, &measurement)?;
        let dev = (scaled.0 - built.0).abs().max((scaled.1 - built.1).abs());
        if dev > 1e-12 {
            return Err(LgtiError::WeakRouteMismatch(dev));
        }
        Ok(scaled)
    }

    /// K₃ = C(t₀,t₁) + C(t₁,t₂) − C(t₀,t₂), each correlator measured in its
    /// own run on the freely evolved preparation.
    pub fn k3(&self, t01: f64, t12: f64, prep: &BlochVector) -> Result<f64, LgtiError> {
        let c01 = self.correlation(prep, t01)?;
        let at_t1 = self.dynamics.evolve(prep, t01)?;
        let c12 = self.correlation(&at_t1, t12)?;
        let c02 = self.correlation(prep, t01 + t12)?;
        Ok(c01 + c12 - c02)
    }

    /// Value of `which` at equal spacing `t`, with measurement sharpness `xi`
    /// applied to K± only.
    pub fn quantity(&self, which: LgQuantity, t: f64, xi: f64) -> Result<f64, LgtiError> {
        match which {
            LgQuantity::KPlus => apply_weak_measurement(self.k_pm(t)?.0, xi),
            LgQuantity::KMinus => apply_weak_measurement(self.k_pm(t)?.1, xi),
            LgQuantity::K3 => self.k3(t, t, &BlochVector::ground()),
        }
    }

    pub fn scan_violation(
        &self,
        t_range: (f64, f64),
        n_samples: usize,
        which: LgQuantity,
        xi: f64,
    ) -> Result<ViolationReport, LgtiError> {
        if which != LgQuantity::K3 {
            MeasurementPair::new(xi)?;
        }
        scan_function(|t| self.quantity(which, t, xi), t_range, n_samples, which)
    }
}
