//! Physical inputs, reservoir-dressed rates and regime classification.
//!
//! Units are ħ = k_B = 1. The Rabi frequency is the natural frequency scale;
//! every output time axis is in units of 1/Ω.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default half-width of the critical band, relative to Ω.
pub const CRITICAL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamsError {
    #[error("transition frequency must be positive, got {0}")]
    NonPositiveFrequency(f64),
    #[error("Rabi frequency must be positive, got {0}")]
    NonPositiveRabi(f64),
    #[error("spontaneous emission rate must be non-negative, got {0}")]
    NegativeDecayRate(f64),
    #[error("inverse temperature must be positive, got {0} (use the zero-temperature flag for beta -> infinity)")]
    NonPositiveBeta(f64),
    #[error("squeezing magnitude must be non-negative, got {0}")]
    NegativeSqueezing(f64),
    #[error("non-finite parameter {0}")]
    NonFinite(&'static str),
    #[error("closed-form dynamics require a real squeezing phase (theta = 0), got theta = {0}")]
    ComplexSqueezingPhase(f64),
}

/// Bath temperature. Zero temperature is kept symbolic so `exp(beta * omega0)`
/// is never formed for huge beta.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Temperature {
    Zero,
    Beta(f64),
}

impl Temperature {
    pub fn beta(&self) -> Option<f64> {
        match *self {
            Temperature::Zero => None,
            Temperature::Beta(b) => Some(b),
        }
    }
}

/// Physical inputs of the driven atom and its reservoir.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub omega0: f64,
    pub rabi: f64,
    pub gamma0: f64,
    pub temperature: Temperature,
    pub squeeze_s: f64,
    pub squeeze_theta: f64,
}

impl SystemParams {
    /// Validated constructor with θ = 0.
    pub fn new(
        omega0: f64,
        rabi: f64,
        gamma0: f64,
        temperature: Temperature,
        squeeze_s: f64,
    ) -> Result<Self, ParamsError> {
        let p = SystemParams {
            omega0,
            rabi,
            gamma0,
            temperature,
            squeeze_s,
            squeeze_theta: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    /// Parameterization used throughout the figures: γ₀ = R·Ω.
    pub fn from_ratio(
        omega0: f64,
        rabi: f64,
        ratio_r: f64,
        temperature: Temperature,
        squeeze_s: f64,
    ) -> Result<Self, ParamsError> {
        Self::new(omega0, rabi, ratio_r * rabi, temperature, squeeze_s)
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.squeeze_theta = theta;
        self
    }

    pub fn validate(&self) -> Result<(), ParamsError> {
        let finite = [
            ("omega0", self.omega0),
            ("rabi", self.rabi),
            ("gamma0", self.gamma0),
            ("squeeze_s", self.squeeze_s),
            ("squeeze_theta", self.squeeze_theta),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(ParamsError::NonFinite(name));
            }
        }
        if self.omega0 <= 0.0 {
            return Err(ParamsError::NonPositiveFrequency(self.omega0));
        }
        if self.rabi <= 0.0 {
            return Err(ParamsError::NonPositiveRabi(self.rabi));
        }
        if self.gamma0 < 0.0 {
            return Err(ParamsError::NegativeDecayRate(self.gamma0));
        }
        if self.squeeze_s < 0.0 {
            return Err(ParamsError::NegativeSqueezing(self.squeeze_s));
        }
        if let Temperature::Beta(b) = self.temperature {
            if !b.is_finite() {
                return Err(ParamsError::NonFinite("beta"));
            }
            if b <= 0.0 {
                return Err(ParamsError::NonPositiveBeta(b));
            }
        }
        Ok(())
    }

    pub fn ratio_r(&self) -> f64 {
        self.gamma0 / self.rabi
    }

    pub fn thermal_occupation(&self) -> Result<f64, ParamsError> {
        planck_occupation(self.omega0, self.temperature)
    }

    /// Effective occupation n of the squeezed thermal bath.
    pub fn effective_occupation(&self) -> Result<f64, ParamsError> {
        let n_th = self.thermal_occupation()?;
        let (c, s) = (self.squeeze_s.cosh(), self.squeeze_s.sinh());
        Ok(n_th * (c * c + s * s) + s * s)
    }

    /// Complex squeezing moment M for arbitrary phase θ.
    pub fn squeeze_moment(&self) -> Result<Complex64, ParamsError> {
        let n_th = self.thermal_occupation()?;
        let (c, s) = (self.squeeze_s.cosh(), self.squeeze_s.sinh());
        Ok(-c * s * (2.0 * n_th + 1.0) * Complex64::from_polar(1.0, self.squeeze_theta))
    }
}

/// Bath-dressed quantities for θ = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedRates {
    pub n_th: f64,
    pub n: f64,
    pub m_param: f64,
    pub gamma0: f64,
    pub gamma: f64,
    pub gamma_s: f64,
    #[serde(with = "complex_serde")]
    pub mu_s: Complex64,
    pub ratio_r: f64,
}

impl DerivedRates {
    /// μ_s², which is always real.
    pub fn mu_s_squared(&self, rabi: f64) -> f64 {
        rabi * rabi - 0.25 * self.gamma_s * 0.25 * self.gamma_s
    }
}

mod complex_serde {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(Complex64::new(re, im))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Underdamped,
    Overdamped,
    Critical,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Underdamped => "underdamped",
            Regime::Overdamped => "overdamped",
            Regime::Critical => "critical",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Planck occupation 1/(e^{βω₀} − 1); exactly zero at zero temperature.
pub fn planck_occupation(omega0: f64, temperature: Temperature) -> Result<f64, ParamsError> {
    if !(omega0 > 0.0) {
        return Err(ParamsError::NonPositiveFrequency(omega0));
    }
    match temperature {
        Temperature::Zero => Ok(0.0),
        Temperature::Beta(beta) if beta > 0.0 => Ok(1.0 / (beta * omega0).exp_m1()),
        Temperature::Beta(beta) => Err(ParamsError::NonPositiveBeta(beta)),
    }
}

/// Dressed rates for the closed-form path. Rejects θ ≠ 0.
pub fn derive_rates(params: &SystemParams) -> Result<DerivedRates, ParamsError> {
    params.validate()?;
    if params.squeeze_theta != 0.0 {
        return Err(ParamsError::ComplexSqueezingPhase(params.squeeze_theta));
    }
    let n_th = params.thermal_occupation()?;
    let n = params.effective_occupation()?;
    let m_param = params.squeeze_moment()?.re;
    let gamma0 = params.gamma0;
    let gamma = gamma0 * (2.0 * n + 1.0);
    let gamma_s = gamma + 2.0 * gamma0 * m_param;
    let quarter = 0.25 * gamma_s;
    let mu_sq = params.rabi * params.rabi - quarter * quarter;
    let mu_s = Complex64::new(mu_sq, 0.0).sqrt();
    // sqrt of a negative real can carry a -0.0 real part; keep the two
    // regimes cleanly real or purely imaginary.
    let mu_s = if mu_sq >= 0.0 {
        Complex64::new(mu_sq.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, mu_s.im.abs())
    };
    Ok(DerivedRates {
        n_th,
        n,
        m_param,
        gamma0,
        gamma,
        gamma_s,
        mu_s,
        ratio_r: gamma0 / params.rabi,
    })
}

pub fn classify_regime(rates: &DerivedRates, rabi: f64, tol: f64) -> Regime {
    let gap = rabi - 0.25 * rates.gamma_s;
    if gap > tol {
        Regime::Underdamped
    } else if gap < -tol {
        Regime::Overdamped
    } else {
        Regime::Critical
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig_params(ratio_r: f64, t: Temperature, s: f64) -> SystemParams {
        SystemParams::from_ratio(0.5, 1.0, ratio_r, t, s).unwrap()
    }

    #[test]
    fn planck_values() {
        assert_eq!(planck_occupation(0.5, Temperature::Zero).unwrap(), 0.0);
        let n = planck_occupation(0.5, Temperature::Beta(10.0)).unwrap();
        assert!((n - 6.783_654_906_304_231e-3).abs() < 1e-15);
        let n = planck_occupation(0.5, Temperature::Beta(1e-3)).unwrap();
        assert!((n - 1_999.500_041_666_666_5).abs() < 1e-8);
    }

    #[test]
    fn planck_rejects_bad_inputs() {
        assert!(matches!(
            planck_occupation(0.0, Temperature::Beta(1.0)),
            Err(ParamsError::NonPositiveFrequency(_))
        ));
        assert!(matches!(
            planck_occupation(0.5, Temperature::Beta(0.0)),
            Err(ParamsError::NonPositiveBeta(_))
        ));
        assert!(matches!(
            planck_occupation(0.5, Temperature::Beta(-2.0)),
            Err(ParamsError::NonPositiveBeta(_))
        ));
    }

    #[test]
    fn unsqueezed_zero_temperature() {
        let r = derive_rates(&fig_params(0.05, Temperature::Zero, 0.0)).unwrap();
        assert_eq!(r.n, 0.0);
        assert_eq!(r.m_param, 0.0);
        assert!((r.gamma - 0.05).abs() < 1e-16);
        assert_eq!(r.gamma, r.gamma_s);
        assert!((r.mu_s.re - 0.999_921_871_948_003_7).abs() < 1e-15);
        assert_eq!(r.mu_s.im, 0.0);
    }

    #[test]
    fn squeezed_vacuum_moments() {
        let r = derive_rates(&fig_params(0.05, Temperature::Zero, 1.0)).unwrap();
        assert!((r.n - 1.381_097_845_541_815_7).abs() < 1e-14);
        assert!((r.m_param + 1.813_430_203_923_509_4).abs() < 1e-14);
    }

    #[test]
    fn closed_system_rates() {
        let p = SystemParams::new(0.5, 1.3, 0.0, Temperature::Beta(0.2), 2.0).unwrap();
        let r = derive_rates(&p).unwrap();
        assert_eq!(r.gamma, 0.0);
        assert_eq!(r.gamma_s, 0.0);
        assert_eq!(r.mu_s, Complex64::new(1.3, 0.0));
    }

    #[test]
    fn theta_rejected_on_closed_form_path() {
        let p = fig_params(0.05, Temperature::Beta(10.0), 0.5).with_theta(0.3);
        assert_eq!(
            derive_rates(&p),
            Err(ParamsError::ComplexSqueezingPhase(0.3))
        );
        assert!(p.squeeze_moment().unwrap().im != 0.0);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(SystemParams::new(0.5, 0.0, 0.1, Temperature::Zero, 0.0).is_err());
        assert!(SystemParams::new(0.5, 1.0, -0.1, Temperature::Zero, 0.0).is_err());
        assert!(SystemParams::new(0.5, 1.0, 0.1, Temperature::Zero, -1.0).is_err());
        assert!(SystemParams::new(0.5, 1.0, 0.1, Temperature::Beta(0.0), 0.0).is_err());
        assert!(SystemParams::new(f64::NAN, 1.0, 0.1, Temperature::Zero, 0.0).is_err());
    }

    #[test]
    fn regimes() {
        let r = derive_rates(&SystemParams::new(0.5, 1.0, 0.0, Temperature::Zero, 0.0).unwrap())
            .unwrap();
        assert_eq!(
            classify_regime(&r, 1.0, CRITICAL_TOLERANCE),
            Regime::Underdamped
        );

        let r = derive_rates(&fig_params(5.0, Temperature::Beta(10.0), 0.0)).unwrap();
        assert!((r.gamma_s / 4.0 - 1.266_959_137_265_760_6).abs() < 1e-13);
        assert_eq!(
            classify_regime(&r, 1.0, CRITICAL_TOLERANCE),
            Regime::Overdamped
        );
        assert_eq!(r.mu_s.re, 0.0);

        // γ_s = 4Ω exactly at zero temperature without squeezing when γ₀ = 4Ω.
        let r = derive_rates(&SystemParams::new(0.5, 1.0, 4.0, Temperature::Zero, 0.0).unwrap())
            .unwrap();
        assert_eq!(
            classify_regime(&r, 1.0, CRITICAL_TOLERANCE),
            Regime::Critical
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn temperature() -> impl Strategy<Value = Temperature> {
            prop_oneof![
                Just(Temperature::Zero),
                (-3.0f64..2.0).prop_map(|e| Temperature::Beta(10f64.powf(e))),
            ]
        }

        proptest! {
            #[test]
            fn mu_s_identity_and_shape(
                rr in 0.0f64..10.0,
                t in temperature(),
                s in 0.0f64..3.5,
                rabi in 0.1f64..5.0,
            ) {
                let p = SystemParams::from_ratio(0.5, rabi, rr, t, s).unwrap();
                let r = derive_rates(&p).unwrap();
                let mu2 = r.mu_s * r.mu_s;
                let lhs = mu2.re + (r.gamma_s / 4.0).powi(2);
                let scale = rabi * rabi + (r.gamma_s / 4.0).powi(2);
                prop_assert!((lhs - rabi * rabi).abs() <= 1e-13 * scale);
                prop_assert!(r.mu_s.re == 0.0 || r.mu_s.im == 0.0);
                prop_assert!(r.n >= r.n_th && r.n_th >= 0.0);
                prop_assert!(r.m_param <= 0.0);
                let again = derive_rates(&p).unwrap();
                prop_assert_eq!(r.gamma_s.to_bits(), again.gamma_s.to_bits());
                prop_assert_eq!(r.mu_s.im.to_bits(), again.mu_s.im.to_bits());
            }

            #[test]
            fn occupation_monotone(
                b1 in 1e-3f64..100.0, b2 in 1e-3f64..100.0,
                s1 in 0.0f64..3.5, s2 in 0.0f64..3.5,
            ) {
                let (hot, cold) = if b1 < b2 { (b1, b2) } else { (b2, b1) };
                let (lo, hi) = if s1 < s2 { (s1, s2) } else { (s2, s1) };
                let n = |b: f64, s: f64| {
                    SystemParams::from_ratio(0.5, 1.0, 0.1, Temperature::Beta(b), s)
                        .unwrap()
                        .effective_occupation()
                        .unwrap()
                };
                prop_assert!(n(hot, s1) >= n(cold, s1));
                prop_assert!(n(b1, hi) >= n(b1, lo));
            }
        }
    }
}
