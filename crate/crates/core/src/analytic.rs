//! Closed-form Bloch dynamics for θ = 0.
//!
//! The Bloch vector obeys `dv/dt = G v + m` with a 3×3 real generator `G`.
//! The closed-form propagator is evaluated in complex arithmetic so both the
//! underdamped (real μ_s) and overdamped (imaginary μ_s) regimes share one
//! code path, and every evaluation is cross-checked against the numerical
//! matrix exponential of `G t`.

use log::error;
use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oracle::DensityMatrix;
use crate::params::{
    classify_regime, derive_rates, DerivedRates, ParamsError, Regime, SystemParams,
    CRITICAL_TOLERANCE,
};

/// Entrywise agreement required between the closed form and `expm(G t)`.
pub const PROPAGATOR_TOLERANCE: f64 = 1e-10;
/// Largest imaginary part tolerated before truncating a closed-form entry.
pub const IMAGINARY_RESIDUE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error("negative evolution time {0}")]
    NegativeTime(f64),
    #[error("closed-form propagator deviates from expm(Gt) by {deviation:e} at t = {t}")]
    PropagatorMismatch { t: f64, deviation: f64 },
    #[error("closed-form propagator has imaginary residue {residue:e} at t = {t}")]
    ImaginaryResidue { t: f64, residue: f64 },
    #[error("density matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),
}

/// Expectation values (⟨σ₁⟩, ⟨σ₂⟩, ⟨σ₃⟩).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
}

impl BlochVector {
    pub const fn new(v1: f64, v2: f64, v3: f64) -> Self {
        BlochVector { v1, v2, v3 }
    }

    pub const fn ground() -> Self {
        BlochVector::new(0.0, 0.0, -1.0)
    }

    pub const fn excited() -> Self {
        BlochVector::new(0.0, 0.0, 1.0)
    }

    pub fn norm(&self) -> f64 {
        self.as_vector().norm()
    }

    pub fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(self.v1, self.v2, self.v3)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        BlochVector::new(v[0], v[1], v[2])
    }

    /// ⟨σ₊⟩ = (v₁ + i v₂)/2.
    pub fn sigma_plus(&self) -> Complex64 {
        Complex64::new(self.v1, self.v2) * 0.5
    }

    pub fn ground_probability(&self) -> f64 {
        0.5 * (1.0 - self.v3)
    }

    /// Sum of the off-diagonal moduli of the matching density matrix, 2|⟨σ₊⟩|.
    pub fn coherence(&self) -> f64 {
        self.v1.hypot(self.v2)
    }
}

/// Generator `G` and inhomogeneous term `m` of the Bloch equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorMatrix {
    pub matrix: Matrix3<f64>,
    pub inhomogeneity: Vector3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralData {
    pub lambda1: Complex64,
    pub lambda2: Complex64,
    pub lambda3: Complex64,
}

impl SpectralData {
    pub fn as_array(&self) -> [Complex64; 3] {
        [self.lambda1, self.lambda2, self.lambda3]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryState {
    pub bloch: BlochVector,
    pub sigma_plus: Complex64,
    pub excited_population: f64,
}

pub fn generator(rates: &DerivedRates, rabi: f64) -> GeneratorMatrix {
    let g0m = rates.gamma0 * rates.m_param;
    let half = 0.5 * rates.gamma;
    #[rustfmt::skip]
    let matrix = Matrix3::new(
        -half - g0m, 0.0,          0.0,
        0.0,         -half + g0m,  rabi,
        0.0,         -rabi,        -rates.gamma,
    );
    GeneratorMatrix {
        matrix,
        inhomogeneity: Vector3::new(0.0, 0.0, -rates.gamma0),
    }
}

/// Closed-form spectrum of the generator.
pub fn eigenvalues(rates: &DerivedRates) -> SpectralData {
    let g0m = rates.gamma0 * rates.m_param;
    let lambda1 = Complex64::new(-0.5 * rates.gamma - g0m, 0.0);
    let centre = Complex64::new(0.5 * g0m - 0.75 * rates.gamma, 0.0);
    let i_mu = Complex64::i() * rates.mu_s;
    SpectralData {
        lambda1,
        lambda2: centre + i_mu,
        lambda3: centre - i_mu,
    }
}

pub fn stationary_state(rates: &DerivedRates, rabi: f64) -> StationaryState {
    let (g, g0, m) = (rates.gamma, rates.gamma0, rates.m_param);
    let denom = g * g - 2.0 * g * g0 * m + 2.0 * rabi * rabi;
    let v3 = -g0 * (g - 2.0 * g0 * m) / denom;
    let sigma_plus = Complex64::new(0.0, -g0 * rabi / denom);
    let bloch = BlochVector::new(0.0, 2.0 * sigma_plus.im, v3);
    StationaryState {
        bloch,
        sigma_plus,
        excited_population: 0.5 * (1.0 + v3),
    }
}

/// Numerical matrix exponential of the generator.
pub fn expm_propagator(generator: &GeneratorMatrix, t: f64) -> Matrix3<f64> {
    (generator.matrix * t).exp()
}

/// e^{κt} sin(μt)/μ, with a series near μt = 0 so the critical point and the
/// overdamped branch need no special casing.
fn damped_sinc(spectrum: &SpectralData, mu: Complex64, t: f64) -> Complex64 {
    let z = mu * t;
    if z.norm() < 1e-3 {
        let z2 = z * z;
        let series = 1.0 - z2 / 6.0 + z2 * z2 / 120.0 - z2 * z2 * z2 / 5040.0;
        let centre = 0.5 * (spectrum.lambda2 + spectrum.lambda3);
        (centre * t).exp() * series * t
    } else {
        ((spectrum.lambda2 * t).exp() - (spectrum.lambda3 * t).exp()) / (2.0 * Complex64::i() * mu)
    }
}

/// Closed-form propagator entries in complex arithmetic, before truncation.
pub fn closed_form_propagator_complex(
    rates: &DerivedRates,
    rabi: f64,
    t: f64,
) -> Matrix3<Complex64> {
    let spectrum = eigenvalues(rates);
    let damped_cos = 0.5 * ((spectrum.lambda2 * t).exp() + (spectrum.lambda3 * t).exp());
    let sn = damped_sinc(&spectrum, rates.mu_s, t);
    let skew = 0.25 * rates.gamma_s;
    let zero = Complex64::new(0.0, 0.0);
    #[rustfmt::skip]
    let p = Matrix3::new(
        (spectrum.lambda1 * t).exp(), zero,                   zero,
        zero,                         damped_cos + skew * sn, rabi * sn,
        zero,                         -rabi * sn,             damped_cos - skew * sn,
    );
    p
}

/// Bloch dynamics for one parameter set.
#[derive(Debug, Clone)]
pub struct BlochDynamics {
    params: SystemParams,
    rates: DerivedRates,
    generator: GeneratorMatrix,
    stationary: StationaryState,
}

impl BlochDynamics {
    pub fn new(params: &SystemParams) -> Result<Self, AnalyticError> {
        let rates = derive_rates(params)?;
        let generator = generator(&rates, params.rabi);
        let stationary = stationary_state(&rates, params.rabi);
        Ok(BlochDynamics {
            params: *params,
            rates,
            generator,
            stationary,
        })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn rates(&self) -> &DerivedRates {
        &self.rates
    }

    pub fn rabi(&self) -> f64 {
        self.params.rabi
    }

    pub fn generator(&self) -> &GeneratorMatrix {
        &self.generator
    }

    pub fn stationary(&self) -> &StationaryState {
        &self.stationary
    }

    pub fn spectrum(&self) -> SpectralData {
        eigenvalues(&self.rates)
    }

    pub fn regime(&self) -> Regime {
        classify_regime(
            &self.rates,
            self.params.rabi,
            CRITICAL_TOLERANCE * self.params.rabi,
        )
    }

    /// P(t) with Σ(t) = P(t) Σ(0), Σ = v − v_s.
    ///
    /// Fails if any entry keeps an imaginary residue or deviates from
    /// `expm(G t)` by more than [`PROPAGATOR_TOLERANCE`].
    pub fn propagator(&self, t: f64) -> Result<Matrix3<f64>, AnalyticError> {
        if t < 0.0 {
            return Err(AnalyticError::NegativeTime(t));
        }
        let complex = closed_form_propagator_complex(&self.rates, self.params.rabi, t);
        let residue = complex.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        if !(residue < IMAGINARY_RESIDUE_TOLERANCE) {
            error!("imaginary residue {residue:e} in closed-form propagator at t = {t}");
            return Err(AnalyticError::ImaginaryResidue { t, residue });
        }
        let closed = complex.map(|z| z.re);
        let reference = expm_propagator(&self.generator, t);
        let deviation = (closed - reference).amax();
        if !(deviation < PROPAGATOR_TOLERANCE) {
            error!("closed-form propagator deviates from expm by {deviation:e} at t = {t}");
            return Err(AnalyticError::PropagatorMismatch { t, deviation });
        }
        Ok(closed)
    }

    pub fn evolve(&self, initial: &BlochVector, t: f64) -> Result<BlochVector, AnalyticError> {
        let vs = self.stationary.bloch.as_vector();
        let p = self.propagator(t)?;
        Ok(BlochVector::from_vector(
            &(p * (initial.as_vector() - vs) + vs),
        ))
    }

    pub fn ground_probability(&self, initial: &BlochVector, t: f64) -> Result<f64, AnalyticError> {
        Ok(self.evolve(initial, t)?.ground_probability())
    }

    /// ⟨σ₊(t)⟩ for the given initial state.
    pub fn sigma_plus(&self, initial: &BlochVector, t: f64) -> Result<Complex64, AnalyticError> {
        Ok(self.evolve(initial, t)?.sigma_plus())
    }
}

/// C = Σ_{i≠j} |ρ_ij|.
pub fn coherence(rho: &DensityMatrix) -> Result<f64, AnalyticError> {
    let herm = rho.hermiticity_error();
    if herm > crate::oracle::HERMITICITY_TOLERANCE {
        return Err(AnalyticError::NotHermitian(herm));
    }
    let m = rho.matrix();
    Ok(m[(0, 1)].norm() + m[(1, 0)].norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Temperature;
    use std::f64::consts::PI;

    fn dynamics(ratio_r: f64, t: Temperature, s: f64) -> BlochDynamics {
        BlochDynamics::new(&SystemParams::from_ratio(0.5, 1.0, ratio_r, t, s).unwrap()).unwrap()
    }

    fn max_abs(m: Matrix3<f64>) -> f64 {
        m.amax()
    }

    #[test]
    fn closed_system_generator() {
        let d = dynamics(0.0, Temperature::Zero, 0.0);
        let g = d.generator();
        let expected = Matrix3::new(0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, -1.0, 0.0);
        assert_eq!(g.matrix, expected);
        assert_eq!(g.inhomogeneity, Vector3::zeros());
    }

    #[test]
    fn thermal_generator_entries() {
        let d = dynamics(0.05, Temperature::Beta(10.0), 0.0);
        let g = d.generator().matrix;
        assert!((g[(0, 0)] + 0.025_339_182_745_315_21).abs() < 1e-15);
        assert!((g[(1, 1)] + 0.025_339_182_745_315_21).abs() < 1e-15);
        assert!((g[(2, 2)] + 0.050_678_365_490_630_42).abs() < 1e-15);
    }

    #[test]
    fn spectrum_values() {
        let s = dynamics(0.0, Temperature::Zero, 0.0).spectrum();
        assert_eq!(s.lambda1, Complex64::new(0.0, 0.0));
        assert!((s.lambda2 - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        assert!((s.lambda3 - Complex64::new(0.0, -1.0)).norm() < 1e-15);

        let d = dynamics(0.05, Temperature::Beta(10.0), 0.0);
        let s = d.spectrum();
        assert!((s.lambda1.re + 0.025_339_182_745_315_21).abs() < 1e-15);
        assert!((s.lambda2.re + 0.038_008_774_117_972_82).abs() < 1e-15);
        assert_eq!(s.lambda2, s.lambda3.conj());
        let sum: Complex64 = s.as_array().iter().sum();
        assert!((sum.re - d.generator().matrix.trace()).abs() < 1e-14);
        assert!(sum.im.abs() < 1e-15);
    }

    #[test]
    fn spectrum_matches_numerical_eigensolver() {
        for (r, t, s) in [
            (0.05, Temperature::Beta(10.0), 0.0),
            (5.0, Temperature::Beta(10.0), 0.0),
            (0.3, Temperature::Zero, 1.2),
            (2.0, Temperature::Beta(0.5), 0.4),
        ] {
            let d = dynamics(r, t, s);
            let mut numeric: Vec<Complex64> = d
                .generator()
                .matrix
                .complex_eigenvalues()
                .iter()
                .copied()
                .collect();
            for closed in d.spectrum().as_array() {
                let (idx, dist) = numeric
                    .iter()
                    .enumerate()
                    .map(|(i, z)| (i, (z - closed).norm()))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .unwrap();
                assert!(dist < 1e-12, "eigenvalue {closed} off by {dist:e}");
                numeric.remove(idx);
            }
        }
    }

    #[test]
    fn stationary_limits() {
        // strong driving: p_e -> 1/2, sigma_+ -> -i gamma0 / 2 Omega
        let d = BlochDynamics::new(
            &SystemParams::new(0.5, 1e4, 1e-2, Temperature::Beta(10.0), 0.0).unwrap(),
        )
        .unwrap();
        let st = d.stationary();
        assert!((st.excited_population - 0.5).abs() < 1e-8);
        let expected = Complex64::new(0.0, -1e-2 / 2e4);
        assert!((st.sigma_plus - expected).norm() < 1e-12);

        // weak driving: thermal populations
        let d = BlochDynamics::new(
            &SystemParams::new(0.5, 1e-7, 0.05, Temperature::Beta(2.0), 0.0).unwrap(),
        )
        .unwrap();
        let n_th = d.rates().n_th;
        assert!((d.stationary().bloch.v3 + 1.0 / (2.0 * n_th + 1.0)).abs() < 1e-10);

        let d = dynamics(0.0, Temperature::Beta(3.0), 1.0);
        assert_eq!(d.stationary().bloch.v3, 0.0);
        assert_eq!(d.stationary().sigma_plus.norm(), 0.0);
    }

    #[test]
    fn stationary_is_fixed_point() {
        for (r, t, s) in [
            (0.05, Temperature::Beta(10.0), 0.0),
            (5.0, Temperature::Zero, 3.5),
            (10.0, Temperature::Beta(1e-3), 0.0),
        ] {
            let d = dynamics(r, t, s);
            let g = d.generator();
            let res = g.matrix * d.stationary().bloch.as_vector() + g.inhomogeneity;
            let scale = g.matrix.amax().max(1.0);
            assert!(res.amax() < 1e-12 * scale, "residual {:e}", res.amax());
        }
    }

    #[test]
    fn propagator_identity_and_rotation() {
        let d = dynamics(0.05, Temperature::Beta(10.0), 0.0);
        assert!(max_abs(d.propagator(0.0).unwrap() - Matrix3::identity()) < 1e-15);

        let d = dynamics(0.0, Temperature::Zero, 0.0);
        let p = d.propagator(PI / 2.0).unwrap();
        assert!((p[(1, 2)] - 1.0).abs() < 1e-12);
        assert!(p[(2, 2)].abs() < 1e-12);
        assert!(matches!(
            d.propagator(-1.0),
            Err(AnalyticError::NegativeTime(_))
        ));
    }

    #[test]
    fn near_critical_propagator_matches_expm() {
        // gamma_s / 4 = Omega at zero temperature with gamma0 = 4 Omega
        for g0 in [4.0, 4.0 + 1e-9, 4.0 - 1e-7, 4.01] {
            let p = SystemParams::new(0.5, 1.0, g0, Temperature::Zero, 0.0).unwrap();
            let d = BlochDynamics::new(&p).unwrap();
            for t in [0.0, 1e-4, 0.3, 2.0, 15.0] {
                d.propagator(t).unwrap();
            }
        }
    }

    #[test]
    fn rabi_flop() {
        let d = dynamics(0.0, Temperature::Zero, 0.0);
        let v = d.evolve(&BlochVector::ground(), 0.0).unwrap();
        assert_eq!(v, BlochVector::ground());
        let v = d.evolve(&BlochVector::ground(), PI).unwrap();
        assert!((v.v3 - 1.0).abs() < 1e-12);
        for t in [0.3, 1.1, 2.5, 7.0] {
            let pg = d.ground_probability(&BlochVector::ground(), t).unwrap();
            assert!((pg - (0.5 * t).cos().powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn relaxes_to_stationary() {
        let d = dynamics(0.05, Temperature::Beta(10.0), 0.0);
        let t = 40.0 / d.rates().gamma_s;
        let v = d.evolve(&BlochVector::ground(), t).unwrap();
        let vs = d.stationary().bloch;
        assert!((v.as_vector() - vs.as_vector()).amax() < 1e-8);
    }

    #[test]
    fn overdamped_survival_is_monotone() {
        let d = dynamics(5.0, Temperature::Beta(10.0), 0.0);
        assert_eq!(d.regime(), Regime::Overdamped);
        let mut prev = 1.0;
        for i in 1..=500 {
            let pg = d
                .ground_probability(&BlochVector::ground(), i as f64 * 0.05)
                .unwrap();
            assert!(pg <= prev + 1e-15);
            prev = pg;
        }
        let pg_s = 1.0 - d.stationary().excited_population;
        assert!((prev - pg_s).abs() < 1e-8);
    }

    #[test]
    fn coherence_of_density_matrices() {
        let diag = DensityMatrix::from_bloch(&BlochVector::new(0.0, 0.0, 0.4));
        assert_eq!(coherence(&diag).unwrap(), 0.0);
        let plus = DensityMatrix::from_bloch(&BlochVector::new(1.0, 0.0, 0.0));
        assert!((coherence(&plus).unwrap() - 1.0).abs() < 1e-15);

        let p = SystemParams::new(0.5, 1e4, 1e-2, Temperature::Beta(10.0), 0.0).unwrap();
        let d = BlochDynamics::new(&p).unwrap();
        let rho = DensityMatrix::from_bloch(&d.stationary().bloch);
        assert!((coherence(&rho).unwrap() - 1e-2 / 1e4).abs() < 1e-12);

        let mut m = *plus.matrix();
        m[(0, 1)] += Complex64::new(0.1, 0.0);
        let bad = DensityMatrix::from_matrix_unchecked(m);
        assert!(matches!(
            coherence(&bad),
            Err(AnalyticError::NotHermitian(_))
        ));
    }
}
