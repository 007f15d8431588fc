use nalgebra::Matrix2;
use num_complex::Complex64;

use super::{OracleError, HERMITICITY_TOLERANCE, POSITIVITY_TOLERANCE, TRACE_TOLERANCE};
use crate::analytic::BlochVector;

/// 2×2 density matrix in the ordered basis (|e⟩, |g⟩).
///
/// With this ordering `ρ = ½(I + v·σ)` has `ρ_ee = (1 + v₃)/2` in the top-left
/// corner, `⟨σ₋⟩ = ρ₀₁` and `⟨σ₊⟩ = ρ₁₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(Matrix2<Complex64>);

const fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

impl DensityMatrix {
    /// Validated constructor.
    pub fn new(matrix: Matrix2<Complex64>) -> Result<Self, OracleError> {
        let rho = DensityMatrix(matrix);
        rho.check_physical(0.0)?;
        Ok(rho)
    }

    pub fn from_matrix_unchecked(matrix: Matrix2<Complex64>) -> Self {
        DensityMatrix(matrix)
    }

    pub fn ground() -> Self {
        DensityMatrix(Matrix2::new(c(0.0), c(0.0), c(0.0), c(1.0)))
    }

    pub fn excited() -> Self {
        DensityMatrix(Matrix2::new(c(1.0), c(0.0), c(0.0), c(0.0)))
    }

    pub fn from_bloch(v: &BlochVector) -> Self {
        let minus = Complex64::new(v.v1, -v.v2) * 0.5;
        DensityMatrix(Matrix2::new(
            c(0.5 * (1.0 + v.v3)),
            minus,
            minus.conj(),
            c(0.5 * (1.0 - v.v3)),
        ))
    }

    pub fn to_bloch(&self) -> BlochVector {
        let m = &self.0;
        BlochVector::new(
            2.0 * m[(1, 0)].re,
            2.0 * m[(1, 0)].im,
            m[(0, 0)].re - m[(1, 1)].re,
        )
    }

    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix2<Complex64> {
        self.0
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn ground_probability(&self) -> f64 {
        self.0[(1, 1)].re
    }

    pub fn excited_probability(&self) -> f64 {
        self.0[(0, 0)].re
    }

    /// Largest entry of |ρ − ρ†|.
    pub fn hermiticity_error(&self) -> f64 {
        (self.0 - self.0.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let m = &self.0;
        let a = m[(0, 0)].re;
        let d = m[(1, 1)].re;
        let b = 0.5 * (m[(0, 1)] + m[(1, 0)].conj());
        let half_gap = 0.5 * (a - d);
        0.5 * (a + d) - half_gap.hypot(b.norm())
    }

    /// Checks trace, Hermiticity and positivity. `slack` widens every bound,
    /// which lets renormalized measurement branches be checked with the same
    /// code.
    pub fn check_physical(&self, slack: f64) -> Result<(), OracleError> {
        let tr = self.trace();
        let trace_err = (tr - c(1.0)).norm();
        if !(trace_err <= TRACE_TOLERANCE + slack) {
            return Err(OracleError::Physicality(format!(
                "trace deviates from 1 by {trace_err:e}"
            )));
        }
        let herm = self.hermiticity_error();
        if !(herm <= HERMITICITY_TOLERANCE + slack) {
            return Err(OracleError::Physicality(format!(
                "Hermiticity error {herm:e}"
            )));
        }
        let min_eig = self.min_eigenvalue();
        if !(min_eig >= -POSITIVITY_TOLERANCE - slack) {
            return Err(OracleError::Physicality(format!(
                "negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(())
    }
}
