//! Small density matrices for reduced states of a few qubits.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    rho: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn from_matrix(n: usize, rho: DMatrix<C64>) -> Result<Self> {
        let dim = 1usize << n;
        if rho.nrows() != dim || rho.ncols() != dim {
            return Err(Error::DimensionMismatch(dim, rho.nrows()));
        }
        Ok(DensityMatrix { n, rho })
    }

    /// `|ψ⟩⟨ψ|` for a normalized amplitude vector.
    pub fn from_pure(n: usize, amps: &[C64]) -> Result<Self> {
        let dim = 1usize << n;
        if amps.len() != dim {
            return Err(Error::DimensionMismatch(dim, amps.len()));
        }
        let rho = DMatrix::from_fn(dim, dim, |i, j| amps[i] * amps[j].conj());
        Ok(DensityMatrix { n, rho })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.rho
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.rho[(i, j)]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rho.nrows()).map(|i| self.rho[(i, i)].re).collect()
    }

    pub fn trace(&self) -> C64 {
        self.rho.trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.rho * &self.rho).trace().re
    }

    /// `(1 - w) self + w other`.
    pub fn mix(&self, other: &DensityMatrix, w: f64) -> Result<DensityMatrix> {
        if other.n != self.n {
            return Err(Error::DimensionMismatch(self.n, other.n));
        }
        Ok(DensityMatrix { n: self.n, rho: self.rho.scale(1.0 - w) + other.rho.scale(w) })
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.rho - self.rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let herm = (&self.rho + self.rho.adjoint()).scale(0.5);
        herm.symmetric_eigenvalues().iter().copied().collect()
    }

    /// Hermitian, unit trace and positive semidefinite within `tol`.
    pub fn is_valid_state(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
            && (self.trace() - C64::new(1.0, 0.0)).norm() <= tol
            && self.eigenvalues().iter().all(|&l| l >= -tol)
    }

    /// `½ ‖ρ - σ‖₁`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if other.n != self.n {
            return Err(Error::DimensionMismatch(self.n, other.n));
        }
        let diff = DensityMatrix { n: self.n, rho: &self.rho - &other.rho };
        Ok(0.5 * diff.eigenvalues().iter().map(|l| l.abs()).sum::<f64>())
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn fidelity_with_pure(&self, amps: &[C64]) -> Result<f64> {
        if amps.len() != self.rho.nrows() {
            return Err(Error::DimensionMismatch(self.rho.nrows(), amps.len()));
        }
        let v = nalgebra::DVector::from_column_slice(amps);
        Ok((v.adjoint() * &self.rho * &v)[(0, 0)].re)
    }
}
