//! Dense eigendecomposition of unitary matrices.
//!
//! Unitary matrices are normal, so the complex Schur form is diagonal up to
//! rounding and the Schur vectors are eigenvectors.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct UnitaryEigen {
    /// Eigenvalues in the order of the columns of `vectors`.
    pub values: Vec<Complex64>,
    /// Orthonormal eigenvectors, one per column.
    pub vectors: DMatrix<Complex64>,
}

impl UnitaryEigen {
    /// Eigenphases in (-pi, pi], same order as `values`.
    pub fn phases(&self) -> Vec<f64> {
        self.values.iter().map(|z| wrap_phase(z.arg())).collect()
    }

    pub fn vector(&self, j: usize) -> DVector<Complex64> {
        self.vectors.column(j).into_owned()
    }

    /// Frobenius norm of `m V - V diag(values)`.
    pub fn residual(&self, m: &DMatrix<Complex64>) -> f64 {
        let lam = DMatrix::from_diagonal(&DVector::from_vec(self.values.clone()));
        (m * &self.vectors - &self.vectors * lam).norm()
    }
}

/// Map a phase into (-pi, pi].
pub fn wrap_phase(phi: f64) -> f64 {
    use std::f64::consts::PI;
    let mut p = phi % (2.0 * PI);
    if p <= -PI {
        p += 2.0 * PI;
    } else if p > PI {
        p -= 2.0 * PI;
    }
    p
}

pub fn unitary_eigen(m: &DMatrix<Complex64>) -> Result<UnitaryEigen> {
    if !m.is_square() {
        return Err(Error::InvalidInput(format!("matrix is {}x{}", m.nrows(), m.ncols())));
    }
    let schur = nalgebra::linalg::Schur::try_new(m.clone(), 1e-15, 10_000 * m.nrows().max(1))
        .ok_or_else(|| Error::Diagnostic("complex Schur iteration did not converge".into()))?;
    let (q, t) = schur.unpack();
    let values = (0..t.nrows()).map(|j| t[(j, j)]).collect();
    Ok(UnitaryEigen { values, vectors: q })
}

/// Largest entry of `M^* M - I`.
pub fn unitarity_defect(m: &DMatrix<Complex64>) -> f64 {
    let g = m.adjoint() * m;
    let mut worst: f64 = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).norm());
        }
    }
    worst
}
