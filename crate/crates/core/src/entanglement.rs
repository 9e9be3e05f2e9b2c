//! Two-qubit concurrence.

use nalgebra::{SymmetricEigen, SVD};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{self, bare, ComplexMatrix, DensityTolerances, C64};

/// Two-qubit state with support on the main diagonal and antidiagonal only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XState {
    /// <00|ρ|00>
    pub a: f64,
    /// <10|ρ|10>
    pub b: f64,
    /// <01|ρ|01>
    pub c: f64,
    /// <11|ρ|11>
    pub d: f64,
    /// <00|ρ|11>
    pub w: C64,
    /// <10|ρ|01>
    pub z: C64,
}

pub const X_STATE_TOL: f64 = 1e-10;

impl XState {
    /// Reads the X entries of a bare-basis 4×4 matrix; entries off the X are ignored.
    pub fn from_density(rho: &ComplexMatrix) -> Result<Self> {
        if rho.shape() != (4, 4) {
            return Err(Error::dims("4x4", format!("{}x{}", rho.nrows(), rho.ncols())));
        }
        Ok(Self {
            a: rho[(bare::GG, bare::GG)].re,
            b: rho[(bare::EG, bare::EG)].re,
            c: rho[(bare::GE, bare::GE)].re,
            d: rho[(bare::EE, bare::EE)].re,
            w: rho[(bare::GG, bare::EE)],
            z: rho[(bare::EG, bare::GE)],
        })
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(4, 4);
        m[(bare::GG, bare::GG)] = hilbert::c(self.a);
        m[(bare::EG, bare::EG)] = hilbert::c(self.b);
        m[(bare::GE, bare::GE)] = hilbert::c(self.c);
        m[(bare::EE, bare::EE)] = hilbert::c(self.d);
        m[(bare::GG, bare::EE)] = self.w;
        m[(bare::EE, bare::GG)] = self.w.conj();
        m[(bare::EG, bare::GE)] = self.z;
        m[(bare::GE, bare::EG)] = self.z.conj();
        m
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let pops = [self.a, self.b, self.c, self.d];
        if pops.iter().any(|p| *p < -tol) {
            return Err(Error::InvalidDensity(format!("negative population in {pops:?}")));
        }
        let sum: f64 = pops.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(Error::InvalidDensity(format!("populations sum to {sum}")));
        }
        if self.w.norm_sqr() > self.a * self.d + tol {
            return Err(Error::InvalidDensity(format!(
                "|w|^2 = {:e} exceeds ad = {:e}",
                self.w.norm_sqr(),
                self.a * self.d
            )));
        }
        if self.z.norm_sqr() > self.b * self.c + tol {
            return Err(Error::InvalidDensity(format!(
                "|z|^2 = {:e} exceeds bc = {:e}",
                self.z.norm_sqr(),
                self.b * self.c
            )));
        }
        Ok(())
    }

    /// The two candidate values (C₁, C₂) = (2|w| − 2√(bc), 2|z| − 2√(ad)).
    pub fn branches(&self) -> (f64, f64) {
        let c1 = 2.0 * self.w.norm() - 2.0 * (self.b * self.c).max(0.0).sqrt();
        let c2 = 2.0 * self.z.norm() - 2.0 * (self.a * self.d).max(0.0).sqrt();
        (c1, c2)
    }

    /// max(C₁, C₂); negative values measure how deep inside the separable region the state is.
    pub fn margin(&self) -> f64 {
        let (c1, c2) = self.branches();
        c1.max(c2)
    }
}

/// Closed-form concurrence of an X state.
pub fn concurrence_x(x: &XState) -> Result<f64> {
    x.validate(X_STATE_TOL)?;
    Ok(x.margin().clamp(0.0, 1.0))
}

/// σ_y ⊗ σ_y.
pub fn spin_flip() -> ComplexMatrix {
    hilbert::kron(&hilbert::sigma_y(), &hilbert::sigma_y())
}

/// Wootters concurrence of an arbitrary two-qubit density matrix.
///
/// With ρ = B B† the square roots of the eigenvalues of ρ (σ_y⊗σ_y) ρ* (σ_y⊗σ_y)
/// are the singular values of B† (σ_y⊗σ_y) B*, which avoids a non-Hermitian eigensolve.
pub fn concurrence_general(rho: &ComplexMatrix) -> Result<f64> {
    if rho.shape() != (4, 4) {
        return Err(Error::dims("4x4", format!("{}x{}", rho.nrows(), rho.ncols())));
    }
    hilbert::validate_density(rho, &DensityTolerances::default())?;
    let herm = (rho + rho.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(herm);
    // Eigenvalues at roundoff level are zero; their square roots would otherwise leak ~1e-8.
    let floor = 4.0 * f64::EPSILON * eig.eigenvalues.max().max(0.0);
    let roots = eig.eigenvalues.map(|l| hilbert::c(if l > floor { l.sqrt() } else { 0.0 }));
    let b = &eig.eigenvectors * ComplexMatrix::from_diagonal(&roots);
    let tau = b.adjoint() * spin_flip() * b.conjugate();
    let mut s: Vec<f64> = SVD::new(tau, false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    Ok((s[0] - s[1] - s[2] - s[3]).clamp(0.0, 1.0))
}

/// Result of an X-form check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XFormCheck {
    pub is_x: bool,
    pub max_off_x: f64,
    /// (row, column) of the largest off-X element.
    pub max_at: (usize, usize),
}

pub fn is_x_form(rho: &ComplexMatrix, tol: f64) -> XFormCheck {
    let mut max_off_x = 0.0;
    let mut max_at = (0, 0);
    for i in 0..rho.nrows() {
        for j in 0..rho.ncols() {
            if i == j || i + j == 3 {
                continue;
            }
            let m = rho[(i, j)].norm();
            if m > max_off_x {
                max_off_x = m;
                max_at = (i, j);
            }
        }
    }
    XFormCheck {
        is_x: max_off_x <= tol,
        max_off_x,
        max_at,
    }
}
