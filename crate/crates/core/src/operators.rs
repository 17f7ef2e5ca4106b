//! Dense complex matrix algebra for small Hilbert spaces (dims 2-8).
//!
//! Everything here is a pure function over immutable values; matrices are
//! stored row-major as flat `Vec<Complex64>`. Dimensions in this library are
//! tiny, so no attempt is made at blocking or sparsity.

use std::fmt;
use std::ops::{Add, Index, Mul, Sub};

use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;

/// Maximum Jacobi sweeps before the eigensolver gives up.
const MAX_JACOBI_SWEEPS: usize = 64;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("matrix is not Hermitian: deviation {deviation:.3e} exceeds tolerance {tol:.3e}")]
    NonHermitian { deviation: f64, tol: f64 },
    #[error("Jacobi eigensolver failed to converge after {0} sweeps")]
    ConvergenceFailure(usize),
    #[error("non-finite entry at ({0}, {1})")]
    NonFiniteEntry(usize, usize),
}

/// Square complex matrix, row-major storage.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix(dim={})", self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| format!("{:+.4}{:+.4}i", self[(i, j)].re, self[(i, j)].im))
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "dim must be >= 1");
        Self {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, C64::new(1.0, 0.0));
        }
        m
    }

    /// Build from a flat row-major slice of length `dim * dim`.
    pub fn from_slice(dim: usize, entries: &[C64]) -> Self {
        assert_eq!(entries.len(), dim * dim, "entry count must be dim^2");
        Self {
            dim,
            data: entries.to_vec(),
        }
    }

    /// Build from real row-major entries.
    pub fn from_real(dim: usize, entries: &[f64]) -> Self {
        assert_eq!(entries.len(), dim * dim);
        Self {
            dim,
            data: entries.iter().map(|&x| C64::new(x, 0.0)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn check_finite(&self) -> Result<(), LinalgError> {
        for i in 0..self.dim {
            for j in 0..self.dim {
                let z = self.get(i, j);
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(LinalgError::NonFiniteEntry(i, j));
                }
            }
        }
        Ok(())
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let mut out = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Entrywise maximum modulus.
    pub fn max_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// max |A - A†| over entries.
    pub fn hermiticity_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                dev = dev.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        dev
    }

    /// (A + A†)/2.
    pub fn symmetrize(&self) -> Self {
        let mut out = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.set(i, j, 0.5 * (self.get(i, j) + self.get(j, i).conj()));
            }
        }
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    /// Kronecker product; output dim is `self.dim * other.dim`.
    pub fn tensor(&self, other: &Self) -> Self {
        let (da, db) = (self.dim, other.dim);
        let mut out = Self::zeros(da * db);
        for i in 0..da {
            for j in 0..da {
                let a = self.get(i, j);
                for k in 0..db {
                    for l in 0..db {
                        out.set(i * db + k, j * db + l, a * other.get(k, l));
                    }
                }
            }
        }
        out
    }

    fn check_same_dim(&self, other: &Self) -> Result<(), LinalgError> {
        if self.dim != other.dim {
            return Err(LinalgError::DimensionMismatch(self.dim, other.dim));
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in add");
        ComplexMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in sub");
        ComplexMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in mul");
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    let v = out.get(i, j) + a * rhs.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }
}

/// AB - BA.
pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    a.check_same_dim(b)?;
    Ok(&(a * b) - &(b * a))
}

/// AB + BA.
pub fn anticommutator(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    a.check_same_dim(b)?;
    Ok(&(a * b) + &(b * a))
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues are real and ascending; eigenvectors are the matching
/// orthonormal columns of `vectors`. Ties between degenerate eigenvalues are
/// broken arbitrarily.
#[derive(Clone, Debug)]
pub struct HermitianEigensystem {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEigensystem {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Sum_k p_k |v_k><v_k|.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.dim();
        let mut out = ComplexMatrix::zeros(n);
        for k in 0..n {
            let p = self.values[k];
            for i in 0..n {
                for j in 0..n {
                    let v = out.get(i, j)
                        + C64::new(p, 0.0) * self.vectors.get(i, k) * self.vectors.get(j, k).conj();
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// V† M V: express `m` in the eigenbasis.
    pub fn to_eigenbasis(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let v = &self.vectors;
        &(&v.dagger() * m) * v
    }

    /// V M V†: take a matrix expressed in the eigenbasis back.
    pub fn from_eigenbasis(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let v = &self.vectors;
        &(v * m) * &v.dagger()
    }
}

/// Default Hermiticity tolerance for [`eigh`].
pub fn default_herm_tol(a: &ComplexMatrix) -> f64 {
    1e-10 * a.dim() as f64 * a.max_norm().max(1.0)
}

/// Hermitian eigendecomposition via cyclic complex Jacobi rotations.
///
/// Input is symmetrized as (A+A†)/2 before decomposition; the Hermiticity
/// deviation must stay within `herm_tol`.
pub fn eigh(a: &ComplexMatrix, herm_tol: f64) -> Result<HermitianEigensystem, LinalgError> {
    a.check_finite()?;
    let dev = a.hermiticity_deviation();
    if dev > herm_tol {
        return Err(LinalgError::NonHermitian {
            deviation: dev,
            tol: herm_tol,
        });
    }
    let n = a.dim();
    let mut m = a.symmetrize();
    let mut v = ComplexMatrix::identity(n);

    let scale = m.max_norm().max(1.0);
    let off_tol = 1e-15 * scale * n as f64;

    let mut converged = false;
    for _ in 0..MAX_JACOBI_SWEEPS {
        let mut off: f64 = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m.get(p, q).norm());
            }
        }
        if off <= off_tol {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                jacobi_rotate(&mut m, &mut v, p, q, off_tol);
            }
        }
    }
    if !converged {
        // One last check: the final sweep may have finished the job.
        let mut off: f64 = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m.get(p, q).norm());
            }
        }
        if off > off_tol {
            return Err(LinalgError::ConvergenceFailure(MAX_JACOBI_SWEEPS));
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.get(i, i).re.total_cmp(&m.get(j, j).re));
    let values: Vec<f64> = order.iter().map(|&k| m.get(k, k).re).collect();
    let mut vectors = ComplexMatrix::zeros(n);
    for (col, &k) in order.iter().enumerate() {
        for row in 0..n {
            vectors.set(row, col, v.get(row, k));
        }
    }
    Ok(HermitianEigensystem { values, vectors })
}

/// Eliminate the (p, q) off-diagonal element of Hermitian `m` with a unitary
/// rotation, accumulating the rotation into `v`.
fn jacobi_rotate(m: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize, tol: f64) {
    let apq = m.get(p, q);
    let mag = apq.norm();
    if mag <= tol * 1e-3 {
        return;
    }
    let phase = apq / mag; // e^{i phi} with a_pq = |a_pq| e^{i phi}
    let app = m.get(p, p).re;
    let aqq = m.get(q, q).re;

    // tan(2 theta) = 2|a_pq| / (app - aqq), stable small-root form.
    let tau = (aqq - app) / (2.0 * mag);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    let n = m.dim();
    // Columns: M <- M J where J_pp = c, J_qp = -s e^{-i phi}, J_pq = s e^{i phi}, J_qq = c.
    for i in 0..n {
        let mip = m.get(i, p);
        let miq = m.get(i, q);
        m.set(i, p, mip * c - miq * s * phase.conj());
        m.set(i, q, mip * s * phase + miq * c);
    }
    // Rows: M <- J† M.
    for j in 0..n {
        let mpj = m.get(p, j);
        let mqj = m.get(q, j);
        m.set(p, j, mpj * c - mqj * s * phase);
        m.set(q, j, mpj * s * phase.conj() + mqj * c);
    }
    // Force exact zero and real diagonal on the rotated pair.
    m.set(p, q, C64::new(0.0, 0.0));
    m.set(q, p, C64::new(0.0, 0.0));
    let dpp = m.get(p, p).re;
    let dqq = m.get(q, q).re;
    m.set(p, p, C64::new(dpp, 0.0));
    m.set(q, q, C64::new(dqq, 0.0));
    for i in 0..n {
        let vip = v.get(i, p);
        let viq = v.get(i, q);
        v.set(i, p, vip * c - viq * s * phase.conj());
        v.set(i, q, vip * s * phase + viq * c);
    }
}

/// Convenience wrapper using [`default_herm_tol`].
pub fn eigh_default(a: &ComplexMatrix) -> Result<HermitianEigensystem, LinalgError> {
    eigh(a, default_herm_tol(a))
}

// Qubit basis convention: index 0 = |e>, index 1 = |g>, so sigma_z = diag(1, -1)
// and sigma_minus = |g><e| lowers the excited state.

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_real(2, &[0.0, 1.0, 1.0, 0.0])
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_slice(
        2,
        &[
            C64::new(0.0, 0.0),
            C64::new(0.0, -1.0),
            C64::new(0.0, 1.0),
            C64::new(0.0, 0.0),
        ],
    )
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_real(2, &[1.0, 0.0, 0.0, -1.0])
}

pub fn sigma_plus() -> ComplexMatrix {
    ComplexMatrix::from_real(2, &[0.0, 1.0, 0.0, 0.0])
}

pub fn sigma_minus() -> ComplexMatrix {
    ComplexMatrix::from_real(2, &[0.0, 0.0, 1.0, 0.0])
}
