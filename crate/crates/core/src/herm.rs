//! Hermitian operator algebra.
//!
//! All operators share one real vectorization: the row-concatenation of
//! `Re(A) + Im(A)`. It is an isometry between the Hilbert–Schmidt inner
//! product and the Euclidean one, `v(A)·v(B) = tr(AB)`.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative tolerance (against the largest entry) accepted on construction.
pub const HERMITICITY_TOL: f64 = 1e-12;

/// A `d × d` complex Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermOp {
    mat: DMatrix<Complex64>,
}

/// Real vectorization of a Hermitian operator.
#[derive(Debug, Clone, PartialEq)]
pub struct VecRep {
    pub dim: usize,
    pub coords: Vec<f64>,
}

/// Hilbert–Schmidt, spectral and trace norms of an operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub hs: f64,
    pub spectral: f64,
    pub trace: f64,
}

/// Eigenvalues in ascending order with the matching unitary eigenbasis.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: DMatrix<Complex64>,
}

impl HermOp {
    /// Validates Hermiticity up to [`HERMITICITY_TOL`] relative to the largest
    /// entry, then stores the exactly symmetrized matrix.
    pub fn new(mat: DMatrix<Complex64>) -> Result<Self> {
        let (r, c) = mat.shape();
        if r != c {
            return Err(Error::NotSquare(r, c));
        }
        if r == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        let scale = mat.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
        let mut deviation = 0.0_f64;
        for i in 0..r {
            for j in i..r {
                deviation = deviation.max((mat[(i, j)] - mat[(j, i)].conj()).norm());
            }
        }
        let tolerance = HERMITICITY_TOL * scale.max(f64::MIN_POSITIVE);
        if deviation > tolerance {
            return Err(Error::NotHermitian {
                deviation,
                tolerance,
            });
        }
        Ok(Self::symmetrized(mat))
    }

    pub(crate) fn symmetrized(mat: DMatrix<Complex64>) -> Self {
        let adj = mat.adjoint();
        Self {
            mat: (mat + adj) * Complex64::new(0.5, 0.0),
        }
    }

    /// Wraps a matrix the caller already knows to be Hermitian.
    #[cfg(test)]
    pub(crate) fn from_matrix_unchecked(mat: DMatrix<Complex64>) -> Self {
        debug_assert!(mat.is_square());
        Self { mat }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: DMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: DMatrix::zeros(dim, dim),
        }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let d = values.len();
        let mut mat = DMatrix::zeros(d, d);
        for (i, v) in values.iter().enumerate() {
            mat[(i, i)] = Complex64::new(*v, 0.0);
        }
        Self { mat }
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) ket.
    pub fn projector(ket: &DVector<Complex64>) -> Self {
        Self {
            mat: ket * ket.adjoint(),
        }
    }

    /// `Σ_i λ_i |v_i⟩⟨v_i|` for the columns of `vectors`.
    pub fn from_spectrum(values: &[f64], vectors: &DMatrix<Complex64>) -> Self {
        let d = vectors.nrows();
        let mut scaled = vectors.clone();
        for (j, lam) in values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(*lam);
        }
        Self::symmetrized(scaled * vectors.adjoint()).with_dim_check(d)
    }

    fn with_dim_check(self, d: usize) -> Self {
        debug_assert_eq!(self.mat.nrows(), d);
        self
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.mat
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.mat[(i, i)].re).sum()
    }

    /// `tr(AB)` for Hermitian `A`, `B`.
    pub fn inner(&self, other: &HermOp) -> f64 {
        self.mat
            .iter()
            .zip(other.mat.iter())
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum()
    }

    pub fn hs_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn eigh(&self) -> Eigh {
        if self.dim() == 1 {
            return Eigh {
                values: vec![self.mat[(0, 0)].re],
                vectors: DMatrix::identity(1, 1),
            };
        }
        let eig = SymmetricEigen::new(self.mat.clone());
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(self.dim(), self.dim(), |r, c| {
            eig.eigenvectors[(r, order[c])]
        });
        Eigh { values, vectors }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigh().values
    }

    pub fn norms(&self) -> Norms {
        let ev = self.eigenvalues();
        Norms {
            hs: self.hs_norm(),
            spectral: ev.iter().map(|x| x.abs()).fold(0.0, f64::max),
            trace: ev.iter().map(|x| x.abs()).sum(),
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Hilbert–Schmidt-nearest positive semidefinite operator.
    pub fn psd_project(&self) -> HermOp {
        let Eigh { values, vectors } = self.eigh();
        if values[0] >= 0.0 {
            return self.clone();
        }
        let clipped: Vec<f64> = values.iter().map(|v| v.max(0.0)).collect();
        HermOp::from_spectrum(&clipped, &vectors)
    }

    pub fn scale(&self, s: f64) -> HermOp {
        HermOp {
            mat: &self.mat * Complex64::new(s, 0.0),
        }
    }

    pub fn kron(&self, other: &HermOp) -> HermOp {
        HermOp {
            mat: self.mat.kronecker(&other.mat),
        }
    }

    /// `self + s·other`.
    pub fn add_scaled(&self, other: &HermOp, s: f64) -> HermOp {
        self + &other.scale(s)
    }

    /// Adds `s·𝟙`.
    pub fn shift(&self, s: f64) -> HermOp {
        let mut mat = self.mat.clone();
        for i in 0..self.dim() {
            mat[(i, i)].re += s;
        }
        HermOp { mat }
    }

    /// Partial transpose on the qubits selected by `mask`, where bit `k`
    /// of the mask is qubit `k` counted from the most significant position
    /// of the computational-basis index.
    pub fn partial_transpose(&self, qubits: usize, mask: usize) -> HermOp {
        let d = self.dim();
        debug_assert_eq!(d, 1 << qubits);
        let mut bits = 0usize;
        for k in 0..qubits {
            if mask >> k & 1 == 1 {
                bits |= 1 << (qubits - 1 - k);
            }
        }
        let mut out = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let ii = (i & !bits) | (j & bits);
                let jj = (j & !bits) | (i & bits);
                out[(ii, jj)] = self.mat[(i, j)];
            }
        }
        HermOp { mat: out }
    }

    pub fn max_abs_diff(&self, other: &HermOp) -> f64 {
        (&self.mat - &other.mat)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

impl Add for &HermOp {
    type Output = HermOp;
    fn add(self, rhs: &HermOp) -> HermOp {
        HermOp {
            mat: &self.mat + &rhs.mat,
        }
    }
}

impl Sub for &HermOp {
    type Output = HermOp;
    fn sub(self, rhs: &HermOp) -> HermOp {
        HermOp {
            mat: &self.mat - &rhs.mat,
        }
    }
}

impl Mul<f64> for &HermOp {
    type Output = HermOp;
    fn mul(self, rhs: f64) -> HermOp {
        self.scale(rhs)
    }
}

/// Row-concatenation of `Re(A) + Im(A)`.
pub fn vectorize(a: &HermOp) -> VecRep {
    let d = a.dim();
    let mut coords = vec![0.0; d * d];
    vectorize_into(a, &mut coords);
    VecRep { dim: d, coords }
}

pub(crate) fn vectorize_into(a: &HermOp, out: &mut [f64]) {
    let d = a.dim();
    for i in 0..d {
        for j in 0..d {
            let z = a.mat[(i, j)];
            out[i * d + j] = z.re + z.im;
        }
    }
}

/// Inverse of [`vectorize`]: with `V` the row-major reshaping of the
/// coordinates, returns `½(V+Vᵀ) + (i/2)(V−Vᵀ)`.
pub fn unvectorize(x: &VecRep) -> Result<HermOp> {
    let d = x.dim;
    if d == 0 || d * d != x.coords.len() {
        return Err(Error::NotSquareLength(x.coords.len()));
    }
    Ok(unvectorize_slice(&x.coords, d))
}

pub(crate) fn unvectorize_slice(coords: &[f64], d: usize) -> HermOp {
    let mat = DMatrix::from_fn(d, d, |i, j| {
        let vij = coords[i * d + j];
        let vji = coords[j * d + i];
        Complex64::new(0.5 * (vij + vji), 0.5 * (vij - vji))
    });
    HermOp { mat }
}

/// Builds a [`VecRep`] from raw coordinates, inferring the dimension.
pub fn vec_rep(coords: Vec<f64>) -> Result<VecRep> {
    let n = coords.len();
    let d = (n as f64).sqrt().round() as usize;
    if d == 0 || d * d != n {
        return Err(Error::NotSquareLength(n));
    }
    Ok(VecRep { dim: d, coords })
}

impl VecRep {
    pub fn dot(&self, other: &VecRep) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a * b)
            .sum()
    }
}

/// The single-qubit Pauli matrices `σ_0 = 𝟙, σ_1 = X, σ_2 = Y, σ_3 = Z`.
pub fn pauli(index: usize) -> HermOp {
    let z = Complex64::new(0.0, 0.0);
    let o = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let m = match index {
        0 => [o, z, z, o],
        1 => [z, o, o, z],
        2 => [z, -i, i, z],
        3 => [o, z, z, -o],
        _ => panic!("Pauli index {index} out of range"),
    };
    HermOp {
        mat: DMatrix::from_row_slice(2, 2, &m),
    }
}

/// Tensor product `σ_{μ_1} ⊗ … ⊗ σ_{μ_q}`.
pub fn pauli_string(indices: &[usize]) -> HermOp {
    indices
        .iter()
        .fold(HermOp::identity(1), |acc, &k| acc.kron(&pauli(k)))
}

/// Swap operator on `C^d ⊗ C^d`.
pub fn swap(d: usize) -> HermOp {
    let mut mat = DMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            mat[(i * d + j, j * d + i)] = Complex64::new(1.0, 0.0);
        }
    }
    HermOp { mat }
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    pub fn random_herm<R: Rng>(rng: &mut R, d: usize) -> HermOp {
        let g = DMatrix::from_fn(d, d, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        HermOp::symmetrized(g)
    }
}
