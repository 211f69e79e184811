//! Small dense complex linear algebra.
//!
//! Everything in this crate lives in Hilbert spaces of at most three qubits,
//! so matrices are stored as flat row-major `Vec<C64>` of dimension at most 8.
//! Multi-wire operators use the convention that the left Kronecker factor is
//! the most-significant wire (wire 0).

mod eigen;

pub use eigen::{general_eigvals, HermitianEig};

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const MAX_DIM: usize = 8;

/// Hermiticity tolerance.
pub const TOL_HERMITIAN: f64 = 1e-10;
/// Unitarity tolerance.
pub const TOL_UNITARY: f64 = 1e-10;
/// Eigenpair residual tolerance.
pub const TOL_EIGEN: f64 = 1e-9;
/// Eigenvalues in `[-TOL_PSD, 0)` are clamped to zero.
pub const TOL_PSD: f64 = 1e-9;
/// Normalization tolerance for state vectors.
pub const TOL_NORM: f64 = 1e-10;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Dense square complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension {dim} out of range");
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_vec(dim: usize, data: Vec<C64>) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::UnsupportedDimension(dim));
        }
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                left: dim * dim,
                right: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows<const N: usize>(rows: [[C64; N]; N]) -> Self {
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::from_vec(N, data).expect("static dimension within range")
    }

    pub fn from_real_rows<const N: usize>(rows: [[f64; N]; N]) -> Self {
        let data = rows
            .iter()
            .flat_map(|r| r.iter().map(|&x| c(x, 0.0)))
            .collect();
        Self::from_vec(N, data).expect("static dimension within range")
    }

    pub fn diag(values: &[C64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn diag_real(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = c(v, 0.0);
        }
        m
    }

    /// Outer product `|a><b|`.
    pub fn outer(a: &StateVector, b: &StateVector) -> Self {
        assert_eq!(a.dim(), b.dim());
        let n = a.dim();
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = a[i] * b[j].conj();
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> StateVector {
        StateVector::new((0..self.dim).map(|i| self[(i, j)]).collect())
    }

    pub fn set_column(&mut self, j: usize, v: &StateVector) {
        assert_eq!(v.dim(), self.dim);
        for i in 0..self.dim {
            self[(i, j)] = v[i];
        }
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let n = self.dim;
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(j, i)] = self[(i, j)];
            }
        }
        m
    }

    pub fn conj(&self) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Checked matrix product.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        Ok(out)
    }

    /// Kronecker product; `self` acts on the more significant wires.
    pub fn kron(&self, other: &Self) -> Result<Self> {
        let n = self.dim * other.dim;
        if n > MAX_DIM {
            return Err(Error::UnsupportedDimension(n));
        }
        let (p, q) = (self.dim, other.dim);
        let mut out = Self::zeros(n);
        for i1 in 0..p {
            for j1 in 0..p {
                let a = self[(i1, j1)];
                for i2 in 0..q {
                    for j2 in 0..q {
                        out[(i1 * q + i2, j1 * q + j2)] = a * other[(i2, j2)];
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        if self.dim != v.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: v.dim(),
            });
        }
        let n = self.dim;
        Ok(StateVector::new(
            (0..n)
                .map(|i| (0..n).map(|j| self.data[i * n + j] * v[j]).sum())
                .collect(),
        ))
    }

    /// Spectral norm of `M - M^dagger`.
    pub fn hermitian_defect(&self) -> f64 {
        (self - &self.adjoint()).two_norm()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_defect() < tol
    }

    /// Spectral norm of `U^dagger U - I`.
    pub fn unitarity_defect(&self) -> f64 {
        (&(&self.adjoint() * self) - &Self::identity(self.dim)).two_norm()
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() < tol
    }

    /// Largest singular value, `sqrt(lambda_max(A^dagger A))`.
    pub fn two_norm(&self) -> f64 {
        let gram = &self.adjoint() * self;
        let eig = eigen::jacobi(&gram.hermitian_part());
        eig.values.last().copied().unwrap_or(0.0).max(0.0).sqrt()
    }

    /// `(M + M^dagger)/2`.
    pub fn hermitian_part(&self) -> Self {
        (self + &self.adjoint()).scale_real(0.5)
    }

    /// Eigen-decomposition of a Hermitian matrix with ascending eigenvalues.
    pub fn hermitian_eig(&self) -> Result<HermitianEig> {
        let defect = self.hermitian_defect();
        if defect >= TOL_HERMITIAN * self.max_abs().max(1.0) {
            return Err(Error::NotHermitian { defect });
        }
        Ok(eigen::jacobi(&self.hermitian_part()))
    }

    /// Principal square root of a positive semidefinite Hermitian matrix.
    ///
    /// Eigenvalues in `[-TOL_PSD, 0)` are treated as zero.
    pub fn psd_sqrt(&self) -> Result<Self> {
        let eig = self.hermitian_eig()?;
        let scale = self.max_abs().max(1.0);
        let mut roots = Vec::with_capacity(self.dim);
        for &v in &eig.values {
            if v < -TOL_PSD * scale {
                return Err(Error::NegativeEigenvalue { value: v });
            }
            roots.push(v.max(0.0).sqrt());
        }
        Ok(eig.reconstruct_with(&roots))
    }

    /// Inverse of a Hermitian positive definite matrix via its eigenbasis.
    pub fn hermitian_inverse(&self) -> Result<Self> {
        let eig = self.hermitian_eig()?;
        if let Some(&v) = eig
            .values
            .iter()
            .find(|v| v.abs() < f64::MIN_POSITIVE.sqrt())
        {
            return Err(Error::NegativeEigenvalue { value: v });
        }
        let inv: Vec<f64> = eig.values.iter().map(|v| 1.0 / v).collect();
        Ok(eig.reconstruct_with(&inv))
    }

    /// All eigenvalues of a general complex matrix (dimension at most 4).
    pub fn general_eigvals(&self) -> Result<Vec<C64>> {
        general_eigvals(self)
    }

    /// Reduced operator on `keep` (ascending wire indices, wire 0 most significant).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        let n = wire_count(self.dim).ok_or_else(|| {
            Error::InvalidWires(format!("dimension {} is not a power of two", self.dim))
        })?;
        if keep.is_empty() || keep.windows(2).any(|w| w[0] >= w[1]) || keep.iter().any(|&w| w >= n)
        {
            return Err(Error::InvalidWires(format!("keep {keep:?} on {n} wires")));
        }
        let traced: Vec<usize> = (0..n).filter(|w| !keep.contains(w)).collect();
        let bit = |idx: usize, w: usize| (idx >> (n - 1 - w)) & 1;
        let sub =
            |idx: usize, wires: &[usize]| wires.iter().fold(0, |acc, &w| (acc << 1) | bit(idx, w));
        let mut out = Self::zeros(1 << keep.len());
        for i in 0..self.dim {
            for j in 0..self.dim {
                if sub(i, &traced) == sub(j, &traced) {
                    out[(sub(i, keep), sub(j, keep))] += self[(i, j)];
                }
            }
        }
        Ok(out)
    }
}

/// Number of qubit wires for a power-of-two dimension.
pub fn wire_count(dim: usize) -> Option<usize> {
    dim.is_power_of_two().then(|| dim.trailing_zeros() as usize)
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("matrix dimensions must agree")
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim);
        ComplexMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim);
        ComplexMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self[(i, j)];
                    format!("{:+.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Wire format: `{"dim": n, "entries": [[re, im], ...]}` in row-major order.
#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    dim: usize,
    entries: Vec<[f64; 2]>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixRepr {
            dim: self.dim,
            entries: self.data.iter().map(|z| [z.re, z.im]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = MatrixRepr::deserialize(d)?;
        let data = repr.entries.iter().map(|&[re, im]| c(re, im)).collect();
        ComplexMatrix::from_vec(repr.dim, data).map_err(serde::de::Error::custom)
    }
}

/// Pure-state amplitudes. Normalization is not enforced; intermediate
/// unnormalized states are common (e.g. non-unitary propagation).
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: Vec<C64>,
}

impl StateVector {
    pub fn new(amps: Vec<C64>) -> Self {
        assert!(!amps.is_empty() && amps.len() <= MAX_DIM);
        Self { amps }
    }

    /// Computational basis state `|index>`.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim);
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Self::new(amps)
    }

    pub fn from_real(amps: &[f64]) -> Self {
        Self::new(amps.iter().map(|&x| c(x, 0.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() < TOL_NORM
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        assert!(n > 0.0, "cannot normalize the zero vector");
        self.scale(c(1.0 / n, 0.0))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::new(self.amps.iter().map(|&z| z * s).collect())
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> C64 {
        assert_eq!(self.dim(), other.dim());
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn kron(&self, other: &Self) -> Result<Self> {
        let n = self.dim() * other.dim();
        if n > MAX_DIM {
            return Err(Error::UnsupportedDimension(n));
        }
        Ok(Self::new(
            self.amps
                .iter()
                .flat_map(|&a| other.amps.iter().map(move |&b| a * b))
                .collect(),
        ))
    }

    /// `|psi><psi|`.
    pub fn density(&self) -> ComplexMatrix {
        ComplexMatrix::outer(self, self)
    }

    /// Born-rule probabilities `|amplitude|^2`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim());
        Self::new(
            self.amps
                .iter()
                .zip(&other.amps)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim());
        Self::new(
            self.amps
                .iter()
                .zip(&other.amps)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }
}

impl Index<usize> for StateVector {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.amps[i]
    }
}

impl IndexMut<usize> for StateVector {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.amps[i]
    }
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_real_rows([[0.0, 1.0], [1.0, 0.0]])
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_rows([[ZERO, -I], [I, ZERO]])
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_real_rows([[1.0, 0.0], [0.0, -1.0]])
}

pub fn hadamard() -> ComplexMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_real_rows([[h, h], [h, -h]])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx_eq(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
        (a - b).max_abs() < tol
    }

    #[test]
    fn pauli_products() {
        let id = ComplexMatrix::identity(2);
        assert!(approx_eq(&(&pauli_x() * &pauli_x()), &id, 1e-15));
        let xz = &pauli_x() * &pauli_z();
        assert!(approx_eq(&xz, &pauli_y().scale(-I), 1e-15));
    }

    #[test]
    fn matmul_rejects_mismatch() {
        let a = ComplexMatrix::identity(2);
        let b = ComplexMatrix::identity(4);
        assert!(matches!(a.matmul(&b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn kron_blocks() {
        let id2 = ComplexMatrix::identity(2);
        assert_eq!(id2.kron(&id2).unwrap(), ComplexMatrix::identity(4));

        let yk = pauli_y().kron(&id2).unwrap();
        for i in 0..2 {
            assert_eq!(yk[(i, i + 2)], -I);
            assert_eq!(yk[(i + 2, i)], I);
            assert_eq!(yk[(i, i)], ZERO);
        }
        let zero = ComplexMatrix::zeros(2);
        assert_eq!(pauli_y().kron(&zero).unwrap().max_abs(), 0.0);

        let big = ComplexMatrix::identity(4);
        assert!(matches!(
            big.kron(&big),
            Err(Error::UnsupportedDimension(16))
        ));
    }

    #[test]
    fn two_norm_examples() {
        assert!((ComplexMatrix::identity(4).two_norm() - 1.0).abs() < 1e-14);
        assert!((pauli_x().scale_real(3.0).two_norm() - 3.0).abs() < 1e-14);
        assert!((ComplexMatrix::diag_real(&[1.0, 2.0, 0.0, 0.5]).two_norm() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn psd_sqrt_examples() {
        let four = ComplexMatrix::identity(2).scale_real(4.0);
        assert!(approx_eq(
            &four.psd_sqrt().unwrap(),
            &ComplexMatrix::identity(2).scale_real(2.0),
            1e-14
        ));
        let d = ComplexMatrix::diag_real(&[0.0, 9.0]);
        assert!(approx_eq(
            &d.psd_sqrt().unwrap(),
            &ComplexMatrix::diag_real(&[0.0, 3.0]),
            1e-14
        ));
        let clamp = ComplexMatrix::diag_real(&[-5e-10, 1.0]);
        assert!(approx_eq(
            &clamp.psd_sqrt().unwrap(),
            &ComplexMatrix::diag_real(&[0.0, 1.0]),
            1e-14
        ));
        let neg = ComplexMatrix::diag_real(&[-1e-3, 1.0]);
        assert!(matches!(
            neg.psd_sqrt(),
            Err(Error::NegativeEigenvalue { .. })
        ));
    }

    #[test]
    fn hermitian_eig_rejects_non_hermitian() {
        let m = ComplexMatrix::from_real_rows([[0.0, 1.0], [0.0, 0.0]]);
        assert!(matches!(m.hermitian_eig(), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn partial_trace_examples() {
        let rho = ComplexMatrix::from_real_rows([[0.7, 0.2], [0.2, 0.3]]);
        let zero = StateVector::basis(2, 0).density();
        let joint = zero.kron(&rho).unwrap();
        assert!(approx_eq(&joint.partial_trace(&[1]).unwrap(), &rho, 1e-15));
        assert!(approx_eq(&joint.partial_trace(&[0]).unwrap(), &zero, 1e-15));

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = StateVector::from_real(&[h, 0.0, 0.0, h]).density();
        let half = ComplexMatrix::identity(2).scale_real(0.5);
        assert!(approx_eq(&bell.partial_trace(&[0]).unwrap(), &half, 1e-15));

        assert!(bell.partial_trace(&[1, 0]).is_err());
        assert!(bell.partial_trace(&[2]).is_err());
        assert!(bell.partial_trace(&[]).is_err());
    }

    #[test]
    fn partial_trace_three_wires_middle() {
        let a = StateVector::from_real(&[0.6, 0.8]);
        let b = StateVector::from_real(&[1.0, 0.0]);
        let cc = StateVector::from_real(&[0.0, 1.0]);
        let psi = a.kron(&b).unwrap().kron(&cc).unwrap();
        let red = psi.density().partial_trace(&[0, 2]).unwrap();
        let expect = a.kron(&cc).unwrap().density();
        assert!(approx_eq(&red, &expect, 1e-15));
    }

    #[test]
    fn matrix_json_round_trip() {
        let m = pauli_y().kron(&hadamard()).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.starts_with("{\"dim\":4,\"entries\":[["));
        let back: ComplexMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }
}
