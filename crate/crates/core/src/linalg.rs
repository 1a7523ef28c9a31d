//! Dense 2×2 complex matrices and Bloch vectors.
//!
//! Everything in this crate lives in the span of the two lowest Fock levels,
//! so states, effects and observables are all `Complex2x2`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Tolerance for exact algebraic identities (Hermiticity, purity, idempotence).
pub const ALGEBRAIC_TOL: f64 = 1e-12;
/// Tolerance for quantities accumulated over several arithmetic steps.
pub const ACCUMULATED_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Complex2x2 {
    pub m: [[Complex64; 2]; 2],
}

impl fmt::Debug for Complex2x2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[[{}, {}], [{}, {}]]",
            self.m[0][0], self.m[0][1], self.m[1][0], self.m[1][1]
        )
    }
}

impl Complex2x2 {
    pub const fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Self { m: [[a, b], [c, d]] }
    }

    pub const fn zero() -> Self {
        Self::new(ZERO, ZERO, ZERO, ZERO)
    }

    pub const fn identity() -> Self {
        Self::new(ONE, ZERO, ZERO, ONE)
    }

    pub fn diag(a: f64, d: f64) -> Self {
        Self::new(a.into(), ZERO, ZERO, d.into())
    }

    pub fn from_real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self::new(a.into(), b.into(), c.into(), d.into())
    }

    pub fn pauli_x() -> Self {
        Self::from_real(0.0, 1.0, 1.0, 0.0)
    }

    pub fn pauli_y() -> Self {
        Self::new(ZERO, -Complex64::i(), Complex64::i(), ZERO)
    }

    pub fn pauli_z() -> Self {
        Self::diag(1.0, -1.0)
    }

    /// `|v⟩⟨v|` for a (not necessarily normalized) column vector.
    pub fn outer(v: [Complex64; 2]) -> Self {
        Self::new(
            v[0] * v[0].conj(),
            v[0] * v[1].conj(),
            v[1] * v[0].conj(),
            v[1] * v[1].conj(),
        )
    }

    /// `½(I + v·σ)`.
    pub fn from_bloch(v: BlochVector) -> Self {
        let [x, y, z] = v.0;
        Self::new(
            Complex64::new(0.5 * (1.0 + z), 0.0),
            Complex64::new(0.5 * x, -0.5 * y),
            Complex64::new(0.5 * x, 0.5 * y),
            Complex64::new(0.5 * (1.0 - z), 0.0),
        )
    }

    /// Bloch components `Tr(Mσ_k)`; for `M = ½(I + v·σ)` this returns `v`.
    pub fn bloch(&self) -> BlochVector {
        let m = &self.m;
        BlochVector([
            (m[0][1] + m[1][0]).re,
            (m[1][0] - m[0][1]).im,
            (m[0][0] - m[1][1]).re,
        ])
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_c(&self, s: Complex64) -> Self {
        self.map(|z| z * s)
    }

    fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self::new(
            f(self.m[0][0]),
            f(self.m[0][1]),
            f(self.m[1][0]),
            f(self.m[1][1]),
        )
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.m;
        Self::new(m[0][0].conj(), m[1][0].conj(), m[0][1].conj(), m[1][1].conj())
    }

    pub fn trace(&self) -> Complex64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn det(&self) -> Complex64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// `Re Tr(self · other)`.
    pub fn trace_product(&self, other: &Self) -> f64 {
        let (a, b) = (&self.m, &other.m);
        (a[0][0] * b[0][0] + a[0][1] * b[1][0] + a[1][0] * b[0][1] + a[1][1] * b[1][1]).re
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let d = *self - *other;
        d.m.iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.adjoint()) <= tol
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues_hermitian(&self) -> (f64, f64) {
        let a = self.m[0][0].re;
        let d = self.m[1][1].re;
        let b = 0.5 * (self.m[0][1] + self.m[1][0].conj());
        let mean = 0.5 * (a + d);
        let half_gap = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        (mean - half_gap, mean + half_gap)
    }

    pub fn max_eigenvalue_hermitian(&self) -> f64 {
        self.eigenvalues_hermitian().1
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.is_hermitian(ALGEBRAIC_TOL) && self.eigenvalues_hermitian().0 >= -tol
    }

    /// `0 ≼ M ≼ I` within `tol`.
    pub fn is_effect(&self, tol: f64) -> bool {
        if !self.is_hermitian(ALGEBRAIC_TOL) {
            return false;
        }
        let (lo, hi) = self.eigenvalues_hermitian();
        lo >= -tol && hi <= 1.0 + tol
    }

    /// Unit-trace, Hermitian, positive semidefinite.
    pub fn is_density_matrix(&self, tol: f64) -> bool {
        (self.trace() - ONE).norm() <= tol && self.is_psd(tol)
    }

    pub fn purity(&self) -> f64 {
        self.trace_product(self)
    }

    /// Normalized eigenvector of the largest eigenvalue of the Hermitian part.
    ///
    /// The first component is real and non-negative.
    pub fn top_eigenvector_hermitian(&self) -> [Complex64; 2] {
        let a = self.m[0][0].re;
        let d = self.m[1][1].re;
        let b = 0.5 * (self.m[0][1] + self.m[1][0].conj());
        let bn = b.norm();
        if bn <= f64::MIN_POSITIVE {
            return if a >= d { [ONE, ZERO] } else { [ZERO, ONE] };
        }
        // Rotation angle of the real symmetric problem [[a, |b|], [|b|, d]].
        let half = 0.5 * (2.0 * bn).atan2(a - d);
        let phase = (b / bn).conj();
        [Complex64::new(half.cos(), 0.0), phase * half.sin()]
    }

    /// `U · self · U†`.
    pub fn conjugate_by(&self, u: &Self) -> Self {
        *u * *self * u.adjoint()
    }
}

impl Add for Complex2x2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let (a, b) = (&self.m, &o.m);
        Self::new(a[0][0] + b[0][0], a[0][1] + b[0][1], a[1][0] + b[1][0], a[1][1] + b[1][1])
    }
}

impl Sub for Complex2x2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let (a, b) = (&self.m, &o.m);
        Self::new(a[0][0] - b[0][0], a[0][1] - b[0][1], a[1][0] - b[1][0], a[1][1] - b[1][1])
    }
}

impl Neg for Complex2x2 {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl Mul for Complex2x2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let (a, b) = (&self.m, &o.m);
        Self::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector(pub [f64; 3]);

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self([x, y, z])
    }

    pub fn dot(&self, o: &Self) -> f64 {
        self.0.iter().zip(o.0.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self(self.0.map(|c| c / n))
    }

    pub fn is_state(&self) -> bool {
        self.norm() <= 1.0 + ALGEBRAIC_TOL
    }

    pub fn is_projective(&self) -> bool {
        (self.norm() - 1.0).abs() <= ALGEBRAIC_TOL
    }
}
