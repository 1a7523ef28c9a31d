//! Qubit preparations, projective effects, Born-rule behaviors and the
//! deterministic-strategy classical bound.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::linalg::{Complex2x2, ACCUMULATED_TOL, ALGEBRAIC_TOL};
use crate::witness::Witness;

/// Pure preparation `cos(α/2)|0⟩ + e^{iη} sin(α/2)|1⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreparationAngles {
    pub alpha: f64,
    pub eta: f64,
}

impl PreparationAngles {
    pub fn new(alpha: f64, eta: f64) -> Result<Self> {
        check_polar(alpha, "alpha")?;
        check_azimuth(eta, "eta")?;
        Ok(Self { alpha, eta })
    }

    /// Angles of the pure state `v` (up to global phase), mapped into range.
    pub fn from_ket(v: [Complex64; 2]) -> Self {
        let (n0, n1) = (v[0].norm(), v[1].norm());
        let alpha = 2.0 * n1.atan2(n0);
        let eta = if n1 == 0.0 || n0 == 0.0 {
            if n0 == 0.0 { v[1].arg() } else { 0.0 }
        } else {
            v[1].arg() - v[0].arg()
        };
        Self { alpha: alpha.clamp(0.0, PI), eta: wrap_angle(eta) }
    }

    pub fn ket(&self) -> [Complex64; 2] {
        let (s, c) = (0.5 * self.alpha).sin_cos();
        [Complex64::new(c, 0.0), Complex64::from_polar(s, self.eta)]
    }
}

/// Rank-one projector with Bloch polar angle β and azimuth γ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectiveAngles {
    pub beta: f64,
    pub gamma: f64,
}

impl ProjectiveAngles {
    pub fn new(beta: f64, gamma: f64) -> Result<Self> {
        check_polar(beta, "beta")?;
        check_azimuth(gamma, "gamma")?;
        Ok(Self { beta, gamma })
    }
}

/// Map an angle into `[0, 2π)`.
pub fn wrap_angle(x: f64) -> f64 {
    let w = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs.
    if w >= TAU { 0.0 } else { w }
}

fn check_polar(v: f64, name: &str) -> Result<()> {
    if !(0.0..=PI).contains(&v) {
        return domain(format!("{name} = {v} outside [0, π]"));
    }
    Ok(())
}

fn check_azimuth(v: f64, name: &str) -> Result<()> {
    if !(0.0..TAU).contains(&v) {
        return domain(format!("{name} = {v} outside [0, 2π)"));
    }
    Ok(())
}

pub fn state_from_angles(p: PreparationAngles) -> Result<Complex2x2> {
    PreparationAngles::new(p.alpha, p.eta)?;
    Ok(state_unchecked(p.alpha, p.eta))
}

pub(crate) fn state_unchecked(alpha: f64, eta: f64) -> Complex2x2 {
    let (s, c) = (0.5 * alpha).sin_cos();
    let off = Complex64::from_polar(s * c, -eta);
    Complex2x2::new(Complex64::new(c * c, 0.0), off, off.conj(), Complex64::new(s * s, 0.0))
}

/// The outcome-0 effect `M₀`; `M₁ = I − M₀`.
pub fn projector_from_angles(m: ProjectiveAngles) -> Result<Complex2x2> {
    ProjectiveAngles::new(m.beta, m.gamma)?;
    Ok(projector_unchecked(m.beta, m.gamma))
}

pub(crate) fn projector_unchecked(beta: f64, gamma: f64) -> Complex2x2 {
    let (s, c) = (0.5 * beta).sin_cos();
    let off = Complex64::from_polar(0.5 * beta.sin(), -gamma);
    Complex2x2::new(Complex64::new(c * c, 0.0), off, off.conj(), Complex64::new(s * s, 0.0))
}

/// Conditional distribution `p(b|x,y)` with two outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Behavior {
    n_x: usize,
    n_y: usize,
    /// `p0[x * n_y + y] = p(0|x,y)`; `p(1|x,y)` is its complement.
    p0: Vec<f64>,
}

impl Behavior {
    /// Build from `p(0|x,y)` values, row-major in `x`.
    pub fn from_p0(n_x: usize, n_y: usize, p0: Vec<f64>) -> Result<Self> {
        if p0.len() != n_x * n_y {
            return Err(Error::DimensionMismatch {
                expected: format!("{} entries", n_x * n_y),
                got: format!("{}", p0.len()),
            });
        }
        let mut clamped = Vec::with_capacity(p0.len());
        for &p in &p0 {
            if !(-ALGEBRAIC_TOL..=1.0 + ALGEBRAIC_TOL).contains(&p) || p.is_nan() {
                return domain(format!("probability {p} outside [0, 1]"));
            }
            clamped.push(p.clamp(0.0, 1.0));
        }
        Ok(Self { n_x, n_y, p0: clamped })
    }

    /// The maximally mixed behavior `p ≡ ½`.
    pub fn uniform(n_x: usize, n_y: usize) -> Self {
        Self { n_x, n_y, p0: vec![0.5; n_x * n_y] }
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn p(&self, b: usize, x: usize, y: usize) -> f64 {
        let p0 = self.p0[x * self.n_y + y];
        if b == 0 { p0 } else { 1.0 - p0 }
    }

    /// `E_{xy} = p(0|x,y) − p(1|x,y)`.
    pub fn correlator(&self, x: usize, y: usize) -> f64 {
        2.0 * self.p0[x * self.n_y + y] - 1.0
    }

    /// Convex combination `λ·self + (1−λ)·other`.
    pub fn mix(&self, other: &Self, lambda: f64) -> Result<Self> {
        if (self.n_x, self.n_y) != (other.n_x, other.n_y) {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{}", self.n_x, self.n_y),
                got: format!("{}x{}", other.n_x, other.n_y),
            });
        }
        let p0 = self
            .p0
            .iter()
            .zip(&other.p0)
            .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
            .collect();
        Self::from_p0(self.n_x, self.n_y, p0)
    }
}

/// Born rule `p(b|x,y) = Tr(ρ_x M_{b|y})` with `M_{1|y} = I − M_{0|y}`.
pub fn behavior_from_strategy(states: &[Complex2x2], effects: &[Complex2x2]) -> Result<Behavior> {
    for (x, rho) in states.iter().enumerate() {
        if !rho.is_density_matrix(ACCUMULATED_TOL) {
            return domain(format!("state {x} is not a density matrix: {rho:?}"));
        }
    }
    for (y, m) in effects.iter().enumerate() {
        if !m.is_effect(ACCUMULATED_TOL) {
            return domain(format!("effect {y} violates 0 ≼ M ≼ I: {m:?}"));
        }
    }
    let p0 = states
        .iter()
        .flat_map(|rho| effects.iter().map(move |m| rho.trace_product(m)))
        .map(|p| p.clamp(0.0, 1.0))
        .collect();
    Behavior::from_p0(states.len(), effects.len(), p0)
}

/// Exact classical bound for a two-outcome witness when a single bit is sent.
///
/// Enumerates every deterministic encoder `x → a` and decoder `(a, y) → b`;
/// shared randomness only mixes these, so the maximum is attained on one.
pub fn classical_max(witness: &Witness) -> f64 {
    let (n_x, n_y) = (witness.n_x(), witness.n_y());
    let mut best = f64::NEG_INFINITY;
    for enc in 0u32..(1 << n_x) {
        for dec in 0u32..(1 << (2 * n_y)) {
            // Decoder bit for (a, y) sits at position a * n_y + y.
            let mut value = 0.0;
            for x in 0..n_x {
                let a = ((enc >> x) & 1) as usize;
                for y in 0..n_y {
                    let b = (dec >> (a * n_y + y)) & 1;
                    let e = if b == 0 { 1.0 } else { -1.0 };
                    value += witness.coefficient(x, y) * e;
                }
            }
            if value > best {
                best = value;
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::witness::{make_s3, make_s3_tilted};

    fn close(a: &Complex2x2, b: &Complex2x2, tol: f64) -> bool {
        a.max_abs_diff(b) <= tol
    }

    #[test]
    fn state_poles_and_equator() {
        let north = state_from_angles(PreparationAngles::new(0.0, 1.234).unwrap()).unwrap();
        assert!(close(&north, &Complex2x2::diag(1.0, 0.0), 1e-15));
        let south = state_from_angles(PreparationAngles::new(PI, 0.0).unwrap()).unwrap();
        assert!(close(&south, &Complex2x2::diag(0.0, 1.0), 1e-15));
        let plus = state_from_angles(PreparationAngles::new(PI / 2.0, 0.0).unwrap()).unwrap();
        assert!(close(&plus, &Complex2x2::from_real(0.5, 0.5, 0.5, 0.5), 1e-15));
        assert!((plus.trace().re - 1.0).abs() < 1e-12);
        assert!((plus.purity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn state_matches_ket_outer_product() {
        let p = PreparationAngles::new(1.1, 4.0).unwrap();
        let rho = state_from_angles(p).unwrap();
        assert!(close(&rho, &Complex2x2::outer(p.ket()), 1e-15));
    }

    #[test]
    fn out_of_range_angles_rejected() {
        assert!(PreparationAngles::new(-0.1, 0.0).is_err());
        assert!(PreparationAngles::new(0.1, TAU).is_err());
        assert!(state_from_angles(PreparationAngles { alpha: 4.0, eta: 0.0 }).is_err());
        assert!(projector_from_angles(ProjectiveAngles { beta: 0.0, gamma: -1.0 }).is_err());
    }

    #[test]
    fn projector_examples() {
        let z = projector_from_angles(ProjectiveAngles::new(0.0, 0.0).unwrap()).unwrap();
        assert!(close(&z, &Complex2x2::diag(1.0, 0.0), 1e-15));
        let mz = projector_from_angles(ProjectiveAngles::new(PI, 0.0).unwrap()).unwrap();
        assert!(close(&mz, &Complex2x2::diag(0.0, 1.0), 1e-15));
        let yp = projector_from_angles(ProjectiveAngles::new(PI / 2.0, PI / 2.0).unwrap()).unwrap();
        let expected = Complex2x2::new(
            Complex64::new(0.5, 0.0),
            Complex64::new(0.0, -0.5),
            Complex64::new(0.0, 0.5),
            Complex64::new(0.5, 0.0),
        );
        assert!(close(&yp, &expected, 1e-15));
        assert!(close(&(yp * yp), &yp, 1e-12));
    }

    #[test]
    fn ket_angle_round_trip() {
        let p = PreparationAngles::new(2.1, 5.5).unwrap();
        let phase = Complex64::from_polar(1.0, 0.7);
        let q = PreparationAngles::from_ket([p.ket()[0] * phase, p.ket()[1] * phase]);
        assert!((p.alpha - q.alpha).abs() < 1e-12);
        assert!((p.eta - q.eta).abs() < 1e-12);
    }

    #[test]
    fn born_rule_examples() {
        let zero = Complex2x2::diag(1.0, 0.0);
        let beh = behavior_from_strategy(&[zero], &[zero]).unwrap();
        assert_eq!(beh.p(0, 0, 0), 1.0);
        let plus = Complex2x2::from_real(0.5, 0.5, 0.5, 0.5);
        let beh = behavior_from_strategy(&[plus], &[zero]).unwrap();
        assert!((beh.p(0, 0, 0) - 0.5).abs() < 1e-15);
        assert!((beh.p(0, 0, 0) + beh.p(1, 0, 0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_strategy_rejected() {
        let not_state = Complex2x2::diag(0.7, 0.7);
        assert!(behavior_from_strategy(&[not_state], &[Complex2x2::identity()]).is_err());
        let not_effect = Complex2x2::diag(1.5, 0.0);
        assert!(behavior_from_strategy(&[Complex2x2::diag(1.0, 0.0)], &[not_effect]).is_err());
    }

    #[test]
    fn behavior_rejects_bad_probabilities() {
        assert!(Behavior::from_p0(1, 1, vec![1.2]).is_err());
        assert!(Behavior::from_p0(1, 2, vec![0.5]).is_err());
        let b = Behavior::from_p0(1, 1, vec![1.0 + 1e-13]).unwrap();
        assert_eq!(b.p(0, 0, 0), 1.0);
    }

    #[test]
    fn classical_bound_of_s3_family() {
        assert_eq!(classical_max(&make_s3()), 3.0);
        let w = make_s3_tilted(0.3).unwrap();
        assert!((classical_max(&w) - 1.7).abs() < 1e-12);
    }
}
