//! Continuous-variable measurements restricted to the `{|0⟩, |1⟩}` Fock
//! subspace, plus the amplitude-damping loss channel.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::linalg::{Complex2x2, ACCUMULATED_TOL};

/// Quadrature window used for homodyne bins.
pub const QUADRATURE_LIMIT: f64 = 5.0;

/// Binned homodyne setting: quadrature phase θ and the "+" bin `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomodyneSetting {
    pub theta: f64,
    pub bin_lo: f64,
    pub bin_hi: f64,
}

impl HomodyneSetting {
    pub fn new(theta: f64, bin_lo: f64, bin_hi: f64) -> Result<Self> {
        let s = Self { theta, bin_lo, bin_hi };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=PI).contains(&self.theta) {
            return domain(format!("homodyne theta = {} outside [0, π]", self.theta));
        }
        let window = -QUADRATURE_LIMIT..=QUADRATURE_LIMIT;
        if !window.contains(&self.bin_lo) || !window.contains(&self.bin_hi) {
            return domain(format!(
                "homodyne bin [{}, {}] outside [-5, 5]",
                self.bin_lo, self.bin_hi
            ));
        }
        if self.bin_lo > self.bin_hi {
            return domain(format!(
                "homodyne bin_lo {} > bin_hi {}",
                self.bin_lo, self.bin_hi
            ));
        }
        Ok(())
    }
}

/// Displacement `α = r e^{iφ}` followed by an on/off detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisplacementSetting {
    pub r: f64,
    pub phi: f64,
}

impl DisplacementSetting {
    pub fn new(r: f64, phi: f64) -> Result<Self> {
        let s = Self { r, phi };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.r) {
            return domain(format!("displacement r = {} outside [0, 1]", self.r));
        }
        if !(0.0..TAU).contains(&self.phi) {
            return domain(format!("displacement phi = {} outside [0, 2π)", self.phi));
        }
        Ok(())
    }
}

/// Detection efficiency of an amplitude-damping loss channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossParameter {
    pub eta: f64,
}

impl LossParameter {
    pub fn new(eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return domain(format!("efficiency eta = {eta} outside [0, 1]"));
        }
        Ok(Self { eta })
    }

    pub const fn lossless() -> Self {
        Self { eta: 1.0 }
    }
}

/// `Π_{A⁺}(θ)` for `A⁺ = [a, b]`, projected onto the two lowest Fock levels.
pub fn homodyne_effect(s: &HomodyneSetting) -> Result<Complex2x2> {
    s.validate()?;
    Ok(homodyne_effect_unchecked(s.theta, s.bin_lo, s.bin_hi))
}

pub(crate) fn homodyne_effect_unchecked(theta: f64, a: f64, b: f64) -> Complex2x2 {
    let (ga, gb) = ((-a * a).exp(), (-b * b).exp());
    let p00 = 0.5 * (libm::erf(b) - libm::erf(a));
    let p11 = p00 + (a * ga - b * gb) / PI.sqrt();
    let p01 = Complex64::from_polar((ga - gb) / TAU.sqrt(), -theta);
    Complex2x2::new(p00.into(), p01, p01.conj(), p11.into())
}

/// `X_±(θ) = Π_{A⁺}(θ) − Π_{A⁻}(θ) = 2Π_{A⁺}(θ) − I`.
pub fn homodyne_observable(s: &HomodyneSetting) -> Result<Complex2x2> {
    Ok(homodyne_effect(s)?.scale(2.0) - Complex2x2::identity())
}

/// No-click effect `P₊(α) = |α⟩⟨α|` in the subspace.
pub fn displacement_effect(s: &DisplacementSetting) -> Result<Complex2x2> {
    s.validate()?;
    Ok(displacement_effect_unchecked(s.r, s.phi))
}

pub(crate) fn displacement_effect_unchecked(r: f64, phi: f64) -> Complex2x2 {
    let g = (-r * r).exp();
    let off = Complex64::from_polar(g * r, -phi);
    Complex2x2::new(g.into(), off, off.conj(), (g * r * r).into())
}

/// `M_D(r, φ) = 2P₊(α) − I`.
pub fn displacement_observable(s: &DisplacementSetting) -> Result<Complex2x2> {
    Ok(displacement_effect(s)?.scale(2.0) - Complex2x2::identity())
}

/// Kraus operators `E₀ = |0⟩⟨0| + √η|1⟩⟨1|`, `E₁ = √(1−η)|0⟩⟨1|`.
pub fn kraus_operators(loss: LossParameter) -> [Complex2x2; 2] {
    let e0 = Complex2x2::diag(1.0, loss.eta.sqrt());
    let e1 = Complex2x2::from_real(0.0, (1.0 - loss.eta).sqrt(), 0.0, 0.0);
    [e0, e1]
}

/// `Λ_η(ρ) = E₀ρE₀† + E₁ρE₁†`.
pub fn amplitude_damp(rho: &Complex2x2, loss: LossParameter) -> Result<Complex2x2> {
    LossParameter::new(loss.eta)?;
    if !rho.is_density_matrix(ACCUMULATED_TOL) {
        return domain(format!("not a density matrix: {rho:?}"));
    }
    Ok(amplitude_damp_unchecked(rho, loss.eta))
}

pub(crate) fn amplitude_damp_unchecked(rho: &Complex2x2, eta: f64) -> Complex2x2 {
    let m = &rho.m;
    let p1 = m[1][1].re;
    let coh = m[0][1] * eta.sqrt();
    Complex2x2::new(
        Complex64::new(m[0][0].re + (1.0 - eta) * p1, 0.0),
        coh,
        coh.conj(),
        Complex64::new(eta * p1, 0.0),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_line_bin_is_identity() {
        for theta in [0.0, 0.4, PI] {
            let p = homodyne_effect(&HomodyneSetting::new(theta, -5.0, 5.0).unwrap()).unwrap();
            assert!(p.max_abs_diff(&Complex2x2::identity()) < 1e-9);
        }
    }

    #[test]
    fn half_line_bin_values() {
        let p = homodyne_effect(&HomodyneSetting::new(0.0, 0.0, 5.0).unwrap()).unwrap();
        assert!((p.m[0][0].re - 0.5).abs() < 1e-9);
        assert!((p.m[1][1].re - 0.5).abs() < 1e-9);
        // 1/√(2π)
        assert!((p.m[0][1].re - 0.398942280401).abs() < 1e-9);
        assert!(p.m[0][1].im.abs() < 1e-15);

        let q = homodyne_effect(&HomodyneSetting::new(PI / 2.0, 0.0, 5.0).unwrap()).unwrap();
        let rotated = p.m[0][1] * Complex64::from_polar(1.0, -PI / 2.0);
        assert!((q.m[0][1] - rotated).norm() < 1e-15);
    }

    #[test]
    fn homodyne_observable_extremes() {
        let full = homodyne_observable(&HomodyneSetting::new(1.0, -5.0, 5.0).unwrap()).unwrap();
        assert!(full.max_abs_diff(&Complex2x2::identity()) < 1e-9);
        let empty = homodyne_observable(&HomodyneSetting::new(1.0, 0.3, 0.3).unwrap()).unwrap();
        assert!(empty.max_abs_diff(&-Complex2x2::identity()) < 1e-15);
        let s = HomodyneSetting::new(0.0, 0.0, 5.0).unwrap();
        let obs = homodyne_observable(&s).unwrap();
        let eff = homodyne_effect(&s).unwrap();
        assert!(obs.max_abs_diff(&(eff.scale(2.0) - Complex2x2::identity())) < 1e-15);
    }

    #[test]
    fn inverted_bin_rejected() {
        assert!(HomodyneSetting::new(0.0, 1.0, -1.0).is_err());
        assert!(HomodyneSetting::new(4.0, -1.0, 1.0).is_err());
        assert!(homodyne_effect(&HomodyneSetting { theta: 0.0, bin_lo: 2.0, bin_hi: 1.0 }).is_err());
    }

    #[test]
    fn displacement_examples() {
        let vac = displacement_effect(&DisplacementSetting::new(0.0, 2.0).unwrap()).unwrap();
        assert!(vac.max_abs_diff(&Complex2x2::diag(1.0, 0.0)) < 1e-15);

        let e = (-1.0f64).exp();
        let one = displacement_effect(&DisplacementSetting::new(1.0, 0.0).unwrap()).unwrap();
        assert!(one.max_abs_diff(&Complex2x2::from_real(e, e, e, e)) < 1e-15);
        assert!(one.is_psd(1e-12));
        assert!((one.trace().re - 2.0 * e).abs() < 1e-15);

        let g = (-0.25f64).exp();
        let half = displacement_effect(&DisplacementSetting::new(0.5, PI).unwrap()).unwrap();
        let expected = Complex2x2::from_real(g, -0.5 * g, -0.5 * g, 0.25 * g);
        assert!(half.max_abs_diff(&expected) < 1e-15);

        assert!(DisplacementSetting::new(1.5, 0.0).is_err());
    }

    #[test]
    fn displacement_observable_examples() {
        let z = displacement_observable(&DisplacementSetting::new(0.0, 1.0).unwrap()).unwrap();
        assert!(z.max_abs_diff(&Complex2x2::pauli_z()) < 1e-15);
        let e2 = 2.0 * (-1.0f64).exp();
        let m = displacement_observable(&DisplacementSetting::new(1.0, 0.0).unwrap()).unwrap();
        let expected = Complex2x2::from_real(e2 - 1.0, e2, e2, e2 - 1.0);
        assert!(m.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn damping_examples() {
        let rho = Complex2x2::from_real(0.3, 0.2, 0.2, 0.7);
        let same = amplitude_damp(&rho, LossParameter::new(1.0).unwrap()).unwrap();
        assert!(same.max_abs_diff(&rho) < 1e-15);
        let vac = amplitude_damp(&rho, LossParameter::new(0.0).unwrap()).unwrap();
        assert!(vac.max_abs_diff(&Complex2x2::diag(1.0, 0.0)) < 1e-15);
        let one = amplitude_damp(&Complex2x2::diag(0.0, 1.0), LossParameter::new(0.458).unwrap())
            .unwrap();
        assert!(one.max_abs_diff(&Complex2x2::diag(0.542, 0.458)) < 1e-15);
        assert!(amplitude_damp(&Complex2x2::diag(1.0, 1.0), LossParameter::lossless()).is_err());
        assert!(LossParameter::new(1.01).is_err());
    }

    #[test]
    fn damping_matches_kraus_sum() {
        let rho = Complex2x2::new(
            Complex64::new(0.4, 0.0),
            Complex64::new(0.1, 0.3),
            Complex64::new(0.1, -0.3),
            Complex64::new(0.6, 0.0),
        );
        let loss = LossParameter::new(0.37).unwrap();
        let [e0, e1] = kraus_operators(loss);
        let kraus = e0 * rho * e0.adjoint() + e1 * rho * e1.adjoint();
        assert!(amplitude_damp(&rho, loss).unwrap().max_abs_diff(&kraus) < 1e-15);
    }
}
