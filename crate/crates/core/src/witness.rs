//! Correlator witnesses `W = Σ c_{xy} E_{xy}` and the built-in catalog.
//!
//! All catalog witnesses have two outcomes, so the general form
//! `Σ W_{b|x,y} p(b|x,y)` reduces to correlator coefficients.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::qubit::Behavior;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub name: String,
    n_x: usize,
    n_y: usize,
    /// Row-major `c[x][y]`.
    coefficients: Vec<f64>,
    pub classical_bound: f64,
    pub quantum_bound: Option<f64>,
    /// Tilt parameter, set only for the tilted `S3(w)` family.
    #[serde(default)]
    pub tilt: Option<f64>,
}

impl Witness {
    pub fn new(
        name: impl Into<String>,
        coefficients: Vec<Vec<f64>>,
        classical_bound: f64,
        quantum_bound: Option<f64>,
    ) -> Result<Self> {
        let n_x = coefficients.len();
        let n_y = coefficients.first().map_or(0, Vec::len);
        if n_x == 0 || n_y == 0 {
            return domain("witness needs at least one preparation and one measurement");
        }
        if coefficients.iter().any(|row| row.len() != n_y) {
            return domain("ragged coefficient table");
        }
        Ok(Self {
            name: name.into(),
            n_x,
            n_y,
            coefficients: coefficients.into_iter().flatten().collect(),
            classical_bound,
            quantum_bound,
            tilt: None,
        })
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn coefficient(&self, x: usize, y: usize) -> f64 {
        self.coefficients[x * self.n_y + y]
    }

    pub fn coefficients(&self) -> Vec<Vec<f64>> {
        self.coefficients.chunks(self.n_y).map(<[f64]>::to_vec).collect()
    }

    /// Evaluate on a correlator table `E[x][y]` given row-major.
    pub fn eval_correlators(&self, e: &[f64]) -> f64 {
        self.coefficients.iter().zip(e).map(|(c, e)| c * e).sum()
    }

    /// Position on the `[classical, quantum]` axis, 0 at the classical bound.
    pub fn normalized(&self, value: f64) -> Option<f64> {
        let q = self.quantum_bound?;
        let span = q - self.classical_bound;
        (span > 0.0).then(|| (value - self.classical_bound) / span)
    }
}

pub fn eval_witness(w: &Witness, beh: &Behavior) -> Result<f64> {
    if (beh.n_x(), beh.n_y()) != (w.n_x, w.n_y) {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", w.n_x, w.n_y),
            got: format!("{}x{}", beh.n_x(), beh.n_y()),
        });
    }
    let mut total = 0.0;
    for x in 0..w.n_x {
        for y in 0..w.n_y {
            total += w.coefficient(x, y) * beh.correlator(x, y);
        }
    }
    Ok(total)
}

/// `E₁₁ + E₁₂ + E₂₁ − E₂₂ − E₃₁`.
pub fn make_s3() -> Witness {
    Witness::new(
        "s3",
        vec![vec![1.0, 1.0], vec![1.0, -1.0], vec![-1.0, 0.0]],
        3.0,
        Some(1.0 + 2.0 * SQRT_2),
    )
    .expect("static table")
}

/// `E₁₁ + E₁₂ + E₂₁ − E₂₂ − E₃₁ + E₃₂ − E₄₁ − E₄₂`: every sign pattern once.
pub fn make_s4() -> Witness {
    Witness::new(
        "s4",
        vec![vec![1.0, 1.0], vec![1.0, -1.0], vec![-1.0, 1.0], vec![-1.0, -1.0]],
        4.0,
        Some(4.0 * SQRT_2),
    )
    .expect("static table")
}

/// `E₁₁ + E₁₂ − E₂₂ + E₂₃ − E₃₁ − E₃₃`.
pub fn make_s331() -> Witness {
    Witness::new(
        "s33_1",
        vec![vec![1.0, 1.0, 0.0], vec![0.0, -1.0, 1.0], vec![-1.0, 0.0, -1.0]],
        4.0,
        Some(3.0 * 3f64.sqrt()),
    )
    .expect("static table")
}

/// `E₁₁ + E₁₂ + E₁₃ + E₂₁ − E₂₂ − E₂₃ − E₃₁ + E₃₂ − E₃₃`.
pub fn make_s332() -> Witness {
    Witness::new(
        "s33_2",
        vec![vec![1.0, 1.0, 1.0], vec![1.0, -1.0, -1.0], vec![-1.0, 1.0, -1.0]],
        5.0,
        Some(6.0),
    )
    .expect("static table")
}

/// `w(E₁₁ + E₂₁ − E₃₁) + (1−w)(E₁₂ − E₂₂)`.
pub fn make_s3_tilted(w: f64) -> Result<Witness> {
    if !(0.0..=1.0).contains(&w) {
        return domain(format!("tilt w = {w} outside [0, 1]"));
    }
    let v = 1.0 - w;
    let mut witness = Witness::new(
        format!("s3t({w})"),
        vec![vec![w, v], vec![w, -v], vec![-w, 0.0]],
        tilted_classical_bound(w),
        Some(tilted_quantum_bound(w)),
    )?;
    witness.tilt = Some(w);
    Ok(witness)
}

pub fn tilted_classical_bound(w: f64) -> f64 {
    (2.0 - w).max(3.0 * w)
}

pub fn tilted_quantum_bound(w: f64) -> f64 {
    2.0 * (w * w + (1.0 - w) * (1.0 - w)).sqrt() + w
}

/// Look up a catalog witness by its CLI id (`s3`, `s4`, `s33_1`, `s33_2`, `s3t`).
pub fn by_id(id: &str, tilt: Option<f64>) -> Result<Witness> {
    match id {
        "s3" => Ok(make_s3()),
        "s4" => Ok(make_s4()),
        "s33_1" | "s331" => Ok(make_s331()),
        "s33_2" | "s332" => Ok(make_s332()),
        "s3t" => make_s3_tilted(tilt.unwrap_or(0.5)),
        other => domain(format!("unknown witness id '{other}'")),
    }
}

/// The four fixed catalog witnesses.
pub fn catalog() -> Vec<Witness> {
    vec![make_s3(), make_s4(), make_s331(), make_s332()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubit::classical_max;

    #[test]
    fn catalog_bounds() {
        assert_eq!(make_s3().classical_bound, 3.0);
        assert!((make_s331().quantum_bound.unwrap() - 5.196152422706632).abs() < 1e-12);
        assert_eq!(make_s332().quantum_bound, Some(6.0));
        for w in catalog() {
            assert_eq!(classical_max(&w), w.classical_bound, "{}", w.name);
        }
    }

    #[test]
    fn uniform_behavior_scores_zero() {
        let v = eval_witness(&make_s3(), &Behavior::uniform(3, 2)).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            eval_witness(&make_s3(), &Behavior::uniform(4, 2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn tilted_family() {
        let half = make_s3_tilted(0.5).unwrap();
        let s3 = make_s3();
        for x in 0..3 {
            for y in 0..2 {
                assert_eq!(half.coefficient(x, y), 0.5 * s3.coefficient(x, y));
            }
        }
        assert!((half.quantum_bound.unwrap() - (SQRT_2 + 0.5)).abs() < 1e-12);

        let zero = make_s3_tilted(0.0).unwrap();
        assert_eq!(zero.classical_bound, 2.0);
        assert_eq!(zero.quantum_bound, Some(2.0));

        let t = make_s3_tilted(0.3).unwrap();
        assert!((t.classical_bound - 1.7).abs() < 1e-12);
        assert!((t.quantum_bound.unwrap() - 1.8231546211727816).abs() < 1e-12);

        assert!(make_s3_tilted(1.2).is_err());
    }

    #[test]
    fn ids_resolve() {
        assert_eq!(by_id("s33_2", None).unwrap().name, "s33_2");
        assert_eq!(by_id("s3t", Some(0.2)).unwrap().tilt, Some(0.2));
        assert!(by_id("s5", None).is_err());
    }
}
