//! Published optimal strategies, kept as regression data.
//!
//! Angles are rounded to four decimals in the source tables, so a few sit a
//! hair outside their ranges; they are clamped or wrapped on load.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::cv::{DisplacementSetting, HomodyneSetting};
use crate::error::Result;
use crate::optimize::{evaluate_strategy, MeasurementSetting, SchemeSpec};
use crate::qubit::{wrap_angle, PreparationAngles};
use crate::witness::{by_id, Witness};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    /// Source table: `3222`, `4222` or `3322`.
    pub table: String,
    pub witness: String,
    pub scheme: String,
    pub preparations: Vec<PreparationAngles>,
    pub settings: Vec<MeasurementSetting>,
    /// Optimum reported alongside the strategy.
    pub reported: f64,
}

impl Fixture {
    pub fn witness(&self) -> Result<Witness> {
        by_id(&self.witness, None)
    }

    pub fn scheme(&self) -> Result<SchemeSpec> {
        SchemeSpec::parse(&self.scheme)
    }

    /// Witness value of the stored strategy.
    pub fn evaluate(&self) -> Result<f64> {
        evaluate_strategy(&self.witness()?, &self.scheme()?, &self.preparations, &self.settings)
    }
}

fn preps(alpha: &[f64], eta: &[f64]) -> Vec<PreparationAngles> {
    alpha
        .iter()
        .zip(eta)
        .map(|(a, e)| PreparationAngles { alpha: a.clamp(0.0, PI), eta: wrap_angle(*e) })
        .collect()
}

fn h(a: f64, b: f64, theta: f64) -> MeasurementSetting {
    MeasurementSetting::Homodyne(HomodyneSetting { theta: theta.clamp(0.0, PI), bin_lo: a, bin_hi: b })
}

fn d(r: f64, phi: f64) -> MeasurementSetting {
    MeasurementSetting::Displacement(DisplacementSetting { r, phi: wrap_angle(phi) })
}

fn fixture(
    table: &str,
    witness: &str,
    scheme: &str,
    alpha: &[f64],
    eta: &[f64],
    settings: Vec<MeasurementSetting>,
    reported: f64,
) -> Fixture {
    Fixture {
        table: table.into(),
        witness: witness.into(),
        scheme: scheme.into(),
        preparations: preps(alpha, eta),
        settings,
        reported,
    }
}

#[allow(clippy::approx_constant)]
pub fn all() -> Vec<Fixture> {
    vec![
        fixture(
            "3222", "s3", "HH",
            &[1.4681, 1.4681, 1.7188],
            &[2.3339, 3.9492, 6.2832],
            vec![h(-4.6243, 0.2109, 0.0), h(0.0, 3.7764, 1.5707)],
            3.112,
        ),
        fixture(
            "3222", "s3", "DH",
            &[0.6734, 0.6734, 3.1416],
            &[5.5820, 2.4404, 0.5144],
            vec![d(0.0, 2.5857), h(-4.9984, 0.0, 2.4404)],
            3.558,
        ),
        fixture(
            "3222", "s3", "HD",
            &[0.4936, 2.3271, 1.7320],
            &[1.5682, 1.5404, 4.6931],
            vec![h(-0.2299, 4.1153, 1.5515), d(0.0800, 1.6542)],
            3.418,
        ),
        fixture(
            "3222", "s3", "DD",
            &[0.0926, 1.4679, 2.5297],
            &[0.0, 3.1415, 6.2832],
            vec![d(0.3159, 3.1415), d(0.4263, 6.2832)],
            3.783,
        ),
        fixture(
            "4222", "s4", "HH",
            &[1.5706, 1.5709, 1.5707, 1.5706],
            &[0.6903, 2.2612, 5.4028, 3.8320],
            vec![h(0.0, 3.9969, 1.4758), h(-4.7507, 0.0, 3.0464)],
            4.512,
        ),
        fixture(
            "4222", "s4", "HD",
            &[0.6727, 2.4674, 0.6737, 2.4688],
            &[2.6846, 2.6932, 5.8344, 5.8265],
            vec![h(-0.0002, 4.0793, 2.6888), d(0.0017, 5.4447)],
            5.116,
        ),
        fixture(
            "4222", "s4", "DD",
            &[0.0, 1.5705, 1.5708, 3.1414],
            &[4.2027, 2.5052, 5.6471, 5.2347],
            vec![d(0.3820, 3.7780), d(0.3820, 0.6361)],
            5.592,
        ),
        fixture(
            "3322", "s33_1", "HHH",
            &[1.5708, 1.5708, 1.5708],
            &[0.8635, 2.9580, 5.0523],
            vec![h(0.0, 4.5036, 1.3870), h(0.0, 4.5840, 0.3399), h(0.0, 3.8455, 2.4344)],
            4.1459,
        ),
        fixture(
            "3322", "s33_1", "DDD",
            &[0.4426, 1.5707, 2.6992],
            &[1.6888, 4.8305, 1.6891],
            vec![d(0.0, 1.8640), d(0.4807, 4.5944), d(0.4806, 1.4526)],
            5.0899,
        ),
        fixture(
            "3322", "s33_2", "HHH",
            &[1.4145, 1.5754, 1.5752],
            &[2.5416, 0.4284, 4.6551],
            vec![h(-0.2213, 3.7027, 1.4940), h(-3.2934, 0.2213, 0.4477), h(0.0, 2.2903, 2.5418)],
            4.9076,
        ),
        fixture(
            "3322", "s33_2", "DDD",
            &[0.0, 2.1577, 2.1577],
            &[2.6398, 3.1417, 0.0],
            vec![d(0.4680, 3.1415), d(0.4680, 0.0), d(0.0, 3.7669)],
            5.8251,
        ),
    ]
}

pub fn by_table(table: &str) -> Vec<Fixture> {
    all().into_iter().filter(|f| f.table == table).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_fixture_is_a_valid_strategy() {
        for f in all() {
            let v = f.evaluate().unwrap();
            assert!(v.is_finite(), "{} {}", f.witness, f.scheme);
        }
        assert_eq!(by_table("4222").len(), 3);
    }
}
