//! Guessing probabilities, their maximization at a fixed witness value, and
//! the closed-form bound for the tilted `S3(w)` family.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::linalg::{BlochVector, ALGEBRAIC_TOL};
use crate::optimize::nelder_mead::{maximize, random_point, Bound, NelderMeadOptions};
use crate::optimize::OptimizerConfig;
use crate::qubit::{Behavior, PreparationAngles, ProjectiveAngles};
use crate::report::{fmt_num, fmt_opt};
use crate::rng::{stream, sub_seed};
use crate::witness::{tilted_classical_bound, tilted_quantum_bound, Witness};

use std::f64::consts::{PI, TAU};

/// Which guessing probability an adversary is scored on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum GuessingSpec {
    /// `max_{b,x,y} p(b|x,y)`.
    Global,
    /// `max_b p(b|x,y)` at one input pair.
    Conditional { x: usize, y: usize },
    /// `Σ p(x)p(y) max_b p(b|x,y)`.
    Average { p_x: Vec<f64>, p_y: Vec<f64> },
    /// Average with uniform input weights.
    UniformAverage,
}

impl GuessingSpec {
    pub fn validate(&self, n_x: usize, n_y: usize) -> Result<()> {
        match self {
            Self::Global | Self::UniformAverage => Ok(()),
            Self::Conditional { x, y } => {
                if *x >= n_x || *y >= n_y {
                    return domain(format!("conditional pair ({x}, {y}) outside {n_x}x{n_y}"));
                }
                Ok(())
            }
            Self::Average { p_x, p_y } => {
                check_weights(p_x, n_x, "p(x)")?;
                check_weights(p_y, n_y, "p(y)")
            }
        }
    }

    /// Guessing probability from a correlator table (row-major in `x`).
    fn score(&self, e: &[f64], n_x: usize, n_y: usize) -> f64 {
        let best = |i: usize| 0.5 * (1.0 + e[i].abs());
        match self {
            Self::Global => e.iter().map(|v| 0.5 * (1.0 + v.abs())).fold(0.0, f64::max),
            Self::Conditional { x, y } => best(x * n_y + y),
            Self::UniformAverage => {
                0.5 + e.iter().map(|v| v.abs()).sum::<f64>() / (2.0 * (n_x * n_y) as f64)
            }
            Self::Average { p_x, p_y } => {
                let mut total = 0.0;
                for (x, px) in p_x.iter().enumerate() {
                    for (y, py) in p_y.iter().enumerate() {
                        total += px * py * best(x * n_y + y);
                    }
                }
                total
            }
        }
    }
}

fn check_weights(p: &[f64], n: usize, name: &str) -> Result<()> {
    if p.len() != n {
        return Err(Error::DimensionMismatch {
            expected: format!("{n} weights for {name}"),
            got: format!("{}", p.len()),
        });
    }
    if p.iter().any(|v| *v < 0.0 || v.is_nan()) {
        return domain(format!("{name} has negative weights"));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > ALGEBRAIC_TOL {
        return domain(format!("{name} sums to {s}, not 1"));
    }
    Ok(())
}

/// Outcome most likely at `(x, y)`; ties go to `b = 0`.
pub fn best_guess(beh: &Behavior, x: usize, y: usize) -> usize {
    if beh.p(0, x, y) >= beh.p(1, x, y) { 0 } else { 1 }
}

pub fn guessing_probability(beh: &Behavior, spec: &GuessingSpec) -> Result<f64> {
    let (n_x, n_y) = (beh.n_x(), beh.n_y());
    spec.validate(n_x, n_y)?;
    let e: Vec<f64> = (0..n_x)
        .flat_map(|x| (0..n_y).map(move |y| (x, y)))
        .map(|(x, y)| beh.correlator(x, y))
        .collect();
    Ok(spec.score(&e, n_x, n_y))
}

pub fn min_entropy(p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0 + ALGEBRAIC_TOL) {
        return domain(format!("guessing probability {p} outside (0, 1]"));
    }
    Ok(-p.min(1.0).log2())
}

/// Largest allowed `|W − W*|` at the reported optimum.
pub const FEASIBILITY_TOL: f64 = 1e-6;
/// Penalty weights, escalated one round at a time.
pub const PENALTY_SCHEDULE: [f64; 5] = [1e2, 1e3, 1e4, 1e5, 1e6];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuessingOptimum {
    pub p_guess: f64,
    pub min_entropy: f64,
    /// Witness value of the reported strategy.
    pub witness_value: f64,
    pub preparations: Vec<PreparationAngles>,
    /// One projector per setting; the first is pinned to `|0⟩⟨0|`.
    pub measurements: Vec<ProjectiveAngles>,
    pub restart_index: usize,
}

fn bloch_of(polar: f64, azimuth: f64) -> BlochVector {
    let (s, c) = polar.sin_cos();
    BlochVector::new(s * azimuth.cos(), s * azimuth.sin(), c)
}

/// Parameter vector: `(α_x, η_x)` for each preparation, then `(β_y, γ_y)` for
/// settings `y ≥ 1`; setting 0 is fixed along +z.
struct Layout {
    n_x: usize,
    n_y: usize,
}

impl Layout {
    fn bounds(&self) -> Vec<Bound> {
        let pair = [Bound::closed(0.0, PI), Bound::periodic(0.0, TAU)];
        std::iter::repeat_n(pair, self.n_x + self.n_y - 1).flatten().collect()
    }

    fn correlators(&self, p: &[f64], out: &mut Vec<f64>) {
        let meas: Vec<BlochVector> = std::iter::once(BlochVector::new(0.0, 0.0, 1.0))
            .chain((1..self.n_y).map(|y| {
                let k = 2 * (self.n_x + y - 1);
                bloch_of(p[k], p[k + 1])
            }))
            .collect();
        out.clear();
        for x in 0..self.n_x {
            let r = bloch_of(p[2 * x], p[2 * x + 1]);
            out.extend(meas.iter().map(|n| r.dot(n)));
        }
    }

    fn preparations(&self, p: &[f64]) -> Vec<PreparationAngles> {
        (0..self.n_x).map(|x| PreparationAngles { alpha: p[2 * x], eta: p[2 * x + 1] }).collect()
    }

    fn measurements(&self, p: &[f64]) -> Vec<ProjectiveAngles> {
        std::iter::once(ProjectiveAngles { beta: 0.0, gamma: 0.0 })
            .chain((1..self.n_y).map(|y| {
                let k = 2 * (self.n_x + y - 1);
                ProjectiveAngles { beta: p[k], gamma: p[k + 1] }
            }))
            .collect()
    }
}

/// Maximal guessing probability over qubit strategies with witness value `W*`.
///
/// Preparations are pure and measurements rank-one projective, with the
/// first measurement pinned to `|0⟩⟨0|`. The equality constraint enters as an
/// exact (absolute-value) penalty whose weight is escalated over
/// [`PENALTY_SCHEDULE`], each round warm-started from the previous one.
pub fn max_guessing_given_witness(
    w: &Witness,
    w_star: f64,
    spec: &GuessingSpec,
    cfg: &OptimizerConfig,
) -> Result<GuessingOptimum> {
    cfg.validate()?;
    spec.validate(w.n_x(), w.n_y())?;
    if let Some(q) = w.quantum_bound {
        if w_star > q + FEASIBILITY_TOL {
            return Err(Error::Infeasible(format!(
                "W* = {w_star} exceeds the quantum bound {q} of {}",
                w.name
            )));
        }
    }
    let layout = Layout { n_x: w.n_x(), n_y: w.n_y() };
    let bounds = layout.bounds();
    let opts = NelderMeadOptions {
        max_iterations: cfg.max_iterations,
        ftol: cfg.tolerance,
        ..Default::default()
    };

    struct Candidate {
        index: usize,
        p_guess: f64,
        gap: f64,
        params: Vec<f64>,
    }

    let candidates: Vec<Candidate> = (0..cfg.restarts)
        .into_par_iter()
        .map(|index| {
            let mut rng = stream(cfg.seed, index as u64);
            let mut x = random_point(&bounds, &mut rng);
            let mut e = Vec::with_capacity(w.n_x() * w.n_y());
            for mu in PENALTY_SCHEDULE {
                let objective = |p: &[f64]| {
                    layout.correlators(p, &mut e);
                    let pg = spec.score(&e, w.n_x(), w.n_y());
                    pg - mu * (w.eval_correlators(&e) - w_star).abs()
                };
                x = maximize(objective, &x, &bounds, &opts).x;
            }
            layout.correlators(&x, &mut e);
            Candidate {
                index,
                p_guess: spec.score(&e, w.n_x(), w.n_y()),
                gap: (w.eval_correlators(&e) - w_star).abs(),
                params: x,
            }
        })
        .collect();

    let best = candidates
        .into_iter()
        .filter(|c| c.gap <= FEASIBILITY_TOL)
        .reduce(|a, b| {
            if b.p_guess > a.p_guess || (b.p_guess == a.p_guess && b.index < a.index) { b } else { a }
        })
        .ok_or_else(|| {
            Error::NonConvergent(format!(
                "no restart met |W − {w_star}| ≤ {FEASIBILITY_TOL} for {}",
                w.name
            ))
        })?;

    let mut e = Vec::new();
    layout.correlators(&best.params, &mut e);
    Ok(GuessingOptimum {
        p_guess: best.p_guess,
        min_entropy: min_entropy(best.p_guess)?,
        witness_value: w.eval_correlators(&e),
        preparations: layout.preparations(&best.params),
        measurements: layout.measurements(&best.params),
        restart_index: best.index,
    })
}

/// Result of the closed-form bound, with the clamp event surfaced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticalBound {
    pub value: f64,
    /// Set when the radicand fell below −1e-9 and was clamped to zero.
    pub clamped: bool,
}

impl AnalyticalBound {
    pub fn min_entropy(&self) -> f64 {
        -self.value.log2()
    }
}

/// Upper bound `F[S3(w)]` on the uniform average guessing probability in the
/// three-preparation, two-setting scenario.
///
/// `F = ½ + ½·sqrt(½ + (A² − [(S − w)²/2 − A]²) / (2B²))` with
/// `A = w² + (1−w)²` and `B = 2w(1−w)`.
pub fn analytical_bound_f(s: f64, w: f64) -> Result<AnalyticalBound> {
    if !(w > 0.0 && w < 1.0) {
        return domain(format!("tilt w = {w} must lie strictly inside (0, 1)"));
    }
    let (classical, quantum) = (tilted_classical_bound(w), tilted_quantum_bound(w));
    if s > quantum + 1e-9 {
        return domain(format!("S = {s} exceeds the quantum bound {quantum} at w = {w}"));
    }
    if s < classical - 1e-9 {
        return domain(format!("S = {s} is below the classical bound {classical} at w = {w}"));
    }
    let a = w * w + (1.0 - w) * (1.0 - w);
    let b = 2.0 * w * (1.0 - w);
    let u = 0.5 * (s - w) * (s - w) - a;
    let radicand = 0.5 + (a * a - u * u) / (2.0 * b * b);
    let clamped = radicand < -1e-9;
    Ok(AnalyticalBound { value: 0.5 + 0.5 * radicand.max(0.0).sqrt(), clamped })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyPoint {
    pub w_star: f64,
    pub normalized: Option<f64>,
    pub p_guess: Option<f64>,
    pub h_min: Option<f64>,
    pub f_bound: Option<f64>,
    pub h_min_analytical: Option<f64>,
    /// Why the optimization produced no value at this point.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyCurve {
    pub witness: String,
    pub points: Vec<EntropyPoint>,
}

impl EntropyCurve {
    pub const CSV_HEADER: &'static str = "W_star,normalized,p_guess,H_min,F_bound,H_min_analytical";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                fmt_num(p.w_star),
                fmt_opt(p.normalized),
                fmt_opt(p.p_guess),
                fmt_opt(p.h_min),
                fmt_opt(p.f_bound),
                fmt_opt(p.h_min_analytical),
            ));
        }
        out
    }
}

/// Constrained optimum at every grid value of `W*`.
///
/// Each point runs with its own derived seed. The analytical columns are
/// filled for tilted witnesses with `w ∈ (0, 1)`.
pub fn min_entropy_curve(
    w: &Witness,
    spec: &GuessingSpec,
    grid: &[f64],
    cfg: &OptimizerConfig,
) -> Result<EntropyCurve> {
    spec.validate(w.n_x(), w.n_y())?;
    let points = grid
        .par_iter()
        .enumerate()
        .map(|(i, &w_star)| {
            let point_cfg = OptimizerConfig { seed: sub_seed(cfg.seed, i as u64), ..*cfg };
            let analytical = w
                .tilt
                .filter(|t| *t > 0.0 && *t < 1.0)
                .and_then(|t| analytical_bound_f(w_star, t).ok());
            let mut point = EntropyPoint {
                w_star,
                normalized: w.normalized(w_star),
                p_guess: None,
                h_min: None,
                f_bound: analytical.map(|f| f.value),
                h_min_analytical: analytical.map(|f| f.min_entropy()),
                error: None,
            };
            match max_guessing_given_witness(w, w_star, spec, &point_cfg) {
                Ok(opt) => {
                    point.p_guess = Some(opt.p_guess);
                    point.h_min = Some(opt.min_entropy);
                }
                Err(e) => point.error = Some(e.to_string()),
            }
            point
        })
        .collect();
    Ok(EntropyCurve { witness: w.name.clone(), points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::witness::{make_s3, make_s3_tilted};

    fn deterministic() -> Behavior {
        Behavior::from_p0(3, 2, vec![1.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap()
    }

    fn all_modes() -> Vec<GuessingSpec> {
        vec![
            GuessingSpec::Global,
            GuessingSpec::Conditional { x: 1, y: 0 },
            GuessingSpec::Average { p_x: vec![0.2, 0.3, 0.5], p_y: vec![0.6, 0.4] },
            GuessingSpec::UniformAverage,
        ]
    }

    #[test]
    fn uniform_and_deterministic_behaviors() {
        for spec in all_modes() {
            let u = guessing_probability(&Behavior::uniform(3, 2), &spec).unwrap();
            assert!((u - 0.5).abs() < 1e-15);
            let d = guessing_probability(&deterministic(), &spec).unwrap();
            assert!((d - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn bad_weights_rejected() {
        let beh = Behavior::uniform(3, 2);
        let bad = GuessingSpec::Average { p_x: vec![0.5, 0.5, 0.5], p_y: vec![0.5, 0.5] };
        assert!(guessing_probability(&beh, &bad).is_err());
        let neg = GuessingSpec::Average { p_x: vec![1.5, -0.5, 0.0], p_y: vec![0.5, 0.5] };
        assert!(guessing_probability(&beh, &neg).is_err());
        let short = GuessingSpec::Average { p_x: vec![1.0], p_y: vec![0.5, 0.5] };
        assert!(guessing_probability(&beh, &short).is_err());
        assert!(guessing_probability(&beh, &GuessingSpec::Conditional { x: 3, y: 0 }).is_err());
    }

    #[test]
    fn ties_guess_zero() {
        assert_eq!(best_guess(&Behavior::uniform(1, 1), 0, 0), 0);
    }

    #[test]
    fn min_entropy_values() {
        assert_eq!(min_entropy(1.0).unwrap(), 0.0);
        assert_eq!(min_entropy(0.5).unwrap(), 1.0);
        assert!((min_entropy(0.85355).unwrap() - 0.2284).abs() < 1e-4);
        assert!(min_entropy(0.0).is_err());
        assert!(min_entropy(-0.1).is_err());
    }

    #[test]
    fn analytical_bound_examples() {
        let top = analytical_bound_f(2f64.sqrt() + 0.5, 0.5).unwrap();
        assert!((top.value - (0.5 + 0.5 * 0.5f64.sqrt())).abs() < 1e-12);
        assert!((top.min_entropy() - 0.228).abs() < 1e-3);
        assert!(!top.clamped);

        let classical = analytical_bound_f(1.5, 0.5).unwrap();
        assert!((classical.value - 1.0).abs() < 1e-12);

        let q = tilted_quantum_bound(0.3);
        assert!((analytical_bound_f(q, 0.3).unwrap().min_entropy() - 0.228).abs() < 1e-3);
    }

    #[test]
    fn analytical_bound_domain() {
        assert!(analytical_bound_f(1.5, 0.0).is_err());
        assert!(analytical_bound_f(1.5, 1.0).is_err());
        assert!(analytical_bound_f(2.0, 0.5).is_err());
        assert!(analytical_bound_f(1.0, 0.5).is_err());
    }

    #[test]
    fn above_quantum_bound_is_infeasible() {
        let cfg = OptimizerConfig::default().with_restarts(2);
        let r = max_guessing_given_witness(&make_s3(), 3.9, &GuessingSpec::UniformAverage, &cfg);
        assert!(matches!(r, Err(Error::Infeasible(_))));
    }

    #[test]
    fn classical_point_is_fully_predictable() {
        let cfg = OptimizerConfig::default().with_restarts(16);
        let w = make_s3_tilted(0.5).unwrap();
        let r = max_guessing_given_witness(&w, 1.5, &GuessingSpec::UniformAverage, &cfg).unwrap();
        assert!((r.p_guess - 1.0).abs() < 1e-6);
        assert!(r.min_entropy < 1e-5);
    }

    #[test]
    fn csv_has_empty_cells_for_missing_values() {
        let curve = EntropyCurve {
            witness: "s3".into(),
            points: vec![EntropyPoint {
                w_star: 3.0,
                normalized: None,
                p_guess: Some(1.0),
                h_min: Some(0.0),
                f_bound: None,
                h_min_analytical: None,
                error: None,
            }],
        };
        let csv = curve.to_csv();
        assert_eq!(csv.lines().nth(1).unwrap(), "3.00000000000,,1.00000000000,0.00000000000,,");
    }
}
