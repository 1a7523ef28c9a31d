//! Witness violations when Bob's reference frame is unknown.
//!
//! The projective protocol rotates Bob's Bloch vectors by random rotations.
//! The CV protocol shifts the phase of every pooled measurement by a common
//! offset. Both maximize the `S3` form over relabelings.

use std::f64::consts::{PI, SQRT_2, TAU};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cv::{DisplacementSetting, HomodyneSetting};
use crate::error::{domain, Result};
use crate::linalg::{BlochVector, Complex2x2};
use crate::optimize::nelder_mead::{maximize, random_point, Bound, NelderMeadOptions};
use crate::optimize::{max_witness, MeasurementKind, MeasurementSetting, OptimizerConfig, SchemeSpec};
use crate::qubit::state_from_angles;
use crate::report::fmt_num;
use crate::rng::stream;
use crate::witness::make_s3;

pub const S3_CLASSICAL: f64 = 3.0;
pub const S3_QUANTUM: f64 = 1.0 + 2.0 * SQRT_2;
pub const DEFAULT_BIN_WIDTH: f64 = 0.01;
/// Band edges `[3, 3.4)`, `[3.4, 3.6]`, `(3.6, 1+2√2]`.
pub const BAND_EDGES: [f64; 2] = [3.4, 3.6];

/// One relabeling of the `S3` form onto a larger correlator table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelabelingIndex {
    /// Ordered, pairwise-distinct preparations `(x, x′, x″)`.
    pub preparations: [usize; 3],
    /// Ordered measurements `(y, y′)`, `y ≠ y′`.
    pub measurements: [usize; 2],
    /// Outcome flips `s_y, s_{y′}`, each `±1`.
    pub flips: [i8; 2],
}

impl RelabelingIndex {
    /// All relabelings for `n_x` preparations and `n_y` settings, in a fixed order.
    pub fn enumerate(n_x: usize, n_y: usize) -> Vec<Self> {
        let mut out = Vec::new();
        for x0 in 0..n_x {
            for x1 in (0..n_x).filter(|&v| v != x0) {
                for x2 in (0..n_x).filter(|&v| v != x0 && v != x1) {
                    for y0 in 0..n_y {
                        for y1 in (0..n_y).filter(|&v| v != y0) {
                            for flips in [[1, 1], [1, -1], [-1, 1], [-1, -1]] {
                                out.push(Self {
                                    preparations: [x0, x1, x2],
                                    measurements: [y0, y1],
                                    flips,
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// `S = E_{xy} + E_{xy′} + E_{x′y} − E_{x′y′} − E_{x″y}` on the relabeled table.
    pub fn evaluate(&self, e: &[f64], n_y: usize) -> f64 {
        let [x, xp, xpp] = self.preparations;
        let [y, yp] = self.measurements;
        let (s, sp) = (f64::from(self.flips[0]), f64::from(self.flips[1]));
        let at = |a: usize, b: usize| e[a * n_y + b];
        s * at(x, y) + sp * at(x, yp) + s * at(xp, y) - sp * at(xp, yp) - s * at(xpp, y)
    }
}

/// Largest relabeled value, with the first relabeling that attains it.
pub fn relabeled_max(e: &[f64], n_x: usize, n_y: usize) -> (f64, RelabelingIndex) {
    relabeled_max_over(&RelabelingIndex::enumerate(n_x, n_y), e, n_y)
}

fn relabeled_max_over(labels: &[RelabelingIndex], e: &[f64], n_y: usize) -> (f64, RelabelingIndex) {
    let mut best = (f64::NEG_INFINITY, labels[0]);
    for l in labels {
        let v = l.evaluate(e, n_y);
        if v > best.0 {
            best = (v, *l);
        }
    }
    best
}

pub fn preparation_catalog() -> [BlochVector; 4] {
    let h = 1.0 / SQRT_2;
    [
        BlochVector::new(1.0, 0.0, 0.0),
        BlochVector::new(0.0, 1.0, 0.0),
        BlochVector::new(-h, -h, 0.0),
        BlochVector::new(0.0, 0.0, 1.0),
    ]
}

pub fn measurement_catalog() -> [BlochVector; 3] {
    let h = 1.0 / SQRT_2;
    [BlochVector::new(h, -h, 0.0), BlochVector::new(h, h, 0.0), BlochVector::new(0.0, 0.0, 1.0)]
}

pub type Rotation = [[f64; 3]; 3];

/// Distribution of the random frame rotation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationMeasure {
    /// `R_z(α) R_y(β) R_z(γ)` with `α, γ` uniform on `[0, 2π)` and `β` uniform on `[0, π]`.
    #[default]
    UniformEuler,
    Haar,
}

impl RotationMeasure {
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> Rotation {
        match self {
            Self::Haar => haar_rotation(rng),
            Self::UniformEuler => {
                let a = rng.random_range(0.0..TAU);
                let b = rng.random_range(0.0..=PI);
                let c = rng.random_range(0.0..TAU);
                euler_zyz(a, b, c)
            }
        }
    }
}

pub fn euler_zyz(alpha: f64, beta: f64, gamma: f64) -> Rotation {
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    let (sc, cc) = gamma.sin_cos();
    [
        [ca * cb * cc - sa * sc, -ca * cb * sc - sa * cc, ca * sb],
        [sa * cb * cc + ca * sc, -sa * cb * sc + ca * cc, sa * sb],
        [-sb * cc, sb * sc, cb],
    ]
}

/// Haar-distributed rotation from a normalized Gaussian quaternion.
pub fn haar_rotation<R: Rng + ?Sized>(rng: &mut R) -> Rotation {
    let mut q = [0.0f64; 4];
    let mut n2 = 0.0;
    while n2 < 1e-12 {
        for v in &mut q {
            *v = rng.sample(StandardNormal);
        }
        n2 = q.iter().map(|v| v * v).sum();
    }
    let n = n2.sqrt();
    let [w, x, y, z] = q.map(|v| v / n);
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

pub fn rotate(r: &Rotation, v: &BlochVector) -> BlochVector {
    let [a, b, c] = r.map(|row| row[0] * v.0[0] + row[1] * v.0[1] + row[2] * v.0[2]);
    BlochVector::new(a, b, c)
}

/// Maximal relabeled `S3` value with Bob's frame rotated by `r`.
pub fn projective_s_max(r: &Rotation) -> f64 {
    projective_s_max_with(&RelabelingIndex::enumerate(4, 3), r)
}

fn projective_s_max_with(labels: &[RelabelingIndex], r: &Rotation) -> f64 {
    let bob = measurement_catalog().map(|b| rotate(r, &b));
    // Pure state with Bloch vector a, projector with Bloch vector n: E = a·n.
    let e: Vec<f64> = preparation_catalog()
        .iter()
        .flat_map(|a| bob.iter().map(move |n| a.dot(n)))
        .collect();
    relabeled_max_over(labels, &e, 3).0
}

/// Per-sample `S_max` for `samples` random rotations; sample `i` uses stream `i`.
pub fn projective_samples(samples: usize, seed: u64, measure: RotationMeasure) -> Vec<f64> {
    let labels = RelabelingIndex::enumerate(4, 3);
    (0..samples)
        .into_par_iter()
        .map(|i| projective_s_max_with(&labels, &measure.sample(&mut stream(seed, i as u64))))
        .collect()
}

/// Histogram of violating values, normalized as a density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalPdf {
    pub bin_width: f64,
    pub violating: usize,
    /// `(bin_center, density)` for every bin from the classical bound to the
    /// last occupied one.
    pub bins: Vec<(f64, f64)>,
}

impl ConditionalPdf {
    pub fn is_empty(&self) -> bool {
        self.violating == 0
    }

    /// `Σ density·ΔS`; 1 unless empty.
    pub fn total_mass(&self) -> f64 {
        self.bins.iter().map(|(_, d)| d * self.bin_width).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_center,density\n");
        for (c, d) in &self.bins {
            out.push_str(&format!("{},{}\n", fmt_num(*c), fmt_num(*d)));
        }
        out
    }
}

pub fn conditional_pdf(values: &[f64], bin_width: f64) -> Result<ConditionalPdf> {
    if bin_width.is_nan() || bin_width <= 0.0 {
        return domain(format!("bin width {bin_width} must be positive"));
    }
    let mut counts: Vec<usize> = Vec::new();
    let mut violating = 0;
    for v in values.iter().filter(|v| **v > S3_CLASSICAL) {
        let k = ((v - S3_CLASSICAL) / bin_width).floor() as usize;
        if counts.len() <= k {
            counts.resize(k + 1, 0);
        }
        counts[k] += 1;
        violating += 1;
    }
    let norm = violating as f64 * bin_width;
    let bins = counts
        .iter()
        .enumerate()
        .map(|(k, c)| (S3_CLASSICAL + (k as f64 + 0.5) * bin_width, *c as f64 / norm))
        .collect();
    Ok(ConditionalPdf { bin_width, violating, bins })
}

/// A sample fraction with its Wilson 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fraction {
    pub count: usize,
    pub total: usize,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Fraction {
    pub fn new(count: usize, total: usize) -> Self {
        let (lower, upper) = wilson_interval(count, total);
        Self { count, total, value: count as f64 / total as f64, lower, upper }
    }

    /// Whether the interval widened by `slack` contains `target`.
    pub fn compatible_with(&self, target: f64, slack: f64) -> bool {
        self.lower - slack <= target && target <= self.upper + slack
    }
}

/// Wilson score interval at 95% confidence.
pub fn wilson_interval(count: usize, total: usize) -> (f64, f64) {
    const Z: f64 = 1.959_963_984_540_054;
    if total == 0 {
        return (0.0, 1.0);
    }
    let n = total as f64;
    let p = count as f64 / n;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameFreeReport {
    pub samples: usize,
    pub seed: u64,
    pub measure: RotationMeasure,
    pub non_violating: Fraction,
    /// Fractions of all samples in `[3, 3.4)`, `[3.4, 3.6]`, `(3.6, 1+2√2]`.
    pub bands: [Fraction; 3],
    pub max_observed: f64,
    pub histogram: ConditionalPdf,
}

impl FrameFreeReport {
    pub fn from_values(values: &[f64], seed: u64, measure: RotationMeasure, bin_width: f64) -> Result<Self> {
        if values.is_empty() {
            return domain("no samples");
        }
        let n = values.len();
        let count = |pred: &dyn Fn(f64) -> bool| values.iter().filter(|v| pred(**v)).count();
        let [lo, hi] = BAND_EDGES;
        Ok(Self {
            samples: n,
            seed,
            measure,
            non_violating: Fraction::new(count(&|v| v <= S3_CLASSICAL), n),
            bands: [
                Fraction::new(count(&|v| v >= S3_CLASSICAL && v < lo), n),
                Fraction::new(count(&|v| (lo..=hi).contains(&v)), n),
                Fraction::new(count(&|v| v > hi), n),
            ],
            max_observed: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            histogram: conditional_pdf(values, bin_width)?,
        })
    }
}

pub fn projective_framefree(samples: usize, seed: u64) -> Result<FrameFreeReport> {
    projective_framefree_with(samples, seed, RotationMeasure::default())
}

pub fn projective_framefree_with(samples: usize, seed: u64, measure: RotationMeasure) -> Result<FrameFreeReport> {
    if samples == 0 {
        return domain("sample count must be at least 1");
    }
    let values = projective_samples(samples, seed, measure);
    FrameFreeReport::from_values(&values, seed, measure, DEFAULT_BIN_WIDTH)
}

/// Fixed states plus a pool of settings sharing one phase reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvPool {
    pub kind: MeasurementKind,
    pub states: Vec<Complex2x2>,
    pub settings: Vec<MeasurementSetting>,
    /// Value of the optimal pair at zero offset.
    pub optimum: f64,
}

impl CvPool {
    /// `S_max` after shifting every setting's phase by `gamma`.
    pub fn s_max(&self, gamma: f64) -> f64 {
        let labels = RelabelingIndex::enumerate(self.states.len(), self.settings.len());
        self.s_max_with(&labels, gamma)
    }

    fn s_max_with(&self, labels: &[RelabelingIndex], gamma: f64) -> f64 {
        let obs: Vec<Complex2x2> = self
            .settings
            .iter()
            .map(|s| s.with_phase_offset(gamma).observable_unchecked())
            .collect();
        let e: Vec<f64> = self
            .states
            .iter()
            .flat_map(|rho| obs.iter().map(move |o| rho.trace_product(o)))
            .collect();
        relabeled_max_over(labels, &e, obs.len()).0
    }

    fn worst_case(&self, grid: &[f64]) -> f64 {
        let labels = RelabelingIndex::enumerate(self.states.len(), self.settings.len());
        grid.iter().map(|g| self.s_max_with(&labels, *g)).fold(f64::INFINITY, f64::min)
    }
}

/// Offsets `0, Δ, …, 2π` with `n` points.
pub fn gamma_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| TAU * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Offsets used when choosing extra displacement settings.
const SELECTION_GRID: usize = 73;

/// Build the pool: the optimal pair for `S3` under the all-`kind` scheme,
/// then `K − 2` extras.
///
/// A displacement extra maximizes the worst case of `S_max` over a coarse
/// offset grid, one setting at a time. A homodyne extra sits at the middle of
/// the widest gap between existing angles on `[0, π)` and reuses the first
/// optimal setting's bin.
pub fn build_cv_pool(kind: MeasurementKind, pool_size: usize, cfg: &OptimizerConfig) -> Result<CvPool> {
    if pool_size < 2 {
        return domain(format!("pool size {pool_size} must be at least 2"));
    }
    if kind == MeasurementKind::GeneralProjective {
        return domain("the phase-offset protocol needs homodyne or displacement settings");
    }
    let opt = max_witness(&make_s3(), &SchemeSpec::uniform(kind, 2), cfg)?;
    let states = opt
        .preparations
        .iter()
        .map(|p| state_from_angles(*p))
        .collect::<Result<Vec<_>>>()?;
    let mut pool = CvPool { kind, states, settings: opt.settings.clone(), optimum: opt.best_value };
    let grid = gamma_grid(SELECTION_GRID);
    for extra in 0..pool_size - 2 {
        let next = match kind {
            MeasurementKind::Homodyne => widest_gap_homodyne(&pool.settings),
            _ => best_extra_displacement(&pool, &grid, cfg, extra as u64),
        };
        pool.settings.push(next);
    }
    Ok(pool)
}

fn widest_gap_homodyne(settings: &[MeasurementSetting]) -> MeasurementSetting {
    let MeasurementSetting::Homodyne(first) = settings[0] else {
        unreachable!("homodyne pool");
    };
    let mut angles: Vec<f64> = settings
        .iter()
        .filter_map(|s| match s {
            MeasurementSetting::Homodyne(h) => Some(h.theta.rem_euclid(PI)),
            _ => None,
        })
        .collect();
    angles.sort_by(f64::total_cmp);
    let mut best = (f64::NEG_INFINITY, 0.0);
    for (i, a) in angles.iter().enumerate() {
        let next = angles.get(i + 1).copied().unwrap_or(angles[0] + PI);
        if next - a > best.0 {
            best = (next - a, (a + next) / 2.0);
        }
    }
    MeasurementSetting::Homodyne(HomodyneSetting { theta: best.1.rem_euclid(PI), ..first })
}

fn best_extra_displacement(pool: &CvPool, grid: &[f64], cfg: &OptimizerConfig, salt: u64) -> MeasurementSetting {
    let bounds = [Bound::closed(0.0, 1.0), Bound::periodic(0.0, TAU)];
    let opts = NelderMeadOptions { max_iterations: 400, ftol: 1e-7, ..Default::default() };
    let restarts = cfg.restarts.clamp(1, 32);
    let candidate = |p: &[f64]| MeasurementSetting::Displacement(DisplacementSetting { r: p[0], phi: p[1] });
    let score = |p: &[f64]| {
        let mut trial = pool.clone();
        trial.settings.push(candidate(p));
        trial.worst_case(grid)
    };
    let best = (0..restarts)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(cfg.seed ^ 0xF4A3_E000, salt * 1_000 + i as u64);
            let x0 = random_point(&bounds, &mut rng);
            (i, maximize(score, &x0, &bounds, &opts))
        })
        .reduce_with(|a, b| if b.1.value > a.1.value || (b.1.value == a.1.value && b.0 < a.0) { b } else { a })
        .expect("at least one restart");
    candidate(&best.1.x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub gamma: f64,
    pub s_max: f64,
    pub violated: bool,
}

pub fn sweep_to_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("gamma,S_max,violated_flag\n");
    for p in points {
        out.push_str(&format!("{},{},{}\n", fmt_num(p.gamma), fmt_num(p.s_max), u8::from(p.violated)));
    }
    out
}

pub fn sweep_pool(pool: &CvPool, gamma_grid: &[f64]) -> Vec<SweepPoint> {
    let labels = RelabelingIndex::enumerate(pool.states.len(), pool.settings.len());
    gamma_grid
        .par_iter()
        .map(|&gamma| {
            let s_max = pool.s_max_with(&labels, gamma);
            SweepPoint { gamma, s_max, violated: s_max > S3_CLASSICAL }
        })
        .collect()
}

pub fn cv_framefree(
    kind: MeasurementKind,
    pool_size: usize,
    gamma_grid: &[f64],
    cfg: &OptimizerConfig,
) -> Result<Vec<SweepPoint>> {
    let pool = build_cv_pool(kind, pool_size, cfg)?;
    Ok(sweep_pool(&pool, gamma_grid))
}

#[cfg(test)]
mod tests {
    use super::*;

    const IDENTITY: Rotation = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

    #[test]
    fn relabeling_count() {
        assert_eq!(RelabelingIndex::enumerate(4, 3).len(), 576);
        assert_eq!(RelabelingIndex::enumerate(3, 4).len(), 6 * 12 * 4);
    }

    #[test]
    fn identity_frame_reaches_quantum_bound() {
        assert!((projective_s_max(&IDENTITY) - S3_QUANTUM).abs() < 1e-9);
    }

    #[test]
    fn haar_rotations_are_orthogonal() {
        let mut rng = stream(1, 0);
        for _ in 0..50 {
            let r = haar_rotation(&mut rng);
            for i in 0..3 {
                for j in 0..3 {
                    let d: f64 = (0..3).map(|k| r[i][k] * r[j][k]).sum();
                    assert!((d - f64::from(u8::from(i == j))).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn euler_matches_axis_products() {
        let r = euler_zyz(0.3, 1.1, -0.7);
        let z = |a: f64| -> Rotation {
            let (s, c) = a.sin_cos();
            [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
        };
        let (s, c) = 1.1f64.sin_cos();
        let y: Rotation = [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]];
        let mul = |a: &Rotation, b: &Rotation| -> Rotation {
            std::array::from_fn(|i| std::array::from_fn(|j| (0..3).map(|k| a[i][k] * b[k][j]).sum()))
        };
        let expected = mul(&mul(&z(0.3), &y), &z(-0.7));
        for i in 0..3 {
            for j in 0..3 {
                assert!((r[i][j] - expected[i][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn pdf_examples() {
        assert!(conditional_pdf(&[2.0, 3.0], 0.01).unwrap().is_empty());
        let one = conditional_pdf(&[3.4], 0.01).unwrap();
        let occupied: Vec<_> = one.bins.iter().filter(|b| b.1 > 0.0).collect();
        assert_eq!(occupied.len(), 1);
        assert!((occupied[0].1 - 100.0).abs() < 1e-9);
        assert!(conditional_pdf(&[3.4], 0.0).is_err());
    }

    #[test]
    fn wilson_contains_point_estimate() {
        let (lo, hi) = wilson_interval(42, 100);
        assert!(lo < 0.42 && 0.42 < hi);
        assert_eq!(wilson_interval(0, 10).0, 0.0);
    }

    #[test]
    fn pool_size_checked() {
        let cfg = OptimizerConfig::default().with_restarts(2);
        assert!(build_cv_pool(MeasurementKind::Displacement, 1, &cfg).is_err());
    }

    #[test]
    fn grid_endpoints() {
        let g = gamma_grid(721);
        assert_eq!(g.len(), 721);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[720], TAU);
    }
}
