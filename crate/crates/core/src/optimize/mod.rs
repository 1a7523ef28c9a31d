//! Maximal witness values over preparations and scheme-restricted
//! measurements, with optional detection loss on displacement settings.
//!
//! For fixed measurements the witness is linear in each preparation, so the
//! best pure state for input `x` is the top eigenvector of
//! `K_x = Σ_y c_{xy} K_y`, where `K_y` represents the (possibly lossy)
//! observable of setting `y` as a functional on input states. The random
//! restarts and the simplex search therefore run over measurement parameters
//! only; the preparations are recovered from the eigenvectors.

pub mod nelder_mead;

use std::f64::consts::{PI, TAU};
use std::fmt;

use log::{debug, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cv::{
    amplitude_damp, amplitude_damp_unchecked, displacement_effect_unchecked,
    homodyne_effect_unchecked, DisplacementSetting, HomodyneSetting, LossParameter,
    QUADRATURE_LIMIT,
};
use crate::error::{domain, Error, Result};
use crate::linalg::Complex2x2;
use crate::qubit::{
    projector_unchecked, state_from_angles, wrap_angle, Behavior, PreparationAngles,
    ProjectiveAngles,
};
use crate::rng::{stream, DEFAULT_SEED};
use crate::witness::{eval_witness, make_s3_tilted, Witness};

use nelder_mead::{maximize, random_point, Bound, NelderMeadOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MeasurementKind {
    Homodyne,
    Displacement,
    GeneralProjective,
}

impl MeasurementKind {
    pub fn from_letter(c: char) -> Result<Self> {
        match c.to_ascii_uppercase() {
            'H' => Ok(Self::Homodyne),
            'D' => Ok(Self::Displacement),
            'P' => Ok(Self::GeneralProjective),
            other => domain(format!("unknown measurement letter '{other}' (expected H, D or P)")),
        }
    }

    pub fn letter(self) -> char {
        match self {
            Self::Homodyne => 'H',
            Self::Displacement => 'D',
            Self::GeneralProjective => 'P',
        }
    }

    fn bounds(self) -> [Bound; 3] {
        match self {
            // (θ, a, b − a)
            Self::Homodyne => [
                Bound::closed(0.0, PI),
                Bound::closed(-QUADRATURE_LIMIT, QUADRATURE_LIMIT),
                Bound::closed(0.0, 2.0 * QUADRATURE_LIMIT),
            ],
            // (r, φ)
            Self::Displacement => [
                Bound::closed(0.0, 1.0),
                Bound::periodic(0.0, TAU),
                Bound::closed(0.0, 0.0),
            ],
            // (β, γ)
            Self::GeneralProjective => [
                Bound::closed(0.0, PI),
                Bound::periodic(0.0, TAU),
                Bound::closed(0.0, 0.0),
            ],
        }
    }

    fn n_params(self) -> usize {
        match self {
            Self::Homodyne => 3,
            Self::Displacement | Self::GeneralProjective => 2,
        }
    }

    fn decode(self, p: &[f64]) -> MeasurementSetting {
        match self {
            Self::Homodyne => MeasurementSetting::Homodyne(HomodyneSetting {
                theta: p[0],
                bin_lo: p[1],
                bin_hi: (p[1] + p[2]).min(QUADRATURE_LIMIT),
            }),
            Self::Displacement => {
                MeasurementSetting::Displacement(DisplacementSetting { r: p[0], phi: p[1] })
            }
            Self::GeneralProjective => {
                MeasurementSetting::Projective(ProjectiveAngles { beta: p[0], gamma: p[1] })
            }
        }
    }
}

/// A concrete dichotomic measurement from one of the supported families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasurementSetting {
    Homodyne(HomodyneSetting),
    Displacement(DisplacementSetting),
    Projective(ProjectiveAngles),
}

impl MeasurementSetting {
    pub fn kind(&self) -> MeasurementKind {
        match self {
            Self::Homodyne(_) => MeasurementKind::Homodyne,
            Self::Displacement(_) => MeasurementKind::Displacement,
            Self::Projective(_) => MeasurementKind::GeneralProjective,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Homodyne(s) => s.validate(),
            Self::Displacement(s) => s.validate(),
            Self::Projective(p) => ProjectiveAngles::new(p.beta, p.gamma).map(|_| ()),
        }
    }

    /// Outcome-0 effect `M_{0|y}`.
    pub fn effect(&self) -> Result<Complex2x2> {
        self.validate()?;
        Ok(self.effect_unchecked())
    }

    pub(crate) fn effect_unchecked(&self) -> Complex2x2 {
        match self {
            Self::Homodyne(s) => homodyne_effect_unchecked(s.theta, s.bin_lo, s.bin_hi),
            Self::Displacement(s) => displacement_effect_unchecked(s.r, s.phi),
            Self::Projective(p) => projector_unchecked(p.beta, p.gamma),
        }
    }

    /// `M_{0|y} − M_{1|y} = 2M_{0|y} − I`.
    pub fn observable(&self) -> Result<Complex2x2> {
        Ok(self.effect()?.scale(2.0) - Complex2x2::identity())
    }

    pub(crate) fn observable_unchecked(&self) -> Complex2x2 {
        self.effect_unchecked().scale(2.0) - Complex2x2::identity()
    }

    /// Rotate the measurement's phase-space angle by `gamma`.
    ///
    /// Displacement phases wrap modulo 2π. Homodyne angles wrap modulo 2π as
    /// well; an angle in `(π, 2π)` is folded back into `[0, π]` by mirroring
    /// the bin (`θ + π` with `[a, b]` measures the same effect as `θ` with
    /// `[−b, −a]`).
    pub fn with_phase_offset(&self, gamma: f64) -> Self {
        match *self {
            Self::Homodyne(s) => {
                let t = wrap_angle(s.theta + gamma);
                if t <= PI {
                    Self::Homodyne(HomodyneSetting { theta: t, ..s })
                } else {
                    Self::Homodyne(HomodyneSetting {
                        theta: t - PI,
                        bin_lo: -s.bin_hi,
                        bin_hi: -s.bin_lo,
                    })
                }
            }
            Self::Displacement(s) => {
                Self::Displacement(DisplacementSetting { phi: wrap_angle(s.phi + gamma), ..s })
            }
            Self::Projective(p) => {
                Self::Projective(ProjectiveAngles { gamma: wrap_angle(p.gamma + gamma), ..p })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SettingSpec {
    pub kind: MeasurementKind,
    /// Detection efficiency; only displacement settings are lossy.
    pub eta: f64,
}

/// Measurement family (and loss) for every setting `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeSpec {
    pub settings: Vec<SettingSpec>,
}

impl SchemeSpec {
    /// Parse a scheme string such as `"HD"` or `"DDH"`.
    pub fn parse(s: &str) -> Result<Self> {
        if s.is_empty() {
            return domain("empty scheme string");
        }
        let settings = s
            .chars()
            .map(|c| MeasurementKind::from_letter(c).map(|kind| SettingSpec { kind, eta: 1.0 }))
            .collect::<Result<_>>()?;
        Ok(Self { settings })
    }

    pub fn uniform(kind: MeasurementKind, n_y: usize) -> Self {
        Self { settings: vec![SettingSpec { kind, eta: 1.0 }; n_y] }
    }

    /// Same scheme with every displacement setting at efficiency `eta`.
    pub fn with_efficiency(&self, eta: f64) -> Result<Self> {
        LossParameter::new(eta)?;
        let settings = self
            .settings
            .iter()
            .map(|s| SettingSpec {
                kind: s.kind,
                eta: if s.kind == MeasurementKind::Displacement { eta } else { 1.0 },
            })
            .collect();
        Ok(Self { settings })
    }

    pub fn n_y(&self) -> usize {
        self.settings.len()
    }

    pub fn label(&self) -> String {
        self.settings.iter().map(|s| s.kind.letter()).collect()
    }

    pub fn has_displacement(&self) -> bool {
        self.settings.iter().any(|s| s.kind == MeasurementKind::Displacement)
    }

    fn validate_for(&self, w: &Witness) -> Result<()> {
        if self.n_y() != w.n_y() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} settings for {}", w.n_y(), w.name),
                got: format!("scheme '{}'", self.label()),
            });
        }
        for s in &self.settings {
            LossParameter::new(s.eta)?;
        }
        Ok(())
    }

    fn bounds(&self) -> Vec<Bound> {
        self.settings
            .iter()
            .flat_map(|s| s.kind.bounds().into_iter().take(s.kind.n_params()))
            .collect()
    }

    fn decode(&self, params: &[f64]) -> Vec<MeasurementSetting> {
        let mut offset = 0;
        self.settings
            .iter()
            .map(|s| {
                let n = s.kind.n_params();
                let m = s.kind.decode(&params[offset..offset + n]);
                offset += n;
                m
            })
            .collect()
    }
}

impl fmt::Display for SchemeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { restarts: 200, max_iterations: 2000, tolerance: 1e-9, seed: DEFAULT_SEED }
    }
}

impl OptimizerConfig {
    pub fn with_restarts(self, restarts: usize) -> Self {
        Self { restarts, ..self }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.max_iterations == 0 {
            return domain("restarts and max_iterations must be positive");
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return domain("tolerance must be positive");
        }
        Ok(())
    }

    pub(crate) fn nm_options(&self) -> NelderMeadOptions {
        NelderMeadOptions {
            max_iterations: self.max_iterations,
            ftol: self.tolerance,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub best_value: f64,
    pub preparations: Vec<PreparationAngles>,
    pub settings: Vec<MeasurementSetting>,
    pub restart_index: usize,
    pub iterations: usize,
    pub restarts: usize,
}

/// `K` with `Tr(Λ_η(ρ) O) = Tr(ρ K)` for every state `ρ`.
///
/// Built by probing the damped functional with the four states
/// `|0⟩, |1⟩, |+⟩, |+i⟩`, so the loss channel only ever acts on states.
fn damped_functional(observable: &Complex2x2, eta: f64) -> Complex2x2 {
    if eta >= 1.0 {
        return *observable;
    }
    let probe = |rho: Complex2x2| amplitude_damp_unchecked(&rho, eta).trace_product(observable);
    let k00 = probe(Complex2x2::diag(1.0, 0.0));
    let k11 = probe(Complex2x2::diag(0.0, 1.0));
    let mean = 0.5 * (k00 + k11);
    let plus = Complex2x2::from_real(0.5, 0.5, 0.5, 0.5);
    let plus_i = Complex2x2::from_bloch(crate::linalg::BlochVector::new(0.0, 1.0, 0.0));
    let k01 = num_complex::Complex64::new(probe(plus) - mean, mean - probe(plus_i));
    Complex2x2::new(k00.into(), k01, k01.conj(), k11.into())
}

fn setting_functionals(scheme: &SchemeSpec, settings: &[MeasurementSetting]) -> Vec<Complex2x2> {
    scheme
        .settings
        .iter()
        .zip(settings)
        .map(|(spec, m)| {
            let obs = m.observable_unchecked();
            if spec.kind == MeasurementKind::Displacement {
                damped_functional(&obs, spec.eta)
            } else {
                obs
            }
        })
        .collect()
}

fn preparation_operators(w: &Witness, functionals: &[Complex2x2]) -> Vec<Complex2x2> {
    (0..w.n_x())
        .map(|x| {
            functionals
                .iter()
                .enumerate()
                .fold(Complex2x2::zero(), |acc, (y, k)| acc + k.scale(w.coefficient(x, y)))
        })
        .collect()
}

/// Best witness value for fixed measurements, optimizing the preparations exactly.
pub fn value_with_optimal_states(w: &Witness, scheme: &SchemeSpec, settings: &[MeasurementSetting]) -> f64 {
    let ks = setting_functionals(scheme, settings);
    preparation_operators(w, &ks)
        .iter()
        .map(Complex2x2::max_eigenvalue_hermitian)
        .sum()
}

/// Optimal pure preparations for fixed measurements.
pub fn optimal_preparations(
    w: &Witness,
    scheme: &SchemeSpec,
    settings: &[MeasurementSetting],
) -> Vec<PreparationAngles> {
    let ks = setting_functionals(scheme, settings);
    preparation_operators(w, &ks)
        .iter()
        .map(|k| PreparationAngles::from_ket(k.top_eigenvector_hermitian()))
        .collect()
}

/// Evaluate an explicit strategy through the Born rule, damping the state
/// before every lossy displacement setting.
pub fn evaluate_strategy(
    w: &Witness,
    scheme: &SchemeSpec,
    preparations: &[PreparationAngles],
    settings: &[MeasurementSetting],
) -> Result<f64> {
    scheme.validate_for(w)?;
    if preparations.len() != w.n_x() || settings.len() != w.n_y() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} preparations, {} settings", w.n_x(), w.n_y()),
            got: format!("{}, {}", preparations.len(), settings.len()),
        });
    }
    eval_witness(w, &strategy_behavior(scheme, preparations, settings)?)
}

/// Behavior of an explicit strategy under the scheme's loss model.
pub fn strategy_behavior(
    scheme: &SchemeSpec,
    preparations: &[PreparationAngles],
    settings: &[MeasurementSetting],
) -> Result<Behavior> {
    let effects = settings.iter().map(MeasurementSetting::effect).collect::<Result<Vec<_>>>()?;
    let mut p0 = Vec::with_capacity(preparations.len() * settings.len());
    for prep in preparations {
        let rho = state_from_angles(*prep)?;
        for (spec, effect) in scheme.settings.iter().zip(&effects) {
            let arrived = if spec.kind == MeasurementKind::Displacement && spec.eta < 1.0 {
                amplitude_damp(&rho, LossParameter::new(spec.eta)?)?
            } else {
                rho
            };
            p0.push(arrived.trace_product(effect));
        }
    }
    Behavior::from_p0(preparations.len(), settings.len(), p0)
}

struct RestartOutcome {
    index: usize,
    value: f64,
    params: Vec<f64>,
    iterations: usize,
}

/// Pick the highest value; ties go to the lowest restart index so the merge
/// is independent of execution order.
fn merge_best(outcomes: Vec<RestartOutcome>) -> RestartOutcome {
    outcomes
        .into_iter()
        .reduce(|a, b| {
            if b.value > a.value || (b.value == a.value && b.index < a.index) { b } else { a }
        })
        .expect("at least one restart")
}

pub fn max_witness(w: &Witness, scheme: &SchemeSpec, cfg: &OptimizerConfig) -> Result<OptimizationResult> {
    cfg.validate()?;
    scheme.validate_for(w)?;
    let bounds = scheme.bounds();
    let opts = cfg.nm_options();
    let objective = |p: &[f64]| value_with_optimal_states(w, scheme, &scheme.decode(p));

    let outcomes: Vec<RestartOutcome> = (0..cfg.restarts)
        .into_par_iter()
        .map(|index| {
            let mut rng = stream(cfg.seed, index as u64);
            let x0 = random_point(&bounds, &mut rng);
            let out = maximize(objective, &x0, &bounds, &opts);
            RestartOutcome { index, value: out.value, params: out.x, iterations: out.iterations }
        })
        .collect();
    let best = merge_best(outcomes);
    let settings = scheme.decode(&best.params);
    let preparations = optimal_preparations(w, scheme, &settings);
    debug!(
        "max_witness {} {}: {:.9} (restart {})",
        w.name, scheme, best.value, best.index
    );
    Ok(OptimizationResult {
        best_value: best.value,
        preparations,
        settings,
        restart_index: best.index,
        iterations: best.iterations,
        restarts: cfg.restarts,
    })
}

/// Optimal `S3(w)` for each tilt in `w_grid`.
pub fn max_witness_tilted_curve(
    w_grid: &[f64],
    scheme: &SchemeSpec,
    cfg: &OptimizerConfig,
) -> Result<Vec<(f64, f64)>> {
    w_grid
        .iter()
        .map(|&t| {
            let witness = make_s3_tilted(t)?;
            Ok((t, max_witness(&witness, scheme, cfg)?.best_value))
        })
        .collect()
}

/// Optimal value at each efficiency in `etas`.
pub fn efficiency_curve(
    w: &Witness,
    scheme: &SchemeSpec,
    etas: &[f64],
    cfg: &OptimizerConfig,
) -> Result<Vec<(f64, f64)>> {
    etas.iter()
        .map(|&eta| Ok((eta, max_witness(w, &scheme.with_efficiency(eta)?, cfg)?.best_value)))
        .collect()
}

/// Absolute bisection width on η.
pub const BISECTION_WIDTH: f64 = 1e-3;
/// A witness value must exceed its reference by this much to count.
pub const VIOLATION_MARGIN: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", content = "eta", rename_all = "snake_case")]
pub enum Threshold {
    At(f64),
    Never,
}

impl Threshold {
    pub fn value(&self) -> Option<f64> {
        match self {
            Self::At(v) => Some(*v),
            Self::Never => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSearch {
    pub threshold: Threshold,
    /// Value the scheme has to beat.
    pub reference: f64,
    /// Every `(η, max value)` evaluated, in evaluation order.
    pub trace: Vec<(f64, f64)>,
    /// Whether the trace is nondecreasing in η (within 1e-6).
    pub monotone: bool,
}

fn is_monotone(trace: &[(f64, f64)]) -> bool {
    let mut sorted = trace.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    sorted.windows(2).all(|p| p[1].1 >= p[0].1 - 1e-6)
}

/// Smallest η in `[0, 1]` at which `max value(η) ≥ reference + margin`,
/// assuming the optimum is nondecreasing in η.
fn bisect_efficiency(
    w: &Witness,
    scheme: &SchemeSpec,
    cfg: &OptimizerConfig,
    reference: f64,
    margin: f64,
) -> Result<ThresholdSearch> {
    let mut trace = Vec::new();
    let passes = |eta: f64, trace: &mut Vec<(f64, f64)>| -> Result<bool> {
        let v = max_witness(w, &scheme.with_efficiency(eta)?, cfg)?.best_value;
        trace.push((eta, v));
        Ok(v >= reference + margin)
    };

    let threshold = if !passes(1.0, &mut trace)? {
        Threshold::Never
    } else if passes(0.0, &mut trace)? {
        Threshold::At(0.0)
    } else {
        let (mut lo, mut hi) = (0.0, 1.0);
        while hi - lo > BISECTION_WIDTH {
            let mid = 0.5 * (lo + hi);
            if passes(mid, &mut trace)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Threshold::At(0.5 * (lo + hi))
    };
    let monotone = is_monotone(&trace);
    if !monotone {
        warn!("non-monotone efficiency trace for {} {}: {:?}", w.name, scheme, trace);
    }
    Ok(ThresholdSearch { threshold, reference, trace, monotone })
}

/// Smallest displacement efficiency that still violates the classical bound.
pub fn critical_efficiency(w: &Witness, scheme: &SchemeSpec, cfg: &OptimizerConfig) -> Result<ThresholdSearch> {
    scheme.validate_for(w)?;
    if !scheme.has_displacement() {
        return domain(format!("scheme '{scheme}' has no displacement setting"));
    }
    bisect_efficiency(w, scheme, cfg, w.classical_bound, VIOLATION_MARGIN)
}

/// Smallest efficiency at which the scheme matches lossless all-homodyne detection.
pub fn crossover_efficiency(w: &Witness, scheme: &SchemeSpec, cfg: &OptimizerConfig) -> Result<ThresholdSearch> {
    scheme.validate_for(w)?;
    let homodyne = SchemeSpec::uniform(MeasurementKind::Homodyne, w.n_y());
    let reference = max_witness(w, &homodyne, cfg)?.best_value;
    bisect_efficiency(w, scheme, cfg, reference, -VIOLATION_MARGIN)
}
