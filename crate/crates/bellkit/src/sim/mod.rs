//! Monte Carlo generation of two-station event streams under
//! context-indexed hidden-variable models, threshold detection, and
//! run-to-run drift of the hidden distribution.
//!
//! Locality is built into the types: a station's outcome rule sees only its
//! own setting, the shared hidden value, and its own instrument state. The
//! `NoClick` outcome is first class in streams and can only be removed by
//! [`post_select`], which counts what it discards.

pub mod rng;

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::types::{CoincidenceRecord, Outcome, PairwiseTable, Sign, TableError};
use rng::{Role, StreamFactory, TrialRng};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid density: {0}")]
    InvalidDensity(String),
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("invalid table: {0}")]
    InvalidTable(#[from] TableError),
    #[error("outcome rule has no variable at angle {theta} rad")]
    NoAngleMatch { theta: f64 },
    #[error("need at least one trial")]
    ZeroTrials,
}

/// A distribution for a hidden or instrument state.
#[derive(Clone, Debug, PartialEq)]
pub enum Density {
    /// Finite grid with explicit probabilities.
    Grid { points: Vec<f64>, weights: Vec<f64> },
    /// Continuous uniform on `[lo, hi)`.
    Uniform { lo: f64, hi: f64 },
    /// Degenerate: always `value`.
    PointMass { value: f64 },
}

impl Density {
    pub fn validate(&self) -> Result<(), SimError> {
        match self {
            Density::Grid { points, weights } => {
                if points.is_empty() || points.len() != weights.len() {
                    return Err(SimError::InvalidDensity(
                        "grid needs matching, nonempty points and weights".into(),
                    ));
                }
                if weights.iter().any(|w| *w < 0.0) {
                    return Err(SimError::InvalidDensity("negative weight".into()));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(SimError::InvalidDensity(format!(
                        "weights sum to {total}, not 1"
                    )));
                }
                Ok(())
            }
            Density::Uniform { lo, hi } => {
                if lo.is_finite() && hi.is_finite() && lo < hi {
                    Ok(())
                } else {
                    Err(SimError::InvalidDensity(format!("empty interval [{lo}, {hi})")))
                }
            }
            Density::PointMass { value } => {
                if value.is_finite() {
                    Ok(())
                } else {
                    Err(SimError::InvalidDensity("non-finite point mass".into()))
                }
            }
        }
    }

    fn draw(&self, rng: &mut TrialRng) -> f64 {
        match self {
            Density::Grid { points, weights } => {
                let u = rng.uniform();
                let mut acc = 0.0;
                for (p, w) in points.iter().zip(weights) {
                    acc += w;
                    if u < acc {
                        return *p;
                    }
                }
                *points.last().expect("validated nonempty grid")
            }
            Density::Uniform { lo, hi } => lo + rng.uniform() * (hi - lo),
            Density::PointMass { value } => *value,
        }
    }
}

/// Station outcome as a function of its own setting, the shared hidden
/// value, and its own instrument state. Cross-station dependence is not
/// representable.
#[derive(Clone)]
pub enum OutcomeRule {
    /// `sign(cos 2(theta - lambda))`: the classical analyzer rule.
    SignCos,
    /// `sign(lambda)`, ignoring the setting and the instrument state.
    SharedSign,
    /// `sign(lambda) * sign(lambda_instrument)`.
    InstrumentSignProduct,
    /// Reads `lambda` as an atom over the listed variable angles and returns
    /// the bit of the variable whose angle matches `theta`.
    AtomBit { angles: Vec<f64> },
    Custom(Arc<dyn Fn(f64, f64, f64) -> Sign + Send + Sync>),
}

impl fmt::Debug for OutcomeRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutcomeRule::SignCos => write!(f, "SignCos"),
            OutcomeRule::SharedSign => write!(f, "SharedSign"),
            OutcomeRule::InstrumentSignProduct => write!(f, "InstrumentSignProduct"),
            OutcomeRule::AtomBit { angles } => write!(f, "AtomBit({angles:?})"),
            OutcomeRule::Custom(_) => write!(f, "Custom"),
        }
    }
}

fn sign_of(x: f64) -> Sign {
    if x >= 0.0 {
        Sign::Plus
    } else {
        Sign::Minus
    }
}

impl OutcomeRule {
    fn evaluate(&self, theta: f64, lambda: f64, lambda_inst: f64) -> Result<Sign, SimError> {
        match self {
            OutcomeRule::SignCos => Ok(sign_of((2.0 * (theta - lambda)).cos())),
            OutcomeRule::SharedSign => Ok(sign_of(lambda)),
            OutcomeRule::InstrumentSignProduct => {
                Ok(if sign_of(lambda) == sign_of(lambda_inst) { Sign::Plus } else { Sign::Minus })
            }
            OutcomeRule::AtomBit { angles } => {
                let var = variable_at_angle(angles, theta)
                    .ok_or(SimError::NoAngleMatch { theta })?;
                let atom = lambda.round() as usize;
                Ok(crate::types::atom_sign(atom, var))
            }
            OutcomeRule::Custom(f) => Ok(f(theta, lambda, lambda_inst)),
        }
    }

    fn check_angle(&self, theta: f64) -> Result<(), SimError> {
        if let OutcomeRule::AtomBit { angles } = self {
            if variable_at_angle(angles, theta).is_none() {
                return Err(SimError::NoAngleMatch { theta });
            }
        }
        Ok(())
    }
}

fn variable_at_angle(angles: &[f64], theta: f64) -> Option<usize> {
    angles.iter().position(|a| {
        let mut d = (a - theta).rem_euclid(std::f64::consts::PI);
        if d > std::f64::consts::PI / 2.0 {
            d = std::f64::consts::PI - d;
        }
        d < 1e-9
    })
}

/// Per-station click probability hook.
#[derive(Clone)]
pub enum DetectionRule {
    /// Every event registers.
    Always,
    /// Setting- and state-independent efficiency.
    Constant { efficiency: f64 },
    /// `base + amplitude * cos 2(theta - lambda)`: detection correlated with
    /// the hidden state, the mechanism behind unfair post-selection.
    CosineBias { base: f64, amplitude: f64 },
    Custom(Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for DetectionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DetectionRule::Always => write!(f, "Always"),
            DetectionRule::Constant { efficiency } => write!(f, "Constant({efficiency})"),
            DetectionRule::CosineBias { base, amplitude } => {
                write!(f, "CosineBias(base={base}, amplitude={amplitude})")
            }
            DetectionRule::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl DetectionRule {
    pub fn validate(&self) -> Result<(), SimError> {
        match self {
            DetectionRule::Always | DetectionRule::Custom(_) => Ok(()),
            DetectionRule::Constant { efficiency } => {
                if (0.0..=1.0).contains(efficiency) {
                    Ok(())
                } else {
                    Err(SimError::InvalidSpec(format!("efficiency {efficiency} outside [0, 1]")))
                }
            }
            DetectionRule::CosineBias { base, amplitude } => {
                let lo = base - amplitude.abs();
                let hi = base + amplitude.abs();
                if lo >= 0.0 && hi <= 1.0 {
                    Ok(())
                } else {
                    Err(SimError::InvalidSpec(format!(
                        "cosine bias leaves [0, 1]: range [{lo}, {hi}]"
                    )))
                }
            }
        }
    }

    fn probability(&self, theta: f64, lambda: f64, lambda_inst: f64) -> f64 {
        match self {
            DetectionRule::Always => 1.0,
            DetectionRule::Constant { efficiency } => *efficiency,
            DetectionRule::CosineBias { base, amplitude } => {
                base + amplitude * (2.0 * (theta - lambda)).cos()
            }
            DetectionRule::Custom(f) => f(theta, lambda, lambda_inst).clamp(0.0, 1.0),
        }
    }

    fn is_certain(&self) -> bool {
        matches!(self, DetectionRule::Always)
    }
}

/// Sampling specification for one experimental context: a pair of settings,
/// hidden and instrument state densities, an outcome rule and a detection
/// rule.
#[derive(Clone, Debug)]
pub struct ContextSpec {
    pub label: String,
    pub theta_a: f64,
    pub theta_b: f64,
    pub system: Density,
    pub instrument_a: Density,
    pub instrument_b: Density,
    pub rule: OutcomeRule,
    pub detection: DetectionRule,
}

impl ContextSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        self.system.validate()?;
        self.instrument_a.validate()?;
        self.instrument_b.validate()?;
        self.detection.validate()?;
        self.rule.check_angle(self.theta_a)?;
        self.rule.check_angle(self.theta_b)?;
        Ok(())
    }
}

/// One trial's pair of outcomes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialEvent {
    pub trial: u64,
    pub a: Outcome,
    pub b: Outcome,
}

/// An ordered list of trial outcomes, carrying the settings of the context
/// that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct EventStream {
    pub label: String,
    pub theta_a: f64,
    pub theta_b: f64,
    pub events: Vec<TrialEvent>,
}

impl EventStream {
    /// Correlation estimate from double-click events only.
    pub fn correlation(&self) -> Option<f64> {
        let (record, _) = post_select(self);
        let total = record.total();
        if total == 0 {
            return None;
        }
        let signed = record.n_pp as i64 - record.n_pm as i64 - record.n_mp as i64
            + record.n_mm as i64;
        Some(signed as f64 / total as f64)
    }
}

/// I.i.d. draws from a pair table; never produces `NoClick`.
pub fn sample_from_table(
    table: &PairwiseTable<f64>,
    settings: (f64, f64),
    n: u64,
    seed: u64,
) -> Result<EventStream, SimError> {
    table.validate()?;
    if n == 0 {
        return Err(SimError::ZeroTrials);
    }
    let cells = table.cells;
    let streams = StreamFactory::new(seed);
    let events: Vec<TrialEvent> = (0..n as usize)
        .into_par_iter()
        .with_min_len(4096)
        .map(|trial| trial as u64)
        .map(|trial| {
            let u = streams.cell(0, Role::Table, trial).uniform();
            let slot = if u < cells[0] {
                0
            } else if u < cells[0] + cells[1] {
                1
            } else if u < cells[0] + cells[1] + cells[2] {
                2
            } else {
                3
            };
            let (a, b) = crate::types::CELL_SIGNS[slot];
            TrialEvent { trial, a: Outcome::Click(a), b: Outcome::Click(b) }
        })
        .collect();
    Ok(EventStream {
        label: format!("table({},{})", table.pair.0.index, table.pair.1.index),
        theta_a: settings.0,
        theta_b: settings.1,
        events,
    })
}

/// [`sample_context`] in an explicit replication lane: streams with the
/// same seed but different `run` values are mutually independent. Drift
/// runs and multi-context simulations use this to keep replications
/// independent without new seeds.
pub fn sample_context_in_run(
    spec: &ContextSpec,
    n: u64,
    seed: u64,
    run: u64,
) -> Result<EventStream, SimError> {
    spec.validate()?;
    if n == 0 {
        return Err(SimError::ZeroTrials);
    }
    let streams = StreamFactory::new(seed);
    let events: Result<Vec<TrialEvent>, SimError> = (0..n as usize)
        .into_par_iter()
        .with_min_len(4096)
        .map(|trial| trial as u64)
        .map(|trial| {
            let lambda = spec.system.draw(&mut streams.cell(run, Role::System, trial));
            let lambda_a =
                spec.instrument_a.draw(&mut streams.cell(run, Role::InstrumentA, trial));
            let lambda_b =
                spec.instrument_b.draw(&mut streams.cell(run, Role::InstrumentB, trial));

            let station = |theta: f64,
                           lambda_inst: f64,
                           detect_role: Role|
             -> Result<Outcome, SimError> {
                let sign = spec.rule.evaluate(theta, lambda, lambda_inst)?;
                if spec.detection.is_certain() {
                    return Ok(Outcome::Click(sign));
                }
                let p = spec.detection.probability(theta, lambda, lambda_inst);
                let u = streams.cell(run, detect_role, trial).uniform();
                Ok(if u < p { Outcome::Click(sign) } else { Outcome::NoClick })
            };

            let a = station(spec.theta_a, lambda_a, Role::DetectA)?;
            let b = station(spec.theta_b, lambda_b, Role::DetectB)?;
            Ok(TrialEvent { trial, a, b })
        })
        .collect();
    Ok(EventStream {
        label: spec.label.clone(),
        theta_a: spec.theta_a,
        theta_b: spec.theta_b,
        events: events?,
    })
}

/// Samples one context: draws `(lambda, lambda_a, lambda_b)` independently
/// per trial, applies the outcome rule per station, then the detection rule.
pub fn sample_context(spec: &ContextSpec, n: u64, seed: u64) -> Result<EventStream, SimError> {
    sample_context_in_run(spec, n, seed, 0)
}

// ---------------------------------------------------------------------------
// Threshold detection
// ---------------------------------------------------------------------------

/// Law of the sub-quantum energy fluctuation, confined to `(-1, 1)` in units
/// of one quantum.
#[derive(Clone, Debug, PartialEq)]
pub enum NoiseLaw {
    /// Uniform on `(-half_width, half_width)`, `half_width <= 1`.
    Uniform { half_width: f64 },
    /// Normal with the given sigma, truncated to `(-1, 1)` by inverse-CDF
    /// restriction (no rejection, so the draw budget stays fixed).
    TruncatedNormal { sigma: f64 },
}

impl NoiseLaw {
    pub fn validate(&self) -> Result<(), SimError> {
        match self {
            NoiseLaw::Uniform { half_width } => {
                if (0.0..=1.0).contains(half_width) {
                    Ok(())
                } else {
                    Err(SimError::InvalidSpec(format!(
                        "half_width {half_width} outside [0, 1]"
                    )))
                }
            }
            NoiseLaw::TruncatedNormal { sigma } => {
                if *sigma > 0.0 && sigma.is_finite() {
                    Ok(())
                } else {
                    Err(SimError::InvalidSpec(format!("sigma {sigma} must be positive")))
                }
            }
        }
    }

    fn draw(&self, rng: &mut TrialRng) -> f64 {
        match self {
            NoiseLaw::Uniform { half_width } => half_width * (2.0 * rng.uniform_open() - 1.0),
            NoiseLaw::TruncatedNormal { sigma } => {
                let lo = normal_cdf(-1.0 / sigma);
                let hi = normal_cdf(1.0 / sigma);
                let p = lo + rng.uniform_open() * (hi - lo);
                (sigma * normal_quantile(p)).clamp(-1.0 + f64::EPSILON, 1.0 - f64::EPSILON)
            }
        }
    }
}

/// Standard normal CDF via the Hastings erf approximation (abs error ~1.5e-7).
fn normal_cdf(x: f64) -> f64 {
    let t = 1.0 / (1.0 + 0.3275911 * x.abs() / std::f64::consts::SQRT_2);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    let erf = 1.0 - poly * (-(x / std::f64::consts::SQRT_2).powi(2)).exp();
    if x >= 0.0 {
        0.5 * (1.0 + erf)
    } else {
        0.5 * (1.0 - erf)
    }
}

/// Acklam's rational approximation of the standard normal quantile.
fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.38357751867269e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    assert!(p > 0.0 && p < 1.0, "quantile domain");
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -((((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0))
    }
}

/// How clicks pair into coincidences. Timing physics beyond per-trial
/// pairing is out of scope.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum WindowRule {
    #[default]
    SameTrial,
}

/// Threshold detector model: each arm registers energy `pulse_energy + xi`
/// and clicks only at or above `threshold`. Units are quanta, so the
/// fluctuation bound `|xi| < 1` is one photon energy.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdDetectionSpec {
    pub pulse_energy: f64,
    pub noise: NoiseLaw,
    pub threshold: f64,
    pub window: WindowRule,
}

impl ThresholdDetectionSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.pulse_energy <= 0.0 || !self.pulse_energy.is_finite() {
            return Err(SimError::InvalidSpec(format!(
                "pulse energy {} must be positive",
                self.pulse_energy
            )));
        }
        if self.threshold <= 0.0 || !self.threshold.is_finite() {
            return Err(SimError::InvalidSpec(format!(
                "threshold {} must be positive",
                self.threshold
            )));
        }
        self.noise.validate()
    }
}

/// Samples the threshold model at one setting pair. A shared polarization
/// angle drawn uniformly on `[0, pi)` fixes each arm's sign through the
/// analyzer rule; the click decision is energy thresholding alone. No preset
/// here is claimed to reproduce the singlet correlation exactly.
pub fn sample_threshold(
    spec: &ThresholdDetectionSpec,
    settings: (f64, f64),
    n: u64,
    seed: u64,
) -> Result<EventStream, SimError> {
    spec.validate()?;
    if n == 0 {
        return Err(SimError::ZeroTrials);
    }
    let streams = StreamFactory::new(seed);
    let events: Vec<TrialEvent> = (0..n as usize)
        .into_par_iter()
        .with_min_len(4096)
        .map(|trial| trial as u64)
        .map(|trial| {
            let lambda = streams.cell(0, Role::System, trial).uniform()
                * std::f64::consts::PI;
            let arm = |theta: f64, role: Role| -> Outcome {
                let xi = spec.noise.draw(&mut streams.cell(0, role, trial));
                let energy = spec.pulse_energy + xi;
                if energy >= spec.threshold {
                    Outcome::Click(sign_of((2.0 * (theta - lambda)).cos()))
                } else {
                    Outcome::NoClick
                }
            };
            let a = arm(settings.0, Role::NoiseA);
            let b = arm(settings.1, Role::NoiseB);
            TrialEvent { trial, a, b }
        })
        .collect();
    Ok(EventStream {
        label: "threshold".to_string(),
        theta_a: settings.0,
        theta_b: settings.1,
        events,
    })
}

// ---------------------------------------------------------------------------
// Run drift
// ---------------------------------------------------------------------------

/// Maps the base hidden-state density and a run index to that run's density.
pub type DriftFn = dyn Fn(&Density, usize) -> Density + Send + Sync;

/// Produces the hidden-state density for a given run index.
#[derive(Clone)]
pub enum DriftRule {
    /// Every run uses the base density.
    None,
    /// Odd runs use `other`.
    Alternate { other: Density },
    Custom(Arc<DriftFn>),
}

impl fmt::Debug for DriftRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DriftRule::None => write!(f, "None"),
            DriftRule::Alternate { other } => write!(f, "Alternate({other:?})"),
            DriftRule::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl DriftRule {
    fn apply(&self, base: &Density, run: usize) -> Density {
        match self {
            DriftRule::None => base.clone(),
            DriftRule::Alternate { other } => {
                if run % 2 == 1 {
                    other.clone()
                } else {
                    base.clone()
                }
            }
            DriftRule::Custom(f) => f(base, run),
        }
    }
}

/// A multi-run experiment whose hidden-state density may change between
/// runs while everything else stays fixed.
#[derive(Clone, Debug)]
pub struct RunDriftSpec {
    pub base: ContextSpec,
    pub runs: usize,
    pub drift: DriftRule,
}

/// One stream per run. Run 0 is bit-identical to `sample_context` on the
/// base spec; later runs draw from their own randomness lanes, so runs are
/// mutually independent even without drift.
pub fn run_with_drift(
    spec: &RunDriftSpec,
    n_per_run: u64,
    seed: u64,
) -> Result<Vec<EventStream>, SimError> {
    if spec.runs == 0 {
        return Err(SimError::InvalidSpec("need at least one run".into()));
    }
    (0..spec.runs)
        .map(|run| {
            let mut ctx = spec.base.clone();
            ctx.system = spec.drift.apply(&spec.base.system, run);
            ctx.system.validate()?;
            ctx.label = format!("{}/run{}", spec.base.label, run);
            sample_context_in_run(&ctx, n_per_run, seed, run as u64)
        })
        .collect()
}

/// Keeps only double-click trials, tallying them into a coincidence record
/// and reporting how many trials were discarded.
pub fn post_select(stream: &EventStream) -> (CoincidenceRecord, u64) {
    let mut counts = [0u64; 4];
    let mut discarded = 0u64;
    for event in &stream.events {
        match (event.a.sign(), event.b.sign()) {
            (Some(a), Some(b)) => counts[crate::types::cell_slot(a, b)] += 1,
            _ => discarded += 1,
        }
    }
    (
        CoincidenceRecord {
            theta1: stream.theta_a,
            theta2: stream.theta_b,
            n_pp: counts[0],
            n_pm: counts[1],
            n_mp: counts[2],
            n_mm: counts[3],
        },
        discarded,
    )
}
