//! Classical record generation and discard rules.
//!
//! A [`HiddenVariableModel`] is data: two station response functions that see
//! only their own analyzer angle and their own pair's hidden variable, and a
//! marker function that sees only the two hidden variables. Post-selecting on
//! such a marker leaves a local ensemble, so `|S| ≤ 2`. Discard rules that
//! read the settings and outcomes of a record are not bound that way.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{CellCounts, ChshReport, Sample, SampleView, SelectionFilter};
use crate::format::serialize_f64;
use crate::measure::{AnalyzerAngle, BinaryOutcome};
use crate::protocol::{Setting, CANONICAL_ANGLES};
use crate::rng::{RandomSource, StreamDomain};
use crate::{Result, SimError};

/// One term `c·cos(2k·x + φ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FourierTerm {
    pub harmonic: u32,
    pub amplitude: f64,
    pub phase: f64,
}

impl FourierTerm {
    fn eval(&self, x: f64) -> f64 {
        self.amplitude * (2.0 * f64::from(self.harmonic) * x + self.phase).cos()
    }

    fn random(rng: &mut RandomSource, max_harmonic: u32) -> Self {
        Self {
            harmonic: 1 + (rng.next_u64() % u64::from(max_harmonic)) as u32,
            amplitude: 2.0 * rng.uniform() - 1.0,
            phase: 2.0 * PI * rng.uniform(),
        }
    }
}

/// Deterministic station response `(angle, λ) → ±1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Response {
    Constant { outcome: i8 },
    /// `sgn cos 2(θ − λ)`
    Sign,
    /// `sgn cos 2λ`, independent of the angle.
    Coin,
    /// `sgn Σ cᵢ cos(2kᵢ(θ − λ) + φᵢ)`
    Fourier { terms: Vec<FourierTerm> },
}

impl Response {
    pub fn evaluate(&self, angle: AnalyzerAngle, lambda: f64) -> BinaryOutcome {
        let x = angle.radians() - lambda;
        match self {
            Response::Constant { outcome } => BinaryOutcome::from_sign(f64::from(*outcome)),
            Response::Sign => BinaryOutcome::from_sign((2.0 * x).cos()),
            Response::Coin => BinaryOutcome::from_sign((2.0 * lambda).cos()),
            Response::Fourier { terms } => BinaryOutcome::from_sign(terms.iter().map(|t| t.eval(x)).sum()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Marker {
    Plus,
    Minus,
}

impl Marker {
    pub const ALL: [Marker; 2] = [Marker::Plus, Marker::Minus];

    pub fn label(self) -> &'static str {
        match self {
            Marker::Plus => "m+",
            Marker::Minus => "m-",
        }
    }

    fn from_sign(x: f64) -> Self {
        if x >= 0.0 {
            Marker::Plus
        } else {
            Marker::Minus
        }
    }
}

impl fmt::Display for Marker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Marker `(λ₀, λ₁) → label`. Has no access to angles or outcomes.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MarkerFn {
    Constant,
    /// `sgn cos 2(λ₀ − λ₁)`
    Alignment,
    /// `sgn(Σ f₀(λ₀) + Σ f₁(λ₁) + Σ g(λ₀ − λ₁) + offset)`
    Fourier {
        terms0: Vec<FourierTerm>,
        terms1: Vec<FourierTerm>,
        cross: Vec<FourierTerm>,
        offset: f64,
    },
}

impl MarkerFn {
    pub fn evaluate(&self, lambda0: f64, lambda1: f64) -> Marker {
        match self {
            MarkerFn::Constant => Marker::Plus,
            MarkerFn::Alignment => Marker::from_sign((2.0 * (lambda0 - lambda1)).cos()),
            MarkerFn::Fourier {
                terms0,
                terms1,
                cross,
                offset,
            } => {
                let v = terms0.iter().map(|t| t.eval(lambda0)).sum::<f64>()
                    + terms1.iter().map(|t| t.eval(lambda1)).sum::<f64>()
                    + cross.iter().map(|t| t.eval(lambda0 - lambda1)).sum::<f64>()
                    + offset;
                Marker::from_sign(v)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HiddenVariableModel {
    pub name: String,
    /// Photon 0 response, driven by λ₀ of pair (0,1).
    pub response0: Response,
    /// Photon 3 response, driven by λ₁ of pair (2,3).
    pub response3: Response,
    pub marker: MarkerFn,
}

impl HiddenVariableModel {
    pub fn constant(outcome0: i8, outcome3: i8) -> Self {
        Self {
            name: format!("constant({outcome0},{outcome3})"),
            response0: Response::Constant { outcome: outcome0 },
            response3: Response::Constant { outcome: outcome3 },
            marker: MarkerFn::Constant,
        }
    }

    /// `A = sgn cos 2(α − λ₀)`, `D = sgn cos 2(δ − λ₁)`, marker `sgn cos 2(λ₀ − λ₁)`.
    pub fn sign() -> Self {
        Self {
            name: "sign".into(),
            response0: Response::Sign,
            response3: Response::Sign,
            marker: MarkerFn::Alignment,
        }
    }

    /// Independent fair outcomes at both stations regardless of settings.
    pub fn uniform() -> Self {
        Self {
            name: "uniform".into(),
            response0: Response::Coin,
            response3: Response::Coin,
            marker: MarkerFn::Constant,
        }
    }

    /// Random Fourier marker; odd indices also get random Fourier responses.
    pub fn random_fourier(seed: u64, index: u64) -> Self {
        let mut rng = RandomSource::with_domain(seed, StreamDomain::ModelFamily, index);
        let terms = |n: usize, rng: &mut RandomSource| (0..n).map(|_| FourierTerm::random(rng, 3)).collect::<Vec<_>>();
        let marker = MarkerFn::Fourier {
            terms0: terms(2, &mut rng),
            terms1: terms(2, &mut rng),
            cross: terms(2, &mut rng),
            offset: 0.5 * (2.0 * rng.uniform() - 1.0),
        };
        let (response0, response3) = if index % 2 == 1 {
            (
                Response::Fourier { terms: terms(3, &mut rng) },
                Response::Fourier { terms: terms(3, &mut rng) },
            )
        } else {
            (Response::Sign, Response::Sign)
        };
        Self {
            name: format!("random-fourier-{index}"),
            response0,
            response3,
            marker,
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "sign" => Some(Self::sign()),
            "uniform" => Some(Self::uniform()),
            "constant" => Some(Self::constant(1, 1)),
            _ => None,
        }
    }
}

/// `count` random settings-blind marker models.
pub fn random_marker_models(count: usize, seed: u64) -> Vec<HiddenVariableModel> {
    (0..count as u64).map(|i| HiddenVariableModel::random_fourier(seed, i)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassicalConfig {
    pub trials: u64,
    /// `(a, a′)`
    pub angles0: [AnalyzerAngle; 2],
    /// `(b, b′)`
    pub angles3: [AnalyzerAngle; 2],
    pub seed: u64,
}

impl ClassicalConfig {
    pub fn new(trials: u64, seed: u64) -> Self {
        let [a, a2, b, b2] = CANONICAL_ANGLES.map(|d| AnalyzerAngle::from_degrees(d).expect("finite"));
        Self {
            trials,
            angles0: [a, a2],
            angles3: [b, b2],
            seed,
        }
    }

    pub fn with_angles(mut self, degrees: [f64; 4]) -> Result<Self> {
        let a = degrees
            .iter()
            .map(|&d| AnalyzerAngle::from_degrees(d))
            .collect::<Result<Vec<_>>>()?;
        self.angles0 = [a[0], a[1]];
        self.angles3 = [a[2], a[3]];
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(SimError::InvalidConfig("trials must be at least 1".into()));
        }
        if self.angles0[0] == self.angles0[1] || self.angles3[0] == self.angles3[1] {
            return Err(SimError::InvalidConfig("angle pairs must be distinct".into()));
        }
        Ok(())
    }

    pub fn angles(&self) -> [AnalyzerAngle; 4] {
        [self.angles0[0], self.angles0[1], self.angles3[0], self.angles3[1]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalRecord {
    pub trial_id: u64,
    pub setting0: Setting,
    pub setting3: Setting,
    pub outcome0: BinaryOutcome,
    pub outcome3: BinaryOutcome,
    pub marker: Marker,
}

impl ClassicalRecord {
    pub const EVENTS: [&'static str; 4] = ["draw-lambda", "measure-0", "measure-3", "marker"];
}

impl Sample for ClassicalRecord {
    fn view(&self) -> SampleView<'_> {
        SampleView {
            trial_id: self.trial_id,
            setting0: self.setting0.index,
            setting3: self.setting3.index,
            outcome0: self.outcome0,
            outcome3: self.outcome3,
            label: self.marker.label(),
        }
    }
}

fn lhv_trial(model: &HiddenVariableModel, config: &ClassicalConfig, trial_id: u64) -> ClassicalRecord {
    let mut rng = RandomSource::with_domain(config.seed, StreamDomain::HiddenVariables, trial_id);
    let lambda0 = PI * rng.uniform();
    let lambda1 = PI * rng.uniform();
    let s0 = rng.bit();
    let s3 = rng.bit();
    let angle0 = config.angles0[s0 as usize];
    let angle3 = config.angles3[s3 as usize];
    ClassicalRecord {
        trial_id,
        setting0: Setting { index: s0, angle: angle0 },
        setting3: Setting { index: s3, angle: angle3 },
        outcome0: model.response0.evaluate(angle0, lambda0),
        outcome3: model.response3.evaluate(angle3, lambda1),
        marker: model.marker.evaluate(lambda0, lambda1),
    }
}

/// Generates `config.trials` records, in trial order.
pub fn run_lhv(model: &HiddenVariableModel, config: &ClassicalConfig) -> Result<Vec<ClassicalRecord>> {
    config.validate()?;
    Ok((0..config.trials)
        .into_par_iter()
        .map(|id| lhv_trial(model, config, id))
        .collect())
}

/// What a discard rule is allowed to read.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscardInput {
    pub setting0: u8,
    pub setting3: u8,
    pub outcome0: BinaryOutcome,
    pub outcome3: BinaryOutcome,
}

impl From<&SampleView<'_>> for DiscardInput {
    fn from(v: &SampleView<'_>) -> Self {
        Self {
            setting0: v.setting0,
            setting3: v.setting3,
            outcome0: v.outcome0,
            outcome3: v.outcome3,
        }
    }
}

pub type KeepPredicate = Arc<dyn Fn(&DiscardInput) -> bool + Send + Sync>;
pub type KeepWeight = Arc<dyn Fn(&DiscardInput) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum DiscardRule {
    Predicate { name: String, keep: KeepPredicate },
    /// Keeps each record independently with the returned weight in `[0, 1]`.
    Probabilistic { name: String, weight: KeepWeight },
}

impl DiscardRule {
    pub fn predicate(name: impl Into<String>, f: impl Fn(&DiscardInput) -> bool + Send + Sync + 'static) -> Self {
        DiscardRule::Predicate {
            name: name.into(),
            keep: Arc::new(f),
        }
    }

    pub fn probabilistic(name: impl Into<String>, f: impl Fn(&DiscardInput) -> f64 + Send + Sync + 'static) -> Self {
        DiscardRule::Probabilistic {
            name: name.into(),
            weight: Arc::new(f),
        }
    }

    pub fn keep_all() -> Self {
        Self::predicate("keep-all", |_| true)
    }

    pub fn drop_all() -> Self {
        Self::predicate("drop-all", |_| false)
    }

    pub fn name(&self) -> &str {
        match self {
            DiscardRule::Predicate { name, .. } | DiscardRule::Probabilistic { name, .. } => name,
        }
    }

    /// Probability that a record with these fields is kept.
    pub fn keep_probability(&self, input: &DiscardInput) -> f64 {
        match self {
            DiscardRule::Predicate { keep, .. } => f64::from(u8::from(keep(input))),
            DiscardRule::Probabilistic { weight, .. } => weight(input),
        }
    }

    fn keeps(&self, input: &DiscardInput, seed: u64, trial_id: u64) -> bool {
        match self {
            DiscardRule::Predicate { keep, .. } => keep(input),
            DiscardRule::Probabilistic { weight, .. } => {
                let w = weight(input);
                debug_assert!((0.0..=1.0).contains(&w), "keep weight {w}");
                let mut rng = RandomSource::with_domain(seed, StreamDomain::Discard, trial_id);
                rng.uniform() < w
            }
        }
    }
}

impl fmt::Debug for DiscardRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DiscardRule({})", self.name())
    }
}

/// Target sign of `outcome0·outcome3` per settings pair that makes every
/// term of `S = E(a,b) − E(a,b′) + E(a′,b) + E(a′,b′)` equal to `+1`.
pub fn pr_box_target(setting0: u8, setting3: u8) -> i8 {
    if (setting0, setting3) == (0, 1) {
        -1
    } else {
        1
    }
}

/// Keeps a record iff `outcome0·outcome3` matches the PR-box target of its
/// settings pair. Post-selected data then reach the algebraic maximum `|S| = 4`.
///
/// The rule reads only setting indices; the angles name the arrangement.
pub fn pr_box_rule(angle_labels: [AnalyzerAngle; 4]) -> DiscardRule {
    let name = format!(
        "pr-box({},{},{},{})",
        angle_labels[0].degrees(),
        angle_labels[1].degrees(),
        angle_labels[2].degrees(),
        angle_labels[3].degrees()
    );
    DiscardRule::predicate(name, |x| {
        x.outcome0.value() * x.outcome3.value() == pr_box_target(x.setting0, x.setting3)
    })
}

/// Keep weight `(1 − o₀o₃·cos 2(α−δ))/2`, which turns independent fair
/// outcomes into data with `E(α, δ) = −cos 2(α−δ)`.
pub fn quantum_mimic_rule(angle_labels: [AnalyzerAngle; 4]) -> DiscardRule {
    let [a, a2, b, b2] = angle_labels.map(AnalyzerAngle::radians);
    let name = format!(
        "quantum-mimic({},{},{},{})",
        angle_labels[0].degrees(),
        angle_labels[1].degrees(),
        angle_labels[2].degrees(),
        angle_labels[3].degrees()
    );
    DiscardRule::probabilistic(name, move |x| {
        let alpha = if x.setting0 == 0 { a } else { a2 };
        let delta = if x.setting3 == 0 { b } else { b2 };
        let product = f64::from(x.outcome0.value() * x.outcome3.value());
        ((1.0 - product * (2.0 * (alpha - delta)).cos()) / 2.0).clamp(0.0, 1.0)
    })
}

/// Applies `rule`; probabilistic decisions use stream `trial_id` of `seed`,
/// so the result does not depend on record order. Returns the kept records
/// and `kept / total` (1 for empty input).
pub fn apply_discard<R>(records: &[R], rule: &DiscardRule, seed: u64) -> (Vec<R>, f64)
where
    R: Sample + Clone + Send + Sync,
{
    let kept: Vec<R> = records
        .par_iter()
        .filter(|r| {
            let view = r.view();
            rule.keeps(&DiscardInput::from(&view), seed, view.trial_id)
        })
        .cloned()
        .collect();
    let fraction = if records.is_empty() {
        1.0
    } else {
        kept.len() as f64 / records.len() as f64
    };
    (kept, fraction)
}

/// Sigma multiple of the local bound check.
pub const BOUND_SIGMAS: f64 = 5.0;

#[derive(Debug, Clone, Serialize)]
pub struct LabelBound {
    pub label: String,
    #[serde(serialize_with = "serialize_f64")]
    pub s_abs: f64,
    #[serde(serialize_with = "serialize_f64")]
    pub s_std_err: f64,
    pub kept: u64,
    pub within_bound: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelBound {
    pub model: String,
    pub labels: Vec<LabelBound>,
    /// Labels excluded for lack of data in some settings cell.
    pub starved: Vec<String>,
    #[serde(serialize_with = "serialize_f64")]
    pub max_s_abs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlindCheckReport {
    pub trials_per_model: u64,
    pub models: Vec<ModelBound>,
    pub all_within_bound: bool,
}

/// Post-selects each model's records on each marker label and checks
/// `|S| ≤ 2 + 5·s_std_err`.
pub fn settings_blind_check(models: &[HiddenVariableModel], config: &ClassicalConfig) -> Result<BlindCheckReport> {
    config.validate()?;
    let mut out = Vec::with_capacity(models.len());
    for model in models {
        let records = run_lhv(model, config)?;
        let mut labels = Vec::new();
        let mut starved = Vec::new();
        for marker in Marker::ALL {
            let filter = SelectionFilter::Label(marker.label().to_string());
            let counts = CellCounts::accumulate(&records, &filter);
            match counts.chsh(&filter) {
                Ok(report) => labels.push(label_bound(marker.label(), &report)),
                Err(SimError::InsufficientData { .. }) => {
                    if counts.kept > 0 {
                        starved.push(marker.label().to_string());
                    }
                }
                Err(e) => return Err(e),
            }
        }
        let max_s_abs = labels.iter().map(|l| l.s_abs).fold(0.0, f64::max);
        out.push(ModelBound {
            model: model.name.clone(),
            labels,
            starved,
            max_s_abs,
        });
    }
    let all_within_bound = out.iter().all(|m| m.labels.iter().all(|l| l.within_bound));
    Ok(BlindCheckReport {
        trials_per_model: config.trials,
        models: out,
        all_within_bound,
    })
}

fn label_bound(label: &str, report: &ChshReport) -> LabelBound {
    LabelBound {
        label: label.to_string(),
        s_abs: report.s_abs,
        s_std_err: report.s_std_err,
        kept: report.kept,
        within_bound: report.s_abs <= 2.0 + BOUND_SIGMAS * report.s_std_err,
    }
}
