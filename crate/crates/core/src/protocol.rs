//! The swapping experiment: preparation, three measurements in a chosen
//! temporal order, per-trial records, exact tables and stage reports.
//!
//! Qubits 0..4 are photons 0..4. Photons 1 and 2 go to the Bell-state
//! analyzer, photons 0 and 3 to polarization analyzers. Time is logical: an
//! ordering is the sequence in which collapses are applied.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entanglement::{metrics, TwoQubitMetrics};
use crate::measure::{
    branches, measure, outcome_distribution, AnalyzerAngle, BinaryOutcome, BsmMode, BsmOutcome,
    MeasurementSpec, Outcome,
};
use crate::qstate::{
    bell_state, partial_trace_raw, tensor, BellKind, DensityMatrix, PureState,
};
use crate::rng::{RandomSource, StreamDomain};
use crate::{Result, SimError};

pub const BSM_QUBITS: (usize, usize) = (1, 2);
pub const OUTER_QUBITS: [usize; 2] = [0, 3];

/// Canonical CHSH analyzer angles in degrees: `(a, a′, b, b′)`.
pub const CANONICAL_ANGLES: [f64; 4] = [0.0, 45.0, 22.5, 67.5];

/// Temporal order of the Bell-state measurement relative to the
/// polarization measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Ordering {
    #[default]
    #[serde(rename = "bsm-first")]
    BsmFirst,
    #[serde(rename = "pol-first")]
    PolarizationsFirst,
}

impl Ordering {
    pub const ALL: [Ordering; 2] = [Ordering::BsmFirst, Ordering::PolarizationsFirst];

    pub fn label(self) -> &'static str {
        match self {
            Ordering::BsmFirst => "bsm-first",
            Ordering::PolarizationsFirst => "pol-first",
        }
    }

    /// Logical event sequence of a trial.
    pub fn events(self) -> [EventTag; 4] {
        use EventTag::*;
        match self {
            Ordering::BsmFirst => [Prepare, Bsm, MeasurePhoton0, MeasurePhoton3],
            Ordering::PolarizationsFirst => [Prepare, MeasurePhoton0, MeasurePhoton3, Bsm],
        }
    }
}

impl FromStr for Ordering {
    type Err = SimError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bsm-first" => Ok(Ordering::BsmFirst),
            "pol-first" => Ok(Ordering::PolarizationsFirst),
            _ => Err(SimError::InvalidConfig(format!("unknown ordering '{s}'"))),
        }
    }
}

impl fmt::Display for Ordering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventTag {
    #[serde(rename = "prepare")]
    Prepare,
    #[serde(rename = "bsm")]
    Bsm,
    #[serde(rename = "measure-0")]
    MeasurePhoton0,
    #[serde(rename = "measure-3")]
    MeasurePhoton3,
}

impl EventTag {
    pub fn label(self) -> &'static str {
        match self {
            EventTag::Prepare => "prepare",
            EventTag::Bsm => "bsm",
            EventTag::MeasurePhoton0 => "measure-0",
            EventTag::MeasurePhoton3 => "measure-3",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// `(a, a′)` for photon 0.
    pub angles0: [AnalyzerAngle; 2],
    /// `(b, b′)` for photon 3.
    pub angles3: [AnalyzerAngle; 2],
    pub trials: u64,
    pub ordering: Ordering,
    pub bsm_mode: BsmMode,
    pub seed: u64,
    /// Each pair is prepared as `V·|ψ⁻⟩⟨ψ⁻| + (1−V)·I/4`.
    pub visibility: f64,
}

impl ExperimentConfig {
    /// Canonical angles, `BsmFirst`, full BSM, visibility 1.
    pub fn new(trials: u64, seed: u64) -> Self {
        let [a, a2, b, b2] = CANONICAL_ANGLES.map(|d| AnalyzerAngle::from_degrees(d).expect("finite"));
        Self {
            angles0: [a, a2],
            angles3: [b, b2],
            trials,
            ordering: Ordering::BsmFirst,
            bsm_mode: BsmMode::Full,
            seed,
            visibility: 1.0,
        }
    }

    /// Sets `(a, a′, b, b′)` in degrees.
    pub fn with_angles(mut self, degrees: [f64; 4]) -> Result<Self> {
        let angles = degrees
            .iter()
            .map(|&d| AnalyzerAngle::from_degrees(d))
            .collect::<Result<Vec<_>>>()?;
        self.angles0 = [angles[0], angles[1]];
        self.angles3 = [angles[2], angles[3]];
        Ok(self)
    }

    pub fn with_ordering(mut self, ordering: Ordering) -> Self {
        self.ordering = ordering;
        self
    }

    pub fn with_bsm_mode(mut self, mode: BsmMode) -> Self {
        self.bsm_mode = mode;
        self
    }

    pub fn with_visibility(mut self, v: f64) -> Self {
        self.visibility = v;
        self
    }

    pub fn with_trials(mut self, trials: u64) -> Self {
        self.trials = trials;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(SimError::InvalidConfig("trials must be at least 1".into()));
        }
        if self.angles0[0] == self.angles0[1] {
            return Err(SimError::InvalidConfig("photon 0 angles a and a′ coincide".into()));
        }
        if self.angles3[0] == self.angles3[1] {
            return Err(SimError::InvalidConfig("photon 3 angles b and b′ coincide".into()));
        }
        if !(0.0..=1.0).contains(&self.visibility) {
            return Err(SimError::InvalidConfig(format!(
                "visibility {} outside [0, 1]",
                self.visibility
            )));
        }
        Ok(())
    }

    /// `(a, a′, b, b′)` in degrees.
    pub fn angle_degrees(&self) -> [f64; 4] {
        [
            self.angles0[0].degrees(),
            self.angles0[1].degrees(),
            self.angles3[0].degrees(),
            self.angles3[1].degrees(),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Setting {
    /// 0 selects the unprimed angle, 1 the primed one.
    pub index: u8,
    pub angle: AnalyzerAngle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial_id: u64,
    pub ordering: Ordering,
    pub setting0: Setting,
    pub setting3: Setting,
    pub outcome0: BinaryOutcome,
    pub outcome3: BinaryOutcome,
    pub bsm: BsmOutcome,
    pub events: [EventTag; 4],
}

/// Mixture components of one prepared pair: `(weight, state)`.
fn pair_components(visibility: f64) -> Vec<(f64, PureState)> {
    let mut parts = Vec::with_capacity(5);
    if visibility > 0.0 {
        parts.push((visibility, bell_state(BellKind::PsiMinus)));
    }
    if visibility < 1.0 {
        let w = (1.0 - visibility) / 4.0;
        for idx in 0..4 {
            parts.push((w, PureState::basis(2, idx).expect("2-qubit basis")));
        }
    }
    parts
}

/// The four-photon input as a weighted ensemble of pure states.
pub fn prepared_ensemble(visibility: f64) -> Vec<(f64, PureState)> {
    let pair = pair_components(visibility);
    let mut out = Vec::with_capacity(pair.len() * pair.len());
    for (w01, s01) in &pair {
        for (w23, s23) in &pair {
            out.push((w01 * w23, tensor(s01, s23).expect("four qubits")));
        }
    }
    out
}

fn sample_pair(visibility: f64, rng: &mut RandomSource) -> PureState {
    if visibility >= 1.0 || rng.uniform() < visibility {
        bell_state(BellKind::PsiMinus)
    } else {
        let idx = ((rng.uniform() * 4.0) as usize).min(3);
        PureState::basis(2, idx).expect("2-qubit basis")
    }
}

fn measurement_plan(config: &ExperimentConfig, s0: u8, s3: u8) -> [MeasurementSpec; 3] {
    let bsm = MeasurementSpec::Bell {
        qubits: BSM_QUBITS,
        mode: config.bsm_mode,
    };
    let pol0 = MeasurementSpec::Polarization {
        qubit: OUTER_QUBITS[0],
        angle: config.angles0[s0 as usize],
    };
    let pol3 = MeasurementSpec::Polarization {
        qubit: OUTER_QUBITS[1],
        angle: config.angles3[s3 as usize],
    };
    match config.ordering {
        Ordering::BsmFirst => [bsm, pol0, pol3],
        Ordering::PolarizationsFirst => [pol0, pol3, bsm],
    }
}

/// Runs one trial on stream `trial_id` of the configured seed.
pub fn run_trial(config: &ExperimentConfig, trial_id: u64) -> Result<TrialRecord> {
    let mut rng = RandomSource::with_domain(config.seed, StreamDomain::Protocol, trial_id);
    let state = if config.visibility >= 1.0 {
        crate::qstate::prepare_swap_input()
    } else {
        let p01 = sample_pair(config.visibility, &mut rng);
        let p23 = sample_pair(config.visibility, &mut rng);
        tensor(&p01, &p23)?
    };
    let s0 = rng.bit();
    let s3 = rng.bit();

    let mut state = state;
    let mut outcome0 = None;
    let mut outcome3 = None;
    let mut bsm = None;
    for spec in measurement_plan(config, s0, s3) {
        let (outcome, next) = measure(&state, &spec, &mut rng)?;
        state = next;
        match (spec, outcome) {
            (MeasurementSpec::Polarization { qubit: 0, .. }, Outcome::Binary(o)) => outcome0 = Some(o),
            (MeasurementSpec::Polarization { .. }, Outcome::Binary(o)) => outcome3 = Some(o),
            (_, Outcome::Bell(o)) => bsm = Some(o),
            _ => unreachable!("plan and outcome kinds agree"),
        }
    }
    Ok(TrialRecord {
        trial_id,
        ordering: config.ordering,
        setting0: Setting {
            index: s0,
            angle: config.angles0[s0 as usize],
        },
        setting3: Setting {
            index: s3,
            angle: config.angles3[s3 as usize],
        },
        outcome0: outcome0.expect("photon 0 measured"),
        outcome3: outcome3.expect("photon 3 measured"),
        bsm: bsm.expect("BSM performed"),
        events: config.ordering.events(),
    })
}

/// Runs trials `0..trials` in parallel on the current rayon pool; records are
/// returned in trial order regardless of scheduling.
pub fn run_batch(config: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    config.validate()?;
    (0..config.trials)
        .into_par_iter()
        .map(|id| run_trial(config, id))
        .collect()
}

/// Single-threaded reference for `run_batch`.
pub fn run_batch_sequential(config: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    config.validate()?;
    (0..config.trials).map(|id| run_trial(config, id)).collect()
}

/// One cell of the joint distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JointKey {
    pub setting0: u8,
    pub setting3: u8,
    pub outcome0: BinaryOutcome,
    pub outcome3: BinaryOutcome,
    pub bsm: BsmOutcome,
}

impl JointKey {
    pub fn of(record: &TrialRecord) -> Self {
        Self {
            setting0: record.setting0.index,
            setting3: record.setting3.index,
            outcome0: record.outcome0,
            outcome3: record.outcome3,
            bsm: record.bsm,
        }
    }
}

/// Exact probabilities over `(setting0, setting3, outcome0, outcome3, bsm)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    cells: BTreeMap<JointKey, f64>,
}

impl JointTable {
    pub fn cells(&self) -> &BTreeMap<JointKey, f64> {
        &self.cells
    }

    pub fn probability(&self, key: &JointKey) -> f64 {
        self.cells.get(key).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.cells.values().sum()
    }

    pub fn bsm_marginal(&self, bsm: BsmOutcome) -> f64 {
        self.cells.iter().filter(|(k, _)| k.bsm == bsm).map(|(_, p)| p).sum()
    }

    /// Largest entrywise difference over the union of both key sets.
    pub fn max_abs_diff(&self, other: &JointTable) -> f64 {
        self.cells
            .keys()
            .chain(other.cells.keys())
            .map(|k| (self.probability(k) - other.probability(k)).abs())
            .fold(0.0, f64::max)
    }

    /// `E = P(same) − P(opposite)` for a settings pair, optionally
    /// conditioned on a BSM outcome. `None` if the condition has probability 0.
    pub fn correlation(&self, setting0: u8, setting3: u8, condition: Option<BsmOutcome>) -> Option<f64> {
        let mut total = 0.0;
        let mut signed = 0.0;
        for (k, p) in &self.cells {
            if k.setting0 != setting0 || k.setting3 != setting3 {
                continue;
            }
            if condition.is_some_and(|c| c != k.bsm) {
                continue;
            }
            total += p;
            signed += p * f64::from(k.outcome0.value() * k.outcome3.value());
        }
        (total > 0.0).then(|| signed / total)
    }

    /// `S = E(a,b) − E(a,b′) + E(a′,b) + E(a′,b′)` from exact correlations.
    pub fn chsh(&self, condition: Option<BsmOutcome>) -> Option<f64> {
        let e = |i, j| self.correlation(i, j, condition);
        Some(e(0, 0)? - e(0, 1)? + e(1, 0)? + e(1, 1)?)
    }
}

fn plan_key(config: &ExperimentConfig, s0: u8, s3: u8, outcomes: &[Outcome]) -> JointKey {
    let mut o0 = None;
    let mut o3 = None;
    let mut bsm = None;
    for (spec, outcome) in measurement_plan(config, s0, s3).iter().zip(outcomes) {
        match (spec, outcome) {
            (MeasurementSpec::Polarization { qubit: 0, .. }, Outcome::Binary(o)) => o0 = Some(*o),
            (MeasurementSpec::Polarization { .. }, Outcome::Binary(o)) => o3 = Some(*o),
            (_, Outcome::Bell(o)) => bsm = Some(*o),
            _ => unreachable!("plan and outcome kinds agree"),
        }
    }
    JointKey {
        setting0: s0,
        setting3: s3,
        outcome0: o0.expect("photon 0 in plan"),
        outcome3: o3.expect("photon 3 in plan"),
        bsm: bsm.expect("BSM in plan"),
    }
}

/// Exact joint distribution by branch enumeration, with uniform independent
/// setting choices.
pub fn exact_joint_distribution(config: &ExperimentConfig) -> Result<JointTable> {
    config.validate()?;
    let ensemble = prepared_ensemble(config.visibility);
    let mut cells = BTreeMap::new();
    for s0 in 0..2u8 {
        for s3 in 0..2u8 {
            let plan = measurement_plan(config, s0, s3);
            for (w, state) in &ensemble {
                let table = outcome_distribution(state, &plan)?;
                for (outcomes, p) in table.entries() {
                    let key = plan_key(config, s0, s3, outcomes);
                    *cells.entry(key).or_insert(0.0) += 0.25 * w * p;
                }
            }
        }
    }
    Ok(JointTable { cells })
}

/// Exact correlation of photons 0 and 3 at analyzer angles `alpha`, `delta`,
/// optionally conditioned on a BSM outcome.
pub fn exact_correlation(
    alpha: AnalyzerAngle,
    delta: AnalyzerAngle,
    ordering: Ordering,
    mode: BsmMode,
    visibility: f64,
    condition: Option<BsmOutcome>,
) -> Result<f64> {
    // the primed angles are placeholders; only the (0, 0) cell is read
    let placeholder = |a: AnalyzerAngle| AnalyzerAngle::from_degrees(a.degrees() + 90.0);
    let config = ExperimentConfig {
        angles0: [alpha, placeholder(alpha)?],
        angles3: [delta, placeholder(delta)?],
        trials: 1,
        ordering,
        bsm_mode: mode,
        seed: 0,
        visibility,
    };
    let table = exact_joint_distribution(&config)?;
    table.correlation(0, 0, condition).ok_or_else(|| SimError::InsufficientData {
        cell: format!(
            "bsm={} at ({}, {})",
            condition.map_or("any", |c| c.label()),
            alpha,
            delta
        ),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    PreBsm,
    PostBsm(BsmOutcome),
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stage::PreBsm => f.write_str("pre-bsm"),
            Stage::PostBsm(o) => write!(f, "post-bsm({o})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct StageSnapshot {
    pub stage: Stage,
    /// Probability of reaching this stage (1 for `PreBsm`).
    pub probability: f64,
    pub rho03: DensityMatrix,
    pub metrics: TwoQubitMetrics,
}

fn weighted_rho03(parts: &[(f64, Vec<num_complex::Complex64>)]) -> nalgebra::DMatrix<num_complex::Complex64> {
    let mut acc = nalgebra::DMatrix::from_element(4, 4, num_complex::Complex64::new(0.0, 0.0));
    for (w, amps) in parts {
        let v = nalgebra::DVector::from_column_slice(amps);
        let rho = &v * v.adjoint();
        acc += partial_trace_raw(&rho, 4, &OUTER_QUBITS, &[1, 2]) * num_complex::Complex64::new(*w, 0.0);
    }
    acc
}

/// ρ₀₃ before the BSM and, for `BsmFirst`, conditioned on each BSM outcome.
pub fn stage_entanglement_report(config: &ExperimentConfig) -> Result<Vec<StageSnapshot>> {
    config.validate()?;
    let ensemble = prepared_ensemble(config.visibility);
    let pre: Vec<_> = ensemble
        .iter()
        .map(|(w, s)| (*w, s.amplitudes().to_vec()))
        .collect();
    let rho_pre = DensityMatrix::from_raw(2, weighted_rho03(&pre)).renormalized()?;
    let mut out = vec![StageSnapshot {
        stage: Stage::PreBsm,
        probability: 1.0,
        metrics: metrics(&rho_pre)?,
        rho03: rho_pre,
    }];
    if config.ordering == Ordering::PolarizationsFirst {
        return Ok(out);
    }
    let spec = MeasurementSpec::Bell {
        qubits: BSM_QUBITS,
        mode: config.bsm_mode,
    };
    for &label in BsmOutcome::outcomes(config.bsm_mode) {
        let mut parts = Vec::with_capacity(ensemble.len());
        let mut prob = 0.0;
        for (w, state) in &ensemble {
            let (_, p, amps) = branches(state, &spec)?
                .into_iter()
                .find(|(o, _, _)| *o == Outcome::Bell(label))
                .expect("label admissible in mode");
            prob += w * p;
            parts.push((*w, amps));
        }
        if prob < 1e-15 {
            continue;
        }
        let rho = DensityMatrix::from_raw(2, weighted_rho03(&parts)).renormalized()?;
        out.push(StageSnapshot {
            stage: Stage::PostBsm(label),
            probability: prob,
            metrics: metrics(&rho)?,
            rho03: rho,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(ExperimentConfig::new(0, 1).validate().is_err());
        assert!(ExperimentConfig::new(1, 1).validate().is_ok());
        let same = ExperimentConfig::new(1, 1).with_angles([10.0, 190.0, 0.0, 45.0]).unwrap();
        assert!(same.validate().is_err());
        assert!(ExperimentConfig::new(1, 1).with_visibility(1.5).validate().is_err());
        assert!(run_batch(&ExperimentConfig::new(0, 1)).is_err());
    }

    #[test]
    fn event_sequences_follow_ordering() {
        for ordering in Ordering::ALL {
            let config = ExperimentConfig::new(10, 3).with_ordering(ordering);
            for rec in run_batch(&config).unwrap() {
                let pos = |t| rec.events.iter().position(|&e| e == t).unwrap();
                let bsm = pos(EventTag::Bsm);
                let p0 = pos(EventTag::MeasurePhoton0);
                let p3 = pos(EventTag::MeasurePhoton3);
                match ordering {
                    Ordering::BsmFirst => assert!(bsm < p0 && bsm < p3),
                    Ordering::PolarizationsFirst => assert!(bsm > p0 && bsm > p3),
                }
                assert_eq!(rec.events[0], EventTag::Prepare);
            }
        }
    }

    #[test]
    fn partial_mode_records_use_partial_labels() {
        let config = ExperimentConfig::new(500, 9).with_bsm_mode(BsmMode::Partial);
        let recs = run_batch(&config).unwrap();
        assert!(recs.iter().all(|r| r.bsm.admissible(BsmMode::Partial)));
        assert!(recs.iter().any(|r| r.bsm == BsmOutcome::Other));
    }

    #[test]
    fn ensemble_weights_sum_to_one() {
        for v in [0.0, 0.3, 1.0] {
            let total: f64 = prepared_ensemble(v).iter().map(|(w, _)| w).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn reduced_visibility_weakens_swapped_entanglement() {
        // each pair V·ψ⁻ + (1−V)·I/4; the swapped state is a Werner state of
        // weight V², so C = max(0, (3V² − 1)/2)
        for v in [0.5, 0.8, 0.9] {
            let config = ExperimentConfig::new(1, 0).with_visibility(v);
            let report = stage_entanglement_report(&config).unwrap();
            assert!(report[0].metrics.concurrence.abs() < 1e-9);
            let expected = ((3.0 * v * v - 1.0) / 2.0f64).max(0.0);
            for snap in &report[1..] {
                assert!((snap.metrics.concurrence - expected).abs() < 1e-9, "v={v} {}", snap.stage);
            }
        }
    }

    #[test]
    fn reduced_visibility_sampling_matches_exact_table() {
        let config = ExperimentConfig::new(20_000, 5).with_visibility(0.7);
        let exact = exact_joint_distribution(&config).unwrap();
        let recs = run_batch(&config).unwrap();
        let n = recs.len() as f64;
        for bsm in BsmOutcome::outcomes(BsmMode::Full) {
            let p = exact.bsm_marginal(*bsm);
            let f = recs.iter().filter(|r| r.bsm == *bsm).count() as f64 / n;
            assert!((f - p).abs() < 5.0 * (p * (1.0 - p) / n).sqrt());
        }
    }
}
