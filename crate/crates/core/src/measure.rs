//! Projective measurements: polarization analyzers and Bell-state analysis.
//!
//! Outcomes are enumerated in a fixed order (binary: `+1, −1`; Bell:
//! `ψ⁻, ψ⁺, φ⁻, φ⁺`, or `ψ⁻, ψ⁺, other` in partial mode) and sampled by
//! inverse CDF, so a given random stream always selects the same branch.

use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::qstate::{bit_shift, BellKind, PureState};
use crate::rng::{sample_index, RandomSource};
use crate::{Result, SimError};

/// Branches below this probability are never selected.
const MIN_BRANCH_PROB: f64 = 1e-15;

/// Polarization analyzer orientation, canonicalized to `[0°, 180°)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct AnalyzerAngle(f64);

impl AnalyzerAngle {
    pub fn from_degrees(degrees: f64) -> Result<Self> {
        if !degrees.is_finite() {
            return Err(SimError::InvalidAngle(format!("{degrees} is not finite")));
        }
        let mut d = degrees.rem_euclid(180.0);
        if d >= 180.0 {
            d = 0.0;
        }
        Ok(Self(d))
    }

    pub fn degrees(self) -> f64 {
        self.0
    }

    pub fn radians(self) -> f64 {
        self.0.to_radians()
    }
}

impl TryFrom<f64> for AnalyzerAngle {
    type Error = SimError;
    fn try_from(d: f64) -> Result<Self> {
        Self::from_degrees(d)
    }
}

impl From<AnalyzerAngle> for f64 {
    fn from(a: AnalyzerAngle) -> f64 {
        a.0
    }
}

impl fmt::Display for AnalyzerAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}°", self.0)
    }
}

/// `+1` = transmitted (`|θ⟩`), `−1` = reflected (`|θ⊥⟩`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinaryOutcome {
    Plus,
    Minus,
}

impl BinaryOutcome {
    pub const ALL: [BinaryOutcome; 2] = [BinaryOutcome::Plus, BinaryOutcome::Minus];

    pub fn value(self) -> i8 {
        match self {
            BinaryOutcome::Plus => 1,
            BinaryOutcome::Minus => -1,
        }
    }

    pub fn from_value(v: i64) -> Result<Self> {
        match v {
            1 => Ok(BinaryOutcome::Plus),
            -1 => Ok(BinaryOutcome::Minus),
            other => Err(SimError::InvalidRecord(format!("outcome {other} is not ±1"))),
        }
    }

    pub fn from_sign(x: f64) -> Self {
        if x >= 0.0 {
            BinaryOutcome::Plus
        } else {
            BinaryOutcome::Minus
        }
    }
}

impl Serialize for BinaryOutcome {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i8(self.value())
    }
}

impl<'de> Deserialize<'de> for BinaryOutcome {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = i64::deserialize(d)?;
        BinaryOutcome::from_value(v).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BsmMode {
    /// Resolves all four Bell states.
    #[default]
    Full,
    /// Linear-optics analyzer: resolves `ψ⁻` and `ψ⁺`, lumps `φ±` together.
    Partial,
}

impl BsmMode {
    pub fn label(self) -> &'static str {
        match self {
            BsmMode::Full => "full",
            BsmMode::Partial => "partial",
        }
    }
}

impl FromStr for BsmMode {
    type Err = SimError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(BsmMode::Full),
            "partial" => Ok(BsmMode::Partial),
            _ => Err(SimError::InvalidConfig(format!("unknown BSM mode '{s}'"))),
        }
    }
}

/// Result of a Bell-state measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BsmOutcome {
    PsiMinus,
    PsiPlus,
    PhiMinus,
    PhiPlus,
    /// Either `φ⁻` or `φ⁺` (partial mode only).
    Other,
}

impl BsmOutcome {
    const FULL: [BsmOutcome; 4] = [
        BsmOutcome::PsiMinus,
        BsmOutcome::PsiPlus,
        BsmOutcome::PhiMinus,
        BsmOutcome::PhiPlus,
    ];
    const PARTIAL: [BsmOutcome; 3] = [BsmOutcome::PsiMinus, BsmOutcome::PsiPlus, BsmOutcome::Other];

    /// Admissible outcomes of `mode`, in sampling order.
    pub fn outcomes(mode: BsmMode) -> &'static [BsmOutcome] {
        match mode {
            BsmMode::Full => &Self::FULL,
            BsmMode::Partial => &Self::PARTIAL,
        }
    }

    pub fn admissible(self, mode: BsmMode) -> bool {
        Self::outcomes(mode).contains(&self)
    }

    pub fn label(self) -> &'static str {
        match self {
            BsmOutcome::PsiMinus => "psi-minus",
            BsmOutcome::PsiPlus => "psi-plus",
            BsmOutcome::PhiMinus => "phi-minus",
            BsmOutcome::PhiPlus => "phi-plus",
            BsmOutcome::Other => "other",
        }
    }

    pub fn bell_kind(self) -> Option<BellKind> {
        match self {
            BsmOutcome::PsiMinus => Some(BellKind::PsiMinus),
            BsmOutcome::PsiPlus => Some(BellKind::PsiPlus),
            BsmOutcome::PhiMinus => Some(BellKind::PhiMinus),
            BsmOutcome::PhiPlus => Some(BellKind::PhiPlus),
            BsmOutcome::Other => None,
        }
    }
}

impl From<BellKind> for BsmOutcome {
    fn from(k: BellKind) -> Self {
        match k {
            BellKind::PsiMinus => BsmOutcome::PsiMinus,
            BellKind::PsiPlus => BsmOutcome::PsiPlus,
            BellKind::PhiMinus => BsmOutcome::PhiMinus,
            BellKind::PhiPlus => BsmOutcome::PhiPlus,
        }
    }
}

impl FromStr for BsmOutcome {
    type Err = SimError;
    fn from_str(s: &str) -> Result<Self> {
        [
            BsmOutcome::PsiMinus,
            BsmOutcome::PsiPlus,
            BsmOutcome::PhiMinus,
            BsmOutcome::PhiPlus,
            BsmOutcome::Other,
        ]
        .into_iter()
        .find(|o| o.label() == s)
        .ok_or_else(|| SimError::InvalidConfig(format!("unknown Bell outcome '{s}'")))
    }
}

impl fmt::Display for BsmOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// `(P₊, P₋)` with `P₊ = |θ⟩⟨θ|`, `|θ⟩ = cos θ|H⟩ + sin θ|V⟩`.
pub fn polarization_observable(theta: AnalyzerAngle) -> (Matrix2<Complex64>, Matrix2<Complex64>) {
    let (s, c) = theta.radians().sin_cos();
    let r = |x: f64| Complex64::new(x, 0.0);
    let plus = Matrix2::new(r(c * c), r(c * s), r(c * s), r(s * s));
    let minus = Matrix2::identity() - plus;
    (plus, minus)
}

/// One step of a measurement plan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasurementSpec {
    Polarization { qubit: usize, angle: AnalyzerAngle },
    Bell { qubits: (usize, usize), mode: BsmMode },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Binary(BinaryOutcome),
    Bell(BsmOutcome),
}

fn check_index(state: &PureState, q: usize) -> Result<()> {
    if q >= state.num_qubits() {
        Err(SimError::InvalidQubit {
            index: q,
            num_qubits: state.num_qubits(),
        })
    } else {
        Ok(())
    }
}

/// Unnormalized projection of `state` onto `outcome` of analyzer `theta` on `qubit`.
fn project_polarization(
    state: &PureState,
    qubit: usize,
    theta: AnalyzerAngle,
    outcome: BinaryOutcome,
) -> Vec<Complex64> {
    let (s, c) = theta.radians().sin_cos();
    // analyzer eigenvector (h, v)
    let (h, v) = match outcome {
        BinaryOutcome::Plus => (c, s),
        BinaryOutcome::Minus => (-s, c),
    };
    let amps = state.amplitudes();
    let mask = 1usize << bit_shift(state.num_qubits(), qubit);
    let mut out = vec![Complex64::new(0.0, 0.0); amps.len()];
    for i0 in (0..amps.len()).filter(|i| i & mask == 0) {
        let i1 = i0 | mask;
        let overlap = amps[i0] * h + amps[i1] * v;
        out[i0] = overlap * h;
        out[i1] = overlap * v;
    }
    out
}

/// Unnormalized projection onto a Bell outcome of qubits `(i, j)`; `i` is the
/// first (more significant) qubit of the pair.
fn project_bell(state: &PureState, (i, j): (usize, usize), outcome: BsmOutcome) -> Vec<Complex64> {
    let n = state.num_qubits();
    let mi = 1usize << bit_shift(n, i);
    let mj = 1usize << bit_shift(n, j);
    let amps = state.amplitudes();
    let mut out = vec![Complex64::new(0.0, 0.0); amps.len()];
    for base in (0..amps.len()).filter(|x| x & (mi | mj) == 0) {
        let idx = [base, base | mj, base | mi, base | mi | mj];
        match outcome.bell_kind() {
            Some(kind) => {
                let bell = kind.amplitudes();
                let overlap: Complex64 = (0..4).map(|b| bell[b].conj() * amps[idx[b]]).sum();
                for b in 0..4 {
                    out[idx[b]] = bell[b] * overlap;
                }
            }
            None => {
                // span{HH, VV}
                out[idx[0]] = amps[idx[0]];
                out[idx[3]] = amps[idx[3]];
            }
        }
    }
    out
}

fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum()
}

/// Every branch of `spec`: outcome, probability and unnormalized post-state.
pub(crate) fn branches(state: &PureState, spec: &MeasurementSpec) -> Result<Vec<(Outcome, f64, Vec<Complex64>)>> {
    match *spec {
        MeasurementSpec::Polarization { qubit, angle } => {
            check_index(state, qubit)?;
            Ok(BinaryOutcome::ALL
                .iter()
                .map(|&o| {
                    let v = project_polarization(state, qubit, angle, o);
                    (Outcome::Binary(o), norm_sqr(&v), v)
                })
                .collect())
        }
        MeasurementSpec::Bell { qubits, mode } => {
            check_index(state, qubits.0)?;
            check_index(state, qubits.1)?;
            if qubits.0 == qubits.1 {
                return Err(SimError::DuplicateQubit(qubits.0));
            }
            Ok(BsmOutcome::outcomes(mode)
                .iter()
                .map(|&o| {
                    let v = project_bell(state, qubits, o);
                    (Outcome::Bell(o), norm_sqr(&v), v)
                })
                .collect())
        }
    }
}

/// Samples `spec` on `state` and returns the outcome with the collapsed state.
pub fn measure(state: &PureState, spec: &MeasurementSpec, rng: &mut RandomSource) -> Result<(Outcome, PureState)> {
    let mut branches = branches(state, spec)?;
    let probs: Vec<f64> = branches.iter().map(|b| b.1).collect();
    let pick = sample_index(&probs, rng.uniform());
    let (outcome, p, mut amps) = branches.swap_remove(pick);
    assert!(p > MIN_BRANCH_PROB, "sampled a branch of probability {p:e}");
    let scale = p.sqrt();
    for a in &mut amps {
        *a /= scale;
    }
    Ok((outcome, PureState::from_raw(state.num_qubits(), amps)))
}

pub fn measure_qubit(
    state: &PureState,
    qubit: usize,
    theta: AnalyzerAngle,
    rng: &mut RandomSource,
) -> Result<(BinaryOutcome, PureState)> {
    let spec = MeasurementSpec::Polarization { qubit, angle: theta };
    match measure(state, &spec, rng)? {
        (Outcome::Binary(o), s) => Ok((o, s)),
        _ => unreachable!("polarization yields binary outcomes"),
    }
}

pub fn bell_measurement(
    state: &PureState,
    qubits: (usize, usize),
    mode: BsmMode,
    rng: &mut RandomSource,
) -> Result<(BsmOutcome, PureState)> {
    let spec = MeasurementSpec::Bell { qubits, mode };
    match measure(state, &spec, rng)? {
        (Outcome::Bell(o), s) => Ok((o, s)),
        _ => unreachable!("Bell measurement yields Bell outcomes"),
    }
}

/// Exact joint outcome probabilities of a measurement plan.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeTable {
    entries: Vec<(Vec<Outcome>, f64)>,
}

impl OutcomeTable {
    pub fn entries(&self) -> &[(Vec<Outcome>, f64)] {
        &self.entries
    }

    pub fn probability(&self, outcomes: &[Outcome]) -> f64 {
        self.entries
            .iter()
            .find(|(k, _)| k.as_slice() == outcomes)
            .map_or(0.0, |(_, p)| *p)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Enumerates every outcome branch of `plan` applied in order to `state`.
///
/// Branches of zero probability are kept with probability 0 so that tables
/// for a given plan shape always have the same entries.
pub fn outcome_distribution(state: &PureState, plan: &[MeasurementSpec]) -> Result<OutcomeTable> {
    let mut entries = Vec::new();
    let mut prefix = Vec::with_capacity(plan.len());
    enumerate(state.amplitudes().to_vec(), state.num_qubits(), 1.0, plan, &mut prefix, &mut entries)?;
    Ok(OutcomeTable { entries })
}

fn enumerate(
    amps: Vec<Complex64>,
    num_qubits: usize,
    weight: f64,
    plan: &[MeasurementSpec],
    prefix: &mut Vec<Outcome>,
    out: &mut Vec<(Vec<Outcome>, f64)>,
) -> Result<()> {
    let Some((spec, rest)) = plan.split_first() else {
        out.push((prefix.clone(), weight));
        return Ok(());
    };
    // `amps` carries a normalized state; the branch weight is tracked separately
    let state = PureState::from_raw(num_qubits, amps);
    for (outcome, p, mut next) in branches(&state, spec)? {
        prefix.push(outcome);
        if p > MIN_BRANCH_PROB {
            let scale = p.sqrt();
            for a in &mut next {
                *a /= scale;
            }
            enumerate(next, num_qubits, weight * p, rest, prefix, out)?;
        } else {
            enumerate(next, num_qubits, 0.0, rest, prefix, out)?;
        }
        prefix.pop();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{bell_state, prepare_swap_input, tensor};

    fn deg(d: f64) -> AnalyzerAngle {
        AnalyzerAngle::from_degrees(d).unwrap()
    }

    #[test]
    fn angle_canonicalization() {
        assert_eq!(deg(190.0).degrees(), 10.0);
        assert_eq!(deg(-45.0).degrees(), 135.0);
        assert_eq!(deg(180.0).degrees(), 0.0);
        assert!(AnalyzerAngle::from_degrees(f64::NAN).is_err());
        assert!(AnalyzerAngle::from_degrees(f64::INFINITY).is_err());
    }

    #[test]
    fn observable_examples() {
        let (p, m) = polarization_observable(deg(0.0));
        assert_eq!(p, Matrix2::new(1.0, 0.0, 0.0, 0.0).map(|x| Complex64::new(x, 0.0)));
        assert!((p + m - Matrix2::identity()).norm() < 1e-15);
        let (p, _) = polarization_observable(deg(45.0));
        for z in p.iter() {
            assert!((z - Complex64::new(0.5, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn measuring_h_at_zero_is_certain() {
        let h = PureState::basis(1, 0).unwrap();
        for stream in 0..50 {
            let mut rng = RandomSource::new(1, stream);
            let (o, post) = measure_qubit(&h, 0, deg(0.0), &mut rng).unwrap();
            assert_eq!(o, BinaryOutcome::Plus);
            assert!(post.equal_up_to_phase(&h, 1e-12));
        }
    }

    #[test]
    fn h_at_45_is_even() {
        let h = PureState::basis(1, 0).unwrap();
        let table = outcome_distribution(&h, &[MeasurementSpec::Polarization { qubit: 0, angle: deg(45.0) }]).unwrap();
        assert!((table.probability(&[Outcome::Binary(BinaryOutcome::Plus)]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn singlet_anticorrelated_at_equal_angles() {
        let psi = bell_state(BellKind::PsiMinus);
        for (i, theta) in [0.0, 17.0, 45.0, 100.0, 179.0].into_iter().enumerate() {
            for stream in 0..20 {
                let mut rng = RandomSource::new(i as u64, stream);
                let (a, s) = measure_qubit(&psi, 0, deg(theta), &mut rng).unwrap();
                let (b, _) = measure_qubit(&s, 1, deg(theta), &mut rng).unwrap();
                assert_eq!(a.value(), -b.value());
            }
        }
    }

    #[test]
    fn bell_measurement_rejects_bad_indices() {
        let s = prepare_swap_input();
        let mut rng = RandomSource::new(0, 0);
        assert_eq!(
            bell_measurement(&s, (1, 1), BsmMode::Full, &mut rng).unwrap_err(),
            SimError::DuplicateQubit(1)
        );
        assert!(matches!(
            bell_measurement(&s, (1, 7), BsmMode::Full, &mut rng),
            Err(SimError::InvalidQubit { index: 7, .. })
        ));
    }

    #[test]
    fn bell_measurement_of_a_bell_state_is_certain() {
        for k in BellKind::ALL {
            let s = bell_state(k);
            let mut rng = RandomSource::new(3, 0);
            let (o, post) = bell_measurement(&s, (0, 1), BsmMode::Full, &mut rng).unwrap();
            assert_eq!(o, BsmOutcome::from(k));
            assert!(post.equal_up_to_phase(&s, 1e-12));
        }
    }

    #[test]
    fn empty_plan_is_certain() {
        let table = outcome_distribution(&prepare_swap_input(), &[]).unwrap();
        assert_eq!(table.entries(), &[(vec![], 1.0)]);
    }

    #[test]
    fn product_state_polarization_distribution() {
        let h = PureState::basis(1, 0).unwrap();
        let s = tensor(&h, &bell_state(BellKind::PsiPlus)).unwrap();
        for theta in [0.0, 10.0, 30.0, 60.0, 135.0] {
            let t = outcome_distribution(&s, &[MeasurementSpec::Polarization { qubit: 0, angle: deg(theta) }]).unwrap();
            let c = theta.to_radians().cos().powi(2);
            assert!((t.probability(&[Outcome::Binary(BinaryOutcome::Plus)]) - c).abs() < 1e-12);
            assert!((t.probability(&[Outcome::Binary(BinaryOutcome::Minus)]) - (1.0 - c)).abs() < 1e-12);
        }
    }

    #[test]
    fn outcome_labels_parse() {
        for o in BsmOutcome::outcomes(BsmMode::Full).iter().chain(&[BsmOutcome::Other]) {
            assert_eq!(o.label().parse::<BsmOutcome>().unwrap(), *o);
        }
        assert!(BsmOutcome::Other.admissible(BsmMode::Partial));
        assert!(!BsmOutcome::Other.admissible(BsmMode::Full));
        assert!(!BsmOutcome::PhiPlus.admissible(BsmMode::Partial));
    }
}
