//! Correlation and CHSH estimation over outcome records.
//!
//! Records are reduced to mergeable count tables ([`CellCounts`]); any
//! partition of the records merged in any order yields the same report.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::format::serialize_f64;
use crate::measure::{AnalyzerAngle, BinaryOutcome, BsmOutcome};
use crate::protocol::TrialRecord;
use crate::{Result, SimError};

/// The fields of a record that statistics are computed from.
#[derive(Debug, Clone, Copy)]
pub struct SampleView<'a> {
    pub trial_id: u64,
    pub setting0: u8,
    pub setting3: u8,
    pub outcome0: BinaryOutcome,
    pub outcome3: BinaryOutcome,
    /// BSM outcome or classical marker label.
    pub label: &'a str,
}

pub trait Sample {
    fn view(&self) -> SampleView<'_>;
}

impl Sample for TrialRecord {
    fn view(&self) -> SampleView<'_> {
        SampleView {
            trial_id: self.trial_id,
            setting0: self.setting0.index,
            setting3: self.setting3.index,
            outcome0: self.outcome0,
            outcome3: self.outcome3,
            label: self.bsm.label(),
        }
    }
}

pub type Predicate = Arc<dyn Fn(&SampleView<'_>) -> bool + Send + Sync>;

/// Which records enter the statistics.
#[derive(Clone, Default)]
pub enum SelectionFilter {
    #[default]
    None,
    /// Keep records whose BSM outcome (or marker) has this label.
    Label(String),
    Custom { name: String, predicate: Predicate },
}

impl SelectionFilter {
    pub fn bsm_equals(outcome: BsmOutcome) -> Self {
        SelectionFilter::Label(outcome.label().to_string())
    }

    pub fn custom(name: impl Into<String>, f: impl Fn(&SampleView<'_>) -> bool + Send + Sync + 'static) -> Self {
        SelectionFilter::Custom {
            name: name.into(),
            predicate: Arc::new(f),
        }
    }

    pub fn accepts(&self, view: &SampleView<'_>) -> bool {
        match self {
            SelectionFilter::None => true,
            SelectionFilter::Label(l) => view.label == l,
            SelectionFilter::Custom { predicate, .. } => predicate(view),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            SelectionFilter::None => "none".to_string(),
            SelectionFilter::Label(l) => format!("bsm={l}"),
            SelectionFilter::Custom { name, .. } => name.clone(),
        }
    }
}

impl fmt::Debug for SelectionFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

impl Serialize for SelectionFilter {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.describe())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationEstimate {
    #[serde(rename = "e", serialize_with = "serialize_f64")]
    pub e_value: f64,
    pub n: u64,
    #[serde(serialize_with = "serialize_f64")]
    pub std_err: f64,
}

impl CorrelationEstimate {
    fn from_counts(same: u64, opposite: u64) -> Option<Self> {
        let n = same + opposite;
        if n == 0 {
            return None;
        }
        let e = (same as f64 - opposite as f64) / n as f64;
        Some(Self {
            e_value: e,
            n,
            std_err: ((1.0 - e * e).max(0.0) / n as f64).sqrt(),
        })
    }
}

const CELL_NAMES: [[&str; 2]; 2] = [["(a,b)", "(a,b')"], ["(a',b)", "(a',b')"]];

/// Outcome counts per settings pair, after filtering.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CellCounts {
    /// `[setting0][setting3][same, opposite]`
    counts: [[[u64; 2]; 2]; 2],
    pub kept: u64,
    pub total: u64,
}

impl CellCounts {
    pub fn add(&mut self, view: &SampleView<'_>, filter: &SelectionFilter) {
        self.total += 1;
        if !filter.accepts(view) {
            return;
        }
        self.kept += 1;
        let same = view.outcome0 == view.outcome3;
        self.counts[view.setting0 as usize & 1][view.setting3 as usize & 1][usize::from(!same)] += 1;
    }

    pub fn merge(mut self, other: &CellCounts) -> CellCounts {
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    self.counts[i][j][k] += other.counts[i][j][k];
                }
            }
        }
        self.kept += other.kept;
        self.total += other.total;
        self
    }

    pub fn accumulate<R: Sample + Sync>(records: &[R], filter: &SelectionFilter) -> CellCounts {
        records
            .par_iter()
            .fold(CellCounts::default, |mut acc, r| {
                acc.add(&r.view(), filter);
                acc
            })
            .reduce(CellCounts::default, |a, b| a.merge(&b))
    }

    pub fn cell_count(&self, setting0: u8, setting3: u8) -> u64 {
        let c = self.counts[setting0 as usize][setting3 as usize];
        c[0] + c[1]
    }

    pub fn correlation(&self, setting0: u8, setting3: u8) -> Result<CorrelationEstimate> {
        if setting0 > 1 || setting3 > 1 {
            return Err(SimError::InvalidConfig(format!(
                "setting indices ({setting0}, {setting3}) must be 0 or 1"
            )));
        }
        let [same, opposite] = self.counts[setting0 as usize][setting3 as usize];
        CorrelationEstimate::from_counts(same, opposite).ok_or_else(|| SimError::InsufficientData {
            cell: CELL_NAMES[setting0 as usize][setting3 as usize].to_string(),
        })
    }

    pub fn chsh(&self, filter: &SelectionFilter) -> Result<ChshReport> {
        let e_ab = self.correlation(0, 0)?;
        let e_ab_prime = self.correlation(0, 1)?;
        let e_a_prime_b = self.correlation(1, 0)?;
        let e_a_prime_b_prime = self.correlation(1, 1)?;
        let s = e_ab.e_value - e_ab_prime.e_value + e_a_prime_b.e_value + e_a_prime_b_prime.e_value;
        let s_std_err = [e_ab, e_ab_prime, e_a_prime_b, e_a_prime_b_prime]
            .iter()
            .map(|e| e.std_err * e.std_err)
            .sum::<f64>()
            .sqrt();
        Ok(ChshReport {
            e_ab,
            e_ab_prime,
            e_a_prime_b,
            e_a_prime_b_prime,
            s,
            s_abs: s.abs(),
            s_std_err,
            filter: filter.clone(),
            kept: self.kept,
            total: self.total,
        })
    }
}

/// CHSH statistic `S = E(a,b) − E(a,b′) + E(a′,b) + E(a′,b′)` with its
/// binomial standard error.
#[derive(Debug, Clone, Serialize)]
pub struct ChshReport {
    pub e_ab: CorrelationEstimate,
    pub e_ab_prime: CorrelationEstimate,
    pub e_a_prime_b: CorrelationEstimate,
    pub e_a_prime_b_prime: CorrelationEstimate,
    #[serde(serialize_with = "serialize_f64")]
    pub s: f64,
    #[serde(serialize_with = "serialize_f64")]
    pub s_abs: f64,
    #[serde(serialize_with = "serialize_f64")]
    pub s_std_err: f64,
    pub filter: SelectionFilter,
    pub kept: u64,
    pub total: u64,
}

impl ChshReport {
    pub fn correlations(&self) -> [CorrelationEstimate; 4] {
        [self.e_ab, self.e_ab_prime, self.e_a_prime_b, self.e_a_prime_b_prime]
    }

    /// Structured document with 12-significant-digit numbers.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn correlation<R: Sample + Sync>(
    records: &[R],
    setting_pair: (u8, u8),
    filter: &SelectionFilter,
) -> Result<CorrelationEstimate> {
    CellCounts::accumulate(records, filter).correlation(setting_pair.0, setting_pair.1)
}

pub fn chsh<R: Sample + Sync>(records: &[R], filter: &SelectionFilter) -> Result<ChshReport> {
    CellCounts::accumulate(records, filter).chsh(filter)
}

/// Closed-form correlation of photons 0 and 3 given a full-mode BSM outcome.
pub fn predicted_correlation(bsm: BsmOutcome, alpha: AnalyzerAngle, delta: AnalyzerAngle) -> Result<f64> {
    let (a, d) = (alpha.radians(), delta.radians());
    match bsm {
        BsmOutcome::PsiMinus => Ok(-(2.0 * (a - d)).cos()),
        BsmOutcome::PsiPlus => Ok(-(2.0 * (a + d)).cos()),
        BsmOutcome::PhiPlus => Ok((2.0 * (a - d)).cos()),
        BsmOutcome::PhiMinus => Ok((2.0 * (a + d)).cos()),
        BsmOutcome::Other => Err(SimError::UndefinedPrediction(bsm.label().to_string())),
    }
}
