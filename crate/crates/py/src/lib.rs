//! Python bindings: `import swapsim`.

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyModule;

use swapsim_core::analysis::{self, CellCounts, SelectionFilter};
use swapsim_core::classical::{self as lhv, ClassicalConfig, ClassicalRecord, HiddenVariableModel};
use swapsim_core::entanglement;
use swapsim_core::measure::{outcome_distribution, AnalyzerAngle, BinaryOutcome, BsmMode, BsmOutcome, MeasurementSpec, Outcome};
use swapsim_core::protocol::{self, Ordering, TrialRecord};
use swapsim_core::qstate::{self, BellKind, DensityMatrix, PureState};
use swapsim_core::records::{write_jsonl, RecordLine};
use swapsim_core::{Complex64, SimError};

create_exception!(swapsim, SimulationError, PyValueError);

fn err(e: SimError) -> PyErr {
    SimulationError::new_err(e.to_string())
}

fn parse<T: std::str::FromStr<Err = SimError>>(s: &str) -> PyResult<T> {
    s.parse().map_err(err)
}

fn bell_kind(label: &str) -> PyResult<BellKind> {
    BellKind::ALL
        .into_iter()
        .find(|k| k.label() == label)
        .ok_or_else(|| SimulationError::new_err(format!("unknown Bell state {label:?}")))
}

fn angles(degrees: [f64; 4]) -> PyResult<[AnalyzerAngle; 4]> {
    let [a, b, c, d] = degrees.map(AnalyzerAngle::from_degrees);
    Ok([a.map_err(err)?, b.map_err(err)?, c.map_err(err)?, d.map_err(err)?])
}

fn filter(select: Option<&str>) -> SelectionFilter {
    match select {
        None | Some("none") => SelectionFilter::None,
        Some(label) => SelectionFilter::Label(label.to_string()),
    }
}

/// Parses a serde document into native Python objects.
fn to_py(py: Python<'_>, json: &str) -> PyResult<Py<PyAny>> {
    let loads = PyModule::import(py, "json")?.getattr("loads")?;
    Ok(loads.call1((json,))?.unbind())
}

fn outcome_label(o: &Outcome) -> String {
    match o {
        Outcome::Binary(BinaryOutcome::Plus) => "+1".into(),
        Outcome::Binary(BinaryOutcome::Minus) => "-1".into(),
        Outcome::Bell(b) => b.label().into(),
    }
}

/// Pure state of a qubit register; qubit 0 is the most significant bit.
#[pyclass(name = "State", frozen)]
struct PyState(PureState);

#[pymethods]
impl PyState {
    #[new]
    fn new(num_qubits: usize, amplitudes: Vec<Complex64>) -> PyResult<Self> {
        PureState::new(num_qubits, amplitudes).map(Self).map_err(err)
    }

    /// One of "psi-minus", "psi-plus", "phi-minus", "phi-plus".
    #[staticmethod]
    fn bell(kind: &str) -> PyResult<Self> {
        Ok(Self(qstate::bell_state(bell_kind(kind)?)))
    }

    /// Two singlets on qubits (0, 1) and (2, 3).
    #[staticmethod]
    fn swap_input() -> Self {
        Self(qstate::prepare_swap_input())
    }

    #[getter]
    fn num_qubits(&self) -> usize {
        self.0.num_qubits()
    }

    #[getter]
    fn amplitudes(&self) -> Vec<Complex64> {
        self.0.amplitudes().to_vec()
    }

    fn tensor(&self, other: &PyState) -> PyResult<Self> {
        qstate::tensor(&self.0, &other.0).map(Self).map_err(err)
    }

    fn density(&self) -> PyDensity {
        PyDensity(qstate::to_density(&self.0))
    }

    /// Outcome probabilities of a polarization measurement at `degrees`.
    fn polarization_probabilities(&self, qubit: usize, degrees: f64) -> PyResult<Vec<(String, f64)>> {
        let angle = AnalyzerAngle::from_degrees(degrees).map_err(err)?;
        self.distribution(MeasurementSpec::Polarization { qubit, angle })
    }

    /// Outcome probabilities of a Bell-state measurement on two qubits.
    #[pyo3(signature = (q0, q1, mode = "full"))]
    fn bell_probabilities(&self, q0: usize, q1: usize, mode: &str) -> PyResult<Vec<(String, f64)>> {
        let mode: BsmMode = parse(mode)?;
        self.distribution(MeasurementSpec::Bell { qubits: (q0, q1), mode })
    }

    fn __len__(&self) -> usize {
        self.0.dim()
    }

    fn __repr__(&self) -> String {
        format!("State(num_qubits={})", self.0.num_qubits())
    }
}

impl PyState {
    fn distribution(&self, spec: MeasurementSpec) -> PyResult<Vec<(String, f64)>> {
        let table = outcome_distribution(&self.0, &[spec]).map_err(err)?;
        Ok(table
            .entries()
            .iter()
            .map(|(k, p)| (outcome_label(&k[0]), *p))
            .collect())
    }
}

/// Validated density matrix.
#[pyclass(name = "DensityMatrix", frozen)]
struct PyDensity(DensityMatrix);

#[pymethods]
impl PyDensity {
    /// `rows` is a square nested list of complex entries.
    #[new]
    fn new(rows: Vec<Vec<Complex64>>) -> PyResult<Self> {
        let dim = rows.len();
        if dim == 0 || !dim.is_power_of_two() || rows.iter().any(|r| r.len() != dim) {
            return Err(SimulationError::new_err("expected a square 2^n x 2^n matrix"));
        }
        let flat: Vec<Complex64> = rows.into_iter().flatten().collect();
        DensityMatrix::from_rows(dim.trailing_zeros() as usize, &flat)
            .map(Self)
            .map_err(err)
    }

    #[staticmethod]
    fn maximally_mixed(num_qubits: usize) -> PyResult<Self> {
        DensityMatrix::maximally_mixed(num_qubits).map(Self).map_err(err)
    }

    #[getter]
    fn num_qubits(&self) -> usize {
        self.0.num_qubits()
    }

    fn to_list(&self) -> Vec<Vec<Complex64>> {
        let m = self.0.entries();
        (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
    }

    fn trace(&self) -> f64 {
        self.0.trace()
    }

    fn purity(&self) -> f64 {
        self.0.purity()
    }

    fn eigenvalues(&self) -> Vec<f64> {
        self.0.eigenvalues()
    }

    fn partial_trace(&self, keep: Vec<usize>) -> PyResult<Self> {
        qstate::partial_trace(&self.0, &keep).map(Self).map_err(err)
    }

    fn concurrence(&self) -> PyResult<f64> {
        entanglement::concurrence(&self.0).map_err(err)
    }

    fn negativity(&self) -> PyResult<f64> {
        entanglement::negativity(&self.0).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("DensityMatrix(num_qubits={})", self.0.num_qubits())
    }
}

#[pyclass(name = "ExperimentConfig", frozen)]
struct PyConfig(protocol::ExperimentConfig);

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (trials, seed = 0, angles = protocol::CANONICAL_ANGLES, ordering = "bsm-first", bsm_mode = "full", visibility = 1.0))]
    fn new(trials: u64, seed: u64, angles: [f64; 4], ordering: &str, bsm_mode: &str, visibility: f64) -> PyResult<Self> {
        let config = protocol::ExperimentConfig::new(trials, seed)
            .with_angles(angles)
            .map_err(err)?
            .with_ordering(parse::<Ordering>(ordering)?)
            .with_bsm_mode(parse(bsm_mode)?)
            .with_visibility(visibility);
        config.validate().map_err(err)?;
        Ok(Self(config))
    }

    #[getter]
    fn trials(&self) -> u64 {
        self.0.trials
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.0.seed
    }

    #[getter]
    fn angles(&self) -> [f64; 4] {
        self.0.angle_degrees()
    }

    #[getter]
    fn ordering(&self) -> &'static str {
        self.0.ordering.label()
    }

    #[getter]
    fn bsm_mode(&self) -> &'static str {
        self.0.bsm_mode.label()
    }

    #[getter]
    fn visibility(&self) -> f64 {
        self.0.visibility
    }

    /// Samples all trials (in parallel; the result does not depend on it).
    fn run(&self, py: Python<'_>) -> PyResult<Batch> {
        let config = self.0.clone();
        let records = py.detach(|| protocol::run_batch(&config)).map_err(err)?;
        Ok(Batch(records))
    }

    /// Exact CHSH value, optionally conditioned on a BSM outcome label.
    #[pyo3(signature = (condition = None))]
    fn exact_chsh(&self, condition: Option<&str>) -> PyResult<Option<f64>> {
        let cond = condition.map(parse::<BsmOutcome>).transpose()?;
        let table = protocol::exact_joint_distribution(&self.0).map_err(err)?;
        Ok(table.chsh(cond))
    }

    /// Exact joint table as `{(s0, s3, o0, o3, bsm): probability}`.
    fn exact_table(&self) -> PyResult<Vec<((u8, u8, i8, i8, String), f64)>> {
        let table = protocol::exact_joint_distribution(&self.0).map_err(err)?;
        Ok(table
            .cells()
            .iter()
            .map(|(k, p)| {
                (
                    (k.setting0, k.setting3, k.outcome0.value(), k.outcome3.value(), k.bsm.label().to_string()),
                    *p,
                )
            })
            .collect())
    }

    /// Entanglement of photons 0 and 3 before and after the BSM.
    fn stage_report(&self) -> PyResult<Vec<(String, f64, f64, f64, f64)>> {
        let stages = protocol::stage_entanglement_report(&self.0).map_err(err)?;
        Ok(stages
            .into_iter()
            .map(|s| {
                (
                    s.stage.to_string(),
                    s.probability,
                    s.metrics.concurrence,
                    s.metrics.negativity,
                    s.metrics.purity,
                )
            })
            .collect())
    }

    fn __repr__(&self) -> String {
        let c = &self.0;
        format!(
            "ExperimentConfig(trials={}, seed={}, angles={:?}, ordering={:?}, bsm_mode={:?}, visibility={})",
            c.trials,
            c.seed,
            c.angle_degrees(),
            c.ordering.label(),
            c.bsm_mode.label(),
            c.visibility
        )
    }
}

/// Records of one quantum run.
#[pyclass(frozen)]
struct Batch(Vec<TrialRecord>);

#[pymethods]
impl Batch {
    fn __len__(&self) -> usize {
        self.0.len()
    }

    /// CHSH report as a dict; `select` is a BSM label or "none".
    #[pyo3(signature = (select = None))]
    fn chsh(&self, py: Python<'_>, select: Option<&str>) -> PyResult<Py<PyAny>> {
        chsh_dict(py, &self.0, select)
    }

    fn counts(&self) -> Vec<(String, u64)> {
        label_counts(self.0.iter().map(|r| r.bsm.label()))
    }

    fn records(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        records_py(py, self.0.iter().map(RecordLine::from))
    }

    fn write_jsonl(&self, path: std::path::PathBuf) -> PyResult<()> {
        write_file(&path, |w| write_jsonl(w, &self.0))
    }
}

/// Records of one hidden-variable run.
#[pyclass(frozen)]
struct ClassicalBatch(Vec<ClassicalRecord>);

#[pymethods]
impl ClassicalBatch {
    fn __len__(&self) -> usize {
        self.0.len()
    }

    #[pyo3(signature = (select = None))]
    fn chsh(&self, py: Python<'_>, select: Option<&str>) -> PyResult<Py<PyAny>> {
        chsh_dict(py, &self.0, select)
    }

    fn counts(&self) -> Vec<(String, u64)> {
        label_counts(self.0.iter().map(|r| r.marker.label()))
    }

    /// Applies "pr-box" or "quantum-mimic"; returns the survivors and the
    /// keep fraction.
    #[pyo3(signature = (rule, seed = 0, angles = protocol::CANONICAL_ANGLES))]
    fn discard(&self, rule: &str, seed: u64, angles: [f64; 4]) -> PyResult<(ClassicalBatch, f64)> {
        let angles = self::angles(angles)?;
        let rule = match rule {
            "pr-box" => lhv::pr_box_rule(angles),
            "quantum-mimic" => lhv::quantum_mimic_rule(angles),
            other => return Err(SimulationError::new_err(format!("unknown rule {other:?}"))),
        };
        let (kept, fraction) = lhv::apply_discard(&self.0, &rule, seed);
        Ok((ClassicalBatch(kept), fraction))
    }

    fn records(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        records_py(py, self.0.iter().map(RecordLine::from))
    }

    fn write_jsonl(&self, path: std::path::PathBuf) -> PyResult<()> {
        write_file(&path, |w| write_jsonl(w, &self.0))
    }
}

fn chsh_dict<R: analysis::Sample + Sync>(py: Python<'_>, records: &[R], select: Option<&str>) -> PyResult<Py<PyAny>> {
    let filter = filter(select);
    let report = py
        .detach(|| CellCounts::accumulate(records, &filter).chsh(&filter))
        .map_err(err)?;
    to_py(py, &report.to_json())
}

fn label_counts<'a>(labels: impl Iterator<Item = &'a str>) -> Vec<(String, u64)> {
    let mut counts = std::collections::BTreeMap::<&str, u64>::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    counts.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn records_py(py: Python<'_>, lines: impl Iterator<Item = RecordLine>) -> PyResult<Py<PyAny>> {
    let lines: Vec<RecordLine> = lines.collect();
    let json = serde_json::to_string(&lines).map_err(|e| SimulationError::new_err(e.to_string()))?;
    to_py(py, &json)
}

fn write_file(path: &std::path::Path, fill: impl FnOnce(&mut std::io::BufWriter<std::fs::File>) -> std::io::Result<()>) -> PyResult<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    fill(&mut w)?;
    Ok(())
}

/// Quantum prediction `E(α, δ)` for photons 0 and 3 given a BSM outcome.
#[pyfunction]
fn predicted_correlation(bsm: &str, alpha: f64, delta: f64) -> PyResult<f64> {
    let a = AnalyzerAngle::from_degrees(alpha).map_err(err)?;
    let d = AnalyzerAngle::from_degrees(delta).map_err(err)?;
    analysis::predicted_correlation(parse(bsm)?, a, d).map_err(err)
}

/// Exact correlation from the full joint distribution.
#[pyfunction]
#[pyo3(signature = (alpha, delta, condition = None, ordering = "bsm-first", bsm_mode = "full", visibility = 1.0))]
fn exact_correlation(
    alpha: f64,
    delta: f64,
    condition: Option<&str>,
    ordering: &str,
    bsm_mode: &str,
    visibility: f64,
) -> PyResult<f64> {
    let a = AnalyzerAngle::from_degrees(alpha).map_err(err)?;
    let d = AnalyzerAngle::from_degrees(delta).map_err(err)?;
    let cond = condition.map(parse::<BsmOutcome>).transpose()?;
    protocol::exact_correlation(a, d, parse(ordering)?, parse(bsm_mode)?, visibility, cond).map_err(err)
}

/// Generates hidden-variable records: model is "sign", "uniform", "constant"
/// or "random-fourier-<k>".
#[pyfunction]
#[pyo3(signature = (model, trials, seed = 0, angles = protocol::CANONICAL_ANGLES))]
fn run_lhv(py: Python<'_>, model: &str, trials: u64, seed: u64, angles: [f64; 4]) -> PyResult<ClassicalBatch> {
    let m = HiddenVariableModel::by_name(model)
        .or_else(|| {
            model
                .strip_prefix("random-fourier-")
                .and_then(|k| k.parse().ok())
                .map(|k| HiddenVariableModel::random_fourier(seed, k))
        })
        .ok_or_else(|| SimulationError::new_err(format!("unknown model {model:?}")))?;
    let config = ClassicalConfig::new(trials, seed).with_angles(angles).map_err(err)?;
    let records = py.detach(|| lhv::run_lhv(&m, &config)).map_err(err)?;
    Ok(ClassicalBatch(records))
}

/// Local bound check over `models` random settings-blind marker models.
#[pyfunction]
#[pyo3(signature = (models, trials, seed = 0, angles = protocol::CANONICAL_ANGLES))]
fn blind_check(py: Python<'_>, models: usize, trials: u64, seed: u64, angles: [f64; 4]) -> PyResult<Py<PyAny>> {
    let config = ClassicalConfig::new(trials, seed).with_angles(angles).map_err(err)?;
    let family = lhv::random_marker_models(models, seed);
    let report = py
        .detach(|| lhv::settings_blind_check(&family, &config))
        .map_err(err)?;
    to_py(py, &serde_json::to_string(&report).expect("report serializes"))
}

#[pymodule]
fn swapsim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SimulationError", m.py().get_type::<SimulationError>())?;
    m.add_class::<PyState>()?;
    m.add_class::<PyDensity>()?;
    m.add_class::<PyConfig>()?;
    m.add_class::<Batch>()?;
    m.add_class::<ClassicalBatch>()?;
    m.add_function(wrap_pyfunction!(predicted_correlation, m)?)?;
    m.add_function(wrap_pyfunction!(exact_correlation, m)?)?;
    m.add_function(wrap_pyfunction!(run_lhv, m)?)?;
    m.add_function(wrap_pyfunction!(blind_check, m)?)?;
    Ok(())
}
