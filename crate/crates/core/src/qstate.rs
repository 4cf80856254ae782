//! State vectors and density matrices for small qubit registers.
//!
//! Basis convention: photon `k` is qubit `k`, qubit 0 is the most significant
//! bit of the basis index, and `H ↔ 0`, `V ↔ 1`. The basis state `|HVHV⟩`
//! therefore has index `0b0101 = 5`.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Result, SimError};

pub const MAX_QUBITS: usize = 12;
/// Tolerance for algebraic identities (normalization, trace, hermiticity).
pub const ALGEBRA_TOL: f64 = 1e-12;
/// Slack allowed below zero for density-matrix eigenvalues.
pub const PSD_SLACK: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// The four Bell states of two qubits.
///
/// `ψ∓ = (|HV⟩ ∓ |VH⟩)/√2`, `φ∓ = (|HH⟩ ∓ |VV⟩)/√2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BellKind {
    PsiMinus,
    PsiPlus,
    PhiMinus,
    PhiPlus,
}

impl BellKind {
    /// Fixed enumeration order used for sampling and tables.
    pub const ALL: [BellKind; 4] = [
        BellKind::PsiMinus,
        BellKind::PsiPlus,
        BellKind::PhiMinus,
        BellKind::PhiPlus,
    ];

    pub fn label(self) -> &'static str {
        match self {
            BellKind::PsiMinus => "psi-minus",
            BellKind::PsiPlus => "psi-plus",
            BellKind::PhiMinus => "phi-minus",
            BellKind::PhiPlus => "phi-plus",
        }
    }

    /// Amplitudes over `(HH, HV, VH, VV)`.
    pub fn amplitudes(self) -> [Complex64; 4] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let c = |x: f64| Complex64::new(x, 0.0);
        match self {
            BellKind::PsiMinus => [ZERO, c(h), c(-h), ZERO],
            BellKind::PsiPlus => [ZERO, c(h), c(h), ZERO],
            BellKind::PhiMinus => [c(h), ZERO, ZERO, c(-h)],
            BellKind::PhiPlus => [c(h), ZERO, ZERO, c(h)],
        }
    }
}

impl fmt::Display for BellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Position of qubit `k` in the basis index of an `n`-qubit register.
#[inline]
pub(crate) fn bit_shift(num_qubits: usize, k: usize) -> usize {
    num_qubits - 1 - k
}

fn check_qubit(index: usize, num_qubits: usize) -> Result<()> {
    if index >= num_qubits {
        Err(SimError::InvalidQubit { index, num_qubits })
    } else {
        Ok(())
    }
}

fn check_register(num_qubits: usize) -> Result<()> {
    if num_qubits == 0 || num_qubits > MAX_QUBITS {
        Err(SimError::RegisterOverflow {
            requested: num_qubits,
            max: MAX_QUBITS,
        })
    } else {
        Ok(())
    }
}

/// Normalized pure state of an `n`-qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl PureState {
    /// Builds a state from amplitudes, checking length, finiteness and norm.
    pub fn new(num_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_register(num_qubits)?;
        let expected = 1usize << num_qubits;
        if amplitudes.len() != expected {
            return Err(SimError::DimensionMismatch {
                expected,
                actual: amplitudes.len(),
            });
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(SimError::NonFinite);
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > ALGEBRA_TOL {
            return Err(SimError::NotNormalized(norm));
        }
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    /// Scales `amplitudes` to unit norm.
    pub fn normalized(num_qubits: usize, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() {
            return Err(SimError::NonFinite);
        }
        if norm == 0.0 {
            return Err(SimError::NotNormalized(0.0));
        }
        for a in &mut amplitudes {
            *a /= norm;
        }
        Self::new(num_qubits, amplitudes)
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        check_register(num_qubits)?;
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(SimError::DimensionMismatch {
                expected: dim,
                actual: index,
            });
        }
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    /// Wraps amplitudes whose norm the caller has already established.
    pub(crate) fn from_raw(num_qubits: usize, amplitudes: Vec<Complex64>) -> Self {
        debug_assert_eq!(amplitudes.len(), 1 << num_qubits);
        Self {
            num_qubits,
            amplitudes,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amplitudes[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// True when the two states differ only by a global phase.
    pub fn equal_up_to_phase(&self, other: &PureState, tol: f64) -> bool {
        self.num_qubits == other.num_qubits && (self.inner(other).norm() - 1.0).abs() <= tol
    }
}

/// Bell state of two qubits.
pub fn bell_state(kind: BellKind) -> PureState {
    PureState::from_raw(2, kind.amplitudes().to_vec())
}

/// Kronecker product; `a` occupies the more significant qubits.
pub fn tensor(a: &PureState, b: &PureState) -> Result<PureState> {
    let n = a.num_qubits + b.num_qubits;
    if n > MAX_QUBITS {
        return Err(SimError::RegisterOverflow {
            requested: n,
            max: MAX_QUBITS,
        });
    }
    let amplitudes = a
        .amplitudes
        .iter()
        .flat_map(|x| b.amplitudes.iter().map(move |y| x * y))
        .collect();
    Ok(PureState {
        num_qubits: n,
        amplitudes,
    })
}

/// `|ψ⁻⟩₀₁ ⊗ |ψ⁻⟩₂₃`.
pub fn prepare_swap_input() -> PureState {
    let s = bell_state(BellKind::PsiMinus);
    tensor(&s, &s).expect("four qubits fit the register")
}

/// Hermitian, unit-trace, positive-semidefinite matrix on `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    num_qubits: usize,
    entries: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validates and wraps `entries`.
    pub fn new(num_qubits: usize, entries: DMatrix<Complex64>) -> Result<Self> {
        check_register(num_qubits)?;
        let dim = 1usize << num_qubits;
        if entries.nrows() != dim || entries.ncols() != dim {
            return Err(SimError::DimensionMismatch {
                expected: dim * dim,
                actual: entries.len(),
            });
        }
        if entries.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(SimError::NonFinite);
        }
        let rho = Self {
            num_qubits,
            entries,
        };
        let herm = rho.hermiticity_error();
        if herm > ALGEBRA_TOL {
            return Err(SimError::NotHermitian(herm));
        }
        let tr = rho.trace();
        if (tr - 1.0).abs() > ALGEBRA_TOL {
            return Err(SimError::BadTrace(tr));
        }
        let min = rho.eigenvalues().last().copied().unwrap_or(0.0);
        if min < -PSD_SLACK {
            return Err(SimError::NotPositive(min));
        }
        Ok(rho)
    }

    /// Builds from a row-major list of entries.
    pub fn from_rows(num_qubits: usize, rows: &[Complex64]) -> Result<Self> {
        check_register(num_qubits)?;
        let dim = 1usize << num_qubits;
        if rows.len() != dim * dim {
            return Err(SimError::DimensionMismatch {
                expected: dim * dim,
                actual: rows.len(),
            });
        }
        Self::new(num_qubits, DMatrix::from_row_slice(dim, dim, rows))
    }

    pub(crate) fn from_raw(num_qubits: usize, entries: DMatrix<Complex64>) -> Self {
        Self {
            num_qubits,
            entries,
        }
    }

    /// `I / 2ⁿ`.
    pub fn maximally_mixed(num_qubits: usize) -> Result<Self> {
        check_register(num_qubits)?;
        let dim = 1usize << num_qubits;
        let entries = DMatrix::from_diagonal_element(dim, dim, Complex64::new(1.0 / dim as f64, 0.0));
        Ok(Self::from_raw(num_qubits, entries))
    }

    /// Convex combination `Σ wᵢ ρᵢ`; weights must be nonnegative and sum to 1.
    pub fn mixture(parts: &[(f64, DensityMatrix)]) -> Result<Self> {
        let first = parts.first().ok_or(SimError::EmptySelection)?;
        let n = first.1.num_qubits;
        let dim = 1usize << n;
        let mut acc = DMatrix::from_element(dim, dim, ZERO);
        for (w, rho) in parts {
            if rho.num_qubits != n {
                return Err(SimError::DimensionMismatch {
                    expected: n,
                    actual: rho.num_qubits,
                });
            }
            if !(w.is_finite() && *w >= 0.0) {
                return Err(SimError::InvalidConfig(format!("mixture weight {w}")));
            }
            acc += &rho.entries * Complex64::new(*w, 0.0);
        }
        Self::new(n, acc)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[(row, col)]
    }

    pub fn trace(&self) -> f64 {
        self.entries.diagonal().iter().map(|z| z.re).sum()
    }

    /// `tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        // tr(ρ²) = Σᵢⱼ |ρᵢⱼ|² for Hermitian ρ
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let dim = self.dim();
        let mut worst = 0.0f64;
        for i in 0..dim {
            for j in i..dim {
                let d = (self.entries[(i, j)] - self.entries[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Eigenvalues in decreasing order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.entries.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }

    pub(crate) fn eigen(&self) -> SymmetricEigen<Complex64, nalgebra::Dyn> {
        SymmetricEigen::new(self.entries.clone())
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `ρ ⊗ σ` with `self` on the more significant qubits.
    pub fn kron(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        let n = self.num_qubits + other.num_qubits;
        if n > MAX_QUBITS {
            return Err(SimError::RegisterOverflow {
                requested: n,
                max: MAX_QUBITS,
            });
        }
        Ok(Self::from_raw(n, self.entries.kronecker(&other.entries)))
    }

    /// `U ρ U†` for a unitary of matching dimension.
    pub fn conjugate_by(&self, unitary: &DMatrix<Complex64>) -> Result<DensityMatrix> {
        if unitary.nrows() != self.dim() || unitary.ncols() != self.dim() {
            return Err(SimError::DimensionMismatch {
                expected: self.dim(),
                actual: unitary.nrows(),
            });
        }
        Self::new(self.num_qubits, unitary * &self.entries * unitary.adjoint())
    }

    /// Scales an unnormalized positive matrix to unit trace.
    pub(crate) fn renormalized(mut self) -> Result<Self> {
        let tr = self.trace();
        if !(tr > 0.0) {
            return Err(SimError::BadTrace(tr));
        }
        self.entries /= Complex64::new(tr, 0.0);
        Self::new(self.num_qubits, self.entries)
    }
}

/// Outer product `|s⟩⟨s|`.
pub fn to_density(s: &PureState) -> DensityMatrix {
    let v = nalgebra::DVector::from_column_slice(s.amplitudes());
    DensityMatrix::from_raw(s.num_qubits(), &v * v.adjoint())
}

/// Reduced state on `keep`, in the given order (first listed qubit becomes
/// the most significant qubit of the result).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let n = rho.num_qubits();
    if keep.is_empty() {
        return Err(SimError::EmptySelection);
    }
    let mut seen = 0usize;
    for &k in keep {
        check_qubit(k, n)?;
        if seen & (1 << k) != 0 {
            return Err(SimError::DuplicateQubit(k));
        }
        seen |= 1 << k;
    }
    let traced: Vec<usize> = (0..n).filter(|q| seen & (1 << q) == 0).collect();
    Ok(DensityMatrix::from_raw(
        keep.len(),
        partial_trace_raw(rho.entries(), n, keep, &traced),
    ))
}

/// Index-summation partial trace without validation of the input matrix.
pub(crate) fn partial_trace_raw(
    entries: &DMatrix<Complex64>,
    n: usize,
    keep: &[usize],
    traced: &[usize],
) -> DMatrix<Complex64> {
    let k = keep.len();
    let out_dim = 1usize << k;
    let embed = |out: usize, env: usize| -> usize {
        let mut idx = 0usize;
        for (pos, &q) in keep.iter().enumerate() {
            let bit = (out >> (k - 1 - pos)) & 1;
            idx |= bit << bit_shift(n, q);
        }
        for (pos, &q) in traced.iter().enumerate() {
            let bit = (env >> (traced.len() - 1 - pos)) & 1;
            idx |= bit << bit_shift(n, q);
        }
        idx
    };
    let env_dim = 1usize << traced.len();
    let mut out = DMatrix::from_element(out_dim, out_dim, ZERO);
    for r in 0..out_dim {
        for c in 0..out_dim {
            let mut acc = ZERO;
            for e in 0..env_dim {
                acc += entries[(embed(r, e), embed(c, e))];
            }
            out[(r, c)] = acc;
        }
    }
    out
}
