//! Two-qubit entanglement quantifiers.

use nalgebra::{DMatrix, SVD};
use num_complex::Complex64;
use serde::Serialize;

use crate::format::serialize_f64;
use crate::qstate::DensityMatrix;
use crate::{Result, SimError};

/// Eigenvalues above `-1e-9` are treated as zero when negative.
const EIGEN_CLIP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoQubitMetrics {
    #[serde(serialize_with = "serialize_f64")]
    pub concurrence: f64,
    #[serde(serialize_with = "serialize_f64")]
    pub negativity: f64,
    #[serde(serialize_with = "serialize_f64")]
    pub purity: f64,
}

fn require_two_qubits(rho: &DensityMatrix) -> Result<()> {
    if rho.num_qubits() != 2 {
        return Err(SimError::DimensionMismatch {
            expected: 2,
            actual: rho.num_qubits(),
        });
    }
    Ok(())
}

/// `σy ⊗ σy`, real in the computational basis.
fn sigma_yy() -> DMatrix<Complex64> {
    let r = |x: f64| Complex64::new(x, 0.0);
    DMatrix::from_row_slice(
        4,
        4,
        &[
            r(0.0), r(0.0), r(0.0), r(-1.0),
            r(0.0), r(0.0), r(1.0), r(0.0),
            r(0.0), r(1.0), r(0.0), r(0.0),
            r(-1.0), r(0.0), r(0.0), r(0.0),
        ],
    )
}

/// Wootters concurrence `max(0, λ₁ − λ₂ − λ₃ − λ₄)`.
///
/// The `λᵢ` (square roots of the eigenvalues of `ρ (σy⊗σy) ρ* (σy⊗σy)`) are
/// obtained as the singular values of `τ = Wᵀ (σy⊗σy) W`, where the columns
/// of `W` are the eigenvectors of `ρ` scaled by the square roots of their
/// eigenvalues. This avoids square roots of near-zero eigenvalues.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    require_two_qubits(rho)?;
    let eig = rho.eigen();
    let mut w = eig.eigenvectors.clone();
    for (k, &p) in eig.eigenvalues.iter().enumerate() {
        if p < -EIGEN_CLIP {
            return Err(SimError::NotPositive(p));
        }
        let scale = p.max(0.0).sqrt();
        for z in w.column_mut(k).iter_mut() {
            *z *= scale;
        }
    }
    let tau = w.transpose() * sigma_yy() * &w;
    let mut lambdas: Vec<f64> = SVD::new(tau, false, false).singular_values.iter().copied().collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    let c = lambdas[0] - lambdas[1..].iter().sum::<f64>();
    Ok(c.max(0.0))
}

/// Partial transpose over the second qubit of a two-qubit matrix.
pub fn partial_transpose(rho: &DensityMatrix) -> Result<DMatrix<Complex64>> {
    require_two_qubits(rho)?;
    let m = rho.entries();
    let mut out = DMatrix::from_element(4, 4, Complex64::new(0.0, 0.0));
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                for d in 0..2 {
                    out[(2 * a + b, 2 * c + d)] = m[(2 * a + d, 2 * c + b)];
                }
            }
        }
    }
    Ok(out)
}

/// Sum of the moduli of the negative eigenvalues of the partial transpose.
pub fn negativity(rho: &DensityMatrix) -> Result<f64> {
    let pt = partial_transpose(rho)?;
    let ev = pt.symmetric_eigenvalues();
    Ok(ev.iter().filter(|&&x| x < 0.0).map(|x| -x).sum())
}

pub fn metrics(rho: &DensityMatrix) -> Result<TwoQubitMetrics> {
    Ok(TwoQubitMetrics {
        concurrence: concurrence(rho)?,
        negativity: negativity(rho)?,
        purity: rho.purity(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{bell_state, partial_trace, prepare_swap_input, to_density, BellKind};

    #[test]
    fn bell_states_are_maximally_entangled() {
        for k in BellKind::ALL {
            let rho = to_density(&bell_state(k));
            assert!((concurrence(&rho).unwrap() - 1.0).abs() < 1e-12, "{k}");
            assert!((negativity(&rho).unwrap() - 0.5).abs() < 1e-12, "{k}");
        }
    }

    #[test]
    fn maximally_mixed_is_separable() {
        let rho = DensityMatrix::maximally_mixed(2).unwrap();
        assert_eq!(concurrence(&rho).unwrap(), 0.0);
        assert!(negativity(&rho).unwrap().abs() < 1e-15);
        assert!((rho.purity() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn outer_pair_of_swap_input_is_unentangled() {
        let rho03 = partial_trace(&to_density(&prepare_swap_input()), &[0, 3]).unwrap();
        let m = metrics(&rho03).unwrap();
        assert!(m.concurrence.abs() < 1e-12);
        assert!(m.negativity.abs() < 1e-12);
    }

    #[test]
    fn partial_transpose_of_singlet() {
        let pt = partial_transpose(&to_density(&bell_state(BellKind::PsiMinus))).unwrap();
        let mut ev: Vec<f64> = pt.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let expected = [-0.5, 0.5, 0.5, 0.5];
        for (a, b) in ev.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_wrong_register() {
        let rho = DensityMatrix::maximally_mixed(3).unwrap();
        assert!(concurrence(&rho).is_err());
        assert!(negativity(&rho).is_err());
    }
}
