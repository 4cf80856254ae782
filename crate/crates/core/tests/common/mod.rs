//! Brute-force oracles built from dense matrices and explicit index loops.
//! Nothing here calls into the library's measurement or trace code.
#![allow(dead_code)]

use num_complex::Complex64;

pub type Mat = Vec<Vec<Complex64>>;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(dim: usize) -> Mat {
    (0..dim)
        .map(|i| (0..dim).map(|j| c(if i == j { 1.0 } else { 0.0 })).collect())
        .collect()
}

pub fn kron(a: &Mat, b: &Mat) -> Mat {
    let (na, nb) = (a.len(), b.len());
    let mut out = vec![vec![c(0.0); na * nb]; na * nb];
    for i in 0..na {
        for j in 0..na {
            for k in 0..nb {
                for l in 0..nb {
                    out[i * nb + k][j * nb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn outer(v: &[Complex64]) -> Mat {
    v.iter().map(|x| v.iter().map(|y| x * y.conj()).collect()).collect()
}

pub fn apply(m: &Mat, v: &[Complex64]) -> Vec<Complex64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

pub fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum()
}

/// Singlet over (HH, HV, VH, VV), written out by hand.
pub fn singlet() -> Vec<Complex64> {
    let h = 0.5f64.sqrt();
    vec![c(0.0), c(h), c(-h), c(0.0)]
}

/// Bell vectors by label, written out by hand.
pub fn bell(label: &str) -> Vec<Complex64> {
    let h = 0.5f64.sqrt();
    match label {
        "psi-minus" => vec![c(0.0), c(h), c(-h), c(0.0)],
        "psi-plus" => vec![c(0.0), c(h), c(h), c(0.0)],
        "phi-minus" => vec![c(h), c(0.0), c(0.0), c(-h)],
        "phi-plus" => vec![c(h), c(0.0), c(0.0), c(h)],
        _ => panic!("unknown label {label}"),
    }
}

/// `ψ⁻ ⊗ ψ⁻` by explicit bit loop: amp[q0 q1 q2 q3] = s[q0 q1]·s[q2 q3].
pub fn swap_input() -> Vec<Complex64> {
    let s = singlet();
    let mut out = vec![c(0.0); 16];
    for q0 in 0..2 {
        for q1 in 0..2 {
            for q2 in 0..2 {
                for q3 in 0..2 {
                    out[q0 * 8 + q1 * 4 + q2 * 2 + q3] = s[q0 * 2 + q1] * s[q2 * 2 + q3];
                }
            }
        }
    }
    out
}

/// Analyzer projector on one qubit.
pub fn pol_projector(theta_deg: f64, plus: bool) -> Mat {
    let t = theta_deg.to_radians();
    let v = if plus {
        vec![c(t.cos()), c(t.sin())]
    } else {
        vec![c(-t.sin()), c(t.cos())]
    };
    outer(&v)
}

/// Projector for BSM label on the middle pair of four qubits, as a 4×4 factor.
pub fn bsm_factor(label: &str) -> Mat {
    match label {
        "other" => {
            let a = outer(&bell("phi-minus"));
            let b = outer(&bell("phi-plus"));
            a.iter().zip(&b).map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + y).collect()).collect()
        }
        l => outer(&bell(l)),
    }
}

/// `Π₀ ⊗ Π₁₂ ⊗ Π₃` on four qubits.
pub fn joint_projector(theta0: f64, o0: bool, bsm: &str, theta3: f64, o3: bool) -> Mat {
    kron(&kron(&pol_projector(theta0, o0), &bsm_factor(bsm)), &pol_projector(theta3, o3))
}

/// Partial trace of a 4-qubit density matrix onto qubits (0, 3) by explicit sum over q1, q2.
pub fn trace_out_middle(rho: &Mat) -> Mat {
    let mut out = vec![vec![c(0.0); 4]; 4];
    for a in 0..2 {
        for d in 0..2 {
            for a2 in 0..2 {
                for d2 in 0..2 {
                    let mut acc = c(0.0);
                    for b in 0..2 {
                        for cc in 0..2 {
                            let r = a * 8 + b * 4 + cc * 2 + d;
                            let s = a2 * 8 + b * 4 + cc * 2 + d2;
                            acc += rho[r][s];
                        }
                    }
                    out[a * 2 + d][a2 * 2 + d2] = acc;
                }
            }
        }
    }
    out
}

pub fn max_diff(a: &Mat, b: &Mat) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Exact CHSH-cell correlation for photons 0,3 from the projector oracle,
/// conditioned on `bsm` (or unconditional if `None`), full-mode labels.
pub fn oracle_correlation(theta0: f64, theta3: f64, bsm: Option<&str>) -> f64 {
    let psi = swap_input();
    let labels: Vec<&str> = match bsm {
        Some(l) => vec![l],
        None => vec!["psi-minus", "psi-plus", "phi-minus", "phi-plus"],
    };
    let mut total = 0.0;
    let mut signed = 0.0;
    for l in labels {
        for o0 in [true, false] {
            for o3 in [true, false] {
                let p = norm_sqr(&apply(&joint_projector(theta0, o0, l, theta3, o3), &psi));
                total += p;
                signed += if o0 == o3 { p } else { -p };
            }
        }
    }
    signed / total
}
