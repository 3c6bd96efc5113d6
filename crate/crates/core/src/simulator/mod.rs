//! Statevector engine: reference states, Pauli exponentials, expectation
//! values, exact diagonalization and reduced density matrices.
//!
//! Qubit `k` is bit `k` of the amplitude index.

pub mod fci;
pub mod rdm;
pub mod sparse;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::PauliSum;
use crate::linalg::{herm_eigh, lanczos_lowest};

pub use fci::{fci_ground_state, FciSolution};
pub use rdm::{compute_rdms, Rdms};
pub use sparse::{inner, Basis, Sector, SparseOperator, MAX_QUBITS};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Normalized `2^n` amplitude vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    pub n_qubits: usize,
    pub amplitudes: Vec<Complex64>,
}

impl Statevector {
    pub fn basis_state(n_qubits: usize, index: u64) -> Self {
        assert!(n_qubits <= MAX_QUBITS);
        let mut amplitudes = vec![ZERO; 1usize << n_qubits];
        amplitudes[index as usize] = Complex64::new(1.0, 0.0);
        Statevector {
            n_qubits,
            amplitudes,
        }
    }

    /// Wrap and normalize an amplitude vector.
    pub fn from_amplitudes(n_qubits: usize, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != 1usize << n_qubits {
            return Err(Error::Numerical(format!(
                "expected {} amplitudes, got {}",
                1usize << n_qubits,
                amplitudes.len()
            )));
        }
        let n = sparse::norm(&amplitudes);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::Numerical("state has zero norm".into()));
        }
        amplitudes.iter_mut().for_each(|a| *a /= n);
        Ok(Statevector {
            n_qubits,
            amplitudes,
        })
    }

    pub fn norm(&self) -> f64 {
        sparse::norm(&self.amplitudes)
    }

    pub fn inner(&self, other: &Statevector) -> Complex64 {
        inner(&self.amplitudes, &other.amplitudes)
    }

    pub fn probability(&self, index: u64) -> f64 {
        self.amplitudes[index as usize].norm_sqr()
    }

    /// `P|ψ⟩` summed over the terms of `op` (not normalized).
    pub fn apply_pauli_sum(&self, op: &PauliSum) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.amplitudes.len()];
        for (s, c) in op.iter() {
            for (i, a) in self.amplitudes.iter().enumerate() {
                if *a == ZERO {
                    continue;
                }
                let (phase, j) = s.apply_to_basis(i as u64);
                out[j as usize] += c * phase * a;
            }
        }
        out
    }

    /// Binary dump as `(index, re, im)` little-endian triples, skipping zeros.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for (i, a) in self.amplitudes.iter().enumerate() {
            if *a != ZERO {
                out.extend_from_slice(&(i as u64).to_le_bytes());
                out.extend_from_slice(&a.re.to_le_bytes());
                out.extend_from_slice(&a.im.to_le_bytes());
            }
        }
        out
    }
}

/// Basis index with the lowest `n_elec` spin orbitals occupied.
pub fn hf_index(n_elec: usize) -> u64 {
    if n_elec == 0 {
        0
    } else {
        (1u64 << n_elec) - 1
    }
}

pub fn prepare_hf_state(n_qubits: usize, n_elec: usize) -> Statevector {
    assert!(n_elec <= n_qubits, "more electrons than spin orbitals");
    Statevector::basis_state(n_qubits, hf_index(n_elec))
}

pub(crate) fn check_anti_hermitian(tau: &PauliSum) -> Result<()> {
    let dev = tau.plus(&tau.adjoint()).one_norm();
    if dev > 1e-10 {
        return Err(Error::NotAntiHermitian(dev));
    }
    Ok(())
}

/// `exp(θτ)|ψ⟩` for anti-Hermitian `τ`. Multi-term generators are
/// exponentiated exactly.
pub fn apply_exp(state: &Statevector, tau: &PauliSum, theta: f64) -> Result<Statevector> {
    check_anti_hermitian(tau)?;
    if theta == 0.0 || tau.is_empty() {
        return Ok(state.clone());
    }
    let basis = Basis::full(state.n_qubits)?;
    let op = SparseOperator::compile(tau, &basis);
    Ok(Statevector {
        n_qubits: state.n_qubits,
        amplitudes: op.exp_apply(theta, &state.amplitudes),
    })
}

/// `⟨ψ|H|ψ⟩` for Hermitian `H`, term by term.
pub fn expectation(state: &Statevector, h: &PauliSum) -> f64 {
    let e = inner(&state.amplitudes, &state.apply_pauli_sum(h));
    debug_assert!(e.im.abs() < 1e-10, "complex expectation {e}");
    e.re
}

/// `⟨H²⟩ − ⟨H⟩²` via `H|ψ⟩`.
pub fn variance(state: &Statevector, h: &PauliSum) -> f64 {
    let hpsi = state.apply_pauli_sum(h);
    let e = inner(&state.amplitudes, &hpsi).re;
    sparse::norm(&hpsi).powi(2) - e * e
}

/// Lowest eigenpair of a Hermitian Pauli sum.
#[derive(Debug, Clone)]
pub struct ExactSolution {
    pub energy: f64,
    pub ground_state: Statevector,
    pub sector: Option<Sector>,
    pub residual: f64,
}

/// Dimension up to which the sector Hamiltonian is diagonalized densely.
const DENSE_LIMIT: usize = 4096;

pub fn exact_ground_state(h: &PauliSum, sector: Option<Sector>) -> Result<ExactSolution> {
    ground_state_with_limit(h, sector, DENSE_LIMIT)
}

fn ground_state_with_limit(
    h: &PauliSum,
    sector: Option<Sector>,
    dense_limit: usize,
) -> Result<ExactSolution> {
    let n = h.n_qubits();
    if n > MAX_QUBITS {
        return Err(Error::DimensionTooLarge(n));
    }
    let basis = Basis::build(n, sector)?;
    if basis.dim() == 0 {
        return Err(Error::Numerical(format!(
            "sector {sector:?} is empty on {n} qubits"
        )));
    }
    let op = SparseOperator::compile(h, &basis);
    let (energy, vector) = if basis.dim() <= dense_limit {
        let (vals, vecs) = herm_eigh(&op.to_dense());
        (vals[0], vecs.column(0).iter().copied().collect::<Vec<_>>())
    } else {
        let diag = op.diagonal();
        let start = diag
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k)
            .unwrap_or(0);
        // Lowest diagonal entry plus a small deterministic spread to avoid
        // starting inside a symmetry-orthogonal subspace.
        let guess = DVector::from_fn(basis.dim(), |k, _| {
            let w = if k == start {
                1.0
            } else {
                1e-3 / (1.0 + (k % 97) as f64)
            };
            Complex64::new(w, 0.0)
        });
        let (e, v, _) = lanczos_lowest(
            |x: &DVector<Complex64>| DVector::from_vec(op.apply(x.as_slice())),
            guess,
            1e-9,
            200,
        )?;
        (e, v.iter().copied().collect())
    };
    let hv = op.apply(&vector);
    let residual = hv
        .iter()
        .zip(&vector)
        .map(|(a, b)| (a - b * energy).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let ground_state = Statevector::from_amplitudes(n, basis.embed(&vector))?;
    Ok(ExactSolution {
        energy,
        ground_state,
        sector,
        residual,
    })
}

/// Dense matrix of a Pauli sum restricted to a basis (testing aid).
pub fn restricted_matrix(h: &PauliSum, basis: &Basis) -> DMatrix<Complex64> {
    SparseOperator::compile(h, basis).to_dense()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{Letter, PauliString};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn hf_state_layout() {
        let s = prepare_hf_state(4, 2);
        assert_eq!(s.probability(0b0011), 1.0);
        assert_eq!(prepare_hf_state(3, 0).probability(0), 1.0);
    }

    #[test]
    fn pauli_rotation_closed_form() {
        let mut tau = PauliSum::new(1);
        tau.add(PauliString::single(0, Letter::X), c(0.0, 1.0));
        let out = apply_exp(&prepare_hf_state(1, 0), &tau, std::f64::consts::FRAC_PI_2).unwrap();
        assert!((out.amplitudes[1] - c(0.0, 1.0)).norm() < 1e-15);
        assert!(out.amplitudes[0].norm() < 1e-15);
    }

    #[test]
    fn hermitian_generator_is_rejected() {
        let mut tau = PauliSum::new(1);
        tau.add(PauliString::single(0, Letter::X), c(1.0, 0.0));
        assert!(matches!(
            apply_exp(&prepare_hf_state(1, 0), &tau, 0.3),
            Err(Error::NotAntiHermitian(_))
        ));
    }

    #[test]
    fn expectation_and_variance_of_z() {
        let mut z = PauliSum::new(1);
        z.add(PauliString::single(0, Letter::Z), c(1.0, 0.0));
        let zero = prepare_hf_state(1, 0);
        assert_eq!(expectation(&zero, &z), 1.0);
        assert!(variance(&zero, &z).abs() < 1e-15);
        let plus = Statevector::from_amplitudes(1, vec![c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!((variance(&plus, &z) - 1.0).abs() < 1e-14);
        let id = PauliSum::identity(1, c(2.5, 0.0));
        assert!((expectation(&plus, &id) - 2.5).abs() < 1e-14);
    }

    #[test]
    fn ground_state_of_minus_z() {
        let mut h = PauliSum::new(1);
        h.add(PauliString::single(0, Letter::Z), c(-1.0, 0.0));
        let sol = exact_ground_state(&h, None).unwrap();
        assert!((sol.energy + 1.0).abs() < 1e-14);
        assert!((sol.ground_state.probability(0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn lanczos_branch_matches_dense_branch() {
        let n = 10;
        let mut h = PauliSum::new(n);
        for q in 0..n - 1 {
            h.add(
                PauliString::from_letters(&[(q, Letter::Z), (q + 1, Letter::Z)]),
                c(-1.0, 0.0),
            );
        }
        for q in 0..n {
            h.add(PauliString::single(q, Letter::X), c(-0.7, 0.0));
        }
        let dense = ground_state_with_limit(&h, None, usize::MAX).unwrap();
        let iterative = ground_state_with_limit(&h, None, 0).unwrap();
        assert!((dense.energy - iterative.energy).abs() < 1e-9);
        assert!(iterative.residual < 1e-6);
        assert!(dense.residual < 1e-9);
        assert!((dense.ground_state.inner(&iterative.ground_state).norm() - 1.0).abs() < 1e-8);
    }
}
