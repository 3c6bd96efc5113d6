//! Second-quantized Hamiltonians and their qubit images.
//!
//! Spin orbitals are interleaved: spatial orbital `p` owns modes `2p` (α) and
//! `2p + 1` (β). Mode `k` is qubit `k`.

pub mod fermion;
pub mod jw;
pub mod pauli;

use num_complex::Complex64;

pub use fermion::{FermionOperator, Ladder};
pub use jw::{jordan_wigner, qubit_map};
pub use pauli::{commutator, pauli_product, Letter, PauliString, PauliSum, PauliTerm};

use crate::integrals::MOIntegrals;

const INTEGRAL_CUTOFF: f64 = 1e-14;

#[inline]
pub fn alpha(p: usize) -> usize {
    2 * p
}

#[inline]
pub fn beta(p: usize) -> usize {
    2 * p + 1
}

/// `Ĥ = e_core + Σ h_pq a†_pσ a_qσ + ½ Σ (pq|rs) a†_pσ a†_rτ a_sτ a_qσ`.
pub fn build_second_quantized(mo: &MOIntegrals) -> FermionOperator {
    let n = mo.n_orb;
    let mut f = FermionOperator::new(2 * n);
    if mo.e_core != 0.0 {
        f.add_real(mo.e_core, vec![]);
    }
    for p in 0..n {
        for q in 0..n {
            let h = mo.h[(p, q)];
            if h.abs() < INTEGRAL_CUTOFF {
                continue;
            }
            for sigma in 0..2 {
                f.add_real(h, vec![(2 * p + sigma, true), (2 * q + sigma, false)]);
            }
        }
    }
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    let v = mo.v.get(p, q, r, s);
                    if v.abs() < INTEGRAL_CUTOFF {
                        continue;
                    }
                    for sigma in 0..2 {
                        for tau in 0..2 {
                            let (ps, qs) = (2 * p + sigma, 2 * q + sigma);
                            let (rt, st) = (2 * r + tau, 2 * s + tau);
                            if ps == rt || qs == st {
                                continue;
                            }
                            f.add_real(
                                0.5 * v,
                                vec![(ps, true), (rt, true), (st, false), (qs, false)],
                            );
                        }
                    }
                }
            }
        }
    }
    f
}

/// Qubit Hamiltonian of an integral set, real coefficients.
pub fn qubit_hamiltonian(mo: &MOIntegrals) -> PauliSum {
    let p = jordan_wigner(&build_second_quantized(mo));
    debug_assert!(p.max_imag() < 1e-10);
    let mut out = PauliSum::new(p.n_qubits());
    for (s, c) in p.iter() {
        out.add(*s, Complex64::new(c.re, 0.0));
    }
    out
}

/// `N̂ = Σ_p ½(I − Z_p)`.
pub fn number_operator(n_qubits: usize) -> PauliSum {
    let mut s = PauliSum::new(n_qubits);
    for q in 0..n_qubits {
        s.add(PauliString::IDENTITY, Complex64::new(0.5, 0.0));
        s.add(PauliString::single(q, Letter::Z), Complex64::new(-0.5, 0.0));
    }
    s
}

/// `Ŝ_z = ½ Σ_p (n_pα − n_pβ)`.
pub fn sz_operator(n_qubits: usize) -> PauliSum {
    let mut s = PauliSum::new(n_qubits);
    for q in 0..n_qubits {
        let sign = if q % 2 == 0 { -0.25 } else { 0.25 };
        s.add(PauliString::single(q, Letter::Z), Complex64::new(sign, 0.0));
    }
    s.pruned(1e-15)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Eri;
    use nalgebra::DMatrix;

    #[test]
    fn one_orbital_no_repulsion() {
        let mo = MOIntegrals {
            n_orb: 1,
            n_elec: 0,
            h: DMatrix::from_element(1, 1, -0.3),
            v: Eri::zeros(1),
            e_core: 0.7,
        };
        let f = build_second_quantized(&mo);
        assert_eq!(f.terms.len(), 3);
        let m = f.to_fock_matrix();
        // |00>, |10>, |01>, |11>
        let diag: Vec<f64> = (0..4).map(|i| m[(i, i)].re).collect();
        for (a, b) in diag.iter().zip([0.7, 0.4, 0.4, 0.1]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_integrals_give_a_constant() {
        let mo = MOIntegrals {
            n_orb: 2,
            n_elec: 2,
            h: DMatrix::zeros(2, 2),
            v: Eri::zeros(2),
            e_core: -1.5,
        };
        let p = qubit_hamiltonian(&mo);
        assert_eq!(p.len(), 1);
        assert_eq!(p.coeff(&PauliString::IDENTITY).re, -1.5);
    }
}
