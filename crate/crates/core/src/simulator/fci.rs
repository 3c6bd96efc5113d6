//! Determinant-based full CI: α/β occupation strings, sigma vectors built from
//! single-excitation tables, Davidson for the lowest root.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{compute_rdms, Rdms, Statevector, MAX_QUBITS};
use crate::error::{Error, Result};
use crate::hamiltonian::fermion::{annihilate, create};
use crate::integrals::MOIntegrals;
use crate::linalg::davidson;

/// Occupation strings of one spin with a fixed particle count.
#[derive(Debug, Clone)]
struct Strings {
    list: Vec<u64>,
    /// For each string: `(p·n + q, target string, sign)` of every `E_pq`.
    excitations: Vec<Vec<(usize, usize, f64)>>,
}

impl Strings {
    fn new(n_orb: usize, n_occ: usize) -> Self {
        let list: Vec<u64> = (0..1u64 << n_orb)
            .filter(|s| s.count_ones() as usize == n_occ)
            .collect();
        let lookup: std::collections::HashMap<u64, usize> =
            list.iter().enumerate().map(|(k, &s)| (s, k)).collect();
        let excitations = list
            .iter()
            .map(|&s| {
                let mut out = Vec::new();
                for q in 0..n_orb {
                    let Some((s1, t)) = annihilate(q, s) else {
                        continue;
                    };
                    for p in 0..n_orb {
                        if let Some((s2, u)) = create(p, t) {
                            out.push((p * n_orb + q, lookup[&u], s1 * s2));
                        }
                    }
                }
                out
            })
            .collect();
        Strings { list, excitations }
    }

    fn len(&self) -> usize {
        self.list.len()
    }
}

/// Lowest CI root in a fixed `(Nα, Nβ)` sector.
#[derive(Debug, Clone)]
pub struct FciSolution {
    pub energy: f64,
    pub n_orb: usize,
    pub alpha_strings: Vec<u64>,
    pub beta_strings: Vec<u64>,
    /// Row-major over (α string, β string).
    pub coeffs: Vec<f64>,
    pub residual: f64,
}

impl FciSolution {
    /// Amplitudes in the interleaved qubit ordering.
    pub fn to_statevector(&self) -> Result<Statevector> {
        let n_qubits = 2 * self.n_orb;
        if n_qubits > MAX_QUBITS {
            return Err(Error::DimensionTooLarge(n_qubits));
        }
        let nb = self.beta_strings.len();
        let mut amps = vec![Complex64::new(0.0, 0.0); 1usize << n_qubits];
        for (ia, &a) in self.alpha_strings.iter().enumerate() {
            for (ib, &b) in self.beta_strings.iter().enumerate() {
                let (index, sign) = interleave(a, b, self.n_orb);
                amps[index as usize] = Complex64::new(sign * self.coeffs[ia * nb + ib], 0.0);
            }
        }
        Statevector::from_amplitudes(n_qubits, amps)
    }

    pub fn rdms(&self) -> Result<Rdms> {
        compute_rdms(&self.to_statevector()?, self.n_orb)
    }
}

/// Qubit index of the determinant `a†(α string) a†(β string)|0⟩` and the sign
/// of reordering it into ascending interleaved modes.
fn interleave(alpha: u64, beta: u64, n_orb: usize) -> (u64, f64) {
    let mut index = 0u64;
    let mut swaps = 0u32;
    for p in 0..n_orb {
        if alpha >> p & 1 == 1 {
            index |= 1 << (2 * p);
            // β orbitals below p must move in front of this α orbital.
            swaps += (beta & ((1u64 << p) - 1)).count_ones();
        }
        if beta >> p & 1 == 1 {
            index |= 1 << (2 * p + 1);
        }
    }
    (index, if swaps.is_multiple_of(2) { 1.0 } else { -1.0 })
}

pub fn fci_ground_state(mo: &MOIntegrals) -> Result<FciSolution> {
    let n_beta = mo.n_elec / 2;
    fci_ground_state_sector(mo, mo.n_elec - n_beta, n_beta)
}

pub fn fci_ground_state_sector(
    mo: &MOIntegrals,
    n_alpha: usize,
    n_beta: usize,
) -> Result<FciSolution> {
    let n = mo.n_orb;
    if n_alpha > n || n_beta > n {
        return Err(Error::Numerical(format!(
            "({n_alpha}, {n_beta}) electrons do not fit in {n} orbitals"
        )));
    }
    if n > 16 {
        return Err(Error::DimensionTooLarge(2 * n));
    }
    let sa = Strings::new(n, n_alpha);
    let sb = Strings::new(n, n_beta);
    let (na, nb) = (sa.len(), sb.len());
    let dim = na * nb;
    let n2 = n * n;

    let mut k1 = mo.h.clone();
    for p in 0..n {
        for q in 0..n {
            k1[(p, q)] -= 0.5 * (0..n).map(|r| mo.v.get(p, r, r, q)).sum::<f64>();
        }
    }
    let mut half_v = DMatrix::zeros(n2, n2);
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    half_v[(p * n + q, r * n + s)] = 0.5 * mo.v.get(p, q, r, s);
                }
            }
        }
    }

    let diag = DVector::from_iterator(
        dim,
        sa.list
            .iter()
            .flat_map(|&a| sb.list.iter().map(move |&b| (a, b)))
            .map(|(a, b)| determinant_energy(mo, a, b)),
    );

    // D[pq, I] = (E_pq c)(I)
    let excite = |c: &[f64]| -> DMatrix<f64> {
        let mut d = DMatrix::zeros(n2, dim);
        for (ja, exc) in sa.excitations.iter().enumerate() {
            for &(pq, ia, sign) in exc {
                for ib in 0..nb {
                    d[(pq, ia * nb + ib)] += sign * c[ja * nb + ib];
                }
            }
        }
        for ia in 0..na {
            for (jb, exc) in sb.excitations.iter().enumerate() {
                let cj = c[ia * nb + jb];
                if cj == 0.0 {
                    continue;
                }
                for &(pq, ib, sign) in exc {
                    d[(pq, ia * nb + ib)] += sign * cj;
                }
            }
        }
        d
    };

    let sigma = |c: &DVector<f64>| -> DVector<f64> {
        let d = excite(c.as_slice());
        let g = &half_v * &d;
        let mut out = DVector::from_element(dim, mo.e_core);
        out.component_mul_assign(c);
        for i in 0..dim {
            let mut acc = 0.0;
            for p in 0..n {
                for q in 0..n {
                    acc += k1[(p, q)] * d[(p * n + q, i)];
                }
            }
            out[i] += acc;
        }
        for (ja, exc) in sa.excitations.iter().enumerate() {
            for &(pq, ia, sign) in exc {
                for ib in 0..nb {
                    out[ia * nb + ib] += sign * g[(pq, ja * nb + ib)];
                }
            }
        }
        for ia in 0..na {
            for (jb, exc) in sb.excitations.iter().enumerate() {
                for &(pq, ib, sign) in exc {
                    out[ia * nb + ib] += sign * g[(pq, ia * nb + jb)];
                }
            }
        }
        out
    };

    // Lowest determinant plus a small component on every other determinant, so
    // the search is not confined to one spatial symmetry.
    let start = diag.argmin().0;
    let mut guess = DVector::from_fn(dim, |i, _| {
        1e-3 * (((i * 7919 + 13) % 101) as f64 / 101.0 - 0.5)
    });
    guess[start] = 1.0;
    let pair = davidson(sigma, &diag, guess, 1e-8, 500)?;
    Ok(FciSolution {
        energy: pair.value,
        n_orb: n,
        alpha_strings: sa.list,
        beta_strings: sb.list,
        coeffs: pair.vector.iter().copied().collect(),
        residual: pair.residual,
    })
}

fn determinant_energy(mo: &MOIntegrals, alpha: u64, beta: u64) -> f64 {
    let n = mo.n_orb;
    let occ = |s: u64| (0..n).filter(move |&p| s >> p & 1 == 1);
    let mut e = mo.e_core;
    for s in [alpha, beta] {
        for p in occ(s) {
            e += mo.h[(p, p)];
            for q in occ(s) {
                e += 0.5 * (mo.v.get(p, p, q, q) - mo.v.get(p, q, q, p));
            }
        }
    }
    for p in occ(alpha) {
        for q in occ(beta) {
            e += mo.v.get(p, p, q, q);
        }
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interleave_sign_matches_ladder_ordering() {
        use crate::hamiltonian::fermion::apply_ladders;
        // a†_{0α} a†_{1α} a†_{0β}|0⟩ = a†_0 a†_2 a†_1|0⟩
        let (index, sign) = interleave(0b11, 0b01, 2);
        let (s, j) = apply_ladders(&[(0, true), (2, true), (1, true)], 0).unwrap();
        assert_eq!(j, index);
        assert_eq!(s, sign);
    }

    #[test]
    fn string_counts() {
        assert_eq!(Strings::new(6, 3).len(), 20);
        assert_eq!(Strings::new(4, 0).len(), 1);
    }
}
