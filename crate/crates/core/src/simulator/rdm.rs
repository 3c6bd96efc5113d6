use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::Statevector;
use crate::error::{Error, Result};
use crate::hamiltonian::fermion::apply_ladders;
use crate::linalg::Eri;

/// Spin-summed reduced density matrices over spatial orbitals.
///
/// `one[p,q] = Σ_σ ⟨a†_pσ a_qσ⟩`,
/// `two(p,q,r,s) = Σ_στ ⟨a†_pσ a†_rτ a_sτ a_qσ⟩`, so that
/// `E = e_core + Σ h·one + ½ Σ (pq|rs)·two`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rdms {
    pub one: DMatrix<f64>,
    pub two: Eri,
}

impl Rdms {
    pub fn n_orb(&self) -> usize {
        self.one.nrows()
    }

    pub fn n_elec(&self) -> f64 {
        self.one.trace()
    }

    /// Express RDMs computed over the orbitals `c` (columns, in terms of a
    /// parent basis) in that parent basis: `D = C D' Cᵀ`.
    pub fn back_transformed(&self, c: &DMatrix<f64>) -> Rdms {
        Rdms {
            one: c * &self.one * c.transpose(),
            two: self.two.transform(&c.transpose()),
        }
    }
}

pub fn compute_rdms(state: &Statevector, n_orb: usize) -> Result<Rdms> {
    if state.n_qubits != 2 * n_orb {
        return Err(Error::Numerical(format!(
            "{} qubits do not match {} spatial orbitals",
            state.n_qubits, n_orb
        )));
    }
    let n_modes = 2 * n_orb;
    let amps = &state.amplitudes;
    let nonzero: Vec<usize> = (0..amps.len())
        .filter(|&i| amps[i].norm_sqr() > 1e-30)
        .collect();

    let mut one = DMatrix::zeros(n_orb, n_orb);
    for &i in &nonzero {
        let ci = amps[i];
        for q in 0..n_modes {
            for p in (q % 2..n_modes).step_by(2) {
                if let Some((sign, j)) = apply_ladders(&[(p, true), (q, false)], i as u64) {
                    one[(p / 2, q / 2)] += (amps[j as usize].conj() * ci).re * sign;
                }
            }
        }
    }

    let n4 = n_orb.pow(4);
    let idx = |p: usize, q: usize, r: usize, s: usize| ((p * n_orb + q) * n_orb + r) * n_orb + s;
    let two_flat = nonzero
        .par_iter()
        .fold(
            || vec![0.0; n4],
            |mut acc, &i| {
                let ci = amps[i];
                let occ = i as u64;
                for q in 0..n_modes {
                    if occ >> q & 1 == 0 {
                        continue;
                    }
                    for s in 0..n_modes {
                        if s == q || occ >> s & 1 == 0 {
                            continue;
                        }
                        let Some((s1, k)) = apply_ladders(&[(s, false), (q, false)], occ) else {
                            continue;
                        };
                        for p in (q % 2..n_modes).step_by(2) {
                            if k >> p & 1 == 1 {
                                continue;
                            }
                            for r in (s % 2..n_modes).step_by(2) {
                                if r == p || k >> r & 1 == 1 {
                                    continue;
                                }
                                let (s2, j) = apply_ladders(&[(p, true), (r, true)], k).unwrap();
                                let v: Complex64 = amps[j as usize].conj() * ci;
                                acc[idx(p / 2, q / 2, r / 2, s / 2)] += v.re * s1 * s2;
                            }
                        }
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![0.0; n4],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let mut two = Eri::zeros(n_orb);
    for p in 0..n_orb {
        for q in 0..n_orb {
            for r in 0..n_orb {
                for s in 0..n_orb {
                    two.set(p, q, r, s, two_flat[idx(p, q, r, s)]);
                }
            }
        }
    }
    Ok(Rdms { one, two })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::prepare_hf_state;

    #[test]
    fn hf_rdms() {
        let r = compute_rdms(&prepare_hf_state(4, 2), 2).unwrap();
        assert_eq!(r.one[(0, 0)], 2.0);
        assert_eq!(r.one[(1, 1)], 0.0);
        assert_eq!(r.one[(0, 1)], 0.0);
        // Γ_0000 = N(N−1) for a doubly occupied orbital: 2.
        assert_eq!(r.two.get(0, 0, 0, 0), 2.0);
    }

    #[test]
    fn partial_trace_of_two_rdm() {
        let amps: Vec<Complex64> = (0..64)
            .map(|i: u64| {
                if i.count_ones() == 3 {
                    Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos())
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        let state = Statevector::from_amplitudes(6, amps).unwrap();
        let r = compute_rdms(&state, 3).unwrap();
        assert!((r.n_elec() - 3.0).abs() < 1e-12);
        for p in 0..3 {
            for q in 0..3 {
                let t: f64 = (0..3).map(|k| r.two.get(p, q, k, k)).sum();
                assert!((t - 2.0 * r.one[(p, q)]).abs() < 1e-12);
            }
        }
    }
}
