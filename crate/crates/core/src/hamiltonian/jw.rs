//! Jordan-Wigner mapping with the parity string on lower-index modes:
//! `a†_p → ½(X_p − iY_p) Z_{p−1} ⋯ Z_0`.

use num_complex::Complex64;

use super::fermion::{FermionOperator, Ladder};
use super::pauli::{Letter, PauliString, PauliSum, PRUNE_TOL};

fn ladder_image(n_qubits: usize, (mode, dagger): Ladder, z_strings: bool) -> PauliSum {
    let parity = if z_strings { (1u64 << mode) - 1 } else { 0 };
    let mut x = PauliString::single(mode, Letter::X);
    x.z |= parity;
    let mut y = PauliString::single(mode, Letter::Y);
    y.z |= parity;
    let mut s = PauliSum::new(n_qubits);
    s.add(x, Complex64::new(0.5, 0.0));
    s.add(y, Complex64::new(0.0, if dagger { -0.5 } else { 0.5 }));
    s
}

/// Map ladder products to Pauli sums. With `z_strings = false` every mode is
/// treated as an independent qubit (qubit creation/annihilation operators).
pub fn qubit_map(f: &FermionOperator, z_strings: bool) -> PauliSum {
    let n = f.n_modes;
    let mut out = PauliSum::new(n);
    for (c, ops) in &f.terms {
        let mut prod = PauliSum::identity(n, *c);
        for &op in ops {
            prod = prod.mul(&ladder_image(n, op, z_strings));
            if prod.is_empty() {
                break;
            }
        }
        for (s, v) in prod.iter() {
            out.add(*s, *v);
        }
    }
    out.pruned(PRUNE_TOL)
}

pub fn jordan_wigner(f: &FermionOperator) -> PauliSum {
    qubit_map(f, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn creation_operator_image() {
        let mut f = FermionOperator::new(1);
        f.add_real(1.0, vec![(0, true)]);
        let p = jordan_wigner(&f);
        assert_eq!(p.len(), 2);
        assert_eq!(p.coeff(&PauliString::single(0, Letter::X)), c(0.5, 0.0));
        assert_eq!(p.coeff(&PauliString::single(0, Letter::Y)), c(0.0, -0.5));
    }

    #[test]
    fn number_operator_image() {
        let mut f = FermionOperator::new(1);
        f.add_real(1.0, vec![(0, true), (0, false)]);
        let p = jordan_wigner(&f);
        assert_eq!(p.coeff(&PauliString::IDENTITY), c(0.5, 0.0));
        assert_eq!(p.coeff(&PauliString::single(0, Letter::Z)), c(-0.5, 0.0));
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn pauli_matrix_matches_fock_matrix_for_mixed_products() {
        let mut f = FermionOperator::new(4);
        f.add_real(0.3, vec![(3, true), (1, true), (0, false), (2, false)]);
        f.add_term(c(0.1, -0.2), vec![(2, true), (0, false)]);
        f.add_real(-0.4, vec![(1, true), (3, false), (3, true), (1, false)]);
        let a = jordan_wigner(&f).to_dense();
        let b = f.to_fock_matrix();
        assert!((a - b).iter().all(|z| z.norm() < 1e-14));
    }
}
