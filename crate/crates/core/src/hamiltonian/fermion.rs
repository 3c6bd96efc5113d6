use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

/// A ladder operator: `(mode, true)` is a†, `(mode, false)` is a.
pub type Ladder = (usize, bool);

/// Sum of products of ladder operators over `n_modes` spin orbitals.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FermionOperator {
    pub n_modes: usize,
    pub terms: Vec<(Complex64, Vec<Ladder>)>,
}

impl FermionOperator {
    pub fn new(n_modes: usize) -> Self {
        FermionOperator {
            n_modes,
            terms: Vec::new(),
        }
    }

    pub fn add_term(&mut self, coeff: Complex64, ops: Vec<Ladder>) {
        debug_assert!(ops.iter().all(|&(m, _)| m < self.n_modes));
        self.terms.push((coeff, ops));
    }

    pub fn add_real(&mut self, coeff: f64, ops: Vec<Ladder>) {
        self.add_term(Complex64::new(coeff, 0.0), ops);
    }

    pub fn plus(mut self, other: &FermionOperator) -> Self {
        assert_eq!(self.n_modes, other.n_modes);
        self.terms.extend(other.terms.iter().cloned());
        self
    }

    pub fn scaled(mut self, factor: Complex64) -> Self {
        for (c, _) in &mut self.terms {
            *c *= factor;
        }
        self
    }

    /// Hermitian adjoint: reverse each product, flip daggers, conjugate.
    pub fn adjoint(&self) -> Self {
        FermionOperator {
            n_modes: self.n_modes,
            terms: self
                .terms
                .iter()
                .map(|(c, ops)| (c.conj(), ops.iter().rev().map(|&(m, d)| (m, !d)).collect()))
                .collect(),
        }
    }

    /// `self − self†`.
    pub fn anti_hermitian_part(&self) -> Self {
        self.clone()
            .plus(&self.adjoint().scaled(Complex64::new(-1.0, 0.0)))
    }

    /// Canonical normal-ordered form: creators left of annihilators, each group
    /// sorted by descending mode index; zero terms removed.
    pub fn normal_ordered(&self) -> BTreeMap<Vec<Ladder>, Complex64> {
        let mut out: BTreeMap<Vec<Ladder>, Complex64> = BTreeMap::new();
        let mut work: Vec<(Complex64, Vec<Ladder>)> = self.terms.clone();
        while let Some((c, ops)) = work.pop() {
            if c.norm() == 0.0 {
                continue;
            }
            let mut swapped = false;
            for k in 0..ops.len().saturating_sub(1) {
                let (a, b) = (ops[k], ops[k + 1]);
                let out_of_order = match (a.1, b.1) {
                    (false, true) => true,
                    (x, y) if x == y => a.0 < b.0,
                    _ => false,
                };
                let repeated = a.1 == b.1 && a.0 == b.0;
                if repeated {
                    // a_p a_p = a†_p a†_p = 0
                    swapped = true;
                    break;
                }
                if out_of_order {
                    let mut s = ops.clone();
                    s.swap(k, k + 1);
                    work.push((-c, s));
                    if !a.1 && b.1 && a.0 == b.0 {
                        let mut contracted = ops.clone();
                        contracted.drain(k..k + 2);
                        work.push((c, contracted));
                    }
                    swapped = true;
                    break;
                }
            }
            if !swapped {
                *out.entry(ops).or_insert(Complex64::new(0.0, 0.0)) += c;
            }
        }
        out.retain(|_, c| c.norm() > 1e-12);
        out
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let a = self.normal_ordered();
        let b = self.adjoint().normal_ordered();
        let keys: std::collections::BTreeSet<_> = a.keys().chain(b.keys()).cloned().collect();
        keys.into_iter().all(|k| {
            let x = a.get(&k).copied().unwrap_or_default();
            let y = b.get(&k).copied().unwrap_or_default();
            (x - y).norm() <= tol
        })
    }

    /// Dense matrix in the occupation-number basis (mode `k` ↔ bit `k`),
    /// built directly from the ladder-operator action.
    pub fn to_fock_matrix(&self) -> DMatrix<Complex64> {
        assert!(self.n_modes <= 14, "Fock matrix too large");
        let dim = 1usize << self.n_modes;
        let mut m = DMatrix::zeros(dim, dim);
        for (c, ops) in &self.terms {
            for i in 0..dim as u64 {
                if let Some((sign, j)) = apply_ladders(ops, i) {
                    m[(j as usize, i as usize)] += c * sign;
                }
            }
        }
        m
    }
}

/// Apply `a_p` to a basis state; the sign counts occupied modes below `p`.
#[inline]
pub fn annihilate(mode: usize, state: u64) -> Option<(f64, u64)> {
    let bit = 1u64 << mode;
    if state & bit == 0 {
        return None;
    }
    let parity = (state & (bit - 1)).count_ones();
    Some((
        if parity.is_multiple_of(2) { 1.0 } else { -1.0 },
        state ^ bit,
    ))
}

#[inline]
pub fn create(mode: usize, state: u64) -> Option<(f64, u64)> {
    let bit = 1u64 << mode;
    if state & bit != 0 {
        return None;
    }
    let parity = (state & (bit - 1)).count_ones();
    Some((
        if parity.is_multiple_of(2) { 1.0 } else { -1.0 },
        state | bit,
    ))
}

/// Apply a product of ladder operators (rightmost first) to a basis state.
#[inline]
pub fn apply_ladders(ops: &[Ladder], state: u64) -> Option<(f64, u64)> {
    let mut sign = 1.0;
    let mut s = state;
    for &(mode, dagger) in ops.iter().rev() {
        let (sg, ns) = if dagger {
            create(mode, s)?
        } else {
            annihilate(mode, s)?
        };
        sign *= sg;
        s = ns;
    }
    Some((sign, s))
}
