//! Pauli strings stored as X/Z bit masks (`Y` sets both bits).

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Coefficient magnitude below which terms are dropped after simplification.
pub const PRUNE_TOL: f64 = 1e-12;

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I_UNIT: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

impl Letter {
    fn from_bits(x: bool, z: bool) -> Letter {
        match (x, z) {
            (false, false) => Letter::I,
            (true, false) => Letter::X,
            (true, true) => Letter::Y,
            (false, true) => Letter::Z,
        }
    }

    fn bits(self) -> (bool, bool) {
        match self {
            Letter::I => (false, false),
            Letter::X => (true, false),
            Letter::Y => (true, true),
            Letter::Z => (false, true),
        }
    }

    /// Single-qubit product `a · b = phase · c`.
    fn mul(a: Letter, b: Letter) -> (Complex64, Letter) {
        use Letter::*;
        match (a, b) {
            (I, p) | (p, I) => (ONE, p),
            (X, X) | (Y, Y) | (Z, Z) => (ONE, I),
            (X, Y) => (I_UNIT, Z),
            (Y, X) => (-I_UNIT, Z),
            (Y, Z) => (I_UNIT, X),
            (Z, Y) => (-I_UNIT, X),
            (Z, X) => (I_UNIT, Y),
            (X, Z) => (-I_UNIT, Y),
        }
    }
}

/// Identity-free part of a Pauli string: bit `k` of `x`/`z` describes qubit `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct PauliString {
    pub x: u64,
    pub z: u64,
}

impl PauliString {
    pub const IDENTITY: PauliString = PauliString { x: 0, z: 0 };

    pub fn single(qubit: usize, letter: Letter) -> Self {
        let (x, z) = letter.bits();
        PauliString {
            x: (x as u64) << qubit,
            z: (z as u64) << qubit,
        }
    }

    pub fn from_letters(letters: &[(usize, Letter)]) -> Self {
        let mut s = PauliString::IDENTITY;
        for &(q, l) in letters {
            let (x, z) = l.bits();
            let bit = 1u64 << q;
            s.x = (s.x & !bit) | if x { bit } else { 0 };
            s.z = (s.z & !bit) | if z { bit } else { 0 };
        }
        s
    }

    pub fn letter(&self, qubit: usize) -> Letter {
        Letter::from_bits(self.x >> qubit & 1 == 1, self.z >> qubit & 1 == 1)
    }

    pub fn support(&self) -> u64 {
        self.x | self.z
    }

    /// Number of non-identity letters.
    pub fn weight(&self) -> u32 {
        self.support().count_ones()
    }

    pub fn n_y(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    pub fn letters(&self) -> Vec<(usize, Letter)> {
        let mut out = Vec::new();
        let mut m = self.support();
        while m != 0 {
            let q = m.trailing_zeros() as usize;
            out.push((q, self.letter(q)));
            m &= m - 1;
        }
        out
    }

    /// `self · other = phase · result`.
    pub fn mul(&self, other: &PauliString) -> (Complex64, PauliString) {
        let mut phase = ONE;
        let mut m = self.support() | other.support();
        while m != 0 {
            let q = m.trailing_zeros() as usize;
            let (p, _) = Letter::mul(self.letter(q), other.letter(q));
            phase *= p;
            m &= m - 1;
        }
        (
            phase,
            PauliString {
                x: self.x ^ other.x,
                z: self.z ^ other.z,
            },
        )
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()).is_multiple_of(2)
    }

    /// Action on a computational basis state: `P|i> = phase |i ^ x>`.
    #[inline]
    pub fn apply_to_basis(&self, i: u64) -> (Complex64, u64) {
        let sign = if (i & self.z).count_ones() % 2 == 1 {
            -1.0
        } else {
            1.0
        };
        let phase = match self.n_y() % 4 {
            0 => Complex64::new(sign, 0.0),
            1 => Complex64::new(0.0, sign),
            2 => Complex64::new(-sign, 0.0),
            _ => Complex64::new(0.0, -sign),
        };
        (phase, i ^ self.x)
    }

    /// Same string without any `Z` letters.
    pub fn without_z(&self) -> PauliString {
        PauliString {
            x: self.x,
            z: self.z & self.x,
        }
    }
}

/// A single weighted Pauli string on `n_qubits` qubits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliTerm {
    pub coeff: Complex64,
    pub string: PauliString,
    pub n_qubits: usize,
}

impl PauliTerm {
    pub fn new(coeff: Complex64, letters: &[(usize, Letter)], n_qubits: usize) -> Self {
        debug_assert!(letters.iter().all(|&(q, _)| q < n_qubits));
        PauliTerm {
            coeff,
            string: PauliString::from_letters(letters),
            n_qubits,
        }
    }
}

/// Product of two Pauli terms with phase tracking.
pub fn pauli_product(a: &PauliTerm, b: &PauliTerm) -> PauliTerm {
    assert_eq!(
        a.n_qubits, b.n_qubits,
        "pauli_product needs matching qubit counts"
    );
    let (phase, string) = a.string.mul(&b.string);
    PauliTerm {
        coeff: a.coeff * b.coeff * phase,
        string,
        n_qubits: a.n_qubits,
    }
}

/// Weighted sum of distinct Pauli strings.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PauliSum {
    n_qubits: usize,
    terms: BTreeMap<PauliString, Complex64>,
}

impl PauliSum {
    pub fn new(n_qubits: usize) -> Self {
        assert!(n_qubits <= 64, "Pauli strings are limited to 64 qubits");
        PauliSum {
            n_qubits,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(n_qubits: usize, coeff: Complex64) -> Self {
        let mut s = PauliSum::new(n_qubits);
        s.add(PauliString::IDENTITY, coeff);
        s
    }

    pub fn from_term(t: PauliTerm) -> Self {
        let mut s = PauliSum::new(t.n_qubits);
        s.add(t.string, t.coeff);
        s
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&mut self, string: PauliString, coeff: Complex64) {
        debug_assert!(self.n_qubits == 64 || string.support() >> self.n_qubits == 0);
        *self.terms.entry(string).or_insert(Complex64::new(0.0, 0.0)) += coeff;
    }

    pub fn add_term(&mut self, t: &PauliTerm) {
        self.add(t.string, t.coeff);
    }

    pub fn coeff(&self, string: &PauliString) -> Complex64 {
        self.terms.get(string).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PauliString, &Complex64)> {
        self.terms.iter()
    }

    pub fn terms(&self) -> Vec<PauliTerm> {
        self.terms
            .iter()
            .map(|(s, c)| PauliTerm {
                coeff: *c,
                string: *s,
                n_qubits: self.n_qubits,
            })
            .collect()
    }

    /// Drop terms with `|c| < tol`.
    pub fn pruned(mut self, tol: f64) -> Self {
        self.terms.retain(|_, c| c.norm() >= tol);
        self
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c *= factor;
        }
        out
    }

    pub fn plus(&self, other: &PauliSum) -> Self {
        assert_eq!(self.n_qubits, other.n_qubits);
        let mut out = self.clone();
        for (s, c) in &other.terms {
            out.add(*s, *c);
        }
        out.pruned(PRUNE_TOL)
    }

    pub fn minus(&self, other: &PauliSum) -> Self {
        self.plus(&other.scaled(Complex64::new(-1.0, 0.0)))
    }

    /// Operator product `self · other`.
    pub fn mul(&self, other: &PauliSum) -> Self {
        assert_eq!(self.n_qubits, other.n_qubits);
        let mut out = PauliSum::new(self.n_qubits);
        for (sa, ca) in &self.terms {
            for (sb, cb) in &other.terms {
                let (phase, s) = sa.mul(sb);
                out.add(s, ca * cb * phase);
            }
        }
        out.pruned(PRUNE_TOL)
    }

    pub fn adjoint(&self) -> Self {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = c.conj();
        }
        out
    }

    /// Largest imaginary coefficient part.
    pub fn max_imag(&self) -> f64 {
        self.terms.values().map(|c| c.im.abs()).fold(0.0, f64::max)
    }

    /// Largest real coefficient part.
    pub fn max_real(&self) -> f64 {
        self.terms.values().map(|c| c.re.abs()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_imag() <= tol
    }

    pub fn is_anti_hermitian(&self, tol: f64) -> bool {
        self.max_real() <= tol
    }

    /// Sum of absolute coefficients (an upper bound on the spectral norm).
    pub fn one_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).sum()
    }

    /// Dense 2ⁿ × 2ⁿ matrix; qubit `k` is bit `k` of the row/column index.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        assert!(self.n_qubits <= 14, "dense matrix too large");
        let dim = 1usize << self.n_qubits;
        let mut m = DMatrix::zeros(dim, dim);
        for (s, c) in &self.terms {
            for i in 0..dim as u64 {
                let (phase, j) = s.apply_to_basis(i);
                m[(j as usize, i as usize)] += c * phase;
            }
        }
        m
    }

    /// Parse the line format written by `Display`.
    pub fn parse(text: &str, n_qubits: usize) -> Result<Self> {
        let mut out = PauliSum::new(n_qubits);
        for (lineno, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            let err = |m: String| Error::Parse {
                path: "<pauli>".into(),
                line: lineno + 1,
                message: m,
            };
            let mut fields = t.split_whitespace();
            let coeff_txt = fields.next().ok_or_else(|| err("empty line".into()))?;
            let coeff = parse_complex(coeff_txt)
                .ok_or_else(|| err(format!("bad coefficient `{coeff_txt}`")))?;
            let mut letters = Vec::new();
            for f in fields {
                if f == "I" {
                    continue;
                }
                let (l, q) = f.split_at(1);
                let letter = match l {
                    "X" => Letter::X,
                    "Y" => Letter::Y,
                    "Z" => Letter::Z,
                    _ => return Err(err(format!("bad Pauli letter in `{f}`"))),
                };
                let q: usize = q
                    .parse()
                    .map_err(|_| err(format!("bad qubit index in `{f}`")))?;
                if q >= n_qubits {
                    return Err(err(format!("qubit {q} out of range")));
                }
                letters.push((q, letter));
            }
            out.add(PauliString::from_letters(&letters), coeff);
        }
        Ok(out)
    }
}

fn parse_complex(s: &str) -> Option<Complex64> {
    let body = s.strip_suffix('i')?;
    // split at the sign of the imaginary part (skip exponent signs)
    let bytes = body.as_bytes();
    let mut split = None;
    for k in (1..bytes.len()).rev() {
        if (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
            split = Some(k);
            break;
        }
    }
    let k = split?;
    let re: f64 = body[..k].parse().ok()?;
    let im: f64 = body[k..].parse().ok()?;
    Some(Complex64::new(re, im))
}

impl fmt::Display for PauliSum {
    /// One line per term: `coeff  X0 Z3 Y5`, with `I` for the identity string.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (s, c) in &self.terms {
            write!(f, "{:+.15e}{:+.15e}i ", c.re, c.im)?;
            let letters = s.letters();
            if letters.is_empty() {
                write!(f, " I")?;
            }
            for (q, l) in letters {
                write!(f, " {l:?}{q}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// `[H, A] = HA − AH`; only anticommuting string pairs contribute.
pub fn commutator(h: &PauliSum, a: &PauliSum) -> PauliSum {
    assert_eq!(h.n_qubits(), a.n_qubits());
    let mut out = PauliSum::new(h.n_qubits());
    for (sh, ch) in h.iter() {
        for (sa, ca) in a.iter() {
            if sh.commutes_with(sa) {
                continue;
            }
            let (phase, s) = sh.mul(sa);
            // anticommuting: HA - AH = 2 HA
            out.add(s, ch * ca * phase * 2.0);
        }
    }
    out.pruned(PRUNE_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn single_dense(l: Letter) -> DMatrix<Complex64> {
        let z = c(0.0, 0.0);
        let o = c(1.0, 0.0);
        match l {
            Letter::I => DMatrix::from_row_slice(2, 2, &[o, z, z, o]),
            Letter::X => DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
            Letter::Y => DMatrix::from_row_slice(2, 2, &[z, c(0.0, -1.0), c(0.0, 1.0), z]),
            Letter::Z => DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        }
    }

    /// Kronecker product with qubit 0 as the least-significant index bit.
    fn kron_dense(l0: Letter, l1: Letter) -> DMatrix<Complex64> {
        single_dense(l1).kronecker(&single_dense(l0))
    }

    #[test]
    fn textbook_products() {
        let x0 = PauliTerm::new(c(1.0, 0.0), &[(0, Letter::X)], 1);
        let y0 = PauliTerm::new(c(1.0, 0.0), &[(0, Letter::Y)], 1);
        let xx = pauli_product(&x0, &x0);
        assert_eq!(xx.string, PauliString::IDENTITY);
        assert_eq!(xx.coeff, c(1.0, 0.0));
        let xy = pauli_product(&x0, &y0);
        assert_eq!(xy.string, PauliString::single(0, Letter::Z));
        assert_eq!(xy.coeff, c(0.0, 1.0));
    }

    #[test]
    fn exhaustive_two_qubit_product_table() {
        let all = [Letter::I, Letter::X, Letter::Y, Letter::Z];
        let mut cases = 0;
        for &a0 in &all {
            for &a1 in &all {
                for &b0 in &all {
                    for &b1 in &all {
                        let ta = PauliTerm::new(c(1.0, 0.0), &[(0, a0), (1, a1)], 2);
                        let tb = PauliTerm::new(c(1.0, 0.0), &[(0, b0), (1, b1)], 2);
                        let prod = PauliSum::from_term(pauli_product(&ta, &tb)).to_dense();
                        let dense = kron_dense(a0, a1) * kron_dense(b0, b1);
                        assert!(
                            (prod - dense).iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-14,
                            "{a0:?}{a1:?} * {b0:?}{b1:?}"
                        );
                        cases += 1;
                    }
                }
            }
        }
        assert_eq!(cases, 256);
    }

    #[test]
    fn xz_times_yy_matches_kron() {
        let a = PauliTerm::new(c(1.0, 0.0), &[(0, Letter::X), (1, Letter::Z)], 2);
        let b = PauliTerm::new(c(1.0, 0.0), &[(0, Letter::Y), (1, Letter::Y)], 2);
        let p = pauli_product(&a, &b);
        // (X·Y)⊗(Z·Y) = (iZ)⊗(-iX) = Z0 X1
        assert_eq!(
            p.string,
            PauliString::from_letters(&[(0, Letter::Z), (1, Letter::X)])
        );
        assert!((p.coeff - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn commutator_examples() {
        let z0 = PauliSum::from_term(PauliTerm::new(c(1.0, 0.0), &[(0, Letter::Z)], 2));
        let z1 = PauliSum::from_term(PauliTerm::new(c(1.0, 0.0), &[(1, Letter::Z)], 2));
        let x0 = PauliSum::from_term(PauliTerm::new(c(1.0, 0.0), &[(0, Letter::X)], 2));
        assert!(commutator(&z0, &z1).is_empty());
        let zx = commutator(&z0, &x0);
        assert_eq!(zx.len(), 1);
        assert_eq!(zx.coeff(&PauliString::single(0, Letter::Y)), c(0.0, 2.0));
    }

    #[test]
    fn display_parse_round_trip() {
        let mut s = PauliSum::new(6);
        s.add(
            PauliString::from_letters(&[(0, Letter::X), (3, Letter::Z), (5, Letter::Y)]),
            c(0.25, -1.5e-3),
        );
        s.add(PauliString::IDENTITY, c(-1.0, 0.0));
        let text = s.to_string();
        assert!(text.contains("X0 Z3 Y5"));
        let back = PauliSum::parse(&text, 6).unwrap();
        assert_eq!(back, s);
    }
}
