//! Pauli sums compiled to sparse matrices over a list of basis states.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hamiltonian::PauliSum;

/// Largest qubit count for which a dense state index is kept.
pub const MAX_QUBITS: usize = 24;

/// Fixed electron count and spin projection (`two_sz = Nα − Nβ`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Sector {
    pub n_elec: usize,
    pub two_sz: i32,
}

impl Sector {
    pub fn new(n_elec: usize, two_sz: i32) -> Self {
        Sector { n_elec, two_sz }
    }

    pub fn singlet(n_elec: usize) -> Self {
        Sector { n_elec, two_sz: 0 }
    }

    /// `(Nα, Nβ)`, or `None` when the pair is not integral.
    pub fn alpha_beta(&self) -> Option<(usize, usize)> {
        let n = self.n_elec as i64;
        let s = self.two_sz as i64;
        if (n + s) % 2 != 0 || s.abs() > n {
            return None;
        }
        Some((((n + s) / 2) as usize, ((n - s) / 2) as usize))
    }

    pub fn contains(&self, state: u64) -> bool {
        let a = (state & ALPHA_MASK).count_ones() as usize;
        let b = (state & BETA_MASK).count_ones() as usize;
        Some((a, b)) == self.alpha_beta()
    }
}

pub(crate) const ALPHA_MASK: u64 = 0x5555_5555_5555_5555;
pub(crate) const BETA_MASK: u64 = 0xAAAA_AAAA_AAAA_AAAA;

/// Ordered set of computational basis states with O(1) lookup.
#[derive(Debug, Clone)]
pub struct Basis {
    pub n_qubits: usize,
    pub states: Vec<u64>,
    index: Vec<u32>,
}

impl Basis {
    pub fn full(n_qubits: usize) -> Result<Self> {
        if n_qubits > MAX_QUBITS {
            return Err(Error::DimensionTooLarge(n_qubits));
        }
        let dim = 1usize << n_qubits;
        Ok(Basis {
            n_qubits,
            states: (0..dim as u64).collect(),
            index: (0..dim as u32).collect(),
        })
    }

    pub fn sector(n_qubits: usize, sector: Sector) -> Result<Self> {
        if n_qubits > MAX_QUBITS {
            return Err(Error::DimensionTooLarge(n_qubits));
        }
        let dim = 1usize << n_qubits;
        let mut index = vec![u32::MAX; dim];
        let mut states = Vec::new();
        for s in 0..dim as u64 {
            if sector.contains(s) {
                index[s as usize] = states.len() as u32;
                states.push(s);
            }
        }
        Ok(Basis {
            n_qubits,
            states,
            index,
        })
    }

    pub fn build(n_qubits: usize, sector: Option<Sector>) -> Result<Self> {
        match sector {
            Some(s) => Basis::sector(n_qubits, s),
            None => Basis::full(n_qubits),
        }
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn is_full(&self) -> bool {
        self.states.len() == 1usize << self.n_qubits
    }

    #[inline]
    pub fn position(&self, state: u64) -> Option<usize> {
        match self.index.get(state as usize) {
            Some(&k) if k != u32::MAX => Some(k as usize),
            _ => None,
        }
    }

    /// Scatter a subspace vector into the full `2^n` amplitude array.
    pub fn embed(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); 1usize << self.n_qubits];
        for (k, &s) in self.states.iter().enumerate() {
            out[s as usize] = v[k];
        }
        out
    }

    /// Gather the subspace components of a full amplitude array.
    pub fn restrict(&self, full: &[Complex64]) -> Vec<Complex64> {
        self.states.iter().map(|&s| full[s as usize]).collect()
    }
}

/// Row-compressed complex matrix acting on a [`Basis`].
#[derive(Debug, Clone)]
pub struct SparseOperator {
    pub dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<Complex64>,
    /// Some image of a basis state fell outside the basis.
    pub leaks: bool,
    /// Max absolute row sum.
    pub inf_norm: f64,
    /// `Some(a)` when the operator is `i·a·P` for a single Pauli string `P`
    /// that maps the basis onto itself.
    single_string: Option<f64>,
    local: Option<Box<Local>>,
}

/// The operator on the basis states it touches, in local numbering.
#[derive(Debug, Clone)]
struct Local {
    support: Vec<usize>,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<Complex64>,
    /// Distinct eigenvalues of `iA` in Leja order, when few and well separated.
    nodes: Option<Vec<f64>>,
}

impl Local {
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        csr_apply(&self.row_ptr, &self.cols, &self.vals, x, y);
    }

    /// `exp(θA) v = p(iA) v` with `p` interpolating `exp(-iθλ)` on the spectrum.
    fn exp_interpolated(&self, theta: f64, nodes: &[f64], v: &mut [Complex64]) {
        let m = nodes.len();
        let mut coef: Vec<Complex64> = nodes
            .iter()
            .map(|&l| Complex64::from_polar(1.0, -theta * l))
            .collect();
        for k in 1..m {
            for j in (k..m).rev() {
                coef[j] = (coef[j] - coef[j - 1]) / (nodes[j] - nodes[j - k]);
            }
        }
        let i = Complex64::new(0.0, 1.0);
        let mut y: Vec<Complex64> = v.iter().map(|a| a * coef[m - 1]).collect();
        let mut ay = vec![Complex64::new(0.0, 0.0); v.len()];
        for j in (0..m - 1).rev() {
            self.apply(&y, &mut ay);
            for ((yk, ak), vk) in y.iter_mut().zip(&ay).zip(v.iter()) {
                *yk = i * ak - *yk * nodes[j] + vk * coef[j];
            }
        }
        v.copy_from_slice(&y);
    }
}

const MAX_BLOCK: usize = 64;
const MAX_NODES: usize = 9;
const MIN_NODE_GAP: f64 = 0.05;

/// Distinct eigenvalues of the Hermitian matrix `iA` on the support, Leja-ordered.
/// The spectrum is assembled from the connected blocks of the sparsity graph.
fn spectral_nodes(loc: &Local) -> Option<Vec<f64>> {
    let n = loc.support.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut a: usize) -> usize {
        while parent[a] != a {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        a
    }
    for r in 0..n {
        for k in loc.row_ptr[r]..loc.row_ptr[r + 1] {
            let (a, b) = (
                root(&mut parent, r),
                root(&mut parent, loc.cols[k] as usize),
            );
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut blocks: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for r in 0..n {
        let top = root(&mut parent, r);
        blocks.entry(top).or_default().push(r);
    }
    let i = Complex64::new(0.0, 1.0);
    let mut values: Vec<f64> = Vec::new();
    let mut local = vec![0usize; n];
    for members in blocks.values() {
        let b = members.len();
        if b > MAX_BLOCK {
            return None;
        }
        for (k, &r) in members.iter().enumerate() {
            local[r] = k;
        }
        let mut h = nalgebra::DMatrix::<Complex64>::zeros(b, b);
        for &r in members {
            for k in loc.row_ptr[r]..loc.row_ptr[r + 1] {
                h[(local[r], local[loc.cols[k] as usize])] += i * loc.vals[k];
            }
        }
        if (&h - h.adjoint()).iter().any(|z| z.norm() > 1e-10) {
            return None;
        }
        values.extend(crate::linalg::herm_eigh(&h).0.iter());
    }
    values.sort_by(f64::total_cmp);
    let mut distinct: Vec<f64> = Vec::new();
    for &l in values.iter() {
        match distinct.last() {
            Some(&d) if (l - d).abs() < 1e-8 => {}
            _ => distinct.push(l),
        }
    }
    if distinct.len() > MAX_NODES || distinct.windows(2).any(|w| w[1] - w[0] < MIN_NODE_GAP) {
        return None;
    }
    // Leja ordering keeps the divided differences well conditioned.
    let mut ordered = Vec::with_capacity(distinct.len());
    let start = (0..distinct.len())
        .max_by(|&a, &b| distinct[a].abs().total_cmp(&distinct[b].abs()))
        .unwrap();
    ordered.push(distinct.swap_remove(start));
    while !distinct.is_empty() {
        let k = (0..distinct.len())
            .max_by(|&a, &b| {
                let pa: f64 = ordered
                    .iter()
                    .map(|o: &f64| (distinct[a] - o).abs())
                    .product();
                let pb: f64 = ordered
                    .iter()
                    .map(|o: &f64| (distinct[b] - o).abs())
                    .product();
                pa.total_cmp(&pb)
            })
            .unwrap();
        ordered.push(distinct.swap_remove(k));
    }
    Some(ordered)
}

fn csr_apply(
    row_ptr: &[usize],
    cols: &[u32],
    vals: &[Complex64],
    x: &[Complex64],
    y: &mut [Complex64],
) {
    for (j, out) in y.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in row_ptr[j]..row_ptr[j + 1] {
            acc += vals[k] * x[cols[k] as usize];
        }
        *out = acc;
    }
}

/// `exp(θA) v` in place by a scaled Taylor series, `apply` computing `A x`.
fn taylor_exp(
    theta: f64,
    inf_norm: f64,
    v: &mut [Complex64],
    apply: impl Fn(&[Complex64], &mut [Complex64]),
) {
    let steps = (theta.abs() * inf_norm / 0.5).ceil().max(1.0) as usize;
    let h = theta / steps as f64;
    let mut term = vec![Complex64::new(0.0, 0.0); v.len()];
    let mut next = term.clone();
    for _ in 0..steps {
        term.copy_from_slice(v);
        let scale = v.iter().map(|a| a.norm_sqr()).sum::<f64>().max(1e-300);
        for k in 1..40 {
            apply(&term, &mut next);
            let f = h / k as f64;
            let mut size = 0.0;
            for (t, n) in term.iter_mut().zip(&next) {
                *t = n * f;
                size += t.norm_sqr();
            }
            for (a, t) in v.iter_mut().zip(&term) {
                *a += t;
            }
            if size < 1e-32 * scale {
                break;
            }
        }
    }
}

impl SparseOperator {
    pub fn compile(op: &PauliSum, basis: &Basis) -> Self {
        // Group strings by flip mask: one lookup per (row, mask).
        let mut groups: Vec<(u64, Vec<(u64, Complex64)>)> = Vec::new();
        for (s, c) in op.iter() {
            let (phase, _) = s.apply_to_basis(0);
            let c = c * phase;
            match groups.iter_mut().find(|(x, _)| *x == s.x) {
                Some((_, v)) => v.push((s.z, c)),
                None => groups.push((s.x, vec![(s.z, c)])),
            }
        }
        let rows: Vec<(Vec<(u32, Complex64)>, bool)> = basis
            .states
            .par_iter()
            .map(|&j| {
                let mut row = Vec::with_capacity(groups.len());
                let mut leak = false;
                for (x, terms) in &groups {
                    let i = j ^ x;
                    let mut v = Complex64::new(0.0, 0.0);
                    for &(z, c) in terms {
                        if (i & z).count_ones() % 2 == 1 {
                            v -= c;
                        } else {
                            v += c;
                        }
                    }
                    if v.norm() < 1e-14 {
                        continue;
                    }
                    match basis.position(i) {
                        Some(k) => row.push((k as u32, v)),
                        None => leak = true,
                    }
                }
                (row, leak)
            })
            .collect();
        let mut row_ptr = Vec::with_capacity(basis.dim() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut leaks = false;
        let mut inf_norm = 0.0_f64;
        row_ptr.push(0);
        for (row, leak) in rows {
            leaks |= leak;
            inf_norm = inf_norm.max(row.iter().map(|(_, v)| v.norm()).sum());
            for (k, v) in row {
                cols.push(k);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        let single_string = match op.iter().next() {
            Some((_, c)) if op.len() == 1 && !leaks && c.re.abs() < 1e-14 => Some(c.im),
            _ => None,
        };
        SparseOperator {
            dim: basis.dim(),
            row_ptr,
            cols,
            vals,
            leaks,
            inf_norm,
            single_string,
            local: None,
        }
    }

    /// Restrict the operator to the basis states it touches so that
    /// [`exp_apply`](Self::exp_apply) works on vectors of that length.
    pub fn localize(&mut self) {
        if self.single_string.is_some() || self.local.is_some() {
            return;
        }
        let mut support: Vec<usize> = self.cols.iter().map(|&c| c as usize).collect();
        support.extend((0..self.dim).filter(|&j| self.row_ptr[j + 1] > self.row_ptr[j]));
        support.sort_unstable();
        support.dedup();
        let mut position = vec![u32::MAX; self.dim];
        for (k, &j) in support.iter().enumerate() {
            position[j] = k as u32;
        }
        let mut row_ptr = Vec::with_capacity(support.len() + 1);
        let mut cols = Vec::with_capacity(self.cols.len());
        row_ptr.push(0);
        for &j in &support {
            cols.extend(
                self.cols[self.row_ptr[j]..self.row_ptr[j + 1]]
                    .iter()
                    .map(|&c| position[c as usize]),
            );
            row_ptr.push(cols.len());
        }
        let vals = support
            .iter()
            .flat_map(|&j| {
                self.vals[self.row_ptr[j]..self.row_ptr[j + 1]]
                    .iter()
                    .copied()
            })
            .collect();
        let mut local = Local {
            support,
            row_ptr,
            cols,
            vals,
            nodes: None,
        };
        if let Some(nodes) = spectral_nodes(&local) {
            // Keep the interpolation only if it reproduces the series.
            let probe: Vec<Complex64> = (0..local.support.len())
                .map(|k| Complex64::new(1.0 + (k % 7) as f64, (k % 3) as f64 - 1.0))
                .collect();
            let theta = 1.3;
            let mut a = probe.clone();
            local.exp_interpolated(theta, &nodes, &mut a);
            let mut b = probe;
            taylor_exp(theta, self.inf_norm, &mut b, |x, y| local.apply(x, y));
            let scale = norm(&b);
            if a.iter()
                .zip(&b)
                .all(|(u, v)| (u - v).norm() < 1e-11 * scale)
            {
                local.nodes = Some(nodes);
            }
        }
        self.local = Some(Box::new(local));
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.dim];
        self.apply_into(x, &mut y);
        y
    }

    pub fn apply_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.dim);
        let kernel = |(j, out): (usize, &mut Complex64)| {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[j]..self.row_ptr[j + 1] {
                acc += self.vals[k] * x[self.cols[k] as usize];
            }
            *out = acc;
        };
        if self.dim >= 4096 {
            y.par_iter_mut().enumerate().for_each(kernel);
        } else {
            y.iter_mut().enumerate().for_each(kernel);
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|j| {
                (self.row_ptr[j]..self.row_ptr[j + 1])
                    .filter(|&k| self.cols[k] as usize == j)
                    .map(|k| self.vals[k].re)
                    .sum()
            })
            .collect()
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<Complex64> {
        let mut m = nalgebra::DMatrix::zeros(self.dim, self.dim);
        for j in 0..self.dim {
            for k in self.row_ptr[j]..self.row_ptr[j + 1] {
                m[(j, self.cols[k] as usize)] += self.vals[k];
            }
        }
        m
    }

    /// `⟨x|A|x⟩`.
    pub fn expectation(&self, x: &[Complex64]) -> Complex64 {
        inner(x, &self.apply(x))
    }

    /// `exp(θA) x` for anti-Hermitian `A`: closed form for a single Pauli
    /// string, otherwise a scaled Taylor series (on the local support when
    /// [`localize`](Self::localize) has run).
    pub fn exp_apply(&self, theta: f64, x: &[Complex64]) -> Vec<Complex64> {
        if theta == 0.0 {
            return x.to_vec();
        }
        if let Some(a) = self.single_string {
            // A = i a P with P² = 1: exp(θA) = cos(θa) + sin(θa)/a · A.
            let ax = self.apply(x);
            let (s, c) = (theta * a).sin_cos();
            return x
                .iter()
                .zip(&ax)
                .map(|(u, v)| u * c + v * (s / a))
                .collect();
        }
        if let Some(loc) = &self.local {
            let mut v: Vec<Complex64> = loc.support.iter().map(|&j| x[j]).collect();
            match &loc.nodes {
                Some(nodes) => loc.exp_interpolated(theta, nodes, &mut v),
                None => taylor_exp(theta, self.inf_norm, &mut v, |a, b| loc.apply(a, b)),
            }
            let mut y = x.to_vec();
            for (&j, a) in loc.support.iter().zip(v) {
                y[j] = a;
            }
            return y;
        }
        let mut v = x.to_vec();
        taylor_exp(theta, self.inf_norm, &mut v, |a, b| self.apply_into(a, b));
        v
    }
}

#[inline]
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{Letter, PauliString};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn full_basis_matches_dense_pauli_matrix() {
        let mut p = PauliSum::new(3);
        p.add(
            PauliString::from_letters(&[(0, Letter::X), (2, Letter::Y)]),
            c(0.3, 0.0),
        );
        p.add(PauliString::from_letters(&[(1, Letter::Z)]), c(-0.7, 0.0));
        p.add(
            PauliString::from_letters(&[(0, Letter::Y), (1, Letter::Y)]),
            c(0.2, 0.1),
        );
        let basis = Basis::full(3).unwrap();
        let a = SparseOperator::compile(&p, &basis).to_dense();
        let b = p.to_dense();
        assert!((a - b).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn sector_basis_counts() {
        let b = Basis::sector(8, Sector::singlet(4)).unwrap();
        assert_eq!(b.dim(), 36);
        assert!(b.states.iter().all(|&s| s.count_ones() == 4));
        assert_eq!(Sector::new(3, 0).alpha_beta(), None);
        assert_eq!(Sector::new(3, 1).alpha_beta(), Some((2, 1)));
    }

    #[test]
    fn number_breaking_string_leaks_out_of_sector() {
        let mut p = PauliSum::new(2);
        p.add(PauliString::single(0, Letter::X), c(1.0, 0.0));
        let b = Basis::sector(2, Sector::new(1, 1)).unwrap();
        assert!(SparseOperator::compile(&p, &b).leaks);
    }

    #[test]
    fn taylor_exponential_matches_closed_form() {
        let mut p = PauliSum::new(2);
        p.add(
            PauliString::from_letters(&[(0, Letter::X), (1, Letter::Y)]),
            c(0.0, 0.8),
        );
        let basis = Basis::full(2).unwrap();
        let a = SparseOperator::compile(&p, &basis);
        let x = vec![c(0.5, 0.0), c(0.5, 0.1), c(-0.3, 0.2), c(0.1, -0.6)];
        let closed = a.exp_apply(1.7, &x);
        let mut taylor_op = a.clone();
        taylor_op.single_string = None;
        let series = taylor_op.exp_apply(1.7, &x);
        for (u, v) in closed.iter().zip(&series) {
            assert!((u - v).norm() < 1e-13);
        }
    }

    #[test]
    fn localized_exponential_matches_full_register() {
        let mut p = PauliSum::new(3);
        p.add(
            PauliString::from_letters(&[(0, Letter::X), (1, Letter::Y)]),
            c(0.0, 0.8),
        );
        p.add(
            PauliString::from_letters(&[(1, Letter::Y), (2, Letter::Z)]),
            c(0.0, -0.3),
        );
        p.add(
            PauliString::from_letters(&[(0, Letter::Y), (2, Letter::X)]),
            c(0.0, 0.45),
        );
        let basis = Basis::full(3).unwrap();
        let taylor = SparseOperator::compile(&p, &basis);
        let mut local = taylor.clone();
        local.localize();
        let x: Vec<Complex64> = (0..8)
            .map(|k| c(0.1 * k as f64, 0.3 - 0.05 * k as f64))
            .collect();
        for theta in [-2.1, 0.37, 5.0] {
            let a = taylor.exp_apply(theta, &x);
            let b = local.exp_apply(theta, &x);
            assert!(a.iter().zip(&b).all(|(u, v)| (u - v).norm() < 1e-12));
        }
    }
}
