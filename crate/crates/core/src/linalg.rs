//! Small dense linear-algebra helpers shared by the chemistry and simulator layers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Eigen-decomposition of a real symmetric matrix with eigenvalues sorted ascending.
pub fn sym_eigh(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let sym = 0.5 * (m + m.transpose());
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        // fix the sign so results are reproducible across platforms
        let lead =
            v.iter().copied().fold(
                0.0_f64,
                |acc, x| if x.abs() > acc.abs() + 1e-12 { x } else { acc },
            );
        if lead < 0.0 {
            v.neg_mut();
        }
        vectors.set_column(col, &v);
    }
    (values, vectors)
}

/// Eigen-decomposition of a complex Hermitian matrix, eigenvalues ascending.
pub fn herm_eigh(m: &DMatrix<Complex64>) -> (DVector<f64>, DMatrix<Complex64>) {
    let n = m.nrows();
    let herm = (m + m.adjoint()).map(|z| z * 0.5);
    let eig = herm.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// `S^{-1/2}` of a symmetric positive-definite matrix. Fails when the smallest
/// eigenvalue drops below `min_eig`.
pub fn inverse_sqrt(s: &DMatrix<f64>, min_eig: f64) -> Result<DMatrix<f64>> {
    let (vals, vecs) = sym_eigh(s);
    let smallest = vals.iter().copied().fold(f64::INFINITY, f64::min);
    if s.nrows() > 0 && smallest < min_eig {
        return Err(Error::IllConditionedOverlap(smallest));
    }
    let d = DMatrix::from_diagonal(&vals.map(|x| 1.0 / x.sqrt()));
    Ok(&vecs * d * vecs.transpose())
}

/// Dense rank-4 tensor of two-electron integrals `(pq|rs)` in chemists' notation.
#[derive(Debug, Clone, PartialEq)]
pub struct Eri {
    n: usize,
    data: Vec<f64>,
}

impl Eri {
    pub fn zeros(n: usize) -> Self {
        Eri {
            n,
            data: vec![0.0; n * n * n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, p: usize, q: usize, r: usize, s: usize) -> usize {
        ((p * self.n + q) * self.n + r) * self.n + s
    }

    #[inline]
    pub fn get(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.data[self.idx(p, q, r, s)]
    }

    #[inline]
    pub fn set(&mut self, p: usize, q: usize, r: usize, s: usize, v: f64) {
        let i = self.idx(p, q, r, s);
        self.data[i] = v;
    }

    /// Set all eight symmetry-equivalent entries.
    pub fn set_sym(&mut self, p: usize, q: usize, r: usize, s: usize, v: f64) {
        for (a, b, c, d) in [
            (p, q, r, s),
            (q, p, r, s),
            (p, q, s, r),
            (q, p, s, r),
            (r, s, p, q),
            (s, r, p, q),
            (r, s, q, p),
            (s, r, q, p),
        ] {
            self.set(a, b, c, d, v);
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Largest deviation from 8-fold permutational symmetry.
    pub fn symmetry_error(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0_f64;
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        let v = self.get(p, q, r, s);
                        worst = worst
                            .max((v - self.get(q, p, r, s)).abs())
                            .max((v - self.get(p, q, s, r)).abs())
                            .max((v - self.get(r, s, p, q)).abs());
                    }
                }
            }
        }
        worst
    }

    /// Transform all four indices with the columns of `c` (n × m): returns
    /// `(ab|cd) = Σ C_pa C_qb C_rc C_sd (pq|rs)`.
    pub fn transform(&self, c: &DMatrix<f64>) -> Eri {
        let n = self.n;
        let m = c.ncols();
        assert_eq!(c.nrows(), n, "coefficient rows must match tensor dimension");
        // (pq|rs) -> (pq|rd)
        let mut t1 = vec![0.0; n * n * n * m];
        for pqr in 0..n * n * n {
            let src = &self.data[pqr * n..(pqr + 1) * n];
            for d in 0..m {
                let mut acc = 0.0;
                for s in 0..n {
                    acc += c[(s, d)] * src[s];
                }
                t1[pqr * m + d] = acc;
            }
        }
        // (pq|rd) -> (pq|cd)
        let mut t2 = vec![0.0; n * n * m * m];
        for pq in 0..n * n {
            for cc in 0..m {
                for d in 0..m {
                    let mut acc = 0.0;
                    for r in 0..n {
                        acc += c[(r, cc)] * t1[(pq * n + r) * m + d];
                    }
                    t2[(pq * m + cc) * m + d] = acc;
                }
            }
        }
        // (pq|cd) -> (pb|cd)
        let mut t3 = vec![0.0; n * m * m * m];
        for p in 0..n {
            for b in 0..m {
                for cd in 0..m * m {
                    let mut acc = 0.0;
                    for q in 0..n {
                        acc += c[(q, b)] * t2[(p * n + q) * m * m + cd];
                    }
                    t3[(p * m + b) * m * m + cd] = acc;
                }
            }
        }
        // (pb|cd) -> (ab|cd)
        let mut out = Eri::zeros(m);
        for a in 0..m {
            for bcd in 0..m * m * m {
                let mut acc = 0.0;
                for p in 0..n {
                    acc += c[(p, a)] * t3[p * m * m * m + bcd];
                }
                out.data[a * m * m * m + bcd] = acc;
            }
        }
        out
    }

    /// Coulomb and exchange matrices `J_pq = Σ (pq|rs) D_rs`, `K_pq = Σ (pr|qs) D_rs`.
    pub fn coulomb_exchange(&self, d: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let n = self.n;
        let mut j = DMatrix::zeros(n, n);
        let mut k = DMatrix::zeros(n, n);
        for p in 0..n {
            for q in 0..n {
                let mut jj = 0.0;
                let mut kk = 0.0;
                for r in 0..n {
                    for s in 0..n {
                        let drs = d[(r, s)];
                        if drs == 0.0 {
                            continue;
                        }
                        jj += self.get(p, q, r, s) * drs;
                        kk += self.get(p, r, q, s) * drs;
                    }
                }
                j[(p, q)] = jj;
                k[(p, q)] = kk;
            }
        }
        (j, k)
    }

    /// Two-electron part of the closed-shell Fock matrix, `J[D] - K[D]/2`.
    pub fn fock_2e(&self, d: &DMatrix<f64>) -> DMatrix<f64> {
        let (j, k) = self.coulomb_exchange(d);
        j - k * 0.5
    }
}

/// Outcome of an iterative eigensolver.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    pub vector: DVector<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Davidson iteration for the lowest eigenpair of a real symmetric operator.
///
/// `apply` computes `H x`; `diag` is the operator diagonal used as preconditioner.
pub fn davidson<F>(
    apply: F,
    diag: &DVector<f64>,
    guess: DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<EigenPair>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let dim = diag.len();
    let max_sub = 40.min(dim);
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut images: Vec<DVector<f64>> = Vec::new();
    let mut v = guess.normalize();
    let mut last = EigenPair {
        value: f64::NAN,
        vector: v.clone(),
        residual: f64::INFINITY,
        iterations: 0,
    };
    for it in 0..max_iter {
        // orthogonalize twice against the current subspace
        for _ in 0..2 {
            for b in &basis {
                let ov = b.dot(&v);
                v.axpy(-ov, b, 1.0);
            }
        }
        let norm = v.norm();
        if norm < 1e-12 {
            // subspace is invariant; current Ritz pair is exact
            last.iterations = it;
            return Ok(last);
        }
        v /= norm;
        images.push(apply(&v));
        basis.push(v.clone());

        let k = basis.len();
        let mut sub = DMatrix::zeros(k, k);
        for i in 0..k {
            for j in 0..=i {
                let x = basis[i].dot(&images[j]);
                sub[(i, j)] = x;
                sub[(j, i)] = x;
            }
        }
        let (vals, vecs) = sym_eigh(&sub);
        let theta = vals[0];
        let mut x = DVector::zeros(dim);
        let mut hx = DVector::zeros(dim);
        for i in 0..k {
            x.axpy(vecs[(i, 0)], &basis[i], 1.0);
            hx.axpy(vecs[(i, 0)], &images[i], 1.0);
        }
        let r = &hx - &x * theta;
        let rnorm = r.norm();
        last = EigenPair {
            value: theta,
            vector: x.clone(),
            residual: rnorm,
            iterations: it + 1,
        };
        if rnorm < tol || k == dim {
            return Ok(last);
        }
        v = DVector::from_iterator(
            dim,
            r.iter().zip(diag.iter()).map(|(&ri, &di)| {
                let den = theta - di;
                if den.abs() < 1e-8 {
                    ri / 1e-8_f64.copysign(den)
                } else {
                    ri / den
                }
            }),
        );
        if k >= max_sub {
            // collapse onto the current Ritz vector
            let hxn = hx.clone();
            basis.clear();
            images.clear();
            basis.push(x);
            images.push(hxn);
        }
    }
    if last.residual < tol.sqrt() {
        Ok(last)
    } else {
        Err(Error::Numerical(format!(
            "Davidson did not converge (residual {:.3e})",
            last.residual
        )))
    }
}

/// Restarted Lanczos with full reorthogonalization for the lowest eigenpair of a
/// Hermitian operator on complex vectors.
pub fn lanczos_lowest<F>(
    apply: F,
    guess: DVector<Complex64>,
    tol: f64,
    max_restarts: usize,
) -> Result<(f64, DVector<Complex64>, f64)>
where
    F: Fn(&DVector<Complex64>) -> DVector<Complex64>,
{
    let dim = guess.len();
    let krylov = 80.min(dim);
    let mut start = guess.normalize();
    let mut best = (f64::NAN, start.clone(), f64::INFINITY);
    for _ in 0..max_restarts {
        let mut q: Vec<DVector<Complex64>> = vec![start.clone()];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        for j in 0..krylov {
            let mut w = apply(&q[j]);
            let a = q[j].dotc(&w).re;
            alpha.push(a);
            for qi in &q {
                let ov = qi.dotc(&w);
                w.axpy(-ov, qi, Complex64::new(1.0, 0.0));
            }
            for qi in &q {
                let ov = qi.dotc(&w);
                w.axpy(-ov, qi, Complex64::new(1.0, 0.0));
            }
            let b = w.norm();
            if j + 1 == krylov || b < 1e-12 {
                break;
            }
            beta.push(b);
            q.push(w / Complex64::new(b, 0.0));
        }
        let m = alpha.len();
        let mut t = DMatrix::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let (_, vecs) = sym_eigh(&t);
        let mut x = DVector::zeros(dim);
        for i in 0..m {
            x.axpy(
                Complex64::new(vecs[(i, 0)], 0.0),
                &q[i],
                Complex64::new(1.0, 0.0),
            );
        }
        let x = x.normalize();
        let hx = apply(&x);
        let theta = x.dotc(&hx).re;
        let r = (&hx - &x * Complex64::new(theta, 0.0)).norm();
        best = (theta, x.clone(), r);
        if r < tol {
            return Ok(best);
        }
        start = x;
    }
    if best.2 < tol.sqrt() {
        Ok(best)
    } else {
        Err(Error::Numerical(format!(
            "Lanczos did not converge (residual {:.3e})",
            best.2
        )))
    }
}
