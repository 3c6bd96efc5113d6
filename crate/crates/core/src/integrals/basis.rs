//! STO-3G s-shell Gaussian integrals for H and He.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::geometry::Geometry;
use super::AOIntegrals;
use crate::error::{Error, Result};
use crate::linalg::Eri;

/// STO-3G contraction coefficients for 1s shells (shared by all elements).
const STO3G_COEFFS: [f64; 3] = [0.154_328_97, 0.535_328_14, 0.444_634_54];

/// One contracted s function.
#[derive(Debug, Clone)]
pub struct ContractedS {
    pub center: [f64; 3],
    pub exponents: [f64; 3],
    /// Coefficients multiplying normalized primitives, renormalized so `<φ|φ> = 1`.
    pub coeffs: [f64; 3],
}

fn sto3g_exponents(z: u32) -> Option<[f64; 3]> {
    match z {
        1 => Some([3.425_250_91, 0.623_913_73, 0.168_855_40]),
        2 => Some([6.362_421_39, 1.158_923_00, 0.313_649_79]),
        _ => None,
    }
}

fn prim_norm(a: f64) -> f64 {
    (2.0 * a / PI).powf(0.75)
}

fn dist2(a: [f64; 3], b: [f64; 3]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

fn gaussian_center(a: f64, pa: [f64; 3], b: f64, pb: [f64; 3]) -> [f64; 3] {
    let p = a + b;
    [
        (a * pa[0] + b * pb[0]) / p,
        (a * pa[1] + b * pb[1]) / p,
        (a * pa[2] + b * pb[2]) / p,
    ]
}

/// Zeroth-order Boys function.
pub fn boys0(t: f64) -> f64 {
    if t < 1e-10 {
        1.0 - t / 3.0
    } else {
        0.5 * (PI / t).sqrt() * libm::erf(t.sqrt())
    }
}

// Primitive integrals over unnormalized s Gaussians exp(-a|r-A|^2).

fn prim_overlap(a: f64, pa: [f64; 3], b: f64, pb: [f64; 3]) -> f64 {
    let p = a + b;
    (PI / p).powf(1.5) * (-a * b / p * dist2(pa, pb)).exp()
}

fn prim_kinetic(a: f64, pa: [f64; 3], b: f64, pb: [f64; 3]) -> f64 {
    let p = a + b;
    let mu = a * b / p;
    mu * (3.0 - 2.0 * mu * dist2(pa, pb)) * prim_overlap(a, pa, b, pb)
}

fn prim_nuclear(a: f64, pa: [f64; 3], b: f64, pb: [f64; 3], c: [f64; 3]) -> f64 {
    let p = a + b;
    let pc = gaussian_center(a, pa, b, pb);
    -2.0 * PI / p * (-a * b / p * dist2(pa, pb)).exp() * boys0(p * dist2(pc, c))
}

#[allow(clippy::too_many_arguments)]
fn prim_eri(
    a: f64,
    pa: [f64; 3],
    b: f64,
    pb: [f64; 3],
    c: f64,
    pc: [f64; 3],
    d: f64,
    pd: [f64; 3],
) -> f64 {
    let p = a + b;
    let q = c + d;
    let gp = gaussian_center(a, pa, b, pb);
    let gq = gaussian_center(c, pc, d, pd);
    2.0 * PI.powf(2.5) / (p * q * (p + q).sqrt())
        * (-a * b / p * dist2(pa, pb) - c * d / q * dist2(pc, pd)).exp()
        * boys0(p * q / (p + q) * dist2(gp, gq))
}

impl ContractedS {
    fn new(center: [f64; 3], exponents: [f64; 3]) -> Self {
        let mut f = ContractedS {
            center,
            exponents,
            coeffs: STO3G_COEFFS,
        };
        let s = f.pair(&f.clone(), prim_overlap);
        let scale = 1.0 / s.sqrt();
        for c in &mut f.coeffs {
            *c *= scale;
        }
        f
    }

    fn pair<F>(&self, other: &ContractedS, f: F) -> f64
    where
        F: Fn(f64, [f64; 3], f64, [f64; 3]) -> f64,
    {
        let mut acc = 0.0;
        for i in 0..3 {
            let (a, ca) = (
                self.exponents[i],
                self.coeffs[i] * prim_norm(self.exponents[i]),
            );
            for j in 0..3 {
                let (b, cb) = (
                    other.exponents[j],
                    other.coeffs[j] * prim_norm(other.exponents[j]),
                );
                acc += ca * cb * f(a, self.center, b, other.center);
            }
        }
        acc
    }
}

/// STO-3G basis functions (bohr centers) for a geometry.
pub fn sto3g_basis(geometry: &Geometry) -> Result<Vec<ContractedS>> {
    geometry
        .atoms
        .iter()
        .map(|atom| {
            sto3g_exponents(atom.charge)
                .map(|e| ContractedS::new(atom.position_bohr(), e))
                .ok_or_else(|| Error::UnsupportedElement(atom.symbol.clone()))
        })
        .collect()
}

/// Evaluate overlap, kinetic, nuclear-attraction and electron-repulsion integrals.
pub fn build_ao_integrals(geometry: &Geometry) -> Result<AOIntegrals> {
    let basis = sto3g_basis(geometry)?;
    let n = basis.len();
    let nuclei: Vec<([f64; 3], f64)> = geometry
        .atoms
        .iter()
        .map(|a| (a.position_bohr(), a.charge as f64))
        .collect();

    let mut s = DMatrix::zeros(n, n);
    let mut t = DMatrix::zeros(n, n);
    let mut v = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let sij = basis[i].pair(&basis[j], prim_overlap);
            let tij = basis[i].pair(&basis[j], prim_kinetic);
            let vij: f64 = nuclei
                .iter()
                .map(|&(c, z)| {
                    z * basis[i].pair(&basis[j], |a, pa, b, pb| prim_nuclear(a, pa, b, pb, c))
                })
                .sum();
            s[(i, j)] = sij;
            s[(j, i)] = sij;
            t[(i, j)] = tij;
            t[(j, i)] = tij;
            v[(i, j)] = vij;
            v[(j, i)] = vij;
        }
    }

    let mut eri = Eri::zeros(n);
    for p in 0..n {
        for q in 0..=p {
            let pq = p * (p + 1) / 2 + q;
            for r in 0..n {
                for s_ in 0..=r {
                    let rs = r * (r + 1) / 2 + s_;
                    if rs > pq {
                        continue;
                    }
                    let val = contracted_eri(&basis[p], &basis[q], &basis[r], &basis[s_]);
                    eri.set_sym(p, q, r, s_, val);
                }
            }
        }
    }

    Ok(AOIntegrals {
        n_ao: n,
        s,
        t,
        v,
        eri,
        e_nuc: geometry.nuclear_repulsion(),
    })
}

fn contracted_eri(fa: &ContractedS, fb: &ContractedS, fc: &ContractedS, fd: &ContractedS) -> f64 {
    let mut acc = 0.0;
    for i in 0..3 {
        let ca = fa.coeffs[i] * prim_norm(fa.exponents[i]);
        for j in 0..3 {
            let cb = fb.coeffs[j] * prim_norm(fb.exponents[j]);
            for k in 0..3 {
                let cc = fc.coeffs[k] * prim_norm(fc.exponents[k]);
                for l in 0..3 {
                    let cd = fd.coeffs[l] * prim_norm(fd.exponents[l]);
                    acc += ca
                        * cb
                        * cc
                        * cd
                        * prim_eri(
                            fa.exponents[i],
                            fa.center,
                            fb.exponents[j],
                            fb.center,
                            fc.exponents[k],
                            fc.center,
                            fd.exponents[l],
                            fd.center,
                        );
                }
            }
        }
    }
    acc
}
