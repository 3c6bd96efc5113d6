//! Closed-shell restricted Hartree-Fock with damping followed by DIIS.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::AOIntegrals;
use crate::error::{Error, Result};
use crate::linalg::{inverse_sqrt, sym_eigh, Eri};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScfOptions {
    pub max_iterations: usize,
    pub energy_tol: f64,
    pub density_tol: f64,
    /// Iterations with plain density damping before DIIS starts.
    pub damping_iterations: usize,
    pub damping: f64,
    pub diis_size: usize,
    /// Virtual-space shift (hartree) added to the Fock matrix before diagonalization.
    #[serde(default)]
    pub level_shift: f64,
}

impl Default for ScfOptions {
    fn default() -> Self {
        ScfOptions {
            max_iterations: 200,
            energy_tol: 1e-10,
            density_tol: 1e-8,
            damping_iterations: 4,
            damping: 0.3,
            diis_size: 8,
            level_shift: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RHFResult {
    /// MO coefficients, AO rows × MO columns.
    pub c: DMatrix<f64>,
    pub orbital_energies: DVector<f64>,
    /// Spin-summed AO density matrix.
    pub d: DMatrix<f64>,
    pub e_hf: f64,
    pub converged: bool,
    pub n_iterations: usize,
    pub n_elec: usize,
}

impl RHFResult {
    pub fn n_occ(&self) -> usize {
        self.n_elec / 2
    }

    /// Turn an unconverged result into `ScfNotConverged`.
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::ScfNotConverged {
                iterations: self.n_iterations,
                energy: self.e_hf,
            })
        }
    }
}

/// RHF on AO integrals.
pub fn run_rhf(ao: &AOIntegrals, n_elec: usize) -> Result<RHFResult> {
    run_rhf_with(ao, n_elec, &ScfOptions::default())
}

pub fn run_rhf_with(ao: &AOIntegrals, n_elec: usize, opts: &ScfOptions) -> Result<RHFResult> {
    scf_closed_shell(&ao.h_core(), &ao.s, &ao.eri, ao.e_nuc, n_elec, opts)
}

/// Generic closed-shell SCF for a core Hamiltonian `h`, overlap `s` and ERIs.
///
/// An unconverged run without level shift is retried with progressively
/// larger shifts, which damps HOMO/LUMO occupation flipping at stretched
/// geometries.
pub fn scf_closed_shell(
    h: &DMatrix<f64>,
    s: &DMatrix<f64>,
    eri: &Eri,
    e_const: f64,
    n_elec: usize,
    opts: &ScfOptions,
) -> Result<RHFResult> {
    let first = scf_attempt(h, s, eri, e_const, n_elec, opts)?;
    if first.converged || opts.level_shift > 0.0 {
        return Ok(first);
    }
    let mut last = first;
    for shift in [0.3, 1.0] {
        let retry = ScfOptions {
            level_shift: shift,
            max_iterations: 4 * opts.max_iterations,
            ..*opts
        };
        last = scf_attempt(h, s, eri, e_const, n_elec, &retry)?;
        if last.converged {
            break;
        }
    }
    Ok(last)
}

fn scf_attempt(
    h: &DMatrix<f64>,
    s: &DMatrix<f64>,
    eri: &Eri,
    e_const: f64,
    n_elec: usize,
    opts: &ScfOptions,
) -> Result<RHFResult> {
    let n = h.nrows();
    if !n_elec.is_multiple_of(2) || n_elec > 2 * n {
        return Err(Error::InvalidGeometry(format!(
            "cannot place {n_elec} electrons in {n} spatial orbitals (closed shell)"
        )));
    }
    let n_occ = n_elec / 2;
    let x = inverse_sqrt(s, 1e-10)?;
    let diag = |f: &DMatrix<f64>| -> (DVector<f64>, DMatrix<f64>) {
        let fp = x.transpose() * f * &x;
        let (e, cp) = sym_eigh(&fp);
        (e, &x * cp)
    };
    let density = |c: &DMatrix<f64>| -> DMatrix<f64> {
        let occ = c.columns(0, n_occ);
        occ * occ.transpose() * 2.0
    };
    let energy = |d: &DMatrix<f64>, f: &DMatrix<f64>| -> f64 {
        0.5 * d.component_mul(&(h + f)).sum() + e_const
    };

    let (mut eps, mut c) = diag(h);
    let mut d = density(&c);
    let mut e_old = f64::NAN;
    let mut diis_f: Vec<DMatrix<f64>> = Vec::new();
    let mut diis_e: Vec<DMatrix<f64>> = Vec::new();

    for it in 1..=opts.max_iterations {
        let f = h + eri.fock_2e(&d);
        let e = energy(&d, &f);

        // orthogonal-basis commutator FDS - SDF as the DIIS error
        let err = x.transpose() * (&f * &d * s - s * &d * &f) * &x;
        let err_norm = err.amax();

        let f_use = if it > opts.damping_iterations && opts.diis_size > 1 {
            diis_f.push(f.clone());
            diis_e.push(err);
            if diis_f.len() > opts.diis_size {
                diis_f.remove(0);
                diis_e.remove(0);
            }
            diis_extrapolate(&diis_f, &diis_e).unwrap_or_else(|| f.clone())
        } else {
            f.clone()
        };

        let f_use = if opts.level_shift != 0.0 {
            f_use + (s - s * &d * s * 0.5) * opts.level_shift
        } else {
            f_use
        };
        let (e_new, c_new) = diag(&f_use);
        let d_candidate = density(&c_new);
        let d_new = if it <= opts.damping_iterations {
            &d_candidate * (1.0 - opts.damping) + &d * opts.damping
        } else {
            d_candidate
        };
        let rms = ((&d_new - &d).norm_squared() / (n * n).max(1) as f64).sqrt();
        let de = (e - e_old).abs();
        eps = e_new;
        c = c_new;
        d = d_new;
        e_old = e;

        if de < opts.energy_tol && rms < opts.density_tol && err_norm < 1e-5 {
            // final consistent energy and orbitals for the converged density
            let f = h + eri.fock_2e(&d);
            let (eps_f, c_f) = diag(&f);
            let d_f = density(&c_f);
            let e_f = energy(&d_f, &(h + eri.fock_2e(&d_f)));
            return Ok(RHFResult {
                c: c_f,
                orbital_energies: eps_f,
                d: d_f,
                e_hf: e_f,
                converged: true,
                n_iterations: it,
                n_elec,
            });
        }
    }
    let f = h + eri.fock_2e(&d);
    Ok(RHFResult {
        c,
        orbital_energies: eps,
        e_hf: energy(&d, &f),
        d,
        converged: false,
        n_iterations: opts.max_iterations,
        n_elec,
    })
}

fn diis_extrapolate(fs: &[DMatrix<f64>], es: &[DMatrix<f64>]) -> Option<DMatrix<f64>> {
    let m = fs.len();
    if m < 2 {
        return None;
    }
    let mut b = DMatrix::zeros(m + 1, m + 1);
    for i in 0..m {
        for j in 0..=i {
            let v = es[i].dot(&es[j]);
            b[(i, j)] = v;
            b[(j, i)] = v;
        }
        b[(i, m)] = -1.0;
        b[(m, i)] = -1.0;
    }
    let mut rhs = DVector::zeros(m + 1);
    rhs[m] = -1.0;
    let coef = b.lu().solve(&rhs)?;
    if coef.iter().any(|x| !x.is_finite()) {
        return None;
    }
    let mut f = DMatrix::zeros(fs[0].nrows(), fs[0].ncols());
    for i in 0..m {
        f += &fs[i] * coef[i];
    }
    Some(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrals::basis::build_ao_integrals;
    use crate::integrals::geometry::{hydrogen_chain, Atom, Geometry};

    #[test]
    fn h2_orbitals_are_orthonormal_and_density_idempotent() {
        let ao = build_ao_integrals(&hydrogen_chain(2, 0.7414).unwrap()).unwrap();
        let rhf = run_rhf(&ao, 2).unwrap().require_converged().unwrap();
        let ctsc = rhf.c.transpose() * &ao.s * &rhf.c;
        assert!((ctsc - DMatrix::identity(2, 2)).amax() < 1e-8);
        let s_half = crate::linalg::inverse_sqrt(&ao.s, 1e-10)
            .unwrap()
            .try_inverse()
            .unwrap();
        let dl = &s_half * &rhf.d * &s_half * 0.5;
        assert!((&dl * &dl - &dl).amax() < 1e-6);
    }

    #[test]
    fn helium_atom_energy() {
        // closed-form single-function RHF: E = 2h + (11|11)
        let g = Geometry::new(vec![Atom::new("He", [0.0; 3]).unwrap()]).unwrap();
        let ao = build_ao_integrals(&g).unwrap();
        let rhf = run_rhf(&ao, 2).unwrap();
        let expected = 2.0 * ao.h_core()[(0, 0)] + ao.eri.get(0, 0, 0, 0);
        assert!((rhf.e_hf - expected).abs() < 1e-12);
        // STO-3G helium, textbook value
        assert!((rhf.e_hf + 2.807_784).abs() < 1e-5);
    }

    #[test]
    fn rejects_odd_electron_count() {
        let ao = build_ao_integrals(&hydrogen_chain(2, 0.74).unwrap()).unwrap();
        assert!(run_rhf(&ao, 3).is_err());
    }
}
