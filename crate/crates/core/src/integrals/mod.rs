//! Molecular integrals: STO-3G engine, RHF, MO transformation, FCIDUMP I/O.

pub mod basis;
pub mod fcidump;
pub mod geometry;
pub mod mo;
pub mod rhf;

use nalgebra::DMatrix;

pub use basis::build_ao_integrals;
pub use fcidump::{read_fcidump, write_fcidump};
pub use geometry::{hydrogen_chain, ring, Atom, Geometry, ANGSTROM_TO_BOHR};
pub use mo::{transform_to_mo, ActiveSpace};
pub use rhf::{run_rhf, RHFResult, ScfOptions};

use crate::error::{Error, Result};
use crate::linalg::Eri;

/// Integrals over atomic orbitals. Energies in hartree.
#[derive(Debug, Clone)]
pub struct AOIntegrals {
    pub n_ao: usize,
    pub s: DMatrix<f64>,
    pub t: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub eri: Eri,
    pub e_nuc: f64,
}

impl AOIntegrals {
    pub fn h_core(&self) -> DMatrix<f64> {
        &self.t + &self.v
    }
}

/// Integrals in an orthonormal orbital basis: `h_pq`, `(pq|rs)` and a constant.
#[derive(Debug, Clone, PartialEq)]
pub struct MOIntegrals {
    pub n_orb: usize,
    pub n_elec: usize,
    pub h: DMatrix<f64>,
    pub v: Eri,
    /// Nuclear repulsion plus frozen-core energy.
    pub e_core: f64,
}

impl MOIntegrals {
    pub fn validate(&self) -> Result<()> {
        if self.h.nrows() != self.n_orb
            || self.h.ncols() != self.n_orb
            || self.v.dim() != self.n_orb
        {
            return Err(Error::Numerical(
                "integral dimensions disagree with n_orb".into(),
            ));
        }
        if (&self.h - self.h.transpose()).amax() > 1e-10 {
            return Err(Error::Numerical(
                "one-electron integrals are not symmetric".into(),
            ));
        }
        if self.n_orb > 0 && self.v.symmetry_error() > 1e-9 {
            return Err(Error::Numerical(
                "two-electron integrals lack 8-fold symmetry".into(),
            ));
        }
        if self.n_elec > 2 * self.n_orb {
            return Err(Error::Numerical(format!(
                "{} electrons do not fit in {} orbitals",
                self.n_elec, self.n_orb
            )));
        }
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        2 * self.n_orb
    }

    /// Rotate orbitals: `h' = Uᵀ h U`, `v' = v` transformed by `U` (n × m).
    pub fn rotated(&self, u: &DMatrix<f64>) -> MOIntegrals {
        let h = u.transpose() * &self.h * u;
        MOIntegrals {
            n_orb: u.ncols(),
            n_elec: self.n_elec,
            h: 0.5 * (&h + h.transpose()),
            v: self.v.transform(u),
            e_core: self.e_core,
        }
    }

    /// Energy expectation of a spin-summed 1-RDM / 2-RDM pair:
    /// `e_core + Σ h_pq D_pq + ½ Σ (pq|rs) Γ_pqrs`.
    pub fn energy_from_rdms(&self, d1: &DMatrix<f64>, d2: &Eri) -> f64 {
        let one = self.h.component_mul(d1).sum();
        let two: f64 = self
            .v
            .as_slice()
            .iter()
            .zip(d2.as_slice())
            .map(|(a, b)| a * b)
            .sum();
        self.e_core + one + 0.5 * two
    }

    /// Energy of the closed-shell determinant occupying orbitals `0..n_elec/2`.
    pub fn determinant_energy(&self) -> f64 {
        let n_occ = self.n_elec / 2;
        let mut e = self.e_core;
        for i in 0..n_occ {
            e += 2.0 * self.h[(i, i)];
            for j in 0..n_occ {
                e += 2.0 * self.v.get(i, i, j, j) - self.v.get(i, j, j, i);
            }
        }
        e
    }
}

/// Canonical RHF orbital integrals of a whole molecule over the given window.
pub fn molecular_integrals(geometry: &Geometry, active: &ActiveSpace) -> Result<MOIntegrals> {
    let ao = build_ao_integrals(geometry)?;
    let rhf = run_rhf(&ao, geometry.n_electrons())?.require_converged()?;
    transform_to_mo(&ao, &rhf, active)
}
