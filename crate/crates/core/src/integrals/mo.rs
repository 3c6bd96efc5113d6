use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::rhf::RHFResult;
use super::{AOIntegrals, MOIntegrals};
use crate::error::{Error, Result};

/// Which RHF molecular orbitals enter the correlated treatment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ActiveSpace {
    /// Every orbital active, nothing frozen.
    #[default]
    Full,
    /// Explicit MO indices (0-based, canonical energy order).
    Indices(Vec<usize>),
    /// The `occupied` highest doubly-occupied plus the `virtual` lowest virtual orbitals.
    AroundFermi { occupied: usize, virtual_: usize },
    /// `n` orbitals closest to the HOMO/LUMO gap, split evenly (odd counts favour virtuals).
    Closest(usize),
}

impl ActiveSpace {
    /// Resolve to sorted MO indices for `n_mo` orbitals with `n_occ` doubly occupied.
    pub fn resolve(&self, n_mo: usize, n_occ: usize) -> Result<Vec<usize>> {
        let idx: Vec<usize> = match self {
            ActiveSpace::Full => (0..n_mo).collect(),
            ActiveSpace::Indices(v) => {
                let mut v = v.clone();
                v.sort_unstable();
                v.dedup();
                if let Some(&bad) = v.iter().find(|&&i| i >= n_mo) {
                    return Err(Error::InvalidActiveWindow(format!(
                        "orbital index {bad} out of range (n_mo = {n_mo})"
                    )));
                }
                v
            }
            ActiveSpace::AroundFermi { occupied, virtual_ } => {
                if *occupied > n_occ || n_occ + virtual_ > n_mo {
                    return Err(Error::InvalidActiveWindow(format!(
                        "window ({occupied} occupied, {virtual_} virtual) exceeds {n_occ} occupied / {} virtual orbitals",
                        n_mo - n_occ
                    )));
                }
                (n_occ - occupied..n_occ + virtual_).collect()
            }
            ActiveSpace::Closest(n) => {
                let n = (*n).min(n_mo);
                let occ = (n / 2).min(n_occ);
                let virt = (n - occ).min(n_mo - n_occ);
                let occ = (n - virt).min(n_occ);
                (n_occ - occ..n_occ + virt).collect()
            }
        };
        Ok(idx)
    }
}

/// Transform AO integrals to the RHF MO basis, folding frozen doubly-occupied
/// orbitals into the one-electron operator and core energy.
pub fn transform_to_mo(
    ao: &AOIntegrals,
    rhf: &RHFResult,
    active: &ActiveSpace,
) -> Result<MOIntegrals> {
    let n_mo = rhf.c.ncols();
    let n_occ = rhf.n_occ();
    let act = active.resolve(n_mo, n_occ)?;
    let frozen: Vec<usize> = (0..n_occ).filter(|i| !act.contains(i)).collect();
    let n_act_elec = rhf.n_elec as i64 - 2 * frozen.len() as i64;
    if n_act_elec < 0 || n_act_elec % 2 != 0 || n_act_elec as usize > 2 * act.len() {
        return Err(Error::InvalidActiveWindow(format!(
            "{n_act_elec} active electrons in {} active orbitals",
            act.len()
        )));
    }

    let h = ao.h_core();
    let n_ao = ao.n_ao;
    let mut c_frozen = DMatrix::zeros(n_ao, frozen.len());
    for (k, &i) in frozen.iter().enumerate() {
        c_frozen.set_column(k, &rhf.c.column(i));
    }
    let d_core = &c_frozen * c_frozen.transpose() * 2.0;
    let f_core = &h + ao.eri.fock_2e(&d_core);
    let e_frozen = 0.5 * d_core.component_mul(&(&h + &f_core)).sum();

    let mut c_act = DMatrix::zeros(n_ao, act.len());
    for (k, &i) in act.iter().enumerate() {
        c_act.set_column(k, &rhf.c.column(i));
    }
    let h_act = c_act.transpose() * &f_core * &c_act;
    let v_act = ao.eri.transform(&c_act);
    Ok(MOIntegrals {
        n_orb: act.len(),
        n_elec: n_act_elec as usize,
        h: 0.5 * (&h_act + h_act.transpose()),
        v: v_act,
        e_core: ao.e_nuc + e_frozen,
    })
}
