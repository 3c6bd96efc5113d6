use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::integrals::{AOIntegrals, MOIntegrals};
use crate::linalg::inverse_sqrt;
use crate::mbe::FragmentationPlan;
use crate::simulator::Rdms;

/// Singular values at or below this are not bath orbitals.
pub const BATH_THRESHOLD: f64 = 1e-6;
/// Smallest admissible overlap eigenvalue for symmetric orthogonalization.
pub const MIN_OVERLAP_EIGENVALUE: f64 = 1e-8;

/// Orthonormal localized orbitals `L` (AO × orbital) and their fragment labels.
#[derive(Debug, Clone)]
pub struct LocalizedOrbitals {
    pub l: DMatrix<f64>,
    pub fragment_map: Vec<usize>,
}

impl LocalizedOrbitals {
    /// Integrals over the localized orbitals.
    pub fn integrals(&self, ao: &AOIntegrals, n_elec: usize) -> MOIntegrals {
        let h = self.l.transpose() * ao.h_core() * &self.l;
        MOIntegrals {
            n_orb: self.l.ncols(),
            n_elec,
            h: 0.5 * (&h + h.transpose()),
            v: ao.eri.transform(&self.l),
            e_core: ao.e_nuc,
        }
    }

    /// Orbital indices grouped by fragment.
    pub fn fragments(&self) -> Vec<Vec<usize>> {
        let n_frag = self.fragment_map.iter().max().map_or(0, |m| m + 1);
        let mut out = vec![Vec::new(); n_frag];
        for (orb, &f) in self.fragment_map.iter().enumerate() {
            out[f].push(orb);
        }
        out
    }
}

/// Löwdin orbitals `S^{-1/2}`; orbital `i` inherits the fragment of the atom
/// carrying AO `i` (`ao_atoms[i]`).
pub fn localize_orbitals(
    ao: &AOIntegrals,
    ao_atoms: &[usize],
    plan: &FragmentationPlan,
) -> Result<LocalizedOrbitals> {
    if ao_atoms.len() != ao.n_ao {
        return Err(Error::config(
            "fragments",
            format!("{} AO labels for {} AOs", ao_atoms.len(), ao.n_ao),
        ));
    }
    let l = inverse_sqrt(&ao.s, MIN_OVERLAP_EIGENVALUE)?;
    let fragment_map = ao_atoms
        .iter()
        .map(|&a| {
            plan.fragment_of(a).ok_or_else(|| {
                Error::config("fragments", format!("atom {a} belongs to no fragment"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LocalizedOrbitals { l, fragment_map })
}

/// Bath orbitals of one fragment.
#[derive(Debug, Clone)]
pub struct Bath {
    /// n × n_bath, zero on fragment rows.
    pub orbitals: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    pub n_emb_elec: usize,
}

impl Bath {
    pub fn len(&self) -> usize {
        self.orbitals.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn complement(n: usize, set: &[usize]) -> Vec<usize> {
    (0..n).filter(|i| !set.contains(i)).collect()
}

/// Fragment columns followed by bath columns.
pub fn embedding_basis(n: usize, fragment: &[usize], bath: &DMatrix<f64>) -> DMatrix<f64> {
    let nf = fragment.len();
    let mut b = DMatrix::zeros(n, nf + bath.ncols());
    for (col, &p) in fragment.iter().enumerate() {
        b[(p, col)] = 1.0;
    }
    b.columns_mut(nf, bath.ncols()).copy_from(bath);
    b
}

/// Bath from the SVD of the environment × fragment block of `D/2`.
pub fn build_bath(d_loc: &DMatrix<f64>, fragment: &[usize]) -> Bath {
    let n = d_loc.nrows();
    let env = complement(n, fragment);
    let mut kept: Vec<(f64, Vec<f64>)> = Vec::new();
    if !env.is_empty() {
        let block = DMatrix::from_fn(env.len(), fragment.len(), |i, j| {
            0.5 * d_loc[(env[i], fragment[j])]
        });
        let svd = block.svd(true, false);
        let u = svd.u.expect("left singular vectors requested");
        for (k, &sigma) in svd.singular_values.iter().enumerate() {
            if sigma > BATH_THRESHOLD {
                kept.push((sigma, u.column(k).iter().copied().collect()));
            }
        }
    }
    kept.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut orbitals = DMatrix::zeros(n, kept.len());
    for (col, (_, vec)) in kept.iter().enumerate() {
        for (i, &e) in env.iter().enumerate() {
            orbitals[(e, col)] = vec[i];
        }
    }
    let b = embedding_basis(n, fragment, &orbitals);
    let occupancy = (b.transpose() * d_loc * &b).trace();
    let n_emb_elec = 2 * (0.5 * occupancy).round().max(0.0) as usize;
    Bath {
        orbitals,
        singular_values: kept.into_iter().map(|(s, _)| s).collect(),
        n_emb_elec,
    }
}

/// Interacting-bath Hamiltonian over the columns of `basis`: `h` dressed by
/// the environment density's Coulomb and exchange field, ERIs projected, and
/// the environment's own mean-field energy folded into `e_core`.
pub fn build_embedding_hamiltonian(
    system: &MOIntegrals,
    basis: &DMatrix<f64>,
    env_density: &DMatrix<f64>,
    n_emb_elec: usize,
) -> MOIntegrals {
    let g = system.v.fock_2e(env_density);
    let e_env =
        (env_density.component_mul(&system.h)).sum() + 0.5 * env_density.component_mul(&g).sum();
    let dressed = MOIntegrals {
        h: &system.h + &g,
        n_elec: n_emb_elec,
        e_core: system.e_core + e_env,
        ..system.clone()
    };
    dressed.rotated(basis)
}

/// Subtract `mu` from the diagonal of `h` on the given orbitals.
pub fn apply_chemical_potential(emb: &MOIntegrals, mu: f64, orbitals: &[usize]) -> MOIntegrals {
    let mut out = emb.clone();
    for &p in orbitals {
        out.h[(p, p)] -= mu;
    }
    out
}

/// One fragment's embedding problem. The first `n_fragment` embedding
/// orbitals are the fragment's own.
#[derive(Debug, Clone)]
pub struct EmbeddingProblem {
    pub fragment: usize,
    pub fragment_orbitals: Vec<usize>,
    pub bath: Bath,
    /// Fragment ⊕ bath orbitals in the localized basis.
    pub basis: DMatrix<f64>,
    pub hamiltonian: MOIntegrals,
    /// Undressed one-electron integrals over the embedding orbitals.
    pub bare_h: DMatrix<f64>,
    pub env_density: DMatrix<f64>,
}

impl EmbeddingProblem {
    pub fn n_fragment(&self) -> usize {
        self.fragment_orbitals.len()
    }

    pub fn n_qubits(&self) -> usize {
        self.hamiltonian.n_qubits()
    }

    pub fn local_fragment_indices(&self) -> Vec<usize> {
        (0..self.n_fragment()).collect()
    }
}

/// Embedding problem of fragment `index` for the mean-field density `d_loc`.
pub fn build_embedding(
    system: &MOIntegrals,
    d_loc: &DMatrix<f64>,
    fragment_orbitals: &[usize],
    index: usize,
) -> EmbeddingProblem {
    let n = system.n_orb;
    let bath = build_bath(d_loc, fragment_orbitals);
    let basis = embedding_basis(n, fragment_orbitals, &bath.orbitals);
    let projector = &basis * basis.transpose();
    let rest = DMatrix::identity(n, n) - projector;
    let env_density = &rest * d_loc * &rest;
    let hamiltonian = build_embedding_hamiltonian(system, &basis, &env_density, bath.n_emb_elec);
    let bare_h = basis.transpose() * &system.h * &basis;
    EmbeddingProblem {
        fragment: index,
        fragment_orbitals: fragment_orbitals.to_vec(),
        bath,
        basis,
        hamiltonian,
        bare_h,
        env_density,
    }
}

/// Democratic share of the embedding energy owned by the fragment, without
/// constants, and its electron count. One-electron terms average the bare and
/// dressed integrals; two-electron terms are assigned by their first index.
pub fn fragment_energy_and_number(rdms: &Rdms, emb: &EmbeddingProblem) -> (f64, f64) {
    let nf = emb.n_fragment();
    let m = emb.hamiltonian.n_orb;
    let h_avg = 0.5 * (&emb.bare_h + &emb.hamiltonian.h);
    let mut one = 0.0;
    let mut n_frag = 0.0;
    for p in 0..nf {
        n_frag += rdms.one[(p, p)];
        for q in 0..m {
            one += h_avg[(p, q)] * rdms.one[(p, q)];
        }
    }
    let block = nf * m * m * m;
    let two: f64 = emb.hamiltonian.v.as_slice()[..block]
        .iter()
        .zip(&rdms.two.as_slice()[..block])
        .map(|(v, g)| v * g)
        .sum();
    (one + 0.5 * two, n_frag)
}
