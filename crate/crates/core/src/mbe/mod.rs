//! Many-body expansion over a fragmented geometry.
//!
//! Every k-mer (k ≤ order) is capped, solved independently on a thread pool,
//! and the energies are combined with inclusion-exclusion weights. An optional
//! RHF correction adds the difference between the full-system RHF energy and
//! the second-order expansion of fragment RHF energies.

pub mod assembly;
pub mod cache;
pub mod plan;

use std::path::PathBuf;

use log::{debug, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use assembly::{assemble_mbe_energy, assembly_coefficient, cap_imbalance, SubsystemEnergies};
pub use cache::EnergyCache;
pub use plan::{
    cap_severed_bonds, combinations, enumerate_nmers, Cap, FragmentationPlan, NMer,
    DEFAULT_CAP_BOND_LENGTH,
};

use crate::error::{Error, Result};
use crate::integrals::{build_ao_integrals, run_rhf, transform_to_mo, ActiveSpace, Geometry};
use crate::solver::{solve, SolverConfig};

/// Orbital window for each subsystem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ActiveRule {
    #[default]
    Full,
    /// Entry `k - 1` is the number of orbitals nearest the gap for k-mers.
    PerOrder(Vec<usize>),
}

impl ActiveRule {
    fn window(&self, k: usize) -> ActiveSpace {
        match self {
            ActiveRule::Full => ActiveSpace::Full,
            ActiveRule::PerOrder(sizes) => match sizes.get(k - 1) {
                Some(&n) => ActiveSpace::Closest(n),
                None => ActiveSpace::Full,
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MbeOptions {
    pub order: usize,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub active: ActiveRule,
    #[serde(default)]
    pub rhf_correction: bool,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    /// Worker threads; 0 uses the global pool.
    #[serde(default)]
    pub threads: usize,
}

impl Default for MbeOptions {
    fn default() -> Self {
        MbeOptions {
            order: 2,
            solver: SolverConfig::default(),
            active: ActiveRule::Full,
            rhf_correction: false,
            cache_dir: None,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubproblemRecord {
    pub fragments: Vec<usize>,
    pub n_atoms: usize,
    pub n_caps: usize,
    pub energy: f64,
    pub n_qubits: usize,
    pub iterations: Option<usize>,
    pub cached: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubproblemFailure {
    pub fragments: Vec<usize>,
    pub message: String,
}

/// Energies are NaN when any subproblem failed (see [`MBEResult::is_partial`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MBEResult {
    pub order: usize,
    pub n_fragments: usize,
    pub subproblems: Vec<SubproblemRecord>,
    pub failures: Vec<SubproblemFailure>,
    pub e_mbe: f64,
    pub e_corr: f64,
    pub e_total: f64,
    pub max_qubits: usize,
}

impl MBEResult {
    pub fn is_partial(&self) -> bool {
        !self.failures.is_empty()
    }

    pub fn energies(&self) -> SubsystemEnergies {
        self.subproblems
            .iter()
            .map(|r| (r.fragments.clone(), r.energy))
            .collect()
    }
}

pub(crate) fn with_pool<T: Send>(threads: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    if threads == 0 {
        return Ok(job());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::config("threads", e.to_string()))?;
    Ok(pool.install(job))
}

/// All k-mers for `k = 1..=order`, ordered by k then lexicographically.
fn all_nmers(plan: &FragmentationPlan, geometry: &Geometry, order: usize) -> Result<Vec<NMer>> {
    let mut out = Vec::new();
    for k in 1..=order {
        out.extend(enumerate_nmers(plan, geometry, k)?);
    }
    Ok(out)
}

fn solve_nmer(
    nm: &NMer,
    opts: &MbeOptions,
    cache: Option<&EnergyCache>,
) -> Result<SubproblemRecord> {
    let window = opts.active.window(nm.order());
    let tag = cache::solver_tag(
        &opts.solver.name(),
        &[
            &nm.geometry.to_xyz_string(""),
            &serde_json::to_string(&opts.solver).expect("solver config serializes"),
            &serde_json::to_string(&window).expect("window serializes"),
        ],
    );
    let n_elec = nm.geometry.n_electrons();
    let ao = build_ao_integrals(&nm.geometry)?;
    let base = SubproblemRecord {
        fragments: nm.members.clone(),
        n_atoms: nm.geometry.len(),
        n_caps: nm.caps.len(),
        energy: f64::NAN,
        n_qubits: 2 * window.resolve(ao.n_ao, n_elec / 2)?.len(),
        iterations: None,
        cached: false,
    };
    if let Some(e) = cache.and_then(|c| c.get(&nm.members, &tag)) {
        return Ok(SubproblemRecord {
            energy: e,
            cached: true,
            ..base
        });
    }
    let rhf = run_rhf(&ao, n_elec)?.require_converged()?;
    let mo = transform_to_mo(&ao, &rhf, &window)?;
    let sol = solve(&mo, &opts.solver, false)?;
    debug!(
        "subsystem {:?}: {:.10} Eh on {} qubits",
        nm.members, sol.energy, sol.n_qubits
    );
    if let Some(c) = cache {
        c.put(&nm.members, &tag, sol.energy)?;
    }
    Ok(SubproblemRecord {
        energy: sol.energy,
        n_qubits: sol.n_qubits,
        iterations: sol.iterations,
        ..base
    })
}

/// Full-system RHF minus the second-order expansion of capped RHF energies.
pub fn rhf_correction(geometry: &Geometry, plan: &FragmentationPlan) -> Result<f64> {
    plan.validate(geometry.len())?;
    let n = plan.n_fragments();
    let order = n.min(2);
    let mut energies = SubsystemEnergies::new();
    for nm in all_nmers(plan, geometry, order)? {
        let ao = build_ao_integrals(&nm.geometry)?;
        let e = run_rhf(&ao, nm.geometry.n_electrons())?
            .require_converged()?
            .e_hf;
        energies.insert(nm.members, e);
    }
    let ao = build_ao_integrals(geometry)?;
    let full = run_rhf(&ao, geometry.n_electrons())?
        .require_converged()?
        .e_hf;
    Ok(full - assemble_mbe_energy(&energies, n, order)?)
}

/// Solve every subsystem up to `opts.order` (clamped to the fragment count)
/// and assemble the expansion.
pub fn run_mbe(
    geometry: &Geometry,
    plan: &FragmentationPlan,
    opts: &MbeOptions,
) -> Result<MBEResult> {
    plan.validate(geometry.len())?;
    if opts.order == 0 {
        return Err(Error::config("order", "expansion order must be at least 1"));
    }
    let n = plan.n_fragments();
    let order = opts.order.min(n);
    let nmers = all_nmers(plan, geometry, order)?;
    if order >= 2 {
        let imbalance = cap_imbalance(&nmers, n, order);
        if !imbalance.is_empty() {
            return Err(Error::Numerical(format!(
                "link atoms do not cancel: {imbalance:?}"
            )));
        }
    }
    let cache = opts
        .cache_dir
        .as_deref()
        .map(EnergyCache::open)
        .transpose()?;
    info!(
        "many-body expansion: {n} fragments, order {order}, {} subsystems",
        nmers.len()
    );

    let outcomes: Vec<Result<SubproblemRecord>> = with_pool(opts.threads, || {
        nmers
            .par_iter()
            .map(|nm| solve_nmer(nm, opts, cache.as_ref()))
            .collect()
    })?;

    let mut subproblems = Vec::with_capacity(outcomes.len());
    let mut failures = Vec::new();
    for (nm, outcome) in nmers.iter().zip(outcomes) {
        match outcome {
            Ok(rec) => subproblems.push(rec),
            Err(e) => failures.push(SubproblemFailure {
                fragments: nm.members.clone(),
                message: e.to_string(),
            }),
        }
    }
    let max_qubits = subproblems.iter().map(|r| r.n_qubits).max().unwrap_or(0);
    let (e_mbe, e_corr) = if failures.is_empty() {
        let energies = subproblems
            .iter()
            .map(|r| (r.fragments.clone(), r.energy))
            .collect();
        let e_mbe = assemble_mbe_energy(&energies, n, order)?;
        let e_corr = if opts.rhf_correction {
            rhf_correction(geometry, plan)?
        } else {
            0.0
        };
        (e_mbe, e_corr)
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(MBEResult {
        order,
        n_fragments: n,
        subproblems,
        failures,
        e_mbe,
        e_corr,
        e_total: e_mbe + e_corr,
        max_qubits,
    })
}
