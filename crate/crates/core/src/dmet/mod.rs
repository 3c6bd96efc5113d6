//! Density-matrix embedding.
//!
//! Each fragment is embedded with bath orbitals taken from the SVD of the
//! mean-field density, solved with any [`SolverConfig`], and a global chemical
//! potential on the fragment orbitals is tuned until the fragment electron
//! counts add up to the total. The fragment-only mode also fits a correlation
//! potential on the fragment blocks of the mean-field Hamiltonian.

pub mod embedding;
mod fit;

use std::io::Write;
use std::path::{Path, PathBuf};

use log::{debug, info};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use embedding::{
    apply_chemical_potential, build_bath, build_embedding, build_embedding_hamiltonian,
    embedding_basis, fragment_energy_and_number, localize_orbitals, Bath, EmbeddingProblem,
    LocalizedOrbitals, BATH_THRESHOLD,
};
pub use fit::fit_correlation_potential;

use crate::error::{Error, Result};
use crate::integrals::rhf::scf_closed_shell;
use crate::integrals::{build_ao_integrals, Geometry, MOIntegrals, RHFResult, ScfOptions};
use crate::mbe::{with_pool, FragmentationPlan};
use crate::solver::{solve, SolverConfig};

/// Localized-orbital integrals partitioned into fragments.
#[derive(Debug, Clone)]
pub struct DmetSystem {
    pub integrals: MOIntegrals,
    pub fragments: Vec<Vec<usize>>,
}

impl DmetSystem {
    /// Löwdin orbitals of the STO-3G basis, one per atom.
    pub fn from_geometry(geometry: &Geometry, plan: &FragmentationPlan) -> Result<Self> {
        plan.validate(geometry.len())?;
        let ao = build_ao_integrals(geometry)?;
        let ao_atoms: Vec<usize> = (0..geometry.len()).collect();
        let loc = localize_orbitals(&ao, &ao_atoms, plan)?;
        Ok(DmetSystem {
            integrals: loc.integrals(&ao, geometry.n_electrons()),
            fragments: loc.fragments(),
        })
    }

    /// Integrals already expressed in orthonormal local orbitals.
    pub fn from_integrals(integrals: MOIntegrals, fragments: Vec<Vec<usize>>) -> Result<Self> {
        integrals.validate()?;
        let n = integrals.n_orb;
        let mut seen = vec![false; n];
        for (i, frag) in fragments.iter().enumerate() {
            if frag.is_empty() {
                return Err(Error::config("fragments", format!("fragment {i} is empty")));
            }
            for &p in frag {
                if p >= n || seen[p] {
                    return Err(Error::config(
                        "fragments",
                        format!("orbital {p} is out of range or assigned twice"),
                    ));
                }
                seen[p] = true;
            }
        }
        if let Some(p) = seen.iter().position(|s| !s) {
            return Err(Error::config(
                "fragments",
                format!("orbital {p} belongs to no fragment"),
            ));
        }
        Ok(DmetSystem {
            integrals,
            fragments,
        })
    }

    pub fn n_elec(&self) -> usize {
        self.integrals.n_elec
    }

    /// Closed-shell mean field of `h + u`.
    pub fn mean_field(&self, u: &DMatrix<f64>) -> Result<RHFResult> {
        let mo = &self.integrals;
        let s = DMatrix::identity(mo.n_orb, mo.n_orb);
        let h = &mo.h + u;
        scf_closed_shell(&h, &s, &mo.v, mo.e_core, mo.n_elec, &ScfOptions::default())?
            .require_converged()
    }

    /// Embedding problems of every fragment for the density `d_loc`.
    pub fn embeddings(&self, d_loc: &DMatrix<f64>) -> Vec<EmbeddingProblem> {
        self.fragments
            .iter()
            .enumerate()
            .map(|(i, f)| build_embedding(&self.integrals, d_loc, f, i))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CostKind {
    /// Chemical potential only.
    #[default]
    ElectronCount,
    /// Chemical potential plus a fragment-block correlation potential.
    FragmentOnly,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct DmetOptions {
    pub solver: SolverConfig,
    pub cost: CostKind,
    /// Target |Σ N_frag − N_e|.
    pub electron_tol: f64,
    /// Budget of embedding sweeps.
    pub max_iterations: usize,
    /// Initial half-width of the chemical-potential bracket, hartree.
    pub mu_bracket: f64,
    /// Largest correlation-potential change accepted as converged.
    pub u_tol: f64,
    pub max_u_cycles: usize,
    pub threads: usize,
    pub trace_path: Option<PathBuf>,
}

impl Default for DmetOptions {
    fn default() -> Self {
        DmetOptions {
            solver: SolverConfig::default(),
            cost: CostKind::ElectronCount,
            electron_tol: 1e-5,
            max_iterations: 50,
            mu_bracket: 0.2,
            u_tol: 1e-5,
            max_u_cycles: 10,
            threads: 0,
            trace_path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FragmentResult {
    pub fragment: usize,
    pub e_frag: f64,
    pub n_frag: f64,
    pub n_bath: usize,
    pub n_emb_elec: usize,
    pub n_qubits: usize,
    pub iterations: Option<usize>,
}

/// One embedding sweep at fixed potentials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub mu: f64,
    pub cost: f64,
    pub e_total: f64,
    /// `(E_frag, N_frag)` per fragment.
    pub fragments: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct DmetState {
    pub mu: f64,
    pub u: DMatrix<f64>,
    pub cost: f64,
    pub iteration: usize,
    pub fragments: Vec<FragmentResult>,
    pub e_total: f64,
    pub n_total: f64,
    pub converged: bool,
    pub trace: Vec<TraceRow>,
}

impl DmetState {
    pub fn max_qubits(&self) -> usize {
        self.fragments.iter().map(|f| f.n_qubits).max().unwrap_or(0)
    }

    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::DmetNotConverged {
                iterations: self.iteration,
                cost: self.cost,
            })
        }
    }
}

/// Result of one sweep, with the fragment blocks of the solved 1-RDMs.
#[derive(Debug, Clone)]
struct Sweep {
    mu: f64,
    fragments: Vec<FragmentResult>,
    fragment_densities: Vec<DMatrix<f64>>,
    e_total: f64,
    n_total: f64,
}

fn sweep(
    system: &DmetSystem,
    embeddings: &[EmbeddingProblem],
    mu: f64,
    solver: &SolverConfig,
) -> Result<Sweep> {
    let solved: Vec<Result<(FragmentResult, DMatrix<f64>)>> = embeddings
        .par_iter()
        .map(|emb| {
            let h = apply_chemical_potential(&emb.hamiltonian, mu, &emb.local_fragment_indices());
            let sol = solve(&h, solver, true)?;
            let rdms = sol.rdms.expect("RDMs requested");
            let (e_frag, n_frag) = fragment_energy_and_number(&rdms, emb);
            let nf = emb.n_fragment();
            Ok((
                FragmentResult {
                    fragment: emb.fragment,
                    e_frag,
                    n_frag,
                    n_bath: emb.bath.len(),
                    n_emb_elec: emb.bath.n_emb_elec,
                    n_qubits: emb.n_qubits(),
                    iterations: sol.iterations,
                },
                rdms.one.view((0, 0), (nf, nf)).into_owned(),
            ))
        })
        .collect();
    let mut fragments = Vec::with_capacity(solved.len());
    let mut fragment_densities = Vec::with_capacity(solved.len());
    for s in solved {
        let (f, d) = s?;
        fragments.push(f);
        fragment_densities.push(d);
    }
    let e_total = system.integrals.e_core + fragments.iter().map(|f| f.e_frag).sum::<f64>();
    let n_total = fragments.iter().map(|f| f.n_frag).sum();
    Ok(Sweep {
        mu,
        fragments,
        fragment_densities,
        e_total,
        n_total,
    })
}

struct MuFit {
    best: Sweep,
    converged: bool,
}

/// Tune `mu` until the fragment electron counts sum to `N_e`: bracket from
/// `mu = 0`, then Illinois-modified regula falsi.
fn fit_chemical_potential(
    system: &DmetSystem,
    d_loc: &DMatrix<f64>,
    opts: &DmetOptions,
    trace: &mut Vec<TraceRow>,
) -> Result<MuFit> {
    let embeddings = system.embeddings(d_loc);
    let target = system.n_elec() as f64;
    let budget = opts.max_iterations.max(1);
    let mut best: Option<Sweep> = None;
    let mut evaluate = |mu: f64, trace: &mut Vec<TraceRow>| -> Result<f64> {
        let s = sweep(system, &embeddings, mu, &opts.solver)?;
        let err = s.n_total - target;
        trace.push(TraceRow {
            iteration: trace.len() + 1,
            mu,
            cost: err * err,
            e_total: s.e_total,
            fragments: s.fragments.iter().map(|f| (f.e_frag, f.n_frag)).collect(),
        });
        debug!(
            "dmet sweep mu={mu:.8} N={:.8} E={:.10}",
            s.n_total, s.e_total
        );
        if best
            .as_ref()
            .is_none_or(|b| (b.n_total - target).abs() > err.abs())
        {
            best = Some(s);
        }
        Ok(err)
    };
    let start = trace.len();
    let used = |trace: &Vec<TraceRow>| trace.len() - start;

    let f0 = evaluate(0.0, trace)?;
    let mut converged = f0.abs() < opts.electron_tol;
    if !converged {
        // More electrons are drawn onto the fragments as mu grows.
        let dir = if f0 < 0.0 { 1.0 } else { -1.0 };
        let (mut a, mut fa) = (0.0, f0);
        let mut width = opts.mu_bracket;
        let (mut b, mut fb) = (a, fa);
        let mut bracketed = false;
        while used(trace) < budget {
            b = dir * width;
            fb = evaluate(b, trace)?;
            if fb.abs() < opts.electron_tol {
                converged = true;
                break;
            }
            if fa * fb < 0.0 {
                bracketed = true;
                break;
            }
            a = b;
            fa = fb;
            width *= 2.0;
        }
        if bracketed {
            while used(trace) < budget {
                let c = (a * fb - b * fa) / (fb - fa);
                let fc = evaluate(c, trace)?;
                if fc.abs() < opts.electron_tol {
                    converged = true;
                    break;
                }
                if fc * fb < 0.0 {
                    a = b;
                    fa = fb;
                } else {
                    fa *= 0.5;
                }
                b = c;
                fb = fc;
            }
        }
    }
    Ok(MuFit {
        best: best.expect("at least one sweep ran"),
        converged,
    })
}

fn state_from(
    fit: MuFit,
    u: DMatrix<f64>,
    cost: f64,
    converged: bool,
    trace: Vec<TraceRow>,
) -> DmetState {
    let best = fit.best;
    DmetState {
        mu: best.mu,
        u,
        cost,
        iteration: trace.len(),
        fragments: best.fragments,
        e_total: best.e_total,
        n_total: best.n_total,
        converged,
        trace,
    }
}

/// Self-consistent DMET. A run that exhausts its budget returns the best
/// state with `converged == false`.
pub fn dmet_scf(system: &DmetSystem, opts: &DmetOptions) -> Result<DmetState> {
    let state = with_pool(opts.threads, || run(system, opts))??;
    if let Some(path) = &opts.trace_path {
        write_trace(path, &state.trace)?;
    }
    Ok(state)
}

fn run(system: &DmetSystem, opts: &DmetOptions) -> Result<DmetState> {
    let n = system.integrals.n_orb;
    let target = system.n_elec() as f64;
    let mut trace = Vec::new();
    let mut u = DMatrix::zeros(n, n);
    info!(
        "DMET: {} fragments, {} orbitals, {} electrons",
        system.fragments.len(),
        n,
        system.n_elec()
    );
    match opts.cost {
        CostKind::ElectronCount => {
            let d = system.mean_field(&u)?.d;
            let fit = fit_chemical_potential(system, &d, opts, &mut trace)?;
            let err = fit.best.n_total - target;
            let converged = fit.converged;
            Ok(state_from(fit, u, err * err, converged, trace))
        }
        CostKind::FragmentOnly => {
            let mut last = None;
            for cycle in 0..opts.max_u_cycles.max(1) {
                let d = system.mean_field(&u)?.d;
                let fit = fit_chemical_potential(system, &d, opts, &mut trace)?;
                let (u_new, mismatch) =
                    fit_correlation_potential(system, &u, &fit.best.fragment_densities)?;
                let change = (&u_new - &u).amax();
                debug!("correlation potential cycle {cycle}: mismatch {mismatch:.3e}, change {change:.3e}");
                let done = change < opts.u_tol && fit.converged;
                let state = state_from(fit, u.clone(), mismatch, done, trace.clone());
                u = u_new;
                if done {
                    return Ok(state);
                }
                last = Some(state);
            }
            Ok(last.expect("at least one cycle ran"))
        }
    }
}

/// Tab-separated trace: iteration, mu, cost, E_total, then E_frag and N_frag
/// for each fragment.
pub fn write_trace(path: &Path, rows: &[TraceRow]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let n_frag = rows.first().map_or(0, |r| r.fragments.len());
    let mut header = String::from("iteration\tmu\tcost\te_total");
    for i in 0..n_frag {
        header.push_str(&format!("\te_frag_{i}\tn_frag_{i}"));
    }
    writeln!(f, "{header}").map_err(|e| Error::io(path, e))?;
    for r in rows {
        let mut line = format!(
            "{}\t{:.12}\t{:.6e}\t{:.12}",
            r.iteration, r.mu, r.cost, r.e_total
        );
        for (e, n) in &r.fragments {
            line.push_str(&format!("\t{e:.12}\t{n:.10}"));
        }
        writeln!(f, "{line}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}
