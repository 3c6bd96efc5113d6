//! ADAPT-VQE: grow a product of exponentials one pool operator at a time,
//! choosing the operator with the largest energy gradient, and re-optimize
//! every parameter after each addition.

pub mod optimize;
pub mod pool;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::PauliSum;
use crate::simulator::sparse::{inner, norm};
use crate::simulator::{
    check_anti_hermitian, prepare_hf_state, Basis, Sector, SparseOperator, Statevector,
};

pub use optimize::{bfgs, bfgs_warm, BfgsOptions, Minimum};
pub use pool::{build_pool, OperatorPool, PoolKind, PoolOperator};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConvergenceSpec {
    /// Stop when the pool-gradient 2-norm falls below this.
    pub grad_norm_eps: f64,
    /// Stop when `⟨H²⟩ − ⟨H⟩²` falls below this (hartree²).
    pub variance_eps: f64,
    pub max_iterations: usize,
    /// Gradient ∞-norm target of the inner parameter optimization.
    pub optimizer_tol: f64,
}

impl Default for ConvergenceSpec {
    fn default() -> Self {
        ConvergenceSpec {
            grad_norm_eps: 1e-3,
            variance_eps: 0.01,
            max_iterations: 50,
            optimizer_tol: 1e-7,
        }
    }
}

impl ConvergenceSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("grad_norm_eps", self.grad_norm_eps),
            ("variance_eps", self.variance_eps),
            ("optimizer_tol", self.optimizer_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(name, "must be a positive number"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnsatzStep {
    /// Index into the pool.
    pub operator: usize,
    pub label: String,
    pub theta: f64,
}

/// `exp(θ_k τ_k) ⋯ exp(θ_1 τ_1)|reference⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ansatz {
    pub n_qubits: usize,
    /// Computational basis index of the reference determinant.
    pub reference: u64,
    pub steps: Vec<AnsatzStep>,
}

impl Ansatz {
    pub fn thetas(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.theta).collect()
    }

    /// Evaluate on the full register.
    pub fn prepare(&self, pool: &OperatorPool) -> Result<Statevector> {
        let mut state = Statevector::basis_state(self.n_qubits, self.reference);
        for step in &self.steps {
            state = crate::simulator::apply_exp(
                &state,
                &pool.operators[step.operator].generator,
                step.theta,
            )?;
        }
        Ok(state)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub energy: f64,
    pub grad_norm: f64,
    pub variance: f64,
    /// Operator appended at this iteration, if any.
    pub operator: Option<String>,
    pub note: Option<String>,
}

impl TraceRecord {
    pub const HEADER: &'static str = "iteration energy_hartree grad_norm variance operator";

    pub fn to_line(&self) -> String {
        let mut line = format!(
            "{} {:.12} {:.6e} {:.6e} {}",
            self.iteration,
            self.energy,
            self.grad_norm,
            self.variance,
            self.operator.as_deref().unwrap_or("-")
        );
        if let Some(note) = &self.note {
            line.push_str(" # ");
            line.push_str(note);
        }
        line
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    GradientNorm,
    Variance,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct AdaptResult {
    pub energy: f64,
    pub variance: f64,
    pub ansatz: Ansatz,
    pub trace: Vec<TraceRecord>,
    pub state: Statevector,
    pub stop: StopReason,
}

impl AdaptResult {
    pub fn iterations(&self) -> usize {
        self.ansatz.steps.len()
    }
}

/// Hamiltonian and generators compiled on a common basis: the reference's
/// `(N, S_z)` sector when every operator preserves it, else the full register.
pub struct CompiledProblem {
    pub basis: Basis,
    pub hamiltonian: SparseOperator,
    pub generators: Vec<SparseOperator>,
    pub reference: Vec<Complex64>,
}

impl CompiledProblem {
    pub fn new(h: &PauliSum, generators: &[&PauliSum], reference: &Statevector) -> Result<Self> {
        for g in generators {
            check_anti_hermitian(g)?;
        }
        if let Some(sector) = basis_state_sector(reference) {
            let basis = Basis::sector(reference.n_qubits, sector)?;
            let hamiltonian = SparseOperator::compile(h, &basis);
            if !hamiltonian.leaks {
                let compiled: Vec<SparseOperator> = generators
                    .par_iter()
                    .map(|g| {
                        let mut op = SparseOperator::compile(g, &basis);
                        op.localize();
                        op
                    })
                    .collect();
                if compiled.iter().all(|g| !g.leaks) {
                    let reference = basis.restrict(&reference.amplitudes);
                    return Ok(CompiledProblem {
                        basis,
                        hamiltonian,
                        generators: compiled,
                        reference,
                    });
                }
            }
        }
        let basis = Basis::full(reference.n_qubits)?;
        let hamiltonian = SparseOperator::compile(h, &basis);
        let generators = generators
            .par_iter()
            .map(|g| {
                let mut op = SparseOperator::compile(g, &basis);
                op.localize();
                op
            })
            .collect();
        Ok(CompiledProblem {
            reference: reference.amplitudes.clone(),
            basis,
            hamiltonian,
            generators,
        })
    }

    /// State after applying `exp(θ_k A_{ops[k]})` in order.
    pub fn state(&self, ops: &[usize], theta: &[f64]) -> Vec<Complex64> {
        let mut v = self.reference.clone();
        for (&k, &t) in ops.iter().zip(theta) {
            v = self.generators[k].exp_apply(t, &v);
        }
        v
    }

    pub fn energy(&self, v: &[Complex64]) -> f64 {
        inner(v, &self.hamiltonian.apply(v)).re
    }

    /// Energy and its gradient by one forward and one backward sweep.
    pub fn energy_and_gradient(&self, ops: &[usize], theta: &[f64]) -> (f64, DVector<f64>) {
        let mut phi = self.state(ops, theta);
        let mut lambda = self.hamiltonian.apply(&phi);
        let energy = inner(&phi, &lambda).re;
        let mut grad = DVector::zeros(ops.len());
        for k in (0..ops.len()).rev() {
            let a = &self.generators[ops[k]];
            grad[k] = 2.0 * inner(&lambda, &a.apply(&phi)).re;
            if k > 0 {
                phi = a.exp_apply(-theta[k], &phi);
                lambda = a.exp_apply(-theta[k], &lambda);
            }
        }
        (energy, grad)
    }

    /// `R_i = ⟨ψ|[H, A_i]|ψ⟩ = 2 Re⟨Hψ|A_i ψ⟩` for every generator.
    pub fn pool_gradients(&self, v: &[Complex64]) -> Vec<f64> {
        let hv = self.hamiltonian.apply(v);
        self.generators
            .par_iter()
            .map(|a| 2.0 * inner(&hv, &a.apply(v)).re)
            .collect()
    }

    pub fn to_statevector(&self, v: &[Complex64]) -> Result<Statevector> {
        let full = if self.basis.is_full() {
            v.to_vec()
        } else {
            self.basis.embed(v)
        };
        Statevector::from_amplitudes(self.basis.n_qubits, full)
    }
}

fn basis_state_sector(state: &Statevector) -> Option<Sector> {
    let mut occupied = state
        .amplitudes
        .iter()
        .enumerate()
        .filter(|(_, a)| a.norm_sqr() > 1e-24)
        .map(|(i, _)| i as u64);
    let first = occupied.next()?;
    let n_elec = first.count_ones() as usize;
    let alpha = (first & 0x5555_5555_5555_5555).count_ones() as i32;
    let sector = Sector::new(n_elec, 2 * alpha - n_elec as i32);
    occupied.all(|i| sector.contains(i)).then_some(sector)
}

/// Residual gradients of every pool operator at `state`.
pub fn pool_gradients(state: &Statevector, h: &PauliSum, pool: &OperatorPool) -> Result<Vec<f64>> {
    let gens: Vec<&PauliSum> = pool.operators.iter().map(|o| &o.generator).collect();
    let problem = CompiledProblem::new(h, &gens, state)?;
    Ok(problem.pool_gradients(&problem.reference))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimized {
    pub theta: Vec<f64>,
    pub energy: f64,
    pub grad_inf_norm: f64,
    pub stalled: bool,
}

fn optimize_compiled(
    problem: &CompiledProblem,
    ops: &[usize],
    theta0: &[f64],
    tol: f64,
    h0: Option<DMatrix<f64>>,
) -> (Optimized, DMatrix<f64>) {
    let opts = BfgsOptions {
        gtol: tol,
        ..BfgsOptions::default()
    };
    let m = bfgs_warm(
        |x: &DVector<f64>| problem.energy_and_gradient(ops, x.as_slice()),
        DVector::from_column_slice(theta0),
        h0,
        &opts,
    );
    let out = Optimized {
        grad_inf_norm: m.grad_inf_norm(),
        theta: m.x.iter().copied().collect(),
        energy: m.value,
        stalled: m.stalled,
    };
    (out, m.inverse_hessian)
}

/// Grow an inverse Hessian by one parameter, seeding the new diagonal entry
/// with the mean of the existing ones.
fn extend_inverse_hessian(h: &DMatrix<f64>) -> DMatrix<f64> {
    let n = h.nrows();
    let seed = if n == 0 {
        1.0
    } else {
        h.diagonal().mean().abs().max(1e-3)
    };
    let mut out = DMatrix::zeros(n + 1, n + 1);
    out.view_mut((0, 0), (n, n)).copy_from(h);
    out[(n, n)] = seed;
    out
}

/// Minimize the energy of `exp(θ_k τ_k) ⋯ exp(θ_1 τ_1)|reference⟩` over θ.
pub fn optimize_parameters(
    h: &PauliSum,
    generators: &[&PauliSum],
    reference: &Statevector,
    theta0: &[f64],
    tol: f64,
) -> Result<Optimized> {
    if theta0.len() != generators.len() {
        return Err(Error::Numerical(format!(
            "{} parameters for {} generators",
            theta0.len(),
            generators.len()
        )));
    }
    let problem = CompiledProblem::new(h, generators, reference)?;
    let ops: Vec<usize> = (0..generators.len()).collect();
    let (out, _) = optimize_compiled(&problem, &ops, theta0, tol, None);
    if out.stalled {
        return Err(Error::OptimizerStalled { energy: out.energy });
    }
    Ok(out)
}

/// Run ADAPT-VQE from the Hartree-Fock determinant of the pool.
pub fn adapt_vqe(h: &PauliSum, pool: &OperatorPool, conv: &ConvergenceSpec) -> Result<AdaptResult> {
    let reference = prepare_hf_state(pool.n_qubits, pool.n_elec);
    adapt_vqe_from(h, pool, &reference, conv)
}

pub fn adapt_vqe_from(
    h: &PauliSum,
    pool: &OperatorPool,
    reference: &Statevector,
    conv: &ConvergenceSpec,
) -> Result<AdaptResult> {
    conv.validate()?;
    if pool.is_empty() {
        return Err(Error::AdaptPoolEmpty);
    }
    let gens: Vec<&PauliSum> = pool.operators.iter().map(|o| &o.generator).collect();
    let problem = CompiledProblem::new(h, &gens, reference)?;
    let reference_index = reference
        .amplitudes
        .iter()
        .position(|a| a.norm_sqr() > 0.5)
        .unwrap_or(0) as u64;

    let mut ops: Vec<usize> = Vec::new();
    let mut theta: Vec<f64> = Vec::new();
    let mut h_inv: Option<DMatrix<f64>> = None;
    let mut trace = Vec::new();
    let mut v = problem.reference.clone();
    let mut pending_note: Option<String> = None;
    let mut iteration = 0;
    let (energy, variance, stop) = loop {
        let hv = problem.hamiltonian.apply(&v);
        let energy = inner(&v, &hv).re;
        let variance = (norm(&hv).powi(2) - energy * energy).max(0.0);
        let grads = problem.pool_gradients(&v);
        let grad_norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
        let mut record = TraceRecord {
            iteration,
            energy,
            grad_norm,
            variance,
            operator: None,
            note: pending_note.take(),
        };
        let stop = if grad_norm < conv.grad_norm_eps {
            Some(StopReason::GradientNorm)
        } else if variance < conv.variance_eps {
            Some(StopReason::Variance)
        } else if iteration >= conv.max_iterations {
            Some(StopReason::MaxIterations)
        } else {
            None
        };
        if let Some(stop) = stop {
            trace.push(record);
            break (energy, variance, stop);
        }
        let previous = ops.last().copied();
        let selected = select_operator(&grads, previous, conv.optimizer_tol);
        record.operator = Some(pool.operators[selected].label.clone());
        trace.push(record);
        log::debug!(
            "adapt iteration {iteration}: E = {energy:.10}, |R| = {grad_norm:.3e}, adding {}",
            pool.operators[selected].label
        );

        ops.push(selected);
        theta.push(0.0);
        let seed = h_inv.as_ref().map(extend_inverse_hessian);
        let (opt, h_new) = optimize_compiled(&problem, &ops, &theta, conv.optimizer_tol, seed);
        h_inv = Some(h_new);
        if opt.stalled {
            log::warn!("parameter optimization stalled at E = {:.12}", opt.energy);
            pending_note = Some(format!("optimizer stalled at {:.12}", opt.energy));
        }
        theta = opt.theta;
        v = problem.state(&ops, &theta);
        iteration += 1;
    };

    let ansatz = Ansatz {
        n_qubits: pool.n_qubits,
        reference: reference_index,
        steps: ops
            .iter()
            .zip(&theta)
            .map(|(&k, &t)| AnsatzStep {
                operator: k,
                label: pool.operators[k].label.clone(),
                theta: t,
            })
            .collect(),
    };
    Ok(AdaptResult {
        energy,
        variance,
        ansatz,
        trace,
        state: problem.to_statevector(&v)?,
        stop,
    })
}

/// Largest |R_i|, lowest index on ties; the previous operator is skipped when
/// its own gradient is already below `tol`.
fn select_operator(grads: &[f64], previous: Option<usize>, tol: f64) -> usize {
    let mut best = None::<(usize, f64)>;
    for (i, g) in grads.iter().enumerate() {
        if Some(i) == previous && g.abs() < tol {
            continue;
        }
        if best.is_none_or(|(_, b)| g.abs() > b) {
            best = Some((i, g.abs()));
        }
    }
    best.map(|(i, _)| i).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_go_to_the_lowest_index() {
        assert_eq!(select_operator(&[0.1, -0.3, 0.3], None, 1e-7), 1);
        assert_eq!(select_operator(&[0.0, 0.0], Some(0), 1e-7), 1);
    }

    #[test]
    fn trace_line_format() {
        let r = TraceRecord {
            iteration: 2,
            energy: -1.5,
            grad_norm: 0.25,
            variance: 1e-3,
            operator: Some("s(1;0)".into()),
            note: None,
        };
        assert_eq!(
            r.to_line(),
            "2 -1.500000000000 2.500000e-1 1.000000e-3 s(1;0)"
        );
    }
}
