use argmin::core::{CostFunction, Executor};
use argmin::solver::neldermead::NelderMead;
use nalgebra::DMatrix;

use super::DmetSystem;
use crate::error::{Error, Result};

/// Penalty returned when the mean field fails for a trial potential.
const FAILED_SCF_COST: f64 = 1e3;
const INITIAL_STEP: f64 = 0.05;
const MAX_SIMPLEX_ITERATIONS: u64 = 400;

/// Symmetric fragment-block potential from its upper-triangle parameters.
fn unpack(fragments: &[Vec<usize>], n: usize, params: &[f64]) -> DMatrix<f64> {
    let mut u = DMatrix::zeros(n, n);
    let mut k = 0;
    for frag in fragments {
        for (i, &p) in frag.iter().enumerate() {
            for &q in &frag[i..] {
                u[(p, q)] = params[k];
                u[(q, p)] = params[k];
                k += 1;
            }
        }
    }
    u
}

fn pack(fragments: &[Vec<usize>], u: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::new();
    for frag in fragments {
        for (i, &p) in frag.iter().enumerate() {
            for &q in &frag[i..] {
                out.push(u[(p, q)]);
            }
        }
    }
    out
}

struct Mismatch<'a> {
    system: &'a DmetSystem,
    targets: &'a [DMatrix<f64>],
}

impl Mismatch<'_> {
    fn eval(&self, params: &[f64]) -> f64 {
        let n = self.system.integrals.n_orb;
        let u = unpack(&self.system.fragments, n, params);
        let Ok(mf) = self.system.mean_field(&u) else {
            return FAILED_SCF_COST;
        };
        self.system
            .fragments
            .iter()
            .zip(self.targets)
            .map(|(frag, target)| {
                let mut acc = 0.0;
                for (i, &p) in frag.iter().enumerate() {
                    for (j, &q) in frag.iter().enumerate() {
                        acc += (mf.d[(p, q)] - target[(i, j)]).powi(2);
                    }
                }
                acc
            })
            .sum()
    }
}

impl CostFunction for Mismatch<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, param: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.eval(param))
    }
}

/// Minimize `Σ_A ‖D_mf(u)[A,A] − D_A‖²` over fragment-block potentials,
/// starting from `u0`. Returns the fitted potential and the final mismatch.
pub fn fit_correlation_potential(
    system: &DmetSystem,
    u0: &DMatrix<f64>,
    targets: &[DMatrix<f64>],
) -> Result<(DMatrix<f64>, f64)> {
    if targets.len() != system.fragments.len() {
        return Err(Error::config(
            "fragments",
            "one target density per fragment required",
        ));
    }
    let x0 = pack(&system.fragments, u0);
    let cost = Mismatch { system, targets };
    let mut simplex = vec![x0.clone()];
    for k in 0..x0.len() {
        let mut x = x0.clone();
        x[k] += INITIAL_STEP;
        simplex.push(x);
    }
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(1e-12)
        .map_err(|e| Error::Numerical(e.to_string()))?;
    let res = Executor::new(cost, solver)
        .configure(|s| s.max_iters(MAX_SIMPLEX_ITERATIONS))
        .run()
        .map_err(|e| Error::Numerical(e.to_string()))?;
    let state = res.state;
    let best = state.best_param.unwrap_or(x0);
    let n = system.integrals.n_orb;
    Ok((unpack(&system.fragments, n, &best), state.best_cost))
}
