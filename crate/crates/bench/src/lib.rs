//! Shared fixtures for the benchmarks: hydrogen chains in canonical and
//! localized orbital bases.

use dcvqe_core::dmet::DmetSystem;
use dcvqe_core::integrals::{
    hydrogen_chain, molecular_integrals, ActiveSpace, Geometry, MOIntegrals,
};
use dcvqe_core::mbe::FragmentationPlan;

pub fn chain(n: usize, r: f64) -> Geometry {
    hydrogen_chain(n, r).expect("hydrogen chain")
}

/// Canonical RHF integrals of an `n`-atom chain.
pub fn chain_integrals(n: usize, r: f64) -> MOIntegrals {
    molecular_integrals(&chain(n, r), &ActiveSpace::Full).expect("integrals")
}

/// DMET system of an `n`-atom chain cut into H2 fragments.
pub fn dimer_system(n: usize, r: f64) -> DmetSystem {
    let plan = FragmentationPlan::blocks(n, 2).expect("plan");
    DmetSystem::from_geometry(&chain(n, r), &plan).expect("system")
}
