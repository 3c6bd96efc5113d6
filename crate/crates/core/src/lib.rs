//! Divide-and-conquer VQE toolkit: molecular integrals, qubit Hamiltonians,
//! a statevector simulator, ADAPT-VQE, many-body expansion and DMET.

pub mod adaptvqe;
pub mod dmet;
pub mod error;
pub mod hamiltonian;
pub mod integrals;
pub mod linalg;
pub mod mbe;
pub mod simulator;
pub mod solver;

pub use error::{Error, Result};
