//! Cross-checks between the independent exact solvers: Fock-space matrices of
//! the fermionic Hamiltonian, sector diagonalization of its qubit image, and
//! determinant-based CI.

use dcvqe_core::hamiltonian::{build_second_quantized, number_operator, qubit_hamiltonian};
use dcvqe_core::integrals::MOIntegrals;
use dcvqe_core::integrals::{
    build_ao_integrals, hydrogen_chain, run_rhf, transform_to_mo, ActiveSpace, Geometry,
};
use dcvqe_core::linalg::herm_eigh;
use dcvqe_core::simulator::{
    compute_rdms, exact_ground_state, expectation, fci::fci_ground_state_sector, fci_ground_state,
    prepare_hf_state, variance, Sector,
};
use nalgebra::DMatrix;
use num_complex::Complex64;

fn mo_for(geom: &Geometry) -> MOIntegrals {
    let ao = build_ao_integrals(geom).unwrap();
    let rhf = run_rhf(&ao, geom.n_electrons()).unwrap();
    transform_to_mo(&ao, &rhf, &ActiveSpace::Full).unwrap()
}

fn h2() -> MOIntegrals {
    mo_for(&hydrogen_chain(2, 0.7414).unwrap())
}

/// Lowest eigenvalue of the Fock-space matrix restricted to `n_elec` particles.
fn fock_space_ground(mo: &MOIntegrals, n_elec: usize) -> f64 {
    let m = build_second_quantized(mo).to_fock_matrix();
    let keep: Vec<usize> = (0..m.nrows())
        .filter(|i| i.count_ones() as usize == n_elec)
        .collect();
    let sub = DMatrix::from_fn(keep.len(), keep.len(), |a, b| m[(keep[a], keep[b])]);
    herm_eigh(&sub).0[0]
}

#[test]
fn h2_fci_energy_agrees_across_solvers() {
    let mo = h2();
    let oracle = fock_space_ground(&mo, 2);
    let h = qubit_hamiltonian(&mo);
    let sector = exact_ground_state(&h, Some(Sector::singlet(2))).unwrap();
    let ci = fci_ground_state(&mo).unwrap();
    assert!((sector.energy - oracle).abs() < 1e-10);
    assert!((ci.energy - oracle).abs() < 1e-10);
    assert!(sector.residual < 1e-8);
    // Minimal-basis H2 at equilibrium.
    assert!((oracle - (-1.1373)).abs() < 5e-4, "{oracle}");
}

#[test]
fn hf_expectation_equals_rhf_energy() {
    let geom = hydrogen_chain(2, 0.7414).unwrap();
    let ao = build_ao_integrals(&geom).unwrap();
    let rhf = run_rhf(&ao, 2).unwrap();
    let mo = transform_to_mo(&ao, &rhf, &ActiveSpace::Full).unwrap();
    let e = expectation(&prepare_hf_state(4, 2), &qubit_hamiltonian(&mo));
    assert!((e - rhf.e_hf).abs() < 1e-10);
}

#[test]
fn hamiltonian_conserves_particle_number() {
    let mo = mo_for(&hydrogen_chain(4, 1.0).unwrap());
    let h = qubit_hamiltonian(&mo);
    let n = number_operator(8);
    let comm = h.mul(&n).minus(&n.mul(&h)).pruned(1e-12);
    assert!(comm.one_norm() < 1e-12);
}

#[test]
fn sector_ground_state_matches_full_space_minimum() {
    let mo = mo_for(&hydrogen_chain(4, 1.2).unwrap());
    let h = qubit_hamiltonian(&mo);
    let full = exact_ground_state(&h, None).unwrap();
    let mut best = f64::INFINITY;
    for n_elec in 0..=8usize {
        for two_sz in -(n_elec as i32)..=(n_elec as i32) {
            let sector = Sector::new(n_elec, two_sz);
            if sector.alpha_beta().is_none_or(|(a, b)| a > 4 || b > 4) {
                continue;
            }
            best = best.min(exact_ground_state(&h, Some(sector)).unwrap().energy);
        }
    }
    assert!((full.energy - best).abs() < 1e-9);
}

#[test]
fn h4_ci_matches_sector_diagonalization_and_rdm_energy() {
    let mo = mo_for(&hydrogen_chain(4, 1.3).unwrap());
    let h = qubit_hamiltonian(&mo);
    let sector = exact_ground_state(&h, Some(Sector::singlet(4))).unwrap();
    let ci = fci_ground_state(&mo).unwrap();
    assert!((ci.energy - sector.energy).abs() < 1e-9);
    let state = ci.to_statevector().unwrap();
    assert!((expectation(&state, &h) - ci.energy).abs() < 1e-9);
    assert!(variance(&state, &h) < 1e-8);
    let rdms = compute_rdms(&state, 4).unwrap();
    assert!((mo.energy_from_rdms(&rdms.one, &rdms.two) - ci.energy).abs() < 1e-9);
    assert!((rdms.n_elec() - 4.0).abs() < 1e-9);
    let occ = herm_eigh(&rdms.one.map(|x| Complex64::new(x, 0.0))).0;
    assert!(occ.iter().all(|&x| x > -1e-9 && x < 2.0 + 1e-9));
}

#[test]
fn triplet_sector_ci_matches_pauli_sector() {
    let mo = mo_for(&hydrogen_chain(4, 1.5).unwrap());
    let h = qubit_hamiltonian(&mo);
    let pauli = exact_ground_state(&h, Some(Sector::new(4, 2))).unwrap();
    let ci = fci_ground_state_sector(&mo, 3, 1).unwrap();
    assert!((ci.energy - pauli.energy).abs() < 1e-9);
}
