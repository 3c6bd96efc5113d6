use dcvqe_core::dmet::*;
use dcvqe_core::integrals::{
    build_ao_integrals, hydrogen_chain, run_rhf, transform_to_mo, AOIntegrals, ActiveSpace,
    Geometry, MOIntegrals,
};
use dcvqe_core::linalg::Eri;
use dcvqe_core::mbe::FragmentationPlan;
use dcvqe_core::solver::{determinant_rdms, solve, SolverConfig};
use dcvqe_core::Error;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn fci_energy(geom: &Geometry) -> f64 {
    let ao = build_ao_integrals(geom).unwrap();
    let rhf = run_rhf(&ao, geom.n_electrons()).unwrap();
    let mo = transform_to_mo(&ao, &rhf, &ActiveSpace::Full).unwrap();
    solve(&mo, &SolverConfig::Fci, false).unwrap().energy
}

fn h4_system(r: f64) -> DmetSystem {
    let g = hydrogen_chain(4, r).unwrap();
    DmetSystem::from_geometry(&g, &FragmentationPlan::blocks(4, 2).unwrap()).unwrap()
}

fn fci_options() -> DmetOptions {
    DmetOptions {
        solver: SolverConfig::Fci,
        ..Default::default()
    }
}

/// Two copies of a problem with no coupling between them.
fn direct_sum(a: &MOIntegrals) -> MOIntegrals {
    let n = a.n_orb;
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(&a.h);
    h.view_mut((n, n), (n, n)).copy_from(&a.h);
    let mut v = Eri::zeros(2 * n);
    for off in [0, n] {
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        v.set(p + off, q + off, r + off, s + off, a.v.get(p, q, r, s));
                    }
                }
            }
        }
    }
    MOIntegrals {
        n_orb: 2 * n,
        n_elec: 2 * a.n_elec,
        h,
        v,
        e_core: 2.0 * a.e_core,
    }
}

fn h2_local() -> MOIntegrals {
    let g = hydrogen_chain(2, 0.7414).unwrap();
    DmetSystem::from_geometry(&g, &FragmentationPlan::new(vec![vec![0, 1]]))
        .unwrap()
        .integrals
}

fn mf_density(sys: &DmetSystem) -> DMatrix<f64> {
    let n = sys.integrals.n_orb;
    sys.mean_field(&DMatrix::zeros(n, n)).unwrap().d
}

// ---------------------------------------------------------------- localization

#[test]
fn orthonormal_aos_are_already_local() {
    let n = 3;
    let ao = AOIntegrals {
        n_ao: n,
        s: DMatrix::identity(n, n),
        t: DMatrix::zeros(n, n),
        v: DMatrix::zeros(n, n),
        eri: Eri::zeros(n),
        e_nuc: 0.0,
    };
    let plan = FragmentationPlan::new(vec![vec![0, 2], vec![1]]);
    let loc = localize_orbitals(&ao, &[0, 1, 2], &plan).unwrap();
    assert!((loc.l.clone() - DMatrix::identity(n, n)).amax() < 1e-14);
    assert_eq!(loc.fragment_map, vec![0, 1, 0]);
    assert_eq!(loc.fragments(), vec![vec![0, 2], vec![1]]);
}

#[test]
fn lowdin_orbitals_are_orthonormal_for_h4() {
    let g = hydrogen_chain(4, 0.9).unwrap();
    let ao = build_ao_integrals(&g).unwrap();
    let loc = localize_orbitals(
        &ao,
        &[0, 1, 2, 3],
        &FragmentationPlan::blocks(4, 2).unwrap(),
    )
    .unwrap();
    let gram = loc.l.transpose() * &ao.s * &loc.l;
    assert!((gram - DMatrix::identity(4, 4)).amax() < 1e-8);
}

#[test]
fn h2_lowdin_matches_closed_form_inverse_square_root() {
    let g = hydrogen_chain(2, 0.7414).unwrap();
    let ao = build_ao_integrals(&g).unwrap();
    let loc = localize_orbitals(
        &ao,
        &[0, 1],
        &FragmentationPlan::new(vec![vec![0], vec![1]]),
    )
    .unwrap();
    // S = [[1, s], [s, 1]] has eigenvalues 1 ± s on (1, ±1)/√2.
    let s = ao.s[(0, 1)];
    let plus = 1.0 / (1.0 + s).sqrt();
    let minus = 1.0 / (1.0 - s).sqrt();
    let diag = 0.5 * (plus + minus);
    let off = 0.5 * (plus - minus);
    assert!((loc.l[(0, 0)] - diag).abs() < 1e-12);
    assert!((loc.l[(1, 1)] - diag).abs() < 1e-12);
    assert!((loc.l[(0, 1)] - off).abs() < 1e-12);
    assert!((loc.l[(1, 0)] - off).abs() < 1e-12);
}

#[test]
fn near_singular_overlap_is_rejected() {
    let g = Geometry::new(vec![
        dcvqe_core::integrals::Atom::hydrogen([0.0; 3]),
        dcvqe_core::integrals::Atom::hydrogen([0.0, 0.0, 1e-5]),
    ])
    .unwrap();
    let ao = build_ao_integrals(&g).unwrap();
    let plan = FragmentationPlan::new(vec![vec![0], vec![1]]);
    assert!(matches!(
        localize_orbitals(&ao, &[0, 1], &plan),
        Err(Error::IllConditionedOverlap(_))
    ));
}

// ---------------------------------------------------------------- bath

#[test]
fn decoupled_fragment_has_no_bath() {
    let mut d = DMatrix::zeros(4, 4);
    d[(0, 0)] = 2.0;
    d[(2, 2)] = 1.2;
    d[(3, 3)] = 0.8;
    d[(2, 3)] = 0.9;
    d[(3, 2)] = 0.9;
    let bath = build_bath(&d, &[0, 1]);
    assert!(bath.is_empty());
    assert_eq!(bath.n_emb_elec, 2);
}

#[test]
fn whole_system_fragment_embeds_everything() {
    let sys = h4_system(1.0);
    let d = mf_density(&sys);
    let bath = build_bath(&d, &[0, 1, 2, 3]);
    assert!(bath.is_empty());
    assert_eq!(bath.n_emb_elec, 4);
}

#[test]
fn h4_halves_each_get_two_bath_orbitals() {
    let sys = h4_system(1.0);
    let d = mf_density(&sys);
    for emb in sys.embeddings(&d) {
        assert_eq!(emb.bath.len(), 2);
        assert_eq!(emb.bath.n_emb_elec, 4);
        assert_eq!(emb.n_qubits(), 8);
        let gram = emb.basis.transpose() * &emb.basis;
        assert!((gram - DMatrix::identity(4, 4)).amax() < 1e-12);
    }
}

#[test]
fn h4_halves_span_the_whole_space_so_dmet_is_exact() {
    let r = 1.0;
    let state = dmet_scf(&h4_system(r), &fci_options())
        .unwrap()
        .require_converged()
        .unwrap();
    let exact = fci_energy(&hydrogen_chain(4, r).unwrap());
    // Two fragment plus two bath orbitals cover all four orbitals.
    assert!(
        (state.e_total - exact).abs() < 1e-8,
        "{} vs {exact}",
        state.e_total
    );
}

// ---------------------------------------------------------------- embedding Hamiltonian

#[test]
fn empty_environment_leaves_the_hamiltonian_unchanged() {
    let sys = h4_system(1.0);
    let n = 4;
    let basis = DMatrix::identity(n, n);
    let emb = build_embedding_hamiltonian(&sys.integrals, &basis, &DMatrix::zeros(n, n), 4);
    assert!((emb.h.clone() - sys.integrals.h.clone()).amax() < 1e-14);
    assert_eq!(emb.v, sys.integrals.v);
    assert_eq!(emb.e_core, sys.integrals.e_core);
}

#[test]
fn zero_environment_density_only_projects() {
    let sys = h4_system(1.0);
    let d = mf_density(&sys);
    let emb = build_embedding(&sys.integrals, &d, &[0, 1], 0);
    let plain = build_embedding_hamiltonian(&sys.integrals, &emb.basis, &DMatrix::zeros(4, 4), 4);
    let projected = emb.basis.transpose() * &sys.integrals.h * &emb.basis;
    assert!((plain.h - projected).amax() < 1e-12);
}

#[test]
fn projected_mean_field_reproduces_full_rhf() {
    for r in [0.8, 1.0, 1.6] {
        let sys = h4_system(r);
        let mf = sys.mean_field(&DMatrix::zeros(4, 4)).unwrap();
        for emb in sys.embeddings(&mf.d) {
            let d_emb = emb.basis.transpose() * &mf.d * &emb.basis;
            let rdms = determinant_rdms(&d_emb);
            let e = emb.hamiltonian.energy_from_rdms(&rdms.one, &rdms.two);
            assert!((e - mf.e_hf).abs() < 1e-8, "R={r}: {e} vs {}", mf.e_hf);
        }
    }
}

// ---------------------------------------------------------------- chemical potential

#[test]
fn zero_potential_is_identity() {
    let sys = h4_system(1.0);
    let emb = &sys.embeddings(&mf_density(&sys))[0];
    assert_eq!(
        apply_chemical_potential(&emb.hamiltonian, 0.0, &[0, 1]),
        emb.hamiltonian
    );
}

#[test]
fn uniform_potential_shifts_energy_by_particle_number() {
    let sys = h4_system(1.2);
    let emb = &sys.embeddings(&mf_density(&sys))[0];
    let all: Vec<usize> = (0..emb.hamiltonian.n_orb).collect();
    let base = solve(&emb.hamiltonian, &SolverConfig::Fci, false)
        .unwrap()
        .energy;
    let n = emb.bath.n_emb_elec as f64;
    for mu in [-0.3, 0.05, 0.7] {
        let shifted = apply_chemical_potential(&emb.hamiltonian, mu, &all);
        let e = solve(&shifted, &SolverConfig::Fci, false).unwrap().energy;
        assert!((e - (base - mu * n)).abs() < 1e-10, "mu={mu}");
    }
}

#[test]
fn fragment_occupation_grows_with_potential() {
    let sys = h4_system(1.0);
    let emb = &sys.embeddings(&mf_density(&sys))[0];
    let mut last = f64::NEG_INFINITY;
    for k in 0..9 {
        let mu = -0.2 + 0.05 * k as f64;
        let h = apply_chemical_potential(&emb.hamiltonian, mu, &[0, 1]);
        let rdms = solve(&h, &SolverConfig::Fci, true).unwrap().rdms.unwrap();
        let (_, n) = fragment_energy_and_number(&rdms, emb);
        assert!(n > last, "mu={mu}: {n} <= {last}");
        last = n;
    }
}

// ---------------------------------------------------------------- fragment energies

#[test]
fn whole_system_fragment_energy_is_the_solver_energy() {
    let sys = h4_system(1.0);
    let emb = build_embedding(&sys.integrals, &mf_density(&sys), &[0, 1, 2, 3], 0);
    let sol = solve(&emb.hamiltonian, &SolverConfig::Fci, true).unwrap();
    let (e, n) = fragment_energy_and_number(sol.rdms.as_ref().unwrap(), &emb);
    assert!((e + sys.integrals.e_core - sol.energy).abs() < 1e-10);
    assert!((n - 4.0).abs() < 1e-10);
}

#[test]
fn decoupled_fragment_at_mean_field_level_is_isolated_rhf() {
    let h2 = h2_local();
    let isolated = solve(&h2, &SolverConfig::Rhf, false).unwrap().energy;
    let pair = direct_sum(&h2);
    let sys = DmetSystem::from_integrals(pair, vec![vec![0, 1], vec![2, 3]]).unwrap();
    let d = mf_density(&sys);
    for emb in sys.embeddings(&d) {
        assert!(emb.bath.is_empty());
        let d_emb = emb.basis.transpose() * &d * &emb.basis;
        let (e, n) = fragment_energy_and_number(&determinant_rdms(&d_emb), &emb);
        assert!((e + h2.e_core - isolated).abs() < 1e-10);
        assert!((n - 2.0).abs() < 1e-10);
    }
}

#[test]
fn mean_field_fragment_energies_sum_to_rhf() {
    let sys = h4_system(1.3);
    let mf = sys.mean_field(&DMatrix::zeros(4, 4)).unwrap();
    let total: f64 = sys
        .embeddings(&mf.d)
        .iter()
        .map(|emb| {
            let d_emb = emb.basis.transpose() * &mf.d * &emb.basis;
            fragment_energy_and_number(&determinant_rdms(&d_emb), emb).0
        })
        .sum();
    assert!((total + sys.integrals.e_core - mf.e_hf).abs() < 1e-10);
}

/// Fragment energy recomputed in the full localized basis from the
/// back-transformed embedding RDMs.
fn fragment_energy_in_full_basis(sys: &DmetSystem, emb: &EmbeddingProblem, mu: f64) -> f64 {
    let h = apply_chemical_potential(&emb.hamiltonian, mu, &emb.local_fragment_indices());
    let rdms = solve(&h, &SolverConfig::Fci, true).unwrap().rdms.unwrap();
    let b = &emb.basis;
    let d = b * &rdms.one * b.transpose();
    let gamma = rdms.two.transform(&b.transpose());
    let n = sys.integrals.n_orb;
    let mo = &sys.integrals;
    let g_env = {
        let mut g = DMatrix::<f64>::zeros(n, n);
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        g[(p, q)] += (mo.v.get(p, q, r, s) - 0.5 * mo.v.get(p, s, r, q))
                            * emb.env_density[(r, s)];
                    }
                }
            }
        }
        g
    };
    let mut e = 0.0;
    for &p in &emb.fragment_orbitals {
        for q in 0..n {
            e += (mo.h[(p, q)] + 0.5 * g_env[(p, q)]) * d[(p, q)];
            for r in 0..n {
                for s in 0..n {
                    e += 0.5 * mo.v.get(p, q, r, s) * gamma.get(p, q, r, s);
                }
            }
        }
    }
    e
}

#[test]
fn h4_dmet_total_matches_independent_recomputation() {
    let sys = h4_system(1.1);
    let state = dmet_scf(&sys, &fci_options()).unwrap();
    let d = mf_density(&sys);
    let total: f64 = sys
        .embeddings(&d)
        .iter()
        .map(|emb| fragment_energy_in_full_basis(&sys, emb, state.mu))
        .sum();
    assert!((total + sys.integrals.e_core - state.e_total).abs() < 1e-9);
    let summed: f64 = state.fragments.iter().map(|f| f.e_frag).sum();
    assert!((summed + sys.integrals.e_core - state.e_total).abs() < 1e-12);
}

// ---------------------------------------------------------------- self-consistency

#[test]
fn single_fragment_reproduces_fci_at_zero_potential() {
    let g = hydrogen_chain(4, 1.0).unwrap();
    let sys =
        DmetSystem::from_geometry(&g, &FragmentationPlan::new(vec![vec![0, 1, 2, 3]])).unwrap();
    let state = dmet_scf(&sys, &fci_options()).unwrap();
    assert!(state.converged);
    assert_eq!(state.iteration, 1);
    assert_eq!(state.mu, 0.0);
    assert!(state.cost < 1e-20);
    assert!((state.e_total - fci_energy(&g)).abs() < 1e-10);
}

#[test]
fn two_decoupled_molecules_give_twice_the_molecule() {
    let h2 = h2_local();
    let single = solve(&h2, &SolverConfig::Fci, false).unwrap().energy;
    let sys = DmetSystem::from_integrals(direct_sum(&h2), vec![vec![0, 1], vec![2, 3]]).unwrap();
    let state = dmet_scf(&sys, &fci_options())
        .unwrap()
        .require_converged()
        .unwrap();
    assert!((state.e_total - 2.0 * single).abs() < 1e-10);
    for f in &state.fragments {
        assert!((f.n_frag - 2.0).abs() < 1e-8);
    }
}

#[test]
fn fragment_order_does_not_matter() {
    let g = hydrogen_chain(6, 1.2).unwrap();
    let a = DmetSystem::from_geometry(
        &g,
        &FragmentationPlan::new(vec![vec![0, 1], vec![2, 3], vec![4, 5]]),
    )
    .unwrap();
    let b = DmetSystem::from_geometry(
        &g,
        &FragmentationPlan::new(vec![vec![4, 5], vec![0, 1], vec![2, 3]]),
    )
    .unwrap();
    let ea = dmet_scf(&a, &fci_options()).unwrap().e_total;
    let eb = dmet_scf(&b, &fci_options()).unwrap().e_total;
    assert!((ea - eb).abs() < 1e-10, "{ea} vs {eb}");
}

#[test]
fn h10_adapt_embeddings_use_eight_qubits_and_close_the_count() {
    let g = hydrogen_chain(10, 1.5).unwrap();
    let sys = DmetSystem::from_geometry(&g, &FragmentationPlan::blocks(10, 2).unwrap()).unwrap();
    let state = dmet_scf(&sys, &DmetOptions::default())
        .unwrap()
        .require_converged()
        .unwrap();
    assert_eq!(state.max_qubits(), 8);
    assert!((state.n_total - 10.0).abs() < 1e-4);
    assert!(state.fragments.iter().all(|f| f.n_bath <= 2));
}

#[test]
fn exhausted_budget_reports_not_converged() {
    let g = hydrogen_chain(6, 1.0).unwrap();
    let sys = DmetSystem::from_geometry(&g, &FragmentationPlan::blocks(6, 2).unwrap()).unwrap();
    let opts = DmetOptions {
        max_iterations: 1,
        ..fci_options()
    };
    let state = dmet_scf(&sys, &opts).unwrap();
    assert!(!state.converged);
    assert_eq!(state.iteration, 1);
    assert!(matches!(
        state.require_converged(),
        Err(Error::DmetNotConverged { iterations: 1, .. })
    ));
}

#[test]
fn fragment_only_fit_reduces_the_density_mismatch() {
    let sys = h4_system(1.4);
    let opts = DmetOptions {
        cost: CostKind::FragmentOnly,
        max_u_cycles: 3,
        ..fci_options()
    };
    let start = dmet_scf(&sys, &fci_options()).unwrap();
    let fitted = dmet_scf(&sys, &opts).unwrap();
    assert!((fitted.n_total - 4.0).abs() < 1e-4);
    assert!(fitted.u.amax() > 0.0);
    assert!((&fitted.u - fitted.u.transpose()).amax() < 1e-14);
    // off-fragment blocks stay empty
    assert_eq!(fitted.u[(0, 2)], 0.0);
    assert!(fitted.cost.is_finite());
    assert!((fitted.e_total - start.e_total).abs() < 1e-2);
}

#[test]
fn trace_file_has_one_row_per_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dmet_trace.tsv");
    let sys = h4_system(1.0);
    let opts = DmetOptions {
        trace_path: Some(path.clone()),
        ..fci_options()
    };
    let state = dmet_scf(&sys, &opts).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), state.iteration + 1);
    assert_eq!(
        lines[0],
        "iteration\tmu\tcost\te_total\te_frag_0\tn_frag_0\te_frag_1\tn_frag_1"
    );
    assert!(lines[1..].iter().all(|l| l.split('\t').count() == 8));
}

#[test]
fn overlapping_orbital_fragments_are_rejected() {
    let h2 = h2_local();
    assert!(matches!(
        DmetSystem::from_integrals(h2.clone(), vec![vec![0, 1], vec![1]]),
        Err(Error::Config { .. })
    ));
    assert!(matches!(
        DmetSystem::from_integrals(h2, vec![vec![0]]),
        Err(Error::Config { .. })
    ));
}

// ---------------------------------------------------------------- properties

/// Closed-shell density `2 C_occ C_occᵀ` from a random orthogonal matrix.
fn idempotent_density(n: usize, n_occ: usize, seed: &[f64]) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |i, j| {
        seed[(i * n + j) % seed.len()] + if i == j { 0.1 } else { 0.0 }
    });
    let q = a.qr().q();
    let occ = q.columns(0, n_occ).into_owned();
    2.0 * &occ * occ.transpose()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bath_never_exceeds_fragment_size(
        n in 3usize..8,
        occ_frac in 0.2f64..0.8,
        frag_mask in 1u32..255,
        seed in proptest::collection::vec(-1.0f64..1.0, 64),
    ) {
        let n_occ = ((n as f64 * occ_frac).round() as usize).clamp(1, n - 1);
        let fragment: Vec<usize> = (0..n).filter(|i| frag_mask >> i & 1 == 1).collect();
        prop_assume!(!fragment.is_empty() && fragment.len() < n);
        let d = idempotent_density(n, n_occ, &seed);
        let bath = build_bath(&d, &fragment);
        prop_assert!(bath.len() <= fragment.len());
        prop_assert!(bath.n_emb_elec.is_multiple_of(2));
        prop_assert!(bath.n_emb_elec <= 2 * (fragment.len() + bath.len()));
        let b = embedding_basis(n, &fragment, &bath.orbitals);
        let gram = b.transpose() * &b;
        prop_assert!((gram - DMatrix::identity(b.ncols(), b.ncols())).amax() < 1e-10);
    }
}
