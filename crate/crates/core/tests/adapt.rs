use dcvqe_core::adaptvqe::{
    adapt_vqe, build_pool, optimize_parameters, pool_gradients, ConvergenceSpec, PoolKind,
};
use dcvqe_core::hamiltonian::{
    commutator, number_operator, qubit_hamiltonian, Letter, PauliString, PauliSum,
};
use dcvqe_core::integrals::{
    build_ao_integrals, hydrogen_chain, run_rhf, transform_to_mo, ActiveSpace, MOIntegrals,
};
use dcvqe_core::simulator::{
    apply_exp, exact_ground_state, expectation, fci_ground_state, prepare_hf_state, Sector,
    Statevector,
};
use num_complex::Complex64;

fn chain(n: usize, r: f64) -> MOIntegrals {
    let geom = hydrogen_chain(n, r).unwrap();
    let ao = build_ao_integrals(&geom).unwrap();
    let rhf = run_rhf(&ao, n).unwrap();
    transform_to_mo(&ao, &rhf, &ActiveSpace::Full).unwrap()
}

fn tight() -> ConvergenceSpec {
    ConvergenceSpec {
        grad_norm_eps: 1e-6,
        variance_eps: 1e-12,
        max_iterations: 60,
        optimizer_tol: 1e-8,
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn every_pool_operator_is_anti_hermitian_as_a_matrix() {
    for kind in PoolKind::ALL {
        let pool = build_pool(2, 2, kind).unwrap();
        for op in &pool.operators {
            let m = op.generator.to_dense();
            let dev = (&m + m.adjoint())
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            assert!(dev < 1e-14, "{kind} {}", op.label);
            assert!(m.iter().any(|z| z.norm() > 1e-12));
        }
    }
}

#[test]
fn fermionic_pools_commute_with_number_operator() {
    let n = number_operator(6);
    for kind in [
        PoolKind::FermionicGeneral,
        PoolKind::SpinComplete,
        PoolKind::SpinAdapted,
        PoolKind::Qeb,
    ] {
        for op in &build_pool(3, 2, kind).unwrap().operators {
            assert!(
                commutator(&n, &op.generator).is_empty(),
                "{kind} {}",
                op.label
            );
        }
    }
}

#[test]
fn qeb_double_is_eight_xy_strings() {
    let pool = build_pool(2, 2, PoolKind::Qeb).unwrap();
    let op = pool
        .operators
        .iter()
        .find(|o| o.label == "q(1b,1a;0b,0a)")
        .expect("double excitation over all four qubits");
    assert_eq!(op.generator.len(), 8);
    for (s, coeff) in op.generator.iter() {
        assert_eq!(s.weight(), 4);
        assert_eq!(s.x, 0b1111);
        assert_eq!(s.n_y() % 2, 1);
        assert!((coeff.norm() - 0.125).abs() < 1e-15 && coeff.re == 0.0);
    }
}

#[test]
fn pool_gradients_match_finite_differences() {
    let mo = chain(4, 1.1);
    let h = qubit_hamiltonian(&mo);
    let hf = prepare_hf_state(8, 4);
    // A non-reference state so that singles contribute too.
    let pool = build_pool(4, 4, PoolKind::SpinAdapted).unwrap();
    let mut state = apply_exp(&hf, &pool.operators[0].generator, 0.2).unwrap();
    state = apply_exp(&state, &pool.operators[pool.len() - 1].generator, -0.15).unwrap();
    for kind in PoolKind::ALL {
        let pool = build_pool(4, 4, kind).unwrap();
        let grads = pool_gradients(&state, &h, &pool).unwrap();
        let step = 1e-4;
        for (op, g) in pool.operators.iter().zip(&grads) {
            let plus = expectation(&apply_exp(&state, &op.generator, step).unwrap(), &h);
            let minus = expectation(&apply_exp(&state, &op.generator, -step).unwrap(), &h);
            let fd = (plus - minus) / (2.0 * step);
            assert!((fd - g).abs() < 1e-6, "{kind} {}: {g} vs {fd}", op.label);
        }
    }
}

#[test]
fn gradients_vanish_in_an_eigenstate() {
    let mo = chain(2, 0.7414);
    let h = qubit_hamiltonian(&mo);
    let exact = exact_ground_state(&h, Some(Sector::singlet(2))).unwrap();
    let pool = build_pool(2, 2, PoolKind::FermionicGeneral).unwrap();
    for g in pool_gradients(&exact.ground_state, &h, &pool).unwrap() {
        assert!(g.abs() < 1e-9);
    }
}

#[test]
fn analytic_parameter_gradient_matches_finite_differences() {
    let mo = chain(4, 1.4);
    let h = qubit_hamiltonian(&mo);
    let pool = build_pool(4, 4, PoolKind::SpinAdapted).unwrap();
    let picks = [3usize, 10, 0, 17];
    let gens: Vec<&PauliSum> = picks
        .iter()
        .map(|&k| &pool.operators[k].generator)
        .collect();
    let reference = prepare_hf_state(8, 4);
    let problem = dcvqe_core::adaptvqe::CompiledProblem::new(&h, &gens, &reference).unwrap();
    let ops: Vec<usize> = (0..gens.len()).collect();
    let points = [
        [0.1, -0.2, 0.05, 0.3],
        [0.0, 0.0, 0.0, 0.0],
        [-0.4, 0.25, 0.6, -0.1],
        [1.0, 0.5, -0.7, 0.2],
        [0.03, 0.02, -0.01, 0.9],
    ];
    for theta in points {
        let (_, grad) = problem.energy_and_gradient(&ops, &theta);
        for k in 0..theta.len() {
            let mut tp = theta;
            let mut tm = theta;
            tp[k] += 1e-5;
            tm[k] -= 1e-5;
            let ep = problem.energy(&problem.state(&ops, &tp));
            let em = problem.energy(&problem.state(&ops, &tm));
            let fd = (ep - em) / 2e-5;
            assert!((fd - grad[k]).abs() < 1e-6, "{k}: {} vs {fd}", grad[k]);
        }
    }
}

#[test]
fn one_parameter_minimum_matches_golden_section_scan() {
    // H = Z0 + 0.5 X0 X1 on |00>, generator i Y0 X1.
    let mut h = PauliSum::new(2);
    h.add(PauliString::single(0, Letter::Z), c(1.0, 0.0));
    h.add(
        PauliString::from_letters(&[(0, Letter::X), (1, Letter::X)]),
        c(0.5, 0.0),
    );
    let mut tau = PauliSum::new(2);
    tau.add(
        PauliString::from_letters(&[(0, Letter::Y), (1, Letter::X)]),
        c(0.0, 1.0),
    );
    let reference = Statevector::basis_state(2, 0);
    let energy = |t: f64| expectation(&apply_exp(&reference, &tau, t).unwrap(), &h);
    let (mut a, mut b) = (-std::f64::consts::PI / 2.0, std::f64::consts::PI / 2.0);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let x1 = b - phi * (b - a);
        let x2 = a + phi * (b - a);
        if energy(x1) < energy(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    let scan = energy(0.5 * (a + b));
    let opt = optimize_parameters(&h, &[&tau], &reference, &[0.0], 1e-9).unwrap();
    assert!(
        (opt.energy - scan).abs() < 1e-12,
        "{} vs {scan}",
        opt.energy
    );
}

#[test]
fn empty_ansatz_returns_reference_energy() {
    let mo = chain(2, 0.9);
    let h = qubit_hamiltonian(&mo);
    let reference = prepare_hf_state(4, 2);
    let opt = optimize_parameters(&h, &[], &reference, &[], 1e-8).unwrap();
    assert!(opt.theta.is_empty());
    assert!((opt.energy - expectation(&reference, &h)).abs() < 1e-12);
}

#[test]
fn h2_spin_adapted_reaches_fci_in_two_iterations() {
    let mo = chain(2, 0.7414);
    let h = qubit_hamiltonian(&mo);
    let fci = fci_ground_state(&mo).unwrap().energy;
    let pool = build_pool(2, 2, PoolKind::SpinAdapted).unwrap();
    let res = adapt_vqe(&h, &pool, &tight()).unwrap();
    assert!((res.energy - fci).abs() < 1e-8, "{} vs {fci}", res.energy);
    assert!(res.iterations() <= 2);
}

#[test]
fn diagonal_hamiltonian_with_hf_ground_state_stops_immediately() {
    let mut h = PauliSum::new(4);
    for q in 0..4 {
        h.add(
            PauliString::single(q, Letter::Z),
            c(if q < 2 { 0.5 } else { 0.8 }, 0.0),
        );
    }
    let pool = build_pool(2, 2, PoolKind::SpinAdapted).unwrap();
    let res = adapt_vqe(&h, &pool, &ConvergenceSpec::default()).unwrap();
    assert_eq!(res.iterations(), 0);
    assert!((res.energy - expectation(&prepare_hf_state(4, 2), &h)).abs() < 1e-14);
}

#[test]
fn h4_adapt_is_monotone_variational_and_number_conserving() {
    let mo = chain(4, 1.5);
    let h = qubit_hamiltonian(&mo);
    let fci = fci_ground_state(&mo).unwrap().energy;
    let n = number_operator(8);
    for kind in PoolKind::ALL {
        let pool = build_pool(4, 4, kind).unwrap();
        let res = adapt_vqe(&h, &pool, &tight()).unwrap();
        for w in res.trace.windows(2) {
            assert!(w[1].energy <= w[0].energy + 1e-10, "{kind}");
        }
        assert!(res.energy >= fci - 1e-9, "{kind}");
        if kind.is_fermionic() {
            assert!((expectation(&res.state, &n) - 4.0).abs() < 1e-9);
            assert!(
                (res.energy - fci).abs() < 1e-6,
                "{kind}: {} vs {fci}",
                res.energy
            );
        }
        // The stored ansatz replays to the same energy on the full register.
        let replay = res.ansatz.prepare(&pool).unwrap();
        assert!((expectation(&replay, &h) - res.energy).abs() < 1e-9);
    }
}
