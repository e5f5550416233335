use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use qsim_core::device::{build_2d_lattice, build_bilayer_unit, build_chain};
use qsim_core::schedule::check_certificate_dense;
use qsim_core::statevector::diagonal_energies;
use qsim_core::{
    Basis, Couplings, DeviceGraph, DrivePulse, Edge, Gate, GraphStateCertificate, Outcome, OutcomePolicy, Qubit, QubitRole,
    StabilizerTableau, StateVector,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// Graph on `n` qubits with the listed edges present, detunings `omega`.
fn graph(n: usize, edges: &[(usize, usize, f64)], omega: &[f64]) -> DeviceGraph {
    let qubits = (0..n).map(|id| Qubit { id, role: QubitRole::Logical, omega: omega[id], pos: None }).collect();
    let edges = edges.iter().map(|&(a, b, g)| Edge { a, b, g }).collect();
    DeviceGraph::new(qubits, edges, BTreeMap::new()).unwrap()
}

fn arb_graph(max_n: usize) -> impl Strategy<Value = DeviceGraph> {
    (2..=max_n).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        let k = pairs.len();
        (
            proptest::collection::vec(proptest::option::of(0.1f64..3.0), k),
            proptest::collection::vec(-2.0f64..2.0, n),
            any::<bool>(),
        )
            .prop_map(move |(gs, omega, framed)| {
                let edges: Vec<_> = pairs.iter().zip(&gs).filter_map(|(&(a, b), g)| g.map(|g| (a, b, g))).collect();
                let g = graph(n, &edges, &omega);
                if framed {
                    g.assign_frame()
                } else {
                    g
                }
            })
    })
}

fn random_state(n: usize, seed: u64) -> StateVector {
    StateVector::random(n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

/// Full Hamiltonian of a driven graph as a dense matrix.
fn dense_hamiltonian(g: &DeviceGraph, p: &DrivePulse) -> DMatrix<C64> {
    let e = diagonal_energies(g);
    let dim = e.len();
    let bit = 1usize << p.qubit;
    let mut h = DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
    for i in 0..dim {
        let excited = if i & bit != 0 { p.frame_shift } else { 0.0 };
        h[(i, i)] = C64::new(e[i] - excited, 0.0);
        if i & bit == 0 {
            let off = C64::from_polar(0.5 * p.lambda, -p.theta);
            h[(i, i | bit)] = off;
            h[(i | bit, i)] = off.conj();
        }
    }
    h
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn assign_frame_idempotent(g in arb_graph(5)) {
        let once = g.assign_frame();
        prop_assert!(once.frame_is_assigned(1e-12));
        prop_assert_eq!(once.assign_frame(), once);
    }

    #[test]
    fn driven_evolution_matches_matrix_exponential(
        g in arb_graph(4),
        q in 0usize..4,
        lambda in 0.0f64..5.0,
        theta in 0.0f64..6.3,
        duration in 0.0f64..3.0,
        shift in -1.0f64..1.0,
        seed in any::<u64>(),
    ) {
        let n = g.num_qubits();
        let pulse = DrivePulse { qubit: q % n, lambda, theta, duration, frame_shift: shift };
        let mut s = random_state(n, seed);
        let v = DMatrix::from_column_slice(1 << n, 1, s.amplitudes());
        let want = (dense_hamiltonian(&g, &pulse) * C64::new(0.0, -duration)).exp() * v;
        s.evolve_driven(&g, &pulse).unwrap();
        for (x, y) in s.amplitudes().iter().zip(want.iter()) {
            prop_assert!((x - y).norm() < 1e-9);
        }
        prop_assert!((s.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_drive_is_free_evolution(g in arb_graph(4), t in 0.0f64..5.0, seed in any::<u64>()) {
        let n = g.num_qubits();
        let mut a = random_state(n, seed);
        let mut b = a.clone();
        a.evolve_driven(&g, &DrivePulse { qubit: 0, lambda: 0.0, theta: 0.3, duration: t, frame_shift: 0.0 }).unwrap();
        b.evolve_diagonal(&g, t).unwrap();
        prop_assert!((a.fidelity(&b).unwrap() - 1.0).abs() < 1e-12);
        prop_assert!((a.inner(&b).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn free_evolution_phases_add(g in arb_graph(5), t1 in 0.0f64..4.0, t2 in 0.0f64..4.0, seed in any::<u64>()) {
        let mut a = random_state(g.num_qubits(), seed);
        let mut b = a.clone();
        a.evolve_diagonal(&g, t1).unwrap();
        a.evolve_diagonal(&g, t2).unwrap();
        b.evolve_diagonal(&g, t1 + t2).unwrap();
        prop_assert!((a.inner(&b).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn unitaries_and_measurement_keep_norm(seed in any::<u64>(), q in 0usize..4, angle in -3.2f64..3.2) {
        let mut s = random_state(4, seed);
        for gate in [Gate::X, Gate::Y, Gate::Z, Gate::H, Gate::SPlus, Gate::SMinus, Gate::Rx(angle), Gate::Ry(angle), Gate::Phase(angle)] {
            s.apply_instant_gate(q, gate).unwrap();
            prop_assert!((s.norm() - 1.0).abs() < 1e-12);
        }
        s.apply_cz(q, (q + 1) % 4).unwrap();
        for basis in [Basis::X, Basis::Y, Basis::Z] {
            s.measure((q + 2) % 4, basis, &mut OutcomePolicy::sample(seed)).unwrap();
            prop_assert!((s.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ground_qubit_decouples(
        g_a in 0.1f64..3.0,
        g_b in 0.1f64..3.0,
        g_other in 0.1f64..3.0,
        t in 0.0f64..6.0,
        seed in any::<u64>(),
    ) {
        // qubit 1 stays ground; its couplings must not reach qubits 0, 2, 3
        let make = |ga: f64, gb: f64| {
            graph(4, &[(0, 1, ga), (1, 2, gb), (2, 3, g_other)], &[0.0; 4]).assign_frame()
        };
        let rest = random_state(3, seed);
        let mut amps = vec![C64::new(0.0, 0.0); 16];
        for (k, a) in rest.amplitudes().iter().enumerate() {
            amps[(k & 1) | (k >> 1) << 2] = *a;
        }
        let init = StateVector::from_amplitudes(4, amps).unwrap();
        let mut x = init.clone();
        let mut y = init;
        x.evolve_diagonal(&make(g_a, g_b), t).unwrap();
        y.evolve_diagonal(&make(1.0, 1.0), t).unwrap();
        let dx = x.reduced_density(&[0, 2, 3]).unwrap();
        let dy = y.reduced_density(&[0, 2, 3]).unwrap();
        prop_assert!(dx.trace_distance(&dy).unwrap() < 1e-10);
    }

    #[test]
    fn certificate_agrees_with_graph_state_fidelity(
        n in 2usize..7,
        mask in any::<u32>(),
        flip in proptest::option::of(0usize..7),
    ) {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        let edges: Vec<_> = pairs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &p)| p).collect();
        let cert = GraphStateCertificate::new((0..n).collect(), edges.clone()).unwrap();
        let mut reference = StateVector::ground(n).unwrap();
        for q in 0..n {
            reference.apply_instant_gate(q, Gate::H).unwrap();
        }
        for &(a, b) in &edges {
            reference.apply_cz(a, b).unwrap();
        }
        let mut dense = reference.clone();
        let mut tab = StabilizerTableau::ground(n).unwrap();
        for q in 0..n {
            tab.apply_h(q).unwrap();
        }
        for &(a, b) in &edges {
            tab.apply_cz(a, b).unwrap();
        }
        if let Some(f) = flip.filter(|&f| f < n) {
            dense.apply_instant_gate(f, Gate::Z).unwrap();
            tab.apply_gate(f, Gate::Z).unwrap();
        }
        let exact = (dense.fidelity(&reference).unwrap() - 1.0).abs() < 1e-10;
        prop_assert_eq!(tab.check_certificate(&cert).unwrap().pass, exact);
        prop_assert_eq!(check_certificate_dense(&dense, &cert, 1e-10).unwrap().pass, exact);
    }
}

#[test]
fn builders_keep_mains_apart_and_counts_match() {
    for m in [2usize, 4, 6] {
        let chain = build_chain(m, &Couplings::Uniform(1.0)).unwrap();
        assert_eq!((chain.num_qubits(), chain.edges().len()), (2 * m - 1, 2 * (m - 1)));
        let lattice = build_2d_lattice(m, 1.0).unwrap();
        assert_eq!(lattice.mains().len(), m * m);
        for g in [&chain, &lattice] {
            assert!(g.edges().iter().all(|e| !(g.role(e.a).is_main() && g.role(e.b).is_main())));
        }
    }
    let bil = build_bilayer_unit(2, 1.0).unwrap();
    assert_eq!(bil.num_qubits(), 56);
    assert!(bil.edges().iter().all(|e| !(bil.role(e.a).is_main() && bil.role(e.b).is_main())));
}

#[test]
fn forced_impossible_outcome_is_an_error() {
    let mut s = StateVector::ground(2).unwrap();
    assert!(s.measure(0, Basis::Z, &mut OutcomePolicy::force([Outcome::Plus])).is_err());
    let mut tab = StabilizerTableau::ground(2).unwrap();
    assert!(tab.measure_pauli(0, Basis::Z, &mut OutcomePolicy::force([Outcome::Plus])).is_err());
}
