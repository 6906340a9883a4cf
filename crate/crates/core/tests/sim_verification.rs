//! Cross-checks between the bit simulator, the state-vector simulator, and
//! the port-map oracle on compiled circuits.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qswitch::digraph::{ConnectionDigraph, ConnectionMap, PortId};
use qswitch::planner::{plan, recovery_rounds};
use qswitch::qcircuit::{compile_plan, Circuit};
use qswitch::qsim::{
    check_delivery_exhaustive, extract_port_map, run_bits, run_state, unitary_matrix, BitState,
    OutSource, StateVector,
};

fn compiled(map: &ConnectionMap) -> Circuit {
    compile_plan(&plan(&ConnectionDigraph::from_map(map))).unwrap()
}

fn expected_port_map(map: &ConnectionMap) -> Vec<OutSource> {
    (0..map.n())
        .map(|v| match map.predecessor(PortId(v)) {
            Some(u) => OutSource::Port(u),
            None => OutSource::Zero,
        })
        .collect()
}

#[test]
fn bit_and_state_simulation_agree_on_every_basis_state() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xab0a);
    // Many circuits up to 8 qubits, one each at 9 and 10; always exhaustive.
    let mut sizes: Vec<usize> = (0..60).map(|t| 2 + (t % 7)).collect();
    sizes.extend([9, 10]);
    for n in sizes {
        let map = ConnectionMap::random_mixed(n, &mut rng);
        let circuit = compiled(&map);
        for index in 0..(1usize << n) {
            let bits = BitState::from_index(n, index);
            let expect = run_bits(&circuit, &bits).unwrap();
            let v = StateVector::basis(&bits).unwrap();
            let out = run_state(&circuit, &v).unwrap();
            assert_eq!(out.amp(expect.to_index()), Complex64::new(1.0, 0.0));
            for (i, amp) in out.amplitudes().iter().enumerate() {
                if i != expect.to_index() {
                    assert_eq!(*amp, Complex64::new(0.0, 0.0));
                }
            }
        }
    }
}

#[test]
fn state_simulation_preserves_norm_on_random_vectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x2027);
    for trial in 0..50 {
        let n = 2 + (trial % 5);
        let map = ConnectionMap::random_mixed(n, &mut rng);
        let circuit = compiled(&map);
        let mut amps: Vec<Complex64> = (0..1usize << n)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let norm: f64 = amps.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut amps {
            *a /= norm;
        }
        let v = StateVector::from_amplitudes(amps).unwrap();
        let out = run_state(&circuit, &v).unwrap();
        assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn compiled_circuits_assemble_to_permutation_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0e11);
    for n in 2..=6usize {
        let mut maps = vec![
            ConnectionMap::identity(n),
            // Full rotation: every port to its neighbor.
            ConnectionMap::from_pairs(n, &(0..n).map(|i| (i, (i + 1) % n)).collect::<Vec<_>>())
                .unwrap(),
            ConnectionMap::from_pairs(n, &(1..n).map(|v| (0, v)).collect::<Vec<_>>()).unwrap(),
        ];
        for _ in 0..3 {
            maps.push(ConnectionMap::random_mixed(n, &mut rng));
            maps.push(ConnectionMap::random_unicast(n, &mut rng));
        }
        for map in maps {
            let circuit = compiled(&map);
            let m = unitary_matrix(&circuit).unwrap();
            let dim = 1usize << n;
            // Exactly one 1 per row and per column, zeros elsewhere.
            for row in &m {
                let ones = row
                    .iter()
                    .filter(|&&a| a == Complex64::new(1.0, 0.0))
                    .count();
                let zeros = row
                    .iter()
                    .filter(|&&a| a == Complex64::new(0.0, 0.0))
                    .count();
                assert_eq!((ones, zeros), (1, dim - 1));
            }
            let mut column_ones = vec![0usize; dim];
            for row in &m {
                for (j, &a) in row.iter().enumerate() {
                    if a == Complex64::new(1.0, 0.0) {
                        column_ones[j] += 1;
                    }
                }
            }
            assert!(column_ones.iter().all(|&c| c == 1));
            // U * U^dagger = I, exactly: entries are 0.0 and 1.0.
            for i in 0..dim {
                for j in 0..dim {
                    let entry: Complex64 =
                        (0..dim).map(|k| m[i][k] * m[j][k].conj()).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert_eq!(entry, Complex64::new(want, 0.0));
                }
            }
        }
    }
}

#[test]
fn compiled_circuits_realize_their_maps_one_hot() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x10e1);
    for trial in 0..1000 {
        let n = 2 + (trial % 15); // up to 16 ports
        let map = ConnectionMap::random_mixed(n, &mut rng);
        let circuit = compiled(&map);
        let pm = extract_port_map(&circuit, &map.live_mask()).unwrap();
        assert_eq!(pm.out_source, expected_port_map(&map), "edges {:?}", map.edges());
    }
}

#[test]
fn compiled_circuits_realize_their_maps_exhaustively() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x10e2);
    for trial in 0..200 {
        let n = 2 + (trial % 7); // up to 8 ports
        let map = ConnectionMap::random_mixed(n, &mut rng);
        let circuit = compiled(&map);
        let pm = extract_port_map(&circuit, &map.live_mask()).unwrap();
        assert_eq!(pm.out_source, expected_port_map(&map));
        check_delivery_exhaustive(&circuit, &map.live_mask(), &pm).unwrap();
    }
}

#[test]
fn recovery_targets_hold_zero_before_their_round() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xfeed);
    let mut instrumented = 0;
    for trial in 0..400 {
        let n = 2 + (trial % 15);
        let map = ConnectionMap::random_mixed(n, &mut rng);
        let p = plan(&ConnectionDigraph::from_map(&map));
        let rounds = recovery_rounds(&p);
        if rounds.is_empty() {
            continue;
        }
        instrumented += 1;
        let circuit = compile_plan(&p).unwrap();
        let lead = circuit.depth() - rounds.len();
        for _ in 0..4 {
            let mut bits: Vec<bool> = map
                .live_mask()
                .iter()
                .map(|&live| live && rng.random_bool(0.5))
                .collect();
            for (k, layer) in circuit.layers().iter().enumerate() {
                if k >= lead {
                    for g in layer.gates() {
                        assert!(
                            !bits[g.target.index()],
                            "recovery target {:?} dirty before its copy",
                            g.target
                        );
                    }
                }
                for g in layer.gates() {
                    if bits[g.control.index()] {
                        bits[g.target.index()] ^= true;
                    }
                }
            }
        }
    }
    assert!(instrumented > 50, "only {instrumented} multicast plans exercised");
}
