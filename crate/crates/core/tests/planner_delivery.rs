//! Delivery correctness of plans, checked by direct interpretation.
//!
//! The oracle here executes a plan *without gates*: cycles move data one
//! step, recovery rounds copy it. If interpretation delivers every edge of
//! the original digraph, the plan is right regardless of how it later
//! compiles.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qswitch::digraph::{ConnectionDigraph, ConnectionMap, PortId};
use qswitch::planner::{plan, recovery_rounds, ExtensionKind, PermutationPlan};

/// Executes the plan literally: cycle steps as a data permutation, recovery
/// rounds as copies. Independent of the CN-gate compilation path.
fn interpret(plan: &PermutationPlan, input: &[bool]) -> Vec<bool> {
    let before = input.to_vec();
    let mut wires = before.clone(); // loopbacks keep their data
    for cycle in &plan.cycles {
        for (i, &p) in cycle.iter().enumerate() {
            let succ = cycle[(i + 1) % cycle.len()];
            wires[succ.index()] = before[p.index()];
        }
    }
    for round in recovery_rounds(plan) {
        for (s, t) in round {
            wires[t.index()] = wires[s.index()];
        }
    }
    wires
}

/// One random valid-domain input: live inlets random, idle inlets zero.
fn random_input<R: Rng>(map: &ConnectionMap, rng: &mut R) -> Vec<bool> {
    map.live_mask()
        .iter()
        .map(|&live| live && rng.random_bool(0.5))
        .collect()
}

fn assert_delivery(map: &ConnectionMap, plan: &PermutationPlan, input: &[bool]) {
    let output = interpret(plan, input);
    for (v, &got) in output.iter().enumerate() {
        let want = match map.predecessor(PortId(v)) {
            Some(u) => input[u.index()],
            None => false,
        };
        assert_eq!(
            got, want,
            "outlet {v} delivered wrong bit (map edges {:?})",
            map.edges()
        );
    }
}

#[test]
fn plans_deliver_on_random_digraphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xde11);
    for trial in 0..1000 {
        let n = 1 + (trial % 32);
        let map = ConnectionMap::random_mixed(n, &mut rng);
        let p = plan(&ConnectionDigraph::from_map(&map));
        for _ in 0..4 {
            let input = random_input(&map, &mut rng);
            assert_delivery(&map, &p, &input);
        }
        // All live inlets high exercises every copy path at once.
        let high: Vec<bool> = map.live_mask();
        assert_delivery(&map, &p, &high);
    }
}

#[test]
fn unicast_plans_use_no_recovery_and_no_e3() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0171);
    for trial in 0..500 {
        let n = 1 + (trial % 32);
        let map = ConnectionMap::random_unicast(n, &mut rng);
        let p = plan(&ConnectionDigraph::from_map(&map));
        assert!(p.recovery.is_empty());
        assert!(p.extensions.iter().all(|e| e.kind != ExtensionKind::E3));
    }
}

#[test]
fn cycles_and_loopbacks_partition_the_ports() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc0ce);
    for trial in 0..500 {
        let n = 1 + (trial % 32);
        let map = ConnectionMap::random_mixed(n, &mut rng);
        let p = plan(&ConnectionDigraph::from_map(&map));
        let mut covered = BTreeSet::new();
        for cycle in &p.cycles {
            assert!(cycle.len() >= 2);
            assert_eq!(*cycle.iter().min().unwrap(), cycle[0], "cycle not rotation-normalized");
            for &node in cycle {
                assert!(covered.insert(node), "{node:?} covered twice");
            }
        }
        for &node in &p.loopbacks {
            assert!(covered.insert(node), "{node:?} covered twice");
        }
        assert_eq!(covered.len(), n);
    }
}

#[test]
fn plan_edge_accounting_round_trips() {
    // Cycle steps plus cuts, minus extension edges, reproduce the digraph.
    let mut rng = ChaCha8Rng::seed_from_u64(0xedbe);
    for trial in 0..500 {
        let n = 1 + (trial % 24);
        let map = ConnectionMap::random_mixed(n, &mut rng);
        let g = ConnectionDigraph::from_map(&map);
        let p = plan(&g);
        let extensions: BTreeSet<(PortId, PortId)> =
            p.extensions.iter().map(|e| e.added_edge).collect();
        let mut realized: BTreeSet<(PortId, PortId)> = BTreeSet::new();
        for cycle in &p.cycles {
            for (i, &u) in cycle.iter().enumerate() {
                realized.insert((u, cycle[(i + 1) % cycle.len()]));
            }
        }
        for &l in &p.loopbacks {
            realized.insert((l, l));
        }
        let mut rebuilt: BTreeSet<(PortId, PortId)> =
            realized.difference(&extensions).copied().collect();
        // Loopback steps only count where the self-edge really exists.
        rebuilt.retain(|&(u, v)| u != v || g.has_edge(u, v));
        rebuilt.extend(p.cut_edges.iter().copied());
        let original: BTreeSet<(PortId, PortId)> = g.edges().into_iter().collect();
        assert_eq!(rebuilt, original, "n={n} trial={trial}");
    }
}

#[test]
fn recovery_groups_have_disjoint_supports() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xd15c);
    for trial in 0..500 {
        let n = 2 + (trial % 31);
        let map = ConnectionMap::random_mixed(n, &mut rng);
        let p = plan(&ConnectionDigraph::from_map(&map));
        let mut support = BTreeSet::new();
        for group in &p.recovery {
            assert!(support.insert(group.source), "source {:?} reused", group.source);
            for &t in &group.targets {
                assert!(support.insert(t), "target {t:?} reused");
            }
        }
        let sources: BTreeSet<PortId> = p.recovery.iter().map(|g| g.source).collect();
        for group in &p.recovery {
            for t in &group.targets {
                assert!(!sources.contains(t), "target {t:?} is another group's source");
            }
        }
    }
}

#[test]
fn star_tree_round_counts_match_the_doubling_formula() {
    fn ceil_log2(x: usize) -> usize {
        (usize::BITS - (x - 1).leading_zeros()) as usize
    }
    for r in 1..=16 {
        // One inlet multicast to r outlets: 0 -> {1, .., r}.
        let n = r + 1;
        let pairs: Vec<(usize, usize)> = (1..=r).map(|v| (0, v)).collect();
        let map = ConnectionMap::from_pairs(n, &pairs).unwrap();
        let p = plan(&ConnectionDigraph::from_map(&map));
        assert_eq!(p.max_recovery_fanout(), r.saturating_sub(1));
        let rounds = recovery_rounds(&p);
        if r == 1 {
            // A single unicast edge is a queue; no recovery at all.
            assert!(rounds.is_empty());
        } else {
            assert_eq!(rounds.len(), ceil_log2(r - 1 + 1), "r={r}");
        }
    }
}

#[test]
fn synthetic_groups_round_counts() {
    fn ceil_log2(x: usize) -> usize {
        (usize::BITS - (x - 1).leading_zeros()) as usize
    }
    // Drive recovery_rounds directly over group sizes 1..=16.
    for t in 1..=16usize {
        let n = t + 2;
        let plan = PermutationPlan {
            n,
            cycles: vec![vec![PortId(0), PortId(n - 1)]],
            loopbacks: (1..=t).map(PortId).collect(),
            recovery: vec![qswitch::planner::RecoveryGroup {
                source: PortId(n - 1),
                targets: (1..=t).map(PortId).collect(),
            }],
            extensions: vec![],
            cut_edges: vec![],
        };
        let rounds = recovery_rounds(&plan);
        assert_eq!(rounds.len(), ceil_log2(t + 1), "t={t}");
        let copies: usize = rounds.iter().map(Vec::len).sum();
        assert_eq!(copies, t);
    }
}
