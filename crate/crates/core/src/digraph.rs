//! Connection digraphs: the switching state of an `n x n` switch at one
//! time slot.
//!
//! A [`ConnectionMap`] assigns every input port either [`DestSet::Idle`] (no
//! traffic) or a non-empty set of output ports. Because every output may have
//! at most one predecessor, the induced digraph has in-degree at most one
//! everywhere, and each weakly-connected component falls into exactly one of
//! six shapes ([`SubKind`]): null node, loopback, queue, cycle, tree, or
//! forest. Unicast configurations only ever produce the first four; trees and
//! forests appear once some inlet fans out to several outlets.
//!
//! Classification always reports the most specific shape: a queue is a
//! special case of a tree and a loopback of a cycle, but downstream planning
//! needs the deterministic, narrow answer.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

/// One I/O port of an `n x n` switch.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PortId(pub usize);

impl PortId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for PortId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Debug for PortId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.0)
    }
}

/// Destination assignment of a single input port.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum DestSet {
    /// No incoming traffic; the inlet carries stuff bits (all zeros).
    Idle,
    /// Active connection to one (unicast) or more (multicast) output ports.
    To(BTreeSet<PortId>),
}

impl DestSet {
    pub fn unicast(dest: usize) -> Self {
        DestSet::To(BTreeSet::from([PortId(dest)]))
    }

    pub fn multicast<I: IntoIterator<Item = usize>>(dests: I) -> Self {
        DestSet::To(dests.into_iter().map(PortId).collect())
    }

    pub fn is_idle(&self) -> bool {
        matches!(self, DestSet::Idle)
    }
}

/// A single rule violation found while checking a switch configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum Violation {
    /// An input routes to a port index outside `0..n`.
    #[error("input port {input} routes to out-of-range port {dest}")]
    OutOfRange { input: PortId, dest: PortId },
    /// Two different inputs route to the same output.
    #[error("output port {output} has more than one predecessor")]
    OutputContention { output: PortId },
    /// An active input with an empty destination set; idle inlets must use
    /// `DestSet::Idle` so that "no traffic" stays distinguishable from a
    /// malformed entry.
    #[error("input port {input} has an empty destination set")]
    EmptyDestSet { input: PortId },
}

/// A rejected switch configuration, with everything that is wrong about it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvalidMap {
    pub violations: Vec<Violation>,
}

impl fmt::Display for InvalidMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid connection map: ")?;
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for InvalidMap {}

/// Validated switch configuration for one time slot.
///
/// Construction checks all invariants eagerly, so a `ConnectionMap` value is
/// always safe to plan and compile. Values are immutable and hashable; the
/// hash is used to cache compiled circuits across schedule slots.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConnectionMap {
    n: usize,
    dests: Vec<DestSet>,
}

impl ConnectionMap {
    /// Builds a map from one destination entry per port, rejecting any
    /// configuration that violates the port-range, contention, or empty-set
    /// rules.
    pub fn new(n: usize, dests: Vec<DestSet>) -> Result<Self, InvalidMap> {
        assert_eq!(dests.len(), n, "destination table must have one entry per port");
        let violations = Self::check(n, &dests);
        if violations.is_empty() {
            Ok(Self { n, dests })
        } else {
            Err(InvalidMap { violations })
        }
    }

    /// Lists every rule violation in a destination table, in port order with
    /// contention reported once per contended output.
    pub fn check(n: usize, dests: &[DestSet]) -> Vec<Violation> {
        let mut violations = Vec::new();
        let mut pred_count = vec![0usize; n];
        for (i, d) in dests.iter().enumerate() {
            let input = PortId(i);
            match d {
                DestSet::Idle => {}
                DestSet::To(set) => {
                    if set.is_empty() {
                        violations.push(Violation::EmptyDestSet { input });
                    }
                    for &dest in set {
                        if dest.index() >= n {
                            violations.push(Violation::OutOfRange { input, dest });
                        } else {
                            pred_count[dest.index()] += 1;
                        }
                    }
                }
            }
        }
        for (o, &count) in pred_count.iter().enumerate() {
            if count > 1 {
                violations.push(Violation::OutputContention { output: PortId(o) });
            }
        }
        violations
    }

    /// Convenience constructor from `(input, output)` pairs; inputs that
    /// appear several times become multicasts, absent inputs are idle.
    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Self, InvalidMap> {
        let mut dests = vec![DestSet::Idle; n];
        for &(u, v) in pairs {
            assert!(u < n, "input {u} out of range for {n}-port map");
            match &mut dests[u] {
                DestSet::Idle => dests[u] = DestSet::unicast(v),
                DestSet::To(set) => {
                    set.insert(PortId(v));
                }
            }
        }
        Self::new(n, dests)
    }

    /// Every port looped back to itself.
    pub fn identity(n: usize) -> Self {
        let dests = (0..n).map(DestSet::unicast).collect();
        Self::new(n, dests).expect("identity map is always valid")
    }

    /// Every port idle.
    pub fn all_idle(n: usize) -> Self {
        Self::new(n, vec![DestSet::Idle; n]).expect("idle map is always valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dest(&self, input: PortId) -> &DestSet {
        &self.dests[input.index()]
    }

    pub fn dests(&self) -> &[DestSet] {
        &self.dests
    }

    /// All edges `(input, output)` in ascending order.
    pub fn edges(&self) -> Vec<(PortId, PortId)> {
        let mut edges = Vec::new();
        for (u, d) in self.dests.iter().enumerate() {
            if let DestSet::To(set) = d {
                for &v in set {
                    edges.push((PortId(u), v));
                }
            }
        }
        edges
    }

    pub fn edge_count(&self) -> usize {
        self.dests
            .iter()
            .map(|d| match d {
                DestSet::Idle => 0,
                DestSet::To(set) => set.len(),
            })
            .sum()
    }

    /// The unique input feeding `output`, if any.
    pub fn predecessor(&self, output: PortId) -> Option<PortId> {
        for (u, d) in self.dests.iter().enumerate() {
            if let DestSet::To(set) = d {
                if set.contains(&output) {
                    return Some(PortId(u));
                }
            }
        }
        None
    }

    pub fn is_live(&self, input: PortId) -> bool {
        !self.dests[input.index()].is_idle()
    }

    /// Per-port flag: `true` where the inlet carries real traffic.
    pub fn live_mask(&self) -> Vec<bool> {
        self.dests.iter().map(|d| !d.is_idle()).collect()
    }

    /// `true` when every live inlet has exactly one destination.
    pub fn is_unicast(&self) -> bool {
        self.dests.iter().all(|d| match d {
            DestSet::Idle => true,
            DestSet::To(set) => set.len() == 1,
        })
    }

    /// Random partial permutation: live inlets each route to one distinct
    /// outlet.
    pub fn random_unicast<R: Rng>(n: usize, rng: &mut R) -> Self {
        let mut outs: Vec<usize> = (0..n).collect();
        outs.shuffle(rng);
        let mut dests = vec![DestSet::Idle; n];
        for (i, d) in dests.iter_mut().enumerate() {
            if rng.random_bool(0.75) {
                *d = DestSet::unicast(outs[i]);
            }
        }
        Self::new(n, dests).expect("distinct outputs cannot contend")
    }

    /// Random mixed unicast/multicast map: each outlet independently picks at
    /// most one predecessor, so fan-out arises wherever an inlet is picked
    /// more than once.
    pub fn random_mixed<R: Rng>(n: usize, rng: &mut R) -> Self {
        let mut dests = vec![DestSet::Idle; n];
        for o in 0..n {
            if rng.random_bool(0.75) {
                let u = rng.random_range(0..n);
                match &mut dests[u] {
                    DestSet::Idle => dests[u] = DestSet::unicast(o),
                    DestSet::To(set) => {
                        set.insert(PortId(o));
                    }
                }
            }
        }
        Self::new(n, dests).expect("one predecessor per outlet cannot contend")
    }
}

/// Digraph view of a [`ConnectionMap`]: one node per port, one edge per
/// active connection. In-degree is at most 1 everywhere.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectionDigraph {
    n: usize,
    succs: Vec<BTreeSet<PortId>>,
    preds: Vec<Option<PortId>>,
}

impl ConnectionDigraph {
    pub fn from_map(map: &ConnectionMap) -> Self {
        let n = map.n();
        let mut succs = vec![BTreeSet::new(); n];
        let mut preds = vec![None; n];
        for (u, v) in map.edges() {
            succs[u.index()].insert(v);
            preds[v.index()] = Some(u);
        }
        Self { n, succs, preds }
    }

    /// Builds directly from an edge list, applying the same validation as
    /// [`ConnectionMap::new`].
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, InvalidMap> {
        Ok(Self::from_map(&ConnectionMap::from_pairs(n, edges)?))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn successors(&self, u: PortId) -> &BTreeSet<PortId> {
        &self.succs[u.index()]
    }

    pub fn predecessor(&self, v: PortId) -> Option<PortId> {
        self.preds[v.index()]
    }

    pub fn edges(&self) -> Vec<(PortId, PortId)> {
        let mut edges = Vec::new();
        for (u, set) in self.succs.iter().enumerate() {
            for &v in set {
                edges.push((PortId(u), v));
            }
        }
        edges
    }

    pub fn edge_count(&self) -> usize {
        self.succs.iter().map(BTreeSet::len).sum()
    }

    pub fn has_edge(&self, u: PortId, v: PortId) -> bool {
        self.succs[u.index()].contains(&v)
    }

    /// Splits the digraph into its weakly-connected components, each
    /// classified as its most specific shape. Components come back sorted by
    /// their smallest port, and together they partition the node set.
    pub fn decompose(&self) -> Vec<SubDigraph> {
        let mut seen = vec![false; self.n];
        let mut parts = Vec::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            // Undirected flood fill over succ/pred adjacency.
            let mut comp = BTreeSet::new();
            let mut stack = vec![PortId(start)];
            while let Some(u) = stack.pop() {
                if seen[u.index()] {
                    continue;
                }
                seen[u.index()] = true;
                comp.insert(u);
                stack.extend(self.succs[u.index()].iter().copied());
                if let Some(p) = self.preds[u.index()] {
                    stack.push(p);
                }
            }
            let edges: Vec<(PortId, PortId)> = comp
                .iter()
                .flat_map(|&u| self.succs[u.index()].iter().map(move |&v| (u, v)))
                .collect();
            let sub = classify(&comp, &edges)
                .expect("components of a valid connection digraph always classify");
            parts.push(sub);
        }
        parts
    }
}

/// The six component shapes of a connection digraph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubKind {
    NullNode,
    Loopback,
    Queue,
    Cycle,
    Tree,
    Forest,
}

impl fmt::Display for SubKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            SubKind::NullNode => "null node",
            SubKind::Loopback => "loopback",
            SubKind::Queue => "queue",
            SubKind::Cycle => "cycle",
            SubKind::Tree => "tree",
            SubKind::Forest => "forest",
        };
        f.write_str(name)
    }
}

/// One weakly-connected component of a connection digraph, classified as its
/// most specific shape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubDigraph {
    /// Isolated port with no traffic either way.
    NullNode { node: PortId },
    /// Port whose input routes straight back to its own output.
    Loopback { node: PortId },
    /// Open chain `[head, .., tail]`: the head has no predecessor, the tail
    /// no successor, everything else exactly one of each.
    Queue { nodes: Vec<PortId> },
    /// Closed chain, rotated so the smallest port comes first.
    Cycle { nodes: Vec<PortId> },
    /// A root fanning out through internal nodes down to leaves; at least one
    /// node has two or more successors (otherwise it would be a queue).
    Tree {
        root: PortId,
        nodes: Vec<PortId>,
        edges: Vec<(PortId, PortId)>,
    },
    /// Exactly one cycle with queues, trees, and/or null nodes attached to
    /// its nodes.
    Forest {
        nodes: Vec<PortId>,
        edges: Vec<(PortId, PortId)>,
    },
}

impl SubDigraph {
    pub fn kind(&self) -> SubKind {
        match self {
            SubDigraph::NullNode { .. } => SubKind::NullNode,
            SubDigraph::Loopback { .. } => SubKind::Loopback,
            SubDigraph::Queue { .. } => SubKind::Queue,
            SubDigraph::Cycle { .. } => SubKind::Cycle,
            SubDigraph::Tree { .. } => SubKind::Tree,
            SubDigraph::Forest { .. } => SubKind::Forest,
        }
    }

    /// All nodes of the component. Queue and cycle nodes keep their chain
    /// order; other shapes are sorted.
    pub fn nodes(&self) -> Vec<PortId> {
        match self {
            SubDigraph::NullNode { node } | SubDigraph::Loopback { node } => vec![*node],
            SubDigraph::Queue { nodes } | SubDigraph::Cycle { nodes } => nodes.clone(),
            SubDigraph::Tree { nodes, .. } | SubDigraph::Forest { nodes, .. } => nodes.clone(),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            SubDigraph::NullNode { .. } | SubDigraph::Loopback { .. } => 1,
            SubDigraph::Queue { nodes } | SubDigraph::Cycle { nodes } => nodes.len(),
            SubDigraph::Tree { nodes, .. } | SubDigraph::Forest { nodes, .. } => nodes.len(),
        }
    }

    /// The component's edge set, reconstructed from chain order where the
    /// shape implies it.
    pub fn edges(&self) -> Vec<(PortId, PortId)> {
        match self {
            SubDigraph::NullNode { .. } => Vec::new(),
            SubDigraph::Loopback { node } => vec![(*node, *node)],
            SubDigraph::Queue { nodes } => {
                nodes.windows(2).map(|w| (w[0], w[1])).collect()
            }
            SubDigraph::Cycle { nodes } => {
                let mut edges: Vec<_> = nodes.windows(2).map(|w| (w[0], w[1])).collect();
                edges.push((nodes[nodes.len() - 1], nodes[0]));
                edges
            }
            SubDigraph::Tree { edges, .. } | SubDigraph::Forest { edges, .. } => edges.clone(),
        }
    }

    /// Nodes with no successor. Non-empty for queues (the tail) and trees;
    /// empty for cycles.
    pub fn leaves(&self) -> Vec<PortId> {
        let nodes = self.nodes();
        let edges = self.edges();
        let with_out: BTreeSet<PortId> = edges.iter().map(|&(u, _)| u).collect();
        nodes.into_iter().filter(|p| !with_out.contains(p)).collect()
    }
}

/// The component could not be matched to any of the six shapes; the input
/// broke a structural precondition.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unclassifiable sub-digraph: {reason}")]
pub struct Unclassifiable {
    pub reason: String,
}

fn unclassifiable(reason: impl Into<String>) -> Unclassifiable {
    Unclassifiable { reason: reason.into() }
}

/// Classifies one weakly-connected component with in-degree at most 1 as its
/// most specific shape.
///
/// Specificity order: null node and loopback before everything, queue before
/// tree, cycle before forest. The decision runs on degree counts alone: a
/// connected component with `V` nodes and in-degree <= 1 has either `V - 1`
/// edges (no cycle: queue or tree) or `V` edges (exactly one cycle: cycle or
/// forest).
pub fn classify(
    nodes: &BTreeSet<PortId>,
    edges: &[(PortId, PortId)],
) -> Result<SubDigraph, Unclassifiable> {
    if nodes.is_empty() {
        return Err(unclassifiable("empty node set"));
    }
    let mut indeg: BTreeMap<PortId, usize> = nodes.iter().map(|&p| (p, 0)).collect();
    let mut succs: BTreeMap<PortId, BTreeSet<PortId>> =
        nodes.iter().map(|&p| (p, BTreeSet::new())).collect();
    for &(u, v) in edges {
        if !nodes.contains(&u) || !nodes.contains(&v) {
            return Err(unclassifiable(format!("edge {u:?}->{v:?} leaves the node set")));
        }
        if !succs.get_mut(&u).unwrap().insert(v) {
            return Err(unclassifiable(format!("duplicate edge {u:?}->{v:?}")));
        }
        *indeg.get_mut(&v).unwrap() += 1;
    }
    if let Some((&v, _)) = indeg.iter().find(|&(_, &d)| d > 1) {
        return Err(unclassifiable(format!("node {v:?} has more than one predecessor")));
    }

    if nodes.len() == 1 {
        let node = *nodes.iter().next().unwrap();
        return if edges.is_empty() {
            Ok(SubDigraph::NullNode { node })
        } else {
            Ok(SubDigraph::Loopback { node })
        };
    }

    if !weakly_connected(nodes, edges) {
        return Err(unclassifiable("not weakly connected"));
    }

    let node_list: Vec<PortId> = nodes.iter().copied().collect();
    let edge_count: usize = succs.values().map(BTreeSet::len).sum();
    let all_out_one = succs.values().all(|s| s.len() == 1);
    let all_in_one = indeg.values().all(|&d| d == 1);

    if edge_count == nodes.len() && all_out_one && all_in_one {
        // Pure cycle: walk the unique successor chain from the smallest node.
        let start = node_list[0];
        let mut order = vec![start];
        let mut cur = *succs[&start].iter().next().unwrap();
        while cur != start {
            order.push(cur);
            cur = *succs[&cur].iter().next().unwrap();
        }
        if order.len() != nodes.len() {
            return Err(unclassifiable("multiple disjoint cycles in one component"));
        }
        return Ok(SubDigraph::Cycle { nodes: order });
    }

    let mut sorted_edges: Vec<(PortId, PortId)> = edges.to_vec();
    sorted_edges.sort();

    if edge_count == nodes.len() {
        return Ok(SubDigraph::Forest { nodes: node_list, edges: sorted_edges });
    }

    if edge_count + 1 == nodes.len() {
        let root = *indeg
            .iter()
            .find(|&(_, &d)| d == 0)
            .expect("acyclic component has a root")
            .0;
        if succs.values().all(|s| s.len() <= 1) {
            // Single open chain from head to tail.
            let mut order = vec![root];
            let mut cur = root;
            while let Some(&next) = succs[&cur].iter().next() {
                order.push(next);
                cur = next;
            }
            debug_assert_eq!(order.len(), nodes.len());
            return Ok(SubDigraph::Queue { nodes: order });
        }
        return Ok(SubDigraph::Tree { root, nodes: node_list, edges: sorted_edges });
    }

    Err(unclassifiable(format!(
        "{} nodes with {} edges cannot form a connected in-degree-1 component",
        nodes.len(),
        edge_count
    )))
}

fn weakly_connected(nodes: &BTreeSet<PortId>, edges: &[(PortId, PortId)]) -> bool {
    let mut adj: BTreeMap<PortId, Vec<PortId>> = nodes.iter().map(|&p| (p, Vec::new())).collect();
    for &(u, v) in edges {
        adj.get_mut(&u).unwrap().push(v);
        adj.get_mut(&v).unwrap().push(u);
    }
    let start = *nodes.iter().next().unwrap();
    let mut seen = BTreeSet::from([start]);
    let mut stack = vec![start];
    while let Some(u) = stack.pop() {
        for &v in &adj[&u] {
            if seen.insert(v) {
                stack.push(v);
            }
        }
    }
    seen.len() == nodes.len()
}
