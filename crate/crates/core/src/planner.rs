//! Reduction of a connection digraph to loopbacks and disjoint cycles plus a
//! replication schedule.
//!
//! Loopbacks need no circuit and any set of disjoint cycles compiles into a
//! constant number of gate layers, so planning means reshaping every
//! component into those two forms without changing what the switch delivers:
//!
//! * **E1** closes a null node into a loopback (`v -> v`).
//! * **E2** closes a queue into a cycle (tail -> head).
//! * **E3** closes a tree into a forest (one leaf -> root).
//!
//! Each extension only moves stuff bits from an idle inlet to a traffic-free
//! outlet. A forest then undergoes *cycle extraction*: every edge from its
//! unique cycle out to an attachment is cut, the detached parts (null nodes,
//! queues, trees) are reduced recursively, and each cut edge is remembered
//! for *link recovery*. After all cycles have run, the data that a cut edge
//! `v_i -> v_k` should have delivered sits on `v_i`'s in-cycle successor
//! `v_j`, so `v_j` is replicated onto `v_k`. Replication targets hold zeros
//! at that point, which is what makes the later CN-gate copy exact.
//!
//! Recovery is grouped per source and scheduled in doubling rounds: once a
//! copy lands, it serves as a further source, so a group with `t` targets
//! finishes in `ceil(log2(t + 1))` rounds, and disjoint groups share rounds.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::digraph::{classify, ConnectionDigraph, PortId, SubDigraph, SubKind};

/// Which extension process produced an added edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtensionKind {
    /// Null node -> loopback.
    E1,
    /// Queue -> cycle.
    E2,
    /// Tree -> forest.
    E3,
}

/// One edge added during planning. Extension edges carry stuff bits only and
/// never alter the switching function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExtensionRecord {
    pub kind: ExtensionKind,
    pub added_edge: (PortId, PortId),
}

/// Replication work for one source qubit: after the cycle stage, `source`
/// holds the data owed to every port in `targets`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecoveryGroup {
    pub source: PortId,
    pub targets: Vec<PortId>,
}

/// Output of digraph reduction: a port-disjoint set of cycles and loopbacks
/// covering all ports, plus the bookkeeping that ties them back to the
/// original digraph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationPlan {
    pub n: usize,
    /// Disjoint cycles (length >= 2), each rotated to start at its smallest
    /// port, sorted by that port.
    pub cycles: Vec<Vec<PortId>>,
    /// Ports fixed in place, including extended null nodes.
    pub loopbacks: BTreeSet<PortId>,
    /// Per-source replication groups, sorted by source.
    pub recovery: Vec<RecoveryGroup>,
    /// Every E1/E2/E3 application, in processing order.
    pub extensions: Vec<ExtensionRecord>,
    /// Edges cut during cycle extraction, sorted.
    pub cut_edges: Vec<(PortId, PortId)>,
}

impl PermutationPlan {
    /// Largest recovery group size; zero when no replication is needed.
    pub fn max_recovery_fanout(&self) -> usize {
        self.recovery.iter().map(|g| g.targets.len()).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("expected a {expected}, got a {got}")]
    WrongShape { expected: SubKind, got: SubKind },
    #[error("port {0} is not a leaf of the tree")]
    NotALeaf(PortId),
}

/// E1: closes a null node into a loopback.
pub fn extend_null(sub: &SubDigraph) -> Result<ExtensionRecord, PlanError> {
    match sub {
        SubDigraph::NullNode { node } => Ok(ExtensionRecord {
            kind: ExtensionKind::E1,
            added_edge: (*node, *node),
        }),
        other => Err(PlanError::WrongShape { expected: SubKind::NullNode, got: other.kind() }),
    }
}

/// E2: closes a queue into a cycle by linking its tail back to its head.
pub fn extend_queue(sub: &SubDigraph) -> Result<ExtensionRecord, PlanError> {
    match sub {
        SubDigraph::Queue { nodes } => Ok(ExtensionRecord {
            kind: ExtensionKind::E2,
            added_edge: (nodes[nodes.len() - 1], nodes[0]),
        }),
        other => Err(PlanError::WrongShape { expected: SubKind::Queue, got: other.kind() }),
    }
}

/// E3: closes a tree into a forest by linking the given leaf to the root.
pub fn extend_tree(sub: &SubDigraph, leaf: PortId) -> Result<ExtensionRecord, PlanError> {
    match sub {
        SubDigraph::Tree { root, .. } => {
            if !sub.leaves().contains(&leaf) {
                return Err(PlanError::NotALeaf(leaf));
            }
            Ok(ExtensionRecord { kind: ExtensionKind::E3, added_edge: (leaf, *root) })
        }
        other => Err(PlanError::WrongShape { expected: SubKind::Tree, got: other.kind() }),
    }
}

/// Result of cutting a forest's unique cycle free from its attachments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleExtraction {
    /// The forest's unique cycle, rotated to start at its smallest port. A
    /// single entry means the cycle is a trivial self-loop.
    pub cycle: Vec<PortId>,
    /// Edges from cycle nodes to nodes outside the cycle, sorted.
    pub cuts: Vec<(PortId, PortId)>,
    /// What the cuts detached: null nodes, queues, and/or trees, sorted by
    /// smallest port.
    pub detached: Vec<SubDigraph>,
}

/// Detaches everything hanging off a forest's unique cycle.
///
/// The cycle is found by walking predecessors from any node: in-degree is
/// exactly one everywhere in a forest, so the walk is a function iteration
/// and must enter the cycle. Also accepts a plain cycle dressed as a forest,
/// returning it with no cuts.
pub fn extract_cycle(sub: &SubDigraph) -> Result<CycleExtraction, PlanError> {
    let (nodes, edges) = match sub {
        SubDigraph::Forest { nodes, edges } => (nodes.clone(), edges.clone()),
        SubDigraph::Cycle { .. } => {
            return Ok(CycleExtraction { cycle: sub.nodes(), cuts: Vec::new(), detached: Vec::new() })
        }
        other => Err(PlanError::WrongShape { expected: SubKind::Forest, got: other.kind() })?,
    };
    let pred: BTreeMap<PortId, PortId> = edges.iter().map(|&(u, v)| (v, u)).collect();

    let mut seen = BTreeSet::new();
    let mut cur = nodes[0];
    while seen.insert(cur) {
        cur = pred[&cur];
    }
    // `cur` repeats, so it lies on the cycle; collect it in forward order.
    let mut cycle_rev = vec![cur];
    let mut walk = pred[&cur];
    while walk != cur {
        cycle_rev.push(walk);
        walk = pred[&walk];
    }
    cycle_rev.reverse();
    let cycle = rotate_to_min(cycle_rev);
    let cycle_set: BTreeSet<PortId> = cycle.iter().copied().collect();

    let mut cuts = Vec::new();
    let mut kept: Vec<(PortId, PortId)> = Vec::new();
    for &(u, v) in &edges {
        if cycle_set.contains(&u) && !cycle_set.contains(&v) {
            cuts.push((u, v));
        } else if !cycle_set.contains(&u) {
            kept.push((u, v));
        }
    }
    cuts.sort();

    // Group the remaining nodes into components and classify each.
    let rest: BTreeSet<PortId> =
        nodes.iter().copied().filter(|p| !cycle_set.contains(p)).collect();
    let mut detached = Vec::new();
    let mut unseen = rest.clone();
    while let Some(&start) = unseen.iter().next() {
        let mut comp = BTreeSet::new();
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            if !comp.insert(u) {
                continue;
            }
            for &(a, b) in &kept {
                if a == u && !comp.contains(&b) {
                    stack.push(b);
                }
                if b == u && !comp.contains(&a) {
                    stack.push(a);
                }
            }
        }
        for p in &comp {
            unseen.remove(p);
        }
        let comp_edges: Vec<(PortId, PortId)> =
            kept.iter().copied().filter(|&(u, _)| comp.contains(&u)).collect();
        detached.push(
            classify(&comp, &comp_edges)
                .expect("detached forest parts are valid in-degree-1 components"),
        );
    }
    detached.sort_by_key(|s| s.nodes()[0]);

    Ok(CycleExtraction { cycle, cuts, detached })
}

/// Reduces a whole connection digraph to a [`PermutationPlan`].
///
/// Every component is driven to loopbacks and cycles: null nodes via E1,
/// queues via E2, trees via E3 (always picking the smallest-numbered leaf)
/// followed by cycle extraction, with the detached parts processed
/// recursively. Each recursion step strictly shrinks the unprocessed node
/// set, so the reduction terminates in at most `n` steps.
pub fn plan(g: &ConnectionDigraph) -> PermutationPlan {
    let mut out = PermutationPlan {
        n: g.n(),
        cycles: Vec::new(),
        loopbacks: BTreeSet::new(),
        recovery: Vec::new(),
        extensions: Vec::new(),
        cut_edges: Vec::new(),
    };
    let mut groups: BTreeMap<PortId, Vec<PortId>> = BTreeMap::new();
    let mut work: VecDeque<SubDigraph> = g.decompose().into();

    while let Some(sub) = work.pop_front() {
        match &sub {
            SubDigraph::NullNode { node } => {
                out.extensions.push(extend_null(&sub).unwrap());
                out.loopbacks.insert(*node);
            }
            SubDigraph::Loopback { node } => {
                out.loopbacks.insert(*node);
            }
            SubDigraph::Queue { nodes } => {
                out.extensions.push(extend_queue(&sub).unwrap());
                out.cycles.push(rotate_to_min(nodes.clone()));
            }
            SubDigraph::Cycle { nodes } => {
                out.cycles.push(nodes.clone());
            }
            SubDigraph::Tree { .. } | SubDigraph::Forest { .. } => {
                let forest = match &sub {
                    SubDigraph::Tree { nodes, edges, .. } => {
                        let leaf = sub.leaves()[0];
                        let ext = extend_tree(&sub, leaf).unwrap();
                        let mut edges = edges.clone();
                        edges.push(ext.added_edge);
                        edges.sort();
                        out.extensions.push(ext);
                        SubDigraph::Forest { nodes: nodes.clone(), edges }
                    }
                    _ => sub.clone(),
                };
                let extraction = extract_cycle(&forest).unwrap();
                if extraction.cycle.len() == 1 {
                    out.loopbacks.insert(extraction.cycle[0]);
                } else {
                    out.cycles.push(extraction.cycle.clone());
                }
                for &(v_i, v_k) in &extraction.cuts {
                    let pos = extraction.cycle.iter().position(|&p| p == v_i).unwrap();
                    let v_j = extraction.cycle[(pos + 1) % extraction.cycle.len()];
                    groups.entry(v_j).or_default().push(v_k);
                }
                out.cut_edges.extend(extraction.cuts.iter().copied());
                for part in extraction.detached.into_iter().rev() {
                    work.push_front(part);
                }
            }
        }
    }

    out.cycles.sort_by_key(|c| c[0]);
    out.cut_edges.sort();
    out.recovery = groups
        .into_iter()
        .map(|(source, mut targets)| {
            targets.sort();
            RecoveryGroup { source, targets }
        })
        .collect();
    out
}

/// Schedules all recovery copies into doubling rounds.
///
/// Round `k` copies from every port that already holds the data onto fresh
/// targets, so holders double each round; a group with `t` targets uses
/// `ceil(log2(t + 1))` rounds. Rounds are shared across groups (their
/// supports are disjoint), and pairs within a round are sorted by source.
pub fn recovery_rounds(plan: &PermutationPlan) -> Vec<Vec<(PortId, PortId)>> {
    let mut rounds: Vec<Vec<(PortId, PortId)>> = Vec::new();
    for group in &plan.recovery {
        let mut holders = vec![group.source];
        let mut remaining = group.targets.iter();
        let mut round = 0;
        loop {
            let fresh: Vec<PortId> = remaining.by_ref().take(holders.len()).copied().collect();
            if fresh.is_empty() {
                break;
            }
            if rounds.len() <= round {
                rounds.push(Vec::new());
            }
            for (i, &t) in fresh.iter().enumerate() {
                rounds[round].push((holders[i], t));
            }
            holders.extend(fresh);
            round += 1;
        }
    }
    for round in &mut rounds {
        round.sort();
    }
    rounds
}

fn rotate_to_min(mut nodes: Vec<PortId>) -> Vec<PortId> {
    let min_pos = nodes
        .iter()
        .enumerate()
        .min_by_key(|&(_, p)| p)
        .map(|(i, _)| i)
        .unwrap_or(0);
    nodes.rotate_left(min_pos);
    nodes
}
