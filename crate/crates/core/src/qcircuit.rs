//! Layered CN-gate circuits and the compilation from permutation plans.
//!
//! Everything is built from one gate: `CN(control, target)` flips the target
//! qubit exactly when the control is 1. Gates whose supports do not overlap
//! run in parallel and are grouped into a [`Layer`]; circuit depth is the
//! layer count.
//!
//! A transposition of two qubits takes three CN gates. A cycle of length
//! `n >= 3` over positions `q_0 .. q_{n-1}` splits into two sets of disjoint
//! transpositions: `X` pairs position `p` with `-p mod n` and `Y` pairs `p`
//! with `1 - p mod n`. Applying X then Y moves the data at position `p` to
//! `p + 1 mod n`, which is precisely the cycle; each set expands to three
//! layers, so any number of disjoint cycles compiles into at most six layers
//! total. Replication appends one layer per doubling round on top.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::digraph::PortId;
use crate::planner::{recovery_rounds, PermutationPlan};

/// A controlled-NOT gate: flips `target` iff `control` is 1. On classical
/// bits, `(x, y) -> (x, x XOR y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct CnGate {
    pub control: PortId,
    pub target: PortId,
}

impl CnGate {
    /// Panics if control and target coincide; a CN gate needs two distinct
    /// qubits.
    pub fn new(control: PortId, target: PortId) -> Self {
        assert_ne!(control, target, "CN gate requires distinct control and target");
        Self { control, target }
    }
}

/// Gates that execute in parallel: all controls and targets are pairwise
/// distinct.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layer {
    gates: Vec<CnGate>,
}

impl Layer {
    /// Panics if any two gates share a qubit; layer disjointness is a
    /// structural invariant, so violating it is a compiler bug. Gates are
    /// kept sorted by control index.
    pub fn new(mut gates: Vec<CnGate>) -> Self {
        gates.sort();
        let mut used = BTreeSet::new();
        for g in &gates {
            assert!(used.insert(g.control), "layer reuses qubit {:?}", g.control);
            assert!(used.insert(g.target), "layer reuses qubit {:?}", g.target);
        }
        Self { gates }
    }

    pub fn try_new(gates: Vec<CnGate>) -> Result<Self, CircuitError> {
        let mut used = BTreeSet::new();
        for g in &gates {
            if g.control == g.target {
                return Err(CircuitError::SamePort(g.control));
            }
            if !used.insert(g.control) || !used.insert(g.target) {
                return Err(CircuitError::OverlappingSupports);
            }
        }
        Ok(Self::new(gates))
    }

    pub fn gates(&self) -> &[CnGate] {
        &self.gates
    }

    pub fn width(&self) -> usize {
        self.gates.len()
    }
}

/// A set of disjoint unordered qubit pairs, each to be swapped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranspositionSet {
    pairs: Vec<(PortId, PortId)>,
}

impl TranspositionSet {
    /// Pairs are normalized to `(low, high)` and sorted; panics on overlap.
    pub fn new(pairs: Vec<(PortId, PortId)>) -> Self {
        let mut pairs: Vec<(PortId, PortId)> = pairs
            .into_iter()
            .map(|(a, b)| if a <= b { (a, b) } else { (b, a) })
            .collect();
        pairs.sort();
        let mut used = BTreeSet::new();
        for &(a, b) in &pairs {
            assert_ne!(a, b, "transposition requires two distinct qubits");
            assert!(used.insert(a) && used.insert(b), "transpositions overlap");
        }
        Self { pairs }
    }

    pub fn pairs(&self) -> &[(PortId, PortId)] {
        &self.pairs
    }

    pub fn contains(&self, a: PortId, b: PortId) -> bool {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.pairs.contains(&key)
    }

    /// Where the swap set sends each port; identity off the pairs.
    pub fn apply(&self, p: PortId) -> PortId {
        for &(a, b) in &self.pairs {
            if p == a {
                return b;
            }
            if p == b {
                return a;
            }
        }
        p
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// An ordered list of layers over `n` qubits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    n: usize,
    layers: Vec<Layer>,
}

/// Depth, gate count, and gates-per-layer of a circuit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CircuitStats {
    pub depth: usize,
    pub gate_count: usize,
    pub per_layer_widths: Vec<usize>,
}

impl Circuit {
    /// Panics if any gate addresses a qubit outside `0..n`.
    pub fn from_layers(n: usize, layers: Vec<Layer>) -> Self {
        for layer in &layers {
            for g in layer.gates() {
                assert!(
                    g.control.index() < n && g.target.index() < n,
                    "gate {:?}->{:?} outside {n}-qubit circuit",
                    g.control,
                    g.target
                );
            }
        }
        Self { n, layers }
    }

    pub fn empty(n: usize) -> Self {
        Self { n, layers: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn gate_count(&self) -> usize {
        self.layers.iter().map(Layer::width).sum()
    }

    pub fn stats(&self) -> CircuitStats {
        CircuitStats {
            depth: self.depth(),
            gate_count: self.gate_count(),
            per_layer_widths: self.layers.iter().map(Layer::width).collect(),
        }
    }

    /// Canonical text form. Line for layer `k` lists its gates sorted by
    /// control index:
    ///
    /// ```text
    /// QSWITCH-CIRCUIT v1
    /// qubits 8
    /// L0: CN 1 2; CN 4 5; CN 6 7
    /// ```
    ///
    /// Emission is byte-deterministic and [`Circuit::parse_text`] is its
    /// exact inverse.
    pub fn emit_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "QSWITCH-CIRCUIT v1").unwrap();
        writeln!(out, "qubits {}", self.n).unwrap();
        for (k, layer) in self.layers.iter().enumerate() {
            write!(out, "L{k}:").unwrap();
            for (i, g) in layer.gates().iter().enumerate() {
                if i > 0 {
                    write!(out, ";").unwrap();
                }
                write!(out, " CN {} {}", g.control, g.target).unwrap();
            }
            writeln!(out).unwrap();
        }
        out
    }

    /// Parses the canonical text form, rejecting anything that would not
    /// round-trip byte-for-byte (unsorted gates, bad layer numbering,
    /// overlapping supports, out-of-range ports).
    pub fn parse_text(text: &str) -> Result<Self, CircuitParseError> {
        let err = |line: usize, message: &str| CircuitParseError {
            line,
            message: message.to_string(),
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, "QSWITCH-CIRCUIT v1")) => {}
            Some((i, _)) => return Err(err(i + 1, "expected header `QSWITCH-CIRCUIT v1`")),
            None => return Err(err(1, "empty circuit file")),
        }
        let n = match lines.next() {
            Some((i, line)) => match line.strip_prefix("qubits ") {
                Some(rest) => rest
                    .parse::<usize>()
                    .map_err(|_| err(i + 1, "invalid qubit count"))?,
                None => return Err(err(i + 1, "expected `qubits <n>`")),
            },
            None => return Err(err(2, "missing `qubits <n>` line")),
        };
        let mut layers = Vec::new();
        for (i, line) in lines {
            let lineno = i + 1;
            if line.is_empty() {
                return Err(err(lineno, "blank line inside circuit"));
            }
            let rest = line
                .strip_prefix(&format!("L{}: ", layers.len()))
                .ok_or_else(|| err(lineno, "expected `L<k>: ` with consecutive layer index"))?;
            let mut gates = Vec::new();
            for part in rest.split("; ") {
                let fields: Vec<&str> = part.split(' ').collect();
                if fields.len() != 3 || fields[0] != "CN" {
                    return Err(err(lineno, "expected `CN <control> <target>`"));
                }
                let control: usize =
                    fields[1].parse().map_err(|_| err(lineno, "invalid control index"))?;
                let target: usize =
                    fields[2].parse().map_err(|_| err(lineno, "invalid target index"))?;
                if control >= n || target >= n {
                    return Err(err(lineno, "gate port out of range"));
                }
                if control == target {
                    return Err(err(lineno, "control and target coincide"));
                }
                gates.push(CnGate { control: PortId(control), target: PortId(target) });
            }
            if gates.windows(2).any(|w| w[0].control >= w[1].control) {
                return Err(err(lineno, "gates must be sorted by control index"));
            }
            let layer = Layer::try_new(gates)
                .map_err(|e| err(lineno, &format!("invalid layer: {e}")))?;
            layers.push(layer);
        }
        Ok(Self { n, layers })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CircuitError {
    #[error("transposition endpoints coincide at port {0}")]
    SamePort(PortId),
    #[error("cycle of length {0} is too short to compile")]
    CycleTooShort(usize),
    #[error("fan-out source and targets overlap")]
    FanoutOverlap,
    #[error("gates in one layer share a qubit")]
    OverlappingSupports,
    #[error("malformed plan: {0}")]
    InvalidPlan(String),
}

/// Parse failure with the 1-based offending line.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("circuit text line {line}: {message}")]
pub struct CircuitParseError {
    pub line: usize,
    pub message: String,
}

/// The three-gate swap of two qubits, one gate per layer:
/// `CN(a,b) . CN(b,a) . CN(a,b)`.
pub fn compile_transposition(a: PortId, b: PortId) -> Result<Vec<Layer>, CircuitError> {
    if a == b {
        return Err(CircuitError::SamePort(a));
    }
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    Ok(vec![
        Layer::new(vec![CnGate::new(lo, hi)]),
        Layer::new(vec![CnGate::new(hi, lo)]),
        Layer::new(vec![CnGate::new(lo, hi)]),
    ])
}

/// Splits a cycle of length >= 3 into the two disjoint transposition sets
/// whose composition (X first, then Y) realizes it.
///
/// Indices are positions within the cycle's ordered list, mapped back to the
/// actual ports: X reflects positions about 0 (`p <-> -p mod n`), Y about
/// the half-step (`p <-> 1 - p mod n`). Composing the reflections sends `p`
/// to `p + 1`, i.e. every port's data moves to its cycle successor.
pub fn cycle_xy(cycle: &[PortId]) -> Result<(TranspositionSet, TranspositionSet), CircuitError> {
    let len = cycle.len();
    if len < 3 {
        return Err(CircuitError::CycleTooShort(len));
    }
    let reflect_pairs = |f: &dyn Fn(usize) -> usize| {
        let mut pairs = Vec::new();
        for p in 0..len {
            let q = f(p);
            if p < q {
                pairs.push((cycle[p], cycle[q]));
            }
        }
        TranspositionSet::new(pairs)
    };
    let x = reflect_pairs(&|p| (len - p) % len);
    let y = reflect_pairs(&|p| (len + 1 - p) % len);
    Ok((x, y))
}

fn transpositions_to_layers(set: &TranspositionSet) -> [Vec<CnGate>; 3] {
    let mut layers = [Vec::new(), Vec::new(), Vec::new()];
    for &(a, b) in set.pairs() {
        layers[0].push(CnGate::new(a, b));
        layers[1].push(CnGate::new(b, a));
        layers[2].push(CnGate::new(a, b));
    }
    layers
}

/// Compiles one cycle on its own: three layers for a transposition, six for
/// anything longer (X expanded into layers 0-2, Y into 3-5).
pub fn compile_cycle(cycle: &[PortId]) -> Result<Vec<Layer>, CircuitError> {
    match cycle.len() {
        0 | 1 => Err(CircuitError::CycleTooShort(cycle.len())),
        2 => compile_transposition(cycle[0], cycle[1]),
        _ => {
            let (x, y) = cycle_xy(cycle)?;
            let mut layers = Vec::with_capacity(6);
            layers.extend(transpositions_to_layers(&x).into_iter().map(Layer::new));
            layers.extend(transpositions_to_layers(&y).into_iter().map(Layer::new));
            Ok(layers)
        }
    }
}

/// Replicates `source` onto every target by CN doubling: each layer copies
/// from all ports that already hold the value, so `t` targets take
/// `ceil(log2(t + 1))` layers. Copies are exact only for basis-state sources
/// with all-zero targets.
pub fn compile_fanout(source: PortId, targets: &[PortId]) -> Result<Vec<Layer>, CircuitError> {
    let distinct: BTreeSet<PortId> = targets.iter().copied().collect();
    if distinct.len() != targets.len() || distinct.contains(&source) {
        return Err(CircuitError::FanoutOverlap);
    }
    let mut layers = Vec::new();
    let mut holders = vec![source];
    let mut remaining = targets.iter();
    loop {
        let fresh: Vec<PortId> = remaining.by_ref().take(holders.len()).copied().collect();
        if fresh.is_empty() {
            break;
        }
        let gates = fresh
            .iter()
            .enumerate()
            .map(|(i, &t)| CnGate::new(holders[i], t))
            .collect();
        layers.push(Layer::new(gates));
        holders.extend(fresh);
    }
    Ok(layers)
}

/// Compiles a full plan into one circuit.
///
/// All cycle fragments share the same leading layers (their supports are
/// disjoint): six when any cycle has length >= 3, three when only
/// transpositions occur, none when the plan is pure loopbacks. Recovery
/// rounds follow, one layer per round. Loopbacks contribute no gates.
pub fn compile_plan(plan: &PermutationPlan) -> Result<Circuit, CircuitError> {
    validate_plan(plan)?;
    let lead = match plan.cycles.iter().map(Vec::len).max() {
        None => 0,
        Some(2) => 3,
        Some(_) => 6,
    };
    let mut slots: Vec<Vec<CnGate>> = vec![Vec::new(); lead];
    for cycle in &plan.cycles {
        if cycle.len() == 2 {
            let (a, b) = (cycle[0], cycle[1]);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            slots[0].push(CnGate::new(lo, hi));
            slots[1].push(CnGate::new(hi, lo));
            slots[2].push(CnGate::new(lo, hi));
        } else {
            let (x, y) = cycle_xy(cycle)?;
            for (offset, set) in [(0, &x), (3, &y)] {
                for (i, gates) in transpositions_to_layers(set).into_iter().enumerate() {
                    slots[offset + i].extend(gates);
                }
            }
        }
    }
    for round in recovery_rounds(plan) {
        slots.push(round.into_iter().map(|(s, t)| CnGate::new(s, t)).collect());
    }
    let layers = slots.into_iter().map(Layer::new).collect();
    Ok(Circuit::from_layers(plan.n, layers))
}

fn validate_plan(plan: &PermutationPlan) -> Result<(), CircuitError> {
    let bad = |msg: String| Err(CircuitError::InvalidPlan(msg));
    let mut covered = BTreeSet::new();
    for cycle in &plan.cycles {
        if cycle.len() < 2 {
            return bad(format!("cycle {cycle:?} shorter than 2"));
        }
        for &p in cycle {
            if p.index() >= plan.n {
                return bad(format!("port {p:?} out of range"));
            }
            if !covered.insert(p) {
                return bad(format!("port {p:?} covered twice"));
            }
        }
    }
    for &p in &plan.loopbacks {
        if p.index() >= plan.n {
            return bad(format!("port {p:?} out of range"));
        }
        if !covered.insert(p) {
            return bad(format!("port {p:?} covered twice"));
        }
    }
    if covered.len() != plan.n {
        return bad(format!("cycles and loopbacks cover {} of {} ports", covered.len(), plan.n));
    }
    let mut support = BTreeSet::new();
    for group in &plan.recovery {
        if !support.insert(group.source) {
            return bad(format!("recovery port {:?} used twice", group.source));
        }
        for &t in &group.targets {
            if t.index() >= plan.n {
                return bad(format!("port {t:?} out of range"));
            }
            if !support.insert(t) {
                return bad(format!("recovery port {t:?} used twice"));
            }
        }
    }
    Ok(())
}
