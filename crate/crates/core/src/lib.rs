//! Compile switch connection configurations into layered CN-gate circuits and
//! verify the result by simulation.
//!
//! An `n x n` digital switch is described, one time slot at a time, by a
//! [`digraph::ConnectionMap`]: each input port either carries no traffic or
//! names the output ports that must receive its data. The crate turns such a
//! configuration into a quantum circuit made exclusively of CN
//! (controlled-NOT) gates, grouped into layers of gates with disjoint
//! supports, and then proves the circuit correct by simulation.
//!
//! The pipeline has four stages:
//!
//! 1. [`digraph`] — model the configuration as a connection digraph and
//!    classify its weakly-connected components (null nodes, loopbacks,
//!    queues, cycles, trees, forests).
//! 2. [`planner`] — reduce the digraph to disjoint loopbacks and cycles plus
//!    a replication schedule, by extending open components into closed ones
//!    and recursively extracting cycles from multicast trees.
//! 3. [`qcircuit`] — emit the layered circuit: three CN gates per
//!    transposition, at most six shared layers for all cycles in parallel,
//!    and one extra layer per replication round.
//! 4. [`qsim`] — verify: classical bit routing, full state-vector simulation
//!    for small port counts, measurement sampling, and a brute-force port-map
//!    oracle.
//!
//! [`fabric`] wraps the pipeline into a word-level switch model with
//! time-slotted schedule replay for circuit- and packet-switching scenarios.
//!
//! Two conventions are fixed project-wide. Qubit `j` is bit `j` of a
//! basis-state label, so port 0 is the least significant bit. All randomness
//! is drawn from ChaCha8 seeded with an explicit `u64`, making every sampled
//! result reproducible.

pub mod digraph;
pub mod fabric;
pub mod planner;
pub mod qcircuit;
pub mod qsim;

pub use digraph::{
    ConnectionDigraph, ConnectionMap, DestSet, PortId, SubDigraph, SubKind, Violation,
};
pub use fabric::{Frame, SlotSchedule, SwitchOutput, Word};
pub use planner::{ExtensionKind, ExtensionRecord, PermutationPlan, RecoveryGroup};
pub use qcircuit::{Circuit, CircuitStats, CnGate, Layer, TranspositionSet};
pub use qsim::{BitState, OutSource, PortPermutationMap, StateVector};
