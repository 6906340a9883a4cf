//! Circuit verification: classical bit routing, state-vector simulation,
//! measurement sampling, and a brute-force port-map oracle.
//!
//! Basis-state convention, fixed project-wide: qubit `j` is bit `j` of the
//! basis label, so port 0 is the least significant bit and the label of a
//! [`BitState`] is `sum_j bits[j] << j`.
//!
//! CN gates permute amplitudes, so state-vector simulation involves no
//! arithmetic beyond moving complex numbers around; norms are preserved to
//! the last ulp and tolerance checks can be tight (1e-12).

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::digraph::PortId;
use crate::qcircuit::{Circuit, CnGate};

/// Largest state vector the crate will allocate unless a caller raises the
/// cap explicitly: 2^12 amplitudes.
pub const DEFAULT_MAX_QUBITS: usize = 12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("port {port} out of range for {n} qubits")]
    PortOutOfRange { port: PortId, n: usize },
    #[error("state has {got} qubits, circuit has {expected}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("{n} qubits exceed the state-vector cap of {max}")]
    TooManyQubits { n: usize, max: usize },
    #[error("state vector norm {norm} is not 1 within tolerance")]
    NotNormalized { norm: f64 },
    #[error("outlet {outlet} is fed by {sources:?}, not by a single live inlet")]
    NotAPortMap { outlet: PortId, sources: Vec<PortId> },
    #[error("exhaustive check over {live} live inlets is too large")]
    TooManyLiveInlets { live: usize },
}

/// One classical bit per port.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitState {
    bits: Vec<bool>,
}

impl BitState {
    pub fn zeros(n: usize) -> Self {
        Self { bits: vec![false; n] }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// All zeros except port `p`.
    pub fn one_hot(n: usize, p: PortId) -> Self {
        let mut s = Self::zeros(n);
        s.bits[p.index()] = true;
        s
    }

    /// Decodes a basis label (port 0 = least significant bit).
    pub fn from_index(n: usize, index: usize) -> Self {
        Self { bits: (0..n).map(|j| (index >> j) & 1 == 1).collect() }
    }

    /// The basis label of this bit pattern.
    pub fn to_index(&self) -> usize {
        self.bits
            .iter()
            .enumerate()
            .fold(0usize, |acc, (j, &b)| acc | ((b as usize) << j))
    }

    pub fn n(&self) -> usize {
        self.bits.len()
    }

    pub fn get(&self, p: PortId) -> bool {
        self.bits[p.index()]
    }

    pub fn set(&mut self, p: PortId, value: bool) {
        self.bits[p.index()] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }
}

/// Applies one CN gate to classical bits: target ^= control.
pub fn apply_cn_bits(s: &BitState, g: &CnGate) -> Result<BitState, SimError> {
    let n = s.n();
    for p in [g.control, g.target] {
        if p.index() >= n {
            return Err(SimError::PortOutOfRange { port: p, n });
        }
    }
    let mut out = s.clone();
    if out.bits[g.control.index()] {
        out.bits[g.target.index()] ^= true;
    }
    Ok(out)
}

/// Runs a circuit on classical bits, layer by layer. Order within a layer is
/// irrelevant because supports are disjoint.
pub fn run_bits(c: &Circuit, s: &BitState) -> Result<BitState, SimError> {
    if s.n() != c.n() {
        return Err(SimError::SizeMismatch { expected: c.n(), got: s.n() });
    }
    let mut bits = s.bits.clone();
    for layer in c.layers() {
        for g in layer.gates() {
            if bits[g.control.index()] {
                bits[g.target.index()] ^= true;
            }
        }
    }
    Ok(BitState { bits })
}

/// Normalized complex amplitudes over all `2^n` basis states.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
}

impl StateVector {
    /// The basis state for a bit pattern, within the default qubit cap.
    pub fn basis(bits: &BitState) -> Result<Self, SimError> {
        Self::basis_capped(bits, DEFAULT_MAX_QUBITS)
    }

    pub fn basis_capped(bits: &BitState, max_qubits: usize) -> Result<Self, SimError> {
        let n = bits.n();
        if n > max_qubits {
            return Err(SimError::TooManyQubits { n, max: max_qubits });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[bits.to_index()] = Complex64::new(1.0, 0.0);
        Ok(Self { amps })
    }

    /// Wraps raw amplitudes; the length must be a power of two and the norm
    /// must be 1 within 1e-12.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self, SimError> {
        Self::from_amplitudes_capped(amps, DEFAULT_MAX_QUBITS)
    }

    pub fn from_amplitudes_capped(
        amps: Vec<Complex64>,
        max_qubits: usize,
    ) -> Result<Self, SimError> {
        assert!(amps.len().is_power_of_two(), "amplitude count must be a power of two");
        let n = amps.len().trailing_zeros() as usize;
        if n > max_qubits {
            return Err(SimError::TooManyQubits { n, max: max_qubits });
        }
        let v = Self { amps };
        let norm = v.norm_sqr();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(SimError::NotNormalized { norm });
        }
        Ok(v)
    }

    /// Uniformly random amplitudes, normalized. Within the default cap.
    pub fn random<R: Rng>(n: usize, rng: &mut R) -> Result<Self, SimError> {
        Self::random_capped(n, DEFAULT_MAX_QUBITS, rng)
    }

    pub fn random_capped<R: Rng>(n: usize, max_qubits: usize, rng: &mut R) -> Result<Self, SimError> {
        if n > max_qubits {
            return Err(SimError::TooManyQubits { n, max: max_qubits });
        }
        let mut amps: Vec<Complex64> = (0..1usize << n)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let norm: f64 = amps.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut amps {
            *a /= norm;
        }
        Ok(Self { amps })
    }

    pub fn n(&self) -> usize {
        self.amps.len().trailing_zeros() as usize
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amp(&self, index: usize) -> Complex64 {
        self.amps[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        let inner: Complex64 = self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum();
        inner.norm_sqr()
    }
}

/// Applies one CN gate to a state vector: every basis amplitude whose control
/// bit is 1 moves to the index with the target bit flipped. A pure
/// permutation of amplitudes, so the norm is preserved exactly.
pub fn apply_cn_state(v: &StateVector, g: &CnGate) -> Result<StateVector, SimError> {
    let n = v.n();
    for p in [g.control, g.target] {
        if p.index() >= n {
            return Err(SimError::PortOutOfRange { port: p, n });
        }
    }
    let mut out = v.clone();
    apply_cn_in_place(&mut out.amps, g);
    Ok(out)
}

fn apply_cn_in_place(amps: &mut [Complex64], g: &CnGate) {
    let cmask = 1usize << g.control.index();
    let tmask = 1usize << g.target.index();
    for i in 0..amps.len() {
        if i & cmask != 0 && i & tmask == 0 {
            amps.swap(i, i | tmask);
        }
    }
}

/// Runs a circuit on a state vector, layer by layer.
pub fn run_state(c: &Circuit, v: &StateVector) -> Result<StateVector, SimError> {
    if v.n() != c.n() {
        return Err(SimError::SizeMismatch { expected: c.n(), got: v.n() });
    }
    let mut out = v.clone();
    for layer in c.layers() {
        for g in layer.gates() {
            apply_cn_in_place(&mut out.amps, g);
        }
    }
    Ok(out)
}

/// Projects the state onto one basis outcome, sampled by the Born rule.
///
/// The sampler is pinned for reproducibility: ChaCha8 seeded with `seed`
/// produces a single `f64` in `[0, 1)`, and the basis index is the first one
/// whose cumulative probability exceeds it. Basis-state inputs therefore
/// return their own bit pattern for every seed.
pub fn measure(v: &StateVector, seed: u64) -> Result<BitState, SimError> {
    let norm = v.norm_sqr();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(SimError::NotNormalized { norm });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r: f64 = rng.random::<f64>() * norm;
    let mut acc = 0.0;
    let mut chosen = v.amps.len() - 1;
    for (i, a) in v.amps.iter().enumerate() {
        acc += a.norm_sqr();
        if r < acc {
            chosen = i;
            break;
        }
    }
    Ok(BitState::from_index(v.n(), chosen))
}

/// Where an outlet's data comes from once idle inlets are pinned to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutSource {
    /// The outlet reproduces this live inlet's bit.
    Port(PortId),
    /// The outlet only ever carries stuff bits.
    Zero,
}

/// The routing function a circuit implements over the live inlets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortPermutationMap {
    pub out_source: Vec<OutSource>,
}

impl PortPermutationMap {
    pub fn source(&self, outlet: PortId) -> OutSource {
        self.out_source[outlet.index()]
    }
}

/// Brute-force oracle: recovers the routing function of a circuit by one-hot
/// probing.
///
/// CN circuits are linear over GF(2), so each outlet is the XOR of a fixed
/// set of inlets, found by running every one-hot input. Inlets outside
/// `live` are pinned to zero by the switch contract (stuff bits), so they
/// are discounted; an outlet XORing two or more *live* inlets is not a
/// routing function at all and is reported as [`SimError::NotAPortMap`].
pub fn extract_port_map(c: &Circuit, live: &[bool]) -> Result<PortPermutationMap, SimError> {
    let n = c.n();
    if live.len() != n {
        return Err(SimError::SizeMismatch { expected: n, got: live.len() });
    }
    // sources[v] = all inlets u whose one-hot flips outlet v.
    let mut sources: Vec<Vec<PortId>> = vec![Vec::new(); n];
    for u in 0..n {
        let out = run_bits(c, &BitState::one_hot(n, PortId(u)))?;
        for (v, srcs) in sources.iter_mut().enumerate() {
            if out.get(PortId(v)) {
                srcs.push(PortId(u));
            }
        }
    }
    let mut out_source = Vec::with_capacity(n);
    for (v, srcs) in sources.iter().enumerate() {
        let live_srcs: Vec<PortId> = srcs.iter().copied().filter(|u| live[u.index()]).collect();
        match live_srcs.len() {
            0 => out_source.push(OutSource::Zero),
            1 => out_source.push(OutSource::Port(live_srcs[0])),
            _ => {
                return Err(SimError::NotAPortMap { outlet: PortId(v), sources: live_srcs });
            }
        }
    }
    Ok(PortPermutationMap { out_source })
}

/// Checks a claimed routing function against the circuit on *every* input in
/// the switch contract domain: all assignments of the live inlets with idle
/// inlets at zero.
pub fn check_delivery_exhaustive(
    c: &Circuit,
    live: &[bool],
    expected: &PortPermutationMap,
) -> Result<(), SimError> {
    let n = c.n();
    if live.len() != n {
        return Err(SimError::SizeMismatch { expected: n, got: live.len() });
    }
    let live_ports: Vec<PortId> = (0..n).map(PortId).filter(|p| live[p.index()]).collect();
    if live_ports.len() > 20 {
        return Err(SimError::TooManyLiveInlets { live: live_ports.len() });
    }
    for assignment in 0..(1usize << live_ports.len()) {
        let mut input = BitState::zeros(n);
        for (j, &p) in live_ports.iter().enumerate() {
            input.set(p, (assignment >> j) & 1 == 1);
        }
        let output = run_bits(c, &input)?;
        for (v, src) in expected.out_source.iter().enumerate() {
            let got = output.get(PortId(v));
            let want = match src {
                OutSource::Zero => false,
                OutSource::Port(u) => input.get(*u),
            };
            if got != want {
                return Err(SimError::NotAPortMap {
                    outlet: PortId(v),
                    sources: vec![],
                });
            }
        }
    }
    Ok(())
}

/// Assembles the full `2^n x 2^n` matrix of a circuit, one basis column at a
/// time. Intended for small `n`; guarded at 8 qubits.
pub fn unitary_matrix(c: &Circuit) -> Result<Vec<Vec<Complex64>>, SimError> {
    let n = c.n();
    if n > 8 {
        return Err(SimError::TooManyQubits { n, max: 8 });
    }
    let dim = 1usize << n;
    let mut cols = Vec::with_capacity(dim);
    for i in 0..dim {
        let v = StateVector::basis(&BitState::from_index(n, i))?;
        cols.push(run_state(c, &v)?.amps);
    }
    // Transpose columns into row-major form.
    let mut rows = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
    for (j, col) in cols.iter().enumerate() {
        for (i, &a) in col.iter().enumerate() {
            rows[i][j] = a;
        }
    }
    Ok(rows)
}
