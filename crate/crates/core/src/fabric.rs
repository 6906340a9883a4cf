//! Word-level switch model and time-slotted schedule replay.
//!
//! The end-to-end path per slot is: classical words in, conversion to basis
//! states (modeled as the identity encoding), the compiled CN-gate circuit,
//! measurement back to classical words. A `w`-bit word is routed as `w`
//! successive passes through the same compiled circuit, one bit per pass.
//!
//! Outlets with no predecessor in the slot's connection map only ever carry
//! stuff bits; they are reported as all-zero payload with a cleared validity
//! flag rather than being invented or suppressed.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::digraph::{ConnectionDigraph, ConnectionMap, DestSet, InvalidMap, PortId};
use crate::planner::plan;
use crate::qcircuit::{compile_plan, Circuit, CircuitError};
use crate::qsim::{run_bits, BitState, SimError};

/// Fixed-width bit string carried by one port during one slot. Bit 0 is
/// transmitted first and is the most significant digit of the hex form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Word {
    bits: Vec<bool>,
}

impl Word {
    pub fn zeros(width: usize) -> Self {
        Self { bits: vec![false; width] }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// Decodes `width` bits from hex digits (`ceil(width / 4)` of them);
    /// padding bits beyond `width` must be zero.
    pub fn from_hex(s: &str, width: usize) -> Result<Self, String> {
        let expect_digits = width.div_ceil(4);
        if s.len() != expect_digits {
            return Err(format!("expected {expect_digits} hex digits, got {}", s.len()));
        }
        let mut bits = Vec::with_capacity(expect_digits * 4);
        for ch in s.chars() {
            let nibble = ch
                .to_digit(16)
                .ok_or_else(|| format!("invalid hex digit '{ch}'"))?;
            for k in (0..4).rev() {
                bits.push((nibble >> k) & 1 == 1);
            }
        }
        if bits[width..].iter().any(|&b| b) {
            return Err("nonzero padding bits beyond the word width".to_string());
        }
        bits.truncate(width);
        Ok(Self { bits })
    }

    pub fn to_hex(&self) -> String {
        let mut s = String::new();
        for chunk in self.bits.chunks(4) {
            let mut nibble = 0u32;
            for (k, &b) in chunk.iter().enumerate() {
                if b {
                    nibble |= 1 << (3 - k);
                }
            }
            s.push(char::from_digit(nibble, 16).unwrap());
        }
        s
    }

    pub fn width(&self) -> usize {
        self.bits.len()
    }

    pub fn bit(&self, j: usize) -> bool {
        self.bits[j]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn is_zero(&self) -> bool {
        self.bits.iter().all(|&b| !b)
    }
}

/// The words presented at the inlets during one slot: exactly the live ports
/// carry a payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub slot: usize,
    pub width: usize,
    payload: Vec<Option<Word>>,
}

impl Frame {
    pub fn new(slot: usize, width: usize, payload: Vec<Option<Word>>) -> Result<Self, FabricError> {
        for (i, w) in payload.iter().enumerate() {
            if let Some(w) = w {
                if w.width() != width {
                    return Err(FabricError::FrameMismatch {
                        port: PortId(i),
                        reason: "payload width differs from the frame width",
                    });
                }
            }
        }
        Ok(Self { slot, width, payload })
    }

    pub fn payload(&self, port: PortId) -> Option<&Word> {
        self.payload[port.index()].as_ref()
    }

    pub fn ports(&self) -> usize {
        self.payload.len()
    }
}

/// What the outlets carry after one slot. `valid[v]` is set exactly when
/// outlet `v` has a predecessor in the slot's map; all other outlets hold
/// zeros.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwitchOutput {
    pub slot: usize,
    pub payload: Vec<Word>,
    pub valid: Vec<bool>,
}

/// A replayable switching program: one connection map and one frame per slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotSchedule {
    pub ports: usize,
    pub width: usize,
    pub slots: Vec<(ConnectionMap, Frame)>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FabricError {
    #[error(transparent)]
    Map(#[from] InvalidMap),
    #[error("frame/map disagree at port {port}: {reason}")]
    FrameMismatch { port: PortId, reason: &'static str },
    #[error("output port {output} requested by more than one packet")]
    Contention { output: PortId },
    #[error("packet at port {port} requests out-of-range port {dest}")]
    BadHeader { port: PortId, dest: PortId },
    #[error(transparent)]
    Compile(#[from] CircuitError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("slot {slot}: {source}")]
    Slot { slot: usize, source: Box<FabricError> },
}

/// Routes one frame through the circuit compiled for `map`.
pub fn switch_frame(map: &ConnectionMap, frame: &Frame) -> Result<SwitchOutput, FabricError> {
    let circuit = compile_map(map)?;
    switch_frame_with(map, frame, &circuit)
}

fn compile_map(map: &ConnectionMap) -> Result<Circuit, FabricError> {
    let g = ConnectionDigraph::from_map(map);
    Ok(compile_plan(&plan(&g))?)
}

fn switch_frame_with(
    map: &ConnectionMap,
    frame: &Frame,
    circuit: &Circuit,
) -> Result<SwitchOutput, FabricError> {
    let n = map.n();
    if frame.ports() != n {
        return Err(FabricError::FrameMismatch {
            port: PortId(frame.ports().min(n)),
            reason: "frame port count differs from the map",
        });
    }
    for i in 0..n {
        let port = PortId(i);
        match (map.is_live(port), frame.payload(port)) {
            (true, None) => {
                return Err(FabricError::FrameMismatch {
                    port,
                    reason: "live inlet carries no payload",
                })
            }
            (false, Some(_)) => {
                return Err(FabricError::FrameMismatch {
                    port,
                    reason: "idle inlet carries a payload",
                })
            }
            _ => {}
        }
    }

    let mut out_bits: Vec<Vec<bool>> = vec![Vec::with_capacity(frame.width); n];
    for j in 0..frame.width {
        let mut input = BitState::zeros(n);
        for i in 0..n {
            if let Some(word) = frame.payload(PortId(i)) {
                input.set(PortId(i), word.bit(j));
            }
        }
        let output = run_bits(circuit, &input)?;
        for (i, column) in out_bits.iter_mut().enumerate() {
            column.push(output.get(PortId(i)));
        }
    }

    let valid: Vec<bool> = (0..n).map(|v| map.predecessor(PortId(v)).is_some()).collect();
    let payload: Vec<Word> = out_bits.into_iter().map(Word::from_bits).collect();
    for (v, ok) in valid.iter().enumerate() {
        debug_assert!(*ok || payload[v].is_zero(), "stuff outlet {v} must carry zeros");
    }
    Ok(SwitchOutput { slot: frame.slot, payload, valid })
}

/// Replays all slots in order. Circuits are compiled once per distinct map
/// and reused; errors carry the slot index they occurred in.
pub fn run_schedule(schedule: &SlotSchedule) -> Result<Vec<SwitchOutput>, FabricError> {
    let mut cache: HashMap<ConnectionMap, Circuit> = HashMap::new();
    let mut outputs = Vec::with_capacity(schedule.slots.len());
    for (map, frame) in &schedule.slots {
        let at_slot = |e: FabricError| FabricError::Slot { slot: frame.slot, source: Box::new(e) };
        if !cache.contains_key(map) {
            let circuit = compile_map(map).map_err(at_slot)?;
            cache.insert(map.clone(), circuit);
        }
        let circuit = &cache[map];
        outputs.push(switch_frame_with(map, frame, circuit).map_err(at_slot)?);
    }
    Ok(outputs)
}

/// Strict packet resolution: every live header must name a free outlet.
/// Contention is an error; the caller is expected to have solved it upstream.
pub fn resolve_packets_strict(
    headers: &[Option<PortId>],
) -> Result<ConnectionMap, FabricError> {
    let n = headers.len();
    let mut taken: Vec<Option<PortId>> = vec![None; n];
    let mut dests = vec![DestSet::Idle; n];
    for (i, header) in headers.iter().enumerate() {
        let port = PortId(i);
        if let Some(dest) = header {
            if dest.index() >= n {
                return Err(FabricError::BadHeader { port, dest: *dest });
            }
            if taken[dest.index()].is_some() {
                return Err(FabricError::Contention { output: *dest });
            }
            taken[dest.index()] = Some(port);
            dests[i] = DestSet::unicast(dest.index());
        }
    }
    Ok(ConnectionMap::new(n, dests).expect("single-winner packet grants cannot contend"))
}

/// Output-contention arbiter with a rotating priority pointer.
///
/// For each contended outlet the winner is the requesting port closest at or
/// after the pointer (cyclically); the pointer advances by one port per slot,
/// so under persistent requests every port is granted within `n` slots.
#[derive(Debug, Clone)]
pub struct RoundRobinArbiter {
    n: usize,
    pointer: usize,
}

impl RoundRobinArbiter {
    pub fn new(n: usize) -> Self {
        Self { n, pointer: 0 }
    }

    pub fn pointer(&self) -> usize {
        self.pointer
    }

    /// Grants at most one packet per outlet; losers come back as the
    /// deferred set for a later slot.
    pub fn resolve(
        &mut self,
        headers: &[Option<PortId>],
    ) -> Result<(ConnectionMap, BTreeSet<PortId>), FabricError> {
        assert_eq!(headers.len(), self.n, "arbiter sized for {} ports", self.n);
        let mut contenders: Vec<Vec<PortId>> = vec![Vec::new(); self.n];
        for (i, header) in headers.iter().enumerate() {
            if let Some(dest) = header {
                if dest.index() >= self.n {
                    return Err(FabricError::BadHeader { port: PortId(i), dest: *dest });
                }
                contenders[dest.index()].push(PortId(i));
            }
        }
        let priority = |p: PortId| (p.index() + self.n - self.pointer) % self.n;
        let mut dests = vec![DestSet::Idle; self.n];
        let mut deferred = BTreeSet::new();
        for (o, ports) in contenders.iter().enumerate() {
            if ports.is_empty() {
                continue;
            }
            let winner = *ports.iter().min_by_key(|&&p| priority(p)).unwrap();
            dests[winner.index()] = DestSet::unicast(o);
            deferred.extend(ports.iter().filter(|&&p| p != winner));
        }
        self.pointer = (self.pointer + 1) % self.n;
        let map = ConnectionMap::new(self.n, dests).expect("one winner per outlet");
        Ok((map, deferred))
    }
}

/// Parse failure with the 1-based offending line of a schedule file.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("schedule text line {line}: {message}")]
pub struct ScheduleParseError {
    pub line: usize,
    pub message: String,
}

/// Parses a destination field: `X` for idle or a comma-separated port list.
pub fn parse_dest_field(field: &str) -> Result<DestSet, String> {
    if field == "X" {
        return Ok(DestSet::Idle);
    }
    let mut set = BTreeSet::new();
    for part in field.split(',') {
        let dest: usize = part
            .parse()
            .map_err(|_| format!("invalid destination '{part}'"))?;
        set.insert(PortId(dest));
    }
    Ok(DestSet::To(set))
}

pub fn emit_dest_field(dest: &DestSet) -> String {
    match dest {
        DestSet::Idle => "X".to_string(),
        DestSet::To(set) => set
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join(","),
    }
}

/// Parses the schedule text format:
///
/// ```text
/// QSWITCH-SCHEDULE v1
/// ports 4
/// width 8
/// slot 0
/// 0: X -
/// 1: 2 a5
/// 2: 1 3c
/// 3: X -
/// ```
///
/// Each slot block has exactly one line per port; live ports carry a hex
/// payload, idle ports a `-`.
pub fn parse_schedule(text: &str) -> Result<SlotSchedule, ScheduleParseError> {
    let err = |line: usize, message: String| ScheduleParseError { line, message };
    let mut lines = text.lines().enumerate().peekable();

    match lines.next() {
        Some((_, "QSWITCH-SCHEDULE v1")) => {}
        Some((i, _)) => return Err(err(i + 1, "expected header `QSWITCH-SCHEDULE v1`".into())),
        None => return Err(err(1, "empty schedule file".into())),
    }
    let ports = parse_keyword_line(&mut lines, "ports").map_err(|(l, m)| err(l, m))?;
    if ports == 0 {
        return Err(err(2, "schedule needs at least one port".into()));
    }
    let width = parse_keyword_line(&mut lines, "width").map_err(|(l, m)| err(l, m))?;
    if width == 0 {
        return Err(err(3, "schedule needs a nonzero word width".into()));
    }

    let mut slots = Vec::new();
    while let Some((i, line)) = lines.next() {
        let lineno = i + 1;
        if line.is_empty() {
            continue;
        }
        let slot: usize = line
            .strip_prefix("slot ")
            .ok_or_else(|| err(lineno, "expected `slot <k>`".into()))?
            .parse()
            .map_err(|_| err(lineno, "invalid slot index".into()))?;
        let mut dests: Vec<Option<DestSet>> = vec![None; ports];
        let mut payload: Vec<Option<Word>> = vec![None; ports];
        for _ in 0..ports {
            let (j, port_line) = lines
                .next()
                .ok_or_else(|| err(lineno, format!("slot {slot} is missing port lines")))?;
            let lineno = j + 1;
            let (port_str, rest) = port_line
                .split_once(": ")
                .ok_or_else(|| err(lineno, "expected `<port>: <dests> <payload>`".into()))?;
            let port: usize = port_str
                .parse()
                .map_err(|_| err(lineno, format!("invalid port '{port_str}'")))?;
            if port >= ports {
                return Err(err(lineno, format!("port {port} out of range")));
            }
            if dests[port].is_some() {
                return Err(err(lineno, format!("port {port} listed twice in slot {slot}")));
            }
            let (dest_str, pay_str) = rest
                .split_once(' ')
                .ok_or_else(|| err(lineno, "expected destination and payload fields".into()))?;
            let dest = parse_dest_field(dest_str).map_err(|m| err(lineno, m))?;
            match (&dest, pay_str) {
                (DestSet::Idle, "-") => {}
                (DestSet::Idle, _) => {
                    return Err(err(lineno, "idle port must carry `-` as payload".into()))
                }
                (DestSet::To(_), "-") => {
                    return Err(err(lineno, "live port must carry a hex payload".into()))
                }
                (DestSet::To(_), hex) => {
                    payload[port] = Some(Word::from_hex(hex, width).map_err(|m| err(lineno, m))?);
                }
            }
            dests[port] = Some(dest);
        }
        let dests: Vec<DestSet> = dests.into_iter().map(Option::unwrap).collect();
        let map = ConnectionMap::new(ports, dests)
            .map_err(|e| err(lineno, format!("slot {slot}: {e}")))?;
        let frame = Frame::new(slot, width, payload)
            .map_err(|e| err(lineno, format!("slot {slot}: {e}")))?;
        slots.push((map, frame));
    }
    Ok(SlotSchedule { ports, width, slots })
}

type LineIter<'a> = std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>;

fn parse_keyword_line(lines: &mut LineIter<'_>, keyword: &str) -> Result<usize, (usize, String)> {
    match lines.next() {
        Some((i, line)) => match line.strip_prefix(&format!("{keyword} ")) {
            Some(rest) => rest
                .parse::<usize>()
                .map_err(|_| (i + 1, format!("invalid {keyword} value"))),
            None => Err((i + 1, format!("expected `{keyword} <value>`"))),
        },
        None => Err((0, format!("missing `{keyword} <value>` line"))),
    }
}

/// Canonical text form of a schedule; exact inverse of [`parse_schedule`].
pub fn emit_schedule(schedule: &SlotSchedule) -> String {
    let mut out = String::new();
    writeln!(out, "QSWITCH-SCHEDULE v1").unwrap();
    writeln!(out, "ports {}", schedule.ports).unwrap();
    writeln!(out, "width {}", schedule.width).unwrap();
    for (map, frame) in &schedule.slots {
        writeln!(out, "slot {}", frame.slot).unwrap();
        for i in 0..schedule.ports {
            let port = PortId(i);
            let pay = match frame.payload(port) {
                Some(word) => word.to_hex(),
                None => "-".to_string(),
            };
            writeln!(out, "{i}: {} {pay}", emit_dest_field(map.dest(port))).unwrap();
        }
    }
    out
}

/// Per-slot output listing in the same per-port shape, with a trailing
/// validity mask (`1` = outlet fed by a real connection, port 0 first).
pub fn emit_outputs(outputs: &[SwitchOutput]) -> String {
    let mut out = String::new();
    for o in outputs {
        writeln!(out, "slot {}", o.slot).unwrap();
        for (i, word) in o.payload.iter().enumerate() {
            writeln!(out, "{i}: {}", word.to_hex()).unwrap();
        }
        let mask: String = o.valid.iter().map(|&v| if v { '1' } else { '0' }).collect();
        writeln!(out, "valid: {mask}").unwrap();
    }
    out
}
