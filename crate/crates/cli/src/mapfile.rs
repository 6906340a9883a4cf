//! The connection map file format.
//!
//! ```text
//! QSWITCH-MAP v1
//! ports 8
//! 0: 1
//! 1: 3,4
//! 2: X
//! ...
//! ```
//!
//! Every port `0..n-1` must appear exactly once; `X` marks an idle inlet.

use std::fmt;

use qswitch::digraph::{ConnectionMap, DestSet, InvalidMap};
use qswitch::fabric::{emit_dest_field, parse_dest_field};

#[derive(Debug)]
pub enum MapFileError {
    /// The file does not parse; carries the 1-based line.
    Syntax { line: usize, message: String },
    /// The file parses but describes an invalid configuration.
    Invalid(InvalidMap),
}

impl fmt::Display for MapFileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapFileError::Syntax { line, message } => write!(f, "map line {line}: {message}"),
            MapFileError::Invalid(err) => write!(f, "{err}"),
        }
    }
}

impl std::error::Error for MapFileError {}

pub fn parse_map(text: &str) -> Result<ConnectionMap, MapFileError> {
    let syntax = |line: usize, message: String| MapFileError::Syntax { line, message };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "QSWITCH-MAP v1")) => {}
        Some((i, _)) => return Err(syntax(i + 1, "expected header `QSWITCH-MAP v1`".into())),
        None => return Err(syntax(1, "empty map file".into())),
    }
    let ports = match lines.next() {
        Some((i, line)) => match line.strip_prefix("ports ") {
            Some(rest) => rest
                .parse::<usize>()
                .map_err(|_| syntax(i + 1, "invalid port count".into()))?,
            None => return Err(syntax(i + 1, "expected `ports <n>`".into())),
        },
        None => return Err(syntax(2, "missing `ports <n>` line".into())),
    };
    if ports == 0 {
        return Err(syntax(2, "a map needs at least one port".into()));
    }

    let mut dests: Vec<Option<DestSet>> = vec![None; ports];
    for (i, line) in lines {
        let lineno = i + 1;
        if line.is_empty() {
            continue;
        }
        let (port_str, dest_str) = line
            .split_once(": ")
            .ok_or_else(|| syntax(lineno, "expected `<port>: <dest[,dest...]|X>`".into()))?;
        let port: usize = port_str
            .parse()
            .map_err(|_| syntax(lineno, format!("invalid port '{port_str}'")))?;
        if port >= ports {
            return Err(syntax(lineno, format!("port {port} out of range 0..{ports}")));
        }
        if dests[port].is_some() {
            return Err(syntax(lineno, format!("port {port} listed twice")));
        }
        dests[port] = Some(parse_dest_field(dest_str).map_err(|m| syntax(lineno, m))?);
    }
    for (port, d) in dests.iter().enumerate() {
        if d.is_none() {
            return Err(syntax(0, format!("port {port} missing from the map")));
        }
    }
    let dests: Vec<DestSet> = dests.into_iter().map(Option::unwrap).collect();
    ConnectionMap::new(ports, dests).map_err(MapFileError::Invalid)
}

#[allow(dead_code)] // exercised by the round-trip tests
pub fn emit_map(map: &ConnectionMap) -> String {
    let mut out = String::from("QSWITCH-MAP v1\n");
    out.push_str(&format!("ports {}\n", map.n()));
    for (i, d) in map.dests().iter().enumerate() {
        out.push_str(&format!("{i}: {}\n", emit_dest_field(d)));
    }
    out
}
