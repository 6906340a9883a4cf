//! `qswitch`: compile switch connection maps into layered CN-gate circuits,
//! verify them by simulation, and replay slot schedules.

mod mapfile;
mod report;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use qswitch::digraph::{ConnectionDigraph, ConnectionMap, PortId, SubDigraph, SubKind};
use qswitch::fabric;
use qswitch::planner::{plan, recovery_rounds, ExtensionKind, PermutationPlan};
use qswitch::qcircuit::{compile_plan, Circuit};
use qswitch::qsim::{
    check_delivery_exhaustive, extract_port_map, run_bits, run_state, unitary_matrix, BitState,
    OutSource, PortPermutationMap, SimError, StateVector,
};

use mapfile::{parse_map, MapFileError};
use report::{Check, CheckStatus, Report, TrialSummary};

#[derive(Parser)]
#[command(name = "qswitch", version, about = "Quantum switch circuit compiler and simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    Plan,
    Circuit,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Bits,
    State,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Check a connection map file and summarize its components.
    Validate { file: PathBuf },
    /// Compile a connection map into a permutation plan or a circuit.
    Compile {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Emit::Circuit)]
        emit: Emit,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Write to a file instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Verify that the compiled circuit realizes the map's delivery relation.
    Verify {
        file: PathBuf,
        /// Verify this circuit file instead of compiling the map.
        #[arg(long)]
        circuit: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Mode::Both)]
        mode: Mode,
        /// Seed for sampled checks and random trials.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of extra random maps (same port count) to compile and check.
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 12)]
        max_statevector_qubits: usize,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Replay a slot schedule and print per-slot switch outputs.
    Schedule { file: PathBuf },
    /// Print depth and gate statistics for a map or circuit file.
    Stats {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

/// Exit policy: 0 success, 1 validation/verification failure, 2 usage,
/// parse, or I/O errors. Clap reports its own usage errors with 2 as well.
enum AppError {
    Input(String),
    Failure(String),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Failure(message)) => {
            if !message.is_empty() {
                eprintln!("{message}");
            }
            ExitCode::from(1)
        }
        Err(AppError::Input(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<(), AppError> {
    match command {
        Command::Validate { file } => cmd_validate(&file),
        Command::Compile { file, emit, format, output } => {
            cmd_compile(&file, emit, format, output.as_deref())
        }
        Command::Verify { file, circuit, mode, seed, trials, max_statevector_qubits, format } => {
            cmd_verify(&file, circuit.as_deref(), mode, seed, trials, max_statevector_qubits, format)
        }
        Command::Schedule { file } => cmd_schedule(&file),
        Command::Stats { file, format } => cmd_stats(&file, format),
    }
}

fn read_file(path: &std::path::Path) -> Result<String, AppError> {
    fs::read_to_string(path).map_err(|e| AppError::Input(format!("{}: {e}", path.display())))
}

fn load_map(path: &std::path::Path) -> Result<ConnectionMap, AppError> {
    let text = read_file(path)?;
    match parse_map(&text) {
        Ok(map) => Ok(map),
        Err(err @ MapFileError::Syntax { .. }) => {
            Err(AppError::Input(format!("{}: {err}", path.display())))
        }
        Err(MapFileError::Invalid(err)) => {
            let lines: Vec<String> =
                err.violations.iter().map(|v| format!("invalid: {v}")).collect();
            Err(AppError::Failure(lines.join("\n")))
        }
    }
}

fn cmd_validate(path: &std::path::Path) -> Result<(), AppError> {
    let map = load_map(path)?;
    let parts = ConnectionDigraph::from_map(&map).decompose();
    println!("ok: {} ports, {} connections", map.n(), map.edge_count());
    println!("components: {}", component_summary(&parts));
    Ok(())
}

fn component_summary(parts: &[SubDigraph]) -> String {
    let order = [
        SubKind::NullNode,
        SubKind::Loopback,
        SubKind::Queue,
        SubKind::Cycle,
        SubKind::Tree,
        SubKind::Forest,
    ];
    let mut pieces = Vec::new();
    for kind in order {
        let matching: Vec<&SubDigraph> = parts.iter().filter(|p| p.kind() == kind).collect();
        match matching.len() {
            0 => {}
            1 => {
                let mut piece = format!("1 {kind}");
                if let SubDigraph::Tree { root, .. } = matching[0] {
                    piece.push_str(&format!(
                        " (root {root:?}, {} leaves)",
                        matching[0].leaves().len()
                    ));
                }
                pieces.push(piece);
            }
            k => pieces.push(format!("{k} {kind}s")),
        }
    }
    pieces.join(", ")
}

fn cmd_compile(
    path: &std::path::Path,
    emit: Emit,
    format: Format,
    output: Option<&std::path::Path>,
) -> Result<(), AppError> {
    let map = load_map(path)?;
    let p = plan(&ConnectionDigraph::from_map(&map));
    let rendered = match emit {
        Emit::Plan => match format {
            Format::Text => plan_to_text(&p),
            Format::Structured => format!("{:#}\n", plan_to_json(&p)),
        },
        Emit::Circuit => {
            let circuit = compile_plan(&p).map_err(|e| AppError::Failure(e.to_string()))?;
            match format {
                Format::Text => circuit.emit_text(),
                Format::Structured => format!("{:#}\n", circuit_to_json(&circuit)),
            }
        }
    };
    match output {
        Some(out) => fs::write(out, rendered)
            .map_err(|e| AppError::Input(format!("{}: {e}", out.display()))),
        None => {
            print!("{rendered}");
            Ok(())
        }
    }
}

fn plan_to_text(p: &PermutationPlan) -> String {
    let mut out = format!("ports: {}\n", p.n);
    let cycles = p
        .cycles
        .iter()
        .map(|c| format!("({})", c.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(" ")))
        .collect::<Vec<_>>()
        .join(" ");
    out.push_str(&format!("cycles: {}\n", dash_if_empty(cycles)));
    let loops = p.loopbacks.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(" ");
    out.push_str(&format!("loopbacks: {}\n", dash_if_empty(loops)));
    let exts = p
        .extensions
        .iter()
        .map(|e| format!("{} {}->{}", extension_name(e.kind), e.added_edge.0, e.added_edge.1))
        .collect::<Vec<_>>()
        .join(", ");
    out.push_str(&format!("extensions: {}\n", dash_if_empty(exts)));
    let cuts = p
        .cut_edges
        .iter()
        .map(|(u, v)| format!("{u}->{v}"))
        .collect::<Vec<_>>()
        .join(", ");
    out.push_str(&format!("cuts: {}\n", dash_if_empty(cuts)));
    let recovery = p
        .recovery
        .iter()
        .map(|g| {
            let ts = g.targets.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(",");
            format!("{}->[{ts}]", g.source)
        })
        .collect::<Vec<_>>()
        .join(", ");
    out.push_str(&format!("recovery: {}\n", dash_if_empty(recovery)));
    out.push_str(&format!("rounds: {}\n", recovery_rounds(p).len()));
    out
}

fn dash_if_empty(s: String) -> String {
    if s.is_empty() {
        "-".into()
    } else {
        s
    }
}

fn extension_name(kind: ExtensionKind) -> &'static str {
    match kind {
        ExtensionKind::E1 => "E1",
        ExtensionKind::E2 => "E2",
        ExtensionKind::E3 => "E3",
    }
}

fn plan_to_json(p: &PermutationPlan) -> serde_json::Value {
    json!({
        "ports": p.n,
        "cycles": p.cycles.iter()
            .map(|c| c.iter().map(|q| q.index()).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
        "loopbacks": p.loopbacks.iter().map(|q| q.index()).collect::<Vec<_>>(),
        "extensions": p.extensions.iter().map(|e| json!({
            "kind": extension_name(e.kind),
            "from": e.added_edge.0.index(),
            "to": e.added_edge.1.index(),
        })).collect::<Vec<_>>(),
        "cuts": p.cut_edges.iter()
            .map(|(u, v)| json!([u.index(), v.index()]))
            .collect::<Vec<_>>(),
        "recovery": p.recovery.iter().map(|g| json!({
            "source": g.source.index(),
            "targets": g.targets.iter().map(|t| t.index()).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
        "rounds": recovery_rounds(p).len(),
    })
}

fn circuit_to_json(c: &Circuit) -> serde_json::Value {
    json!({
        "qubits": c.n(),
        "layers": c.layers().iter().map(|layer| {
            layer.gates().iter().map(|g| json!({
                "control": g.control.index(),
                "target": g.target.index(),
            })).collect::<Vec<_>>()
        }).collect::<Vec<_>>(),
    })
}

fn expected_port_map(map: &ConnectionMap) -> PortPermutationMap {
    let out_source = (0..map.n())
        .map(|v| match map.predecessor(PortId(v)) {
            Some(u) => OutSource::Port(u),
            None => OutSource::Zero,
        })
        .collect();
    PortPermutationMap { out_source }
}

fn cmd_verify(
    path: &std::path::Path,
    circuit_path: Option<&std::path::Path>,
    mode: Mode,
    seed: u64,
    trials: usize,
    max_statevector_qubits: usize,
    format: Format,
) -> Result<(), AppError> {
    let map = load_map(path)?;
    let n = map.n();
    let p = plan(&ConnectionDigraph::from_map(&map));
    let circuit = match circuit_path {
        Some(cp) => {
            let circuit = Circuit::parse_text(&read_file(cp)?)
                .map_err(|e| AppError::Input(format!("{}: {e}", cp.display())))?;
            if circuit.n() != n {
                return Err(AppError::Input(format!(
                    "circuit has {} qubits but the map has {n} ports",
                    circuit.n()
                )));
            }
            circuit
        }
        None => compile_plan(&p).map_err(|e| AppError::Failure(e.to_string()))?,
    };
    let state_checks = matches!(mode, Mode::State | Mode::Both);
    if state_checks && n > max_statevector_qubits {
        return Err(AppError::Input(format!(
            "state mode needs at most {max_statevector_qubits} ports (map has {n}); \
             raise --max-statevector-qubits or use --mode bits"
        )));
    }

    let mut checks = Vec::new();
    if matches!(mode, Mode::Bits | Mode::Both) {
        checks.push(check_port_map(&map, &circuit));
        checks.push(check_delivery(&map, &circuit));
    }
    if state_checks {
        checks.push(check_basis_agreement(&circuit, seed));
        checks.push(check_unitary(&circuit));
        checks.push(check_norm(&circuit, seed));
    }
    let trials_summary = (trials > 0).then(|| run_trials(n, trials, seed));

    let stats = circuit.stats();
    let report = Report {
        ports: n,
        connections: map.edge_count(),
        multicast: !map.is_unicast(),
        cycles: p.cycles.iter().map(|c| c.iter().map(|q| q.index()).collect()).collect(),
        loopbacks: p.loopbacks.iter().map(|q| q.index()).collect(),
        extensions: p
            .extensions
            .iter()
            .map(|e| format!("{} {}->{}", extension_name(e.kind), e.added_edge.0, e.added_edge.1))
            .collect(),
        cuts: p.cut_edges.iter().map(|(u, v)| (u.index(), v.index())).collect(),
        recovery: p
            .recovery
            .iter()
            .map(|g| (g.source.index(), g.targets.iter().map(|t| t.index()).collect()))
            .collect(),
        recovery_rounds: recovery_rounds(&p).len(),
        depth: stats.depth,
        gates: stats.gate_count,
        per_layer_widths: stats.per_layer_widths,
        checks,
        trials: trials_summary,
    };
    match format {
        Format::Text => print!("{}", report.to_text()),
        Format::Structured => println!("{:#}", report.to_json()),
    }
    if report.passed() {
        Ok(())
    } else {
        Err(AppError::Failure(String::new()))
    }
}

fn check_port_map(map: &ConnectionMap, circuit: &Circuit) -> Check {
    let name = "port_map";
    match extract_port_map(circuit, &map.live_mask()) {
        Ok(pm) => {
            let want = expected_port_map(map);
            if pm == want {
                Check {
                    name,
                    status: CheckStatus::Pass,
                    detail: format!("{} outlets", map.n()),
                }
            } else {
                let outlet = (0..map.n())
                    .find(|&v| pm.out_source[v] != want.out_source[v])
                    .unwrap();
                Check {
                    name,
                    status: CheckStatus::Fail,
                    detail: format!("outlet {outlet} routed from the wrong source"),
                }
            }
        }
        Err(e) => Check { name, status: CheckStatus::Fail, detail: e.to_string() },
    }
}

fn check_delivery(map: &ConnectionMap, circuit: &Circuit) -> Check {
    let name = "delivery_exhaustive";
    let live = map.live_mask();
    let live_count = live.iter().filter(|&&b| b).count();
    if live_count > 16 {
        return Check {
            name,
            status: CheckStatus::Skipped,
            detail: format!("{live_count} live inlets exceed the exhaustive limit"),
        };
    }
    match check_delivery_exhaustive(circuit, &live, &expected_port_map(map)) {
        Ok(()) => Check {
            name,
            status: CheckStatus::Pass,
            detail: format!("{} inputs", 1usize << live_count),
        },
        Err(SimError::NotAPortMap { outlet, .. }) => Check {
            name,
            status: CheckStatus::Fail,
            detail: format!("outlet {outlet} misdelivered"),
        },
        Err(e) => Check { name, status: CheckStatus::Fail, detail: e.to_string() },
    }
}

fn check_basis_agreement(circuit: &Circuit, seed: u64) -> Check {
    let name = "basis_agreement";
    let n = circuit.n();
    let indices: Vec<usize> = if n <= 8 {
        (0..1usize << n).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xba515);
        (0..256).map(|_| rng.random_range(0..1usize << n)).collect()
    };
    let count = indices.len();
    for index in indices {
        let bits = BitState::from_index(n, index);
        let expect = run_bits(circuit, &bits).unwrap();
        let v = StateVector::basis_capped(&bits, n).unwrap();
        let out = run_state(circuit, &v).unwrap();
        let amp = out.amp(expect.to_index());
        if amp.re != 1.0 || amp.im != 0.0 {
            return Check {
                name,
                status: CheckStatus::Fail,
                detail: format!("basis {index} diverges from the bit simulation"),
            };
        }
    }
    Check { name, status: CheckStatus::Pass, detail: format!("{count} basis states") }
}

fn check_unitary(circuit: &Circuit) -> Check {
    let name = "unitary_permutation";
    let n = circuit.n();
    if n > 6 {
        return Check {
            name,
            status: CheckStatus::Skipped,
            detail: format!("{n} qubits exceed the matrix-assembly limit of 6"),
        };
    }
    let m = unitary_matrix(circuit).unwrap();
    let dim = 1usize << n;
    let mut column_ones = vec![0usize; dim];
    for (i, row) in m.iter().enumerate() {
        let ones = row.iter().filter(|a| a.re == 1.0 && a.im == 0.0).count();
        let zeros = row.iter().filter(|a| a.re == 0.0 && a.im == 0.0).count();
        if ones != 1 || zeros != dim - 1 {
            return Check {
                name,
                status: CheckStatus::Fail,
                detail: format!("row {i} is not a unit row"),
            };
        }
        for (j, a) in row.iter().enumerate() {
            if a.re == 1.0 && a.im == 0.0 {
                column_ones[j] += 1;
            }
        }
    }
    if let Some(j) = column_ones.iter().position(|&c| c != 1) {
        return Check {
            name,
            status: CheckStatus::Fail,
            detail: format!("column {j} is not a unit column"),
        };
    }
    Check { name, status: CheckStatus::Pass, detail: format!("{dim}x{dim} permutation matrix") }
}

fn check_norm(circuit: &Circuit, seed: u64) -> Check {
    let name = "norm_preservation";
    let n = circuit.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x2027);
    for trial in 0..8 {
        let v = StateVector::random_capped(n, n, &mut rng).unwrap();
        let out = run_state(circuit, &v).unwrap();
        if (out.norm_sqr() - 1.0).abs() > 1e-12 {
            return Check {
                name,
                status: CheckStatus::Fail,
                detail: format!("trial {trial} drifted beyond 1e-12"),
            };
        }
    }
    Check { name, status: CheckStatus::Pass, detail: "8 random vectors".into() }
}

fn run_trials(n: usize, trials: usize, seed: u64) -> TrialSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut passed = 0;
    let depth_bound = |unicast: bool| {
        if unicast {
            6
        } else {
            6 + (usize::BITS - (n - 1).leading_zeros()) as usize
        }
    };
    for _ in 0..trials {
        let map = ConnectionMap::random_mixed(n, &mut rng);
        let circuit = match compile_plan(&plan(&ConnectionDigraph::from_map(&map))) {
            Ok(c) => c,
            Err(_) => continue,
        };
        if circuit.depth() > depth_bound(map.is_unicast()) {
            continue;
        }
        match extract_port_map(&circuit, &map.live_mask()) {
            Ok(pm) if pm == expected_port_map(&map) => passed += 1,
            _ => {}
        }
    }
    TrialSummary { requested: trials, passed, seed }
}

fn cmd_schedule(path: &std::path::Path) -> Result<(), AppError> {
    let schedule = fabric::parse_schedule(&read_file(path)?)
        .map_err(|e| AppError::Input(format!("{}: {e}", path.display())))?;
    let outputs = fabric::run_schedule(&schedule)
        .map_err(|e| AppError::Failure(e.to_string()))?;
    print!("{}", fabric::emit_outputs(&outputs));
    Ok(())
}

fn cmd_stats(path: &std::path::Path, format: Format) -> Result<(), AppError> {
    let text = read_file(path)?;
    let circuit = if text.starts_with("QSWITCH-MAP") {
        let map = load_map(path)?;
        compile_plan(&plan(&ConnectionDigraph::from_map(&map)))
            .map_err(|e| AppError::Failure(e.to_string()))?
    } else if text.starts_with("QSWITCH-CIRCUIT") {
        Circuit::parse_text(&text)
            .map_err(|e| AppError::Input(format!("{}: {e}", path.display())))?
    } else {
        return Err(AppError::Input(format!(
            "{}: not a QSWITCH-MAP or QSWITCH-CIRCUIT file",
            path.display()
        )));
    };
    let stats = circuit.stats();
    match format {
        Format::Text => {
            println!("qubits: {}", circuit.n());
            println!("depth: {}", stats.depth);
            println!("gates: {}", stats.gate_count);
            let widths =
                stats.per_layer_widths.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
            println!("widths: {}", if widths.is_empty() { "-".into() } else { widths });
        }
        Format::Structured => {
            println!(
                "{:#}",
                json!({
                    "qubits": circuit.n(),
                    "depth": stats.depth,
                    "gates": stats.gate_count,
                    "per_layer_widths": stats.per_layer_widths,
                })
            );
        }
    }
    Ok(())
}
