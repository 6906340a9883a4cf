//! Verification report, rendered as text or as a JSON tree with the same
//! content.

use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

impl CheckStatus {
    fn label(self) -> &'static str {
        match self {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Skipped => "SKIP",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub status: CheckStatus,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct TrialSummary {
    pub requested: usize,
    pub passed: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub ports: usize,
    pub connections: usize,
    pub multicast: bool,
    pub cycles: Vec<Vec<usize>>,
    pub loopbacks: Vec<usize>,
    pub extensions: Vec<String>,
    pub cuts: Vec<(usize, usize)>,
    pub recovery: Vec<(usize, Vec<usize>)>,
    pub recovery_rounds: usize,
    pub depth: usize,
    pub gates: usize,
    pub per_layer_widths: Vec<usize>,
    pub checks: Vec<Check>,
    pub trials: Option<TrialSummary>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
            && self.trials.as_ref().is_none_or(|t| t.passed == t.requested)
    }

    pub fn verdict(&self) -> &'static str {
        if self.passed() {
            "PASS"
        } else {
            "FAIL"
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let kind = if self.multicast { "multicast" } else { "unicast" };
        out.push_str(&format!(
            "map: {} ports, {} connections, {kind}\n",
            self.ports, self.connections
        ));
        let cycles = self
            .cycles
            .iter()
            .map(|c| format!("({})", join(c, " ")))
            .collect::<Vec<_>>()
            .join(" ");
        out.push_str(&format!("plan: cycles {}\n", if cycles.is_empty() { "-".into() } else { cycles }));
        out.push_str(&format!("plan: loopbacks {}\n", list_or_dash(&self.loopbacks)));
        out.push_str(&format!(
            "plan: extensions {}\n",
            if self.extensions.is_empty() { "-".into() } else { self.extensions.join(", ") }
        ));
        let cuts = self
            .cuts
            .iter()
            .map(|(u, v)| format!("{u}->{v}"))
            .collect::<Vec<_>>()
            .join(", ");
        out.push_str(&format!("plan: cuts {}\n", if cuts.is_empty() { "-".into() } else { cuts }));
        let recovery = self
            .recovery
            .iter()
            .map(|(s, ts)| format!("{s}->[{}]", join(ts, ",")))
            .collect::<Vec<_>>()
            .join(", ");
        out.push_str(&format!(
            "plan: recovery {} (rounds {})\n",
            if recovery.is_empty() { "-".into() } else { recovery },
            self.recovery_rounds
        ));
        out.push_str(&format!(
            "circuit: depth {}, gates {}, widths [{}]\n",
            self.depth,
            self.gates,
            join(&self.per_layer_widths, " ")
        ));
        for check in &self.checks {
            out.push_str(&format!("check {}: {}", check.name, check.status.label()));
            if !check.detail.is_empty() {
                out.push_str(&format!(" ({})", check.detail));
            }
            out.push('\n');
        }
        if let Some(t) = &self.trials {
            out.push_str(&format!(
                "trials: {}/{} passed (seed {})\n",
                t.passed, t.requested, t.seed
            ));
        }
        out.push_str(&format!("verdict: {}\n", self.verdict()));
        out
    }

    pub fn to_json(&self) -> Value {
        json!({
            "map": {
                "ports": self.ports,
                "connections": self.connections,
                "multicast": self.multicast,
            },
            "plan": {
                "cycles": self.cycles,
                "loopbacks": self.loopbacks,
                "extensions": self.extensions,
                "cuts": self.cuts.iter().map(|(u, v)| json!([u, v])).collect::<Vec<_>>(),
                "recovery": self.recovery.iter()
                    .map(|(s, ts)| json!({"source": s, "targets": ts}))
                    .collect::<Vec<_>>(),
                "rounds": self.recovery_rounds,
            },
            "circuit": {
                "depth": self.depth,
                "gates": self.gates,
                "per_layer_widths": self.per_layer_widths,
            },
            "checks": self.checks.iter().map(|c| json!({
                "name": c.name,
                "status": c.status.label(),
                "detail": c.detail,
            })).collect::<Vec<_>>(),
            "trials": self.trials.as_ref().map(|t| json!({
                "requested": t.requested,
                "passed": t.passed,
                "seed": t.seed,
            })),
            "verdict": self.verdict(),
        })
    }
}

fn join<T: std::fmt::Display>(items: &[T], sep: &str) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(sep)
}

fn list_or_dash(items: &[usize]) -> String {
    if items.is_empty() {
        "-".into()
    } else {
        join(items, " ")
    }
}
