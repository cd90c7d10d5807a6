use std::fmt::Write as _;
use std::time::Duration;

use pandora_core::Instance;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::commands::{Done, Failure};

/// `sha256:` of the compact JSON form of an instance.
pub fn digest(inst: &Instance) -> String {
    let text = serde_json::to_string(inst).expect("instances always serialize");
    format!("sha256:{:x}", Sha256::digest(text.as_bytes()))
}

/// Everything a command prints; field order is fixed.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: Vec<String>,
    /// `ok`, `fail` (a check did not hold) or `error`.
    pub status: &'static str,
    pub instance_digest: Option<String>,
    pub results: Value,
    pub queries_used: Option<u64>,
    pub wall_time_ms: f64,
}

impl RunReport {
    pub fn finished(command: Vec<String>, done: Done, elapsed: Duration) -> Self {
        RunReport {
            command,
            status: if done.pass { "ok" } else { "fail" },
            instance_digest: done.digest,
            results: done.results,
            queries_used: done.queries,
            wall_time_ms: elapsed.as_secs_f64() * 1e3,
        }
    }

    pub fn failed(command: Vec<String>, failure: &Failure, elapsed: Duration) -> Self {
        RunReport {
            command,
            status: "error",
            instance_digest: None,
            results: json!({ "error": failure.kind(), "message": failure.to_string() }),
            queries_used: None,
            wall_time_ms: elapsed.as_secs_f64() * 1e3,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn render_human(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "command: {}", self.command.join(" "));
        let _ = writeln!(out, "status: {}", self.status);
        if let Some(d) = &self.instance_digest {
            let _ = writeln!(out, "instance: {d}");
        }
        if let Some(q) = self.queries_used {
            let _ = writeln!(out, "cost queries: {q}");
        }
        let _ = writeln!(out, "wall time: {:.1} ms", self.wall_time_ms);
        let _ = writeln!(out, "results:");
        render(&mut out, &self.results, 1);
        out
    }
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("-".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Array(a) if a.iter().all(|x| !x.is_array() && !x.is_object()) => Some(format!(
            "[{}]",
            a.iter().filter_map(scalar).collect::<Vec<_>>().join(", ")
        )),
        _ => None,
    }
}

fn render(out: &mut String, v: &Value, depth: usize) {
    let pad = "  ".repeat(depth);
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                match scalar(x) {
                    Some(s) => {
                        let _ = writeln!(out, "{pad}{k}: {s}");
                    }
                    None => {
                        let _ = writeln!(out, "{pad}{k}:");
                        render(out, x, depth + 1);
                    }
                }
            }
        }
        Value::Array(items) => {
            for (i, x) in items.iter().enumerate() {
                match scalar(x) {
                    Some(s) => {
                        let _ = writeln!(out, "{pad}- {s}");
                    }
                    None => {
                        let _ = writeln!(out, "{pad}[{i}]");
                        render(out, x, depth + 1);
                    }
                }
            }
        }
        other => {
            let _ = writeln!(out, "{pad}{}", scalar(other).unwrap_or_default());
        }
    }
}
