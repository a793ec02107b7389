//! Report model and its JSON / CSV renderings.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

/// One checked quantity.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualRow {
    pub name: String,
    pub max: f64,
    pub tol: f64,
    pub pass: bool,
}

impl ResidualRow {
    pub fn new(name: impl Into<String>, max: f64, tol: f64) -> Self {
        // NaN never passes
        let pass = max <= tol;
        Self { name: name.into(), max, tol, pass }
    }
}

/// Eigenvalue cluster of a field, with its spread over the grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cluster {
    pub value: f64,
    pub multiplicity: usize,
    pub spread: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Spectrum {
    /// `None` when the multiplicity pattern changes across the grid.
    pub clusters: Option<Vec<Cluster>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LambdaSpectrum {
    pub lambda: f64,
    pub spectrum: Spectrum,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvariantSummary {
    pub grid_points: usize,
    pub stencil_grid_points: usize,
    pub fd_step: f64,
    pub jet_order: usize,
    pub rho_min: f64,
    pub rho_max: f64,
    pub b_eigenvalues: Spectrum,
    pub a_eigenvalues: Option<Spectrum>,
    pub d_eigenvalues: Vec<LambdaSpectrum>,
    pub phi_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceSummary {
    pub trials: usize,
    pub seed: u64,
    pub max_deviation: f64,
    pub skipped: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntryReport {
    pub id: String,
    pub family: String,
    pub label: String,
    pub params: Value,
    /// `ok`, `failed` (some row fails) or `error` (could not be evaluated).
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inner: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invariants: Option<InvariantSummary>,
    pub residuals: Vec<ResidualRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equivalence: Option<EquivalenceSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Header {
    pub tool: String,
    pub version: String,
    pub conventions: Vec<String>,
    pub config: Value,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub pass: bool,
    pub entries: usize,
    pub failed_rows: usize,
    pub errors: usize,
    pub exit_code: i32,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub header: Header,
    pub entries: Vec<EntryReport>,
    pub verdict: Verdict,
}

/// `v` with 17 significant digits; non-finite values become `null`.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "null".to_string()
    }
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&format_float(n.as_f64().unwrap()));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string serializes")),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(out, item, indent + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            let _ = write!(out, "{}]", pad(indent));
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            for (i, (k, item)) in map.iter().enumerate() {
                let _ = write!(out, "{}{}: ", pad(indent + 1), serde_json::to_string(k).expect("key serializes"));
                write_value(out, item, indent + 1);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            let _ = write!(out, "{}}}", pad(indent));
        }
    }
}

/// Pretty JSON with every float at 17 significant digits.
pub fn to_json<S: Serialize>(value: &S) -> String {
    let v = serde_json::to_value(value).expect("report serializes");
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    out
}

/// Residual table as CSV: `entry,name,max,tol,pass`.
pub fn to_csv(report: &Report) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["entry", "name", "max", "tol", "pass"]).expect("in-memory write");
    for e in &report.entries {
        if e.error.is_some() {
            w.write_record([e.id.as_str(), "error", "", "", "false"]).expect("in-memory write");
        }
        for r in &e.residuals {
            w.write_record([
                e.id.as_str(),
                r.name.as_str(),
                &format_float(r.max),
                &format_float(r.tol),
                if r.pass { "true" } else { "false" },
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}
