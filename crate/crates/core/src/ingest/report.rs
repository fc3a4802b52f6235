//! Deterministic JSON and CSV rendering of results.

use crate::robust::{RobustReport, WorstCase};
use serde_json::{json, Map, Number, Value};

pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

/// Rounds to [`SIGNIFICANT_DIGITS`] significant decimal digits.
pub fn round_sig(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        // also turns -0.0 into 0.0
        return if v == 0.0 { 0.0 } else { v };
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v)
        .parse()
        .expect("formatted float parses")
}

fn round_value(v: &Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => Number::from_f64(round_sig(n.as_f64().unwrap()))
            .map(Value::Number)
            .unwrap_or(Value::Null),
        Value::Array(a) => Value::Array(a.iter().map(round_value).collect()),
        Value::Object(o) => Value::Object(
            o.iter()
                .map(|(k, v)| (k.clone(), round_value(v)))
                .collect::<Map<_, _>>(),
        ),
        other => other.clone(),
    }
}

/// Pretty JSON with sorted keys and rounded floats, newline terminated.
pub fn serialize_value(v: &Value) -> String {
    let mut s =
        serde_json::to_string_pretty(&round_value(v)).expect("JSON values always serialize");
    s.push('\n');
    s
}

/// Decimal text of `v` rounded to [`SIGNIFICANT_DIGITS`], always with a
/// fractional part or exponent.
pub fn format_number(v: f64) -> String {
    let r = round_sig(v);
    if r == r.trunc() && r.abs() < 1e15 {
        format!("{r:.1}")
    } else {
        format!("{r}")
    }
}

fn edge_list(edges: &[usize]) -> String {
    edges
        .iter()
        .map(|e| e.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

/// Something that renders as a JSON document and as a CSV table.
pub trait Reportable {
    fn to_json(&self) -> Value;
    fn csv_header(&self) -> Vec<String>;
    fn csv_rows(&self) -> Vec<Vec<String>>;
}

/// Renders `report` deterministically in the requested format.
pub fn serialize_report(report: &dyn Reportable, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => serialize_value(&report.to_json()),
        OutputFormat::Csv => {
            let mut out = report.csv_header().join(",");
            out.push('\n');
            for row in report.csv_rows() {
                out.push_str(&row.join(","));
                out.push('\n');
            }
            out
        }
    }
}

/// JSON object of a robust evaluation, without timings.
pub fn robust_report_json(rep: &RobustReport) -> Value {
    let scenarios: Vec<Value> = rep
        .records
        .iter()
        .map(|r| json!({"edges": r.scenario.edges(), "value": r.value}))
        .collect();
    json!({
        "q": rep.q,
        "sense": match rep.sense { WorstCase::Min => "min", WorstCase::Max => "max" },
        "worst_value": rep.worst_value,
        "worst_scenario": rep.worst_scenario.edges(),
        "scenarios": scenarios,
        "scenarios_evaluated": rep.scenarios_evaluated,
        "root_pivots": rep.root_pivots,
        "pivots_total": rep.pivots_total,
    })
}

impl Reportable for RobustReport {
    fn to_json(&self) -> Value {
        robust_report_json(self)
    }

    fn csv_header(&self) -> Vec<String> {
        vec!["scenario_edges".into(), "value".into()]
    }

    /// One row per scenario, then `worst:<edges>` with the worst value.
    fn csv_rows(&self) -> Vec<Vec<String>> {
        let mut rows: Vec<Vec<String>> = self
            .records
            .iter()
            .map(|r| {
                vec![
                    edge_list(r.scenario.edges()),
                    r.value
                        .map(format_number)
                        .unwrap_or_else(|| "infeasible".into()),
                ]
            })
            .collect();
        rows.push(vec![
            format!("worst:{}", edge_list(self.worst_scenario.edges())),
            format_number(self.worst_value),
        ]);
        rows
    }
}

/// Flat list of named results; CSV is `key,value`.
#[derive(Debug, Clone, Default)]
pub struct KeyValueReport {
    pub entries: Vec<(String, Value)>,
}

impl KeyValueReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.entries.push((key.to_string(), value.into()));
        self
    }
}

fn cell_text(v: &Value) -> String {
    match v {
        Value::Number(n) if n.is_f64() => format_number(n.as_f64().unwrap()),
        Value::String(s) => s.clone(),
        Value::Array(a) => a.iter().map(cell_text).collect::<Vec<_>>().join(";"),
        other => serde_json::to_string(&round_value(other)).expect("JSON values always serialize"),
    }
}

fn csv_cell(v: &Value) -> String {
    let text = cell_text(v);
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text
    }
}

impl Reportable for KeyValueReport {
    fn to_json(&self) -> Value {
        Value::Object(self.entries.iter().cloned().collect())
    }

    fn csv_header(&self) -> Vec<String> {
        vec!["key".into(), "value".into()]
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        let mut sorted: Vec<&(String, Value)> = self.entries.iter().collect();
        sorted.sort_by(|a, b| a.0.cmp(&b.0));
        sorted
            .into_iter()
            .map(|(k, v)| vec![k.clone(), csv_cell(v)])
            .collect()
    }
}
