//! JSON interchange format.
//!
//! ```json
//! {
//!   "name": "net-a",
//!   "n_vertices": 2,
//!   "edges": [{"tail": 0, "head": 1, "capacity": 3.0, "delay": 0.0}],
//!   "demands": [{"from": 0, "to": 1, "value": 4.0}]
//! }
//! ```
//!
//! `name` and `delay` are optional. Indices are 0-based.

use super::{IngestError, InstanceDocument, SourceFormat};
use crate::network::{DemandMatrix, Edge, Network};
use serde_json::{json, Map, Value};
use std::collections::BTreeMap;

fn schema(field: impl Into<String>, message: impl Into<String>) -> IngestError {
    IngestError::Schema {
        field: field.into(),
        message: message.into(),
    }
}

fn parse_value(text: &str) -> Result<Value, IngestError> {
    serde_json::from_str(text).map_err(|e| IngestError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

fn object<'a>(v: &'a Value, field: &str) -> Result<&'a Map<String, Value>, IngestError> {
    v.as_object()
        .ok_or_else(|| schema(field, "expected an object"))
}

fn array<'a>(obj: &'a Map<String, Value>, field: &str) -> Result<&'a Vec<Value>, IngestError> {
    obj.get(field)
        .ok_or_else(|| schema(field, "missing"))?
        .as_array()
        .ok_or_else(|| schema(field, "expected an array"))
}

fn index(obj: &Map<String, Value>, field: &str) -> Result<usize, IngestError> {
    let v = obj.get(field).ok_or_else(|| schema(field, "missing"))?;
    v.as_u64()
        .map(|i| i as usize)
        .ok_or_else(|| schema(field, format!("expected a non-negative integer, got {v}")))
}

fn number(obj: &Map<String, Value>, field: &str, default: Option<f64>) -> Result<f64, IngestError> {
    match obj.get(field) {
        None => default.ok_or_else(|| schema(field, "missing")),
        Some(v) => v
            .as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| schema(field, format!("expected a number, got {v}"))),
    }
}

struct Raw {
    name: String,
    n_vertices: usize,
    edges: Vec<Edge>,
    /// Summed positive demands keyed by (from, to).
    demands: BTreeMap<(usize, usize), f64>,
}

fn read_raw(text: &str) -> Result<Raw, IngestError> {
    let root = parse_value(text)?;
    let obj = object(&root, "<root>")?;
    let name = match obj.get("name") {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(schema("name", "expected a string")),
    };
    let n_vertices = index(obj, "n_vertices")?;
    let mut edges = Vec::new();
    for e in array(obj, "edges")? {
        let e = object(e, "edges")?;
        let tail = index(e, "tail")?;
        let head = index(e, "head")?;
        if tail >= n_vertices {
            return Err(schema("tail", format!("vertex {tail} out of range")));
        }
        if head >= n_vertices {
            return Err(schema("head", format!("vertex {head} out of range")));
        }
        let capacity = number(e, "capacity", None)?;
        if capacity <= 0.0 {
            return Err(schema(
                "capacity",
                format!("must be positive, got {capacity}"),
            ));
        }
        let delay = number(e, "delay", Some(0.0))?;
        if delay < 0.0 {
            return Err(schema(
                "delay",
                format!("must be non-negative, got {delay}"),
            ));
        }
        edges.push(Edge {
            tail,
            head,
            capacity,
            delay,
        });
    }
    let mut demands = BTreeMap::new();
    for d in array(obj, "demands")? {
        let d = object(d, "demands")?;
        let from = index(d, "from")?;
        let to = index(d, "to")?;
        if from >= n_vertices {
            return Err(schema("from", format!("vertex {from} out of range")));
        }
        if to >= n_vertices {
            return Err(schema("to", format!("vertex {to} out of range")));
        }
        let value = number(d, "value", None)?;
        if value < 0.0 {
            return Err(schema(
                "value",
                format!("must be non-negative, got {value}"),
            ));
        }
        if value > 0.0 {
            if from == to {
                return Err(schema("to", "demand from a vertex to itself"));
            }
            *demands.entry((from, to)).or_insert(0.0) += value;
        }
    }
    Ok(Raw {
        name,
        n_vertices,
        edges,
        demands,
    })
}

/// Parses a JSON instance.
pub fn parse_json_instance(text: &str) -> Result<InstanceDocument, IngestError> {
    let raw = read_raw(text)?;
    let network = Network::new(raw.n_vertices, raw.edges)?;
    let mut d = DemandMatrix::zeros(raw.n_vertices);
    for (&(s, t), &v) in &raw.demands {
        d.add(s, t, v)?;
    }
    Ok(InstanceDocument {
        name: raw.name,
        network,
        demands: d,
        source_format: SourceFormat::Json,
        node_names: (0..raw.n_vertices).map(|i| i.to_string()).collect(),
        coordinates: vec![None; raw.n_vertices],
        link_pairs: Vec::new(),
    })
}

fn render(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

/// Canonical JSON text of an instance: sorted keys, floats for capacities,
/// delays and demand values, demands in `(from, to)` order.
pub fn serialize_instance(doc: &InstanceDocument) -> String {
    let edges: Vec<Value> = doc
        .network
        .edges()
        .iter()
        .map(|e| json!({"tail": e.tail, "head": e.head, "capacity": e.capacity, "delay": e.delay}))
        .collect();
    let demands: Vec<Value> = doc
        .demands
        .positive_pairs()
        .into_iter()
        .map(|(s, t, v)| json!({"from": s, "to": t, "value": v}))
        .collect();
    render(&json!({
        "name": doc.name,
        "n_vertices": doc.network.n_vertices(),
        "edges": edges,
        "demands": demands,
    }))
}

/// Canonical form of a JSON instance text, computed on the document alone:
/// defaults filled in, numbers normalized, zero demands dropped and
/// duplicates summed.
pub fn canonicalize_json(text: &str) -> Result<String, IngestError> {
    let raw = read_raw(text)?;
    let edges: Vec<Value> = raw
        .edges
        .iter()
        .map(|e| json!({"tail": e.tail, "head": e.head, "capacity": e.capacity, "delay": e.delay}))
        .collect();
    let demands: Vec<Value> = raw
        .demands
        .iter()
        .map(|(&(s, t), &v)| json!({"from": s, "to": t, "value": v}))
        .collect();
    Ok(render(&json!({
        "name": raw.name,
        "n_vertices": raw.n_vertices,
        "edges": edges,
        "demands": demands,
    })))
}
