//! Reading network instances and writing result reports.

mod json;
mod report;
mod sndlib;

pub use json::{canonicalize_json, parse_json_instance, serialize_instance};
pub use report::{
    format_number, robust_report_json, round_sig, serialize_report, serialize_value,
    KeyValueReport, OutputFormat, Reportable, SIGNIFICANT_DIGITS,
};
pub use sndlib::parse_sndlib_native;

use crate::network::{DemandMatrix, Network, NetworkError};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IngestError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error in field `{field}`: {message}")]
    Schema { field: String, message: String },
    #[error("unknown node `{name}` at line {line}")]
    UnknownNode { name: String, line: usize },
    #[error("link `{link}` has non-positive capacity {capacity}")]
    NonPositiveCapacity { link: String, capacity: f64 },
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceFormat {
    SndlibNative,
    Json,
}

/// A parsed instance: network, demands and the metadata the formats carry.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceDocument {
    pub name: String,
    pub network: Network,
    pub demands: DemandMatrix,
    pub source_format: SourceFormat,
    /// Vertex labels; SNDlib node ids, or decimal indices for JSON.
    pub node_names: Vec<String>,
    /// SNDlib node coordinates, if given.
    pub coordinates: Vec<Option<(f64, f64)>>,
    /// For SNDlib input, the two directed edges created from each link.
    pub link_pairs: Vec<(usize, usize)>,
}

impl InstanceDocument {
    /// Failure units that delete both directions of a link together. Falls
    /// back to one unit per edge when the input had no undirected links.
    pub fn paired_units(&self) -> Vec<Vec<usize>> {
        if self.link_pairs.is_empty() {
            (0..self.network.n_edges()).map(|e| vec![e]).collect()
        } else {
            self.link_pairs.iter().map(|&(a, b)| vec![a, b]).collect()
        }
    }
}

/// Reads an instance, choosing the parser by `format` or, if `None`, by the
/// file extension (`.json` is JSON, anything else SNDlib native).
pub fn load_instance(
    path: &Path,
    format: Option<SourceFormat>,
) -> Result<InstanceDocument, IngestError> {
    let text = std::fs::read_to_string(path).map_err(|e| IngestError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let format = format.unwrap_or_else(|| match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("json") => SourceFormat::Json,
        _ => SourceFormat::SndlibNative,
    });
    match format {
        SourceFormat::Json => parse_json_instance(&text),
        SourceFormat::SndlibNative => parse_sndlib_native(&text),
    }
}
