//! SNDlib native format.
//!
//! ```text
//! NODES (
//!   <id> ( <x> <y> )
//! )
//! LINKS (
//!   <id> ( <source> <target> ) <pre_cap> <pre_cap_cost> <routing_cost> <setup_cost> ( {<mod_cap> <mod_cost>}* )
//! )
//! DEMANDS (
//!   <id> ( <source> <target> ) <routing_unit> <value> <max_path_length>
//! )
//! ```
//!
//! Other sections (META, ADMISSIBLE_PATHS, ...) are skipped. `#` starts a
//! comment; a leading `?` line is the format banner.

use super::{IngestError, InstanceDocument, SourceFormat};
use crate::network::{DemandMatrix, Edge, Network};
use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Word(String),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn tokenize(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    for (li, line) in text.lines().enumerate() {
        let line_no = li + 1;
        if line.trim_start().starts_with('?') {
            continue;
        }
        let content = line.split('#').next().unwrap_or("");
        let mut chars = content.char_indices().peekable();
        while let Some(&(ci, c)) = chars.peek() {
            let column = ci + 1;
            match c {
                '(' | ')' => {
                    out.push(Token {
                        tok: if c == '(' { Tok::Open } else { Tok::Close },
                        line: line_no,
                        column,
                    });
                    chars.next();
                }
                c if c.is_whitespace() => {
                    chars.next();
                }
                _ => {
                    let mut word = String::new();
                    while let Some(&(_, c)) = chars.peek() {
                        if c.is_whitespace() || c == '(' || c == ')' {
                            break;
                        }
                        word.push(c);
                        chars.next();
                    }
                    out.push(Token {
                        tok: Tok::Word(word),
                        line: line_no,
                        column,
                    });
                }
            }
        }
    }
    out
}

struct Cursor {
    toks: Vec<Token>,
    pos: usize,
    last_line: usize,
}

impl Cursor {
    fn err(&self, message: impl Into<String>) -> IngestError {
        let (line, column) = self
            .toks
            .get(self.pos)
            .map(|t| (t.line, t.column))
            .unwrap_or((self.last_line, 1));
        IngestError::Parse {
            line,
            column,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .map(|t| t.line)
            .unwrap_or(self.last_line)
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), IngestError> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn word(&mut self, what: &str) -> Result<String, IngestError> {
        match self.peek() {
            Some(Tok::Word(w)) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            _ => Err(self.err(format!("expected {what}"))),
        }
    }

    fn number(&mut self, what: &str) -> Result<f64, IngestError> {
        let start = self.pos;
        let w = self.word(what)?;
        match w.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => {
                self.pos = start;
                Err(self.err(format!("expected {what}, found `{w}`")))
            }
        }
    }

    /// Skips a balanced parenthesized group starting at the current `(`.
    fn skip_group(&mut self) -> Result<(), IngestError> {
        self.expect(Tok::Open, "`(`")?;
        let mut depth = 1;
        while depth > 0 {
            match self.peek() {
                Some(Tok::Open) => depth += 1,
                Some(Tok::Close) => depth -= 1,
                Some(Tok::Word(_)) => {}
                None => return Err(self.err("unterminated section")),
            }
            self.pos += 1;
        }
        Ok(())
    }

    fn at_close(&self) -> bool {
        self.peek() == Some(&Tok::Close)
    }
}

struct RawLink {
    id: String,
    line: usize,
    source: String,
    target: String,
    pre_capacity: f64,
    routing_cost: f64,
    modules: Vec<f64>,
}

struct RawDemand {
    line: usize,
    source: String,
    target: String,
    value: f64,
}

/// Parses an SNDlib native document.
///
/// Every undirected link becomes two directed edges with the full capacity.
/// The capacity is the pre-installed capacity, or the largest module
/// capacity when nothing is pre-installed. The routing cost becomes the
/// delay coefficient. Demands between the same ordered pair are summed.
pub fn parse_sndlib_native(text: &str) -> Result<InstanceDocument, IngestError> {
    let toks = tokenize(text);
    let last_line = text.lines().count().max(1);
    let mut cur = Cursor {
        toks,
        pos: 0,
        last_line,
    };

    let mut nodes: Vec<(String, Option<(f64, f64)>)> = Vec::new();
    let mut links = Vec::new();
    let mut demands = Vec::new();
    let mut seen_nodes = false;

    while cur.peek().is_some() {
        let section = cur.word("section name")?;
        match section.as_str() {
            "NODES" => {
                seen_nodes = true;
                cur.expect(Tok::Open, "`(` after NODES")?;
                while !cur.at_close() {
                    let id = cur.word("node id")?;
                    let coords = if cur.peek() == Some(&Tok::Open) {
                        cur.pos += 1;
                        let x = cur.number("longitude")?;
                        let y = cur.number("latitude")?;
                        cur.expect(Tok::Close, "`)` after coordinates")?;
                        Some((x, y))
                    } else {
                        None
                    };
                    nodes.push((id, coords));
                }
                cur.expect(Tok::Close, "`)`")?;
            }
            "LINKS" => {
                cur.expect(Tok::Open, "`(` after LINKS")?;
                while !cur.at_close() {
                    let line = cur.line();
                    let id = cur.word("link id")?;
                    cur.expect(Tok::Open, "`(` before link endpoints")?;
                    let source = cur.word("link source")?;
                    let target = cur.word("link target")?;
                    cur.expect(Tok::Close, "`)` after link endpoints")?;
                    let pre_capacity = cur.number("pre-installed capacity")?;
                    let _pre_cost = cur.number("pre-installed capacity cost")?;
                    let routing_cost = cur.number("routing cost")?;
                    let _setup = cur.number("setup cost")?;
                    let mut modules = Vec::new();
                    if cur.peek() == Some(&Tok::Open) {
                        cur.pos += 1;
                        while !cur.at_close() {
                            modules.push(cur.number("module capacity")?);
                            cur.number("module cost")?;
                        }
                        cur.expect(Tok::Close, "`)` after modules")?;
                    }
                    links.push(RawLink {
                        id,
                        line,
                        source,
                        target,
                        pre_capacity,
                        routing_cost,
                        modules,
                    });
                }
                cur.expect(Tok::Close, "`)`")?;
            }
            "DEMANDS" => {
                cur.expect(Tok::Open, "`(` after DEMANDS")?;
                while !cur.at_close() {
                    let line = cur.line();
                    let _id = cur.word("demand id")?;
                    cur.expect(Tok::Open, "`(` before demand endpoints")?;
                    let source = cur.word("demand source")?;
                    let target = cur.word("demand target")?;
                    cur.expect(Tok::Close, "`)` after demand endpoints")?;
                    let _unit = cur.number("routing unit")?;
                    let value = cur.number("demand value")?;
                    let _max_len = cur.word("max path length")?;
                    demands.push(RawDemand {
                        line,
                        source,
                        target,
                        value,
                    });
                }
                cur.expect(Tok::Close, "`)`")?;
            }
            _ => cur.skip_group()?,
        }
    }
    if !seen_nodes {
        return Err(IngestError::Parse {
            line: 1,
            column: 1,
            message: "missing NODES section".into(),
        });
    }

    let index: HashMap<&str, usize> = nodes
        .iter()
        .enumerate()
        .map(|(i, (id, _))| (id.as_str(), i))
        .collect();
    let lookup = |name: &str, line: usize| {
        index
            .get(name)
            .copied()
            .ok_or_else(|| IngestError::UnknownNode {
                name: name.to_string(),
                line,
            })
    };

    let mut edges = Vec::with_capacity(2 * links.len());
    let mut link_pairs = Vec::with_capacity(links.len());
    for link in &links {
        let u = lookup(&link.source, link.line)?;
        let v = lookup(&link.target, link.line)?;
        let capacity = if link.pre_capacity > 0.0 {
            link.pre_capacity
        } else {
            link.modules
                .iter()
                .copied()
                .fold(link.pre_capacity, f64::max)
        };
        if !(capacity > 0.0) {
            return Err(IngestError::NonPositiveCapacity {
                link: link.id.clone(),
                capacity,
            });
        }
        let delay = link.routing_cost.max(0.0);
        link_pairs.push((edges.len(), edges.len() + 1));
        edges.push(Edge {
            tail: u,
            head: v,
            capacity,
            delay,
        });
        edges.push(Edge {
            tail: v,
            head: u,
            capacity,
            delay,
        });
    }
    let network = Network::new(nodes.len(), edges)?;

    let mut d = DemandMatrix::zeros(nodes.len());
    for dem in &demands {
        let s = lookup(&dem.source, dem.line)?;
        let t = lookup(&dem.target, dem.line)?;
        if dem.value > 0.0 {
            d.add(s, t, dem.value)?;
        }
    }

    let name = text
        .lines()
        .filter_map(|l| l.trim().strip_prefix('#'))
        .find_map(|l| {
            l.trim()
                .strip_prefix("network ")
                .map(|n| n.trim().to_string())
        })
        .unwrap_or_default();

    Ok(InstanceDocument {
        name,
        network,
        demands: d,
        source_format: SourceFormat::SndlibNative,
        node_names: nodes.iter().map(|(id, _)| id.clone()).collect(),
        coordinates: nodes.iter().map(|(_, c)| *c).collect(),
        link_pairs,
    })
}
