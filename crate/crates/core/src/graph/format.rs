//! Line-oriented graph file format.
//!
//! ```text
//! nodes: A,B,C
//! kind: cpdag
//! A -> B
//! B -- C
//! ```
//!
//! The header names the nodes; an optional `kind:` line records which family
//! the file stores. Each edge line is `A <mark><mark> B` where the mark
//! characters come from `{-, >, <, o}`: `--` undirected, `->`/`<-` directed,
//! `<->` bidirected, and circle forms `o->`, `<-o`, `o-o`, `o-`, `-o`.
//! Parsing and serialising round-trip.

use super::{CausalDag, GraphError, Mag, Mark, Pattern, PatternKind};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    Dag,
    Mag,
    Cpdag,
    Pag,
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GraphKind::Dag => "dag",
            GraphKind::Mag => "mag",
            GraphKind::Cpdag => "cpdag",
            GraphKind::Pag => "pag",
        };
        f.write_str(s)
    }
}

/// A parsed graph file: node names plus mark-annotated edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphFile {
    pub names: Vec<String>,
    pub kind: Option<GraphKind>,
    /// `(a, mark_at_a, mark_at_b, b)` with indices into `names`.
    pub edges: Vec<(usize, Mark, Mark, usize)>,
}

fn mark_chars(ma: Mark, mb: Mark) -> String {
    let left = match ma {
        Mark::Tail => "",
        Mark::Arrow => "<",
        Mark::Circle => "o",
    };
    let right = match mb {
        Mark::Tail => "",
        Mark::Arrow => ">",
        Mark::Circle => "o",
    };
    if left.is_empty() && right.is_empty() {
        return "--".to_string();
    }
    format!("{left}-{right}")
}

fn parse_edge_token(tok: &str) -> Option<(Mark, Mark)> {
    let chars: Vec<char> = tok.chars().collect();
    if chars.len() < 2 {
        return None;
    }
    let left = match chars[0] {
        '-' => Mark::Tail,
        '<' => Mark::Arrow,
        'o' => Mark::Circle,
        _ => return None,
    };
    let right = match chars[chars.len() - 1] {
        '-' => Mark::Tail,
        '>' => Mark::Arrow,
        'o' => Mark::Circle,
        _ => return None,
    };
    if !chars[1..chars.len() - 1].iter().all(|&c| c == '-') {
        return None;
    }
    Some((left, right))
}

fn validate_name(name: &str, line: usize) -> Result<(), GraphError> {
    if name.is_empty() || name.contains([',', ':']) || name.contains(char::is_whitespace) {
        return Err(GraphError::Parse {
            line,
            msg: format!("invalid node name {name:?}"),
        });
    }
    Ok(())
}

impl GraphFile {
    pub fn new(names: Vec<String>, kind: Option<GraphKind>) -> Self {
        Self { names, kind, edges: Vec::new() }
    }

    pub fn parse(text: &str) -> Result<Self, GraphError> {
        let mut names: Option<Vec<String>> = None;
        let mut kind = None;
        let mut edges = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("nodes:") {
                let parsed: Vec<String> =
                    rest.split(',').map(|s| s.trim().to_string()).collect();
                for (i, name) in parsed.iter().enumerate() {
                    validate_name(name, line_no)?;
                    if parsed[..i].contains(name) {
                        return Err(GraphError::Parse {
                            line: line_no,
                            msg: format!("duplicate node name {name:?}"),
                        });
                    }
                }
                names = Some(parsed);
                continue;
            }
            if let Some(rest) = line.strip_prefix("kind:") {
                kind = Some(match rest.trim() {
                    "dag" => GraphKind::Dag,
                    "mag" => GraphKind::Mag,
                    "cpdag" => GraphKind::Cpdag,
                    "pag" => GraphKind::Pag,
                    other => {
                        return Err(GraphError::Parse {
                            line: line_no,
                            msg: format!("unknown graph kind {other:?}"),
                        })
                    }
                });
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(GraphError::Parse {
                    line: line_no,
                    msg: format!("expected `A <marks> B`, got {line:?}"),
                });
            }
            let names = names.as_ref().ok_or(GraphError::Parse {
                line: line_no,
                msg: "edge appears before the nodes: header".into(),
            })?;
            let lookup = |name: &str| {
                names.iter().position(|n| n == name).ok_or(GraphError::Parse {
                    line: line_no,
                    msg: format!("unknown node {name:?}"),
                })
            };
            let a = lookup(fields[0])?;
            let b = lookup(fields[2])?;
            if a == b {
                return Err(GraphError::Parse {
                    line: line_no,
                    msg: format!("self-loop on {:?}", fields[0]),
                });
            }
            let (ma, mb) = parse_edge_token(fields[1]).ok_or_else(|| GraphError::Parse {
                line: line_no,
                msg: format!("bad edge marks {:?}", fields[1]),
            })?;
            edges.push((a, ma, mb, b));
        }
        let names = names.ok_or(GraphError::Parse { line: 0, msg: "missing nodes: header".into() })?;
        Ok(Self { names, kind, edges })
    }

    pub fn from_dag(g: &CausalDag, names: &[String]) -> Self {
        let edges = g.edges().map(|(a, b)| (a, Mark::Tail, Mark::Arrow, b)).collect();
        Self { names: names.to_vec(), kind: Some(GraphKind::Dag), edges }
    }

    pub fn from_mag(m: &Mag, names: &[String]) -> Self {
        Self { names: names.to_vec(), kind: Some(GraphKind::Mag), edges: m.edges().collect() }
    }

    pub fn from_pattern(p: &Pattern, names: &[String]) -> Self {
        let kind = match p.kind() {
            PatternKind::Cpdag => GraphKind::Cpdag,
            PatternKind::Pag => GraphKind::Pag,
        };
        Self { names: names.to_vec(), kind: Some(kind), edges: p.edges().collect() }
    }

    pub fn to_dag(&self) -> Result<CausalDag, GraphError> {
        let mut directed = Vec::new();
        for &(a, ma, mb, b) in &self.edges {
            match (ma, mb) {
                (Mark::Tail, Mark::Arrow) => directed.push((a, b)),
                (Mark::Arrow, Mark::Tail) => directed.push((b, a)),
                _ => return Err(GraphError::MarkNotAllowed(ma)),
            }
        }
        CausalDag::new(self.names.len(), &directed)
    }

    pub fn to_mag(&self) -> Result<Mag, GraphError> {
        Mag::new(self.names.len(), &self.edges)
    }

    pub fn to_pattern(&self, kind: PatternKind) -> Result<Pattern, GraphError> {
        Pattern::new(kind, self.names.len(), &self.edges)
    }

    /// Pattern kind from the `kind:` header, when present and applicable.
    pub fn pattern_kind(&self) -> Option<PatternKind> {
        match self.kind? {
            GraphKind::Cpdag => Some(PatternKind::Cpdag),
            GraphKind::Pag => Some(PatternKind::Pag),
            _ => None,
        }
    }
}

impl fmt::Display for GraphFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "nodes: {}", self.names.join(","))?;
        if let Some(kind) = self.kind {
            writeln!(f, "kind: {kind}")?;
        }
        for &(a, ma, mb, b) in &self.edges {
            writeln!(f, "{} {} {}", self.names[a], mark_chars(ma, mb), self.names[b])?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_spec_examples() {
        let text = "nodes: A,B,C\nA -> B\nA <-> C\nB o-o C\n";
        let gf = GraphFile::parse(text).unwrap();
        assert_eq!(gf.names, vec!["A", "B", "C"]);
        assert_eq!(
            gf.edges,
            vec![
                (0, Mark::Tail, Mark::Arrow, 1),
                (0, Mark::Arrow, Mark::Arrow, 2),
                (1, Mark::Circle, Mark::Circle, 2),
            ]
        );
    }

    #[test]
    fn round_trips() {
        let text = "nodes: A,B,C,D\nkind: pag\nA -> B\nB <-> C\nC o-o D\nA o-> D\nB -- D\n";
        let gf = GraphFile::parse(text).unwrap();
        let reparsed = GraphFile::parse(&gf.to_string()).unwrap();
        assert_eq!(gf, reparsed);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = GraphFile::parse("nodes: A,B\nA xx B\n").unwrap_err();
        match err {
            GraphError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
        assert!(GraphFile::parse("A -> B\n").is_err());
        assert!(GraphFile::parse("nodes: A,B\nA -> C\n").is_err());
        assert!(GraphFile::parse("nodes: A,A\n").is_err());
    }

    #[test]
    fn dag_conversion() {
        let gf = GraphFile::parse("nodes: A,B\nkind: dag\nB <- A\n").unwrap();
        let dag = gf.to_dag().unwrap();
        assert!(dag.has_edge(0, 1));
        let gf2 = GraphFile::parse("nodes: A,B\nA o-o B\n").unwrap();
        assert!(gf2.to_dag().is_err());
    }
}
