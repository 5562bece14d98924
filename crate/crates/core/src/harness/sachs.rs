//! The 11-protein signalling consensus network (17 directed edges) and the
//! column-name normalisation used to align user-supplied CSV exports with it.
//! The measurement data itself is not redistributed; users point the harness
//! at their own discretised copy.

use crate::graph::format::GraphFile;
use crate::harness::HarnessError;

pub const CONSENSUS_GRAPH: &str = include_str!("../../assets/sachs_consensus.graph");

pub fn consensus_graph_file() -> GraphFile {
    GraphFile::parse(CONSENSUS_GRAPH).expect("bundled graph file parses")
}

/// Canonicalises the protein names found across common exports of the
/// dataset (`praf`, `pmek`, `p44/42`, `pakts473`, `pjnk`, case variants).
pub fn normalize_name(raw: &str) -> String {
    let folded: String =
        raw.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_lowercase();
    match folded.as_str() {
        "praf" | "raf" => "raf",
        "pmek" | "mek" | "mek12" => "mek",
        "plcg" | "plc" | "plcgamma" => "plcg",
        "pip2" => "pip2",
        "pip3" => "pip3",
        "p4442" | "erk" | "erk12" => "erk",
        "pakts473" | "akt" | "akts473" => "akt",
        "pka" => "pka",
        "pkc" => "pkc",
        "p38" => "p38",
        "pjnk" | "jnk" => "jnk",
        other => return other.to_string(),
    }
    .to_string()
}

/// Reindexes a truth graph's nodes to match dataset columns by normalised
/// name.
pub fn align_to_columns(truth: &GraphFile, columns: &[String]) -> Result<GraphFile, HarnessError> {
    let normalized: Vec<String> = columns.iter().map(|c| normalize_name(c)).collect();
    let mut mapping = Vec::with_capacity(truth.names.len());
    for name in &truth.names {
        let target = normalize_name(name);
        let position = normalized.iter().position(|c| *c == target).ok_or_else(|| {
            HarnessError::Config(format!("truth node {name:?} not found among data columns"))
        })?;
        mapping.push(position);
    }
    if truth.names.len() != columns.len() {
        return Err(HarnessError::Config(format!(
            "truth graph has {} nodes but the data has {} columns",
            truth.names.len(),
            columns.len()
        )));
    }
    let edges = truth
        .edges
        .iter()
        .map(|&(a, ma, mb, b)| (mapping[a], ma, mb, mapping[b]))
        .collect();
    Ok(GraphFile { names: columns.to_vec(), kind: truth.kind, edges })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn consensus_has_eleven_nodes_and_seventeen_edges() {
        let gf = consensus_graph_file();
        assert_eq!(gf.names.len(), 11);
        assert_eq!(gf.edges.len(), 17);
        let dag = gf.to_dag().unwrap();
        assert_eq!(dag.edge_count(), 17);
    }

    #[test]
    fn aliases_normalise() {
        assert_eq!(normalize_name("praf"), "raf");
        assert_eq!(normalize_name("p44/42"), "erk");
        assert_eq!(normalize_name("pakts473"), "akt");
        assert_eq!(normalize_name("PJNK"), "jnk");
        assert_eq!(normalize_name("PIP2"), "pip2");
    }

    #[test]
    fn alignment_reorders_against_columns() {
        let truth = consensus_graph_file();
        let mut columns: Vec<String> = truth.names.clone();
        columns.reverse();
        let aligned = align_to_columns(&truth, &columns).unwrap();
        let dag = aligned.to_dag().unwrap();
        assert_eq!(dag.edge_count(), 17);
        // PKC -> PKA must survive reordering: find their new indices.
        let pkc = columns.iter().position(|c| normalize_name(c) == "pkc").unwrap();
        let pka = columns.iter().position(|c| normalize_name(c) == "pka").unwrap();
        assert!(dag.has_edge(pkc, pka));
    }
}
