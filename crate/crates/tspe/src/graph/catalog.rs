//! Subgraph (label) membership catalog.

use std::collections::HashMap;

use super::SparseGraph;
use crate::error::{Error, Result};

/// Ordered mapping from subgraph identifiers to member node indices.
/// Ordering is first-appearance order from the source file and is frozen:
/// it fixes the column order of the label weight matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SubgraphCatalog {
    ids: Vec<String>,
    /// Sorted, deduplicated member indices per subgraph.
    members: Vec<Vec<usize>>,
    id_index: HashMap<String, usize>,
    num_nodes: usize,
}

impl SubgraphCatalog {
    pub fn new(num_nodes: usize, entries: Vec<(String, Vec<usize>)>) -> Result<Self> {
        let mut ids = Vec::with_capacity(entries.len());
        let mut members = Vec::with_capacity(entries.len());
        let mut id_index = HashMap::new();
        for (id, mut m) in entries {
            m.sort_unstable();
            m.dedup();
            if m.is_empty() {
                return Err(Error::Degenerate(format!("subgraph {id} has no members")));
            }
            if let Some(&bad) = m.iter().find(|&&i| i >= num_nodes) {
                return Err(Error::Dimension(format!(
                    "subgraph {id} member {bad} out of range for {num_nodes} nodes"
                )));
            }
            if id_index.insert(id.clone(), ids.len()).is_some() {
                return Err(Error::Config(format!("duplicate subgraph id {id}")));
            }
            ids.push(id);
            members.push(m);
        }
        Ok(SubgraphCatalog {
            ids,
            members,
            id_index,
            num_nodes,
        })
    }

    /// Number of subgraphs.
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Node count of the graph this catalog is bound to.
    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn id(&self, j: usize) -> &str {
        &self.ids[j]
    }

    pub fn members(&self, j: usize) -> &[usize] {
        &self.members[j]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.id_index.get(id).copied()
    }

    /// Inverted index: for each node, the subgraphs containing it.
    pub fn node_memberships(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_nodes];
        for (j, members) in self.members.iter().enumerate() {
            for &i in members {
                out[i].push(j);
            }
        }
        out
    }

    /// Catalog text in the on-disk format.
    pub fn to_string_tsv(&self, graph: &SparseGraph) -> String {
        let mut out = String::new();
        for (j, members) in self.members.iter().enumerate() {
            for &i in members {
                out.push_str(&format!("{}\t{}\n", self.ids[j], graph.external_id(i)));
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CatalogStats {
    /// Lines whose node id was absent from the graph.
    pub unknown_nodes_skipped: usize,
    pub duplicate_memberships: usize,
}

/// Parse `subgraph_id<TAB>node_id` lines against a bound graph. Unknown
/// node ids are skipped and counted; they are routine in real association
/// files. A subgraph whose members all fail to resolve is an error.
pub fn parse_subgraph_catalog(
    text: &str,
    graph: &SparseGraph,
) -> Result<(SubgraphCatalog, CatalogStats)> {
    let mut order: Vec<String> = Vec::new();
    let mut sets: HashMap<String, Vec<usize>> = HashMap::new();
    let mut stats = CatalogStats::default();
    let mut saw_data = false;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::parse(
                lineno + 1,
                format!("expected 2 fields, found {}", fields.len()),
            ));
        }
        saw_data = true;
        let (sid, nid) = (fields[0], fields[1]);
        if !sets.contains_key(sid) {
            order.push(sid.to_string());
            sets.insert(sid.to_string(), Vec::new());
        }
        match graph.index_of(nid) {
            Some(idx) => {
                let set = sets.get_mut(sid).unwrap();
                if set.contains(&idx) {
                    stats.duplicate_memberships += 1;
                } else {
                    set.push(idx);
                }
            }
            None => stats.unknown_nodes_skipped += 1,
        }
    }
    if !saw_data {
        return Err(Error::parse(0, "empty subgraph catalog"));
    }

    let mut entries = Vec::with_capacity(order.len());
    for id in order {
        let members = sets.remove(&id).unwrap();
        if members.is_empty() {
            return Err(Error::Degenerate(format!(
                "subgraph {id} has no resolvable members"
            )));
        }
        entries.push((id, members));
    }
    let catalog = SubgraphCatalog::new(graph.num_nodes(), entries)?;
    Ok((catalog, stats))
}
