//! Graph ingestion and the core graph types.
//!
//! Graphs are undirected, simple (no self-loops, no duplicate edges) and
//! immutable after construction. External string identifiers map to dense
//! indices 0..N-1 in first-appearance order, which freezes the ordering of
//! every downstream matrix.

pub mod catalog;
pub mod pairs;
pub mod synthetic;

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Undirected graph in CSR form over dense node indices.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseGraph {
    node_ids: Vec<String>,
    id_index: HashMap<String, usize>,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl SparseGraph {
    /// Build from external ids and dense-index edges. Edges are symmetrized
    /// and deduplicated; self-loops are rejected.
    pub fn from_edges(node_ids: Vec<String>, edges: &[(usize, usize)]) -> Result<Self> {
        let n = node_ids.len();
        let mut id_index = HashMap::with_capacity(n);
        for (i, id) in node_ids.iter().enumerate() {
            if id_index.insert(id.clone(), i).is_some() {
                return Err(Error::Config(format!("duplicate node id {id}")));
            }
        }
        let mut norm: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Dimension(format!(
                    "edge ({u},{v}) out of range for {n} nodes"
                )));
            }
            if u == v {
                return Err(Error::Config(format!("self-loop at node {u}")));
            }
            norm.push((u.min(v), u.max(v)));
        }
        norm.sort_unstable();
        norm.dedup();

        let mut degree = vec![0usize; n];
        for &(u, v) in &norm {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        for d in &degree {
            row_ptr.push(row_ptr.last().unwrap() + d);
        }
        let mut col_idx = vec![0usize; row_ptr[n]];
        let mut fill = row_ptr.clone();
        for &(u, v) in &norm {
            col_idx[fill[u]] = v;
            fill[u] += 1;
            col_idx[fill[v]] = u;
            fill[v] += 1;
        }
        // per-row neighbor lists sorted ascending
        for u in 0..n {
            col_idx[row_ptr[u]..row_ptr[u + 1]].sort_unstable();
        }
        Ok(SparseGraph {
            node_ids,
            id_index,
            row_ptr,
            col_idx,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.node_ids.len()
    }

    /// Undirected edge count.
    pub fn num_edges(&self) -> usize {
        self.col_idx.len() / 2
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[u]..self.row_ptr[u + 1]]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.row_ptr[u + 1] - self.row_ptr[u]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    pub fn external_id(&self, u: usize) -> &str {
        &self.node_ids[u]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.id_index.get(id).copied()
    }

    /// Component label per node, numbered in order of first appearance.
    pub fn connected_components(&self) -> (Vec<usize>, usize) {
        let n = self.num_nodes();
        let mut label = vec![usize::MAX; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = count;
            stack.push(start);
            while let Some(u) = stack.pop() {
                for &v in self.neighbors(u) {
                    if label[v] == usize::MAX {
                        label[v] = count;
                        stack.push(v);
                    }
                }
            }
            count += 1;
        }
        (label, count)
    }

    /// Induced subgraph on the largest component plus the old-to-new index
    /// remap. Ties go to the component containing the smallest original
    /// index. Retained nodes keep their relative order.
    pub fn largest_connected_component(&self) -> (SparseGraph, Vec<Option<usize>>) {
        let n = self.num_nodes();
        if n == 0 {
            return (self.clone(), Vec::new());
        }
        let (label, count) = self.connected_components();
        let mut sizes = vec![0usize; count];
        for &l in &label {
            sizes[l] += 1;
        }
        // components are numbered by first appearance, so the first maximum
        // is the one containing the smallest original index
        let mut winner = 0;
        for c in 1..count {
            if sizes[c] > sizes[winner] {
                winner = c;
            }
        }
        let mut remap = vec![None; n];
        let mut kept_ids = Vec::with_capacity(sizes[winner]);
        let mut next = 0;
        for (u, &l) in label.iter().enumerate() {
            if l == winner {
                remap[u] = Some(next);
                kept_ids.push(self.node_ids[u].clone());
                next += 1;
            }
        }
        let mut edges = Vec::new();
        for u in 0..n {
            if let Some(nu) = remap[u] {
                for &v in self.neighbors(u) {
                    if v > u {
                        if let Some(nv) = remap[v] {
                            edges.push((nu, nv));
                        }
                    }
                }
            }
        }
        let graph = SparseGraph::from_edges(kept_ids, &edges).expect("induced subgraph is valid");
        (graph, remap)
    }

    /// Edge-list text in the on-disk format: one `u<TAB>v` line per edge,
    /// ordered by dense index. Isolated nodes have no representation in
    /// this format.
    pub fn to_edge_list_string(&self) -> String {
        let mut out = String::new();
        for u in 0..self.num_nodes() {
            for &v in self.neighbors(u) {
                if v > u {
                    out.push_str(&format!("{}\t{}\n", self.node_ids[u], self.node_ids[v]));
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EdgeListStats {
    pub self_loops_dropped: usize,
    pub duplicate_edges_dropped: usize,
}

/// Parse a tab/whitespace-separated edge list. `#` lines are comments; both
/// `\n` and `\r\n` endings are accepted.
pub fn parse_edge_list(text: &str) -> Result<(SparseGraph, EdgeListStats)> {
    let mut node_ids: Vec<String> = Vec::new();
    let mut id_index: HashMap<String, usize> = HashMap::new();
    let intern = |id: &str, node_ids: &mut Vec<String>, id_index: &mut HashMap<String, usize>| {
        if let Some(&i) = id_index.get(id) {
            i
        } else {
            let i = node_ids.len();
            node_ids.push(id.to_string());
            id_index.insert(id.to_string(), i);
            i
        }
    };

    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut stats = EdgeListStats::default();
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
        let u = intern(fields[0], &mut node_ids, &mut id_index);
        let v = intern(fields[1], &mut node_ids, &mut id_index);
        if u == v {
            stats.self_loops_dropped += 1;
            continue;
        }
        edges.push((u.min(v), u.max(v)));
    }
    if !saw_data {
        return Err(Error::parse(0, "empty edge list"));
    }
    let before = edges.len();
    edges.sort_unstable();
    edges.dedup();
    stats.duplicate_edges_dropped = before - edges.len();

    let graph = SparseGraph::from_edges(node_ids, &edges)?;
    Ok((graph, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_basic_graph() {
        let (g, stats) = parse_edge_list("1\t2\n2\t3\n").unwrap();
        assert_eq!(g.num_nodes(), 3);
        assert_eq!(g.num_edges(), 2);
        assert_eq!(stats, EdgeListStats::default());
        assert_eq!(g.external_id(0), "1");
        assert_eq!(g.index_of("3"), Some(2));
    }

    #[test]
    fn parse_dedups_reversed_edges() {
        let (g, _) = parse_edge_list("1\t2\n2\t1\n").unwrap();
        assert_eq!(g.num_nodes(), 2);
        assert_eq!(g.num_edges(), 1);
    }

    #[test]
    fn parse_drops_self_loops() {
        let (g, stats) = parse_edge_list("1\t1\n1\t2\n").unwrap();
        assert_eq!(g.num_nodes(), 2);
        assert_eq!(g.num_edges(), 1);
        assert_eq!(stats.self_loops_dropped, 1);
    }

    #[test]
    fn parse_rejects_malformed_line() {
        let err = parse_edge_list("1\t2\n1 2 3\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_empty_input() {
        assert!(parse_edge_list("").is_err());
        assert!(parse_edge_list("# only a comment\n").is_err());
    }

    #[test]
    fn parse_accepts_crlf_and_comments() {
        let (g, _) = parse_edge_list("# header\r\n1\t2\r\n2\t3\r\n").unwrap();
        assert_eq!(g.num_nodes(), 3);
        assert_eq!(g.num_edges(), 2);
    }

    #[test]
    fn adjacency_is_symmetric() {
        let (g, _) = parse_edge_list("a\tb\nb\tc\nc\ta\nc\td\n").unwrap();
        for u in 0..g.num_nodes() {
            for &v in g.neighbors(u) {
                assert!(g.has_edge(v, u), "asymmetric edge {u}-{v}");
            }
        }
    }

    #[test]
    fn serialize_roundtrip_identical() {
        let (g, _) = parse_edge_list("5\t9\n9\t2\n2\t5\n7\t2\n").unwrap();
        let text = g.to_edge_list_string();
        let (g2, _) = parse_edge_list(&text).unwrap();
        assert_eq!(g, g2);
    }

    #[test]
    fn lcc_keeps_largest_component() {
        // two triangles plus a 4-cycle; the 4-cycle wins
        let text = "a\tb\nb\tc\nc\ta\nd\te\ne\tf\nf\td\nw\tx\nx\ty\ny\tz\nz\tw\n";
        let (g, _) = parse_edge_list(text).unwrap();
        let (lcc, remap) = g.largest_connected_component();
        assert_eq!(lcc.num_nodes(), 4);
        assert_eq!(lcc.num_edges(), 4);
        let kept: Vec<&str> = (0..4).map(|i| lcc.external_id(i)).collect();
        assert_eq!(kept, vec!["w", "x", "y", "z"]);
        assert_eq!(remap.iter().filter(|r| r.is_some()).count(), 4);
    }

    #[test]
    fn lcc_identity_on_connected_graph() {
        let (g, _) = parse_edge_list("1\t2\n2\t3\n").unwrap();
        let (lcc, remap) = g.largest_connected_component();
        assert_eq!(lcc, g);
        for (i, r) in remap.iter().enumerate() {
            assert_eq!(*r, Some(i));
        }
    }

    #[test]
    fn lcc_tie_goes_to_smallest_original_index() {
        // two P2 components of equal size; the one containing node 0 wins
        let (g, _) = parse_edge_list("a\tb\nc\td\n").unwrap();
        let (lcc, _) = g.largest_connected_component();
        assert_eq!(lcc.external_id(0), "a");
    }

    #[test]
    fn lcc_idempotent() {
        let text = "a\tb\nb\tc\nd\te\n";
        let (g, _) = parse_edge_list(text).unwrap();
        let (l1, _) = g.largest_connected_component();
        let (l2, _) = l1.largest_connected_component();
        assert_eq!(l1, l2);
    }

    #[test]
    fn component_count() {
        let (g, _) = parse_edge_list("a\tb\nc\td\ne\tf\n").unwrap();
        let (_, count) = g.connected_components();
        assert_eq!(count, 3);
    }
}
