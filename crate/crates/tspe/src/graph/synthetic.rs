//! Synthetic benchmark generator with a planted pair signal.
//!
//! Positive pairs are built by sharing nodes: subgraphs are grouped into
//! clusters that share a common core of `round(f * module_size)` nodes, so
//! every positive pair's second member contains a copy of that fraction of
//! its partner's nodes, and the planted overlap of one pair cannot be
//! destroyed while planting another. Negative pairs span clusters and share
//! nodes only by chance. Edges fall with probability `p_in` inside each
//! subgraph's member set and `p_bg` elsewhere. Labels are the construction
//! ground truth.

use super::catalog::SubgraphCatalog;
use super::pairs::{PairDataset, ThresholdMode};
use super::SparseGraph;
use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Clone, Debug)]
pub struct SynthParams {
    pub num_nodes: usize,
    pub num_subgraphs: usize,
    pub module_size: usize,
    /// Fraction of a module copied into its positive partner.
    pub overlap_fraction: f64,
    /// Edge probability inside a subgraph's member set.
    pub p_in: f64,
    /// Background edge probability.
    pub p_bg: f64,
    pub num_pairs: usize,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            num_nodes: 500,
            num_subgraphs: 30,
            module_size: 15,
            overlap_fraction: 0.6,
            p_in: 0.3,
            p_bg: 0.01,
            num_pairs: 120,
            seed: 0,
        }
    }
}

pub fn generate_synthetic(
    params: &SynthParams,
) -> Result<(SparseGraph, SubgraphCatalog, PairDataset)> {
    validate(params)?;
    let n = params.num_nodes;
    let k = params.num_subgraphs;
    let ms = params.module_size;
    let core_size = (params.overlap_fraction * ms as f64).round() as usize;
    let pos_target = params.num_pairs / 2;
    let neg_target = params.num_pairs - pos_target;

    let mut rng = Rng::child(params.seed, "synth");

    // Cluster size: the smallest m whose intra-cluster pairs cover the
    // positive quota.
    let cluster_size = if pos_target == 0 {
        1
    } else {
        (2..=k)
            .find(|&m| (k / m) * (m * (m - 1) / 2) >= pos_target)
            .ok_or_else(|| {
                Error::Infeasible(format!(
                    "cannot plant {pos_target} positive pairs among {k} subgraphs"
                ))
            })?
    };
    let num_clusters = k / cluster_size;
    let cluster_of = |j: usize| -> Option<usize> {
        let c = j / cluster_size;
        (c < num_clusters).then_some(c)
    };

    // Memberships: per-cluster shared core plus private nodes.
    let mut members: Vec<Vec<usize>> = Vec::with_capacity(k);
    let mut cores: Vec<Vec<usize>> = Vec::with_capacity(num_clusters);
    for _ in 0..num_clusters {
        cores.push(rng.sample_indices(n, core_size));
    }
    for j in 0..k {
        let core: &[usize] = match cluster_of(j) {
            Some(c) => &cores[c],
            None => &[],
        };
        let mut set = core.to_vec();
        while set.len() < ms {
            let cand = rng.below(n);
            if !set.contains(&cand) {
                set.push(cand);
            }
        }
        members.push(set);
    }

    // Pair plan.
    let mut positive_pool: Vec<(usize, usize)> = Vec::new();
    let mut negative_pool: Vec<(usize, usize)> = Vec::new();
    for a in 0..k {
        for b in (a + 1)..k {
            let same = matches!((cluster_of(a), cluster_of(b)), (Some(x), Some(y)) if x == y);
            if same {
                positive_pool.push((a, b));
            } else {
                negative_pool.push((a, b));
            }
        }
    }
    if negative_pool.len() < neg_target {
        return Err(Error::Infeasible(format!(
            "only {} cross-cluster pairs available for {neg_target} negatives",
            negative_pool.len()
        )));
    }
    rng.shuffle(&mut positive_pool);
    rng.shuffle(&mut negative_pool);
    positive_pool.truncate(pos_target);
    negative_pool.truncate(neg_target);

    let mut triples: Vec<(usize, usize, f64)> = Vec::with_capacity(params.num_pairs);
    for (a, b) in positive_pool {
        triples.push((a, b, 2.0));
    }
    for (a, b) in negative_pool {
        triples.push((a, b, 0.0));
    }
    rng.shuffle(&mut triples);

    // Edges: intra-module Bernoulli(p_in) per subgraph, then background
    // Bernoulli(p_bg) over all node pairs via geometric skipping.
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for set in &members {
        for i in 0..set.len() {
            for j in (i + 1)..set.len() {
                if rng.bernoulli(params.p_in) {
                    let (u, v) = (set[i].min(set[j]), set[i].max(set[j]));
                    edges.push((u, v));
                }
            }
        }
    }
    sample_background_edges(n, params.p_bg, &mut rng, &mut edges);
    edges.sort_unstable();
    edges.dedup();

    let node_ids: Vec<String> = (0..n).map(|i| i.to_string()).collect();
    let graph = SparseGraph::from_edges(node_ids, &edges)?;
    let entries: Vec<(String, Vec<usize>)> = members
        .into_iter()
        .enumerate()
        .map(|(j, m)| (format!("s{j}"), m))
        .collect();
    let catalog = SubgraphCatalog::new(n, entries)?;
    let dataset = PairDataset::from_scored(triples, &catalog, ThresholdMode::Rr0)?;
    Ok((graph, catalog, dataset))
}

fn validate(p: &SynthParams) -> Result<()> {
    if p.module_size < 2 {
        return Err(Error::Infeasible("module_size must be at least 2".into()));
    }
    if p.module_size > p.num_nodes {
        return Err(Error::Infeasible(format!(
            "module_size {} exceeds num_nodes {}",
            p.module_size, p.num_nodes
        )));
    }
    if !(0.0..=1.0).contains(&p.overlap_fraction) {
        return Err(Error::Infeasible("overlap_fraction outside [0, 1]".into()));
    }
    if !(0.0..=1.0).contains(&p.p_in) || !(0.0..=1.0).contains(&p.p_bg) || p.p_bg > p.p_in {
        return Err(Error::Infeasible(
            "need 0 <= p_bg <= p_in <= 1 for a learnable signal".into(),
        ));
    }
    if p.num_subgraphs < 2 {
        return Err(Error::Infeasible("need at least 2 subgraphs".into()));
    }
    if p.num_pairs == 0 {
        return Err(Error::Infeasible("num_pairs must be positive".into()));
    }
    Ok(())
}

/// Emit each of the N(N-1)/2 node pairs with probability p, jumping between
/// hits with geometric gaps so sparse backgrounds cost O(edges).
fn sample_background_edges(n: usize, p: f64, rng: &mut Rng, edges: &mut Vec<(usize, usize)>) {
    if p <= 0.0 || n < 2 {
        return;
    }
    let total: u64 = (n as u64) * (n as u64 - 1) / 2;
    // row offsets: pairs (u, *) start at offset[u]
    let mut offsets = Vec::with_capacity(n);
    let mut acc = 0u64;
    for u in 0..n {
        offsets.push(acc);
        acc += (n - 1 - u) as u64;
    }
    let log_q = (1.0 - p).ln();
    let mut idx: i64 = -1;
    loop {
        let gap = if p >= 1.0 {
            0
        } else {
            ((1.0 - rng.uniform()).ln() / log_q).floor() as i64
        };
        idx += 1 + gap;
        if idx < 0 || idx as u64 >= total {
            break;
        }
        let i = idx as u64;
        let u = match offsets.binary_search(&i) {
            Ok(row) => row,
            Err(ins) => ins - 1,
        };
        let v = u + 1 + (i - offsets[u]) as usize;
        edges.push((u, v));
    }
}
