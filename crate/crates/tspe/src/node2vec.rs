//! Base node embeddings from biased second-order random walks and
//! skip-gram with negative sampling.
//!
//! The transition rule follows the original formulation: stepping from v
//! with previous node t, neighbor x gets unnormalized weight 1/p if x = t,
//! 1 if x is adjacent to t, and 1/q otherwise. At p = q = 1 every step is a
//! uniform first-order walk.

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::numerics::DenseMatrix;
use crate::rng::Rng;

#[derive(Clone, Debug)]
pub struct WalkConfig {
    /// Return parameter: weight 1/p for stepping back to the previous node.
    pub p: f64,
    /// In-out parameter: weight 1/q for leaving the previous neighborhood.
    pub q: f64,
    pub walk_length: usize,
    pub walks_per_node: usize,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            p: 1.0,
            q: 1.0,
            walk_length: 80,
            walks_per_node: 10,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SkipGramConfig {
    pub dim: usize,
    pub window: usize,
    pub negative_samples: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        SkipGramConfig {
            dim: 64,
            window: 2,
            negative_samples: 5,
            epochs: 5,
            learning_rate: 0.025,
            seed: 0,
        }
    }
}

/// Embedding matrix M, one row per graph node.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeEmbeddings {
    pub matrix: DenseMatrix,
}

/// `walks_per_node` walks from every node, start order shuffled per round.
/// Each walk draws from its own child stream, so results do not depend on
/// scheduling and merge in deterministic order.
pub fn generate_walks(graph: &SparseGraph, cfg: &WalkConfig) -> Result<Vec<Vec<usize>>> {
    if graph.num_nodes() == 0 {
        return Err(Error::Degenerate("walk generation on an empty graph".into()));
    }
    if cfg.p <= 0.0 || cfg.q <= 0.0 {
        return Err(Error::Config("walk parameters p and q must be positive".into()));
    }
    if cfg.walk_length < 2 || cfg.walks_per_node < 1 {
        return Err(Error::Config(
            "need walk_length >= 2 and walks_per_node >= 1".into(),
        ));
    }
    let n = graph.num_nodes();
    let mut walks = Vec::with_capacity(n * cfg.walks_per_node);
    for round in 0..cfg.walks_per_node {
        let mut order: Vec<usize> = (0..n).collect();
        Rng::child(cfg.seed, &format!("walks.order.{round}")).shuffle(&mut order);
        for &start in &order {
            let mut rng = Rng::child(cfg.seed, &format!("walks.{round}.{start}"));
            walks.push(single_walk(graph, cfg, start, &mut rng));
        }
    }
    Ok(walks)
}

fn single_walk(graph: &SparseGraph, cfg: &WalkConfig, start: usize, rng: &mut Rng) -> Vec<usize> {
    let mut walk = Vec::with_capacity(cfg.walk_length);
    walk.push(start);
    let uniform = cfg.p == 1.0 && cfg.q == 1.0;
    while walk.len() < cfg.walk_length {
        let cur = *walk.last().unwrap();
        let neighbors = graph.neighbors(cur);
        if neighbors.is_empty() {
            break; // dead end
        }
        let next = if uniform || walk.len() == 1 {
            neighbors[rng.below(neighbors.len())]
        } else {
            let prev = walk[walk.len() - 2];
            biased_step(graph, neighbors, prev, cfg, rng)
        };
        walk.push(next);
    }
    walk
}

fn biased_step(
    graph: &SparseGraph,
    neighbors: &[usize],
    prev: usize,
    cfg: &WalkConfig,
    rng: &mut Rng,
) -> usize {
    let mut weights = Vec::with_capacity(neighbors.len());
    let mut total = 0.0;
    for &x in neighbors {
        let w = if x == prev {
            1.0 / cfg.p
        } else if graph.has_edge(x, prev) {
            1.0
        } else {
            1.0 / cfg.q
        };
        total += w;
        weights.push(w);
    }
    let mut r = rng.uniform() * total;
    for (i, &w) in weights.iter().enumerate() {
        r -= w;
        if r < 0.0 {
            return neighbors[i];
        }
    }
    *neighbors.last().unwrap()
}

/// Skip-gram over a walk corpus. Negative targets come from the
/// unigram^0.75 distribution of corpus counts; training is single-threaded
/// so a fixed seed reproduces M bitwise.
pub fn train_skipgram(
    walks: &[Vec<usize>],
    cfg: &SkipGramConfig,
    num_nodes: usize,
) -> Result<NodeEmbeddings> {
    train_skipgram_traced(walks, cfg, num_nodes, |_, _, _| {})
}

/// As `train_skipgram`, calling the observer with (epoch index, mean epoch
/// loss, embeddings so far) after every epoch.
pub fn train_skipgram_traced<F>(
    walks: &[Vec<usize>],
    cfg: &SkipGramConfig,
    num_nodes: usize,
    mut on_epoch: F,
) -> Result<NodeEmbeddings>
where
    F: FnMut(usize, f64, &DenseMatrix),
{
    if walks.is_empty() {
        return Err(Error::Degenerate("skip-gram on an empty walk corpus".into()));
    }
    if cfg.dim < 1 || cfg.window < 1 {
        return Err(Error::Config("need dim >= 1 and window >= 1".into()));
    }
    let mut counts = vec![0u64; num_nodes];
    let mut total_tokens = 0u64;
    for walk in walks {
        for &node in walk {
            if node >= num_nodes {
                return Err(Error::Dimension(format!(
                    "walk node {node} out of range for {num_nodes} nodes"
                )));
            }
            counts[node] += 1;
            total_tokens += 1;
        }
    }

    // Noise distribution: count^0.75, sampled by binary search over the CDF.
    let noise_cdf: Vec<f64> = {
        let mut acc = 0.0;
        counts
            .iter()
            .map(|&c| {
                acc += (c as f64).powf(0.75);
                acc
            })
            .collect()
    };
    let noise_total = *noise_cdf.last().unwrap();
    if noise_total <= 0.0 {
        return Err(Error::Degenerate("walk corpus has no tokens".into()));
    }

    let dim = cfg.dim;
    let mut init_rng = Rng::child(cfg.seed, "skipgram.init");
    let bound = 0.5 / dim as f64;
    let mut embed = DenseMatrix::zeros(num_nodes, dim);
    for v in embed.data_mut() {
        *v = init_rng.range_f64(-bound, bound);
    }
    let mut context = DenseMatrix::zeros(num_nodes, dim);

    let mut train_rng = Rng::child(cfg.seed, "skipgram.train");
    let total_updates = (cfg.epochs as u64 * total_tokens).max(1);
    let mut processed = 0u64;

    for epoch in 0..cfg.epochs {
        let mut epoch_loss = 0.0f64;
        let mut epoch_pairs = 0u64;
        for walk in walks {
            for (i, &center) in walk.iter().enumerate() {
                let alpha = cfg.learning_rate
                    * (1.0 - processed as f64 / total_updates as f64).max(1e-4);
                processed += 1;
                let lo = i.saturating_sub(cfg.window);
                let hi = (i + cfg.window).min(walk.len() - 1);
                for j in lo..=hi {
                    if j == i {
                        continue;
                    }
                    let target = walk[j];
                    epoch_loss += sgns_update(
                        &mut embed,
                        &mut context,
                        center,
                        target,
                        cfg.negative_samples,
                        alpha,
                        &noise_cdf,
                        noise_total,
                        &mut train_rng,
                    );
                    epoch_pairs += 1;
                }
            }
        }
        let mean = if epoch_pairs > 0 {
            epoch_loss / epoch_pairs as f64
        } else {
            0.0
        };
        on_epoch(epoch, mean, &embed);
    }

    Ok(NodeEmbeddings { matrix: embed })
}

/// One positive + k negative logistic updates; returns the pair loss.
#[allow(clippy::too_many_arguments)]
fn sgns_update(
    embed: &mut DenseMatrix,
    context: &mut DenseMatrix,
    center: usize,
    positive: usize,
    negatives: usize,
    alpha: f64,
    noise_cdf: &[f64],
    noise_total: f64,
    rng: &mut Rng,
) -> f64 {
    let dim = embed.cols();
    let mut grad_center = vec![0.0f64; dim];
    let mut loss = 0.0;
    for sample in 0..=negatives {
        let (target, label) = if sample == 0 {
            (positive, 1.0)
        } else {
            let r = rng.uniform() * noise_total;
            let t = match noise_cdf.partition_point(|&c| c <= r) {
                i if i >= noise_cdf.len() => noise_cdf.len() - 1,
                i => i,
            };
            if t == positive {
                continue; // skip accidental hits, as usual for SGNS
            }
            (t, 0.0)
        };
        let z = crate::numerics::dot(embed.row(center), context.row(target));
        let score = crate::numerics::tape::sigmoid(z);
        let g = alpha * (label - score);
        for d in 0..dim {
            grad_center[d] += g * context.get(target, d);
        }
        let center_row: Vec<f64> = embed.row(center).to_vec();
        for (c, &e) in context.row_mut(target).iter_mut().zip(center_row.iter()) {
            *c += g * e;
        }
        // -log sigmoid(x) = softplus(-x), stable form
        let x = if label == 1.0 { z } else { -z };
        loss += (-x).max(0.0) + (-(-x).abs()).exp().ln_1p();
    }
    for (e, g) in embed.row_mut(center).iter_mut().zip(grad_center.iter()) {
        *e += *g;
    }
    loss
}

/// Walks plus skip-gram in one call.
pub fn embed_nodes(
    graph: &SparseGraph,
    walk_cfg: &WalkConfig,
    sg_cfg: &SkipGramConfig,
) -> Result<NodeEmbeddings> {
    let walks = generate_walks(graph, walk_cfg)?;
    train_skipgram(&walks, sg_cfg, graph.num_nodes())
}
