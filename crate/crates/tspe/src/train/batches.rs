//! Variable-length pair batching with zero padding.

use crate::error::{Error, Result};
use crate::graph::catalog::SubgraphCatalog;
use crate::graph::pairs::PairRecord;
use crate::model::PairBatch;
use crate::numerics::DenseMatrix;
use crate::rng::Rng;

/// Rows of the encoding matrix for one subgraph's members.
pub fn gather_tokens(encodings: &DenseMatrix, members: &[usize]) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(members.len(), encodings.cols());
    for (r, &node) in members.iter().enumerate() {
        out.row_mut(r).copy_from_slice(encodings.row(node));
    }
    out
}

fn padded_side(
    encodings: &DenseMatrix,
    members: &[usize],
    width: usize,
) -> (DenseMatrix, Vec<bool>) {
    let mut tokens = DenseMatrix::zeros(width, encodings.cols());
    let mut mask = vec![false; width];
    for (r, &node) in members.iter().enumerate() {
        tokens.row_mut(r).copy_from_slice(encodings.row(node));
        mask[r] = true;
    }
    (tokens, mask)
}

/// Shuffle the pairs (seeded), chunk them, and pad each side of a chunk to
/// its largest subgraph.
pub fn make_batches(
    pairs: &[PairRecord],
    encodings: &DenseMatrix,
    catalog: &SubgraphCatalog,
    batch_size: usize,
    seed: u64,
) -> Result<Vec<PairBatch>> {
    if batch_size == 0 {
        return Err(Error::Config("batch_size must be at least 1".into()));
    }
    for r in pairs {
        if catalog.members(r.a).is_empty() || catalog.members(r.b).is_empty() {
            return Err(Error::Degenerate("pair references an empty subgraph".into()));
        }
    }
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    Rng::child(seed, "batches").shuffle(&mut order);

    let mut batches = Vec::new();
    for chunk in order.chunks(batch_size) {
        let enc_width = chunk
            .iter()
            .map(|&i| catalog.members(pairs[i].a).len())
            .max()
            .unwrap();
        let dec_width = chunk
            .iter()
            .map(|&i| catalog.members(pairs[i].b).len())
            .max()
            .unwrap();
        let mut batch = PairBatch {
            enc_tokens: Vec::with_capacity(chunk.len()),
            enc_mask: Vec::with_capacity(chunk.len()),
            dec_tokens: Vec::with_capacity(chunk.len()),
            dec_mask: Vec::with_capacity(chunk.len()),
            labels: Vec::with_capacity(chunk.len()),
        };
        for &i in chunk {
            let r = &pairs[i];
            let (et, em) = padded_side(encodings, catalog.members(r.a), enc_width);
            let (dt, dm) = padded_side(encodings, catalog.members(r.b), dec_width);
            batch.enc_tokens.push(et);
            batch.enc_mask.push(em);
            batch.dec_tokens.push(dt);
            batch.dec_mask.push(dm);
            batch.labels.push(if r.label { 1.0 } else { 0.0 });
        }
        batches.push(batch);
    }
    Ok(batches)
}

/// One unshuffled batch per `batch_size` pairs, for evaluation.
pub fn eval_batches(
    pairs: &[PairRecord],
    encodings: &DenseMatrix,
    catalog: &SubgraphCatalog,
    batch_size: usize,
) -> Result<Vec<PairBatch>> {
    if batch_size == 0 {
        return Err(Error::Config("batch_size must be at least 1".into()));
    }
    let mut batches = Vec::new();
    for chunk in pairs.chunks(batch_size) {
        let enc_width = chunk.iter().map(|r| catalog.members(r.a).len()).max().unwrap();
        let dec_width = chunk.iter().map(|r| catalog.members(r.b).len()).max().unwrap();
        let mut batch = PairBatch {
            enc_tokens: Vec::with_capacity(chunk.len()),
            enc_mask: Vec::with_capacity(chunk.len()),
            dec_tokens: Vec::with_capacity(chunk.len()),
            dec_mask: Vec::with_capacity(chunk.len()),
            labels: Vec::with_capacity(chunk.len()),
        };
        for r in chunk {
            let (et, em) = padded_side(encodings, catalog.members(r.a), enc_width);
            let (dt, dm) = padded_side(encodings, catalog.members(r.b), dec_width);
            batch.enc_tokens.push(et);
            batch.enc_mask.push(em);
            batch.dec_tokens.push(dt);
            batch.dec_mask.push(dm);
            batch.labels.push(if r.label { 1.0 } else { 0.0 });
        }
        batches.push(batch);
    }
    Ok(batches)
}
