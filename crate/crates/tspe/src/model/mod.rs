//! Encoder-decoder transformer over subgraph node sets with a column-norm
//! scoring head.
//!
//! Both sides use unmasked multi-head attention (padding aside): the two
//! node sets have no order, so there is nothing causal to mask. The decoder
//! output, transposed so columns index the decoder-side nodes, is scored by
//! a softmax over squared column norms, aggregated into a single vector,
//! and mapped to one logit. The sigmoid lives inside the loss; inference
//! applies it explicitly.

mod params;

pub use params::{
    AttentionParams, DecoderLayerParams, EncoderLayerParams, FfnParams, HeadParams, ModelParams,
    NormParams,
};

use crate::error::{Error, Result};
use crate::numerics::tape::{sigmoid, Gradients, Tape, Var};
use crate::numerics::DenseMatrix;
use crate::rng::Rng;

const LN_EPS: f64 = 1e-5;

#[derive(Clone, Debug)]
pub struct ModelConfig {
    pub num_layers: usize,
    pub num_heads: usize,
    pub d_model: usize,
    pub ffn_multiplier: usize,
    pub dropout: f64,
    /// Width of the composed input rows (model projects this to d_model).
    pub input_width: usize,
    /// Re-randomize eigenvector signs every training epoch.
    pub lpe_sign_flip: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            num_layers: 3,
            num_heads: 8,
            d_model: 64,
            ffn_multiplier: 2,
            dropout: 0.2,
            input_width: 72,
            lpe_sign_flip: false,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_layers == 0 || self.num_heads == 0 || self.d_model == 0 {
            return Err(Error::Config("model dimensions must be positive".into()));
        }
        if self.d_model % self.num_heads != 0 {
            return Err(Error::Config(format!(
                "d_model {} not divisible by {} heads",
                self.d_model, self.num_heads
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config("dropout must lie in [0, 1)".into()));
        }
        if self.input_width == 0 || self.ffn_multiplier == 0 {
            return Err(Error::Config("input_width and ffn_multiplier must be positive".into()));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.num_heads
    }
}

/// A batch of padded pairs. Encoder tokens come from the first subgraph of
/// each pair, decoder tokens from the second. Padded positions are zero
/// rows with a false mask and stay masked in attention and scoring.
#[derive(Clone, Debug)]
pub struct PairBatch {
    pub enc_tokens: Vec<DenseMatrix>,
    pub enc_mask: Vec<Vec<bool>>,
    pub dec_tokens: Vec<DenseMatrix>,
    pub dec_mask: Vec<Vec<bool>>,
    pub labels: Vec<f64>,
}

impl PairBatch {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn validate(&self, input_width: usize) -> Result<()> {
        let b = self.labels.len();
        if self.enc_tokens.len() != b
            || self.dec_tokens.len() != b
            || self.enc_mask.len() != b
            || self.dec_mask.len() != b
        {
            return Err(Error::Dimension("ragged pair batch".into()));
        }
        for i in 0..b {
            for (tokens, mask, side) in [
                (&self.enc_tokens[i], &self.enc_mask[i], "encoder"),
                (&self.dec_tokens[i], &self.dec_mask[i], "decoder"),
            ] {
                if tokens.cols() != input_width {
                    return Err(Error::Dimension(format!(
                        "{side} token width {} != input width {input_width}",
                        tokens.cols()
                    )));
                }
                if tokens.rows() != mask.len() {
                    return Err(Error::Dimension(format!(
                        "{side} mask length {} != {} rows",
                        mask.len(),
                        tokens.rows()
                    )));
                }
                if !mask.iter().any(|&m| m) {
                    return Err(Error::Degenerate(format!("all-padded {side} input")));
                }
                for (r, &keep) in mask.iter().enumerate() {
                    if !keep && tokens.row(r).iter().any(|&v| v != 0.0) {
                        return Err(Error::Dimension(format!(
                            "{side} padded row {r} is not a zero vector"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Seeded dropout state for one training step. Masks are drawn in forward
/// order, so a fixed seed reproduces the step exactly.
pub struct DropoutCtx {
    pub p: f64,
    pub rng: Rng,
}

impl DropoutCtx {
    pub fn new(p: f64, rng: Rng) -> Self {
        DropoutCtx { p, rng }
    }

    fn apply(&mut self, tape: &mut Tape, x: Var) -> Var {
        if self.p == 0.0 {
            return x;
        }
        let (rows, cols) = {
            let v = tape.value(x);
            (v.rows(), v.cols())
        };
        let keep = 1.0 - self.p;
        let mut mask = DenseMatrix::zeros(rows, cols);
        for v in mask.data_mut() {
            if self.rng.uniform() >= self.p {
                *v = 1.0 / keep;
            }
        }
        let m = tape.constant(mask);
        tape.mul_elem(x, m)
    }
}

fn maybe_dropout(tape: &mut Tape, x: Var, ctx: &mut Option<&mut DropoutCtx>) -> Var {
    match ctx {
        Some(c) => c.apply(tape, x),
        None => x,
    }
}

/// Model parameters staged onto a tape as differentiable nodes.
pub struct StagedModel {
    pub cfg: ModelConfig,
    pub proj: Var,
    pub enc: Vec<StagedEncoderLayer>,
    pub dec: Vec<StagedDecoderLayer>,
    pub head_w: Var,
    pub head_b: Var,
    /// Every parameter var in canonical tensor order.
    pub ordered: Vec<Var>,
}

pub struct StagedAttention {
    pub q: Var,
    pub k: Var,
    pub v: Var,
    pub o: Var,
}

pub struct StagedNorm {
    pub gain: Var,
    pub bias: Var,
}

pub struct StagedEncoderLayer {
    pub attn: StagedAttention,
    pub norm1: StagedNorm,
    pub ffn_w1: Var,
    pub ffn_w2: Var,
    pub norm2: StagedNorm,
}

pub struct StagedDecoderLayer {
    pub attn: StagedAttention,
    pub norm1: StagedNorm,
    pub xattn: StagedAttention,
    pub norm2: StagedNorm,
    pub ffn_w1: Var,
    pub ffn_w2: Var,
    pub norm3: StagedNorm,
}

/// Put every parameter on the tape, in canonical tensor order.
pub fn stage(tape: &mut Tape, params: &ModelParams) -> StagedModel {
    let mut ordered = Vec::new();
    let mut put = |tape: &mut Tape, m: &DenseMatrix, ordered: &mut Vec<Var>| {
        let v = tape.param(m.clone());
        ordered.push(v);
        v
    };
    let mut attn = |tape: &mut Tape, a: &AttentionParams, ordered: &mut Vec<Var>| StagedAttention {
        q: put(tape, &a.q, ordered),
        k: put(tape, &a.k, ordered),
        v: put(tape, &a.v, ordered),
        o: put(tape, &a.o, ordered),
    };
    let mut norm = |tape: &mut Tape, n: &NormParams, ordered: &mut Vec<Var>| StagedNorm {
        gain: put(tape, &n.gain, ordered),
        bias: put(tape, &n.bias, ordered),
    };

    let proj = put(tape, &params.proj, &mut ordered);
    let enc = params
        .enc
        .iter()
        .map(|layer| StagedEncoderLayer {
            attn: attn(tape, &layer.attn, &mut ordered),
            norm1: norm(tape, &layer.norm1, &mut ordered),
            ffn_w1: put(tape, &layer.ffn.w1, &mut ordered),
            ffn_w2: put(tape, &layer.ffn.w2, &mut ordered),
            norm2: norm(tape, &layer.norm2, &mut ordered),
        })
        .collect();
    let dec = params
        .dec
        .iter()
        .map(|layer| StagedDecoderLayer {
            attn: attn(tape, &layer.attn, &mut ordered),
            norm1: norm(tape, &layer.norm1, &mut ordered),
            xattn: attn(tape, &layer.xattn, &mut ordered),
            norm2: norm(tape, &layer.norm2, &mut ordered),
            ffn_w1: put(tape, &layer.ffn.w1, &mut ordered),
            ffn_w2: put(tape, &layer.ffn.w2, &mut ordered),
            norm3: norm(tape, &layer.norm3, &mut ordered),
        })
        .collect();
    let head_w = put(tape, &params.head.w, &mut ordered);
    let head_b = put(tape, &params.head.b, &mut ordered);

    StagedModel {
        cfg: params.cfg.clone(),
        proj,
        enc,
        dec,
        head_w,
        head_b,
        ordered,
    }
}

impl StagedModel {
    /// Gradients for every parameter, aligned with `ModelParams::named`.
    pub fn gradients_in_order(&self, grads: &Gradients) -> Vec<DenseMatrix> {
        self.ordered.iter().map(|v| grads.of(*v)).collect()
    }
}

/// Multi-head attention: queries from `q_in`, keys/values from `kv_in`,
/// with masked key positions excluded from every softmax row.
fn multi_head_attention(
    tape: &mut Tape,
    cfg: &ModelConfig,
    p: &StagedAttention,
    q_in: Var,
    kv_in: Var,
    key_mask: &[bool],
    dropout: &mut Option<&mut DropoutCtx>,
) -> Var {
    let dh = cfg.head_dim();
    let scale = 1.0 / (dh as f64).sqrt();
    let q = tape.matmul(q_in, p.q);
    let k = tape.matmul(kv_in, p.k);
    let v = tape.matmul(kv_in, p.v);
    let mut heads = Vec::with_capacity(cfg.num_heads);
    for h in 0..cfg.num_heads {
        let q_h = tape.slice_cols(q, h * dh, dh);
        let k_h = tape.slice_cols(k, h * dh, dh);
        let v_h = tape.slice_cols(v, h * dh, dh);
        let k_t = tape.transpose(k_h);
        let raw = tape.matmul(q_h, k_t);
        let scaled = tape.scale(raw, scale);
        let probs = tape.softmax_masked_cols(scaled, key_mask);
        let probs = maybe_dropout(tape, probs, dropout);
        heads.push(tape.matmul(probs, v_h));
    }
    let ctx = tape.concat_cols(&heads);
    tape.matmul(ctx, p.o)
}

fn feed_forward(
    tape: &mut Tape,
    w1: Var,
    w2: Var,
    x: Var,
    dropout: &mut Option<&mut DropoutCtx>,
) -> Var {
    let hidden = tape.matmul(x, w1);
    let act = tape.relu(hidden);
    let act = maybe_dropout(tape, act, dropout);
    tape.matmul(act, w2)
}

fn add_norm(tape: &mut Tape, x: Var, sub: Var, norm: &StagedNorm) -> Var {
    let summed = tape.add(x, sub);
    tape.layer_norm(summed, norm.gain, norm.bias, LN_EPS)
}

/// Encoder stack over projected tokens. Errors if the mask is all padding.
pub fn encode(
    tape: &mut Tape,
    model: &StagedModel,
    tokens: &DenseMatrix,
    mask: &[bool],
    dropout: &mut Option<&mut DropoutCtx>,
) -> Result<Var> {
    check_side(tokens, mask, &model.cfg, "encoder")?;
    let input = tape.constant(tokens.clone());
    let mut h = tape.matmul(input, model.proj);
    for layer in &model.enc {
        let attn = multi_head_attention(tape, &model.cfg, &layer.attn, h, h, mask, dropout);
        h = add_norm(tape, h, attn, &layer.norm1);
        let ffn = feed_forward(tape, layer.ffn_w1, layer.ffn_w2, h, dropout);
        h = add_norm(tape, h, ffn, &layer.norm2);
    }
    Ok(h)
}

/// Decoder stack: self-attention over its own tokens, cross-attention into
/// the encoder memory, then feed-forward, each with add&norm. The output
/// keeps the decoder input's shape (n_B x d_model).
pub fn decode(
    tape: &mut Tape,
    model: &StagedModel,
    tokens: &DenseMatrix,
    mask: &[bool],
    memory: Var,
    memory_mask: &[bool],
    dropout: &mut Option<&mut DropoutCtx>,
) -> Result<Var> {
    check_side(tokens, mask, &model.cfg, "decoder")?;
    let input = tape.constant(tokens.clone());
    let mut h = tape.matmul(input, model.proj);
    for layer in &model.dec {
        let attn = multi_head_attention(tape, &model.cfg, &layer.attn, h, h, mask, dropout);
        h = add_norm(tape, h, attn, &layer.norm1);
        let cross =
            multi_head_attention(tape, &model.cfg, &layer.xattn, h, memory, memory_mask, dropout);
        h = add_norm(tape, h, cross, &layer.norm2);
        let ffn = feed_forward(tape, layer.ffn_w1, layer.ffn_w2, h, dropout);
        h = add_norm(tape, h, ffn, &layer.norm3);
    }
    Ok(h)
}

fn check_side(tokens: &DenseMatrix, mask: &[bool], cfg: &ModelConfig, side: &str) -> Result<()> {
    if tokens.cols() != cfg.input_width {
        return Err(Error::Dimension(format!(
            "{side} token width {} != input width {}",
            tokens.cols(),
            cfg.input_width
        )));
    }
    if tokens.rows() != mask.len() {
        return Err(Error::Dimension(format!(
            "{side} mask length {} != {} rows",
            mask.len(),
            tokens.rows()
        )));
    }
    if !mask.iter().any(|&m| m) {
        return Err(Error::Degenerate(format!("all-padded {side} input")));
    }
    Ok(())
}

/// Scoring vector over the interaction matrix's columns: softmax of squared
/// column L2 norms, masked columns exactly zero.
pub fn score_columns(tape: &mut Tape, x: Var, mask: &[bool]) -> Result<Var> {
    let (m, n) = {
        let v = tape.value(x);
        (v.rows(), v.cols())
    };
    if mask.len() != n {
        return Err(Error::Dimension(format!(
            "mask length {} != {n} columns",
            mask.len()
        )));
    }
    if !mask.iter().any(|&m| m) {
        return Err(Error::Degenerate("no unmasked columns to score".into()));
    }
    let sq = tape.mul_elem(x, x);
    let ones = tape.constant(DenseMatrix::from_vec(1, m, vec![1.0; m]).unwrap());
    let norms = tape.matmul(ones, sq);
    Ok(tape.softmax_masked_cols(norms, mask))
}

/// Weighted column sum: y' = sum_j s_j X[:, j].
pub fn aggregate(tape: &mut Tape, x: Var, s: Var) -> Result<Var> {
    let (xc, sr, sc) = {
        let xv = tape.value(x);
        let sv = tape.value(s);
        (xv.cols(), sv.rows(), sv.cols())
    };
    if sr != 1 || sc != xc {
        return Err(Error::Dimension(format!(
            "scoring vector {sr}x{sc} does not match {xc} columns"
        )));
    }
    let s_t = tape.transpose(s);
    Ok(tape.matmul(x, s_t))
}

/// Raw logit W y' + b. The sigmoid is folded into the loss during training
/// and applied explicitly only at inference.
pub fn predict_logit(tape: &mut Tape, y_prime: Var, head_w: Var, head_b: Var) -> Var {
    let wy = tape.matmul(head_w, y_prime);
    tape.add(wy, head_b)
}

/// Full forward pass for one pair; returns the 1x1 logit node.
pub fn forward_pair(
    tape: &mut Tape,
    model: &StagedModel,
    enc_tokens: &DenseMatrix,
    enc_mask: &[bool],
    dec_tokens: &DenseMatrix,
    dec_mask: &[bool],
    dropout: &mut Option<&mut DropoutCtx>,
) -> Result<Var> {
    let memory = encode(tape, model, enc_tokens, enc_mask, dropout)?;
    let out = decode(tape, model, dec_tokens, dec_mask, memory, enc_mask, dropout)?;
    let x = tape.transpose(out);
    let s = score_columns(tape, x, dec_mask)?;
    let y_prime = aggregate(tape, x, s)?;
    Ok(predict_logit(tape, y_prime, model.head_w, model.head_b))
}

/// Forward the whole batch; returns (mean BCE loss, per-pair logits).
pub fn forward_batch(
    tape: &mut Tape,
    model: &StagedModel,
    batch: &PairBatch,
    dropout: &mut Option<&mut DropoutCtx>,
) -> Result<(Var, Vec<Var>)> {
    batch.validate(model.cfg.input_width)?;
    let mut logits = Vec::with_capacity(batch.len());
    for i in 0..batch.len() {
        logits.push(forward_pair(
            tape,
            model,
            &batch.enc_tokens[i],
            &batch.enc_mask[i],
            &batch.dec_tokens[i],
            &batch.dec_mask[i],
            dropout,
        )?);
    }
    let loss = tape.bce_with_logits_mean(&logits, &batch.labels)?;
    Ok((loss, logits))
}

/// Inference: raw logits for each pair in the batch, dropout off.
pub fn predict_logits(params: &ModelParams, batch: &PairBatch) -> Result<Vec<f64>> {
    let mut tape = Tape::new();
    let staged = stage(&mut tape, params);
    let (_, logits) = forward_batch(&mut tape, &staged, batch, &mut None)?;
    Ok(logits.iter().map(|&l| tape.value(l).get(0, 0)).collect())
}

/// Inference: probabilities for each pair in the batch, dropout off.
pub fn predict_probabilities(params: &ModelParams, batch: &PairBatch) -> Result<Vec<f64>> {
    Ok(predict_logits(params, batch)?
        .into_iter()
        .map(sigmoid)
        .collect())
}
