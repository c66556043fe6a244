//! Parameter containers with canonical tensor names.
//!
//! Name scheme, in traversal order: `proj.w`, then per encoder layer i
//! `enc.{i}.attn.{q|k|v|o}`, `enc.{i}.norm1.{g|b}`, `enc.{i}.ffn.{w1|w2}`,
//! `enc.{i}.norm2.{g|b}`, the decoder mirror with `dec.{i}.xattn.*` and
//! `norm3`, and finally `head.w`, `head.b`. Checkpoints and the optimizer
//! state both rely on this order.

use std::collections::HashMap;

use super::ModelConfig;
use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;
use crate::rng::Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct AttentionParams {
    pub q: DenseMatrix,
    pub k: DenseMatrix,
    pub v: DenseMatrix,
    pub o: DenseMatrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FfnParams {
    pub w1: DenseMatrix,
    pub w2: DenseMatrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormParams {
    pub gain: DenseMatrix,
    pub bias: DenseMatrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncoderLayerParams {
    pub attn: AttentionParams,
    pub norm1: NormParams,
    pub ffn: FfnParams,
    pub norm2: NormParams,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecoderLayerParams {
    pub attn: AttentionParams,
    pub norm1: NormParams,
    pub xattn: AttentionParams,
    pub norm2: NormParams,
    pub ffn: FfnParams,
    pub norm3: NormParams,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeadParams {
    /// 1 x d_model.
    pub w: DenseMatrix,
    /// 1 x 1.
    pub b: DenseMatrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub cfg: ModelConfig,
    /// input_width x d_model, shared by encoder and decoder.
    pub proj: DenseMatrix,
    pub enc: Vec<EncoderLayerParams>,
    pub dec: Vec<DecoderLayerParams>,
    pub head: HeadParams,
}

impl PartialEq for ModelConfig {
    fn eq(&self, other: &Self) -> bool {
        self.num_layers == other.num_layers
            && self.num_heads == other.num_heads
            && self.d_model == other.d_model
            && self.ffn_multiplier == other.ffn_multiplier
            && self.dropout == other.dropout
            && self.input_width == other.input_width
            && self.lpe_sign_flip == other.lpe_sign_flip
    }
}

impl ModelParams {
    /// Fresh parameters: weights uniform in +-1/sqrt(fan_in), norm gains 1,
    /// every bias 0.
    pub fn init(cfg: &ModelConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let d = cfg.d_model;
        let hidden = d * cfg.ffn_multiplier;
        let mut rng = Rng::child(seed, "model.init");
        let mut weight = |rows: usize, cols: usize, rng: &mut Rng| {
            let bound = 1.0 / (rows as f64).sqrt();
            let data = (0..rows * cols)
                .map(|_| rng.range_f64(-bound, bound))
                .collect();
            DenseMatrix::from_vec(rows, cols, data).unwrap()
        };
        let mut attn = |rng: &mut Rng| AttentionParams {
            q: weight(d, d, rng),
            k: weight(d, d, rng),
            v: weight(d, d, rng),
            o: weight(d, d, rng),
        };
        let norm = |_rng: &mut Rng| NormParams {
            gain: DenseMatrix::from_vec(1, d, vec![1.0; d]).unwrap(),
            bias: DenseMatrix::zeros(1, d),
        };

        let proj = weight(cfg.input_width, d, &mut rng);
        let enc = (0..cfg.num_layers)
            .map(|_| EncoderLayerParams {
                attn: attn(&mut rng),
                norm1: norm(&mut rng),
                ffn: FfnParams {
                    w1: weight(d, hidden, &mut rng),
                    w2: weight(hidden, d, &mut rng),
                },
                norm2: norm(&mut rng),
            })
            .collect();
        let dec = (0..cfg.num_layers)
            .map(|_| DecoderLayerParams {
                attn: attn(&mut rng),
                norm1: norm(&mut rng),
                xattn: attn(&mut rng),
                norm2: norm(&mut rng),
                ffn: FfnParams {
                    w1: weight(d, hidden, &mut rng),
                    w2: weight(hidden, d, &mut rng),
                },
                norm3: norm(&mut rng),
            })
            .collect();
        // the head contracts over d_model, so that is its fan-in
        let bound = 1.0 / (d as f64).sqrt();
        let head = HeadParams {
            w: DenseMatrix::from_vec(1, d, (0..d).map(|_| rng.range_f64(-bound, bound)).collect())
                .unwrap(),
            b: DenseMatrix::zeros(1, 1),
        };

        Ok(ModelParams {
            cfg: cfg.clone(),
            proj,
            enc,
            dec,
            head,
        })
    }

    /// (name, tensor) pairs in canonical order.
    pub fn named(&self) -> Vec<(String, &DenseMatrix)> {
        let mut out = Vec::new();
        out.push(("proj.w".to_string(), &self.proj));
        for (i, l) in self.enc.iter().enumerate() {
            out.push((format!("enc.{i}.attn.q"), &l.attn.q));
            out.push((format!("enc.{i}.attn.k"), &l.attn.k));
            out.push((format!("enc.{i}.attn.v"), &l.attn.v));
            out.push((format!("enc.{i}.attn.o"), &l.attn.o));
            out.push((format!("enc.{i}.norm1.g"), &l.norm1.gain));
            out.push((format!("enc.{i}.norm1.b"), &l.norm1.bias));
            out.push((format!("enc.{i}.ffn.w1"), &l.ffn.w1));
            out.push((format!("enc.{i}.ffn.w2"), &l.ffn.w2));
            out.push((format!("enc.{i}.norm2.g"), &l.norm2.gain));
            out.push((format!("enc.{i}.norm2.b"), &l.norm2.bias));
        }
        for (i, l) in self.dec.iter().enumerate() {
            out.push((format!("dec.{i}.attn.q"), &l.attn.q));
            out.push((format!("dec.{i}.attn.k"), &l.attn.k));
            out.push((format!("dec.{i}.attn.v"), &l.attn.v));
            out.push((format!("dec.{i}.attn.o"), &l.attn.o));
            out.push((format!("dec.{i}.norm1.g"), &l.norm1.gain));
            out.push((format!("dec.{i}.norm1.b"), &l.norm1.bias));
            out.push((format!("dec.{i}.xattn.q"), &l.xattn.q));
            out.push((format!("dec.{i}.xattn.k"), &l.xattn.k));
            out.push((format!("dec.{i}.xattn.v"), &l.xattn.v));
            out.push((format!("dec.{i}.xattn.o"), &l.xattn.o));
            out.push((format!("dec.{i}.norm2.g"), &l.norm2.gain));
            out.push((format!("dec.{i}.norm2.b"), &l.norm2.bias));
            out.push((format!("dec.{i}.ffn.w1"), &l.ffn.w1));
            out.push((format!("dec.{i}.ffn.w2"), &l.ffn.w2));
            out.push((format!("dec.{i}.norm3.g"), &l.norm3.gain));
            out.push((format!("dec.{i}.norm3.b"), &l.norm3.bias));
        }
        out.push(("head.w".to_string(), &self.head.w));
        out.push(("head.b".to_string(), &self.head.b));
        out
    }

    /// Mutable tensors in the same canonical order as `named`.
    pub fn tensors_mut(&mut self) -> Vec<&mut DenseMatrix> {
        let mut out: Vec<&mut DenseMatrix> = Vec::new();
        out.push(&mut self.proj);
        for l in self.enc.iter_mut() {
            out.push(&mut l.attn.q);
            out.push(&mut l.attn.k);
            out.push(&mut l.attn.v);
            out.push(&mut l.attn.o);
            out.push(&mut l.norm1.gain);
            out.push(&mut l.norm1.bias);
            out.push(&mut l.ffn.w1);
            out.push(&mut l.ffn.w2);
            out.push(&mut l.norm2.gain);
            out.push(&mut l.norm2.bias);
        }
        for l in self.dec.iter_mut() {
            out.push(&mut l.attn.q);
            out.push(&mut l.attn.k);
            out.push(&mut l.attn.v);
            out.push(&mut l.attn.o);
            out.push(&mut l.norm1.gain);
            out.push(&mut l.norm1.bias);
            out.push(&mut l.xattn.q);
            out.push(&mut l.xattn.k);
            out.push(&mut l.xattn.v);
            out.push(&mut l.xattn.o);
            out.push(&mut l.norm2.gain);
            out.push(&mut l.norm2.bias);
            out.push(&mut l.ffn.w1);
            out.push(&mut l.ffn.w2);
            out.push(&mut l.norm3.gain);
            out.push(&mut l.norm3.bias);
        }
        out.push(&mut self.head.w);
        out.push(&mut self.head.b);
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.named().iter().map(|(_, t)| t.data().len()).sum()
    }

    /// Rebuild from named tensors, validating shapes against the config.
    pub fn from_named(cfg: &ModelConfig, mut tensors: HashMap<String, DenseMatrix>) -> Result<Self> {
        let mut params = ModelParams::init(cfg, 0)?;
        let expected: Vec<(String, (usize, usize))> = params
            .named()
            .iter()
            .map(|(n, t)| (n.clone(), (t.rows(), t.cols())))
            .collect();
        for (slot, (name, shape)) in params.tensors_mut().into_iter().zip(expected.iter()) {
            let tensor = tensors.remove(name).ok_or_else(|| {
                Error::Checkpoint(format!("missing tensor {name}"))
            })?;
            if (tensor.rows(), tensor.cols()) != *shape {
                return Err(Error::Checkpoint(format!(
                    "tensor {name} is {}x{}, expected {}x{}",
                    tensor.rows(),
                    tensor.cols(),
                    shape.0,
                    shape.1
                )));
            }
            *slot = tensor;
        }
        Ok(params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_deterministic_and_biases_zero() {
        let cfg = ModelConfig::default();
        let a = ModelParams::init(&cfg, 7).unwrap();
        let b = ModelParams::init(&cfg, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.head.b.data().iter().all(|&v| v == 0.0));
        for l in &a.enc {
            assert!(l.norm1.gain.data().iter().all(|&v| v == 1.0));
            assert!(l.norm1.bias.data().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn named_order_and_mut_order_agree() {
        let cfg = ModelConfig {
            num_layers: 2,
            ..Default::default()
        };
        let mut params = ModelParams::init(&cfg, 1).unwrap();
        let shapes: Vec<(usize, usize)> = params
            .named()
            .iter()
            .map(|(_, t)| (t.rows(), t.cols()))
            .collect();
        let mut_shapes: Vec<(usize, usize)> = params
            .tensors_mut()
            .iter()
            .map(|t| (t.rows(), t.cols()))
            .collect();
        assert_eq!(shapes, mut_shapes);
    }

    #[test]
    fn tensor_names_match_contract() {
        let cfg = ModelConfig {
            num_layers: 1,
            ..Default::default()
        };
        let params = ModelParams::init(&cfg, 1).unwrap();
        let names: Vec<String> = params.named().into_iter().map(|(n, _)| n).collect();
        assert!(names.contains(&"proj.w".to_string()));
        assert!(names.contains(&"enc.0.attn.q".to_string()));
        assert!(names.contains(&"enc.0.ffn.w2".to_string()));
        assert!(names.contains(&"dec.0.xattn.o".to_string()));
        assert!(names.contains(&"dec.0.norm3.g".to_string()));
        assert!(names.contains(&"head.b".to_string()));
        assert_eq!(names.len(), 1 + 10 + 16 + 2);
    }

    #[test]
    fn from_named_roundtrip() {
        let cfg = ModelConfig {
            num_layers: 2,
            d_model: 16,
            num_heads: 4,
            input_width: 10,
            ..Default::default()
        };
        let params = ModelParams::init(&cfg, 42).unwrap();
        let map: HashMap<String, DenseMatrix> = params
            .named()
            .into_iter()
            .map(|(n, t)| (n, t.clone()))
            .collect();
        let rebuilt = ModelParams::from_named(&cfg, map).unwrap();
        assert_eq!(params, rebuilt);
    }

    #[test]
    fn from_named_rejects_missing_or_misshaped() {
        let cfg = ModelConfig {
            num_layers: 1,
            ..Default::default()
        };
        let params = ModelParams::init(&cfg, 3).unwrap();
        let mut map: HashMap<String, DenseMatrix> = params
            .named()
            .into_iter()
            .map(|(n, t)| (n, t.clone()))
            .collect();
        map.remove("head.w");
        assert!(ModelParams::from_named(&cfg, map.clone()).is_err());
        map.insert("head.w".into(), DenseMatrix::zeros(2, 2));
        assert!(ModelParams::from_named(&cfg, map).is_err());
    }
}
