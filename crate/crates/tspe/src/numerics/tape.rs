//! Reverse-mode automatic differentiation over dense matrices.
//!
//! A `Tape` records matrix-valued operations in creation order, which is
//! already a topological order, so the backward pass is a single reverse
//! sweep visiting each node once. Gradients of parameters the loss never
//! touches are zero.
//!
//! Non-finite forward values are latched when they first appear; `backward`
//! reports the offending op instead of propagating NaN into the update.

use super::DenseMatrix;
use crate::error::{Error, Result};

/// Handle to a tape node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

enum Op {
    Constant,
    Param,
    MatMul(Var, Var),
    Transpose(Var),
    Add(Var, Var),
    MulElem(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    Sigmoid(Var),
    SliceCols { input: Var, start: usize },
    ConcatCols(Vec<Var>),
    SoftmaxMaskedCols { input: Var, mask: Vec<bool> },
    LayerNorm { input: Var, gain: Var, bias: Var, eps: f64 },
    SumAll(Var),
    BceMean { logits: Vec<Var>, labels: Vec<f64> },
}

struct Node {
    op: Op,
    value: DenseMatrix,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    first_non_finite: Option<(usize, &'static str)>,
}

/// Per-node gradients produced by a backward pass.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<DenseMatrix>>,
    shapes: Vec<(usize, usize)>,
}

impl Gradients {
    /// Gradient of the loss w.r.t. `v`; zeros when the loss never saw it.
    pub fn of(&self, v: Var) -> DenseMatrix {
        match &self.grads[v.0] {
            Some(g) => g.clone(),
            None => {
                let (r, c) = self.shapes[v.0];
                DenseMatrix::zeros(r, c)
            }
        }
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &DenseMatrix {
        &self.nodes[v.0].value
    }

    fn push(&mut self, op: Op, value: DenseMatrix, name: &'static str) -> Var {
        if self.first_non_finite.is_none() && !value.all_finite() {
            self.first_non_finite = Some((self.nodes.len(), name));
        }
        self.nodes.push(Node { op, value });
        Var(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, m: DenseMatrix) -> Var {
        self.push(Op::Constant, m, "constant")
    }

    pub fn param(&mut self, m: DenseMatrix) -> Var {
        self.push(Op::Param, m, "param")
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let v = self
            .value(a)
            .matmul(self.value(b))
            .expect("tape matmul shape mismatch");
        self.push(Op::MatMul(a, b), v, "matmul")
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let v = self.value(a).transpose();
        self.push(Op::Transpose(a), v, "transpose")
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self
            .value(a)
            .add(self.value(b))
            .expect("tape add shape mismatch");
        self.push(Op::Add(a, b), v, "add")
    }

    pub fn mul_elem(&mut self, a: Var, b: Var) -> Var {
        let (x, y) = (self.value(a), self.value(b));
        assert_eq!(
            (x.rows(), x.cols()),
            (y.rows(), y.cols()),
            "tape mul_elem shape mismatch"
        );
        let mut v = x.clone();
        for (o, w) in v.data_mut().iter_mut().zip(y.data().iter()) {
            *o *= *w;
        }
        self.push(Op::MulElem(a, b), v, "mul_elem")
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let mut v = self.value(a).clone();
        for o in v.data_mut() {
            *o *= c;
        }
        self.push(Op::Scale(a, c), v, "scale")
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let mut v = self.value(a).clone();
        for o in v.data_mut() {
            if *o < 0.0 {
                *o = 0.0;
            }
        }
        self.push(Op::Relu(a), v, "relu")
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let mut v = self.value(a).clone();
        for o in v.data_mut() {
            *o = sigmoid(*o);
        }
        self.push(Op::Sigmoid(a), v, "sigmoid")
    }

    /// Columns [start, start+len) of `a`.
    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Var {
        let x = self.value(a);
        assert!(start + len <= x.cols(), "tape slice_cols out of range");
        let mut v = DenseMatrix::zeros(x.rows(), len);
        for r in 0..x.rows() {
            v.row_mut(r).copy_from_slice(&x.row(r)[start..start + len]);
        }
        self.push(Op::SliceCols { input: a, start }, v, "slice_cols")
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty(), "tape concat_cols of nothing");
        let rows = self.value(parts[0]).rows();
        let total: usize = parts.iter().map(|p| self.value(*p).cols()).sum();
        let mut v = DenseMatrix::zeros(rows, total);
        let mut at = 0;
        for p in parts {
            let x = self.value(*p);
            assert_eq!(x.rows(), rows, "tape concat_cols row mismatch");
            for r in 0..rows {
                v.row_mut(r)[at..at + x.cols()].copy_from_slice(x.row(r));
            }
            at += x.cols();
        }
        self.push(Op::ConcatCols(parts.to_vec()), v, "concat_cols")
    }

    /// Row-wise softmax over the columns where `mask` is true; masked
    /// columns come out exactly zero. Every row shares the mask.
    pub fn softmax_masked_cols(&mut self, a: Var, mask: &[bool]) -> Var {
        let x = self.value(a);
        assert_eq!(mask.len(), x.cols(), "tape softmax mask width mismatch");
        assert!(mask.iter().any(|&m| m), "tape softmax with all-masked row");
        let mut v = DenseMatrix::zeros(x.rows(), x.cols());
        for r in 0..x.rows() {
            let row = x.row(r);
            let mut max = f64::NEG_INFINITY;
            for (j, &m) in mask.iter().enumerate() {
                if m && row[j] > max {
                    max = row[j];
                }
            }
            let mut denom = 0.0;
            for (j, &m) in mask.iter().enumerate() {
                if m {
                    denom += (row[j] - max).exp();
                }
            }
            let out = v.row_mut(r);
            for (j, &m) in mask.iter().enumerate() {
                if m {
                    out[j] = (row[j] - max).exp() / denom;
                }
            }
        }
        self.push(
            Op::SoftmaxMaskedCols {
                input: a,
                mask: mask.to_vec(),
            },
            v,
            "softmax_masked_cols",
        )
    }

    /// Per-row layer normalization with learned gain and bias (both 1 x d).
    pub fn layer_norm(&mut self, a: Var, gain: Var, bias: Var, eps: f64) -> Var {
        let x = self.value(a);
        let d = x.cols();
        assert_eq!(self.value(gain).cols(), d, "layer_norm gain width");
        assert_eq!(self.value(bias).cols(), d, "layer_norm bias width");
        let g = self.value(gain).row(0).to_vec();
        let b = self.value(bias).row(0).to_vec();
        let mut v = DenseMatrix::zeros(x.rows(), d);
        for r in 0..x.rows() {
            let row = x.row(r);
            let mean = row.iter().sum::<f64>() / d as f64;
            let var = row.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / d as f64;
            let istd = 1.0 / (var + eps).sqrt();
            let out = v.row_mut(r);
            for j in 0..d {
                out[j] = (row[j] - mean) * istd * g[j] + b[j];
            }
        }
        self.push(
            Op::LayerNorm {
                input: a,
                gain,
                bias,
                eps,
            },
            v,
            "layer_norm",
        )
    }

    pub fn sum_all(&mut self, a: Var) -> Var {
        let s: f64 = self.value(a).data().iter().sum();
        let v = DenseMatrix::from_vec(1, 1, vec![s]).unwrap();
        self.push(Op::SumAll(a), v, "sum_all")
    }

    /// Mean binary cross entropy over 1x1 logit nodes, in the stable logit
    /// form max(z,0) - z*y + ln(1 + exp(-|z|)).
    pub fn bce_with_logits_mean(&mut self, logits: &[Var], labels: &[f64]) -> Result<Var> {
        if logits.is_empty() || logits.len() != labels.len() {
            return Err(Error::Dimension(format!(
                "bce: {} logits vs {} labels",
                logits.len(),
                labels.len()
            )));
        }
        for &y in labels {
            if y != 0.0 && y != 1.0 {
                return Err(Error::Train(format!("bce label {y} outside {{0,1}}")));
            }
        }
        let mut total = 0.0;
        for (&lv, &y) in logits.iter().zip(labels.iter()) {
            let val = self.value(lv);
            assert_eq!((val.rows(), val.cols()), (1, 1), "bce logit must be 1x1");
            let z = val.get(0, 0);
            total += z.max(0.0) - z * y + (-z.abs()).exp().ln_1p();
        }
        let mean = total / logits.len() as f64;
        let v = DenseMatrix::from_vec(1, 1, vec![mean]).unwrap();
        Ok(self.push(
            Op::BceMean {
                logits: logits.to_vec(),
                labels: labels.to_vec(),
            },
            v,
            "bce_with_logits_mean",
        ))
    }

    /// Reverse pass from a scalar loss node.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if let Some((node, op)) = self.first_non_finite {
            return Err(Error::NonFinite { op, node });
        }
        let lv = self.value(loss);
        if (lv.rows(), lv.cols()) != (1, 1) {
            return Err(Error::Dimension(format!(
                "backward needs a scalar loss, got {}x{}",
                lv.rows(),
                lv.cols()
            )));
        }

        let mut grads: Vec<Option<DenseMatrix>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(DenseMatrix::from_vec(1, 1, vec![1.0]).unwrap());

        for idx in (0..=loss.0).rev() {
            let g = match grads[idx].take() {
                Some(g) => g,
                None => continue,
            };
            self.accumulate(idx, &g, &mut grads)?;
            grads[idx] = Some(g);
        }

        Ok(Gradients {
            grads,
            shapes: self
                .nodes
                .iter()
                .map(|n| (n.value.rows(), n.value.cols()))
                .collect(),
        })
    }

    fn accumulate(
        &self,
        idx: usize,
        g: &DenseMatrix,
        grads: &mut [Option<DenseMatrix>],
    ) -> Result<()> {
        let add_to = |grads: &mut [Option<DenseMatrix>], v: Var, inc: DenseMatrix| {
            match &mut grads[v.0] {
                Some(existing) => {
                    for (a, b) in existing.data_mut().iter_mut().zip(inc.data().iter()) {
                        *a += *b;
                    }
                }
                slot @ None => *slot = Some(inc),
            }
        };

        match &self.nodes[idx].op {
            Op::Constant | Op::Param => {}
            Op::MatMul(a, b) => {
                let da = g.matmul_nt(self.value(*b))?;
                let db = self.value(*a).matmul_tn(g)?;
                add_to(grads, *a, da);
                add_to(grads, *b, db);
            }
            Op::Transpose(a) => add_to(grads, *a, g.transpose()),
            Op::Add(a, b) => {
                add_to(grads, *a, g.clone());
                add_to(grads, *b, g.clone());
            }
            Op::MulElem(a, b) => {
                let mut da = g.clone();
                for (o, w) in da.data_mut().iter_mut().zip(self.value(*b).data()) {
                    *o *= *w;
                }
                let mut db = g.clone();
                for (o, w) in db.data_mut().iter_mut().zip(self.value(*a).data()) {
                    *o *= *w;
                }
                add_to(grads, *a, da);
                add_to(grads, *b, db);
            }
            Op::Scale(a, c) => {
                let mut da = g.clone();
                for o in da.data_mut() {
                    *o *= *c;
                }
                add_to(grads, *a, da);
            }
            Op::Relu(a) => {
                let mut da = g.clone();
                for (o, x) in da.data_mut().iter_mut().zip(self.value(*a).data()) {
                    if *x <= 0.0 {
                        *o = 0.0;
                    }
                }
                add_to(grads, *a, da);
            }
            Op::Sigmoid(a) => {
                let mut da = g.clone();
                for (o, y) in da.data_mut().iter_mut().zip(self.nodes[idx].value.data()) {
                    *o *= y * (1.0 - y);
                }
                add_to(grads, *a, da);
            }
            Op::SliceCols { input, start } => {
                let x = self.value(*input);
                let mut da = DenseMatrix::zeros(x.rows(), x.cols());
                for r in 0..g.rows() {
                    da.row_mut(r)[*start..*start + g.cols()].copy_from_slice(g.row(r));
                }
                add_to(grads, *input, da);
            }
            Op::ConcatCols(parts) => {
                let mut at = 0;
                for p in parts {
                    let w = self.value(*p).cols();
                    let mut dp = DenseMatrix::zeros(g.rows(), w);
                    for r in 0..g.rows() {
                        dp.row_mut(r).copy_from_slice(&g.row(r)[at..at + w]);
                    }
                    add_to(grads, *p, dp);
                    at += w;
                }
            }
            Op::SoftmaxMaskedCols { input, mask } => {
                let s = &self.nodes[idx].value;
                let mut da = DenseMatrix::zeros(s.rows(), s.cols());
                for r in 0..s.rows() {
                    let s_row = s.row(r);
                    let g_row = g.row(r);
                    let inner: f64 = mask
                        .iter()
                        .enumerate()
                        .filter(|(_, &m)| m)
                        .map(|(j, _)| g_row[j] * s_row[j])
                        .sum();
                    let out = da.row_mut(r);
                    for (j, &m) in mask.iter().enumerate() {
                        if m {
                            out[j] = s_row[j] * (g_row[j] - inner);
                        }
                    }
                }
                add_to(grads, *input, da);
            }
            Op::LayerNorm {
                input,
                gain,
                bias,
                eps,
            } => {
                let x = self.value(*input);
                let gv = self.value(*gain).row(0).to_vec();
                let d = x.cols();
                let mut dx = DenseMatrix::zeros(x.rows(), d);
                let mut dg = DenseMatrix::zeros(1, d);
                let mut db = DenseMatrix::zeros(1, d);
                for r in 0..x.rows() {
                    let row = x.row(r);
                    let g_row = g.row(r);
                    let mean = row.iter().sum::<f64>() / d as f64;
                    let var = row.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / d as f64;
                    let istd = 1.0 / (var + eps).sqrt();
                    let xhat: Vec<f64> = row.iter().map(|x| (x - mean) * istd).collect();

                    for j in 0..d {
                        dg.row_mut(0)[j] += g_row[j] * xhat[j];
                        db.row_mut(0)[j] += g_row[j];
                    }
                    let dxhat: Vec<f64> = (0..d).map(|j| g_row[j] * gv[j]).collect();
                    let m1 = dxhat.iter().sum::<f64>() / d as f64;
                    let m2 = dxhat
                        .iter()
                        .zip(xhat.iter())
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
                        / d as f64;
                    let out = dx.row_mut(r);
                    for j in 0..d {
                        out[j] = istd * (dxhat[j] - m1 - xhat[j] * m2);
                    }
                }
                add_to(grads, *input, dx);
                add_to(grads, *gain, dg);
                add_to(grads, *bias, db);
            }
            Op::SumAll(a) => {
                let x = self.value(*a);
                let s = g.get(0, 0);
                let mut da = DenseMatrix::zeros(x.rows(), x.cols());
                for o in da.data_mut() {
                    *o = s;
                }
                add_to(grads, *a, da);
            }
            Op::BceMean { logits, labels } => {
                let scale = g.get(0, 0) / logits.len() as f64;
                for (lv, &y) in logits.iter().zip(labels.iter()) {
                    let z = self.value(*lv).get(0, 0);
                    let dz = scale * (sigmoid(z) - y);
                    add_to(grads, *lv, DenseMatrix::from_vec(1, 1, vec![dz]).unwrap());
                }
            }
        }
        Ok(())
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn mat(rows: usize, cols: usize, rng: &mut Rng) -> DenseMatrix {
        let data = (0..rows * cols).map(|_| rng.range_f64(-1.0, 1.0)).collect();
        DenseMatrix::from_vec(rows, cols, data).unwrap()
    }

    /// Central-difference check of d(scalar f)/d(param entries).
    fn finite_diff_check<F>(build: F, param0: &DenseMatrix, tol: f64)
    where
        F: Fn(&mut Tape, Var) -> Var,
    {
        let mut tape = Tape::new();
        let p = tape.param(param0.clone());
        let loss = build(&mut tape, p);
        let grads = tape.backward(loss).unwrap();
        let analytic = grads.of(p);

        let h = 1e-6;
        for idx in 0..param0.data().len() {
            let eval = |delta: f64| {
                let mut shifted = param0.clone();
                shifted.data_mut()[idx] += delta;
                let mut t = Tape::new();
                let p = t.param(shifted);
                let l = build(&mut t, p);
                t.value(l).get(0, 0)
            };
            let numeric = (eval(h) - eval(-h)) / (2.0 * h);
            let a = analytic.data()[idx];
            let denom = a.abs().max(numeric.abs()).max(1.0);
            assert!(
                (a - numeric).abs() / denom < tol,
                "entry {idx}: analytic {a} vs numeric {numeric}"
            );
        }
    }

    #[test]
    fn sum_of_squares_gradient() {
        let mut tape = Tape::new();
        let p = tape.param(DenseMatrix::from_vec(1, 2, vec![1.0, 2.0]).unwrap());
        let sq = tape.mul_elem(p, p);
        let loss = tape.sum_all(sq);
        let grads = tape.backward(loss).unwrap();
        assert_eq!(grads.of(p).data(), &[2.0, 4.0]);
    }

    #[test]
    fn sigmoid_gradient_at_zero() {
        let mut tape = Tape::new();
        let z = tape.param(DenseMatrix::zeros(1, 1));
        let s = tape.sigmoid(z);
        let loss = tape.sum_all(s);
        let grads = tape.backward(loss).unwrap();
        assert!((grads.of(z).get(0, 0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn unused_parameter_gets_zero_gradient() {
        let mut tape = Tape::new();
        let used = tape.param(DenseMatrix::from_vec(1, 1, vec![3.0]).unwrap());
        let unused = tape.param(DenseMatrix::from_vec(2, 2, vec![1.0; 4]).unwrap());
        let loss = tape.sum_all(used);
        let grads = tape.backward(loss).unwrap();
        assert_eq!(grads.of(unused).data(), &[0.0; 4]);
    }

    #[test]
    fn backward_linearity_of_add() {
        let mut rng = Rng::new(1);
        let a0 = mat(3, 2, &mut rng);
        let b0 = mat(3, 2, &mut rng);

        let run = |with_b: bool| {
            let mut tape = Tape::new();
            let a = tape.param(a0.clone());
            let b = tape.param(b0.clone());
            let x = if with_b { tape.add(a, b) } else { a };
            let sq = tape.mul_elem(x, x);
            let loss = tape.sum_all(sq);
            let g = tape.backward(loss).unwrap();
            (g.of(a), g.of(b))
        };
        let (da_sum, db_sum) = run(true);
        assert_eq!(da_sum.data(), db_sum.data());
    }

    #[test]
    fn non_scalar_loss_rejected() {
        let mut tape = Tape::new();
        let p = tape.param(DenseMatrix::zeros(2, 2));
        assert!(tape.backward(p).is_err());
    }

    #[test]
    fn nan_forward_named() {
        let mut tape = Tape::new();
        let p = tape.param(DenseMatrix::from_vec(1, 1, vec![f64::INFINITY]).unwrap());
        let s = tape.sigmoid(p);
        let neg = tape.scale(p, -1.0);
        let t = tape.sigmoid(neg);
        let prod = tape.mul_elem(s, t);
        let zero = tape.constant(DenseMatrix::zeros(1, 1));
        let bad = tape.mul_elem(p, zero); // inf * 0 = NaN
        let both = tape.add(prod, bad);
        let loss = tape.sum_all(both);
        match tape.backward(loss) {
            Err(Error::NonFinite { op, .. }) => assert_eq!(op, "param"),
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn bce_values_and_stability() {
        let mut tape = Tape::new();
        let z0 = tape.param(DenseMatrix::zeros(1, 1));
        let loss = tape.bce_with_logits_mean(&[z0], &[1.0]).unwrap();
        assert!((tape.value(loss).get(0, 0) - 2.0f64.ln()).abs() < 1e-12);

        let mut tape = Tape::new();
        let zp = tape.param(DenseMatrix::from_vec(1, 1, vec![50.0]).unwrap());
        let l = tape.bce_with_logits_mean(&[zp], &[1.0]).unwrap();
        let v = tape.value(l).get(0, 0);
        assert!(v.is_finite() && v <= 1e-20, "z=50,y=1 gave {v}");

        let mut tape = Tape::new();
        let zn = tape.param(DenseMatrix::from_vec(1, 1, vec![-50.0]).unwrap());
        let l = tape.bce_with_logits_mean(&[zn], &[1.0]).unwrap();
        assert!((tape.value(l).get(0, 0) - 50.0).abs() < 1e-9);

        // batch {(0,1),(0,0)} -> mean is ln 2
        let mut tape = Tape::new();
        let a = tape.param(DenseMatrix::zeros(1, 1));
        let b = tape.param(DenseMatrix::zeros(1, 1));
        let l = tape.bce_with_logits_mean(&[a, b], &[1.0, 0.0]).unwrap();
        assert!((tape.value(l).get(0, 0) - 2.0f64.ln()).abs() < 1e-12);

        // huge magnitudes stay finite
        let mut tape = Tape::new();
        let z = tape.param(DenseMatrix::from_vec(1, 1, vec![1e4]).unwrap());
        let l = tape.bce_with_logits_mean(&[z], &[0.0]).unwrap();
        assert!(tape.value(l).get(0, 0).is_finite());
    }

    #[test]
    fn bce_rejects_bad_labels() {
        let mut tape = Tape::new();
        let z = tape.param(DenseMatrix::zeros(1, 1));
        assert!(tape.bce_with_logits_mean(&[z], &[0.5]).is_err());
    }

    #[test]
    fn finite_difference_matmul() {
        let mut rng = Rng::new(2);
        let other = mat(4, 3, &mut rng);
        let p0 = mat(2, 4, &mut rng);
        finite_diff_check(
            move |t, p| {
                let c = t.constant(other.clone());
                let y = t.matmul(p, c);
                let sq = t.mul_elem(y, y);
                t.sum_all(sq)
            },
            &p0,
            1e-5,
        );
    }

    #[test]
    fn finite_difference_softmax_masked() {
        let mut rng = Rng::new(3);
        let p0 = mat(3, 5, &mut rng);
        let mask = vec![true, true, false, true, true];
        finite_diff_check(
            move |t, p| {
                let s = t.softmax_masked_cols(p, &mask);
                let w = t.constant(DenseMatrix::from_vec(
                    3,
                    5,
                    (0..15).map(|i| (i as f64) * 0.1).collect(),
                ).unwrap());
                let prod = t.mul_elem(s, w);
                t.sum_all(prod)
            },
            &p0,
            1e-5,
        );
    }

    #[test]
    fn softmax_masked_columns_are_zero_and_rows_sum_to_one() {
        let mut rng = Rng::new(8);
        let mut tape = Tape::new();
        let p = tape.param(mat(4, 6, &mut rng));
        let mask = vec![true, false, true, true, false, true];
        let s = tape.softmax_masked_cols(p, &mask);
        let v = tape.value(s);
        for r in 0..4 {
            let mut sum = 0.0;
            for (j, &m) in mask.iter().enumerate() {
                if m {
                    sum += v.get(r, j);
                } else {
                    assert_eq!(v.get(r, j), 0.0);
                }
            }
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn finite_difference_layer_norm() {
        let mut rng = Rng::new(4);
        let p0 = mat(3, 4, &mut rng);
        let gain = mat(1, 4, &mut rng);
        let bias = mat(1, 4, &mut rng);
        let (g2, b2) = (gain.clone(), bias.clone());
        finite_diff_check(
            move |t, p| {
                let g = t.constant(g2.clone());
                let b = t.constant(b2.clone());
                let y = t.layer_norm(p, g, b, 1e-5);
                let sq = t.mul_elem(y, y);
                t.sum_all(sq)
            },
            &p0,
            1e-4,
        );
        // and w.r.t. gain/bias
        let x0 = mat(3, 4, &mut rng);
        let xc = x0.clone();
        finite_diff_check(
            move |t, p| {
                let x = t.constant(xc.clone());
                let b = t.constant(bias.clone());
                let y = t.layer_norm(x, p, b, 1e-5);
                let sq = t.mul_elem(y, y);
                t.sum_all(sq)
            },
            &gain.clone(),
            1e-4,
        );
    }

    #[test]
    fn finite_difference_relu_sigmoid_slice_concat() {
        let mut rng = Rng::new(6);
        let p0 = mat(3, 6, &mut rng);
        finite_diff_check(
            move |t, p| {
                let r = t.relu(p);
                let s = t.sigmoid(r);
                let left = t.slice_cols(s, 0, 3);
                let right = t.slice_cols(s, 3, 3);
                let swapped = t.concat_cols(&[right, left]);
                let tr = t.transpose(swapped);
                let sq = t.mul_elem(tr, tr);
                t.sum_all(sq)
            },
            &p0,
            1e-4,
        );
    }

    #[test]
    fn finite_difference_bce_chain() {
        let mut rng = Rng::new(7);
        let p0 = mat(1, 3, &mut rng);
        finite_diff_check(
            move |t, p| {
                let w = t.constant(DenseMatrix::from_vec(3, 1, vec![0.4, -0.2, 0.9]).unwrap());
                let z = t.matmul(p, w);
                t.bce_with_logits_mean(&[z], &[1.0]).unwrap()
            },
            &p0,
            1e-5,
        );
    }
}
