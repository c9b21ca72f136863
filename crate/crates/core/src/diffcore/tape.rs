use serde::{Deserialize, Serialize};

use super::tensor::{matmul_raw, pairwise_sum, Tensor};
use crate::error::{Error, Result};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn id(self) -> usize {
        self.0
    }
}

/// Pointwise nonlinearity used between dense layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
    Sigmoid,
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Transpose(Var),
    Add(Var, Var),
    AddBias(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Relu(Var),
    Tanh(Var),
    Sigmoid(Var),
    Scale(Var, f64),
    Sum(Var),
    Concat { a: Var, b: Var, axis: usize },
    Flip { a: Var, axis: usize },
    Slice { a: Var, axis: usize, start: usize },
    Reshape(Var),
    Permute { a: Var, axes: Vec<usize> },
    MeanSqNorm { pred: Var, gt: Var },
    MeanNorm { pred: Var, gt: Var },
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::MatMul(..) => "matmul",
            Op::Transpose(..) => "transpose",
            Op::Add(..) => "add",
            Op::AddBias(..) => "add_bias",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Relu(..) => "relu",
            Op::Tanh(..) => "tanh",
            Op::Sigmoid(..) => "sigmoid",
            Op::Scale(..) => "scale",
            Op::Sum(..) => "sum",
            Op::Concat { .. } => "concat_axis",
            Op::Flip { .. } => "flip_axis",
            Op::Slice { .. } => "slice_axis",
            Op::Reshape(..) => "reshape",
            Op::Permute { .. } => "permute",
            Op::MeanSqNorm { .. } => "reduce_mean_sq_norm",
            Op::MeanNorm { .. } => "reduce_mean_norm",
        }
    }

    fn inputs(&self) -> Vec<Var> {
        match *self {
            Op::Leaf => vec![],
            Op::MatMul(a, b)
            | Op::Add(a, b)
            | Op::AddBias(a, b)
            | Op::Sub(a, b)
            | Op::Mul(a, b)
            | Op::Concat { a, b, .. } => vec![a, b],
            Op::MeanSqNorm { pred, gt } | Op::MeanNorm { pred, gt } => vec![pred, gt],
            Op::Transpose(a)
            | Op::Relu(a)
            | Op::Tanh(a)
            | Op::Sigmoid(a)
            | Op::Scale(a, _)
            | Op::Sum(a)
            | Op::Flip { a, .. }
            | Op::Slice { a, .. }
            | Op::Reshape(a)
            | Op::Permute { a, .. } => vec![a],
        }
    }
}

struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Wengert list of tensor operations. Nodes are appended in evaluation order,
/// so every input index is smaller than the node that consumes it.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients from one [`Tape::backward`] call, indexed by node.
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    /// Gradient for `v`, or `None` if `v` did not influence the loss.
    pub fn take(&mut self, v: Var) -> Option<Tensor> {
        self.grads.get_mut(v.0).and_then(Option::take)
    }
}

fn same_shape(op: &'static str, a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::dim(
            op,
            format!("shapes {:?} and {:?} differ", a.shape(), b.shape()),
        ));
    }
    Ok(())
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        let requires_grad = op.inputs().iter().any(|i| self.nodes[i.0].requires_grad);
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// Trainable leaf.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad: true,
        });
        Var(self.nodes.len() - 1)
    }

    /// Leaf that never receives a gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad: false,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.rank() != 2 || tb.rank() != 2 || ta.shape()[1] != tb.shape()[0] {
            return Err(Error::dim(
                "matmul",
                format!("cannot multiply {:?} by {:?}", ta.shape(), tb.shape()),
            ));
        }
        let (m, k, n) = (ta.shape()[0], ta.shape()[1], tb.shape()[1]);
        let out = Tensor::new([m, n], matmul_raw(ta.data(), tb.data(), m, k, n))?;
        Ok(self.push(out, Op::MatMul(a, b)))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).transpose()?;
        Ok(self.push(out, Op::Transpose(a)))
    }

    fn zip_with(&mut self, op: Op, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        same_shape(op.name(), ta, tb)?;
        let data = ta.data().iter().zip(tb.data()).map(|(&x, &y)| f(x, y)).collect();
        let out = Tensor::new(ta.shape().to_vec(), data)?;
        Ok(self.push(out, op))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with(Op::Add(a, b), a, b, |x, y| x + y)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with(Op::Sub(a, b), a, b, |x, y| x - y)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with(Op::Mul(a, b), a, b, |x, y| x * y)
    }

    /// Adds a vector along the trailing axis (bias broadcast).
    pub fn add_bias(&mut self, a: Var, bias: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(bias));
        let n = tb.numel();
        if tb.rank() != 1 || ta.shape().last() != Some(&n) {
            return Err(Error::dim(
                "add_bias",
                format!("cannot broadcast {:?} onto {:?}", tb.shape(), ta.shape()),
            ));
        }
        let data = ta
            .data()
            .iter()
            .enumerate()
            .map(|(i, &x)| x + tb.data()[i % n])
            .collect();
        let out = Tensor::new(ta.shape().to_vec(), data)?;
        Ok(self.push(out, Op::AddBias(a, bias)))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|x| x.max(0.0));
        self.push(out, Op::Relu(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let out = self.value(a).map(f64::tanh);
        self.push(out, Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let out = self.value(a).map(sigmoid);
        self.push(out, Op::Sigmoid(a))
    }

    pub fn activate(&mut self, a: Var, act: Activation) -> Var {
        match act {
            Activation::Relu => self.relu(a),
            Activation::Tanh => self.tanh(a),
            Activation::Sigmoid => self.sigmoid(a),
        }
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        let out = self.value(a).map(|x| x * factor);
        self.push(out, Op::Scale(a, factor))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let out = Tensor::scalar(pairwise_sum(self.value(a).data()));
        self.push(out, Op::Sum(a))
    }

    pub fn concat(&mut self, a: Var, b: Var, axis: usize) -> Result<Var> {
        let out = self.value(a).concat(self.value(b), axis)?;
        Ok(self.push(out, Op::Concat { a, b, axis }))
    }

    pub fn flip(&mut self, a: Var, axis: usize) -> Result<Var> {
        let out = self.value(a).flip(axis)?;
        Ok(self.push(out, Op::Flip { a, axis }))
    }

    pub fn slice(&mut self, a: Var, axis: usize, start: usize, len: usize) -> Result<Var> {
        let out = self.value(a).slice(axis, start, len)?;
        Ok(self.push(out, Op::Slice { a, axis, start }))
    }

    pub fn reshape(&mut self, a: Var, shape: impl Into<Vec<usize>>) -> Result<Var> {
        let out = self.value(a).reshape(shape)?;
        Ok(self.push(out, Op::Reshape(a)))
    }

    pub fn permute(&mut self, a: Var, axes: &[usize]) -> Result<Var> {
        let out = self.value(a).permute(axes)?;
        Ok(self.push(
            out,
            Op::Permute {
                a,
                axes: axes.to_vec(),
            },
        ))
    }

    /// Row norms of `pred − gt`, where a row is the trailing axis.
    fn row_diffs(&self, op: &'static str, pred: Var, gt: Var) -> Result<(Vec<f64>, usize)> {
        let (tp, tg) = (self.value(pred), self.value(gt));
        same_shape(op, tp, tg)?;
        let width = *tp
            .shape()
            .last()
            .ok_or_else(|| Error::dim(op, "scalar operands have no coordinate axis"))?;
        let rows = tp.numel() / width.max(1);
        let sq: Vec<f64> = tp
            .data()
            .chunks(width)
            .zip(tg.data().chunks(width))
            .map(|(p, g)| p.iter().zip(g).map(|(a, b)| (a - b) * (a - b)).sum())
            .collect();
        Ok((sq, rows))
    }

    /// Mean over rows of the squared Euclidean norm of `pred − gt`; the
    /// trailing axis holds the coordinates.
    pub fn mean_sq_norm(&mut self, pred: Var, gt: Var) -> Result<Var> {
        let (sq, rows) = self.row_diffs("reduce_mean_sq_norm", pred, gt)?;
        let out = Tensor::scalar(pairwise_sum(&sq) / rows as f64);
        Ok(self.push(out, Op::MeanSqNorm { pred, gt }))
    }

    /// Mean over rows of the Euclidean norm of `pred − gt`.
    pub fn mean_norm(&mut self, pred: Var, gt: Var) -> Result<Var> {
        let (sq, rows) = self.row_diffs("reduce_mean_norm", pred, gt)?;
        let norms: Vec<f64> = sq.iter().map(|s| s.sqrt()).collect();
        let out = Tensor::scalar(pairwise_sum(&norms) / rows as f64);
        Ok(self.push(out, Op::MeanNorm { pred, gt }))
    }

    /// Reverse-mode sweep from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let lt = self.value(loss);
        if lt.numel() != 1 {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                lt.shape()
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(vec![1.0]);

        for id in (0..=loss.0).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &self.nodes[id];
            if node.requires_grad {
                self.propagate(node, &g, &mut grads)?;
            }
            grads[id] = Some(g);
        }

        Ok(Gradients {
            grads: grads
                .into_iter()
                .enumerate()
                .map(|(i, g)| {
                    let node = &self.nodes[i];
                    g.filter(|_| node.requires_grad)
                        .map(|g| Tensor::new(node.value.shape().to_vec(), g).expect("gradient shape"))
                })
                .collect(),
        })
    }

    fn propagate(&self, node: &Node, g: &[f64], grads: &mut [Option<Vec<f64>>]) -> Result<()> {
        let val = |v: Var| &self.nodes[v.0].value;
        let wants = |v: Var| self.nodes[v.0].requires_grad;
        let mut acc = |v: Var, contrib: Vec<f64>| {
            if !self.nodes[v.0].requires_grad {
                return;
            }
            match &mut grads[v.0] {
                Some(existing) => existing.iter_mut().zip(&contrib).for_each(|(e, c)| *e += c),
                slot @ None => *slot = Some(contrib),
            }
        };

        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (ta, tb) = (val(*a), val(*b));
                let (m, k, n) = (ta.shape()[0], ta.shape()[1], tb.shape()[1]);
                if wants(*a) {
                    let bt = tb.transpose()?;
                    acc(*a, matmul_raw(g, bt.data(), m, n, k));
                }
                if wants(*b) {
                    let at = ta.transpose()?;
                    acc(*b, matmul_raw(at.data(), g, k, m, n));
                }
            }
            Op::Transpose(a) => {
                let s = node.value.shape();
                let gt = Tensor::new([s[0], s[1]], g.to_vec())?.transpose()?;
                acc(*a, gt.into_data());
            }
            Op::Add(a, b) => {
                acc(*a, g.to_vec());
                acc(*b, g.to_vec());
            }
            Op::AddBias(a, b) => {
                acc(*a, g.to_vec());
                let n = val(*b).numel();
                let mut gb = vec![0.0; n];
                for (i, &x) in g.iter().enumerate() {
                    gb[i % n] += x;
                }
                acc(*b, gb);
            }
            Op::Sub(a, b) => {
                acc(*a, g.to_vec());
                acc(*b, g.iter().map(|x| -x).collect());
            }
            Op::Mul(a, b) => {
                let (ta, tb) = (val(*a), val(*b));
                acc(*a, g.iter().zip(tb.data()).map(|(x, y)| x * y).collect());
                acc(*b, g.iter().zip(ta.data()).map(|(x, y)| x * y).collect());
            }
            Op::Relu(a) => {
                let ta = val(*a);
                acc(
                    *a,
                    g.iter()
                        .zip(ta.data())
                        .map(|(x, &v)| if v > 0.0 { *x } else { 0.0 })
                        .collect(),
                );
            }
            Op::Tanh(a) => {
                acc(
                    *a,
                    g.iter()
                        .zip(node.value.data())
                        .map(|(x, y)| x * (1.0 - y * y))
                        .collect(),
                );
            }
            Op::Sigmoid(a) => {
                acc(
                    *a,
                    g.iter()
                        .zip(node.value.data())
                        .map(|(x, s)| x * s * (1.0 - s))
                        .collect(),
                );
            }
            Op::Scale(a, factor) => acc(*a, g.iter().map(|x| x * factor).collect()),
            Op::Sum(a) => acc(*a, vec![g[0]; val(*a).numel()]),
            Op::Concat { a, b, axis } => {
                let gt = Tensor::new(node.value.shape().to_vec(), g.to_vec())?;
                let na = val(*a).shape()[*axis];
                let nb = val(*b).shape()[*axis];
                acc(*a, gt.slice(*axis, 0, na)?.into_data());
                acc(*b, gt.slice(*axis, na, nb)?.into_data());
            }
            Op::Flip { a, axis } => {
                let gt = Tensor::new(node.value.shape().to_vec(), g.to_vec())?;
                acc(*a, gt.flip(*axis)?.into_data());
            }
            Op::Slice { a, axis, start } => {
                let src = Tensor::new(node.value.shape().to_vec(), g.to_vec())?;
                let mut full = Tensor::zeros(val(*a).shape().to_vec());
                full.add_into_slice(&src, *axis, *start);
                acc(*a, full.into_data());
            }
            Op::Reshape(a) => acc(*a, g.to_vec()),
            Op::Permute { a, axes } => {
                let mut inverse = vec![0; axes.len()];
                for (k, &ax) in axes.iter().enumerate() {
                    inverse[ax] = k;
                }
                let gt = Tensor::new(node.value.shape().to_vec(), g.to_vec())?;
                acc(*a, gt.permute(&inverse)?.into_data());
            }
            Op::MeanSqNorm { pred, gt } => {
                let (tp, tg) = (val(*pred), val(*gt));
                let width = *tp.shape().last().unwrap_or(&1);
                let rows = (tp.numel() / width.max(1)) as f64;
                let c = 2.0 * g[0] / rows;
                let d: Vec<f64> = tp.data().iter().zip(tg.data()).map(|(p, q)| c * (p - q)).collect();
                acc(*gt, d.iter().map(|x| -x).collect());
                acc(*pred, d);
            }
            Op::MeanNorm { pred, gt } => {
                let (tp, tg) = (val(*pred), val(*gt));
                let width = *tp.shape().last().unwrap_or(&1);
                let rows = (tp.numel() / width.max(1)) as f64;
                let mut d = vec![0.0; tp.numel()];
                for (r, (p, q)) in tp.data().chunks(width).zip(tg.data().chunks(width)).enumerate() {
                    let norm = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                    // subgradient 0 at coincident points
                    if norm > 0.0 {
                        for k in 0..width {
                            d[r * width + k] = g[0] * (p[k] - q[k]) / (norm * rows);
                        }
                    }
                }
                acc(*gt, d.iter().map(|x| -x).collect());
                acc(*pred, d);
            }
        }
        Ok(())
    }

    /// Name of the first node whose value is not finite, if any.
    pub fn first_non_finite(&self) -> Option<(usize, &'static str)> {
        self.nodes
            .iter()
            .enumerate()
            .find(|(_, n)| !n.value.is_finite())
            .map(|(i, n)| (i, n.op.name()))
    }
}
