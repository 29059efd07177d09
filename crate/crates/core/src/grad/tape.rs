use super::{Gradients, ParamId, ParamSet, Tensor};
use crate::error::{Error, Result};

/// Natural log is clamped here so a zero probability yields a finite loss.
pub const LOG_FLOOR: f64 = -745.0;

/// Handle to a value on a tape: either a borrowed parameter or a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    Param(ParamId),
    Node(usize),
}

#[derive(Debug)]
enum Op {
    Constant,
    Embedding {
        table: Var,
        indices: Vec<usize>,
    },
    Conv1d {
        input: Var,
        filters: Var,
        bias: Var,
    },
    ConvTranspose1d {
        input: Var,
        filters: Var,
        bias: Var,
    },
    Relu {
        input: Var,
    },
    MaxPool {
        input: Var,
        argmax: Vec<usize>,
    },
    Upsample {
        input: Var,
        factor: usize,
    },
    Concat {
        inputs: Vec<Var>,
    },
    Dense {
        input: Var,
        weight: Var,
        bias: Var,
    },
    Dot {
        a: Var,
        b: Var,
    },
    SoftmaxCrossEntropy {
        logits: Var,
        target: Vec<f64>,
        probs: Vec<f64>,
    },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
}

/// Record of one forward computation over a borrowed parameter set.
///
/// Nodes are appended in evaluation order, so every node's inputs precede
/// it and a reverse sweep is a valid topological traversal.
#[derive(Debug)]
pub struct Tape<'p> {
    params: &'p ParamSet,
    nodes: Vec<Node>,
}

fn shape_err(tensor: &str, expected: Vec<usize>, found: &[usize]) -> Error {
    Error::Shape {
        tensor: tensor.into(),
        expected,
        found: found.to_vec(),
    }
}

fn dims2(t: &Tensor, name: &str) -> Result<(usize, usize)> {
    match *t.shape() {
        [a, b] => Ok((a, b)),
        _ => Err(Error::Shape {
            tensor: name.into(),
            expected: vec![0, 0],
            found: t.shape().to_vec(),
        }),
    }
}

fn check_odd_kernel(h: usize) -> Result<usize> {
    if h % 2 == 0 {
        return Err(Error::Config(format!("kernel size must be odd, got {h}")));
    }
    Ok((h - 1) / 2)
}

/// Max-subtracted softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&y| (y - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = logits.iter().map(|&y| (y - max).exp()).sum::<f64>().ln();
    logits.iter().map(|&y| (y - max - lse).max(LOG_FLOOR)).collect()
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p ParamSet) -> Self {
        Tape {
            params,
            nodes: Vec::new(),
        }
    }

    pub fn params(&self) -> &'p ParamSet {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn param(&self, id: ParamId) -> Var {
        Var::Param(id)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        match v {
            Var::Param(id) => self.params.get(id),
            Var::Node(i) => &self.nodes[i].value,
        }
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var::Node(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Constant)
    }

    /// Gathers rows of a `V x D` table.
    pub fn embedding(&mut self, table: Var, indices: &[usize]) -> Result<Var> {
        let t = self.value(table);
        let (v, d) = dims2(t, "embedding table")?;
        if indices.is_empty() {
            return Err(Error::Config("embedding lookup with no indices".into()));
        }
        let mut out = Vec::with_capacity(indices.len() * d);
        for &i in indices {
            if i >= v {
                return Err(Error::OutOfRange {
                    what: "embedding table".into(),
                    index: i,
                    size: v,
                });
            }
            out.extend_from_slice(t.row(i));
        }
        let value = Tensor::new(vec![indices.len(), d], out)?;
        Ok(self.push(
            value,
            Op::Embedding {
                table,
                indices: indices.to_vec(),
            },
        ))
    }

    /// Same-padded 1-D convolution over the token axis:
    /// `out[m,f] = bias[f] + sum_{j,d} filters[f,j,d] * input[m+j-(h-1)/2, d]`.
    pub fn conv1d_same(&mut self, input: Var, filters: Var, bias: Var) -> Result<Var> {
        let x = self.value(input);
        let w = self.value(filters);
        let b = self.value(bias);
        let (m_len, depth) = dims2(x, "conv input")?;
        let [nf, h, wd] = w.shape()[..] else {
            return Err(shape_err("conv filters", vec![0, 0, depth], w.shape()));
        };
        if wd != depth {
            return Err(shape_err("conv filters", vec![nf, h, depth], w.shape()));
        }
        if b.shape() != [nf] {
            return Err(shape_err("conv bias", vec![nf], b.shape()));
        }
        let half = check_odd_kernel(h)?;
        let (xd, wdata, bdata) = (x.data(), w.data(), b.data());
        let mut out = vec![0.0; m_len * nf];
        for m in 0..m_len {
            for f in 0..nf {
                let mut acc = bdata[f];
                for j in 0..h {
                    let Some(src) = (m + j).checked_sub(half).filter(|&s| s < m_len) else {
                        continue;
                    };
                    let wrow = &wdata[(f * h + j) * depth..(f * h + j + 1) * depth];
                    let xrow = &xd[src * depth..(src + 1) * depth];
                    acc += wrow.iter().zip(xrow).map(|(a, b)| a * b).sum::<f64>();
                }
                out[m * nf + f] = acc;
            }
        }
        let value = Tensor::new(vec![m_len, nf], out)?;
        Ok(self.push(
            value,
            Op::Conv1d {
                input,
                filters,
                bias,
            },
        ))
    }

    /// Transpose of [`Tape::conv1d_same`] with its own filter bank: maps an
    /// `M x F` feature map back to `M x D`:
    /// `out[m,d] = bias[d] + sum_{f,j} filters[f,j,d] * input[m-j+(h-1)/2, f]`.
    pub fn conv1d_transpose_same(&mut self, input: Var, filters: Var, bias: Var) -> Result<Var> {
        let x = self.value(input);
        let w = self.value(filters);
        let b = self.value(bias);
        let (m_len, nf) = dims2(x, "deconv input")?;
        let [wf, h, depth] = w.shape()[..] else {
            return Err(shape_err("deconv filters", vec![nf, 0, 0], w.shape()));
        };
        if wf != nf {
            return Err(shape_err("deconv filters", vec![nf, h, depth], w.shape()));
        }
        if b.shape() != [depth] {
            return Err(shape_err("deconv bias", vec![depth], b.shape()));
        }
        let half = check_odd_kernel(h)?;
        let (xd, wdata, bdata) = (x.data(), w.data(), b.data());
        let mut out = vec![0.0; m_len * depth];
        for m in 0..m_len {
            let orow = &mut out[m * depth..(m + 1) * depth];
            orow.copy_from_slice(bdata);
            for j in 0..h {
                let Some(src) = (m + half).checked_sub(j).filter(|&s| s < m_len) else {
                    continue;
                };
                for f in 0..nf {
                    let s = xd[src * nf + f];
                    if s == 0.0 {
                        continue;
                    }
                    let wrow = &wdata[(f * h + j) * depth..(f * h + j + 1) * depth];
                    for (o, &wv) in orow.iter_mut().zip(wrow) {
                        *o += s * wv;
                    }
                }
            }
        }
        let value = Tensor::new(vec![m_len, depth], out)?;
        Ok(self.push(
            value,
            Op::ConvTranspose1d {
                input,
                filters,
                bias,
            },
        ))
    }

    pub fn relu(&mut self, input: Var) -> Var {
        let value = self.value(input).map(|x| x.max(0.0));
        self.push(value, Op::Relu { input })
    }

    /// Non-overlapping max pooling over windows of `p` token positions.
    /// Ties go to the lowest position.
    pub fn maxpool1d(&mut self, input: Var, p: usize) -> Result<Var> {
        let x = self.value(input);
        let (m_len, nf) = dims2(x, "pool input")?;
        if p == 0 || m_len % p != 0 {
            return Err(Error::Config(format!(
                "pool size {p} does not divide sequence length {m_len}"
            )));
        }
        let rows = m_len / p;
        let mut out = vec![0.0; rows * nf];
        let mut argmax = vec![0; rows * nf];
        for r in 0..rows {
            for f in 0..nf {
                let mut best = r * p;
                for m in r * p + 1..(r + 1) * p {
                    if x.data()[m * nf + f] > x.data()[best * nf + f] {
                        best = m;
                    }
                }
                out[r * nf + f] = x.data()[best * nf + f];
                argmax[r * nf + f] = best;
            }
        }
        let value = Tensor::new(vec![rows, nf], out)?;
        Ok(self.push(value, Op::MaxPool { input, argmax }))
    }

    /// Nearest-neighbour upsampling: each row repeated `p` times.
    pub fn upsample(&mut self, input: Var, p: usize) -> Result<Var> {
        let x = self.value(input);
        let (rows, nf) = dims2(x, "upsample input")?;
        if p == 0 {
            return Err(Error::Config("upsampling factor must be positive".into()));
        }
        let mut out = Vec::with_capacity(rows * p * nf);
        for r in 0..rows {
            for _ in 0..p {
                out.extend_from_slice(x.row(r));
            }
        }
        let value = Tensor::new(vec![rows * p, nf], out)?;
        Ok(self.push(value, Op::Upsample { input, factor: p }))
    }

    /// Flattens and concatenates the inputs in order.
    pub fn concat(&mut self, inputs: &[Var]) -> Result<Var> {
        if inputs.is_empty() {
            return Err(Error::Config("concat of nothing".into()));
        }
        let mut out = Vec::new();
        for &v in inputs {
            out.extend_from_slice(self.value(v).data());
        }
        Ok(self.push(
            Tensor::from_vec(out),
            Op::Concat {
                inputs: inputs.to_vec(),
            },
        ))
    }

    /// `weight (Q x P) * input (P) + bias (Q)`.
    pub fn dense(&mut self, input: Var, weight: Var, bias: Var) -> Result<Var> {
        let x = self.value(input);
        let w = self.value(weight);
        let b = self.value(bias);
        let (q, p) = dims2(w, "dense weight")?;
        if x.len() != p {
            return Err(shape_err("dense input", vec![p], x.shape()));
        }
        if b.shape() != [q] {
            return Err(shape_err("dense bias", vec![q], b.shape()));
        }
        let out: Vec<f64> = (0..q)
            .map(|i| {
                b.data()[i]
                    + w.row(i)
                        .iter()
                        .zip(x.data())
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
            })
            .collect();
        Ok(self.push(
            Tensor::from_vec(out),
            Op::Dense {
                input,
                weight,
                bias,
            },
        ))
    }

    /// Scalar inner product of two equally sized tensors.
    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        if x.len() != y.len() {
            return Err(shape_err("dot operand", x.shape().to_vec(), y.shape()));
        }
        let s = x.data().iter().zip(y.data()).map(|(a, b)| a * b).sum();
        Ok(self.push(Tensor::scalar(s), Op::Dot { a, b }))
    }

    /// Fused softmax + multinomial cross-entropy `-sum_k z_k log p_k`.
    pub fn softmax_cross_entropy(&mut self, logits: Var, target: &[f64]) -> Result<Var> {
        let y = self.value(logits);
        if y.len() != target.len() {
            return Err(shape_err("cross-entropy target", vec![y.len()], &[target.len()]));
        }
        let logp = log_softmax(y.data());
        let loss = -target.iter().zip(&logp).map(|(z, lp)| z * lp).sum::<f64>();
        let probs = softmax(y.data());
        Ok(self.push(
            Tensor::scalar(loss),
            Op::SoftmaxCrossEntropy {
                logits,
                target: target.to_vec(),
                probs,
            },
        ))
    }

    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let mut grads = Gradients::zeros_like(self.params);
        self.backward_into(loss, &mut grads, 1.0)?;
        Ok(grads)
    }

    /// Accumulates `scale * d loss / d param` into `grads`.
    pub fn backward_into(&self, loss: Var, grads: &mut Gradients, scale: f64) -> Result<()> {
        if self.value(loss).len() != 1 {
            return Err(Error::Invalid(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.value(loss).shape()
            )));
        }
        if grads.len() != self.params.len() {
            return Err(Error::Invalid("gradient buffer does not match parameter set".into()));
        }
        let mut sink = Sink {
            tape: self,
            params: grads,
            nodes: vec![None; self.nodes.len()],
        };
        let start = match loss {
            Var::Param(id) => {
                sink.params.get_mut(id).data_mut()[0] += scale;
                return Ok(());
            }
            Var::Node(i) => i,
        };
        sink.nodes[start] = Some(vec![scale]);
        for i in (0..=start).rev() {
            let Some(g) = sink.nodes[i].take() else {
                continue;
            };
            self.backward_node(i, &g, &mut sink);
        }
        Ok(())
    }

    fn backward_node(&self, i: usize, g: &[f64], sink: &mut Sink<'_, '_>) {
        let node = &self.nodes[i];
        match &node.op {
            Op::Constant => {}
            Op::Embedding { table, indices } => {
                let d = self.value(*table).shape()[1];
                let gt = sink.slot(*table);
                for (m, &row) in indices.iter().enumerate() {
                    for (a, &b) in gt[row * d..(row + 1) * d].iter_mut().zip(&g[m * d..(m + 1) * d]) {
                        *a += b;
                    }
                }
            }
            Op::Conv1d {
                input,
                filters,
                bias,
            } => {
                let x = self.value(*input);
                let (m_len, depth) = (x.shape()[0], x.shape()[1]);
                let [nf, h, _] = self.value(*filters).shape()[..] else { unreachable!() };
                let half = (h - 1) / 2;
                let valid = |m: usize, j: usize| (m + j).checked_sub(half).filter(|&s| s < m_len);
                let gw = sink.slot(*filters);
                for m in 0..m_len {
                    for f in 0..nf {
                        let go = g[m * nf + f];
                        if go == 0.0 {
                            continue;
                        }
                        for j in 0..h {
                            if let Some(src) = valid(m, j) {
                                let wrow = &mut gw[(f * h + j) * depth..(f * h + j + 1) * depth];
                                for (a, &xv) in wrow.iter_mut().zip(x.row(src)) {
                                    *a += go * xv;
                                }
                            }
                        }
                    }
                }
                let gb = sink.slot(*bias);
                for m in 0..m_len {
                    for f in 0..nf {
                        gb[f] += g[m * nf + f];
                    }
                }
                if sink.wants(*input) {
                    let w = self.value(*filters).data();
                    let mut gx = vec![0.0; m_len * depth];
                    for m in 0..m_len {
                        for f in 0..nf {
                            let go = g[m * nf + f];
                            if go == 0.0 {
                                continue;
                            }
                            for j in 0..h {
                                if let Some(src) = valid(m, j) {
                                    let wrow = &w[(f * h + j) * depth..(f * h + j + 1) * depth];
                                    for (a, &wv) in gx[src * depth..(src + 1) * depth].iter_mut().zip(wrow) {
                                        *a += go * wv;
                                    }
                                }
                            }
                        }
                    }
                    sink.add(*input, &gx);
                }
            }
            Op::ConvTranspose1d {
                input,
                filters,
                bias,
            } => {
                let x = self.value(*input);
                let (m_len, nf) = (x.shape()[0], x.shape()[1]);
                let [_, h, depth] = self.value(*filters).shape()[..] else { unreachable!() };
                let half = (h - 1) / 2;
                let valid = |m: usize, j: usize| (m + half).checked_sub(j).filter(|&s| s < m_len);
                let gw = sink.slot(*filters);
                for m in 0..m_len {
                    let grow = &g[m * depth..(m + 1) * depth];
                    for j in 0..h {
                        if let Some(src) = valid(m, j) {
                            for f in 0..nf {
                                let s = x.data()[src * nf + f];
                                if s == 0.0 {
                                    continue;
                                }
                                let wrow = &mut gw[(f * h + j) * depth..(f * h + j + 1) * depth];
                                for (a, &gv) in wrow.iter_mut().zip(grow) {
                                    *a += s * gv;
                                }
                            }
                        }
                    }
                }
                let gb = sink.slot(*bias);
                for m in 0..m_len {
                    for (a, &gv) in gb.iter_mut().zip(&g[m * depth..(m + 1) * depth]) {
                        *a += gv;
                    }
                }
                if sink.wants(*input) {
                    let w = self.value(*filters).data();
                    let mut gx = vec![0.0; m_len * nf];
                    for m in 0..m_len {
                        let grow = &g[m * depth..(m + 1) * depth];
                        for j in 0..h {
                            if let Some(src) = valid(m, j) {
                                for f in 0..nf {
                                    let wrow = &w[(f * h + j) * depth..(f * h + j + 1) * depth];
                                    gx[src * nf + f] +=
                                        wrow.iter().zip(grow).map(|(a, b)| a * b).sum::<f64>();
                                }
                            }
                        }
                    }
                    sink.add(*input, &gx);
                }
            }
            Op::Relu { input } => {
                let x = self.value(*input).data();
                let gx: Vec<f64> = g
                    .iter()
                    .zip(x)
                    .map(|(&gv, &xv)| if xv > 0.0 { gv } else { 0.0 })
                    .collect();
                sink.add(*input, &gx);
            }
            Op::MaxPool { input, argmax } => {
                let nf = self.value(*input).shape()[1];
                let gx = sink.slot(*input);
                for (o, &src) in argmax.iter().enumerate() {
                    gx[src * nf + o % nf] += g[o];
                }
            }
            Op::Upsample { input, factor } => {
                let nf = self.value(*input).shape()[1];
                let gx = sink.slot(*input);
                for (m, grow) in g.chunks(nf).enumerate() {
                    let r = m / factor;
                    for (a, &b) in gx[r * nf..(r + 1) * nf].iter_mut().zip(grow) {
                        *a += b;
                    }
                }
            }
            Op::Concat { inputs } => {
                let mut offset = 0;
                for &v in inputs {
                    let n = self.value(v).len();
                    sink.add(v, &g[offset..offset + n]);
                    offset += n;
                }
            }
            Op::Dense {
                input,
                weight,
                bias,
            } => {
                let x = self.value(*input).data();
                let p = x.len();
                let gw = sink.slot(*weight);
                for (q, &go) in g.iter().enumerate() {
                    if go == 0.0 {
                        continue;
                    }
                    for (a, &xv) in gw[q * p..(q + 1) * p].iter_mut().zip(x) {
                        *a += go * xv;
                    }
                }
                sink.add(*bias, g);
                if sink.wants(*input) {
                    let w = self.value(*weight);
                    let mut gx = vec![0.0; p];
                    for (q, &go) in g.iter().enumerate() {
                        if go == 0.0 {
                            continue;
                        }
                        for (a, &wv) in gx.iter_mut().zip(w.row(q)) {
                            *a += go * wv;
                        }
                    }
                    sink.add(*input, &gx);
                }
            }
            Op::Dot { a, b } => {
                let ga: Vec<f64> = self.value(*b).data().iter().map(|v| v * g[0]).collect();
                let gb: Vec<f64> = self.value(*a).data().iter().map(|v| v * g[0]).collect();
                sink.add(*a, &ga);
                sink.add(*b, &gb);
            }
            Op::SoftmaxCrossEntropy {
                logits,
                target,
                probs,
            } => {
                let mass: f64 = target.iter().sum();
                let gy: Vec<f64> = probs
                    .iter()
                    .zip(target)
                    .map(|(p, z)| g[0] * (p * mass - z))
                    .collect();
                sink.add(*logits, &gy);
            }
        }
    }
}

struct Sink<'t, 'g> {
    tape: &'t Tape<'t>,
    params: &'g mut Gradients,
    nodes: Vec<Option<Vec<f64>>>,
}

impl Sink<'_, '_> {
    /// Constants never need a gradient; everything else does.
    fn wants(&self, v: Var) -> bool {
        match v {
            Var::Param(_) => true,
            Var::Node(i) => !matches!(self.tape.nodes[i].op, Op::Constant),
        }
    }

    fn slot(&mut self, v: Var) -> &mut [f64] {
        match v {
            Var::Param(id) => self.params.get_mut(id).data_mut(),
            Var::Node(i) => {
                let n = self.tape.nodes[i].value.len();
                self.nodes[i].get_or_insert_with(|| vec![0.0; n])
            }
        }
    }

    fn add(&mut self, v: Var, g: &[f64]) {
        if !self.wants(v) {
            return;
        }
        for (a, &b) in self.slot(v).iter_mut().zip(g) {
            *a += b;
        }
    }
}
