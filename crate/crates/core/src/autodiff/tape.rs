//! Computation tape: append-only node arena with one backward sweep.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Up to four dimension sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    dims: [usize; 4],
    rank: usize,
}

impl Shape {
    pub fn d1(n: usize) -> Shape {
        Shape { dims: [n, 1, 1, 1], rank: 1 }
    }
    pub fn d2(a: usize, b: usize) -> Shape {
        Shape { dims: [a, b, 1, 1], rank: 2 }
    }
    pub fn d3(a: usize, b: usize, c: usize) -> Shape {
        Shape { dims: [a, b, c, 1], rank: 3 }
    }
    pub fn d4(a: usize, b: usize, c: usize, d: usize) -> Shape {
        Shape { dims: [a, b, c, d], rank: 4 }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims[..self.rank]
    }

    pub fn len(&self) -> usize {
        self.dims().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Splits the index space into (outer, axis length, inner) around `axis`.
    fn around(&self, axis: usize) -> (usize, usize, usize) {
        assert!(axis < self.rank, "axis {axis} out of rank {}", self.rank);
        let outer: usize = self.dims()[..axis].iter().product();
        let inner: usize = self.dims()[axis + 1..].iter().product();
        (outer, self.dims[axis], inner)
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}", self.dims())
    }
}

/// Handle to a node on a tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

/// Activation applied to one group of dims by [`Tape::grouped_activation`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActKind {
    Softmax,
    Sigmoid,
}

/// A contiguous dim group and its activation.
#[derive(Debug, Clone, Copy)]
pub struct Group {
    pub start: usize,
    pub len: usize,
    pub kind: ActKind,
}

/// A named, owned parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub shape: Shape,
    pub data: Vec<f32>,
}

/// The full set of trainable parameters of a model, in a fixed order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamSet {
    pub entries: Vec<Param>,
}

impl ParamSet {
    pub fn add(&mut self, name: impl Into<String>, shape: Shape, data: Vec<f32>) -> usize {
        assert_eq!(shape.len(), data.len());
        self.entries.push(Param { name: name.into(), shape, data });
        self.entries.len() - 1
    }

    pub fn total_len(&self) -> usize {
        self.entries.iter().map(|p| p.data.len()).sum()
    }

    pub fn by_name(&self, name: &str) -> Option<&Param> {
        self.entries.iter().find(|p| p.name == name)
    }
}

enum Op {
    Leaf,
    Add(Var, Var),
    Mul(Var, Var),
    Scale(Var, f32),
    AddN(Vec<Var>),
    Matmul(Var, Var),
    Transpose(Var),
    Linear { x: Var, w: Var, b: Var },
    Conv2d { x: Var, w: Var, b: Var, stride: usize, pad_top: usize, pad_left: usize },
    Concat { axis: usize, parents: Vec<Var> },
    Slice { x: Var, axis: usize, start: usize },
    Reshape(Var),
    Mean(Var),
    Softmax(Var),
    Sigmoid(Var),
    Gelu(Var),
    LayerNorm { x: Var, gamma: Var, beta: Var, eps: f32 },
    Dropout { x: Var, mask: Vec<f32> },
    CrossEntropy { pred: Var, target: Vec<f32> },
    GroupedActivation { z: Var, groups: Vec<Group> },
    WeightedCe { pred: Var, target: Vec<f32>, weights: Vec<f32>, binary: Vec<bool> },
}

struct Node {
    shape: Shape,
    op: Op,
}

/// Probabilities are clamped to [CLAMP, 1 - CLAMP] inside log terms.
const CLAMP: f32 = 1e-7;

const GELU_C: f32 = 0.797_884_56; // sqrt(2/pi)
const GELU_A: f32 = 0.044_715;

/// Ordered record of one forward computation.
pub struct Tape {
    nodes: Vec<Node>,
    data: Vec<Vec<f32>>,
    grads: Vec<Vec<f32>>,
    rng: ChaCha8Rng,
    train: bool,
}

impl Tape {
    /// `seed` drives dropout; `train` enables it.
    pub fn new(seed: u64, train: bool) -> Tape {
        Tape {
            nodes: Vec::new(),
            data: Vec::new(),
            grads: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            train,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn shape(&self, v: Var) -> Shape {
        self.nodes[v.0].shape
    }

    pub fn data(&self, v: Var) -> &[f32] {
        &self.data[v.0]
    }

    pub fn grad(&self, v: Var) -> &[f32] {
        &self.grads[v.0]
    }

    fn push(&mut self, shape: Shape, data: Vec<f32>, op: Op) -> Var {
        debug_assert_eq!(shape.len(), data.len());
        let grad = vec![0.0; data.len()];
        self.nodes.push(Node { shape, op });
        self.data.push(data);
        self.grads.push(grad);
        Var(self.nodes.len() - 1)
    }

    /// Input or parameter node.
    pub fn leaf(&mut self, shape: Shape, data: Vec<f32>) -> Var {
        assert_eq!(shape.len(), data.len(), "leaf data length must match shape {shape}");
        self.push(shape, data, Op::Leaf)
    }

    fn assert_same_shape(&self, a: Var, b: Var, op: &str) {
        assert_eq!(
            self.shape(a),
            self.shape(b),
            "{op}: shape mismatch {} vs {}",
            self.shape(a),
            self.shape(b)
        );
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        self.assert_same_shape(a, b, "add");
        let data = self.data[a.0].iter().zip(&self.data[b.0]).map(|(x, y)| x + y).collect();
        self.push(self.shape(a), data, Op::Add(a, b))
    }

    /// Adds a positional table to a token sequence of equal shape.
    pub fn embedding_add(&mut self, x: Var, table: Var) -> Var {
        self.assert_same_shape(x, table, "embedding_add");
        self.add(x, table)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        self.assert_same_shape(a, b, "mul");
        let data = self.data[a.0].iter().zip(&self.data[b.0]).map(|(x, y)| x * y).collect();
        self.push(self.shape(a), data, Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: Var, c: f32) -> Var {
        let data = self.data[a.0].iter().map(|x| x * c).collect();
        self.push(self.shape(a), data, Op::Scale(a, c))
    }

    /// Elementwise sum of any number of same-shape tensors.
    pub fn add_n(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty(), "add_n needs at least one operand");
        for &p in &parts[1..] {
            self.assert_same_shape(parts[0], p, "add_n");
        }
        let mut data = self.data[parts[0].0].clone();
        for &p in &parts[1..] {
            for (d, s) in data.iter_mut().zip(&self.data[p.0]) {
                *d += s;
            }
        }
        self.push(self.shape(parts[0]), data, Op::AddN(parts.to_vec()))
    }

    /// 2D matrix product [m,k]x[k,n] -> [m,n].
    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let (sa, sb) = (self.shape(a), self.shape(b));
        assert!(
            sa.rank() == 2 && sb.rank() == 2 && sa.dims()[1] == sb.dims()[0],
            "matmul: shape mismatch {sa} vs {sb}"
        );
        let (m, k, n) = (sa.dims()[0], sa.dims()[1], sb.dims()[1]);
        let data = matmul_raw(&self.data[a.0], &self.data[b.0], m, k, n);
        self.push(Shape::d2(m, n), data, Op::Matmul(a, b))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let s = self.shape(a);
        assert_eq!(s.rank(), 2, "transpose: rank-2 input required, got {s}");
        let (r, c) = (s.dims()[0], s.dims()[1]);
        let src = &self.data[a.0];
        let mut data = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                data[j * r + i] = src[i * c + j];
            }
        }
        self.push(Shape::d2(c, r), data, Op::Transpose(a))
    }

    /// Affine map of rows: [n, din] x [din, dout] + [dout].
    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Var {
        let (sx, sw, sb) = (self.shape(x), self.shape(w), self.shape(b));
        assert!(
            sx.rank() == 2 && sw.rank() == 2 && sx.dims()[1] == sw.dims()[0],
            "linear: shape mismatch {sx} vs {sw}"
        );
        assert!(
            sb.rank() == 1 && sb.dims()[0] == sw.dims()[1],
            "linear: bias shape {sb} vs weight {sw}"
        );
        let (n, din, dout) = (sx.dims()[0], sx.dims()[1], sw.dims()[1]);
        let mut data = matmul_raw(&self.data[x.0], &self.data[w.0], n, din, dout);
        let bias = &self.data[b.0];
        for row in data.chunks_mut(dout) {
            for (v, bv) in row.iter_mut().zip(bias) {
                *v += bv;
            }
        }
        self.push(Shape::d2(n, dout), data, Op::Linear { x, w, b })
    }

    /// 2D convolution with 'same' padding: [cin,h,w] x [cout,cin,kh,kw] -> [cout,ceil(h/s),ceil(w/s)].
    pub fn conv2d(&mut self, x: Var, w: Var, b: Var, stride: usize) -> Var {
        let (sx, sw, sb) = (self.shape(x), self.shape(w), self.shape(b));
        assert!(
            sx.rank() == 3 && sw.rank() == 4 && sx.dims()[0] == sw.dims()[1],
            "conv2d: shape mismatch {sx} vs {sw}"
        );
        assert!(sb.rank() == 1 && sb.dims()[0] == sw.dims()[0], "conv2d: bias {sb} vs {sw}");
        let (cin, h, wd) = (sx.dims()[0], sx.dims()[1], sx.dims()[2]);
        let (cout, kh, kw) = (sw.dims()[0], sw.dims()[2], sw.dims()[3]);
        let oh = h.div_ceil(stride);
        let ow = wd.div_ceil(stride);
        let pad_h = ((oh - 1) * stride + kh).saturating_sub(h);
        let pad_w = ((ow - 1) * stride + kw).saturating_sub(wd);
        let (pad_top, pad_left) = (pad_h / 2, pad_w / 2);

        let xs = &self.data[x.0];
        let ws = &self.data[w.0];
        let bs = &self.data[b.0];
        let mut out = vec![0.0f32; cout * oh * ow];
        for oc in 0..cout {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut acc = bs[oc];
                    for ic in 0..cin {
                        for ky in 0..kh {
                            let iy = (oy * stride + ky) as isize - pad_top as isize;
                            if iy < 0 || iy >= h as isize {
                                continue;
                            }
                            for kx in 0..kw {
                                let ix = (ox * stride + kx) as isize - pad_left as isize;
                                if ix < 0 || ix >= wd as isize {
                                    continue;
                                }
                                acc += xs[(ic * h + iy as usize) * wd + ix as usize]
                                    * ws[((oc * cin + ic) * kh + ky) * kw + kx];
                            }
                        }
                    }
                    out[(oc * oh + oy) * ow + ox] = acc;
                }
            }
        }
        self.push(
            Shape::d3(cout, oh, ow),
            out,
            Op::Conv2d { x, w, b, stride, pad_top, pad_left },
        )
    }

    /// Concatenation along `axis`; operands agree on every other dim.
    pub fn concat(&mut self, axis: usize, parts: &[Var]) -> Var {
        assert!(!parts.is_empty(), "concat needs at least one operand");
        let first = self.shape(parts[0]);
        let mut axis_total = 0;
        for &p in parts {
            let s = self.shape(p);
            assert_eq!(s.rank(), first.rank(), "concat: rank mismatch {s} vs {first}");
            for d in 0..s.rank() {
                if d != axis {
                    assert_eq!(s.dims()[d], first.dims()[d], "concat: shape mismatch {s} vs {first}");
                }
            }
            axis_total += s.dims()[axis];
        }
        let mut out_shape = first;
        out_shape.dims[axis] = axis_total;
        let (outer, _, inner) = out_shape.around(axis);
        let mut data = vec![0.0f32; out_shape.len()];
        let mut cum = 0;
        for &p in parts {
            let plen = self.shape(p).dims()[axis];
            let src = &self.data[p.0];
            for o in 0..outer {
                let dst_off = (o * axis_total + cum) * inner;
                let src_off = o * plen * inner;
                data[dst_off..dst_off + plen * inner]
                    .copy_from_slice(&src[src_off..src_off + plen * inner]);
            }
            cum += plen;
        }
        self.push(out_shape, data, Op::Concat { axis, parents: parts.to_vec() })
    }

    /// Contiguous slice `[start, start+len)` along `axis`.
    pub fn slice(&mut self, x: Var, axis: usize, start: usize, len: usize) -> Var {
        let s = self.shape(x);
        let (outer, axis_len, inner) = s.around(axis);
        assert!(start + len <= axis_len, "slice: [{start},{}) out of axis {axis_len}", start + len);
        let mut out_shape = s;
        out_shape.dims[axis] = len;
        let src = &self.data[x.0];
        let mut data = vec![0.0f32; out_shape.len()];
        for o in 0..outer {
            let src_off = (o * axis_len + start) * inner;
            let dst_off = o * len * inner;
            data[dst_off..dst_off + len * inner].copy_from_slice(&src[src_off..src_off + len * inner]);
        }
        self.push(out_shape, data, Op::Slice { x, axis, start })
    }

    /// Same data, new shape of equal length.
    pub fn reshape(&mut self, x: Var, shape: Shape) -> Var {
        assert_eq!(
            shape.len(),
            self.shape(x).len(),
            "reshape: length mismatch {} vs {}",
            shape,
            self.shape(x)
        );
        let data = self.data[x.0].clone();
        self.push(shape, data, Op::Reshape(x))
    }

    /// Mean of all elements, as a scalar node.
    pub fn mean(&mut self, x: Var) -> Var {
        let n = self.data[x.0].len();
        let m = self.data[x.0].iter().sum::<f32>() / n as f32;
        self.push(Shape::d1(1), vec![m], Op::Mean(x))
    }

    /// Softmax along the last axis.
    pub fn softmax(&mut self, x: Var) -> Var {
        let s = self.shape(x);
        let n = *s.dims().last().unwrap();
        let mut data = self.data[x.0].clone();
        for row in data.chunks_mut(n) {
            softmax_row(row);
        }
        self.push(s, data, Op::Softmax(x))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let data = self.data[x.0].iter().map(|&v| sigmoid_scalar(v)).collect();
        self.push(self.shape(x), data, Op::Sigmoid(x))
    }

    /// GELU, tanh approximation.
    pub fn gelu(&mut self, x: Var) -> Var {
        let data = self.data[x.0].iter().map(|&v| gelu_scalar(v)).collect();
        self.push(self.shape(x), data, Op::Gelu(x))
    }

    /// Layer normalization along the last axis with learnable gain and bias.
    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var, eps: f32) -> Var {
        let s = self.shape(x);
        let n = *s.dims().last().unwrap();
        assert!(
            self.shape(gamma).len() == n && self.shape(beta).len() == n,
            "layer_norm: gain/bias length {} vs last axis {n}",
            self.shape(gamma).len()
        );
        let g = &self.data[gamma.0];
        let b = &self.data[beta.0];
        let mut data = self.data[x.0].clone();
        for row in data.chunks_mut(n) {
            let mean = row.iter().sum::<f32>() / n as f32;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f32>() / n as f32;
            let inv = 1.0 / (var + eps).sqrt();
            for (j, v) in row.iter_mut().enumerate() {
                *v = g[j] * (*v - mean) * inv + b[j];
            }
        }
        self.push(s, data, Op::LayerNorm { x, gamma, beta, eps })
    }

    /// Inverted dropout; identity when the tape is in eval mode or rate is 0.
    pub fn dropout(&mut self, x: Var, rate: f32) -> Var {
        if !self.train || rate == 0.0 {
            return x;
        }
        let keep = 1.0 - rate;
        let mask: Vec<f32> = (0..self.data[x.0].len())
            .map(|_| if self.rng.gen::<f32>() < rate { 0.0 } else { 1.0 / keep })
            .collect();
        let data = self.data[x.0].iter().zip(&mask).map(|(v, m)| v * m).collect();
        self.push(self.shape(x), data, Op::Dropout { x, mask })
    }

    /// -sum target_i ln(clamp(pred_i)), as a scalar node. The target is a
    /// constant distribution.
    pub fn cross_entropy(&mut self, pred: Var, target: &[f32]) -> Var {
        assert_eq!(self.data[pred.0].len(), target.len(), "cross_entropy: length mismatch");
        let loss: f32 = self.data[pred.0]
            .iter()
            .zip(target)
            .map(|(&p, &t)| -t * clamp_prob(p).ln())
            .sum();
        self.push(Shape::d1(1), vec![loss], Op::CrossEntropy { pred, target: target.to_vec() })
    }

    /// Applies per-group activations to a 1D vector: softmax over categorical
    /// groups, sigmoid over binary groups. Groups must tile the whole vector.
    pub fn grouped_activation(&mut self, z: Var, groups: &[Group]) -> Var {
        let s = self.shape(z);
        let total: usize = groups.iter().map(|g| g.len).sum();
        assert_eq!(total, s.len(), "grouped_activation: groups must tile the vector");
        let mut data = self.data[z.0].clone();
        for g in groups {
            let seg = &mut data[g.start..g.start + g.len];
            match g.kind {
                ActKind::Softmax => softmax_row(seg),
                ActKind::Sigmoid => {
                    for v in seg.iter_mut() {
                        *v = sigmoid_scalar(*v);
                    }
                }
            }
        }
        self.push(s, data, Op::GroupedActivation { z, groups: groups.to_vec() })
    }

    /// Panel loss over probabilities: sum over dims of
    /// `w_d * ce(pred_d, target_d)` where binary dims use two-sided binary
    /// cross-entropy and the rest the one-sided categorical term. Irrelevant
    /// dims carry weight 0. Scalar output.
    pub fn weighted_ce(&mut self, pred: Var, target: &[f32], weights: &[f32], binary: &[bool]) -> Var {
        let n = self.data[pred.0].len();
        assert!(
            target.len() == n && weights.len() == n && binary.len() == n,
            "weighted_ce: length mismatch"
        );
        let mut loss = 0.0f32;
        for i in 0..n {
            if weights[i] == 0.0 {
                continue;
            }
            let p = clamp_prob(self.data[pred.0][i]);
            let t = target[i];
            loss += if binary[i] {
                -weights[i] * (t * p.ln() + (1.0 - t) * (1.0 - p).ln())
            } else {
                -weights[i] * t * p.ln()
            };
        }
        self.push(
            Shape::d1(1),
            vec![loss],
            Op::WeightedCe {
                pred,
                target: target.to_vec(),
                weights: weights.to_vec(),
                binary: binary.to_vec(),
            },
        )
    }

    /// Reverse sweep from a scalar loss; every node's gradient is populated,
    /// with additive accumulation across fan-out.
    pub fn backward(&mut self, loss: Var) {
        assert_eq!(
            self.data[loss.0].len(),
            1,
            "backward: loss must be scalar, got shape {}",
            self.shape(loss)
        );
        for g in self.grads.iter_mut() {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
        self.grads[loss.0][0] = 1.0;

        for i in (0..self.nodes.len()).rev() {
            let g = std::mem::take(&mut self.grads[i]);
            if g.iter().all(|&v| v == 0.0) {
                self.grads[i] = g;
                continue;
            }
            self.step_backward(i, &g);
            self.grads[i] = g;
        }
    }

    fn step_backward(&mut self, i: usize, g: &[f32]) {
        match &self.nodes[i].op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                let (a, b) = (*a, *b);
                for (ga, gv) in self.grads[a.0].iter_mut().zip(g) {
                    *ga += gv;
                }
                for (gb, gv) in self.grads[b.0].iter_mut().zip(g) {
                    *gb += gv;
                }
            }
            Op::Mul(a, b) => {
                let (a, b) = (*a, *b);
                for k in 0..g.len() {
                    self.grads[a.0][k] += g[k] * self.data[b.0][k];
                }
                for k in 0..g.len() {
                    self.grads[b.0][k] += g[k] * self.data[a.0][k];
                }
            }
            Op::Scale(a, c) => {
                let (a, c) = (*a, *c);
                for (ga, gv) in self.grads[a.0].iter_mut().zip(g) {
                    *ga += gv * c;
                }
            }
            Op::AddN(parts) => {
                for &p in &parts.clone() {
                    for (gp, gv) in self.grads[p.0].iter_mut().zip(g) {
                        *gp += gv;
                    }
                }
            }
            Op::Matmul(a, b) => {
                let (a, b) = (*a, *b);
                let (m, k) = (self.shape(a).dims()[0], self.shape(a).dims()[1]);
                let n = self.shape(b).dims()[1];
                // dA += G * B^T
                for i_ in 0..m {
                    for j in 0..n {
                        let gv = g[i_ * n + j];
                        if gv == 0.0 {
                            continue;
                        }
                        for kk in 0..k {
                            self.grads[a.0][i_ * k + kk] += gv * self.data[b.0][kk * n + j];
                        }
                    }
                }
                // dB += A^T * G
                for i_ in 0..m {
                    for kk in 0..k {
                        let av = self.data[a.0][i_ * k + kk];
                        if av == 0.0 {
                            continue;
                        }
                        for j in 0..n {
                            self.grads[b.0][kk * n + j] += av * g[i_ * n + j];
                        }
                    }
                }
            }
            Op::Transpose(a) => {
                let a = *a;
                let (r, c) = (self.shape(a).dims()[0], self.shape(a).dims()[1]);
                for i_ in 0..r {
                    for j in 0..c {
                        self.grads[a.0][i_ * c + j] += g[j * r + i_];
                    }
                }
            }
            Op::Linear { x, w, b } => {
                let (x, w, b) = (*x, *w, *b);
                let (n, din) = (self.shape(x).dims()[0], self.shape(x).dims()[1]);
                let dout = self.shape(w).dims()[1];
                for r in 0..n {
                    for j in 0..dout {
                        let gv = g[r * dout + j];
                        if gv == 0.0 {
                            continue;
                        }
                        self.grads[b.0][j] += gv;
                        for k in 0..din {
                            self.grads[x.0][r * din + k] += gv * self.data[w.0][k * dout + j];
                        }
                    }
                    for k in 0..din {
                        let xv = self.data[x.0][r * din + k];
                        if xv == 0.0 {
                            continue;
                        }
                        for j in 0..dout {
                            self.grads[w.0][k * dout + j] += xv * g[r * dout + j];
                        }
                    }
                }
            }
            Op::Conv2d { x, w, b, stride, pad_top, pad_left } => {
                let (x, w, b) = (*x, *w, *b);
                let (stride, pad_top, pad_left) = (*stride, *pad_top, *pad_left);
                let sx = self.shape(x);
                let sw = self.shape(w);
                let (cin, h, wd) = (sx.dims()[0], sx.dims()[1], sx.dims()[2]);
                let (cout, kh, kw) = (sw.dims()[0], sw.dims()[2], sw.dims()[3]);
                let (oh, ow) = (h.div_ceil(stride), wd.div_ceil(stride));
                for oc in 0..cout {
                    for oy in 0..oh {
                        for ox in 0..ow {
                            let gv = g[(oc * oh + oy) * ow + ox];
                            if gv == 0.0 {
                                continue;
                            }
                            self.grads[b.0][oc] += gv;
                            for ic in 0..cin {
                                for ky in 0..kh {
                                    let iy = (oy * stride + ky) as isize - pad_top as isize;
                                    if iy < 0 || iy >= h as isize {
                                        continue;
                                    }
                                    for kx in 0..kw {
                                        let ix = (ox * stride + kx) as isize - pad_left as isize;
                                        if ix < 0 || ix >= wd as isize {
                                            continue;
                                        }
                                        let xi = (ic * h + iy as usize) * wd + ix as usize;
                                        let wi = ((oc * cin + ic) * kh + ky) * kw + kx;
                                        self.grads[x.0][xi] += gv * self.data[w.0][wi];
                                        self.grads[w.0][wi] += gv * self.data[x.0][xi];
                                    }
                                }
                            }
                        }
                    }
                }
            }
            Op::Concat { axis, parents } => {
                let axis = *axis;
                let parents = parents.clone();
                let (outer, total, inner) = self.nodes[i].shape.around(axis);
                let mut cum = 0;
                for p in parents {
                    let plen = self.shape(p).dims()[axis];
                    for o in 0..outer {
                        let src_off = (o * total + cum) * inner;
                        let dst_off = o * plen * inner;
                        for k in 0..plen * inner {
                            self.grads[p.0][dst_off + k] += g[src_off + k];
                        }
                    }
                    cum += plen;
                }
            }
            Op::Slice { x, axis, start } => {
                let (x, axis, start) = (*x, *axis, *start);
                let (outer, axis_len, inner) = self.shape(x).around(axis);
                let len = self.nodes[i].shape.dims[axis];
                for o in 0..outer {
                    let dst_off = (o * axis_len + start) * inner;
                    let src_off = o * len * inner;
                    for k in 0..len * inner {
                        self.grads[x.0][dst_off + k] += g[src_off + k];
                    }
                }
            }
            Op::Reshape(a) => {
                let a = *a;
                for (ga, gv) in self.grads[a.0].iter_mut().zip(g) {
                    *ga += gv;
                }
            }
            Op::Mean(a) => {
                let a = *a;
                let n = self.data[a.0].len() as f32;
                let gv = g[0] / n;
                for ga in self.grads[a.0].iter_mut() {
                    *ga += gv;
                }
            }
            Op::Softmax(a) => {
                let a = *a;
                let n = *self.nodes[i].shape.dims().last().unwrap();
                let rows = self.data[i].len() / n;
                for r in 0..rows {
                    let s = &self.data[i][r * n..(r + 1) * n];
                    let gr = &g[r * n..(r + 1) * n];
                    let dot: f32 = s.iter().zip(gr).map(|(sv, gv)| sv * gv).sum();
                    for j in 0..n {
                        self.grads[a.0][r * n + j] += s[j] * (gr[j] - dot);
                    }
                }
            }
            Op::Sigmoid(a) => {
                let a = *a;
                for k in 0..g.len() {
                    let s = self.data[i][k];
                    self.grads[a.0][k] += g[k] * s * (1.0 - s);
                }
            }
            Op::Gelu(a) => {
                let a = *a;
                for k in 0..g.len() {
                    let x = self.data[a.0][k];
                    self.grads[a.0][k] += g[k] * gelu_grad_scalar(x);
                }
            }
            Op::LayerNorm { x, gamma, beta, eps } => {
                let (x, gamma, beta, eps) = (*x, *gamma, *beta, *eps);
                let n = *self.nodes[i].shape.dims().last().unwrap();
                let rows = self.data[i].len() / n;
                for r in 0..rows {
                    let xs = &self.data[x.0][r * n..(r + 1) * n];
                    let gr = &g[r * n..(r + 1) * n];
                    let mean = xs.iter().sum::<f32>() / n as f32;
                    let var = xs.iter().map(|v| (v - mean) * (v - mean)).sum::<f32>() / n as f32;
                    let inv = 1.0 / (var + eps).sqrt();
                    let gam = &self.data[gamma.0];
                    // dgamma, dbeta, and the projected input gradient.
                    let mut sum_gg = 0.0f32;
                    let mut sum_ggx = 0.0f32;
                    for j in 0..n {
                        let xhat = (xs[j] - mean) * inv;
                        let gg = gr[j] * gam[j];
                        sum_gg += gg;
                        sum_ggx += gg * xhat;
                        self.grads[gamma.0][j] += gr[j] * xhat;
                        self.grads[beta.0][j] += gr[j];
                    }
                    for j in 0..n {
                        let xhat = (xs[j] - mean) * inv;
                        let gg = gr[j] * gam[j];
                        self.grads[x.0][r * n + j] +=
                            (gg - sum_gg / n as f32 - xhat * sum_ggx / n as f32) * inv;
                    }
                }
            }
            Op::Dropout { x, mask } => {
                let x = *x;
                let mask = mask.clone();
                for k in 0..g.len() {
                    self.grads[x.0][k] += g[k] * mask[k];
                }
            }
            Op::CrossEntropy { pred, target } => {
                let pred = *pred;
                let target = target.clone();
                let gv = g[0];
                for k in 0..target.len() {
                    let p = self.data[pred.0][k];
                    if target[k] != 0.0 && p > CLAMP && p < 1.0 - CLAMP {
                        self.grads[pred.0][k] += gv * (-target[k] / p);
                    }
                }
            }
            Op::GroupedActivation { z, groups } => {
                let z = *z;
                let groups = groups.clone();
                for grp in &groups {
                    let s = &self.data[i][grp.start..grp.start + grp.len];
                    let gr = &g[grp.start..grp.start + grp.len];
                    match grp.kind {
                        ActKind::Softmax => {
                            let dot: f32 = s.iter().zip(gr).map(|(sv, gv)| sv * gv).sum();
                            for j in 0..grp.len {
                                self.grads[z.0][grp.start + j] += s[j] * (gr[j] - dot);
                            }
                        }
                        ActKind::Sigmoid => {
                            for j in 0..grp.len {
                                self.grads[z.0][grp.start + j] += gr[j] * s[j] * (1.0 - s[j]);
                            }
                        }
                    }
                }
            }
            Op::WeightedCe { pred, target, weights, binary } => {
                let pred = *pred;
                let (target, weights, binary) = (target.clone(), weights.clone(), binary.clone());
                let gv = g[0];
                for k in 0..target.len() {
                    if weights[k] == 0.0 {
                        continue;
                    }
                    let p = self.data[pred.0][k];
                    if p <= CLAMP || p >= 1.0 - CLAMP {
                        continue; // clamped region: flat
                    }
                    let t = target[k];
                    let d = if binary[k] {
                        -(t / p - (1.0 - t) / (1.0 - p))
                    } else {
                        -t / p
                    };
                    self.grads[pred.0][k] += gv * weights[k] * d;
                }
            }
        }
    }
}

pub(crate) fn clamp_prob(p: f32) -> f32 {
    p.clamp(CLAMP, 1.0 - CLAMP)
}

pub(crate) fn sigmoid_scalar(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

pub(crate) fn gelu_scalar(x: f32) -> f32 {
    0.5 * x * (1.0 + (GELU_C * (x + GELU_A * x * x * x)).tanh())
}

fn gelu_grad_scalar(x: f32) -> f32 {
    let u = GELU_C * (x + GELU_A * x * x * x);
    let t = u.tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * x * x)
}

pub(crate) fn softmax_row(row: &mut [f32]) {
    let max = row.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

fn matmul_raw(a: &[f32], b: &[f32], m: usize, k: usize, n: usize) -> Vec<f32> {
    let mut out = vec![0.0f32; m * n];
    for i in 0..m {
        for kk in 0..k {
            let av = a[i * k + kk];
            if av == 0.0 {
                continue;
            }
            let brow = &b[kk * n..(kk + 1) * n];
            let orow = &mut out[i * n..(i + 1) * n];
            for j in 0..n {
                orow[j] += av * brow[j];
            }
        }
    }
    out
}
