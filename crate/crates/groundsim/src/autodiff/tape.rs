//! Reverse-mode differentiation tape.
//!
//! The tape is rebuilt for every training step (define-by-run): forward
//! values are computed eagerly as ops are recorded, and [`Tape::backward`]
//! walks the record once in reverse, accumulating exact analytic gradients.
//! Backward is fully deterministic: identical forward graphs produce
//! bitwise-identical gradients.

use crate::error::{Error, Result};

use super::tensor::Tensor;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(pub(crate) usize);

enum Op {
    Leaf,
    Matmul { a: Var, b: Var },
    Add { a: Var, b: Var },
    Mul { a: Var, b: Var },
    Concat { parts: Vec<Var> },
    StackRows { parts: Vec<Var> },
    Slice { a: Var, start: usize },
    Tanh { a: Var },
    Sigmoid { a: Var },
    Relu { a: Var },
    Softmax { a: Var, axis: usize },
    LogSoftmax { a: Var, axis: usize },
    Embedding { table: Var, ids: Vec<usize> },
    Sum { a: Var },
    Mean { a: Var },
    CrossEntropy { logits: Var, index: usize },
}

pub struct Tape {
    vals: Vec<Tensor>,
    ops: Vec<Op>,
    grads: Vec<Tensor>,
}

fn dim_err(op: &'static str, a: &[usize], b: &[usize]) -> Error {
    Error::Dimension { op, lhs: a.to_vec(), rhs: b.to_vec() }
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape { vals: Vec::new(), ops: Vec::new(), grads: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    fn push(&mut self, val: Tensor, op: Op) -> Var {
        self.vals.push(val);
        self.ops.push(op);
        Var(self.vals.len() - 1)
    }

    /// A trainable leaf; its gradient is retained by name of the caller.
    pub fn leaf(&mut self, mut t: Tensor) -> Var {
        t.requires_grad = true;
        self.push(t, Op::Leaf)
    }

    /// A non-trainable input (environment features, orientation codes).
    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.vals[v.0]
    }

    /// Gradient of the last backward pass with respect to `v`.
    pub fn grad(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0)
    }

    /// Matrix product. Supported shapes:
    /// `[r,c]x[c,k] -> [r,k]`, `[r,c]x[c] -> [r]`, `[n]x[n,d] -> [d]`,
    /// and `[n]x[n] -> [1]` (dot product).
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.vals[a.0].shape().to_vec(), self.vals[b.0].shape().to_vec());
        let da = self.vals[a.0].data();
        let db = self.vals[b.0].data();
        let out = match (sa.as_slice(), sb.as_slice()) {
            ([r, c], [c2, k]) if c == c2 => {
                let (r, c, k) = (*r, *c, *k);
                let mut out = vec![0.0; r * k];
                for i in 0..r {
                    for l in 0..c {
                        let aval = da[i * c + l];
                        if aval == 0.0 {
                            continue;
                        }
                        let brow = &db[l * k..(l + 1) * k];
                        let orow = &mut out[i * k..(i + 1) * k];
                        for j in 0..k {
                            orow[j] += aval * brow[j];
                        }
                    }
                }
                Tensor::from_vec(vec![r, k], out)?
            }
            ([r, c], [c2]) if c == c2 => {
                let (r, c) = (*r, *c);
                let mut out = vec![0.0; r];
                for i in 0..r {
                    let arow = &da[i * c..(i + 1) * c];
                    let mut acc = 0.0;
                    for l in 0..c {
                        acc += arow[l] * db[l];
                    }
                    out[i] = acc;
                }
                Tensor::vector(out)
            }
            ([n], [n2, d]) if n == n2 => {
                let (n, d) = (*n, *d);
                let mut out = vec![0.0; d];
                for l in 0..n {
                    let aval = da[l];
                    if aval == 0.0 {
                        continue;
                    }
                    let brow = &db[l * d..(l + 1) * d];
                    for j in 0..d {
                        out[j] += aval * brow[j];
                    }
                }
                Tensor::vector(out)
            }
            ([n], [n2]) if n == n2 => {
                let acc: f64 = da.iter().zip(db).map(|(x, y)| x * y).sum();
                Tensor::scalar(acc)
            }
            _ => return Err(dim_err("matmul", &sa, &sb)),
        };
        Ok(self.push(out, Op::Matmul { a, b }))
    }

    /// Elementwise sum; also broadcasts a `[d]` vector over the rows of an
    /// `[n,d]` matrix.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.vals[a.0].shape().to_vec(), self.vals[b.0].shape().to_vec());
        let da = self.vals[a.0].data();
        let db = self.vals[b.0].data();
        let out = if sa == sb {
            let data = da.iter().zip(db).map(|(x, y)| x + y).collect();
            Tensor::from_vec(sa, data)?
        } else if sa.len() == 2 && sb.len() == 1 && sa[1] == sb[0] {
            let (n, d) = (sa[0], sa[1]);
            let mut data = vec![0.0; n * d];
            for i in 0..n {
                for j in 0..d {
                    data[i * d + j] = da[i * d + j] + db[j];
                }
            }
            Tensor::from_vec(sa, data)?
        } else {
            return Err(dim_err("add", &sa, &sb));
        };
        Ok(self.push(out, Op::Add { a, b }))
    }

    /// Elementwise product of same-shape tensors.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.vals[a.0].shape().to_vec(), self.vals[b.0].shape().to_vec());
        if sa != sb {
            return Err(dim_err("mul", &sa, &sb));
        }
        let data = self.vals[a.0]
            .data()
            .iter()
            .zip(self.vals[b.0].data())
            .map(|(x, y)| x * y)
            .collect();
        let out = Tensor::from_vec(sa, data)?;
        Ok(self.push(out, Op::Mul { a, b }))
    }

    /// Concatenation of vectors into one vector.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        if parts.is_empty() {
            return Err(Error::Contract("concat of zero parts".into()));
        }
        let mut data = Vec::new();
        for p in parts {
            if self.vals[p.0].rank() != 1 {
                return Err(dim_err("concat", self.vals[p.0].shape(), &[0]));
            }
            data.extend_from_slice(self.vals[p.0].data());
        }
        let out = Tensor::vector(data);
        Ok(self.push(out, Op::Concat { parts: parts.to_vec() }))
    }

    /// Stacks equal-length vectors into the rows of a matrix.
    pub fn stack_rows(&mut self, parts: &[Var]) -> Result<Var> {
        if parts.is_empty() {
            return Err(Error::Contract("stack_rows of zero parts".into()));
        }
        let d = self.vals[parts[0].0].len();
        let mut data = Vec::with_capacity(parts.len() * d);
        for p in parts {
            let t = &self.vals[p.0];
            if t.rank() != 1 || t.len() != d {
                return Err(dim_err("stack_rows", t.shape(), &[d]));
            }
            data.extend_from_slice(t.data());
        }
        let out = Tensor::from_vec(vec![parts.len(), d], data)?;
        Ok(self.push(out, Op::StackRows { parts: parts.to_vec() }))
    }

    /// Contiguous slice of the flattened data, returned as a vector.
    /// `slice(m, i*cols, cols)` extracts row `i` of a matrix.
    pub fn slice(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let t = &self.vals[a.0];
        if start + len > t.len() {
            return Err(dim_err("slice", t.shape(), &[start, len]));
        }
        let out = Tensor::vector(t.data()[start..start + len].to_vec());
        Ok(self.push(out, Op::Slice { a, start }))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let t = &self.vals[a.0];
        let out = Tensor::from_vec(t.shape().to_vec(), t.data().iter().map(|x| x.tanh()).collect())
            .expect("shape preserved");
        self.push(out, Op::Tanh { a })
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let t = &self.vals[a.0];
        let out = Tensor::from_vec(
            t.shape().to_vec(),
            t.data().iter().map(|x| 1.0 / (1.0 + (-x).exp())).collect(),
        )
        .expect("shape preserved");
        self.push(out, Op::Sigmoid { a })
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let t = &self.vals[a.0];
        let out = Tensor::from_vec(t.shape().to_vec(), t.data().iter().map(|x| x.max(0.0)).collect())
            .expect("shape preserved");
        self.push(out, Op::Relu { a })
    }

    /// Softmax along `axis` (0 for vectors; 0 = columns, 1 = rows for
    /// matrices). Stable under logits up to +-1e4.
    pub fn softmax(&mut self, a: Var, axis: usize) -> Result<Var> {
        let t = &self.vals[a.0];
        let out = apply_lanes(t, axis, softmax_lane)?;
        Ok(self.push(out, Op::Softmax { a, axis }))
    }

    pub fn log_softmax(&mut self, a: Var, axis: usize) -> Result<Var> {
        let t = &self.vals[a.0];
        let out = apply_lanes(t, axis, log_softmax_lane)?;
        Ok(self.push(out, Op::LogSoftmax { a, axis }))
    }

    /// Gathers rows of `table` at `ids`, producing an `[n, d]` matrix.
    pub fn embedding_lookup(&mut self, table: Var, ids: &[usize]) -> Result<Var> {
        let t = &self.vals[table.0];
        if t.rank() != 2 {
            return Err(dim_err("embedding_lookup", t.shape(), &[0, 0]));
        }
        let (v, d) = (t.shape()[0], t.shape()[1]);
        let mut data = Vec::with_capacity(ids.len() * d);
        for &id in ids {
            if id >= v {
                return Err(Error::Contract(format!(
                    "embedding id {id} out of range (table has {v} rows)"
                )));
            }
            data.extend_from_slice(&t.data()[id * d..(id + 1) * d]);
        }
        let out = Tensor::from_vec(vec![ids.len(), d], data)?;
        Ok(self.push(out, Op::Embedding { table, ids: ids.to_vec() }))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s: f64 = self.vals[a.0].data().iter().sum();
        self.push(Tensor::scalar(s), Op::Sum { a })
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let t = &self.vals[a.0];
        let m = t.data().iter().sum::<f64>() / t.len() as f64;
        self.push(Tensor::scalar(m), Op::Mean { a })
    }

    /// Negative log-likelihood of `index` under softmax of `logits`,
    /// computed in the log domain via log-sum-exp.
    pub fn cross_entropy(&mut self, logits: Var, index: usize) -> Result<Var> {
        let t = &self.vals[logits.0];
        if t.rank() != 1 {
            return Err(dim_err("cross_entropy", t.shape(), &[0]));
        }
        if index >= t.len() {
            return Err(Error::Contract(format!(
                "cross_entropy index {index} out of range for {} logits",
                t.len()
            )));
        }
        let x = t.data();
        let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + x.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        let loss = lse - x[index];
        Ok(self.push(Tensor::scalar(loss), Op::CrossEntropy { logits, index }))
    }

    /// Propagates gradients from scalar node `loss` back to every node.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.vals[loss.0].len() != 1 {
            return Err(Error::Contract("backward requires a scalar loss".into()));
        }
        self.grads = self.vals.iter().map(|t| Tensor::zeros(t.shape().to_vec())).collect();
        self.grads[loss.0].data_mut()[0] = 1.0;

        for idx in (0..=loss.0).rev() {
            if self.grads[idx].data().iter().all(|&g| g == 0.0) {
                continue;
            }
            // Take the output gradient by value to satisfy the borrow
            // checker while scattering into input gradients.
            let g = std::mem::replace(&mut self.grads[idx], Tensor::zeros(vec![0]));
            match &self.ops[idx] {
                Op::Leaf => {}
                Op::Matmul { a, b } => self.backward_matmul(*a, *b, idx, &g),
                Op::Add { a, b } => {
                    let (a, b) = (*a, *b);
                    let sb = self.vals[b.0].shape().to_vec();
                    accumulate(&mut self.grads[a.0], g.data());
                    if self.vals[a.0].shape() == sb.as_slice() {
                        accumulate(&mut self.grads[b.0], g.data());
                    } else {
                        // row-broadcast case: sum over rows
                        let d = sb[0];
                        let gb = self.grads[b.0].data_mut();
                        for (i, gv) in g.data().iter().enumerate() {
                            gb[i % d] += gv;
                        }
                    }
                }
                Op::Mul { a, b } => {
                    let (a, b) = (*a, *b);
                    let db: Vec<f64> =
                        g.data().iter().zip(self.vals[b.0].data()).map(|(g, y)| g * y).collect();
                    let da: Vec<f64> =
                        g.data().iter().zip(self.vals[a.0].data()).map(|(g, x)| g * x).collect();
                    accumulate(&mut self.grads[a.0], &db);
                    accumulate(&mut self.grads[b.0], &da);
                }
                Op::Concat { parts } => {
                    let parts = parts.clone();
                    let mut off = 0;
                    for p in parts {
                        let len = self.vals[p.0].len();
                        accumulate(&mut self.grads[p.0], &g.data()[off..off + len]);
                        off += len;
                    }
                }
                Op::StackRows { parts } => {
                    let parts = parts.clone();
                    let d = self.vals[parts[0].0].len();
                    for (i, p) in parts.iter().enumerate() {
                        accumulate(&mut self.grads[p.0], &g.data()[i * d..(i + 1) * d]);
                    }
                }
                Op::Slice { a, start } => {
                    let (a, start) = (*a, *start);
                    let ga = self.grads[a.0].data_mut();
                    for (j, gv) in g.data().iter().enumerate() {
                        ga[start + j] += gv;
                    }
                }
                Op::Tanh { a } => {
                    let a = *a;
                    let y = self.vals[idx].data();
                    let da: Vec<f64> =
                        g.data().iter().zip(y).map(|(g, y)| g * (1.0 - y * y)).collect();
                    accumulate(&mut self.grads[a.0], &da);
                }
                Op::Sigmoid { a } => {
                    let a = *a;
                    let y = self.vals[idx].data();
                    let da: Vec<f64> =
                        g.data().iter().zip(y).map(|(g, y)| g * y * (1.0 - y)).collect();
                    accumulate(&mut self.grads[a.0], &da);
                }
                Op::Relu { a } => {
                    let a = *a;
                    let x = self.vals[a.0].data();
                    let da: Vec<f64> =
                        g.data().iter().zip(x).map(|(g, x)| if *x > 0.0 { *g } else { 0.0 }).collect();
                    accumulate(&mut self.grads[a.0], &da);
                }
                Op::Softmax { a, axis } => {
                    let (a, axis) = (*a, *axis);
                    let y = self.vals[idx].clone();
                    let da = softmax_backward(&y, &g, axis);
                    accumulate(&mut self.grads[a.0], &da);
                }
                Op::LogSoftmax { a, axis } => {
                    let (a, axis) = (*a, *axis);
                    let y = self.vals[idx].clone();
                    let da = log_softmax_backward(&y, &g, axis);
                    accumulate(&mut self.grads[a.0], &da);
                }
                Op::Embedding { table, ids } => {
                    let (table, ids) = (*table, ids.clone());
                    let d = self.vals[table.0].shape()[1];
                    let gt = self.grads[table.0].data_mut();
                    for (i, id) in ids.iter().enumerate() {
                        for j in 0..d {
                            gt[id * d + j] += g.data()[i * d + j];
                        }
                    }
                }
                Op::Sum { a } => {
                    let a = *a;
                    let gv = g.data()[0];
                    for x in self.grads[a.0].data_mut() {
                        *x += gv;
                    }
                }
                Op::Mean { a } => {
                    let a = *a;
                    let n = self.vals[a.0].len() as f64;
                    let gv = g.data()[0] / n;
                    for x in self.grads[a.0].data_mut() {
                        *x += gv;
                    }
                }
                Op::CrossEntropy { logits, index } => {
                    let (logits, index) = (*logits, *index);
                    let x = self.vals[logits.0].data();
                    let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let z: f64 = x.iter().map(|v| (v - m).exp()).sum();
                    let gv = g.data()[0];
                    let gl = self.grads[logits.0].data_mut();
                    for (j, xv) in x.iter().enumerate() {
                        let p = (xv - m).exp() / z;
                        gl[j] += gv * (p - if j == index { 1.0 } else { 0.0 });
                    }
                }
            }
        }
        Ok(())
    }

    fn backward_matmul(&mut self, a: Var, b: Var, out_idx: usize, g: &Tensor) {
        let sa = self.vals[a.0].shape().to_vec();
        let sb = self.vals[b.0].shape().to_vec();
        let da = self.vals[a.0].data().to_vec();
        let db = self.vals[b.0].data().to_vec();
        let _ = out_idx;
        match (sa.as_slice(), sb.as_slice()) {
            ([r, c], [_, k]) => {
                let (r, c, k) = (*r, *c, *k);
                // dA = G * B^T
                {
                    let ga = self.grads[a.0].data_mut();
                    for i in 0..r {
                        for l in 0..c {
                            let brow = &db[l * k..(l + 1) * k];
                            let grow = &g.data()[i * k..(i + 1) * k];
                            let mut acc = 0.0;
                            for j in 0..k {
                                acc += grow[j] * brow[j];
                            }
                            ga[i * c + l] += acc;
                        }
                    }
                }
                // dB = A^T * G
                {
                    let gb = self.grads[b.0].data_mut();
                    for l in 0..c {
                        for i in 0..r {
                            let aval = da[i * c + l];
                            if aval == 0.0 {
                                continue;
                            }
                            let grow = &g.data()[i * k..(i + 1) * k];
                            let gbrow = &mut gb[l * k..(l + 1) * k];
                            for j in 0..k {
                                gbrow[j] += aval * grow[j];
                            }
                        }
                    }
                }
            }
            ([r, c], [_]) => {
                let (r, c) = (*r, *c);
                {
                    let ga = self.grads[a.0].data_mut();
                    for i in 0..r {
                        let gv = g.data()[i];
                        if gv == 0.0 {
                            continue;
                        }
                        for l in 0..c {
                            ga[i * c + l] += gv * db[l];
                        }
                    }
                }
                {
                    let gb = self.grads[b.0].data_mut();
                    for i in 0..r {
                        let gv = g.data()[i];
                        if gv == 0.0 {
                            continue;
                        }
                        let arow = &da[i * c..(i + 1) * c];
                        for l in 0..c {
                            gb[l] += gv * arow[l];
                        }
                    }
                }
            }
            ([n], [_, d]) => {
                let (n, d) = (*n, *d);
                {
                    let ga = self.grads[a.0].data_mut();
                    for l in 0..n {
                        let brow = &db[l * d..(l + 1) * d];
                        let mut acc = 0.0;
                        for j in 0..d {
                            acc += g.data()[j] * brow[j];
                        }
                        ga[l] += acc;
                    }
                }
                {
                    let gb = self.grads[b.0].data_mut();
                    for l in 0..n {
                        let aval = da[l];
                        if aval == 0.0 {
                            continue;
                        }
                        let gbrow = &mut gb[l * d..(l + 1) * d];
                        for j in 0..d {
                            gbrow[j] += aval * g.data()[j];
                        }
                    }
                }
            }
            ([_], [_]) => {
                let gv = g.data()[0];
                {
                    let ga = self.grads[a.0].data_mut();
                    for (x, y) in ga.iter_mut().zip(&db) {
                        *x += gv * y;
                    }
                }
                {
                    let gb = self.grads[b.0].data_mut();
                    for (x, y) in gb.iter_mut().zip(&da) {
                        *x += gv * y;
                    }
                }
            }
            _ => unreachable!("matmul forward validated shapes"),
        }
    }
}

fn accumulate(dst: &mut Tensor, src: &[f64]) {
    for (d, s) in dst.data_mut().iter_mut().zip(src) {
        *d += s;
    }
}

fn softmax_lane(lane: &mut [f64]) {
    let m = lane.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for v in lane.iter_mut() {
        *v = (*v - m).exp();
        z += *v;
    }
    for v in lane.iter_mut() {
        *v /= z;
    }
}

fn log_softmax_lane(lane: &mut [f64]) {
    let m = lane.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + lane.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    for v in lane.iter_mut() {
        *v -= lse;
    }
}

/// Applies a lane transform along `axis`. Vectors use axis 0; matrices use
/// axis 1 for rows and axis 0 for columns.
fn apply_lanes(t: &Tensor, axis: usize, f: fn(&mut [f64])) -> Result<Tensor> {
    let mut out = t.clone();
    out.requires_grad = false;
    match (t.rank(), axis) {
        (1, 0) => f(out.data_mut()),
        (2, 1) => {
            let d = t.shape()[1];
            for row in out.data_mut().chunks_mut(d) {
                f(row);
            }
        }
        (2, 0) => {
            let (n, d) = (t.shape()[0], t.shape()[1]);
            for j in 0..d {
                let mut lane: Vec<f64> = (0..n).map(|i| t.data()[i * d + j]).collect();
                f(&mut lane);
                for i in 0..n {
                    out.data_mut()[i * d + j] = lane[i];
                }
            }
        }
        _ => return Err(Error::Dimension { op: "softmax", lhs: t.shape().to_vec(), rhs: vec![axis] }),
    }
    Ok(out)
}

fn lanes_backward(
    y: &Tensor,
    g: &Tensor,
    axis: usize,
    lane_fn: fn(&[f64], &[f64], &mut [f64]),
) -> Vec<f64> {
    let mut out = vec![0.0; y.len()];
    match (y.rank(), axis) {
        (1, 0) => lane_fn(y.data(), g.data(), &mut out),
        (2, 1) => {
            let d = y.shape()[1];
            for i in 0..y.shape()[0] {
                lane_fn(
                    &y.data()[i * d..(i + 1) * d],
                    &g.data()[i * d..(i + 1) * d],
                    &mut out[i * d..(i + 1) * d],
                );
            }
        }
        (2, 0) => {
            let (n, d) = (y.shape()[0], y.shape()[1]);
            for j in 0..d {
                let ylane: Vec<f64> = (0..n).map(|i| y.data()[i * d + j]).collect();
                let glane: Vec<f64> = (0..n).map(|i| g.data()[i * d + j]).collect();
                let mut olane = vec![0.0; n];
                lane_fn(&ylane, &glane, &mut olane);
                for i in 0..n {
                    out[i * d + j] = olane[i];
                }
            }
        }
        _ => unreachable!("validated in forward"),
    }
    out
}

fn softmax_backward(y: &Tensor, g: &Tensor, axis: usize) -> Vec<f64> {
    fn lane(y: &[f64], g: &[f64], out: &mut [f64]) {
        let dot: f64 = y.iter().zip(g).map(|(y, g)| y * g).sum();
        for i in 0..y.len() {
            out[i] = y[i] * (g[i] - dot);
        }
    }
    lanes_backward(y, g, axis, lane)
}

fn log_softmax_backward(y: &Tensor, g: &Tensor, axis: usize) -> Vec<f64> {
    fn lane(y: &[f64], g: &[f64], out: &mut [f64]) {
        let gsum: f64 = g.iter().sum();
        for i in 0..y.len() {
            out[i] = g[i] - y[i].exp() * gsum;
        }
    }
    lanes_backward(y, g, axis, lane)
}
