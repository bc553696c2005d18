use std::collections::HashMap;
use std::sync::Arc;

use super::{GradStore, ParamId, ParamStore, Tensor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Handle to a node of a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

enum Value<T> {
    Owned(Tensor<T>),
    Param(ParamId),
}

enum Op<T> {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    AddBias(Var, Var),
    Mul(Var, Var),
    MulCol(Var, Var),
    Scale(Var, T),
    Mask(Var, Arc<Vec<T>>),
    Tanh(Var),
    Sigmoid(Var),
    Relu(Var),
    LeakyRelu(Var, T),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    SliceCols(Var, usize, usize),
    SliceRows(Var, usize, usize),
    SelectRows(Var, Arc<Vec<usize>>),
    Transpose(Var),
    SumAll(Var),
    RowSums(Var),
    MeanRows(Var),
    SoftmaxRows(Var),
    CrossEntropy {
        logits: Var,
        targets: Arc<Vec<Option<usize>>>,
        denom: T,
    },
}

/// How [`Graph::cross_entropy`] reduces over rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reduction {
    Mean,
    Sum,
}

/// Append-only computation record; backward runs in reverse insertion order
/// and accumulates gradients.
pub struct Graph<'p, T: Scalar> {
    store: &'p ParamStore<T>,
    values: Vec<Value<T>>,
    ops: Vec<Op<T>>,
    needs_grad: Vec<bool>,
    grads: Vec<Option<Vec<T>>>,
    param_nodes: HashMap<ParamId, Var>,
    train: bool,
}

fn shape_err(op: &'static str, a: [usize; 2], b: [usize; 2]) -> Error {
    Error::Shape {
        op,
        left: a.to_vec(),
        right: b.to_vec(),
    }
}

impl<'p, T: Scalar> Graph<'p, T> {
    /// New graph reading parameters from `store`. `train` enables dropout.
    pub fn new(store: &'p ParamStore<T>, train: bool) -> Self {
        Graph {
            store,
            values: Vec::new(),
            ops: Vec::new(),
            needs_grad: Vec::new(),
            grads: Vec::new(),
            param_nodes: HashMap::new(),
            train,
        }
    }

    pub fn is_training(&self) -> bool {
        self.train
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn store(&self) -> &'p ParamStore<T> {
        self.store
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        match &self.values[v.0] {
            Value::Owned(t) => t,
            Value::Param(id) => self.store.get(*id),
        }
    }

    /// First element of a node's value; meant for `[1, 1]` losses.
    pub fn scalar(&self, v: Var) -> T {
        self.value(v).data()[0]
    }

    fn dims(&self, v: Var) -> [usize; 2] {
        self.value(v).dims()
    }

    pub fn grad(&self, v: Var) -> Option<&[T]> {
        self.grads[v.0].as_deref()
    }

    fn push(&mut self, value: Value<T>, op: Op<T>, needs_grad: bool) -> Var {
        self.values.push(value);
        self.ops.push(op);
        self.needs_grad.push(needs_grad);
        self.grads.push(None);
        Var(self.ops.len() - 1)
    }

    fn push_owned(&mut self, t: Tensor<T>, op: Op<T>, inputs: &[Var]) -> Var {
        let ng = inputs.iter().any(|v| self.needs_grad[v.0]);
        self.push(Value::Owned(t), op, ng)
    }

    /// Constant input: no gradient flows into it.
    pub fn constant(&mut self, t: Tensor<T>) -> Var {
        self.push(Value::Owned(t), Op::Leaf, false)
    }

    /// Input leaf whose gradient is recorded.
    pub fn input(&mut self, t: Tensor<T>) -> Var {
        self.push(Value::Owned(t), Op::Leaf, true)
    }

    /// Parameter leaf. Repeated calls return the same node.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(&v) = self.param_nodes.get(&id) {
            return v;
        }
        let trainable = self.store.is_trainable(id);
        let v = self.push(Value::Param(id), Op::Leaf, trainable);
        self.param_nodes.insert(id, v);
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let ([m, k], [k2, n]) = (self.dims(a), self.dims(b));
        if k != k2 {
            return Err(shape_err("matmul", [m, k], [k2, n]));
        }
        let mut out = vec![T::zero(); m * n];
        T::gemm(
            m,
            k,
            n,
            T::one(),
            self.value(a).data(),
            false,
            self.value(b).data(),
            false,
            T::zero(),
            &mut out,
        );
        let t = Tensor::matrix(m, n, out)?;
        Ok(self.push_owned(t, Op::MatMul(a, b), &[a, b]))
    }

    fn zip_same(&mut self, a: Var, b: Var, name: &'static str, f: impl Fn(T, T) -> T) -> Result<Tensor<T>> {
        let (da, db) = (self.dims(a), self.dims(b));
        if da != db {
            return Err(shape_err(name, da, db));
        }
        let data = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(&x, &y)| f(x, y))
            .collect();
        Tensor::matrix(da[0], da[1], data)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let t = self.zip_same(a, b, "add", |x, y| x + y)?;
        Ok(self.push_owned(t, Op::Add(a, b), &[a, b]))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let t = self.zip_same(a, b, "mul", |x, y| x * y)?;
        Ok(self.push_owned(t, Op::Mul(a, b), &[a, b]))
    }

    /// `a + bias` with a `[1, n]` bias broadcast over rows.
    pub fn add_bias(&mut self, a: Var, bias: Var) -> Result<Var> {
        let ([m, n], db) = (self.dims(a), self.dims(bias));
        if db != [1, n] {
            return Err(shape_err("add_bias", [m, n], db));
        }
        let b = self.value(bias).data();
        let data = self
            .value(a)
            .data()
            .chunks(n)
            .flat_map(|row| row.iter().zip(b).map(|(&x, &y)| x + y))
            .collect();
        let t = Tensor::matrix(m, n, data)?;
        Ok(self.push_owned(t, Op::AddBias(a, bias), &[a, bias]))
    }

    /// Scales each row of `a` by the matching entry of the `[m, 1]` column.
    pub fn mul_col(&mut self, a: Var, col: Var) -> Result<Var> {
        let ([m, n], dc) = (self.dims(a), self.dims(col));
        if dc != [m, 1] {
            return Err(shape_err("mul_col", [m, n], dc));
        }
        let c = self.value(col).data();
        let data = self
            .value(a)
            .data()
            .chunks(n.max(1))
            .zip(c)
            .flat_map(|(row, &s)| row.iter().map(move |&x| x * s))
            .collect();
        let t = Tensor::matrix(m, n, data)?;
        Ok(self.push_owned(t, Op::MulCol(a, col), &[a, col]))
    }

    pub fn scale(&mut self, a: Var, factor: T) -> Var {
        let t = self.value(a).map(|x| x * factor).reshape_matrix();
        self.push_owned(t, Op::Scale(a, factor), &[a])
    }

    /// Elementwise product with a constant mask of the same size.
    pub fn mask(&mut self, a: Var, mask: Arc<Vec<T>>) -> Result<Var> {
        let [m, n] = self.dims(a);
        if mask.len() != m * n {
            return Err(shape_err("mask", [m, n], [mask.len(), 1]));
        }
        let data = self
            .value(a)
            .data()
            .iter()
            .zip(mask.iter())
            .map(|(&x, &k)| x * k)
            .collect();
        let t = Tensor::matrix(m, n, data)?;
        Ok(self.push_owned(t, Op::Mask(a, mask), &[a]))
    }

    fn unary(&mut self, a: Var, f: impl Fn(T) -> T, op: Op<T>) -> Var {
        let t = self.value(a).map(f).reshape_matrix();
        self.push_owned(t, op, &[a])
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(a, |x| x.tanh(), Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(a, sigmoid, Op::Sigmoid(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.unary(a, |x| if x > T::zero() { x } else { T::zero() }, Op::Relu(a))
    }

    pub fn leaky_relu(&mut self, a: Var, slope: T) -> Var {
        self.unary(
            a,
            move |x| if x > T::zero() { x } else { x * slope },
            Op::LeakyRelu(a, slope),
        )
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let first = *parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("concat of nothing".into()))?;
        let m = self.dims(first)[0];
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let d = self.dims(p);
            if d[0] != m {
                return Err(shape_err("concat_cols", self.dims(first), d));
            }
            widths.push(d[1]);
        }
        let n: usize = widths.iter().sum();
        let mut data = Vec::with_capacity(m * n);
        for r in 0..m {
            for &p in parts {
                data.extend_from_slice(self.value(p).row(r));
            }
        }
        let t = Tensor::matrix(m, n, data)?;
        Ok(self.push_owned(t, Op::ConcatCols(parts.to_vec()), parts))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let first = *parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("concat of nothing".into()))?;
        let n = self.dims(first)[1];
        let mut data = Vec::new();
        let mut m = 0;
        for &p in parts {
            let d = self.dims(p);
            if d[1] != n {
                return Err(shape_err("concat_rows", self.dims(first), d));
            }
            m += d[0];
            data.extend_from_slice(self.value(p).data());
        }
        let t = Tensor::matrix(m, n, data)?;
        Ok(self.push_owned(t, Op::ConcatRows(parts.to_vec()), parts))
    }

    /// Columns `start..end`.
    pub fn slice_cols(&mut self, a: Var, start: usize, end: usize) -> Result<Var> {
        let [m, n] = self.dims(a);
        if start > end || end > n {
            return Err(shape_err("slice_cols", [m, n], [start, end]));
        }
        let data = self
            .value(a)
            .data()
            .chunks(n.max(1))
            .take(m)
            .flat_map(|row| row[start..end].iter().copied())
            .collect();
        let t = Tensor::matrix(m, end - start, data)?;
        Ok(self.push_owned(t, Op::SliceCols(a, start, end), &[a]))
    }

    /// Rows `start..end`.
    pub fn slice_rows(&mut self, a: Var, start: usize, end: usize) -> Result<Var> {
        let [m, n] = self.dims(a);
        if start > end || end > m {
            return Err(shape_err("slice_rows", [m, n], [start, end]));
        }
        let data = self.value(a).data()[start * n..end * n].to_vec();
        let t = Tensor::matrix(end - start, n, data)?;
        Ok(self.push_owned(t, Op::SliceRows(a, start, end), &[a]))
    }

    /// Gathers rows by index; with a parameter table this is an embedding
    /// lookup.
    pub fn select_rows(&mut self, a: Var, idx: &[usize]) -> Result<Var> {
        let [m, n] = self.dims(a);
        if let Some(&bad) = idx.iter().find(|&&i| i >= m) {
            return Err(shape_err("select_rows", [m, n], [bad, 1]));
        }
        let src = self.value(a);
        let mut data = Vec::with_capacity(idx.len() * n);
        for &i in idx {
            data.extend_from_slice(src.row(i));
        }
        let t = Tensor::matrix(idx.len(), n, data)?;
        Ok(self.push_owned(t, Op::SelectRows(a, Arc::new(idx.to_vec())), &[a]))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let [m, n] = self.dims(a);
        let src = self.value(a).data();
        let mut data = vec![T::zero(); m * n];
        for i in 0..m {
            for j in 0..n {
                data[j * m + i] = src[i * n + j];
            }
        }
        let t = Tensor::matrix(n, m, data).expect("transpose keeps size");
        self.push_owned(t, Op::Transpose(a), &[a])
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data().iter().copied().sum();
        self.push_owned(Tensor::scalar(s), Op::SumAll(a), &[a])
    }

    /// `[m, n] -> [m, 1]` row sums.
    pub fn row_sums(&mut self, a: Var) -> Var {
        let [m, n] = self.dims(a);
        let data = (0..m)
            .map(|r| self.value(a).data()[r * n..(r + 1) * n].iter().copied().sum())
            .collect();
        let t = Tensor::matrix(m, 1, data).expect("row sums");
        self.push_owned(t, Op::RowSums(a), &[a])
    }

    /// `[m, n] -> [1, n]` mean over rows.
    pub fn mean_rows(&mut self, a: Var) -> Result<Var> {
        let [m, n] = self.dims(a);
        if m == 0 {
            return Err(Error::Empty("mean over zero rows".into()));
        }
        let inv = T::one() / T::lit(m as f64);
        let src = self.value(a).data();
        let mut data = vec![T::zero(); n];
        for r in 0..m {
            for (acc, &x) in data.iter_mut().zip(&src[r * n..(r + 1) * n]) {
                *acc = *acc + x;
            }
        }
        for x in &mut data {
            *x = *x * inv;
        }
        let t = Tensor::matrix(1, n, data)?;
        Ok(self.push_owned(t, Op::MeanRows(a), &[a]))
    }

    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let [m, n] = self.dims(a);
        let mut data = self.value(a).data().to_vec();
        for r in 0..m {
            softmax_in_place(&mut data[r * n..(r + 1) * n]);
        }
        let t = Tensor::matrix(m, n, data).expect("softmax keeps size");
        self.push_owned(t, Op::SoftmaxRows(a), &[a])
    }

    /// Negative log-likelihood of `targets` under row-wise softmax of
    /// `logits`. Rows whose target is `None` are skipped.
    pub fn cross_entropy(
        &mut self,
        logits: Var,
        targets: &[Option<usize>],
        reduction: Reduction,
    ) -> Result<Var> {
        let [m, k] = self.dims(logits);
        if targets.len() != m {
            return Err(shape_err("cross_entropy", [m, k], [targets.len(), 1]));
        }
        if let Some(&bad) = targets.iter().flatten().find(|&&t| t >= k) {
            return Err(Error::InvalidArgument(format!(
                "cross_entropy target {bad} out of range 0..{k}"
            )));
        }
        let active = targets.iter().flatten().count();
        if active == 0 {
            return Err(Error::Empty("cross_entropy: every position is masked".into()));
        }
        let src = self.value(logits).data();
        let mut total = T::zero();
        for (r, t) in targets.iter().enumerate() {
            if let Some(t) = *t {
                let row = &src[r * k..(r + 1) * k];
                total = total + log_sum_exp(row) - row[t];
            }
        }
        let denom = match reduction {
            Reduction::Mean => T::lit(active as f64),
            Reduction::Sum => T::one(),
        };
        let loss = total / denom;
        Ok(self.push_owned(
            Tensor::scalar(loss),
            Op::CrossEntropy {
                logits,
                targets: Arc::new(targets.to_vec()),
                denom,
            },
            &[logits],
        ))
    }

    /// `x W yᵀ` for `x: [m, p]`, `W: [p, q]`, `y: [n, q]`, giving `[m, n]`.
    pub fn bilinear(&mut self, x: Var, w: Var, y: Var) -> Result<Var> {
        let xw = self.matmul(x, w)?;
        let yt = self.transpose(y);
        self.matmul(xw, yt)
    }

    /// Appends a constant column of ones: `[m, n] -> [m, n + 1]`.
    pub fn append_ones(&mut self, a: Var) -> Result<Var> {
        let m = self.dims(a)[0];
        let ones = self.constant(Tensor::filled(vec![m, 1], T::one()));
        self.concat_cols(&[a, ones])
    }

    /// Dropout with inverted scaling. Identity outside training or at rate 0.
    pub fn dropout<R: rand::Rng + ?Sized>(&mut self, a: Var, rate: f64, rng: &mut R) -> Result<Var> {
        if !self.train || rate <= 0.0 {
            return Ok(a);
        }
        let len = self.value(a).len();
        let mask = bernoulli_mask::<T, R>(len, rate, rng);
        self.mask(a, Arc::new(mask))
    }

    /// Dropout whose `[1, n]` mask is shared by every row ("same mask"
    /// across time steps).
    pub fn shared_dropout<R: rand::Rng + ?Sized>(&mut self, a: Var, rate: f64, rng: &mut R) -> Result<Var> {
        if !self.train || rate <= 0.0 {
            return Ok(a);
        }
        let [m, n] = self.dims(a);
        let row = bernoulli_mask::<T, R>(n, rate, rng);
        let mask: Vec<T> = (0..m).flat_map(|_| row.iter().copied()).collect();
        self.mask(a, Arc::new(mask))
    }

    /// Reverse pass from a `[1, 1]` node, accumulating into every node that
    /// needs a gradient.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.dims(loss) != [1, 1] {
            return Err(shape_err("backward", self.dims(loss), [1, 1]));
        }
        accumulate(&mut self.grads[loss.0], 1, |g| g[0] = g[0] + T::one());
        for i in (0..=loss.0).rev() {
            if !self.needs_grad[i] {
                continue;
            }
            let Some(gout) = self.grads[i].take() else {
                continue;
            };
            self.propagate(i, &gout);
            self.grads[i] = Some(gout);
        }
        Ok(())
    }

    /// Drops all recorded gradients.
    pub fn zero_grads(&mut self) {
        for g in &mut self.grads {
            *g = None;
        }
    }

    /// Gradients of parameter nodes, keyed by parameter.
    pub fn param_grads(&self) -> Vec<(ParamId, &[T])> {
        let mut out: Vec<(ParamId, &[T])> = self
            .param_nodes
            .iter()
            .filter_map(|(&id, &v)| self.grads[v.0].as_deref().map(|g| (id, g)))
            .collect();
        out.sort_by_key(|(id, _)| *id);
        out
    }

    /// Adds this graph's parameter gradients into `acc`.
    pub fn accumulate_into(&self, acc: &mut GradStore<T>) {
        for (id, g) in self.param_grads() {
            acc.add(id, g);
        }
    }

    fn propagate(&mut self, i: usize, gout: &[T]) {
        // Split borrows: values/ops are read, grads are written.
        let values = &self.values;
        let store = self.store;
        let val = |v: Var| -> &Tensor<T> {
            match &values[v.0] {
                Value::Owned(t) => t,
                Value::Param(id) => store.get(*id),
            }
        };
        let needs = &self.needs_grad;
        let grads = &mut self.grads;
        let out = val(Var(i));
        let [m, n] = out.dims();

        match &self.ops[i] {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let [_, k] = val(*a).dims();
                if needs[a.0] {
                    let bv = val(*b).data();
                    accumulate(&mut grads[a.0], m * k, |g| {
                        T::gemm(m, n, k, T::one(), gout, false, bv, true, T::one(), g)
                    });
                }
                if needs[b.0] {
                    let av = val(*a).data();
                    accumulate(&mut grads[b.0], k * n, |g| {
                        T::gemm(k, m, n, T::one(), av, true, gout, false, T::one(), g)
                    });
                }
            }
            Op::Add(a, b) => {
                for v in [a, b] {
                    if needs[v.0] {
                        accumulate(&mut grads[v.0], m * n, |g| add_into(g, gout));
                    }
                }
            }
            Op::AddBias(a, b) => {
                if needs[a.0] {
                    accumulate(&mut grads[a.0], m * n, |g| add_into(g, gout));
                }
                if needs[b.0] {
                    accumulate(&mut grads[b.0], n, |g| {
                        for row in gout.chunks(n) {
                            add_into(g, row);
                        }
                    });
                }
            }
            Op::Mul(a, b) => {
                if needs[a.0] {
                    let bv = val(*b).data();
                    accumulate(&mut grads[a.0], m * n, |g| {
                        for ((x, &d), &y) in g.iter_mut().zip(gout).zip(bv) {
                            *x = *x + d * y;
                        }
                    });
                }
                if needs[b.0] {
                    let av = val(*a).data();
                    accumulate(&mut grads[b.0], m * n, |g| {
                        for ((x, &d), &y) in g.iter_mut().zip(gout).zip(av) {
                            *x = *x + d * y;
                        }
                    });
                }
            }
            Op::MulCol(a, c) => {
                let av = val(*a).data();
                let cv = val(*c).data();
                if needs[a.0] {
                    accumulate(&mut grads[a.0], m * n, |g| {
                        for r in 0..m {
                            for j in 0..n {
                                g[r * n + j] = g[r * n + j] + gout[r * n + j] * cv[r];
                            }
                        }
                    });
                }
                if needs[c.0] {
                    accumulate(&mut grads[c.0], m, |g| {
                        for r in 0..m {
                            let mut s = T::zero();
                            for j in 0..n {
                                s = s + gout[r * n + j] * av[r * n + j];
                            }
                            g[r] = g[r] + s;
                        }
                    });
                }
            }
            Op::Scale(a, f) => {
                let f = *f;
                accumulate(&mut grads[a.0], m * n, |g| {
                    for (x, &d) in g.iter_mut().zip(gout) {
                        *x = *x + d * f;
                    }
                });
            }
            Op::Mask(a, mask) => {
                accumulate(&mut grads[a.0], m * n, |g| {
                    for ((x, &d), &k) in g.iter_mut().zip(gout).zip(mask.iter()) {
                        *x = *x + d * k;
                    }
                });
            }
            Op::Tanh(a) => {
                let y = out.data();
                accumulate(&mut grads[a.0], m * n, |g| {
                    for ((x, &d), &y) in g.iter_mut().zip(gout).zip(y) {
                        *x = *x + d * (T::one() - y * y);
                    }
                });
            }
            Op::Sigmoid(a) => {
                let y = out.data();
                accumulate(&mut grads[a.0], m * n, |g| {
                    for ((x, &d), &y) in g.iter_mut().zip(gout).zip(y) {
                        *x = *x + d * y * (T::one() - y);
                    }
                });
            }
            Op::Relu(a) => {
                let xin = val(*a).data();
                accumulate(&mut grads[a.0], m * n, |g| {
                    for ((x, &d), &v) in g.iter_mut().zip(gout).zip(xin) {
                        if v > T::zero() {
                            *x = *x + d;
                        }
                    }
                });
            }
            Op::LeakyRelu(a, slope) => {
                let slope = *slope;
                let xin = val(*a).data();
                accumulate(&mut grads[a.0], m * n, |g| {
                    for ((x, &d), &v) in g.iter_mut().zip(gout).zip(xin) {
                        *x = *x + if v > T::zero() { d } else { d * slope };
                    }
                });
            }
            Op::ConcatCols(parts) => {
                let mut offset = 0;
                for p in parts {
                    let w = val(*p).dims()[1];
                    if needs[p.0] {
                        accumulate(&mut grads[p.0], m * w, |g| {
                            for r in 0..m {
                                add_into(
                                    &mut g[r * w..(r + 1) * w],
                                    &gout[r * n + offset..r * n + offset + w],
                                );
                            }
                        });
                    }
                    offset += w;
                }
            }
            Op::ConcatRows(parts) => {
                let mut offset = 0;
                for p in parts {
                    let rows = val(*p).dims()[0];
                    if needs[p.0] {
                        accumulate(&mut grads[p.0], rows * n, |g| {
                            add_into(g, &gout[offset * n..(offset + rows) * n])
                        });
                    }
                    offset += rows;
                }
            }
            Op::SliceCols(a, start, end) => {
                let w = val(*a).dims()[1];
                let rows = m;
                let (start, end) = (*start, *end);
                accumulate(&mut grads[a.0], rows * w, |g| {
                    for r in 0..rows {
                        add_into(
                            &mut g[r * w + start..r * w + end],
                            &gout[r * (end - start)..(r + 1) * (end - start)],
                        );
                    }
                });
            }
            Op::SliceRows(a, start, _end) => {
                let total = val(*a).len();
                let start = *start;
                accumulate(&mut grads[a.0], total, |g| {
                    add_into(&mut g[start * n..start * n + gout.len()], gout)
                });
            }
            Op::SelectRows(a, idx) => {
                let total = val(*a).len();
                accumulate(&mut grads[a.0], total, |g| {
                    for (r, &src) in idx.iter().enumerate() {
                        add_into(&mut g[src * n..(src + 1) * n], &gout[r * n..(r + 1) * n]);
                    }
                });
            }
            Op::Transpose(a) => {
                // out is [m, n]; input is [n, m]
                accumulate(&mut grads[a.0], m * n, |g| {
                    for i in 0..m {
                        for j in 0..n {
                            g[j * m + i] = g[j * m + i] + gout[i * n + j];
                        }
                    }
                });
            }
            Op::SumAll(a) => {
                let total = val(*a).len();
                let d = gout[0];
                accumulate(&mut grads[a.0], total, |g| {
                    for x in g.iter_mut() {
                        *x = *x + d;
                    }
                });
            }
            Op::RowSums(a) => {
                let w = val(*a).dims()[1];
                accumulate(&mut grads[a.0], m * w, |g| {
                    for r in 0..m {
                        for x in &mut g[r * w..(r + 1) * w] {
                            *x = *x + gout[r];
                        }
                    }
                });
            }
            Op::MeanRows(a) => {
                let [rows, w] = val(*a).dims();
                let inv = T::one() / T::lit(rows as f64);
                accumulate(&mut grads[a.0], rows * w, |g| {
                    for r in 0..rows {
                        for j in 0..w {
                            g[r * w + j] = g[r * w + j] + gout[j] * inv;
                        }
                    }
                });
            }
            Op::SoftmaxRows(a) => {
                let y = out.data();
                accumulate(&mut grads[a.0], m * n, |g| {
                    for r in 0..m {
                        let yr = &y[r * n..(r + 1) * n];
                        let gr = &gout[r * n..(r + 1) * n];
                        let dot: T = yr.iter().zip(gr).map(|(&a, &b)| a * b).sum();
                        for j in 0..n {
                            g[r * n + j] = g[r * n + j] + yr[j] * (gr[j] - dot);
                        }
                    }
                });
            }
            Op::CrossEntropy {
                logits,
                targets,
                denom,
            } => {
                let lv = val(*logits);
                let [rows, k] = lv.dims();
                let scale = gout[0] / *denom;
                let src = lv.data();
                accumulate(&mut grads[logits.0], rows * k, |g| {
                    let mut probs = vec![T::zero(); k];
                    for (r, t) in targets.iter().enumerate() {
                        let Some(t) = *t else { continue };
                        probs.copy_from_slice(&src[r * k..(r + 1) * k]);
                        softmax_in_place(&mut probs);
                        for j in 0..k {
                            let target = if j == t { T::one() } else { T::zero() };
                            g[r * k + j] = g[r * k + j] + scale * (probs[j] - target);
                        }
                    }
                });
            }
        }
    }
}

fn accumulate<T: Scalar>(slot: &mut Option<Vec<T>>, len: usize, f: impl FnOnce(&mut [T])) {
    let g = slot.get_or_insert_with(|| vec![T::zero(); len]);
    f(g);
}

fn add_into<T: Scalar>(dst: &mut [T], src: &[T]) {
    for (x, &y) in dst.iter_mut().zip(src) {
        *x = *x + y;
    }
}

pub(crate) fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

fn log_sum_exp<T: Scalar>(row: &[T]) -> T {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    if !max.is_finite() {
        return max;
    }
    let s: T = row.iter().map(|&x| (x - max).exp()).sum();
    max + s.ln()
}

pub(crate) fn softmax_in_place<T: Scalar>(row: &mut [T]) {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    let mut s = T::zero();
    for x in row.iter_mut() {
        *x = (*x - max).exp();
        s = s + *x;
    }
    for x in row.iter_mut() {
        *x = *x / s;
    }
}

fn bernoulli_mask<T: Scalar, R: rand::Rng + ?Sized>(len: usize, rate: f64, rng: &mut R) -> Vec<T> {
    let keep = T::lit(1.0 / (1.0 - rate));
    (0..len)
        .map(|_| {
            if rng.random::<f64>() < rate {
                T::zero()
            } else {
                keep
            }
        })
        .collect()
}

trait ReshapeMatrix {
    fn reshape_matrix(self) -> Self;
}

impl<T: Scalar> ReshapeMatrix for Tensor<T> {
    fn reshape_matrix(self) -> Self {
        let [m, n] = self.dims();
        self.reshape(vec![m, n]).expect("same size")
    }
}
