use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};

use super::{Graph, ParamId, ParamStore, Tensor, Var};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Uniform in `±sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform<T: Scalar, R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Tensor<T> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols)
        .map(|_| T::lit(rng.random_range(-bound..bound)))
        .collect();
    Tensor::matrix(rows, cols, data).expect("sized")
}

/// Square orthogonal matrix: Gram-Schmidt over Gaussian columns.
pub fn orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let mut cols: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| StandardNormal.sample(rng)).collect())
            .collect();
        let mut ok = true;
        for i in 0..n {
            for j in 0..i {
                let (done, cur) = cols.split_at_mut(i);
                let d: f64 = done[j].iter().zip(&cur[0]).map(|(a, b)| a * b).sum();
                for (x, &q) in cur[0].iter_mut().zip(&done[j]) {
                    *x -= d * q;
                }
            }
            let norm = cols[i].iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-8 {
                ok = false;
                break;
            }
            for x in &mut cols[i] {
                *x /= norm;
            }
        }
        if ok {
            let mut out = vec![0.0; n * n];
            for (c, col) in cols.iter().enumerate() {
                for (r, &v) in col.iter().enumerate() {
                    out[r * n + c] = v;
                }
            }
            return out;
        }
    }
}

/// `x W + b`.
#[derive(Clone, Debug)]
pub struct Linear {
    pub w: ParamId,
    pub b: Option<ParamId>,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Linear {
    pub fn new<T: Scalar, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        name: &str,
        in_dim: usize,
        out_dim: usize,
        bias: bool,
        rng: &mut R,
    ) -> Self {
        let w = store.add(format!("{name}.w"), glorot_uniform(in_dim, out_dim, rng), true);
        let b = bias.then(|| store.add(format!("{name}.b"), Tensor::zeros(vec![1, out_dim]), true));
        Linear {
            w,
            b,
            in_dim,
            out_dim,
        }
    }

    pub fn from_store<T: Scalar>(store: &ParamStore<T>, name: &str) -> Result<Self> {
        let w = lookup(store, &format!("{name}.w"))?;
        let [in_dim, out_dim] = store.get(w).dims();
        Ok(Linear {
            w,
            b: store.id(&format!("{name}.b")),
            in_dim,
            out_dim,
        })
    }

    pub fn forward<T: Scalar>(&self, g: &mut Graph<'_, T>, x: Var) -> Result<Var> {
        let w = g.param(self.w);
        let y = g.matmul(x, w)?;
        match self.b {
            Some(b) => {
                let b = g.param(b);
                g.add_bias(y, b)
            }
            None => Ok(y),
        }
    }
}

pub(crate) fn lookup<T: Scalar>(store: &ParamStore<T>, name: &str) -> Result<ParamId> {
    store
        .id(name)
        .ok_or_else(|| Error::Checkpoint(format!("missing parameter {name}")))
}

/// Linear layer, LeakyReLU(0.1), dropout.
#[derive(Clone, Debug)]
pub struct Mlp {
    pub linear: Linear,
    pub dropout: f64,
}

pub const LEAKY_SLOPE: f64 = 0.1;

impl Mlp {
    pub fn new<T: Scalar, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        name: &str,
        in_dim: usize,
        out_dim: usize,
        dropout: f64,
        rng: &mut R,
    ) -> Self {
        Mlp {
            linear: Linear::new(store, name, in_dim, out_dim, true, rng),
            dropout,
        }
    }

    pub fn from_store<T: Scalar>(store: &ParamStore<T>, name: &str, dropout: f64) -> Result<Self> {
        Ok(Mlp {
            linear: Linear::from_store(store, name)?,
            dropout,
        })
    }

    pub fn forward<T: Scalar>(&self, g: &mut Graph<'_, T>, x: Var, rng: &mut dyn RngCore) -> Result<Var> {
        let y = self.linear.forward(g, x)?;
        let y = g.leaky_relu(y, T::lit(LEAKY_SLOPE));
        g.dropout(y, self.dropout, rng)
    }
}

/// One direction of one LSTM layer. Gate blocks are ordered input, forget,
/// candidate, output.
#[derive(Clone, Debug)]
pub struct LstmCell {
    pub w_ih: ParamId,
    pub w_hh: ParamId,
    pub b: ParamId,
    pub hidden: usize,
}

impl LstmCell {
    pub fn new<T: Scalar, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        name: &str,
        in_dim: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Self {
        let w_ih = store.add(
            format!("{name}.w_ih"),
            glorot_uniform(in_dim, 4 * hidden, rng),
            true,
        );
        let mut w_hh = vec![T::zero(); hidden * 4 * hidden];
        for gate in 0..4 {
            let q = orthogonal(hidden, rng);
            for r in 0..hidden {
                for c in 0..hidden {
                    w_hh[r * 4 * hidden + gate * hidden + c] = T::lit(q[r * hidden + c]);
                }
            }
        }
        let w_hh = store.add(
            format!("{name}.w_hh"),
            Tensor::matrix(hidden, 4 * hidden, w_hh).expect("sized"),
            true,
        );
        let b = store.add(format!("{name}.b"), Tensor::zeros(vec![1, 4 * hidden]), true);
        LstmCell {
            w_ih,
            w_hh,
            b,
            hidden,
        }
    }

    pub fn from_store<T: Scalar>(store: &ParamStore<T>, name: &str) -> Result<Self> {
        let w_hh = lookup(store, &format!("{name}.w_hh"))?;
        Ok(LstmCell {
            w_ih: lookup(store, &format!("{name}.w_ih"))?,
            w_hh,
            b: lookup(store, &format!("{name}.b"))?,
            hidden: store.get(w_hh).dims()[0],
        })
    }

    /// Runs over the rows of `x` (forwards, or backwards when `reverse`).
    /// Returns hidden states in position order.
    pub fn run<T: Scalar>(
        &self,
        g: &mut Graph<'_, T>,
        x: Var,
        reverse: bool,
        dropout: f64,
        rng: &mut dyn RngCore,
    ) -> Result<Vec<Var>> {
        let n = g.value(x).dims()[0];
        if n == 0 {
            return Err(Error::Empty("lstm input sequence".into()));
        }
        let h = self.hidden;
        let w_ih = g.param(self.w_ih);
        let w_hh = g.param(self.w_hh);
        let b = g.param(self.b);
        let xw = g.matmul(x, w_ih)?;
        let xw = g.add_bias(xw, b)?;
        let h_mask: Option<std::sync::Arc<Vec<T>>> = (g.is_training() && dropout > 0.0).then(|| {
            let keep = T::lit(1.0 / (1.0 - dropout));
            std::sync::Arc::new(
                (0..h)
                    .map(|_| if rng.random::<f64>() < dropout { T::zero() } else { keep })
                    .collect(),
            )
        });

        let mut out: Vec<Option<Var>> = vec![None; n];
        let mut state: Option<(Var, Var)> = None;
        let order: Vec<usize> = if reverse {
            (0..n).rev().collect()
        } else {
            (0..n).collect()
        };
        for t in order {
            let mut gates = g.slice_rows(xw, t, t + 1)?;
            if let Some((h_prev, _)) = state {
                let h_in = match &h_mask {
                    Some(m) => g.mask(h_prev, m.clone())?,
                    None => h_prev,
                };
                let rec = g.matmul(h_in, w_hh)?;
                gates = g.add(gates, rec)?;
            }
            let i = g.slice_cols(gates, 0, h)?;
            let f = g.slice_cols(gates, h, 2 * h)?;
            let c_hat = g.slice_cols(gates, 2 * h, 3 * h)?;
            let o = g.slice_cols(gates, 3 * h, 4 * h)?;
            let i = g.sigmoid(i);
            let o = g.sigmoid(o);
            let c_hat = g.tanh(c_hat);
            let mut c = g.mul(i, c_hat)?;
            if let Some((_, c_prev)) = state {
                let f = g.sigmoid(f);
                let kept = g.mul(f, c_prev)?;
                c = g.add(c, kept)?;
            }
            let tc = g.tanh(c);
            let h_t = g.mul(o, tc)?;
            out[t] = Some(h_t);
            state = Some((h_t, c));
        }
        Ok(out.into_iter().map(|v| v.expect("every step ran")).collect())
    }
}

/// Output of a bidirectional run.
#[derive(Clone, Debug)]
pub struct BiLstmOutput {
    /// `[n, 2H]`: forward ⊕ backward states of the top layer.
    pub states: Var,
    /// Forward state after the last position.
    pub last_forward: Var,
    /// Backward state after the first position.
    pub last_backward: Var,
}

/// Stacked bidirectional LSTM with shared ("same mask") dropout on each
/// layer's input and recurrent state.
#[derive(Clone, Debug)]
pub struct BiLstm {
    pub layers: Vec<[LstmCell; 2]>,
    pub dropout: f64,
}

impl BiLstm {
    pub fn new<T: Scalar, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        name: &str,
        in_dim: usize,
        hidden: usize,
        layers: usize,
        dropout: f64,
        rng: &mut R,
    ) -> Self {
        let layers = (0..layers)
            .map(|l| {
                let d = if l == 0 { in_dim } else { 2 * hidden };
                [
                    LstmCell::new(store, &format!("{name}.{l}.fwd"), d, hidden, rng),
                    LstmCell::new(store, &format!("{name}.{l}.bwd"), d, hidden, rng),
                ]
            })
            .collect();
        BiLstm { layers, dropout }
    }

    pub fn from_store<T: Scalar>(store: &ParamStore<T>, name: &str, dropout: f64) -> Result<Self> {
        let mut layers = Vec::new();
        while store.id(&format!("{name}.{}.fwd.w_ih", layers.len())).is_some() {
            let l = layers.len();
            layers.push([
                LstmCell::from_store(store, &format!("{name}.{l}.fwd"))?,
                LstmCell::from_store(store, &format!("{name}.{l}.bwd"))?,
            ]);
        }
        if layers.is_empty() {
            return Err(Error::Checkpoint(format!("missing lstm {name}")));
        }
        Ok(BiLstm { layers, dropout })
    }

    pub fn hidden(&self) -> usize {
        self.layers[0][0].hidden
    }

    pub fn output_dim(&self) -> usize {
        2 * self.hidden()
    }

    pub fn forward<T: Scalar>(
        &self,
        g: &mut Graph<'_, T>,
        x: Var,
        rng: &mut dyn RngCore,
    ) -> Result<BiLstmOutput> {
        let mut input = x;
        let mut result = None;
        for [fwd, bwd] in &self.layers {
            let inp = g.shared_dropout(input, self.dropout, rng)?;
            let f = fwd.run(g, inp, false, self.dropout, rng)?;
            let b = bwd.run(g, inp, true, self.dropout, rng)?;
            let fs = g.concat_rows(&f)?;
            let bs = g.concat_rows(&b)?;
            input = g.concat_cols(&[fs, bs])?;
            result = Some((f[f.len() - 1], b[0]));
        }
        let (last_forward, last_backward) = result.ok_or_else(|| Error::InvalidArgument("lstm without layers".into()))?;
        let states = g.shared_dropout(input, self.dropout, rng)?;
        Ok(BiLstmOutput {
            states,
            last_forward,
            last_backward,
        })
    }
}
