use rand::Rng;

use crate::autodiff::nn::{glorot_uniform, lookup};
use crate::autodiff::{Graph, ParamId, ParamStore, Tensor, Var};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One directed, edge-gated graph convolution:
///
/// `H' = ReLU(H W_self + A_in (g_in ⊙ H W_in) + A_out (g_out ⊙ H W_out) + b)`
///
/// where `A_in[v][u] = 1` when `u` is the head of `v`, `A_out[v][u] = 1` when
/// `v` is the head of `u`, and `g = sigmoid(H v + c)` is a scalar gate per
/// neighbour.
#[derive(Clone, Debug)]
pub struct GcnLayer {
    pub w_self: ParamId,
    pub w_in: ParamId,
    pub w_out: ParamId,
    pub gate_in: ParamId,
    pub gate_in_bias: ParamId,
    pub gate_out: ParamId,
    pub gate_out_bias: ParamId,
    pub bias: ParamId,
}

impl GcnLayer {
    pub fn new<T: Scalar, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        name: &str,
        in_dim: usize,
        out_dim: usize,
        rng: &mut R,
    ) -> Self {
        let mut mat = |suffix: &str, r: usize, c: usize, store: &mut ParamStore<T>| {
            store.add(format!("{name}.{suffix}"), glorot_uniform(r, c, rng), true)
        };
        let w_self = mat("w_self", in_dim, out_dim, store);
        let w_in = mat("w_in", in_dim, out_dim, store);
        let w_out = mat("w_out", in_dim, out_dim, store);
        let gate_in = mat("gate_in", in_dim, 1, store);
        let gate_out = mat("gate_out", in_dim, 1, store);
        let mut zeros = |suffix: &str, c: usize| {
            store.add(format!("{name}.{suffix}"), Tensor::zeros(vec![1, c]), true)
        };
        GcnLayer {
            w_self,
            w_in,
            w_out,
            gate_in,
            gate_out,
            gate_in_bias: zeros("gate_in_bias", 1),
            gate_out_bias: zeros("gate_out_bias", 1),
            bias: zeros("bias", out_dim),
        }
    }

    pub fn from_store<T: Scalar>(store: &ParamStore<T>, name: &str) -> Result<Self> {
        let p = |s: &str| lookup(store, &format!("{name}.{s}"));
        Ok(GcnLayer {
            w_self: p("w_self")?,
            w_in: p("w_in")?,
            w_out: p("w_out")?,
            gate_in: p("gate_in")?,
            gate_in_bias: p("gate_in_bias")?,
            gate_out: p("gate_out")?,
            gate_out_bias: p("gate_out_bias")?,
            bias: p("bias")?,
        })
    }

    pub fn forward<T: Scalar>(&self, g: &mut Graph<'_, T>, h: Var, a_in: Var, a_out: Var) -> Result<Var> {
        let pre = self.pre_activation(g, h, a_in, a_out)?;
        Ok(g.relu(pre))
    }

    /// The layer before its ReLU.
    pub fn pre_activation<T: Scalar>(&self, g: &mut Graph<'_, T>, h: Var, a_in: Var, a_out: Var) -> Result<Var> {
        let w_self = g.param(self.w_self);
        let mut acc = g.matmul(h, w_self)?;
        for (w, gw, gb, adj) in [
            (self.w_in, self.gate_in, self.gate_in_bias, a_in),
            (self.w_out, self.gate_out, self.gate_out_bias, a_out),
        ] {
            let w = g.param(w);
            let msg = g.matmul(h, w)?;
            let gw = g.param(gw);
            let gb = g.param(gb);
            let gate = g.matmul(h, gw)?;
            let gate = g.add_bias(gate, gb)?;
            let gate = g.sigmoid(gate);
            let gated = g.mul_col(msg, gate)?;
            let agg = g.matmul(adj, gated)?;
            acc = g.add(acc, agg)?;
        }
        let b = g.param(self.bias);
        g.add_bias(acc, b)
    }
}

/// Two stacked [`GcnLayer`]s followed by mean pooling over nodes.
#[derive(Clone, Debug)]
pub struct LabelGcn {
    pub layers: Vec<GcnLayer>,
}

pub const GCN_LAYERS: usize = 2;

impl LabelGcn {
    pub fn new<T: Scalar, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        name: &str,
        in_dim: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Self {
        let layers = (0..GCN_LAYERS)
            .map(|l| {
                let d = if l == 0 { in_dim } else { hidden };
                GcnLayer::new(store, &format!("{name}.{l}"), d, hidden, rng)
            })
            .collect();
        LabelGcn { layers }
    }

    pub fn from_store<T: Scalar>(store: &ParamStore<T>, name: &str) -> Result<Self> {
        let layers = (0..GCN_LAYERS)
            .map(|l| GcnLayer::from_store(store, &format!("{name}.{l}")))
            .collect::<Result<_>>()?;
        Ok(LabelGcn { layers })
    }

    /// Pre-activations of every layer, bottom first.
    pub fn pre_activations<T: Scalar>(&self, g: &mut Graph<'_, T>, z: Var, heads: &[usize]) -> Result<Vec<Var>> {
        let (a_in, a_out) = adjacency::<T>(heads)?;
        let a_in = g.constant(a_in);
        let a_out = g.constant(a_out);
        let mut h = z;
        let mut out = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let pre = layer.pre_activation(g, h, a_in, a_out)?;
            out.push(pre);
            h = g.relu(pre);
        }
        Ok(out)
    }

    /// Node states of the top layer for inputs `z` (`[k, in]`) over the tree
    /// given by 1-based `heads`.
    pub fn node_states<T: Scalar>(&self, g: &mut Graph<'_, T>, z: Var, heads: &[usize]) -> Result<Var> {
        let k = heads.len();
        if g.value(z).dims()[0] != k {
            return Err(Error::Mismatch(format!(
                "{} node inputs for a {k}-node tree",
                g.value(z).dims()[0]
            )));
        }
        let (a_in, a_out) = adjacency::<T>(heads)?;
        let a_in = g.constant(a_in);
        let a_out = g.constant(a_out);
        let mut h = z;
        for layer in &self.layers {
            h = layer.forward(g, h, a_in, a_out)?;
        }
        Ok(h)
    }

    /// Mean-pooled `[1, hidden]` representation.
    pub fn forward<T: Scalar>(&self, g: &mut Graph<'_, T>, z: Var, heads: &[usize]) -> Result<Var> {
        let h = self.node_states(g, z, heads)?;
        g.mean_rows(h)
    }
}

/// `(A_in, A_out)` over nodes `1..=k`; arcs from the virtual root are
/// ignored.
pub fn adjacency<T: Scalar>(heads: &[usize]) -> Result<(Tensor<T>, Tensor<T>)> {
    let k = heads.len();
    let mut a_in = Tensor::zeros(vec![k, k]);
    let mut a_out = Tensor::zeros(vec![k, k]);
    for (i, &h) in heads.iter().enumerate() {
        if h > k {
            return Err(Error::InvalidArgument(format!("head {h} out of range for {k} nodes")));
        }
        if h > 0 {
            a_in.data_mut()[i * k + (h - 1)] = T::one();
            a_out.data_mut()[(h - 1) * k + i] = T::one();
        }
    }
    Ok((a_in, a_out))
}
