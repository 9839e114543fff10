use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Softplus,
    Identity,
}

impl Activation {
    #[inline]
    fn value(self, z: f64) -> f64 {
        match self {
            // ln(1 + e^z) without overflow.
            Activation::Softplus => z.max(0.0) + (-z.abs()).exp().ln_1p(),
            Activation::Identity => z,
        }
    }

    #[inline]
    fn first(self, z: f64) -> f64 {
        match self {
            Activation::Softplus => sigmoid(z),
            Activation::Identity => 1.0,
        }
    }

    #[inline]
    fn second(self, z: f64) -> f64 {
        match self {
            Activation::Softplus => {
                let s = sigmoid(z);
                s * (1.0 - s)
            }
            Activation::Identity => 0.0,
        }
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Weight initialisation scheme.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightInit {
    /// Normal with variance `2 / n_in`.
    KaimingNormal,
    /// Uniform on `±sqrt(6 / ((1 + a²) n_in))` with leaky slope `a = √5`,
    /// which is `±1/sqrt(n_in)`.
    #[default]
    KaimingUniform,
}

/// Architecture of a twin network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkSpec {
    pub n_inputs: usize,
    pub hidden_layers: usize,
    pub neurons: usize,
    pub activation: Activation,
    /// Adds a linear map of the raw inputs to the output.
    pub wide_deep: bool,
    /// Dropout probability for hidden activations during training.
    pub dropout: Option<f64>,
    pub init: WeightInit,
}

impl Default for NetworkSpec {
    fn default() -> Self {
        Self {
            n_inputs: 8,
            hidden_layers: 4,
            neurons: 50,
            activation: Activation::Softplus,
            wide_deep: false,
            dropout: None,
            init: WeightInit::default(),
        }
    }
}

impl NetworkSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_inputs == 0 || self.hidden_layers == 0 || self.neurons == 0 {
            return Err(Error::InvalidArgument(format!(
                "network needs at least one input, hidden layer and neuron, got {}x{} on {} inputs",
                self.hidden_layers, self.neurons, self.n_inputs
            )));
        }
        if let Some(p) = self.dropout {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::InvalidParameter {
                    name: "dropout",
                    value: p,
                    reason: "must lie in [0, 1)",
                });
            }
        }
        Ok(())
    }

    /// Widths `[n_inputs, neurons, ..., neurons, 1]`.
    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.n_inputs];
        d.extend(std::iter::repeat_n(self.neurons, self.hidden_layers));
        d.push(1);
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Slot {
    pub n_in: usize,
    pub n_out: usize,
    pub w: usize,
    pub b: usize,
}

/// Weights and biases in one flat vector. Layer `l` holds a row-major
/// `n_in x n_out` matrix (`z = a W + b`) followed by its bias; the wide
/// weights, if any, come last.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub spec: NetworkSpec,
    pub params: Vec<f64>,
    pub(crate) slots: Vec<Slot>,
    pub(crate) wide: Option<usize>,
}

/// Intermediates of one forward pass, kept for the adjoint and training passes.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `a[l]` is the input of layer `l`; `a[0]` is the network input.
    pub a: Vec<Vec<f64>>,
    /// Pre-activations `z[l]` of layer `l`.
    pub z: Vec<Vec<f64>>,
    /// Scaled dropout masks of the hidden layers, if training with dropout.
    pub masks: Option<Vec<Vec<f64>>>,
    pub y: f64,
}

impl ForwardCache {
    pub fn output(&self) -> f64 {
        self.y
    }

    #[inline]
    pub(crate) fn mask(&self, l: usize, q: usize) -> f64 {
        match &self.masks {
            Some(m) => m[l][q],
            None => 1.0,
        }
    }
}

#[inline]
fn affine(w: &[f64], b: &[f64], a: &[f64], out: &mut [f64]) {
    out.copy_from_slice(b);
    let n_out = b.len();
    for (k, &ak) in a.iter().enumerate() {
        let row = &w[k * n_out..(k + 1) * n_out];
        for (o, &wk) in out.iter_mut().zip(row) {
            *o += ak * wk;
        }
    }
}

/// `out[k] = sum_q W[k, q] v[q]`.
#[inline]
pub(crate) fn mat_vec(w: &[f64], v: &[f64], out: &mut [f64]) {
    let n_out = v.len();
    for (k, o) in out.iter_mut().enumerate() {
        let row = &w[k * n_out..(k + 1) * n_out];
        let mut acc = [0.0; 4];
        let chunks = n_out / 4;
        for c in 0..chunks {
            for t in 0..4 {
                acc[t] += row[4 * c + t] * v[4 * c + t];
            }
        }
        let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
        for q in 4 * chunks..n_out {
            s += row[q] * v[q];
        }
        *o = s;
    }
}

impl Network {
    /// Weights drawn per [`WeightInit`], biases uniform on
    /// `[-1/sqrt(n_in), 1/sqrt(n_in)]`, wide weights zero.
    pub fn new(spec: &NetworkSpec, seed: u64) -> Result<Self> {
        let mut net = Self::zeros(spec)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        for s in net.slots.clone() {
            let n_in = s.n_in as f64;
            let weights = &mut net.params[s.w..s.w + s.n_in * s.n_out];
            match spec.init {
                WeightInit::KaimingNormal => {
                    let normal = Normal::new(0.0, (2.0 / n_in).sqrt()).expect("positive std");
                    weights.iter_mut().for_each(|w| *w = normal.sample(&mut rng));
                }
                WeightInit::KaimingUniform => {
                    let bound = 1.0 / n_in.sqrt();
                    weights.iter_mut().for_each(|w| *w = rng.random_range(-bound..bound));
                }
            }
            let bound = 1.0 / n_in.sqrt();
            for b in &mut net.params[s.b..s.b + s.n_out] {
                *b = rng.random_range(-bound..bound);
            }
        }
        Ok(net)
    }

    /// All parameters zero.
    pub fn zeros(spec: &NetworkSpec) -> Result<Self> {
        spec.validate()?;
        let dims = spec.dims();
        let mut slots = Vec::with_capacity(dims.len() - 1);
        let mut off = 0;
        for pair in dims.windows(2) {
            let (n_in, n_out) = (pair[0], pair[1]);
            slots.push(Slot {
                n_in,
                n_out,
                w: off,
                b: off + n_in * n_out,
            });
            off += n_in * n_out + n_out;
        }
        let wide = spec.wide_deep.then_some(off);
        if spec.wide_deep {
            off += spec.n_inputs;
        }
        Ok(Self {
            spec: spec.clone(),
            params: vec![0.0; off],
            slots,
            wide,
        })
    }

    pub fn n_layers(&self) -> usize {
        self.slots.len()
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    /// Weight matrix of layer `l`, row-major `n_in x n_out`.
    pub fn weights(&self, l: usize) -> &[f64] {
        let s = self.slots[l];
        &self.params[s.w..s.w + s.n_in * s.n_out]
    }

    pub fn weights_mut(&mut self, l: usize) -> &mut [f64] {
        let s = self.slots[l];
        &mut self.params[s.w..s.w + s.n_in * s.n_out]
    }

    pub fn bias(&self, l: usize) -> &[f64] {
        let s = self.slots[l];
        &self.params[s.b..s.b + s.n_out]
    }

    pub fn bias_mut(&mut self, l: usize) -> &mut [f64] {
        let s = self.slots[l];
        &mut self.params[s.b..s.b + s.n_out]
    }

    pub fn wide_weights(&self) -> Option<&[f64]> {
        self.wide.map(|o| &self.params[o..o + self.spec.n_inputs])
    }

    pub fn wide_weights_mut(&mut self) -> Option<&mut [f64]> {
        let n = self.spec.n_inputs;
        self.wide.map(move |o| &mut self.params[o..o + n])
    }

    /// Marks parameters subject to weight decay (weights, not biases).
    pub(crate) fn weight_mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.params.len()];
        for s in &self.slots {
            m[s.w..s.w + s.n_in * s.n_out].iter_mut().for_each(|x| *x = true);
        }
        if let Some(o) = self.wide {
            m[o..o + self.spec.n_inputs].iter_mut().for_each(|x| *x = true);
        }
        m
    }

    /// Draws inverted-dropout masks: each hidden unit is kept with
    /// probability `1 - p` and scaled by `1 / (1 - p)`.
    pub fn sample_masks(&self, rng: &mut impl Rng) -> Option<Vec<Vec<f64>>> {
        let p = self.spec.dropout.filter(|&p| p > 0.0)?;
        let keep = 1.0 / (1.0 - p);
        let hidden = &self.slots[..self.slots.len() - 1];
        Some(
            hidden
                .iter()
                .map(|s| {
                    (0..s.n_out)
                        .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
                        .collect()
                })
                .collect(),
        )
    }

    /// Forward pass with all intermediates retained.
    pub fn forward(&self, x: &[f64], masks: Option<Vec<Vec<f64>>>) -> ForwardCache {
        assert_eq!(x.len(), self.spec.n_inputs, "input width");
        let act = self.spec.activation;
        let n_layers = self.slots.len();
        let mut a = Vec::with_capacity(n_layers);
        let mut z = Vec::with_capacity(n_layers);
        a.push(x.to_vec());
        for (l, s) in self.slots.iter().enumerate() {
            let mut zl = vec![0.0; s.n_out];
            affine(self.weights(l), self.bias(l), &a[l], &mut zl);
            if l + 1 < n_layers {
                let next = zl
                    .iter()
                    .enumerate()
                    .map(|(q, &v)| match &masks {
                        Some(m) => act.value(v) * m[l][q],
                        None => act.value(v),
                    })
                    .collect();
                a.push(next);
            }
            z.push(zl);
        }
        let mut y = z[n_layers - 1][0];
        if let Some(w) = self.wide_weights() {
            y += dot(w, x);
        }
        ForwardCache { a, z, masks, y }
    }

    /// Inference-mode output without retaining intermediates. Bit-identical
    /// to `forward(x, None).output()`.
    pub fn predict(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.spec.n_inputs, "input width");
        let act = self.spec.activation;
        let n_layers = self.slots.len();
        let mut cur = x.to_vec();
        let mut out = Vec::new();
        for (l, s) in self.slots.iter().enumerate() {
            out.clear();
            out.resize(s.n_out, 0.0);
            affine(self.weights(l), self.bias(l), &cur, &mut out);
            if l + 1 < n_layers {
                for v in out.iter_mut() {
                    *v = act.value(*v);
                }
            }
            std::mem::swap(&mut cur, &mut out);
        }
        let mut y = cur[0];
        if let Some(w) = self.wide_weights() {
            y += dot(w, x);
        }
        y
    }

    /// Adjoint pass: the gradient of the output with respect to the input.
    /// `zbar` of the output is 1; `zbar[l-1] = (zbar[l] W[l]^T) * act'(z[l-1])`.
    pub fn adjoint(&self, cache: &ForwardCache) -> Vec<f64> {
        self.adjoint_full(cache).0
    }

    /// Adjoint pass returning `(xbar, abar, zbar)` with `abar[l] = dy/da[l]`
    /// and `zbar[l] = dy/dz[l]` for the hidden layers.
    pub(crate) fn adjoint_full(&self, cache: &ForwardCache) -> (Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let act = self.spec.activation;
        let n_layers = self.slots.len();
        let mut abar: Vec<Vec<f64>> = vec![Vec::new(); n_layers];
        let mut zbar: Vec<Vec<f64>> = vec![Vec::new(); n_layers - 1];
        // dy/da[L-1] is the single column of the output weights.
        abar[n_layers - 1] = self.weights(n_layers - 1).to_vec();
        for l in (0..n_layers - 1).rev() {
            let zb: Vec<f64> = (0..self.slots[l].n_out)
                .map(|q| abar[l + 1][q] * cache.mask(l, q) * act.first(cache.z[l][q]))
                .collect();
            let mut ab = vec![0.0; self.slots[l].n_in];
            mat_vec(self.weights(l), &zb, &mut ab);
            abar[l] = ab;
            zbar[l] = zb;
        }
        let mut xbar = abar[0].clone();
        if let Some(w) = self.wide_weights() {
            for (x, wj) in xbar.iter_mut().zip(w) {
                *x += wj;
            }
        }
        (xbar, abar, zbar)
    }

    /// Accumulates into `grad` the gradient of
    /// `gy * y + sum_j gx[j] * xbar[j]` with respect to all parameters,
    /// by reverse differentiation through the adjoint pass and then the
    /// forward pass.
    pub(crate) fn backprop(&self, cache: &ForwardCache, gy: f64, gx: &[f64], grad: &mut [f64]) {
        let act = self.spec.activation;
        let n_layers = self.slots.len();
        let (_, abar, zbar) = self.adjoint_full(cache);
        let mut gz: Vec<Vec<f64>> = self.slots.iter().map(|s| vec![0.0; s.n_out]).collect();

        // Reverse of the adjoint pass, from the input side upwards.
        if let Some(o) = self.wide {
            for (g, v) in grad[o..o + self.spec.n_inputs].iter_mut().zip(gx) {
                *g += v;
            }
        }
        let mut g_abar = gx.to_vec();
        for l in 0..n_layers - 1 {
            let s = self.slots[l];
            // abar[l] = W_l zbar[l]
            let w = self.weights(l);
            let mut g_zbar = vec![0.0; s.n_out];
            for (k, &gk) in g_abar.iter().enumerate() {
                if gk == 0.0 {
                    continue;
                }
                let row = &w[k * s.n_out..(k + 1) * s.n_out];
                let grow = &mut grad[s.w + k * s.n_out..s.w + (k + 1) * s.n_out];
                for q in 0..s.n_out {
                    grow[q] += gk * zbar[l][q];
                    g_zbar[q] += gk * row[q];
                }
            }
            // zbar[l] = abar[l+1] * mask * act'(z[l])
            let mut next = vec![0.0; s.n_out];
            for q in 0..s.n_out {
                let m = cache.mask(l, q);
                let zq = cache.z[l][q];
                next[q] = g_zbar[q] * m * act.first(zq);
                gz[l][q] = g_zbar[q] * abar[l + 1][q] * m * act.second(zq);
            }
            g_abar = next;
        }
        // abar[L-1] is the output weight column.
        let last = self.slots[n_layers - 1];
        for (k, g) in g_abar.iter().enumerate() {
            grad[last.w + k] += g;
        }

        // Reverse of the forward pass.
        gz[n_layers - 1][0] += gy;
        if let Some(o) = self.wide {
            for (g, x) in grad[o..o + self.spec.n_inputs].iter_mut().zip(&cache.a[0]) {
                *g += gy * x;
            }
        }
        for l in (0..n_layers).rev() {
            let s = self.slots[l];
            for (k, &ak) in cache.a[l].iter().enumerate() {
                if ak == 0.0 {
                    continue;
                }
                let grow = &mut grad[s.w + k * s.n_out..s.w + (k + 1) * s.n_out];
                for (g, &gq) in grow.iter_mut().zip(&gz[l]) {
                    *g += ak * gq;
                }
            }
            for (g, &gq) in grad[s.b..s.b + s.n_out].iter_mut().zip(&gz[l]) {
                *g += gq;
            }
            if l > 0 {
                let mut ga = vec![0.0; s.n_in];
                mat_vec(self.weights(l), &gz[l], &mut ga);
                for q in 0..s.n_in {
                    gz[l - 1][q] += ga[q] * cache.mask(l - 1, q) * act.first(cache.z[l - 1][q]);
                }
            }
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
