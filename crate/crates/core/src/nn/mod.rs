//! Dense networks with exact reverse-mode gradients.
//!
//! Parameters live in one flat vector. Layer `l` maps `dims[l]` inputs to
//! `dims[l+1]` outputs and stores its weight matrix row-major as
//! `[in][out]` followed by its bias `[out]`, so `y = x·W + b`. Gradients use
//! the same layout, which lets optimizers and soft updates treat every network
//! as a plain slice.

mod checkpoint;
mod gradcheck;
mod optim;

pub use checkpoint::{decode, decode_many, encode, encode_many, CheckpointError, MAGIC};
pub use gradcheck::{finite_difference_check, grad_check, GradCheckOptions, GradCheckReport};
pub use optim::{Optimizer, OptimizerKind};

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum NnError {
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("backward called without a matching forward cache")]
    NoForwardCache,
    #[error("a network needs at least one layer with non-zero widths")]
    BadArchitecture,
}

pub type Result<T> = core::result::Result<T, NnError>;

fn expect_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(NnError::ShapeMismatch { expected, got })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Activation {
    #[default]
    Linear,
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Linear => x,
            Activation::Relu => {
                if x > 0.0 {
                    x
                } else {
                    0.0
                }
            }
            Activation::Tanh => libm::tanh(x),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `y`.
    #[inline]
    fn derivative(self, z: f64, y: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
        }
    }

    pub(crate) fn code(self) -> u8 {
        self as u8
    }

    pub(crate) fn from_code(c: u8) -> Option<Self> {
        [Activation::Linear, Activation::Relu, Activation::Tanh].get(c as usize).copied()
    }
}

/// Fully connected feed-forward network.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    dims: Vec<usize>,
    hidden: Activation,
    output: Activation,
    params: Vec<f64>,
}

/// Activations recorded by a batched forward pass.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ForwardCache {
    batch: usize,
    /// `acts[0]` is the input; `acts[l+1]` the output of layer `l`.
    acts: Vec<Vec<f64>>,
    /// Pre-activations of each layer.
    pre: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn output(&self) -> &[f64] {
        self.acts.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

fn param_count(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

impl DenseNet {
    /// Zero-initialized network.
    pub fn zeros(dims: &[usize], hidden: Activation, output: Activation) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(NnError::BadArchitecture);
        }
        Ok(Self { dims: dims.to_vec(), hidden, output, params: vec![0.0; param_count(dims)] })
    }

    /// Weights and biases uniform in `±1/√fan_in`.
    pub fn random<R: Rng + ?Sized>(dims: &[usize], hidden: Activation, output: Activation, rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(dims, hidden, output)?;
        let mut off = 0;
        for w in dims.windows(2) {
            let bound = 1.0 / libm::sqrt(w[0] as f64);
            let n = w[0] * w[1] + w[1];
            for p in &mut net.params[off..off + n] {
                *p = rng.random_range(-bound..bound);
            }
            off += n;
        }
        Ok(net)
    }

    /// Rebuilds a network from its flat parameters.
    pub fn from_params(dims: &[usize], hidden: Activation, output: Activation, params: Vec<f64>) -> Result<Self> {
        let mut net = Self::zeros(dims, hidden, output)?;
        expect_len(net.params.len(), params.len())?;
        net.params = params;
        Ok(net)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().expect("at least two dims")
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden
    }

    pub fn output_activation(&self) -> Activation {
        self.output
    }

    pub fn layers(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// Offsets of layer `l`'s weight and bias blocks.
    fn layer_offsets(&self, l: usize) -> (usize, usize) {
        let w: usize = param_count(&self.dims[..=l]);
        (w, w + self.dims[l] * self.dims[l + 1])
    }

    /// Weight `W[i][o]` of layer `l`.
    pub fn weight(&self, l: usize, i: usize, o: usize) -> f64 {
        let (w, _) = self.layer_offsets(l);
        self.params[w + i * self.dims[l + 1] + o]
    }

    pub fn set_weight(&mut self, l: usize, i: usize, o: usize, v: f64) {
        let (w, _) = self.layer_offsets(l);
        let out = self.dims[l + 1];
        self.params[w + i * out + o] = v;
    }

    pub fn bias(&self, l: usize, o: usize) -> f64 {
        self.params[self.layer_offsets(l).1 + o]
    }

    pub fn set_bias(&mut self, l: usize, o: usize, v: f64) {
        let (_, b) = self.layer_offsets(l);
        self.params[b + o] = v;
    }

    fn activation(&self, l: usize) -> Activation {
        if l + 1 == self.layers() {
            self.output
        } else {
            self.hidden
        }
    }

    /// Forward pass for a single input.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_batch(x, 1)?.acts.pop().unwrap_or_default())
    }

    /// Forward pass over `batch` row-major inputs, keeping what backward needs.
    pub fn forward_batch(&self, x: &[f64], batch: usize) -> Result<ForwardCache> {
        expect_len(batch * self.input_dim(), x.len())?;
        let mut acts = Vec::with_capacity(self.dims.len());
        let mut pre = Vec::with_capacity(self.layers());
        acts.push(x.to_vec());
        for l in 0..self.layers() {
            let (din, dout) = (self.dims[l], self.dims[l + 1]);
            let (wo, bo) = self.layer_offsets(l);
            let w = &self.params[wo..bo];
            let b = &self.params[bo..bo + dout];
            let input = &acts[l];
            let mut z = vec![0.0; batch * dout];
            for r in 0..batch {
                let zr = &mut z[r * dout..(r + 1) * dout];
                zr.copy_from_slice(b);
                let xr = &input[r * din..(r + 1) * din];
                for (i, &xi) in xr.iter().enumerate() {
                    if xi != 0.0 {
                        axpy(xi, &w[i * dout..(i + 1) * dout], zr);
                    }
                }
            }
            let act = self.activation(l);
            let y = z.iter().map(|&v| act.apply(v)).collect();
            pre.push(z);
            acts.push(y);
        }
        Ok(ForwardCache { batch, acts, pre })
    }

    /// Reverse pass. Accumulates parameter gradients into `grads` and returns
    /// the gradient with respect to the inputs.
    pub fn backward(&self, cache: &ForwardCache, upstream: &[f64], grads: &mut [f64]) -> Result<Vec<f64>> {
        if cache.acts.len() != self.dims.len() || cache.pre.len() != self.layers() {
            return Err(NnError::NoForwardCache);
        }
        let batch = cache.batch;
        expect_len(batch * self.output_dim(), upstream.len())?;
        expect_len(self.params.len(), grads.len())?;
        let mut delta = upstream.to_vec();
        for l in (0..self.layers()).rev() {
            let (din, dout) = (self.dims[l], self.dims[l + 1]);
            let act = self.activation(l);
            if act != Activation::Linear {
                for ((d, &z), &y) in delta.iter_mut().zip(&cache.pre[l]).zip(&cache.acts[l + 1]) {
                    *d *= act.derivative(z, y);
                }
            }
            let (wo, bo) = self.layer_offsets(l);
            let input = &cache.acts[l];
            {
                let (gw, gb) = grads[wo..bo + dout].split_at_mut(bo - wo);
                for r in 0..batch {
                    let dr = &delta[r * dout..(r + 1) * dout];
                    axpy(1.0, dr, gb);
                    let xr = &input[r * din..(r + 1) * din];
                    for (i, &xi) in xr.iter().enumerate() {
                        if xi != 0.0 {
                            axpy(xi, dr, &mut gw[i * dout..(i + 1) * dout]);
                        }
                    }
                }
            }
            let w = &self.params[wo..bo];
            let mut dx = vec![0.0; batch * din];
            for r in 0..batch {
                let dr = &delta[r * dout..(r + 1) * dout];
                for i in 0..din {
                    dx[r * din + i] = dot(&w[i * dout..(i + 1) * dout], dr);
                }
            }
            delta = dx;
        }
        Ok(delta)
    }

    /// `self ← ς·online + (1−ς)·self`, parameter-wise.
    pub fn soft_update_from(&mut self, online: &DenseNet, tau: f64) -> Result<()> {
        if self.dims != online.dims {
            return Err(NnError::ShapeMismatch { expected: self.params.len(), got: online.params.len() });
        }
        for (t, &o) in self.params.iter_mut().zip(&online.params) {
            *t = tau * o + (1.0 - tau) * *t;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }
}
