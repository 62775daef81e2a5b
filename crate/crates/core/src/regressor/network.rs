//! Fully connected network: input projection, residual pairs of hidden
//! layers, linear output head. Every hidden layer is
//! Linear -> BatchNorm -> ReLU -> Dropout.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::keypoints::INPUT_DIM;

/// `[d_raw, s, beta, psi, sin_alpha, cos_alpha, dw, dh, dl]`.
pub const OUTPUT_DIM: usize = 9;

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_dim: usize,
    pub width: usize,
    pub hidden_layers: usize,
    /// Skip connections, each spanning two consecutive hidden layers after
    /// the input projection.
    pub residual_blocks: usize,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            input_dim: INPUT_DIM,
            width: 1024,
            hidden_layers: 6,
            residual_blocks: 2,
        }
    }
}

impl Architecture {
    pub fn with_width(width: usize) -> Self {
        Self { width, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.width == 0 || self.hidden_layers == 0 {
            return Err(Error::InvalidArgument(format!("empty layer in {self:?}")));
        }
        if 1 + 2 * self.residual_blocks > self.hidden_layers {
            return Err(Error::InvalidArgument(format!(
                "{} residual blocks need at least {} hidden layers, got {}",
                self.residual_blocks,
                1 + 2 * self.residual_blocks,
                self.hidden_layers
            )));
        }
        Ok(())
    }

    /// Whether hidden layer `l` closes a residual block; its output gets the
    /// input of layer `l - 1` added.
    pub fn closes_block(&self, l: usize) -> bool {
        l >= 2 && l % 2 == 0 && l / 2 <= self.residual_blocks
    }

    pub fn num_parameters(&self) -> usize {
        let w = self.width;
        let hidden = self.input_dim * w + (self.hidden_layers - 1) * w * w + self.hidden_layers * 3 * w;
        hidden + w * OUTPUT_DIM + OUTPUT_DIM
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `n_in x n_out`.
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Dense {
    fn zeros(n_in: usize, n_out: usize) -> Self {
        Self { w: Array2::zeros((n_in, n_out)), b: Array1::zeros(n_out) }
    }

    /// PyTorch's default: weights and biases uniform in `+-1/sqrt(n_in)`.
    fn init<R: Rng + ?Sized>(n_in: usize, n_out: usize, rng: &mut R) -> Self {
        let k = 1.0 / (n_in as f64).sqrt();
        let mut d = Self::zeros(n_in, n_out);
        d.w.mapv_inplace(|_| rng.random_range(-k..k));
        d.b.mapv_inplace(|_| rng.random_range(-k..k));
        d
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HiddenLayer {
    pub linear: Dense,
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
}

impl HiddenLayer {
    fn from_linear(linear: Dense) -> Self {
        let n = linear.b.len();
        Self {
            linear,
            gamma: Array1::ones(n),
            beta: Array1::zeros(n),
            running_mean: Array1::zeros(n),
            running_var: Array1::ones(n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics and dropout.
    Train,
    /// Running statistics, no dropout.
    Eval,
    /// Running statistics with dropout active.
    McDropout,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub arch: Architecture,
    pub p_drop: f64,
    pub hidden: Vec<HiddenLayer>,
    pub output: Dense,
}

/// Activations kept by a training-mode forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input of every hidden layer, then the input of the output head.
    inputs: Vec<Array2<f64>>,
    xhat: Vec<Array2<f64>>,
    inv_std: Vec<Array1<f64>>,
    /// BatchNorm output, before ReLU.
    pre_relu: Vec<Array2<f64>>,
    masks: Vec<Option<Array2<f64>>>,
    pub batch_mean: Vec<Array1<f64>>,
    pub batch_var: Vec<Array1<f64>>,
}

/// Gradients with the same shapes as the trainable parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub hidden: Vec<(Dense, Array1<f64>, Array1<f64>)>,
    pub output: Dense,
}

impl Gradients {
    pub fn zeros_like(p: &NetworkParams) -> Self {
        Self {
            hidden: p
                .hidden
                .iter()
                .map(|h| {
                    let (i, o) = h.linear.w.dim();
                    (Dense::zeros(i, o), Array1::zeros(o), Array1::zeros(o))
                })
                .collect(),
            output: Dense::zeros(p.arch.width, OUTPUT_DIM),
        }
    }

    /// Trainable-parameter order shared with [`NetworkParams::trainable_mut`].
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(4 * self.hidden.len() + 2);
        for (d, g, b) in &self.hidden {
            out.push(d.w.as_slice().expect("contiguous"));
            out.push(d.b.as_slice().expect("contiguous"));
            out.push(g.as_slice().expect("contiguous"));
            out.push(b.as_slice().expect("contiguous"));
        }
        out.push(self.output.w.as_slice().expect("contiguous"));
        out.push(self.output.b.as_slice().expect("contiguous"));
        out
    }
}

fn validate_p_drop(p: f64) -> Result<()> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("p_drop must lie in [0, 1), got {p}")));
    }
    Ok(())
}

impl NetworkParams {
    pub fn new<R: Rng + ?Sized>(arch: Architecture, p_drop: f64, rng: &mut R) -> Result<Self> {
        arch.validate()?;
        validate_p_drop(p_drop)?;
        let mut hidden = Vec::with_capacity(arch.hidden_layers);
        for l in 0..arch.hidden_layers {
            let n_in = if l == 0 { arch.input_dim } else { arch.width };
            hidden.push(HiddenLayer::from_linear(Dense::init(n_in, arch.width, rng)));
        }
        let output = Dense::init(arch.width, OUTPUT_DIM, rng);
        Ok(Self { arch, p_drop, hidden, output })
    }

    /// All weights and biases zero; normalization at identity.
    pub fn zeros(arch: Architecture, p_drop: f64) -> Result<Self> {
        arch.validate()?;
        validate_p_drop(p_drop)?;
        let hidden = (0..arch.hidden_layers)
            .map(|l| {
                let n_in = if l == 0 { arch.input_dim } else { arch.width };
                HiddenLayer::from_linear(Dense::zeros(n_in, arch.width))
            })
            .collect();
        Ok(Self { arch, p_drop, hidden, output: Dense::zeros(arch.width, OUTPUT_DIM) })
    }

    pub fn set_p_drop(&mut self, p: f64) -> Result<()> {
        validate_p_drop(p)?;
        self.p_drop = p;
        Ok(())
    }

    /// Trainable parameters in a fixed order: per hidden layer `W, b, gamma,
    /// beta`, then output `W, b`.
    pub fn trainable_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(4 * self.hidden.len() + 2);
        for h in &mut self.hidden {
            out.push(h.linear.w.as_slice_mut().expect("contiguous"));
            out.push(h.linear.b.as_slice_mut().expect("contiguous"));
            out.push(h.gamma.as_slice_mut().expect("contiguous"));
            out.push(h.beta.as_slice_mut().expect("contiguous"));
        }
        out.push(self.output.w.as_slice_mut().expect("contiguous"));
        out.push(self.output.b.as_slice_mut().expect("contiguous"));
        out
    }

    /// Weight matrices only (the regularized parameters).
    pub fn weight_matrices(&self) -> impl Iterator<Item = &Array2<f64>> {
        self.hidden.iter().map(|h| &h.linear.w).chain(std::iter::once(&self.output.w))
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.arch.input_dim {
            return Err(Error::ShapeMismatch { expected: self.arch.input_dim, got: x.ncols() });
        }
        if x.nrows() == 0 {
            return Err(Error::InvalidArgument("empty batch".into()));
        }
        Ok(())
    }

    fn dropout_mask<R: Rng + ?Sized>(&self, shape: (usize, usize), rng: &mut R) -> Option<Array2<f64>> {
        if self.p_drop == 0.0 {
            return None;
        }
        let keep = 1.0 / (1.0 - self.p_drop);
        let p = self.p_drop;
        Some(Array2::from_shape_simple_fn(shape, || if rng.random::<f64>() < p { 0.0 } else { keep }))
    }

    /// Forward pass without caching. `rng` is only used for dropout.
    pub fn forward<R: Rng + ?Sized>(&self, x: ArrayView2<f64>, mode: Mode, rng: &mut R) -> Result<Array2<f64>> {
        if mode == Mode::Train {
            return self.forward_train(x, rng).map(|(out, _)| out);
        }
        self.check_input(&x)?;
        let mut h = x.to_owned();
        let mut skip: Option<Array2<f64>> = None;
        for (l, layer) in self.hidden.iter().enumerate() {
            let mut z = h.dot(&layer.linear.w) + &layer.linear.b;
            let scale = (&layer.running_var + BN_EPS).mapv(|v| 1.0 / v.sqrt()) * &layer.gamma;
            let shift = &layer.beta - &(&layer.running_mean * &scale);
            z = z * &scale + &shift;
            z.mapv_inplace(|v| v.max(0.0));
            if mode == Mode::McDropout {
                if let Some(m) = self.dropout_mask(z.dim(), rng) {
                    z *= &m;
                }
            }
            if self.arch.closes_block(l) {
                z += skip.as_ref().expect("block input recorded");
            }
            if l + 1 < self.hidden.len() && self.arch.closes_block(l + 2) {
                skip = Some(z.clone());
            }
            h = z;
        }
        Ok(h.dot(&self.output.w) + &self.output.b)
    }

    /// Convenience: eval-mode forward.
    pub fn forward_eval(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.forward(x, Mode::Eval, &mut NoRng)
    }

    /// Training-mode forward with batch statistics, keeping what
    /// [`backward`](Self::backward) needs.
    pub fn forward_train<R: Rng + ?Sized>(&self, x: ArrayView2<f64>, rng: &mut R) -> Result<(Array2<f64>, ForwardCache)> {
        self.check_input(&x)?;
        let n = self.hidden.len();
        let mut cache = ForwardCache {
            inputs: Vec::with_capacity(n + 1),
            xhat: Vec::with_capacity(n),
            inv_std: Vec::with_capacity(n),
            pre_relu: Vec::with_capacity(n),
            masks: Vec::with_capacity(n),
            batch_mean: Vec::with_capacity(n),
            batch_var: Vec::with_capacity(n),
        };
        let mut h = x.to_owned();
        for (l, layer) in self.hidden.iter().enumerate() {
            let z = h.dot(&layer.linear.w) + &layer.linear.b;
            let mean = z.mean_axis(Axis(0)).expect("nonempty");
            let centered = z - &mean;
            let var = centered.mapv(|v| v * v).mean_axis(Axis(0)).expect("nonempty");
            let inv_std = var.mapv(|v| 1.0 / (v + BN_EPS).sqrt());
            let xhat = centered * &inv_std;
            let y = &xhat * &layer.gamma + &layer.beta;
            let mut a = y.mapv(|v| v.max(0.0));
            let mask = self.dropout_mask(a.dim(), rng);
            if let Some(m) = &mask {
                a *= m;
            }
            if self.arch.closes_block(l) {
                a += &cache.inputs[l - 1];
            }
            cache.inputs.push(h);
            cache.xhat.push(xhat);
            cache.inv_std.push(inv_std);
            cache.pre_relu.push(y);
            cache.masks.push(mask);
            cache.batch_mean.push(mean);
            cache.batch_var.push(var);
            h = a;
        }
        let out = h.dot(&self.output.w) + &self.output.b;
        cache.inputs.push(h);
        Ok((out, cache))
    }

    /// Gradients of a scalar objective given its gradient `dout` with respect
    /// to the raw outputs of [`forward_train`](Self::forward_train).
    pub fn backward(&self, cache: &ForwardCache, dout: ArrayView2<f64>) -> Gradients {
        let n = self.hidden.len();
        let batch = dout.nrows() as f64;
        let mut grads = Gradients::zeros_like(self);
        let h_last = &cache.inputs[n];
        grads.output.w = h_last.t().dot(&dout);
        grads.output.b = dout.sum_axis(Axis(0));
        // dh[l] = gradient w.r.t. the output of hidden layer l
        let mut dh: Vec<Option<Array2<f64>>> = vec![None; n];
        dh[n - 1] = Some(dout.dot(&self.output.w.t()));
        for l in (0..n).rev() {
            let d_out = dh[l].take().expect("gradient flows to every layer");
            if self.arch.closes_block(l) {
                add_into(&mut dh[l - 2], &d_out);
            }
            let layer = &self.hidden[l];
            let mut dy = d_out;
            if let Some(m) = &cache.masks[l] {
                dy *= m;
            }
            Zip::from(&mut dy).and(&cache.pre_relu[l]).for_each(|g, &y| {
                if y <= 0.0 {
                    *g = 0.0;
                }
            });
            let xhat = &cache.xhat[l];
            let dgamma = (&dy * xhat).sum_axis(Axis(0));
            let dbeta = dy.sum_axis(Axis(0));
            let dxhat = dy * &layer.gamma;
            let sum_dxhat = dxhat.sum_axis(Axis(0));
            let sum_dxhat_xhat = (&dxhat * xhat).sum_axis(Axis(0));
            let mut dz = dxhat * batch - &sum_dxhat - &(xhat * &sum_dxhat_xhat);
            dz *= &(&cache.inv_std[l] / batch);
            let dw = cache.inputs[l].t().dot(&dz);
            let db = dz.sum_axis(Axis(0));
            if l > 0 {
                let d_in = dz.dot(&layer.linear.w.t());
                add_into(&mut dh[l - 1], &d_in);
            }
            grads.hidden[l] = (Dense { w: dw, b: db }, dgamma, dbeta);
        }
        grads
    }

    /// Exponential moving average of batch statistics (unbiased variance).
    pub fn update_running_stats(&mut self, cache: &ForwardCache, batch: usize) {
        for (layer, (mean, var)) in self.hidden.iter_mut().zip(cache.batch_mean.iter().zip(&cache.batch_var)) {
            layer.running_mean.zip_mut_with(mean, |r, &m| *r = (1.0 - BN_MOMENTUM) * *r + BN_MOMENTUM * m);
            if batch > 1 {
                let unbias = batch as f64 / (batch as f64 - 1.0);
                layer
                    .running_var
                    .zip_mut_with(var, |r, &v| *r = (1.0 - BN_MOMENTUM) * *r + BN_MOMENTUM * v * unbias);
            }
        }
    }
}

fn add_into(slot: &mut Option<Array2<f64>>, g: &Array2<f64>) {
    match slot {
        Some(acc) => *acc += g,
        None => *slot = Some(g.clone()),
    }
}

/// Stand-in generator for passes that never draw.
struct NoRng;

impl rand::RngCore for NoRng {
    fn next_u32(&mut self) -> u32 {
        unreachable!("eval mode draws no random numbers")
    }

    fn next_u64(&mut self) -> u64 {
        unreachable!("eval mode draws no random numbers")
    }

    fn fill_bytes(&mut self, _: &mut [u8]) {
        unreachable!("eval mode draws no random numbers")
    }
}
