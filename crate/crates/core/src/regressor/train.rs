//! Mini-batch Adam training.

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{inverse_softplus, regularizer_coefficient, total_loss_and_grad, LossKind, Target, MIN_DISTANCE};
use super::network::{Architecture, Gradients, NetworkParams, OUTPUT_DIM};
use super::{input_matrix, mean_dimensions, prepare_dataset, InputScaler, Model};
use crate::error::{Error, Result};
use crate::keypoints::{InputVector, PoseRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub p_drop: f64,
    pub seed: u64,
    pub loss: LossKind,
    /// Adds the dropout weight regularizer to the objective.
    pub regularize: bool,
    pub architecture: Architecture,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            learning_rate: 1e-3,
            batch_size: 512,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            p_drop: 0.2,
            seed: 0,
            loss: LossKind::Laplace,
            regularize: false,
            architecture: Architecture::default(),
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument("epochs and batch size must be positive".into()));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidArgument(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument("invalid Adam moment parameters".into()));
        }
        self.architecture.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean data loss over the epoch's mini-batches, weighted by batch size.
    pub train_loss: f64,
}

struct Adam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: i32,
}

impl Adam {
    fn new(params: &mut NetworkParams) -> Self {
        let shapes: Vec<usize> = params.trainable_mut().iter().map(|s| s.len()).collect();
        Self {
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            t: 0,
        }
    }

    fn step(&mut self, params: &mut NetworkParams, grads: &Gradients, cfg: &TrainingConfig) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        let step = cfg.learning_rate / c1;
        for (((p, g), m), v) in params
            .trainable_mut()
            .into_iter()
            .zip(grads.slices())
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            for i in 0..p.len() {
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                p[i] -= step * m[i] / ((v[i] / c2).sqrt() + cfg.epsilon);
            }
        }
    }
}

/// Objective and gradients on one batch in training mode. Returns the data
/// loss (mean over rows), the regularizer value, the gradients, and the cache
/// for the running-statistics update.
pub fn batch_objective<R: rand::Rng + ?Sized>(
    params: &NetworkParams,
    x: &Array2<f64>,
    targets: &[&Target],
    loss: LossKind,
    regularizer: Option<f64>,
    rng: &mut R,
) -> Result<(f64, f64, Gradients, super::network::ForwardCache)> {
    let (out, cache) = params.forward_train(x.view(), rng)?;
    let b = targets.len();
    let mut dout = Array2::zeros((b, OUTPUT_DIM));
    let mut data = 0.0;
    for (i, t) in targets.iter().enumerate() {
        let raw: [f64; OUTPUT_DIM] = std::array::from_fn(|k| out[[i, k]]);
        let (l, g) = total_loss_and_grad(&raw, t, loss);
        data += l;
        for k in 0..OUTPUT_DIM {
            dout[[i, k]] = g[k] / b as f64;
        }
    }
    data /= b as f64;
    let mut grads = params.backward(&cache, dout.view());
    let mut reg = 0.0;
    if let Some(coef) = regularizer {
        for (w, (dw, _, _)) in params.hidden.iter().map(|h| &h.linear.w).zip(grads.hidden.iter_mut()) {
            reg += coef * w.iter().map(|v| v * v).sum::<f64>();
            dw.w.scaled_add(2.0 * coef, w);
        }
        reg += coef * params.output.w.iter().map(|v| v * v).sum::<f64>();
        grads.output.w.scaled_add(2.0 * coef, &params.output.w);
    }
    Ok((data, reg, grads, cache))
}

/// Splits shuffled indices into batches, folding a trailing single-row batch
/// into its predecessor (batch statistics of one row are degenerate).
fn batches(order: &[usize], size: usize) -> Vec<&[usize]> {
    let mut out: Vec<&[usize]> = order.chunks(size).collect();
    if out.len() > 1 && out.last().map(|b| b.len()) == Some(1) {
        out.pop();
        let k = out.len() - 1;
        let start = k * size;
        out[k] = &order[start..];
    }
    out
}

/// Trains on prepared inputs and targets.
pub fn train_prepared(
    inputs: &[InputVector],
    targets: &[Target],
    dim_mean: [f64; 3],
    cfg: &TrainingConfig,
) -> Result<(Model, Vec<EpochStats>)> {
    cfg.validate()?;
    if inputs.is_empty() {
        return Err(Error::InvalidArgument("training set is empty".into()));
    }
    if inputs.len() != targets.len() {
        return Err(Error::ShapeMismatch { expected: inputs.len(), got: targets.len() });
    }
    let n = inputs.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = NetworkParams::new(cfg.architecture, cfg.p_drop, &mut rng)?;
    let mean_d = targets.iter().map(|t| t.distance).sum::<f64>() / n as f64;
    params.output.b[0] = inverse_softplus((mean_d - MIN_DISTANCE).max(1e-3));
    let mut x_all = input_matrix(inputs);
    let scaler = InputScaler::fit(&x_all);
    scaler.apply(&mut x_all);
    let regularizer = cfg.regularize.then(|| regularizer_coefficient(cfg.p_drop, n));
    let mut adam = Adam::new(&mut params);
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (bi, idx) in batches(&order, cfg.batch_size).into_iter().enumerate() {
            let xb = x_all.select(Axis(0), idx);
            let tb: Vec<&Target> = idx.iter().map(|&i| &targets[i]).collect();
            let (data, reg, grads, cache) = batch_objective(&params, &xb, &tb, cfg.loss, regularizer, &mut rng)?;
            if !(data + reg).is_finite() {
                return Err(Error::Diverged { epoch, batch: bi, loss: data + reg });
            }
            adam.step(&mut params, &grads, cfg);
            params.update_running_stats(&cache, idx.len());
            total += data * idx.len() as f64;
        }
        history.push(EpochStats { epoch, train_loss: total / n as f64 });
    }
    Ok((Model { params, dim_mean, loss: cfg.loss, scaler }, history))
}

/// Trains on labeled records.
pub fn train(records: &[PoseRecord], cfg: &TrainingConfig) -> Result<(Model, Vec<EpochStats>)> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("training set is empty".into()));
    }
    let dim_mean = mean_dimensions(records)?;
    let (inputs, targets) = prepare_dataset(records, dim_mean)?;
    train_prepared(&inputs, &targets, dim_mean, cfg)
}
