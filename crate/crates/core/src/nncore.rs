//! Dense feed-forward binary classifier with MSE loss.
//!
//! Weights are stored row-major (`outputs × inputs`). The network always ends
//! in a single sigmoid unit, so [`DenseNetwork::forward`] returns a score in
//! `[0, 1]`. Backpropagation yields gradients with respect to both the
//! parameters (for training) and the input vector (for gradient search).

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

/// Hidden widths of the default six-layer classifier (five ReLU layers plus
/// the sigmoid output unit).
pub const FCNN6_HIDDEN: [usize; 5] = [64, 32, 16, 8, 4];

/// Labels at or above this score are positive.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

const MODEL_FORMAT: &str = "fairsearch-dense-v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => sigmoid(z),
        }
    }

    /// Derivative expressed through the activation's output value.
    #[inline]
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
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

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
    /// Row-major, `outputs × inputs`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Layer {
            inputs,
            outputs,
            activation,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    #[inline]
    fn propagate(&self, input: &[f64], output: &mut [f64]) {
        for ((o, row), b) in output
            .iter_mut()
            .zip(self.weights.chunks_exact(self.inputs))
            .zip(&self.bias)
        {
            let z = row.iter().zip(input).fold(*b, |acc, (w, x)| acc + w * x);
            *o = self.activation.apply(z);
        }
    }
}

impl Layer {
    /// `input` and `output` are unit-major (`units × batch`); every output
    /// accumulates in the same order as [`Layer::propagate`]. Works on 4×4
    /// tiles of (output, batch) so the accumulators stay in registers.
    fn propagate_batch(&self, input: &[f64], batch: usize, output: &mut Vec<f64>) {
        const T: usize = 4;
        output.clear();
        output.resize(self.outputs * batch, 0.0);
        let (n_in, tiled_out, tiled_batch) = (self.inputs, self.outputs / T * T, batch / T * T);
        for o0 in (0..tiled_out).step_by(T) {
            let rows: [&[f64]; T] = std::array::from_fn(|r| &self.weights[(o0 + r) * n_in..][..n_in]);
            for b0 in (0..tiled_batch).step_by(T) {
                let mut acc: [[f64; T]; T] = std::array::from_fn(|r| [self.bias[o0 + r]; T]);
                for i in 0..n_in {
                    let x: &[f64; T] = input[i * batch + b0..][..T].try_into().unwrap();
                    for r in 0..T {
                        let w = rows[r][i];
                        for k in 0..T {
                            acc[r][k] += w * x[k];
                        }
                    }
                }
                for (r, a) in acc.iter().enumerate() {
                    output[(o0 + r) * batch + b0..][..T].copy_from_slice(a);
                }
            }
        }
        for o in 0..self.outputs {
            let row = &self.weights[o * n_in..][..n_in];
            let start = if o < tiled_out { tiled_batch } else { 0 };
            for b in start..batch {
                output[o * batch + b] = row
                    .iter()
                    .enumerate()
                    .fold(self.bias[o], |acc, (i, w)| acc + w * input[i * batch + b]);
            }
        }
        for o in output.iter_mut() {
            *o = self.activation.apply(*o);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseNetwork {
    input_dim: usize,
    layers: Vec<Layer>,
}

/// Reusable activation buffers for allocation-free forward/backward passes.
#[derive(Clone, Debug)]
pub struct Scratch {
    activations: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_next: Vec<f64>,
}

/// First-layer pre-activations shared by inputs that differ only at a few
/// free coordinates (see [`DenseNetwork::partial_input`]).
#[derive(Clone, Debug, Default)]
pub struct PartialInput {
    z: Vec<f64>,
    free: Vec<usize>,
}

/// Buffers for [`DenseNetwork::forward_partial_batch`].
#[derive(Clone, Debug, Default)]
pub struct BatchScratch {
    current: Vec<f64>,
    next: Vec<f64>,
}

/// Per-layer parameter gradients, same layout as the network's layers.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGradient>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerGradient {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(net: &DenseNetwork) -> Self {
        Gradients {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGradient {
                    weights: vec![0.0; l.weights.len()],
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
        }
    }

    fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|w| *w *= factor);
            l.bias.iter_mut().for_each(|b| *b *= factor);
        }
    }

    fn reset(&mut self) {
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|w| *w = 0.0);
            l.bias.iter_mut().for_each(|b| *b = 0.0);
        }
    }

    /// Iterate all parameter gradients in layer order (weights, then bias).
    pub fn flat(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied())
    }
}

impl DenseNetwork {
    /// Build a network from explicit layers, validating the dimension chain.
    pub fn new(input_dim: usize, layers: Vec<Layer>) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::Config("input dimension must be positive".into()));
        }
        let Some(last) = layers.last() else {
            return Err(Error::Config("network needs at least one layer".into()));
        };
        if last.outputs != 1 || last.activation != Activation::Sigmoid {
            return Err(Error::Config(
                "final layer must be a single sigmoid unit".into(),
            ));
        }
        let mut expected = input_dim;
        for (i, layer) in layers.iter().enumerate() {
            if layer.inputs != expected {
                return Err(Error::Config(format!(
                    "layer {i} expects {} inputs but previous layer yields {expected}",
                    layer.inputs
                )));
            }
            if layer.outputs == 0
                || layer.weights.len() != layer.inputs * layer.outputs
                || layer.bias.len() != layer.outputs
            {
                return Err(Error::Config(format!("layer {i} has inconsistent shapes")));
            }
            if !layer
                .weights
                .iter()
                .chain(&layer.bias)
                .all(|w| w.is_finite())
            {
                return Err(Error::Config(format!("layer {i} has non-finite parameters")));
            }
            expected = layer.outputs;
        }
        Ok(DenseNetwork { input_dim, layers })
    }

    /// Glorot-uniform initialized network with ReLU hidden layers and zero
    /// biases, deterministic in `seed`.
    pub fn initialized(input_dim: usize, hidden: &[usize], seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(hidden.len() + 1);
        let mut fan_in = input_dim;
        let widths = hidden.iter().copied().chain(std::iter::once(1));
        for (i, fan_out) in widths.enumerate() {
            let activation = if i == hidden.len() {
                Activation::Sigmoid
            } else {
                Activation::Relu
            };
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let mut layer = Layer::zeros(fan_in, fan_out, activation);
            for w in &mut layer.weights {
                *w = rng.gen_range(-limit..=limit);
            }
            layers.push(layer);
            fan_in = fan_out;
        }
        DenseNetwork::new(input_dim, layers)
    }

    /// Default six-layer classifier (see [`FCNN6_HIDDEN`]).
    pub fn fcnn6(input_dim: usize, seed: u64) -> Result<Self> {
        Self::initialized(input_dim, &FCNN6_HIDDEN, seed)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn scratch(&self) -> Scratch {
        let widest = self
            .layers
            .iter()
            .map(|l| l.outputs)
            .chain(std::iter::once(self.input_dim))
            .max()
            .unwrap_or(1);
        Scratch {
            activations: std::iter::once(self.input_dim)
                .chain(self.layers.iter().map(|l| l.outputs))
                .map(|n| vec![0.0; n])
                .collect(),
            delta: vec![0.0; widest],
            delta_next: vec![0.0; widest],
        }
    }

    fn check_input(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.input_dim {
            return Err(Error::Shape {
                expected: self.input_dim,
                actual: v.len(),
            });
        }
        Ok(())
    }

    /// Score in `[0, 1]` for input `v`.
    pub fn forward(&self, v: &[f64]) -> Result<f64> {
        self.check_input(v)?;
        if !v.iter().all(|x| x.is_finite()) {
            return Err(Error::Numeric { term: "network input" });
        }
        Ok(self.forward_with(v, &mut self.scratch()))
    }

    /// Unchecked forward pass reusing `scratch`. Panics on a shape mismatch.
    #[inline]
    pub fn forward_with(&self, v: &[f64], scratch: &mut Scratch) -> f64 {
        assert_eq!(v.len(), self.input_dim, "input shape mismatch");
        scratch.activations[0].copy_from_slice(v);
        for (l, layer) in self.layers.iter().enumerate() {
            let (before, after) = scratch.activations.split_at_mut(l + 1);
            layer.propagate(&before[l], &mut after[0]);
        }
        scratch.activations[self.layers.len()][0]
    }

    /// Fill `partial` with the first layer's pre-activations of `v` with the
    /// `free` coordinates left out.
    pub fn partial_input(&self, v: &[f64], free: &[usize], partial: &mut PartialInput) {
        assert_eq!(v.len(), self.input_dim, "input shape mismatch");
        let first = &self.layers[0];
        partial.free.clear();
        partial.free.extend_from_slice(free);
        partial.z.clear();
        partial.z.extend(first.weights.chunks_exact(first.inputs).zip(&first.bias).map(|(row, b)| {
            row.iter()
                .zip(v)
                .enumerate()
                .filter(|(j, _)| !free.contains(j))
                .fold(*b, |acc, (_, (w, x))| acc + w * x)
        }));
    }

    /// Score an input that agrees with the one behind `partial` everywhere
    /// except (possibly) at its free coordinates.
    pub fn forward_partial(&self, partial: &PartialInput, v: &[f64], scratch: &mut Scratch) -> f64 {
        let first = &self.layers[0];
        let out = &mut scratch.activations[1];
        for ((o, row), z) in out.iter_mut().zip(first.weights.chunks_exact(first.inputs)).zip(&partial.z) {
            let z = partial.free.iter().fold(*z, |acc, &j| acc + row[j] * v[j]);
            *o = first.activation.apply(z);
        }
        for (l, layer) in self.layers.iter().enumerate().skip(1) {
            let (before, after) = scratch.activations.split_at_mut(l + 1);
            layer.propagate(&before[l], &mut after[0]);
        }
        scratch.activations[self.layers.len()][0]
    }

    /// Batched [`DenseNetwork::forward_partial`]: `free_values` holds the free
    /// coordinates of `batch` inputs, row by row. Scores are bit-identical to
    /// the unbatched ones.
    pub fn forward_partial_batch(
        &self,
        partial: &PartialInput,
        free_values: &[f64],
        batch: usize,
        scratch: &mut BatchScratch,
        scores: &mut Vec<f64>,
    ) {
        let nf = partial.free.len();
        assert_eq!(free_values.len(), nf * batch, "free value shape mismatch");
        let first = &self.layers[0];
        let BatchScratch { current, next } = scratch;
        current.clear();
        current.resize(first.outputs * batch, 0.0);
        for ((out, row), z) in current
            .chunks_exact_mut(batch.max(1))
            .zip(first.weights.chunks_exact(first.inputs))
            .zip(&partial.z)
        {
            for (o, fv) in out.iter_mut().zip(free_values.chunks_exact(nf.max(1))) {
                let z = partial.free.iter().zip(fv).fold(*z, |a, (&j, x)| a + row[j] * x);
                *o = first.activation.apply(z);
            }
        }
        for layer in &self.layers[1..] {
            layer.propagate_batch(current, batch, next);
            std::mem::swap(current, next);
        }
        scores.clear();
        scores.extend_from_slice(&current[..batch]);
    }

    /// Backpropagate dloss/doutput through the activations left in `scratch`
    /// by the previous forward pass. Calls `on_layer(l, delta, input)` with the
    /// pre-activation delta of every layer, last layer first, and leaves the
    /// gradient with respect to the network input in `input_grad`.
    fn backward_with<F>(&self, dloss: f64, scratch: &mut Scratch, input_grad: &mut [f64], mut on_layer: F)
    where
        F: FnMut(usize, &[f64], &[f64]),
    {
        let last = self.layers.len() - 1;
        let out = scratch.activations[last + 1][0];
        scratch.delta[0] = dloss * self.layers[last].activation.derivative_from_output(out);
        for l in (0..=last).rev() {
            let layer = &self.layers[l];
            let delta = &scratch.delta[..layer.outputs];
            let input = &scratch.activations[l];
            on_layer(l, delta, input);
            let next = if l == 0 {
                &mut *input_grad
            } else {
                &mut scratch.delta_next[..layer.inputs]
            };
            next.iter_mut().for_each(|d| *d = 0.0);
            for (row, d) in layer.weights.chunks_exact(layer.inputs).zip(delta) {
                for (n, w) in next.iter_mut().zip(row) {
                    *n += w * d;
                }
            }
            if l > 0 {
                let act = self.layers[l - 1].activation;
                for (n, a) in next.iter_mut().zip(input) {
                    *n *= act.derivative_from_output(*a);
                }
                std::mem::swap(&mut scratch.delta, &mut scratch.delta_next);
            }
        }
    }

    /// Exact gradient of `loss_mse(y, forward(v))` with respect to `v`.
    pub fn input_gradient(&self, v: &[f64], y: f64) -> Result<Vec<f64>> {
        self.check_input(v)?;
        let mut grad = vec![0.0; self.input_dim];
        self.input_gradient_with(v, y, &mut self.scratch(), &mut grad);
        Ok(grad)
    }

    /// Unchecked input gradient; returns the forward score as a by-product.
    pub fn input_gradient_with(&self, v: &[f64], y: f64, scratch: &mut Scratch, grad: &mut [f64]) -> f64 {
        let out = self.forward_with(v, scratch);
        self.backward_with(2.0 * (out - y), scratch, grad, |_, _, _| {});
        out
    }

    /// Gradient of `loss_mse(y, forward(v))` with respect to every parameter.
    pub fn param_gradients(&self, v: &[f64], y: f64) -> Result<Gradients> {
        self.check_input(v)?;
        let mut grads = Gradients::zeros_like(self);
        let mut scratch = self.scratch();
        let mut input_grad = vec![0.0; self.input_dim];
        self.accumulate_param_gradients(v, y, &mut scratch, &mut input_grad, &mut grads);
        Ok(grads)
    }

    /// Mean parameter gradient over a batch of `(input, label)` pairs.
    pub fn batch_param_gradients<V: AsRef<[f64]>>(&self, batch: &[(V, f64)]) -> Result<Gradients> {
        if batch.is_empty() {
            return Err(Error::Precondition("empty batch".into()));
        }
        let mut grads = Gradients::zeros_like(self);
        let mut scratch = self.scratch();
        let mut input_grad = vec![0.0; self.input_dim];
        for (v, y) in batch {
            self.check_input(v.as_ref())?;
            self.accumulate_param_gradients(v.as_ref(), *y, &mut scratch, &mut input_grad, &mut grads);
        }
        grads.scale(1.0 / batch.len() as f64);
        Ok(grads)
    }

    /// Adds this example's parameter gradients into `grads`; returns its loss.
    fn accumulate_param_gradients(
        &self,
        v: &[f64],
        y: f64,
        scratch: &mut Scratch,
        input_grad: &mut [f64],
        grads: &mut Gradients,
    ) -> f64 {
        let out = self.forward_with(v, scratch);
        self.backward_with(2.0 * (out - y), scratch, input_grad, |l, delta, input| {
            let g = &mut grads.layers[l];
            for ((row, d), gb) in g.weights.chunks_exact_mut(input.len()).zip(delta).zip(&mut g.bias) {
                *gb += d;
                for (gw, x) in row.iter_mut().zip(input) {
                    *gw += d * x;
                }
            }
        });
        loss_mse(y, out)
    }
}

/// Squared error `(y − ŷ)²`.
#[inline]
pub fn loss_mse(y: f64, yhat: f64) -> f64 {
    let r = y - yhat;
    r * r
}

fn check_threshold(threshold: f64) -> Result<()> {
    if threshold > 0.0 && threshold < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "decision threshold {threshold} must lie strictly inside (0, 1)"
        )))
    }
}

/// Binarize a score: ties at the threshold resolve to 1.
#[inline]
pub fn label_of(score: f64, threshold: f64) -> u8 {
    u8::from(score >= threshold)
}

pub fn predict_label(net: &DenseNetwork, v: &[f64], threshold: f64) -> Result<u8> {
    check_threshold(threshold)?;
    Ok(label_of(net.forward(v)?, threshold))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    Adam,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub rng_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 32,
            learning_rate: 2e-4,
            optimizer: Optimizer::Adam,
            rng_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, dataset_len: usize) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        if self.batch_size > dataset_len {
            return Err(Error::Config(format!(
                "batch size {} exceeds dataset size {dataset_len}",
                self.batch_size
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub network: DenseNetwork,
    /// Mean training loss of the last epoch (of the untouched network when
    /// `epochs == 0`).
    pub final_loss: f64,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

struct AdamState {
    m: Gradients,
    v: Gradients,
    t: i32,
}

/// Mini-batch training on MSE loss. Shuffling is seeded by `cfg.rng_seed`,
/// so identical inputs give bit-identical networks.
pub fn train<V: AsRef<[f64]>>(mut net: DenseNetwork, data: &[(V, f64)], cfg: &TrainConfig) -> Result<TrainOutcome> {
    if data.is_empty() {
        return Err(Error::Config("training data is empty".into()));
    }
    cfg.validate(data.len())?;
    for (v, y) in data {
        net.check_input(v.as_ref())?;
        if !y.is_finite() {
            return Err(Error::Config("non-finite training label".into()));
        }
    }

    let mut scratch = net.scratch();
    let mut input_grad = vec![0.0; net.input_dim];
    if cfg.epochs == 0 {
        let total: f64 = data
            .iter()
            .map(|(v, y)| loss_mse(*y, net.forward_with(v.as_ref(), &mut scratch)))
            .sum();
        return Ok(TrainOutcome {
            network: net,
            final_loss: total / data.len() as f64,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut grads = Gradients::zeros_like(&net);
    let mut adam = AdamState {
        m: Gradients::zeros_like(&net),
        v: Gradients::zeros_like(&net),
        t: 0,
    };
    let mut final_loss = f64::NAN;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grads.reset();
            for &i in batch {
                let (v, y) = &data[i];
                epoch_loss += net.accumulate_param_gradients(v.as_ref(), *y, &mut scratch, &mut input_grad, &mut grads);
            }
            grads.scale(1.0 / batch.len() as f64);
            match cfg.optimizer {
                Optimizer::Sgd => sgd_step(&mut net, &grads, cfg.learning_rate),
                Optimizer::Adam => adam_step(&mut net, &grads, &mut adam, cfg.learning_rate),
            }
        }
        final_loss = epoch_loss / data.len() as f64;
        if !final_loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
    }
    Ok(TrainOutcome {
        network: net,
        final_loss,
    })
}

fn sgd_step(net: &mut DenseNetwork, grads: &Gradients, lr: f64) {
    for (layer, g) in net.layers.iter_mut().zip(&grads.layers) {
        for (w, d) in layer.weights.iter_mut().zip(&g.weights) {
            *w -= lr * d;
        }
        for (b, d) in layer.bias.iter_mut().zip(&g.bias) {
            *b -= lr * d;
        }
    }
}

fn adam_step(net: &mut DenseNetwork, grads: &Gradients, state: &mut AdamState, lr: f64) {
    state.t += 1;
    let c1 = 1.0 - ADAM_BETA1.powi(state.t);
    let c2 = 1.0 - ADAM_BETA2.powi(state.t);
    let update = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
        for (((p, g), m), v) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
            *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
            *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
        }
    };
    for (l, layer) in net.layers.iter_mut().enumerate() {
        let g = &grads.layers[l];
        let (m, v) = (&mut state.m.layers[l], &mut state.v.layers[l]);
        update(&mut layer.weights, &g.weights, &mut m.weights, &mut v.weights);
        update(&mut layer.bias, &g.bias, &mut m.bias, &mut v.bias);
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    input_dim: usize,
    layers: Vec<Layer>,
    train_config: Option<TrainConfig>,
}

/// Write the network (and the config that trained it) as JSON.
pub fn save_model(path: &Path, net: &DenseNetwork, train_config: Option<&TrainConfig>) -> Result<()> {
    let file = ModelFile {
        format: MODEL_FORMAT.to_string(),
        input_dim: net.input_dim,
        layers: net.layers.clone(),
        train_config: train_config.cloned(),
    };
    io::write_json(path, &file)
}

pub fn load_model(path: &Path) -> Result<(DenseNetwork, Option<TrainConfig>)> {
    let file: ModelFile = io::read_json(path)?;
    if file.format != MODEL_FORMAT {
        return Err(Error::Config(format!(
            "{}: unsupported model format `{}`",
            path.display(),
            file.format
        )));
    }
    Ok((DenseNetwork::new(file.input_dim, file.layers)?, file.train_config))
}
