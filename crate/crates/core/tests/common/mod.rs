#![allow(dead_code)]

use std::path::PathBuf;

use fairsearch::data::{load_dataset, DatasetSchema, Instance};
use fairsearch::nncore::{loss_mse, Activation, DenseNetwork};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-4;
pub const FD_REL_TOL: f64 = 1e-4;
pub const FD_ABS_TOL: f64 = 1e-6;

pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn german_paths() -> (PathBuf, PathBuf) {
    let root = workspace_root();
    (root.join("data/german_credit.csv"), root.join("schemas/german_credit.json"))
}

pub fn german() -> (DatasetSchema, Vec<Instance>) {
    let (data, schema) = german_paths();
    let schema = DatasetSchema::load(&schema).unwrap();
    let data = load_dataset(&data, &schema).unwrap();
    (schema, data)
}

/// Signs of every ReLU pre-activation, computed independently of the crate.
pub fn relu_pattern(net: &DenseNetwork, v: &[f64]) -> Vec<bool> {
    let mut pattern = Vec::new();
    let mut a = v.to_vec();
    for layer in net.layers() {
        let z: Vec<f64> = layer
            .weights
            .chunks(layer.inputs)
            .zip(&layer.bias)
            .map(|(row, b)| b + row.iter().zip(&a).map(|(w, x)| w * x).sum::<f64>())
            .collect();
        a = match layer.activation {
            Activation::Relu => {
                pattern.extend(z.iter().map(|z| *z > 0.0));
                z.iter().map(|z| z.max(0.0)).collect()
            }
            Activation::Sigmoid => z.iter().map(|z| 1.0 / (1.0 + (-z).exp())).collect(),
        };
    }
    pattern
}

pub fn close(analytic: f64, numeric: f64) -> bool {
    let err = (analytic - numeric).abs();
    err < FD_ABS_TOL || err / analytic.abs().max(numeric.abs()) < FD_REL_TOL
}

#[derive(Debug, Default)]
pub struct GradientCheck {
    pub triples: usize,
    /// Draws discarded because a finite-difference stencil crossed a ReLU
    /// kink, where the derivative does not exist.
    pub resampled: usize,
    pub coordinates: usize,
    pub mismatches: Vec<String>,
}

fn random_triple(rng: &mut ChaCha8Rng, index: usize) -> (DenseNetwork, Vec<f64>, f64) {
    let mut net = if index % 10 == 0 {
        DenseNetwork::fcnn6(20, rng.gen()).unwrap()
    } else {
        let dim = rng.gen_range(1..=24);
        let hidden: Vec<usize> = (0..rng.gen_range(0..=5)).map(|_| rng.gen_range(1..=32)).collect();
        DenseNetwork::initialized(dim, &hidden, rng.gen()).unwrap()
    };
    for layer in net.layers_mut() {
        for b in &mut layer.bias {
            *b = rng.gen_range(-0.5..0.5);
        }
    }
    let v = (0..net.input_dim()).map(|_| rng.gen_range(0.0..1.0)).collect();
    let y = if rng.gen_bool(0.5) { rng.gen_range(0.0..1.0) } else { f64::from(rng.gen_range(0..2u8)) };
    (net, v, y)
}

fn loss(net: &DenseNetwork, v: &[f64], y: f64) -> f64 {
    loss_mse(y, net.forward(v).unwrap())
}

/// Compare analytic input and parameter gradients with central differences
/// on `n` random (network, input, label) triples.
pub fn gradient_check(n: usize, seed: u64) -> GradientCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = GradientCheck::default();
    let mut index = 0;
    while report.triples < n {
        let (net, v, y) = random_triple(&mut rng, index);
        index += 1;
        if let Some(mismatches) = check_triple(&net, &v, y) {
            report.coordinates += net.input_dim() + net.layers().iter().map(|l| l.weights.len() + l.bias.len()).sum::<usize>();
            report.mismatches.extend(mismatches);
            report.triples += 1;
        } else {
            report.resampled += 1;
        }
    }
    report
}

/// `None` when some stencil point changes the ReLU pattern.
fn check_triple(net: &DenseNetwork, v: &[f64], y: f64) -> Option<Vec<String>> {
    let base = relu_pattern(net, v);
    let mut mismatches = Vec::new();

    let g = net.input_gradient(v, y).unwrap();
    for i in 0..v.len() {
        let (mut plus, mut minus) = (v.to_vec(), v.to_vec());
        plus[i] += FD_STEP;
        minus[i] -= FD_STEP;
        if relu_pattern(net, &plus) != base || relu_pattern(net, &minus) != base {
            return None;
        }
        let numeric = (loss(net, &plus, y) - loss(net, &minus, y)) / (2.0 * FD_STEP);
        if !close(g[i], numeric) {
            mismatches.push(format!("input {i}: analytic {} numeric {numeric}", g[i]));
        }
    }

    let grads = net.param_gradients(v, y).unwrap();
    for (l, lg) in grads.layers.iter().enumerate() {
        let n_weights = lg.weights.len();
        for (p, analytic) in lg.weights.iter().chain(&lg.bias).enumerate() {
            let shifted = |delta: f64| {
                let mut n = net.clone();
                let layer = &mut n.layers_mut()[l];
                if p < n_weights {
                    layer.weights[p] += delta;
                } else {
                    layer.bias[p - n_weights] += delta;
                }
                n
            };
            let (plus, minus) = (shifted(FD_STEP), shifted(-FD_STEP));
            if relu_pattern(&plus, v) != base || relu_pattern(&minus, v) != base {
                return None;
            }
            let numeric = (loss(&plus, v, y) - loss(&minus, v, y)) / (2.0 * FD_STEP);
            if !close(*analytic, numeric) {
                mismatches.push(format!("layer {l} param {p}: analytic {analytic} numeric {numeric}"));
            }
        }
    }
    Some(mismatches)
}
