//! Finite-difference gradient check of the disentangler loss.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spuriousness::disentangler::{
    loss_and_gradients, target_distribution, Activation, AutoencoderParams, DisentanglerModel, LEAKY_SLOPE,
};

fn random_model(rng: &mut ChaCha8Rng, d: usize, hidden: usize, m: usize, k: usize) -> DisentanglerModel {
    let mut model = DisentanglerModel {
        autoencoder: AutoencoderParams::new(d, hidden, m, rng).unwrap(),
        centers: DMatrix::zeros(k, m),
        gamma: rng.gen_range(0.0..2.0),
        learning_rate: 0.01,
        label_change_tol: 0.001,
    };
    let theta: Vec<f64> = (0..model.flat_parameters().len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    model.set_flat_parameters(&theta).unwrap();
    model
}

/// Smallest distance of a hidden pre-activation from the rectifier kink.
fn kink_margin(model: &DisentanglerModel, batch: &DMatrix<f64>) -> f64 {
    let mut h = batch.transpose();
    let mut margin = f64::INFINITY;
    for layer in &model.autoencoder.layers {
        let mut pre = &layer.weights * &h;
        for mut col in pre.column_iter_mut() {
            col += &layer.bias;
        }
        if layer.activation == Activation::LeakyRelu {
            margin = margin.min(pre.iter().fold(f64::INFINITY, |a, v| a.min(v.abs())));
            h = pre.map(|v| if v < 0.0 { LEAKY_SLOPE * v } else { v });
        } else {
            h = pre;
        }
    }
    margin
}

/// Central differences of the total loss with `target` held fixed.
fn numeric_gradient(model: &DisentanglerModel, batch: &DMatrix<f64>, target: &DMatrix<f64>, h: f64) -> Vec<f64> {
    let theta = model.flat_parameters();
    let mut probe = model.clone();
    (0..theta.len())
        .map(|k| {
            let mut t = theta.clone();
            t[k] = theta[k] + h;
            probe.set_flat_parameters(&t).unwrap();
            let up = loss_and_gradients(&probe, batch, target).unwrap().0.total;
            t[k] = theta[k] - h;
            probe.set_flat_parameters(&t).unwrap();
            let down = loss_and_gradients(&probe, batch, target).unwrap().0.total;
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&diff) / norm(a).max(norm(b)).max(1e-12)
}

#[derive(Debug, Clone)]
pub struct CheckCase {
    pub input_dim: usize,
    pub embedding_dim: usize,
    pub clusters: usize,
    pub batch: usize,
    pub relative_error: f64,
}

/// Random small configurations with every parameter randomized; half use
/// the sharpened target of the model itself, half a fixed unrelated one.
pub fn check_cases(seed: u64, cases: usize) -> Vec<CheckCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..cases)
        .map(|case| {
            let (d, m, k, n) = (rng.gen_range(2..=8), rng.gen_range(1..=4), rng.gen_range(2..=3), rng.gen_range(1..=5));
            let hidden = rng.gen_range(2..=6);
            // Finite differences are meaningless across a kink; redraw instead.
            let (model, batch) = loop {
                let model = random_model(&mut rng, d, hidden, m, k);
                let batch = DMatrix::from_fn(n, d, |_, _| rng.gen_range(0.0..1.0));
                if kink_margin(&model, &batch) > 1e-3 {
                    break (model, batch);
                }
            };
            let q = model.soft_assign(&batch).unwrap();
            let target = if case % 2 == 0 {
                DMatrix::from_fn(n, k, |i, j| if (i + j) % k == 0 { 0.7 } else { 0.3 / (k - 1) as f64 })
            } else {
                target_distribution(&q)
            };
            let (_, grads) = loss_and_gradients(&model, &batch, &target).unwrap();
            let numeric = numeric_gradient(&model, &batch, &target, 1e-5);
            CheckCase {
                input_dim: d,
                embedding_dim: m,
                clusters: k,
                batch: n,
                relative_error: relative_error(&grads.flatten(), &numeric),
            }
        })
        .collect()
}
