//! Logistic-regression probe on flattened pixels and the group accuracy
//! metrics used to judge shortcut learning.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, GroupSpec, GROUPS};
use crate::error::{Error, Result};

/// Per-sample loss weighting during probe training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Balance {
    #[default]
    None,
    /// Inverse group frequency, so every group carries equal total weight.
    Weighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub balance: Balance,
    /// Held-out share of the input; the rest trains the probe.
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            learning_rate: 0.05,
            batch_size: 8,
            balance: Balance::None,
            validation_fraction: 0.3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeParams {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub train_samples: usize,
    /// Accuracy on the held-out split; `None` when it is empty.
    pub validation_accuracy: Option<f64>,
}

impl ProbeParams {
    pub fn score(&self, pixels: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(pixels).map(|(w, x)| w * x).sum::<f64>()
    }

    /// Label 1 iff the score is strictly positive.
    pub fn predict(&self, pixels: &[f64]) -> usize {
        usize::from(self.score(pixels) > 0.0)
    }

    fn correct(&self, dataset: &Dataset, idx: &[usize]) -> usize {
        idx.iter()
            .filter(|&&i| self.predict(&dataset.images[i].pixels) == dataset.images[i].y)
            .count()
    }
}

fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// Minibatch SGD on the (optionally group-weighted) mean cross-entropy
/// with cosine step decay.
pub fn train_probe(dataset: &Dataset, config: &ProbeConfig) -> Result<ProbeParams> {
    if dataset.is_empty() {
        return Err(Error::InvalidArgument("cannot train a probe on an empty dataset".into()));
    }
    if dataset.images.iter().all(|im| im.y == dataset.images[0].y) {
        return Err(Error::InvalidArgument("probe training needs both labels".into()));
    }
    if config.batch_size == 0 || !(0.0..1.0).contains(&config.validation_fraction) {
        return Err(Error::InvalidArgument("batch size must be >= 1 and validation fraction in [0, 1)".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(&mut rng);
    let held_out = (dataset.len() as f64 * config.validation_fraction).round() as usize;
    let (validation, train) = order.split_at(held_out.min(dataset.len() - 1));
    let mut train = train.to_vec();

    let mut counts = [0usize; GROUPS];
    for &i in &train {
        counts[dataset.images[i].group()] += 1;
    }
    let present = counts.iter().filter(|&&c| c > 0).count() as f64;
    let n_train = train.len() as f64;
    let weight = |group: usize| match config.balance {
        Balance::None => 1.0,
        Balance::Weighted => n_train / (present * counts[group] as f64),
    };

    let d = dataset.mask.len();
    let mut w = vec![0.0; d];
    let mut bias = 0.0;
    let steps = config.epochs * train.len().div_ceil(config.batch_size);
    let mut step = 0;
    let mut grad = vec![0.0; d];
    for _ in 0..config.epochs {
        train.shuffle(&mut rng);
        for batch in train.chunks(config.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut grad_b = 0.0;
            for &i in batch {
                let im = &dataset.images[i];
                let s = bias + w.iter().zip(&im.pixels).map(|(a, x)| a * x).sum::<f64>();
                let r = weight(im.group()) * (sigmoid(s) - im.y as f64);
                grad.iter_mut().zip(&im.pixels).for_each(|(g, x)| *g += r * x);
                grad_b += r;
            }
            let lr = 0.5 * config.learning_rate * (1.0 + (std::f64::consts::PI * step as f64 / steps as f64).cos())
                / batch.len() as f64;
            w.iter_mut().zip(&grad).for_each(|(a, g)| *a -= lr * g);
            bias -= lr * grad_b;
            step += 1;
        }
    }
    if !w.iter().all(|v| v.is_finite()) || !bias.is_finite() {
        return Err(Error::TrainingDiverged { last_loss: f64::NAN });
    }
    let mut probe = ProbeParams {
        weights: w,
        bias,
        train_samples: train.len(),
        validation_accuracy: None,
    };
    if !validation.is_empty() {
        probe.validation_accuracy = Some(probe.correct(dataset, validation) as f64 / validation.len() as f64);
    }
    Ok(probe)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupAccuracies {
    pub per_group: [f64; GROUPS],
    /// Accuracy of the group with the fewest training samples, averaged
    /// over tied groups.
    pub worst_group: f64,
    /// Unweighted mean over the four groups.
    pub mean: f64,
}

/// Scores `probe` on `test`; the minority group is taken from
/// `train_counts`.
pub fn group_accuracies(probe: &ProbeParams, test: &Dataset, train_counts: &GroupSpec) -> Result<GroupAccuracies> {
    let mut correct = [0usize; GROUPS];
    let mut total = [0usize; GROUPS];
    for im in &test.images {
        total[im.group()] += 1;
        correct[im.group()] += usize::from(probe.predict(&im.pixels) == im.y);
    }
    if let Some(missing) = total.iter().position(|&t| t == 0) {
        return Err(Error::InvalidArgument(format!("test set has no samples in group {missing:02b}")));
    }
    let per_group: [f64; GROUPS] = std::array::from_fn(|k| correct[k] as f64 / total[k] as f64);
    let fewest = *train_counts.counts.iter().min().expect("four groups");
    let minority: Vec<usize> = (0..GROUPS).filter(|&k| train_counts.counts[k] == fewest).collect();
    Ok(GroupAccuracies {
        per_group,
        worst_group: minority.iter().map(|&k| per_group[k]).sum::<f64>() / minority.len() as f64,
        mean: per_group.iter().sum::<f64>() / GROUPS as f64,
    })
}
