//! Deep embedded clustering on top of the autoencoder.
//!
//! Embeddings `z_i` are softly assigned to centers `μ_j` with a Student-t
//! kernel, the assignment is sharpened into a target `P`, and training
//! minimizes `L = L_r + γ·KL(P ‖ Q)` with `P` held fixed between updates.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::autoencoder::{AutoencoderParams, LayerGradients};
use super::kmeans::fit_kmeans;
use crate::error::{Error, Result};

/// Row-sum tolerance of a [`SoftAssignment`].
pub const ROW_SUM_TOL: f64 = 1e-10;

/// Cluster membership probabilities, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftAssignment(DMatrix<f64>);

impl SoftAssignment {
    pub fn new(q: DMatrix<f64>) -> Result<Self> {
        for (i, row) in q.row_iter().enumerate() {
            if row.iter().any(|&v| !(v > 0.0 && v <= 1.0)) {
                return Err(Error::InvalidDistribution(format!("row {i} has entries outside (0, 1]")));
            }
            if (row.sum() - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidDistribution(format!("row {i} sums to {}", row.sum())));
            }
        }
        Ok(Self(q))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn clusters(&self) -> usize {
        self.0.ncols()
    }
}

/// Student-t kernel `(1 + ‖z_i − μ_j‖²)⁻¹`, samples as columns of `z`.
fn kernel(z: &DMatrix<f64>, centers: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(z.ncols(), centers.nrows(), |i, j| {
        let d2: f64 = z.column(i).iter().zip(centers.row(j).iter()).map(|(a, b)| (a - b) * (a - b)).sum();
        1.0 / (1.0 + d2)
    })
}

fn normalize_rows(mut m: DMatrix<f64>) -> DMatrix<f64> {
    for mut row in m.row_iter_mut() {
        let s = row.sum();
        row /= s;
    }
    m
}

/// Soft assignment of embeddings (`n × m`) to centers (`K × m`).
pub fn soft_assign(z: &DMatrix<f64>, centers: &DMatrix<f64>) -> Result<SoftAssignment> {
    if z.ncols() != centers.ncols() {
        return Err(Error::DimensionMismatch {
            expected: centers.ncols(),
            found: z.ncols(),
        });
    }
    Ok(SoftAssignment(normalize_rows(kernel(&z.transpose(), centers))))
}

/// `p_ij ∝ q_ij² / f_j` with cluster frequencies `f_j = Σ_i q_ij`.
pub fn target_distribution(q: &SoftAssignment) -> DMatrix<f64> {
    let f = q.0.row_sum();
    let mut p = q.0.map(|v| v * v);
    for (j, mut col) in p.column_iter_mut().enumerate() {
        col /= f[j];
    }
    normalize_rows(p)
}

/// Argmax per row; ties go to the lowest index.
pub fn hard_labels(q: &SoftAssignment) -> Vec<usize> {
    q.0.row_iter()
        .map(|row| {
            let mut best = 0;
            for j in 1..row.len() {
                if row[j] > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisentanglerModel {
    pub autoencoder: AutoencoderParams,
    /// `K × m`, one center per row.
    pub centers: DMatrix<f64>,
    /// Weight of the clustering loss.
    pub gamma: f64,
    pub learning_rate: f64,
    /// Label-change fraction below which training stops.
    pub label_change_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Loss {
    pub total: f64,
    pub reconstruction: f64,
    pub clustering: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelGradients {
    pub layers: Vec<LayerGradients>,
    pub centers: DMatrix<f64>,
}

impl ModelGradients {
    /// Same order as [`DisentanglerModel::flat_parameters`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend(l.weights.iter());
            out.extend(l.bias.iter());
        }
        out.extend(self.centers.iter());
        out
    }
}

impl DisentanglerModel {
    pub fn clusters(&self) -> usize {
        self.centers.nrows()
    }

    /// Embeddings of `data` (`n × d`), one row per sample.
    pub fn embed(&self, data: &DMatrix<f64>) -> DMatrix<f64> {
        self.autoencoder.encode(&data.transpose()).transpose()
    }

    pub fn soft_assign(&self, data: &DMatrix<f64>) -> Result<SoftAssignment> {
        soft_assign(&self.embed(data), &self.centers)
    }

    pub fn predict(&self, data: &DMatrix<f64>) -> Result<Vec<usize>> {
        Ok(hard_labels(&self.soft_assign(data)?))
    }

    /// All weights, biases and centers, each in column-major order.
    pub fn flat_parameters(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.autoencoder.layers {
            out.extend(l.weights.iter());
            out.extend(l.bias.iter());
        }
        out.extend(self.centers.iter());
        out
    }

    pub fn set_flat_parameters(&mut self, values: &[f64]) -> Result<()> {
        let expected = self.flat_parameters().len();
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: values.len(),
            });
        }
        let mut it = values.iter().copied();
        for l in &mut self.autoencoder.layers {
            l.weights.iter_mut().chain(l.bias.iter_mut()).for_each(|v| *v = it.next().expect("sized"));
        }
        self.centers.iter_mut().for_each(|v| *v = it.next().expect("sized"));
        Ok(())
    }

    fn apply(&mut self, grads: &ModelGradients, lr: f64, update_centers: bool) {
        for (l, g) in self.autoencoder.layers.iter_mut().zip(&grads.layers) {
            l.weights -= &g.weights * lr;
            l.bias.axpy(-lr, &g.bias, 1.0);
        }
        if update_centers {
            self.centers -= &grads.centers * lr;
        }
    }

    fn is_finite(&self) -> bool {
        self.flat_parameters().iter().all(|v| v.is_finite())
    }
}

/// Loss and gradients for a batch stored one sample per column; `target`
/// holds the matching rows of `P`.
fn batch_loss(model: &DisentanglerModel, x: &DMatrix<f64>, target: &DMatrix<f64>) -> Result<(Loss, ModelGradients)> {
    let n = x.ncols() as f64;
    let ae = &model.autoencoder;
    let pass = ae.forward(x);
    let diff = &pass.output - x;
    let reconstruction = diff.norm_squared() / n;

    let z = pass.embedding(ae.encoder_depth);
    let k = kernel(z, &model.centers);
    let q = normalize_rows(k.clone());
    let mut clustering = 0.0;
    for (p, q) in target.iter().zip(q.iter()) {
        if *p > 0.0 {
            clustering += p * (p / q).ln();
        }
    }
    clustering /= n;
    let total = reconstruction + model.gamma * clustering;
    if !total.is_finite() {
        return Err(Error::TrainingDiverged { last_loss: f64::NAN });
    }

    // ∂L_c/∂z_i = (2/n) Σ_j (p_ij − q_ij) k_ij (z_i − μ_j); centers get the
    // negated sum over samples.
    let mut d_z = DMatrix::zeros(z.nrows(), z.ncols());
    let mut d_centers = DMatrix::zeros(model.centers.nrows(), model.centers.ncols());
    if model.gamma != 0.0 {
        let scale = 2.0 * model.gamma / n;
        for i in 0..z.ncols() {
            for j in 0..model.centers.nrows() {
                let w = scale * (target[(i, j)] - q[(i, j)]) * k[(i, j)];
                for c in 0..z.nrows() {
                    let g = w * (z[(c, i)] - model.centers[(j, c)]);
                    d_z[(c, i)] += g;
                    d_centers[(j, c)] -= g;
                }
            }
        }
    }
    let layers = ae.backward(&pass, diff * (2.0 / n), Some(&d_z));
    Ok((
        Loss {
            total,
            reconstruction,
            clustering,
        },
        ModelGradients {
            layers,
            centers: d_centers,
        },
    ))
}

/// `L = L_r + γ L_c` and its gradients on `batch` (`n × d`) against the
/// fixed target `P` (`n × K`).
pub fn loss_and_gradients(
    model: &DisentanglerModel,
    batch: &DMatrix<f64>,
    target: &DMatrix<f64>,
) -> Result<(Loss, ModelGradients)> {
    if batch.ncols() != model.autoencoder.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.autoencoder.input_dim(),
            found: batch.ncols(),
        });
    }
    if target.shape() != (batch.nrows(), model.clusters()) {
        return Err(Error::DimensionMismatch {
            expected: model.clusters(),
            found: target.ncols(),
        });
    }
    batch_loss(model, &batch.transpose(), target)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingSchedule {
    pub hidden: usize,
    pub embedding: usize,
    pub clusters: usize,
    pub gamma: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Reconstruction-only epochs.
    pub pretrain_epochs: usize,
    /// Cap on joint epochs; `P` is recomputed at the start of each.
    pub max_cluster_epochs: usize,
    pub label_change_tol: f64,
}

impl Default for TrainingSchedule {
    fn default() -> Self {
        Self {
            hidden: 64,
            embedding: 10,
            clusters: 10,
            gamma: 0.1,
            learning_rate: 0.01,
            batch_size: 8,
            pretrain_epochs: 20,
            max_cluster_epochs: 20,
            label_change_tol: 0.001,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingHistory {
    /// Full-data reconstruction loss before any update.
    pub initial_reconstruction: f64,
    /// Mean batch loss per pretraining epoch.
    pub pretrain_losses: Vec<f64>,
    /// Mean batch total loss per joint epoch.
    pub cluster_losses: Vec<f64>,
    /// Label-change fraction at each target update after the first.
    pub label_changes: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainedDisentangler {
    pub model: DisentanglerModel,
    pub labels: Vec<usize>,
    pub history: TrainingHistory,
}

/// Cosine decay from `lr` to 0 over `total` steps.
fn cosine(lr: f64, step: usize, total: usize) -> f64 {
    0.5 * lr * (1.0 + (std::f64::consts::PI * step as f64 / total.max(1) as f64).cos())
}

struct Epoch<'a> {
    x: &'a DMatrix<f64>,
    order: Vec<usize>,
    batch: usize,
}

impl Epoch<'_> {
    fn batches(&self) -> impl Iterator<Item = (Vec<usize>, DMatrix<f64>)> + '_ {
        self.order.chunks(self.batch).map(|idx| (idx.to_vec(), self.x.select_columns(idx)))
    }
}

pub fn train_disentangler(data: &DMatrix<f64>, schedule: &TrainingSchedule, seed: u64) -> Result<TrainedDisentangler> {
    let (n, d) = data.shape();
    let s = schedule;
    if s.clusters == 0 || n < s.clusters {
        return Err(Error::InvalidArgument(format!("need 1 <= K <= n, got K={}, n={n}", s.clusters)));
    }
    if s.batch_size == 0 || !(s.gamma >= 0.0) || !(s.learning_rate > 0.0) {
        return Err(Error::InvalidArgument("batch size, gamma or learning rate out of range".into()));
    }
    if !data.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidArgument("training data contains non-finite values".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let autoencoder = AutoencoderParams::new(d, s.hidden, s.embedding, &mut rng)?;
    let mut model = DisentanglerModel {
        autoencoder,
        centers: DMatrix::zeros(s.clusters, s.embedding),
        gamma: 0.0,
        learning_rate: s.learning_rate,
        label_change_tol: s.label_change_tol,
    };
    let x = data.transpose();
    let mut history = TrainingHistory {
        initial_reconstruction: (model.autoencoder.reconstruct(&x) - &x).norm_squared() / n as f64,
        ..TrainingHistory::default()
    };
    let mut last_loss = history.initial_reconstruction;
    let diverged = |last: f64| Error::TrainingDiverged { last_loss: last };
    let mut order: Vec<usize> = (0..n).collect();
    let steps_per_epoch = n.div_ceil(s.batch_size);

    let no_target = DMatrix::from_element(n, s.clusters, 1.0 / s.clusters as f64);
    // One cosine schedule spans both phases.
    let total = (s.pretrain_epochs + s.max_cluster_epochs) * steps_per_epoch;
    let mut step = 0;
    for _ in 0..s.pretrain_epochs {
        order.shuffle(&mut rng);
        let epoch = Epoch { x: &x, order: order.clone(), batch: s.batch_size };
        let mut sum = 0.0;
        for (idx, xb) in epoch.batches() {
            let target = no_target.select_rows(&idx);
            let (loss, grads) = batch_loss(&model, &xb, &target).map_err(|_| diverged(last_loss))?;
            model.apply(&grads, cosine(s.learning_rate, step, total), false);
            step += 1;
            last_loss = loss.total;
            sum += loss.total * idx.len() as f64;
        }
        if !model.is_finite() {
            return Err(diverged(last_loss));
        }
        history.pretrain_losses.push(sum / n as f64);
    }

    let embeddings = model.embed(data);
    model.centers = fit_kmeans(&embeddings, s.clusters, rng.gen())?.centers;
    model.gamma = s.gamma;

    let mut previous: Option<Vec<usize>> = None;
    for _ in 0..s.max_cluster_epochs {
        let q = model.soft_assign(data).map_err(|_| diverged(last_loss))?;
        let labels = hard_labels(&q);
        if let Some(prev) = &previous {
            let changed = prev.iter().zip(&labels).filter(|(a, b)| a != b).count() as f64 / n as f64;
            history.label_changes.push(changed);
            if changed < s.label_change_tol {
                break;
            }
        }
        previous = Some(labels);
        let p = target_distribution(&q);
        order.shuffle(&mut rng);
        let epoch = Epoch { x: &x, order: order.clone(), batch: s.batch_size };
        let mut sum = 0.0;
        for (idx, xb) in epoch.batches() {
            let target = p.select_rows(&idx);
            let (loss, grads) = batch_loss(&model, &xb, &target).map_err(|_| diverged(last_loss))?;
            model.apply(&grads, cosine(s.learning_rate, step, total), true);
            step += 1;
            last_loss = loss.total;
            sum += loss.total * idx.len() as f64;
        }
        if !model.is_finite() {
            return Err(diverged(last_loss));
        }
        history.cluster_losses.push(sum / n as f64);
    }

    let labels = model.predict(data)?;
    Ok(TrainedDisentangler { model, labels, history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn assignment(rows: &[&[f64]]) -> SoftAssignment {
        let k = rows[0].len();
        SoftAssignment::new(DMatrix::from_row_iterator(rows.len(), k, rows.iter().flat_map(|r| r.iter().copied())))
            .unwrap()
    }

    #[test]
    fn student_t_fixture() {
        let z = DMatrix::from_row_slice(1, 1, &[0.0]);
        let mu = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let q = soft_assign(&z, &mu).unwrap();
        assert!((q.matrix()[(0, 0)] - 2.0 / 3.0).abs() <= 1e-12);
        assert!((q.matrix()[(0, 1)] - 1.0 / 3.0).abs() <= 1e-12);
    }

    #[test]
    fn far_center_takes_no_mass() {
        let z = DMatrix::from_row_slice(1, 1, &[0.0]);
        let mu = DMatrix::from_row_slice(2, 1, &[0.0, 1000.0]);
        assert!(soft_assign(&z, &mu).unwrap().matrix()[(0, 0)] >= 1.0 - 2e-6);
    }

    #[test]
    fn equidistant_is_uniform() {
        let z = DMatrix::from_row_slice(1, 2, &[0.0, 0.0]);
        let mu = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, -1.0, 0.0]);
        let q = soft_assign(&z, &mu).unwrap();
        assert!(q.matrix().iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn target_fixture() {
        let q = assignment(&[&[2.0 / 3.0, 1.0 / 3.0], &[1.0 / 3.0, 2.0 / 3.0]]);
        let p = target_distribution(&q);
        let want = [[0.8, 0.2], [0.2, 0.8]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((p[(i, j)] - want[i][j]).abs() <= 1e-12);
            }
        }
        assert_eq!(hard_labels(&q), vec![0, 1]);
    }

    #[test]
    fn target_sharpens_confident_row() {
        let e = 1e-6;
        let q = assignment(&[&[1.0 - e, e], &[e, 1.0 - e]]);
        let p = target_distribution(&q);
        assert!(p[(0, 0)] > q.matrix()[(0, 0)]);
        let uniform = assignment(&[&[0.5, 0.5], &[0.5, 0.5]]);
        assert!(target_distribution(&uniform).iter().all(|v| *v == 0.5));
    }

    #[test]
    fn ties_take_lowest_index() {
        assert_eq!(hard_labels(&assignment(&[&[0.9, 0.1], &[0.5, 0.5]])), vec![0, 0]);
    }

    fn small_model(seed: u64, gamma: f64) -> DisentanglerModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let autoencoder = AutoencoderParams::new(5, 4, 2, &mut rng).unwrap();
        DisentanglerModel {
            autoencoder,
            centers: DMatrix::from_fn(3, 2, |_, _| rng.gen_range(-1.0..1.0)),
            gamma,
            learning_rate: 0.01,
            label_change_tol: 0.001,
        }
    }

    #[test]
    fn gamma_zero_is_pure_reconstruction() {
        let m = small_model(1, 0.0);
        let batch = DMatrix::from_fn(4, 5, |i, j| (i + 2 * j) as f64 * 0.1);
        let q = m.soft_assign(&batch).unwrap();
        let (loss, grads) = loss_and_gradients(&m, &batch, &target_distribution(&q)).unwrap();
        assert_eq!(loss.total, loss.reconstruction);
        assert!(grads.centers.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn target_equal_to_assignment_has_zero_kl() {
        let m = small_model(2, 0.5);
        let batch = DMatrix::from_fn(3, 5, |i, j| ((i * j) % 3) as f64);
        let q = m.soft_assign(&batch).unwrap();
        let (loss, _) = loss_and_gradients(&m, &batch, q.matrix()).unwrap();
        assert!(loss.clustering.abs() < 1e-15);
    }

    fn blobs(seed: u64, n: usize, d: usize) -> (DMatrix<f64>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.1).unwrap();
        let truth: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let data = DMatrix::from_fn(n, d, |i, _| 3.0 * truth[i] as f64 + noise.sample(&mut rng));
        (data, truth)
    }

    fn quick_schedule(k: usize) -> TrainingSchedule {
        TrainingSchedule {
            hidden: 8,
            embedding: 2,
            clusters: k,
            pretrain_epochs: 10,
            max_cluster_epochs: 5,
            ..TrainingSchedule::default()
        }
    }

    #[test]
    fn recovers_two_blobs() {
        let (data, truth) = blobs(4, 80, 16);
        let out = train_disentangler(&data, &quick_schedule(2), 9).unwrap();
        let agree = out.labels.iter().zip(&truth).filter(|(a, b)| a == b).count();
        assert!(agree == 0 || agree == truth.len(), "agreement {agree}");
        let h = &out.history;
        assert!(h.pretrain_losses.last().unwrap() < &h.initial_reconstruction);
    }

    #[test]
    fn single_cluster() {
        let (data, _) = blobs(5, 20, 4);
        let out = train_disentangler(&data, &quick_schedule(1), 0).unwrap();
        assert!(out.labels.iter().all(|&l| l == 0));
        let q = out.model.soft_assign(&data).unwrap();
        let (loss, _) = loss_and_gradients(&out.model, &data, &target_distribution(&q)).unwrap();
        assert_eq!(loss.clustering, 0.0);
    }

    #[test]
    fn deterministic_under_seed() {
        let (data, _) = blobs(6, 40, 6);
        let a = train_disentangler(&data, &quick_schedule(3), 17).unwrap();
        let b = train_disentangler(&data, &quick_schedule(3), 17).unwrap();
        assert_eq!(a.labels, b.labels);
        assert_eq!(a.model.flat_parameters(), b.model.flat_parameters());
    }

    #[test]
    fn rejects_too_few_samples() {
        let (data, _) = blobs(7, 3, 4);
        assert!(train_disentangler(&data, &quick_schedule(4), 0).is_err());
    }
}
