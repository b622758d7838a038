//! From per-sample labels to a joint pmf, and the end-to-end measurement:
//! discretize `F` and `B` separately, histogram `(Y, F, B)`, decompose.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::disentangler::{fit_kmeans, fit_pca, train_disentangler, TrainingSchedule};
use crate::dist::JointPmf3;
use crate::error::{Error, Result};
use crate::pid::{pid_decompose, PidResult, SolverConfig};

/// `(y, f, b)` label triples over declared alphabets.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTriples {
    dims: [usize; 3],
    triples: Vec<[usize; 3]>,
}

impl LabeledTriples {
    pub fn new(dims: [usize; 3], triples: Vec<[usize; 3]>) -> Result<Self> {
        if triples.is_empty() {
            return Err(Error::InvalidArgument("no samples to histogram".into()));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidArgument("alphabet sizes must be >= 1".into()));
        }
        for (i, t) in triples.iter().enumerate() {
            if t.iter().zip(&dims).any(|(v, d)| v >= d) {
                return Err(Error::InvalidArgument(format!("sample {i} label {t:?} outside alphabets {dims:?}")));
            }
        }
        Ok(Self { dims, triples })
    }

    /// Zips three label columns; alphabets are `max + 1` unless given.
    pub fn from_columns(y: &[usize], f: &[usize], b: &[usize], dims: Option<[usize; 3]>) -> Result<Self> {
        for col in [f, b] {
            if col.len() != y.len() {
                return Err(Error::DimensionMismatch {
                    expected: y.len(),
                    found: col.len(),
                });
            }
        }
        let size = |c: &[usize]| c.iter().max().map_or(0, |m| m + 1);
        let dims = dims.unwrap_or([size(y), size(f), size(b)]);
        Self::new(dims, (0..y.len()).map(|i| [y[i], f[i], b[i]]).collect())
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn counts(&self) -> Vec<u64> {
        let [_, nf, nb] = self.dims;
        let mut counts = vec![0u64; self.dims.iter().product()];
        for &[y, f, b] in &self.triples {
            counts[(y * nf + f) * nb + b] += 1;
        }
        counts
    }
}

/// Empirical pmf with additive smoothing: `(count + ε) / (N + ε·cells)`.
pub fn histogram_joint(triples: &LabeledTriples, epsilon: f64) -> Result<JointPmf3> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidArgument(format!("smoothing must be finite and >= 0, got {epsilon}")));
    }
    let counts = triples.counts();
    let denom = triples.len() as f64 + epsilon * counts.len() as f64;
    JointPmf3::new(triples.dims(), counts.iter().map(|&c| (c as f64 + epsilon) / denom).collect())
}

/// How feature matrices are turned into cluster labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Discretizer {
    #[default]
    PcaKmeans,
    Dec,
}

impl FromStr for Discretizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pca-kmeans" => Ok(Self::PcaKmeans),
            "dec" => Ok(Self::Dec),
            other => Err(Error::InvalidArgument(format!("unknown discretizer {other:?}"))),
        }
    }
}

impl fmt::Display for Discretizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::PcaKmeans => "pca-kmeans",
            Self::Dec => "dec",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub discretizer: Discretizer,
    pub kf: usize,
    pub kb: usize,
    pub epsilon: f64,
    /// PCA dimension before k-means; clamped to the data shape.
    pub pca_components: usize,
    /// Autoencoder settings; `clusters` is overridden by `kf` / `kb`.
    pub schedule: TrainingSchedule,
    pub solver: SolverConfig,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            discretizer: Discretizer::default(),
            kf: 10,
            kb: 10,
            epsilon: 0.0,
            pca_components: 10,
            schedule: TrainingSchedule::default(),
            solver: SolverConfig::default(),
            seed: 0,
        }
    }
}

/// Cluster label per row of `data`.
pub fn discretize(data: &DMatrix<f64>, k: usize, config: &PipelineConfig, seed: u64) -> Result<Vec<usize>> {
    match config.discretizer {
        Discretizer::PcaKmeans => {
            let (n, d) = data.shape();
            let components = config.pca_components.min(n).min(d).max(1);
            let scores = fit_pca(data, components)?.transform(data);
            Ok(fit_kmeans(&scores, k, seed)?.predict(&scores))
        }
        Discretizer::Dec => {
            let schedule = TrainingSchedule {
                clusters: k,
                ..config.schedule
            };
            Ok(train_disentangler(data, &schedule, seed)?.labels)
        }
    }
}

/// Discretizes both feature blocks and histograms them with the labels.
pub fn estimate_joint(
    foreground: &DMatrix<f64>,
    background: &DMatrix<f64>,
    labels: &[usize],
    config: &PipelineConfig,
) -> Result<JointPmf3> {
    let n = labels.len();
    for m in [foreground, background] {
        if m.nrows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: m.nrows(),
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (seed_f, seed_b) = (rng.gen(), rng.gen());
    let f = discretize(foreground, config.kf, config, seed_f)?;
    let b = discretize(background, config.kb, config, seed_b)?;
    let ny = labels.iter().max().map_or(1, |m| m + 1);
    let triples = LabeledTriples::from_columns(labels, &f, &b, Some([ny, config.kf, config.kb]))?;
    histogram_joint(&triples, config.epsilon)
}

/// Full decomposition of the estimated joint; the spuriousness is
/// `uni_b_given_f`.
pub fn spuriousness_pipeline(
    foreground: &DMatrix<f64>,
    background: &DMatrix<f64>,
    labels: &[usize],
    config: &PipelineConfig,
) -> Result<PidResult> {
    pid_decompose(&estimate_joint(foreground, background, labels, config)?, &config.solver)
}
