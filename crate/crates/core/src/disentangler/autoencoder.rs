//! Fully connected autoencoder `d → hidden → m → hidden → d` with
//! leaky-rectifier hidden layers and linear embedding and output layers.
//! Samples are stored as columns so a batch is one matrix product per layer.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LEAKY_SLOPE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    LeakyRelu,
    Linear,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::LeakyRelu if x < 0.0 => LEAKY_SLOPE * x,
            _ => x,
        }
    }

    fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::LeakyRelu if pre < 0.0 => LEAKY_SLOPE,
            _ => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `outputs × inputs`.
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub activation: Activation,
}

impl Dense {
    /// Glorot-uniform weights, zero bias.
    fn init(inputs: usize, outputs: usize, activation: Activation, rng: &mut impl Rng) -> Self {
        let a = (6.0 / (inputs + outputs) as f64).sqrt();
        Self {
            weights: DMatrix::from_fn(outputs, inputs, |_, _| rng.gen_range(-a..a)),
            bias: DVector::zeros(outputs),
            activation,
        }
    }

    fn pre_activation(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut pre = &self.weights * x;
        for mut col in pre.column_iter_mut() {
            col += &self.bias;
        }
        pre
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutoencoderParams {
    /// Encoder layers then decoder layers; the embedding is the output of
    /// the last encoder layer.
    pub layers: Vec<Dense>,
    pub encoder_depth: usize,
}

/// Activations kept for the backward pass.
pub(crate) struct ForwardPass {
    /// Layer inputs; `inputs[0]` is the batch.
    inputs: Vec<DMatrix<f64>>,
    pre: Vec<DMatrix<f64>>,
    pub output: DMatrix<f64>,
}

impl ForwardPass {
    pub fn embedding(&self, encoder_depth: usize) -> &DMatrix<f64> {
        &self.inputs[encoder_depth]
    }
}

/// Per-layer `(weights, bias)` gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradients {
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
}

impl AutoencoderParams {
    pub fn new(input: usize, hidden: usize, embedding: usize, rng: &mut impl Rng) -> Result<Self> {
        if input == 0 || hidden == 0 || embedding == 0 {
            return Err(Error::InvalidArgument("layer sizes must be >= 1".into()));
        }
        use Activation::*;
        let layers = vec![
            Dense::init(input, hidden, LeakyRelu, rng),
            Dense::init(hidden, embedding, Linear, rng),
            Dense::init(embedding, hidden, LeakyRelu, rng),
            Dense::init(hidden, input, Linear, rng),
        ];
        Ok(Self {
            layers,
            encoder_depth: 2,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.ncols()
    }

    pub fn embedding_dim(&self) -> usize {
        self.layers[self.encoder_depth - 1].weights.nrows()
    }

    /// Checks adjacent shapes and finiteness, e.g. after loading a checkpoint.
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() || self.encoder_depth == 0 || self.encoder_depth >= self.layers.len() {
            return Err(Error::InvalidArgument("autoencoder needs encoder and decoder layers".into()));
        }
        for pair in self.layers.windows(2) {
            if pair[0].weights.nrows() != pair[1].weights.ncols() {
                return Err(Error::DimensionMismatch {
                    expected: pair[0].weights.nrows(),
                    found: pair[1].weights.ncols(),
                });
            }
        }
        for l in &self.layers {
            if l.bias.len() != l.weights.nrows() {
                return Err(Error::DimensionMismatch {
                    expected: l.weights.nrows(),
                    found: l.bias.len(),
                });
            }
            if !l.weights.iter().chain(l.bias.iter()).all(|v| v.is_finite()) {
                return Err(Error::InvalidArgument("non-finite autoencoder parameter".into()));
            }
        }
        let (first, last) = (&self.layers[0], &self.layers[self.layers.len() - 1]);
        if first.weights.ncols() != last.weights.nrows() {
            return Err(Error::DimensionMismatch {
                expected: first.weights.ncols(),
                found: last.weights.nrows(),
            });
        }
        Ok(())
    }

    /// Runs `x` (one sample per column) through all layers.
    pub(crate) fn forward(&self, x: &DMatrix<f64>) -> ForwardPass {
        let mut inputs = vec![x.clone()];
        let mut pre = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let z = layer.pre_activation(inputs.last().expect("nonempty"));
            inputs.push(z.map(|v| layer.activation.apply(v)));
            pre.push(z);
        }
        let output = inputs.pop().expect("nonempty");
        ForwardPass { inputs, pre, output }
    }

    /// Embeddings of `x`, one column per sample.
    pub fn encode(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut h = x.clone();
        for layer in &self.layers[..self.encoder_depth] {
            h = layer.pre_activation(&h).map(|v| layer.activation.apply(v));
        }
        h
    }

    pub fn reconstruct(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.forward(x).output
    }

    /// Reverse pass given the gradient on the output and an extra gradient
    /// injected at the embedding.
    pub(crate) fn backward(
        &self,
        pass: &ForwardPass,
        d_output: DMatrix<f64>,
        d_embedding: Option<&DMatrix<f64>>,
    ) -> Vec<LayerGradients> {
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut upstream = d_output;
        for (k, layer) in self.layers.iter().enumerate().rev() {
            if k + 1 == self.encoder_depth {
                if let Some(extra) = d_embedding {
                    upstream += extra;
                }
            }
            let delta = upstream.zip_map(&pass.pre[k], |g, z| g * layer.activation.derivative(z));
            grads.push(LayerGradients {
                weights: &delta * pass.inputs[k].transpose(),
                bias: delta.column_sum(),
            });
            upstream = layer.weights.transpose() * delta;
        }
        grads.reverse();
        grads
    }
}
