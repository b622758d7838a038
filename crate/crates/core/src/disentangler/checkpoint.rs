//! JSON checkpoints: every tensor is stored with its shape and row-major
//! data.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::autoencoder::{Activation, AutoencoderParams, Dense};
use super::dec::DisentanglerModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    fn matrix(m: &DMatrix<f64>) -> Self {
        Self {
            shape: vec![m.nrows(), m.ncols()],
            data: m.transpose().iter().copied().collect(),
        }
    }

    fn vector(v: &DVector<f64>) -> Self {
        Self {
            shape: vec![v.len()],
            data: v.iter().copied().collect(),
        }
    }

    fn check(&self, rank: usize) -> Result<()> {
        let expected: usize = self.shape.iter().product();
        if self.shape.len() != rank || self.data.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "tensor shape {:?} does not match {} values",
                self.shape,
                self.data.len()
            )));
        }
        Ok(())
    }

    fn to_matrix(&self) -> Result<DMatrix<f64>> {
        self.check(2)?;
        Ok(DMatrix::from_row_slice(self.shape[0], self.shape[1], &self.data))
    }

    fn to_vector(&self) -> Result<DVector<f64>> {
        self.check(1)?;
        Ok(DVector::from_column_slice(&self.data))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LayerRecord {
    activation: Activation,
    weights: Tensor,
    bias: Tensor,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Checkpoint {
    layers: Vec<LayerRecord>,
    encoder_depth: usize,
    centers: Tensor,
    gamma: f64,
    learning_rate: f64,
    label_change_tol: f64,
}

impl DisentanglerModel {
    pub fn to_json(&self) -> Result<String> {
        let ck = Checkpoint {
            layers: self
                .autoencoder
                .layers
                .iter()
                .map(|l| LayerRecord {
                    activation: l.activation,
                    weights: Tensor::matrix(&l.weights),
                    bias: Tensor::vector(&l.bias),
                })
                .collect(),
            encoder_depth: self.autoencoder.encoder_depth,
            centers: Tensor::matrix(&self.centers),
            gamma: self.gamma,
            learning_rate: self.learning_rate,
            label_change_tol: self.label_change_tol,
        };
        Ok(serde_json::to_string(&ck)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(text)?;
        let layers = ck
            .layers
            .iter()
            .map(|r| {
                Ok(Dense {
                    weights: r.weights.to_matrix()?,
                    bias: r.bias.to_vector()?,
                    activation: r.activation,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let autoencoder = AutoencoderParams {
            layers,
            encoder_depth: ck.encoder_depth,
        };
        autoencoder.validate()?;
        let centers = ck.centers.to_matrix()?;
        if centers.ncols() != autoencoder.embedding_dim() {
            return Err(Error::DimensionMismatch {
                expected: autoencoder.embedding_dim(),
                found: centers.ncols(),
            });
        }
        Ok(Self {
            autoencoder,
            centers,
            gamma: ck.gamma,
            learning_rate: ck.learning_rate,
            label_change_tol: ck.label_change_tol,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(std::fs::write(path, self.to_json()?)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
