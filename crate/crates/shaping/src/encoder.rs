//! Affine encoder with unit-norm outputs.
//!
//! The embedding map is `z = normalize(W x + b)`; normalization is part of
//! the model contract, so every forward call returns unit vectors.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EncoderError {
    #[error("non-finite parameter at {0}")]
    NonFinite(String),
    #[error("input dimension {got} does not match encoder input {expected}")]
    InputDim { got: usize, expected: usize },
    #[error("encoder output collapsed to the zero vector for column {0}")]
    ZeroOutput(usize),
}

/// `z = (W x + b) / || W x + b ||`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearEncoder {
    weight: DMatrix<f64>,
    bias: DVector<f64>,
}

impl LinearEncoder {
    pub fn new(weight: DMatrix<f64>, bias: DVector<f64>) -> Result<Self, EncoderError> {
        if weight.iter().any(|v| !v.is_finite()) {
            return Err(EncoderError::NonFinite("weight".into()));
        }
        if bias.iter().any(|v| !v.is_finite()) {
            return Err(EncoderError::NonFinite("bias".into()));
        }
        assert_eq!(weight.nrows(), bias.len());
        Ok(LinearEncoder { weight, bias })
    }

    pub fn weight(&self) -> &DMatrix<f64> {
        &self.weight
    }

    pub fn bias(&self) -> &DVector<f64> {
        &self.bias
    }

    pub fn input_dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn embed_dim(&self) -> usize {
        self.weight.nrows()
    }

    /// Raw affine outputs `W X + b`, one column per sample.
    pub fn affine_batch(&self, inputs: &DMatrix<f64>) -> Result<DMatrix<f64>, EncoderError> {
        if inputs.nrows() != self.input_dim() {
            return Err(EncoderError::InputDim {
                got: inputs.nrows(),
                expected: self.input_dim(),
            });
        }
        let mut v = &self.weight * inputs;
        for j in 0..v.ncols() {
            let mut col = v.column_mut(j);
            col += &self.bias;
        }
        Ok(v)
    }

    /// Unit-norm embeddings, one column per sample.
    pub fn forward_batch(&self, inputs: &DMatrix<f64>) -> Result<DMatrix<f64>, EncoderError> {
        let mut v = self.affine_batch(inputs)?;
        for j in 0..v.ncols() {
            let norm = v.column(j).norm();
            if norm <= 1e-300 {
                return Err(EncoderError::ZeroOutput(j));
            }
            let mut col = v.column_mut(j);
            col /= norm;
        }
        Ok(v)
    }

    pub fn forward(&self, input: &DVector<f64>) -> Result<DVector<f64>, EncoderError> {
        let m = DMatrix::from_columns(&[input.clone()]);
        Ok(self.forward_batch(&m)?.column(0).into_owned())
    }
}

/// Serialized encoder: row-major weight rows, bias, config echo, final loss.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub input_dim: usize,
    pub embed_dim: usize,
    /// Weight matrix as rows (row-major).
    pub weight: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub config: serde_json::Value,
    pub final_loss: f64,
}

impl Checkpoint {
    pub fn from_encoder(
        encoder: &LinearEncoder,
        config: serde_json::Value,
        final_loss: f64,
    ) -> Self {
        let weight = (0..encoder.embed_dim())
            .map(|i| encoder.weight().row(i).iter().cloned().collect())
            .collect();
        Checkpoint {
            input_dim: encoder.input_dim(),
            embed_dim: encoder.embed_dim(),
            weight,
            bias: encoder.bias().iter().cloned().collect(),
            config,
            final_loss,
        }
    }

    pub fn to_encoder(&self) -> Result<LinearEncoder, EncoderError> {
        let weight = DMatrix::from_fn(self.embed_dim, self.input_dim, |i, j| self.weight[i][j]);
        let bias = DVector::from_vec(self.bias.clone());
        LinearEncoder::new(weight, bias)
    }
}
