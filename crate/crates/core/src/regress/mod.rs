//! Regression forecasters for percent change and volatility.
//!
//! Everything here takes raw feature rows: ordinary least squares via
//! the normal equations (with a ridge fallback for ill-conditioned systems),
//! a full degree-2 polynomial basis on top of it, and second-order gradient
//! boosted trees with an optional gradient-based one-side sampling mode.

mod gbt;
mod goss;
mod linear;

pub use gbt::{gbt_fit, GbtEnsemble, GbtParams, GossParams, Node, Tree};
pub use goss::goss_sample;
pub use linear::{ols_fit, ols_solve, poly_expand, poly_fit, FeatureRecipe, LinearModel, OlsSolution, PolyBasis};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegressError {
    #[error("design matrix has {rows} rows but target has {targets}")]
    ShapeMismatch { rows: usize, targets: usize },
    #[error("design matrix contains a non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("need at least {needed} rows, found {found}")]
    TooFewRows { needed: usize, found: usize },
    #[error("row has {found} features, model expects {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("only degree 2 polynomial expansion is supported, got {0}")]
    UnsupportedDegree(usize),
    #[error("normal equations could not be solved even with ridge regularization")]
    Singular,
    #[error("empty input")]
    EmptyInput,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// A dense row-major feature matrix with its regression target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    target: Vec<f64>,
}

impl DesignMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>, target: Vec<f64>) -> Result<Self, RegressError> {
        if values.len() != rows * cols {
            return Err(RegressError::ShapeMismatch {
                rows: values.len() / cols.max(1),
                targets: target.len(),
            });
        }
        if target.len() != rows {
            return Err(RegressError::ShapeMismatch {
                rows,
                targets: target.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(RegressError::NonFinite {
                row: i / cols,
                col: i % cols,
            });
        }
        if let Some(i) = target.iter().position(|v| !v.is_finite()) {
            return Err(RegressError::NonFinite { row: i, col: cols });
        }
        Ok(Self {
            rows,
            cols,
            values,
            target,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], target: Vec<f64>) -> Result<Self, RegressError> {
        let cols = rows.first().map(|r| r.len()).unwrap_or(0);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(RegressError::WidthMismatch {
                expected: cols,
                found: bad.len(),
            });
        }
        Self::new(rows.len(), cols, rows.concat(), target)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// A fitted single-output regressor.
pub trait Regressor {
    /// Number of raw features a row must carry.
    fn n_features(&self) -> usize;

    fn predict_unchecked(&self, row: &[f64]) -> f64;

    fn predict(&self, row: &[f64]) -> Result<f64, RegressError> {
        if row.len() != self.n_features() {
            return Err(RegressError::WidthMismatch {
                expected: self.n_features(),
                found: row.len(),
            });
        }
        Ok(self.predict_unchecked(row))
    }
}

/// Width-checked prediction through any fitted model.
pub fn predict<M: Regressor + ?Sized>(model: &M, row: &[f64]) -> Result<f64, RegressError> {
    model.predict(row)
}
