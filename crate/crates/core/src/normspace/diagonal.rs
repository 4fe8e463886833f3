use std::collections::HashSet;

use crate::error::{Error, Result};

/// Index of a basis vector; for toric section spaces a lattice point.
pub type Label = Vec<i64>;

/// Weighted max norm `‖x‖ = max_j exp(w_j)·|x_j|` on a labelled basis.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalSupNorm {
    labels: Vec<Label>,
    log_weights: Vec<f64>,
}

impl DiagonalSupNorm {
    pub fn new(labels: Vec<Label>, log_weights: Vec<f64>) -> Result<Self> {
        if labels.len() != log_weights.len() {
            return Err(Error::DimensionMismatch {
                expected: labels.len(),
                found: log_weights.len(),
            });
        }
        if labels.is_empty() {
            return Err(Error::InvalidParameter("empty label set".into()));
        }
        if log_weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidParameter("log-weights must be finite".into()));
        }
        let mut seen = HashSet::with_capacity(labels.len());
        if !labels.iter().all(|l| seen.insert(l)) {
            return Err(Error::InvalidParameter("labels must be distinct".into()));
        }
        Ok(Self {
            labels,
            log_weights,
        })
    }

    /// Labels `[0], [1], …` for plain coordinate spaces.
    pub fn unlabeled(log_weights: Vec<f64>) -> Result<Self> {
        let labels = (0..log_weights.len() as i64).map(|i| vec![i]).collect();
        Self::new(labels, log_weights)
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn log_weight_of(&self, label: &[i64]) -> Option<f64> {
        self.labels
            .iter()
            .position(|l| l.as_slice() == label)
            .map(|i| self.log_weights[i])
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(
            x.len(),
            self.dim(),
            "vector length must match the norm dimension"
        );
        self.log_weights
            .iter()
            .zip(x)
            .filter(|(_, xi)| **xi != 0.0)
            .map(|(w, xi)| (w + xi.abs().ln()).exp())
            .fold(0.0, f64::max)
    }

    pub fn same_labels(&self, other: &Self) -> bool {
        self.labels == other.labels
    }

    pub fn with_log_weights(&self, log_weights: Vec<f64>) -> Result<Self> {
        Self::new(self.labels.clone(), log_weights)
    }
}
