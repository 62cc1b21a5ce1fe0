use serde::{Deserialize, Serialize};

use crate::basis::WidthVector;
use crate::error::{PavgError, Result};

/// Inverse temperature and per-axis particle masses (`ħ = 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Physics {
    pub beta: f64,
    pub masses: Vec<f64>,
}

impl Physics {
    pub fn new(beta: f64, masses: Vec<f64>) -> Result<Self> {
        let p = Self { beta, masses };
        p.sigma()?;
        Ok(p)
    }

    /// Unit masses in `dim` dimensions.
    pub fn unit(beta: f64, dim: usize) -> Result<Self> {
        Self::new(beta, vec![1.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.masses.len()
    }

    pub fn sigma(&self) -> Result<WidthVector> {
        WidthVector::from_beta(self.beta, &self.masses)
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(PavgError::InvalidArgument(format!("beta must be positive, got {beta}")));
        }
        Ok(Self { beta, masses: self.masses.clone() })
    }
}
