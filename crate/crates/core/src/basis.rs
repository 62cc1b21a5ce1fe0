//! Orthonormal function families on `[0, 1]` and the random-series
//! (Ito–Nisio) construction of the Brownian bridge built from them.
//!
//! A family `{λ_k}_{k ≥ 1}` that, together with the constant `λ_0 = 1`,
//! is orthonormal in `L²[0, 1]` yields the bridge
//! `B_u = Σ_k a_k Λ_k(u)` with i.i.d. standard-normal `a_k`, where `Λ_k`
//! is the primitive of `λ_k`. Averaging out the modes above `n` leaves a
//! Gaussian of variance `Γ_n²(u) = σ² [u(1−u) − Σ_{k≤n} Λ_k(u)²]`.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{PavgError, Result};
use crate::quadrature::QuadratureRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    /// `λ_k(τ) = √2 cos(kπτ)`, `Λ_k(u) = √2 sin(kπu)/(kπ)` (Wiener / Fourier path integral).
    #[default]
    FourierSine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisSet {
    pub kind: BasisKind,
    pub max_k: usize,
}

impl Default for BasisSet {
    fn default() -> Self {
        Self { kind: BasisKind::FourierSine, max_k: Self::DEFAULT_MAX_K }
    }
}

impl BasisSet {
    pub const DEFAULT_MAX_K: usize = 4096;

    pub fn new(kind: BasisKind, max_k: usize) -> Result<Self> {
        if max_k == 0 {
            return Err(PavgError::InvalidArgument("basis max_k must be positive".into()));
        }
        Ok(Self { kind, max_k })
    }

    fn check_mode(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.max_k {
            return Err(PavgError::InvalidArgument(format!("mode index {k} outside 1..={}", self.max_k)));
        }
        Ok(())
    }

    fn check_order(&self, n: usize) -> Result<()> {
        if n > self.max_k {
            return Err(PavgError::InvalidArgument(format!("series order {n} exceeds max_k = {}", self.max_k)));
        }
        Ok(())
    }

    fn check_unit(t: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&t) {
            return Err(PavgError::InvalidArgument(format!("argument {t} outside [0, 1]")));
        }
        Ok(())
    }

    /// `λ_k(τ)`.
    pub fn lambda(&self, k: usize, tau: f64) -> Result<f64> {
        self.check_mode(k)?;
        Self::check_unit(tau)?;
        Ok(self.lambda_unchecked(k, tau))
    }

    /// `Λ_k(u) = ∫_0^u λ_k`.
    pub fn primitive(&self, k: usize, u: f64) -> Result<f64> {
        self.check_mode(k)?;
        Self::check_unit(u)?;
        Ok(self.primitive_unchecked(k, u))
    }

    #[inline]
    pub(crate) fn lambda_unchecked(&self, k: usize, tau: f64) -> f64 {
        match self.kind {
            BasisKind::FourierSine => SQRT_2 * (k as f64 * PI * tau).cos(),
        }
    }

    #[inline]
    pub(crate) fn primitive_unchecked(&self, k: usize, u: f64) -> f64 {
        match self.kind {
            BasisKind::FourierSine => {
                let kp = k as f64 * PI;
                SQRT_2 * (kp * u).sin() / kp
            }
        }
    }

    /// `Σ_{k=1..n} Λ_k(u)²`.
    pub fn partial_sum_sq(&self, n: usize, u: f64) -> Result<f64> {
        self.check_order(n)?;
        Self::check_unit(u)?;
        Ok(self.partial_sum_sq_unchecked(n, u))
    }

    pub(crate) fn partial_sum_sq_unchecked(&self, n: usize, u: f64) -> f64 {
        (1..=n).map(|k| self.primitive_unchecked(k, u).powi(2)).sum()
    }

    /// Residual bridge variance for unit width, `max(0, u(1−u) − Σ_{k≤n} Λ_k²)`.
    pub(crate) fn residual_unit(&self, n: usize, u: f64) -> f64 {
        (u * (1.0 - u) - self.partial_sum_sq_unchecked(n, u)).max(0.0)
    }

    /// `Γ_n²(u)` per dimension.
    pub fn gamma_sq(&self, n: usize, u: f64, sigma: &WidthVector) -> Result<Vec<f64>> {
        self.check_order(n)?;
        Self::check_unit(u)?;
        let r = self.residual_unit(n, u);
        Ok(sigma.0.iter().map(|s| s * s * r).collect())
    }

    /// Truncated bridge `Σ_{k=1..n} a_k Λ_k(u)` for scalar coefficients.
    pub fn bridge_point(&self, coeffs: &[f64], u: f64) -> Result<f64> {
        self.check_order(coeffs.len())?;
        Self::check_unit(u)?;
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(PavgError::InvalidArgument("bridge coefficients must be finite".into()));
        }
        Ok(coeffs.iter().enumerate().map(|(i, a)| a * self.primitive_unchecked(i + 1, u)).sum())
    }

    /// `max_{0≤j,k≤k_max} |∫ λ_j λ_k − δ_jk|` with `λ_0 = 1`, by Gauss–Legendre quadrature.
    pub fn orthonormality_defect(&self, k_max: usize, quad_points: usize) -> Result<f64> {
        self.check_order(k_max)?;
        let rule = QuadratureRule::gauss_legendre(quad_points)?;
        let f = |k: usize, t: f64| if k == 0 { 1.0 } else { self.lambda_unchecked(k, t) };
        let mut worst: f64 = 0.0;
        for j in 0..=k_max {
            for k in j..=k_max {
                let integral: f64 = rule.iter().map(|(t, w)| w * f(j, t) * f(k, t)).sum();
                let target = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((integral - target).abs());
            }
        }
        Ok(worst)
    }
}

/// Per-dimension thermal widths `σ_i = (ħ²β/m_i)^{1/2}` with `ħ = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthVector(Vec<f64>);

impl WidthVector {
    pub fn new(sigma: Vec<f64>) -> Result<Self> {
        if sigma.is_empty() || sigma.len() > 3 {
            return Err(PavgError::InvalidArgument(format!("dimension {} not in 1..=3", sigma.len())));
        }
        if sigma.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(PavgError::InvalidArgument("widths must be finite and positive".into()));
        }
        Ok(Self(sigma))
    }

    pub fn from_beta(beta: f64, masses: &[f64]) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(PavgError::InvalidArgument(format!("beta must be positive, got {beta}")));
        }
        if masses.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
            return Err(PavgError::InvalidArgument("masses must be finite and positive".into()));
        }
        Self::new(masses.iter().map(|m| (beta / m).sqrt()).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_isotropic(&self) -> bool {
        self.0.iter().all(|s| *s == self.0[0])
    }
}
