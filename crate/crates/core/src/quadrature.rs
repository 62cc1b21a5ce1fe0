//! Quadrature rules shared by the action, potential and estimator modules.
//!
//! Node/weight generation is delegated to `gauss-quad`; this module only
//! rescales the rules onto the domains used here (the unit interval, the
//! standard normal measure and axis-aligned boxes).

use std::num::NonZeroUsize;

use gauss_quad::{GaussHermite, GaussLegendre};
use serde::{Deserialize, Serialize};

use crate::error::{PavgError, Result};

fn degree(n: usize) -> Result<NonZeroUsize> {
    NonZeroUsize::new(n).ok_or_else(|| PavgError::InvalidArgument("quadrature needs at least one node".into()))
}

/// Gauss–Legendre nodes and weights on `[0, 1]`; weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// Default node count for the imaginary-time integral of the action.
    pub const DEFAULT_NODES: usize = 64;

    pub fn gauss_legendre(count: usize) -> Result<Self> {
        let rule = GaussLegendre::new(degree(count)?);
        let mut pairs: Vec<(f64, f64)> =
            rule.as_node_weight_pairs().iter().map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w)).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self { nodes: pairs.iter().map(|p| p.0).collect(), weights: pairs.iter().map(|p| p.1).collect() })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// Integral of `f` over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let h = b - a;
        self.iter().map(|(u, w)| w * f(a + h * u)).sum::<f64>() * h
    }

    /// Composite rule: `[a, b]` split into `panels` equal pieces.
    pub fn integrate_panels<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, panels: usize, mut f: F) -> f64 {
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|p| {
                let lo = a + p as f64 * h;
                self.integrate(lo, lo + h, &mut f)
            })
            .sum()
    }
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self::gauss_legendre(Self::DEFAULT_NODES).expect("nonzero node count")
    }
}

/// Gauss–Hermite rule rescaled to expectations against the standard normal:
/// `E[f(Z)] ≈ Σ w_i f(t_i)`, `Z ~ N(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl NormalRule {
    pub fn new(count: usize) -> Result<Self> {
        let rule = GaussHermite::new(degree(count)?);
        let norm = std::f64::consts::PI.sqrt();
        let (nodes, weights) =
            rule.as_node_weight_pairs().iter().map(|&(x, w)| (std::f64::consts::SQRT_2 * x, w / norm)).unzip();
        Ok(Self { nodes, weights })
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `E[f(x + α ⊙ Z)]` for a `d`-dimensional standard normal `Z`, by a
    /// tensor product of this rule over every axis.
    pub fn expectation<F>(&self, x: &[f64], alpha: &[f64], mut f: F) -> f64
    where
        F: FnMut(&[f64]) -> f64,
    {
        let d = x.len();
        let q = self.len();
        let mut idx = vec![0usize; d];
        let mut point = vec![0.0; d];
        let mut total = 0.0;
        loop {
            let mut w = 1.0;
            for i in 0..d {
                point[i] = x[i] + alpha[i] * self.nodes[idx[i]];
                w *= self.weights[idx[i]];
            }
            total += w * f(&point);
            // odometer increment
            let mut axis = 0;
            loop {
                if axis == d {
                    return total;
                }
                idx[axis] += 1;
                if idx[axis] < q {
                    break;
                }
                idx[axis] = 0;
                axis += 1;
            }
        }
    }
}

/// Axis-aligned box with a tensor Gauss–Legendre rule, used for the
/// configuration-space integrals of partition functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Gauss–Legendre nodes per axis.
    pub nodes: usize,
    /// When set, integrals refuse boxes whose boundary integrand exceeds
    /// `1e-12` of the interior peak.
    pub require_decay: bool,
}

impl BoxDomain {
    pub const DEFAULT_NODES: usize = 32;
    pub const DECAY_LIMIT: f64 = 1e-12;

    pub fn symmetric(dim: usize, half_width: f64, nodes: usize) -> Self {
        Self { lower: vec![-half_width; dim], upper: vec![half_width; dim], nodes, require_decay: true }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lower.is_empty() || self.lower.len() != self.upper.len() {
            return Err(PavgError::InvalidArgument("box bounds must be nonempty and of equal length".into()));
        }
        if self.lower.iter().zip(&self.upper).any(|(a, b)| a >= b || !a.is_finite() || !b.is_finite()) {
            return Err(PavgError::InvalidArgument("box requires finite lower < upper on every axis".into()));
        }
        if self.nodes == 0 {
            return Err(PavgError::InvalidArgument("box needs at least one node per axis".into()));
        }
        Ok(())
    }

    /// Tensor-product nodes and weights (weights include the box volume).
    pub fn tensor_rule(&self) -> Result<Vec<(Vec<f64>, f64)>> {
        self.validate()?;
        let rule = QuadratureRule::gauss_legendre(self.nodes)?;
        let d = self.dim();
        let mut out = Vec::with_capacity(self.nodes.pow(d as u32));
        let mut idx = vec![0usize; d];
        loop {
            let mut w = 1.0;
            let mut p = vec![0.0; d];
            for i in 0..d {
                let h = self.upper[i] - self.lower[i];
                p[i] = self.lower[i] + h * rule.nodes()[idx[i]];
                w *= h * rule.weights()[idx[i]];
            }
            out.push((p, w));
            let mut axis = 0;
            loop {
                if axis == d {
                    return Ok(out);
                }
                idx[axis] += 1;
                if idx[axis] < self.nodes {
                    break;
                }
                idx[axis] = 0;
                axis += 1;
            }
        }
    }

    /// Points on the boundary faces, laid out on the same per-axis nodes.
    pub fn boundary_points(&self) -> Result<Vec<Vec<f64>>> {
        self.validate()?;
        let d = self.dim();
        let rule = QuadratureRule::gauss_legendre(self.nodes)?;
        let interior: Vec<Vec<f64>> = (0..d)
            .map(|i| {
                let h = self.upper[i] - self.lower[i];
                rule.nodes().iter().map(|u| self.lower[i] + h * u).collect()
            })
            .collect();
        let mut out = Vec::new();
        for face_axis in 0..d {
            for &edge in &[self.lower[face_axis], self.upper[face_axis]] {
                let others: Vec<usize> = (0..d).filter(|&i| i != face_axis).collect();
                let count = self.nodes.pow(others.len() as u32);
                for flat in 0..count {
                    let mut p = vec![0.0; d];
                    p[face_axis] = edge;
                    let mut rem = flat;
                    for &axis in &others {
                        p[axis] = interior[axis][rem % self.nodes];
                        rem /= self.nodes;
                    }
                    out.push(p);
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_weights_are_normalized() {
        let q = QuadratureRule::gauss_legendre(64).unwrap();
        let s: f64 = q.weights().iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert!(q.weights().iter().all(|&w| w > 0.0));
        assert!(q.nodes().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn normal_rule_moments() {
        let r = NormalRule::new(32).unwrap();
        let m2 = r.expectation(&[0.0], &[1.0], |p| p[0] * p[0]);
        let m4 = r.expectation(&[0.0], &[1.0], |p| p[0].powi(4));
        assert!((m2 - 1.0).abs() < 1e-12);
        assert!((m4 - 3.0).abs() < 1e-11);
    }

    #[test]
    fn box_rule_volume() {
        let b = BoxDomain::symmetric(2, 1.5, 4);
        let vol: f64 = b.tensor_rule().unwrap().iter().map(|(_, w)| w).sum();
        assert!((vol - 9.0).abs() < 1e-12);
        assert_eq!(b.boundary_points().unwrap().len(), 4 * 4);
    }

    #[test]
    fn zero_nodes_rejected() {
        assert!(QuadratureRule::gauss_legendre(0).is_err());
    }
}
