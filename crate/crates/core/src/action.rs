//! Path-averaged exponents of the random-series Feynman–Kač integrand.
//!
//! For a coefficient prefix `(a_1, …, a_n)` the partially averaged action
//! is `U_n = ∫_0^1 V̄_{Γ_n(u)}(x_0(u) + σ Σ_{k≤n} a_k Λ_k(u)) du`; the
//! primitive action drops the averaging and evaluates the bare potential on
//! the truncated path. Both are discretized by a Gauss–Legendre rule in `u`.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::basis::{BasisSet, WidthVector};
use crate::error::{PavgError, Result};
use crate::potentials::PotentialModel;
use crate::quadrature::QuadratureRule;
use crate::rng::SampleStreams;
use crate::stats::{iid_estimate, EstimateResult};

/// Endpoints, temperature, widths and the leading series coefficients of a path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPathPrefix {
    pub x: Vec<f64>,
    pub x_prime: Vec<f64>,
    pub beta: f64,
    pub sigma: WidthVector,
    /// `coeffs[k]` is the `d`-vector `a_{k+1}`.
    pub coeffs: Vec<Vec<f64>>,
}

impl SeriesPathPrefix {
    pub fn new(x: Vec<f64>, x_prime: Vec<f64>, beta: f64, sigma: WidthVector, coeffs: Vec<Vec<f64>>) -> Result<Self> {
        let p = Self { x, x_prime, beta, sigma, coeffs };
        p.validate()?;
        Ok(p)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    fn validate(&self) -> Result<()> {
        let d = self.sigma.dim();
        if self.x.len() != d || self.x_prime.len() != d {
            return Err(PavgError::InvalidArgument("endpoints and widths disagree on dimension".into()));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(PavgError::InvalidArgument(format!("beta must be positive, got {}", self.beta)));
        }
        if self.coeffs.iter().any(|a| a.len() != d || a.iter().any(|v| !v.is_finite())) {
            return Err(PavgError::InvalidArgument("coefficients must be finite d-vectors".into()));
        }
        Ok(())
    }

    fn flat_coeffs(&self) -> Vec<f64> {
        self.coeffs.iter().flatten().copied().collect()
    }
}

/// How the modes beyond the explicit path order are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Closure {
    /// Gaussian-average the modes above the given order (partial averaging).
    Averaged { residual_order: usize },
    /// Drop them (primitive truncation).
    Bare,
}

/// Precomputed node tables for repeated action evaluation at fixed
/// endpoints, order and closure.
#[derive(Debug, Clone)]
pub struct PathKernel<'a> {
    pot: &'a PotentialModel,
    dim: usize,
    order: usize,
    sigma: Vec<f64>,
    weights: Vec<f64>,
    /// `Λ_k(u_q)`, node-major.
    lam: Vec<f64>,
    /// `x_0(u_q)`, node-major.
    base: Vec<f64>,
    /// Residual widths `Γ(u_q)` per axis, node-major; `None` for the bare closure.
    alpha: Option<Vec<f64>>,
}

/// Reusable buffers for [`PathKernel::action`].
#[derive(Debug, Clone, Default)]
pub struct PathScratch {
    scaled: Vec<f64>,
    point: Vec<f64>,
}

impl<'a> PathKernel<'a> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        pot: &'a PotentialModel,
        basis: &BasisSet,
        quad: &QuadratureRule,
        x: &[f64],
        x_prime: &[f64],
        sigma: &WidthVector,
        order: usize,
        closure: Closure,
    ) -> Result<Self> {
        let dim = sigma.dim();
        if pot.dim() != dim || x.len() != dim || x_prime.len() != dim {
            return Err(PavgError::InvalidArgument(format!(
                "dimension mismatch: potential {}, widths {dim}, endpoints {}/{}",
                pot.dim(),
                x.len(),
                x_prime.len()
            )));
        }
        if order > basis.max_k {
            return Err(PavgError::InvalidArgument(format!("order {order} exceeds basis max_k = {}", basis.max_k)));
        }
        if let Closure::Averaged { residual_order } = closure {
            if residual_order > basis.max_k {
                return Err(PavgError::InvalidArgument(format!("residual order {residual_order} exceeds max_k")));
            }
        }
        let q = quad.len();
        let mut lam = Vec::with_capacity(q * order);
        let mut base = Vec::with_capacity(q * dim);
        let mut alpha = Vec::with_capacity(q * dim);
        for &u in quad.nodes() {
            lam.extend((1..=order).map(|k| basis.primitive_unchecked(k, u)));
            base.extend(x.iter().zip(x_prime).map(|(a, b)| a + (b - a) * u));
            if let Closure::Averaged { residual_order } = closure {
                let r = basis.residual_unit(residual_order, u).sqrt();
                alpha.extend(sigma.as_slice().iter().map(|s| s * r));
            }
        }
        Ok(Self {
            pot,
            dim,
            order,
            sigma: sigma.as_slice().to_vec(),
            weights: quad.weights().to_vec(),
            lam,
            base,
            alpha: matches!(closure, Closure::Averaged { .. }).then_some(alpha),
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Action for flat coefficients `coeffs[k·d + i] = a_{k+1, i}`.
    ///
    /// With the bare closure a path node landing on a Coulomb singularity
    /// yields `-∞` rather than an error.
    pub fn action(&self, coeffs: &[f64], scratch: &mut PathScratch) -> Result<f64> {
        let (d, n) = (self.dim, self.order);
        debug_assert_eq!(coeffs.len(), n * d);
        scratch.scaled.clear();
        scratch.scaled.extend(coeffs.chunks_exact(d).flat_map(|a| a.iter().zip(&self.sigma).map(|(c, s)| c * s)));
        scratch.point.resize(d, 0.0);
        let mut total = 0.0;
        for (q, &w) in self.weights.iter().enumerate() {
            let point = &mut scratch.point;
            point.copy_from_slice(&self.base[q * d..(q + 1) * d]);
            let lam = &self.lam[q * n..(q + 1) * n];
            if d == 1 {
                point[0] += lam.iter().zip(&scratch.scaled).map(|(l, a)| l * a).sum::<f64>();
            } else {
                for (l, a) in lam.iter().zip(scratch.scaled.chunks_exact(d)) {
                    for i in 0..d {
                        point[i] += l * a[i];
                    }
                }
            }
            let v = match &self.alpha {
                Some(alpha) => self.pot.transform_raw(point, &alpha[q * d..(q + 1) * d])?,
                None => match self.pot.evaluate_raw(point) {
                    Ok(v) => v,
                    Err(PavgError::SingularPoint(_)) => f64::NEG_INFINITY,
                    Err(e) => return Err(e),
                },
            };
            total += w * v;
        }
        Ok(total)
    }
}

/// Partially averaged action `U_n` of the prefix.
pub fn pa_action(
    prefix: &SeriesPathPrefix,
    basis: &BasisSet,
    pot: &PotentialModel,
    quad: &QuadratureRule,
) -> Result<f64> {
    prefix.validate()?;
    let n = prefix.order();
    let kernel = PathKernel::new(
        pot,
        basis,
        quad,
        &prefix.x,
        &prefix.x_prime,
        &prefix.sigma,
        n,
        Closure::Averaged { residual_order: n },
    )?;
    kernel.action(&prefix.flat_coeffs(), &mut PathScratch::default())
}

/// Bare potential integrated along the truncated series path; `-∞` when
/// a node hits an attractive singularity.
pub fn primitive_action(
    prefix: &SeriesPathPrefix,
    basis: &BasisSet,
    pot: &PotentialModel,
    quad: &QuadratureRule,
) -> Result<f64> {
    prefix.validate()?;
    let kernel =
        PathKernel::new(pot, basis, quad, &prefix.x, &prefix.x_prime, &prefix.sigma, prefix.order(), Closure::Bare)?;
    kernel.action(&prefix.flat_coeffs(), &mut PathScratch::default())
}

const TAIL_STREAM_TAG: u64 = 0x7a11;

/// Monte Carlo estimate of `E[U_m | a_1..a_n]`: the prefix is held fixed
/// and the coefficients `a_{n+1..m}` are redrawn i.i.d. standard normal.
///
/// Each tail sample is scored with the partially averaged action of order
/// `m`, for which the conditional expectation equals `U_n` exactly at every
/// quadrature node; see [`tail_conditional_action_with`] for the bare
/// truncation.
#[allow(clippy::too_many_arguments)]
pub fn tail_conditional_action(
    prefix: &SeriesPathPrefix,
    basis: &BasisSet,
    pot: &PotentialModel,
    quad: &QuadratureRule,
    m: usize,
    tail_samples: usize,
    seed: u64,
) -> Result<EstimateResult> {
    tail_conditional_action_with(
        prefix,
        basis,
        pot,
        quad,
        m,
        tail_samples,
        seed,
        Closure::Averaged { residual_order: m },
    )
}

#[allow(clippy::too_many_arguments)]
pub fn tail_conditional_action_with(
    prefix: &SeriesPathPrefix,
    basis: &BasisSet,
    pot: &PotentialModel,
    quad: &QuadratureRule,
    m: usize,
    tail_samples: usize,
    seed: u64,
    closure: Closure,
) -> Result<EstimateResult> {
    prefix.validate()?;
    let n = prefix.order();
    if m <= n {
        return Err(PavgError::InvalidArgument(format!("tail order m = {m} must exceed prefix order n = {n}")));
    }
    if tail_samples < 100 {
        return Err(PavgError::InvalidArgument(format!("tail_samples must be >= 100, got {tail_samples}")));
    }
    let d = prefix.dim();
    let kernel = PathKernel::new(pot, basis, quad, &prefix.x, &prefix.x_prime, &prefix.sigma, m, closure)?;
    let streams = SampleStreams::new(seed, TAIL_STREAM_TAG);
    let mut coeffs = prefix.flat_coeffs();
    coeffs.resize(m * d, 0.0);
    let mut scratch = PathScratch::default();
    let mut values = Vec::with_capacity(tail_samples);
    for i in 0..tail_samples as u64 {
        let mut rng = streams.sample(i);
        for c in &mut coeffs[n * d..] {
            *c = StandardNormal.sample(&mut rng);
        }
        values.push(kernel.action(&coeffs, &mut scratch)?);
    }
    Ok(iid_estimate(&values, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit(d: usize) -> WidthVector {
        WidthVector::new(vec![1.0; d]).unwrap()
    }

    fn prefix(x: f64, xp: f64, coeffs: &[f64]) -> SeriesPathPrefix {
        SeriesPathPrefix::new(vec![x], vec![xp], 1.0, unit(1), coeffs.iter().map(|c| vec![*c]).collect()).unwrap()
    }

    #[test]
    fn free_particle_action_vanishes() {
        let free = PotentialModel::free(1).unwrap();
        let (b, q) = (BasisSet::default(), QuadratureRule::default());
        let p = prefix(0.3, -0.2, &[0.5, -1.0, 2.0]);
        assert_eq!(pa_action(&p, &b, &free, &q).unwrap(), 0.0);
        assert_eq!(primitive_action(&p, &b, &free, &q).unwrap(), 0.0);
        let t = tail_conditional_action(&p, &b, &free, &q, 16, 100, 1).unwrap();
        assert_eq!((t.mean, t.stderr), (0.0, 0.0));
    }

    #[test]
    fn harmonic_closed_forms() {
        let h = PotentialModel::harmonic(1, 1.0, 1.0).unwrap();
        let (b, q) = (BasisSet::default(), QuadratureRule::default());
        // ½∫u(1-u) du = 1/12
        assert!((pa_action(&prefix(0.0, 0.0, &[]), &b, &h, &q).unwrap() - 1.0 / 12.0).abs() < 1e-14);
        // ½∫(u² + u(1-u)) du = 1/4
        assert!((pa_action(&prefix(0.0, 1.0, &[]), &b, &h, &q).unwrap() - 0.25).abs() < 1e-14);
        assert_eq!(primitive_action(&prefix(0.0, 0.0, &[]), &b, &h, &q).unwrap(), 0.0);
        // ½∫Λ_1² = ½ · 1/π²
        let v = primitive_action(&prefix(0.0, 0.0, &[1.0]), &b, &h, &q).unwrap();
        assert!((v - 0.5 / (PI * PI)).abs() < 1e-14);
    }

    #[test]
    fn quadrature_converged_at_default_nodes() {
        let h = PotentialModel::quartic(1, 1.0).unwrap();
        let b = BasisSet::default();
        let p = prefix(0.2, 0.7, &[0.3, -1.2, 0.8, 0.1, -0.4, 0.9, 0.0, 1.1]);
        let q64 = pa_action(&p, &b, &h, &QuadratureRule::gauss_legendre(64).unwrap()).unwrap();
        let q128 = pa_action(&p, &b, &h, &QuadratureRule::gauss_legendre(128).unwrap()).unwrap();
        assert!((q64 - q128).abs() < 1e-8);
    }

    #[test]
    fn endpoint_exchange_flips_even_modes() {
        let h = PotentialModel::quartic(1, 0.7).unwrap();
        let (b, q) = (BasisSet::default(), QuadratureRule::default());
        let c = [0.4, -1.3, 0.2, 0.9, -0.5];
        let flipped: Vec<f64> = c.iter().enumerate().map(|(i, v)| if (i + 1) % 2 == 0 { -v } else { *v }).collect();
        let fwd = pa_action(&prefix(-0.4, 1.1, &c), &b, &h, &q).unwrap();
        let back = pa_action(&prefix(1.1, -0.4, &flipped), &b, &h, &q).unwrap();
        assert!((fwd - back).abs() < 1e-13 * fwd.abs().max(1.0));
    }

    #[test]
    fn coulomb_primitive_singularity_is_reported() {
        // one-node rule at u = ½ on a straight path through the origin
        let c = PotentialModel::coulomb3d(1.0).unwrap();
        let b = BasisSet::default();
        let q = QuadratureRule::gauss_legendre(1).unwrap();
        let p = SeriesPathPrefix::new(vec![-1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], 1.0, unit(3), vec![]).unwrap();
        assert_eq!(primitive_action(&p, &b, &c, &q).unwrap(), f64::NEG_INFINITY);
        assert!(pa_action(&p, &b, &c, &q).unwrap().is_finite());
    }

    #[test]
    fn tail_requires_valid_arguments() {
        let h = PotentialModel::harmonic(1, 1.0, 1.0).unwrap();
        let (b, q) = (BasisSet::default(), QuadratureRule::default());
        let p = prefix(0.0, 0.0, &[0.1, 0.2]);
        assert!(tail_conditional_action(&p, &b, &h, &q, 2, 100, 0).is_err());
        assert!(tail_conditional_action(&p, &b, &h, &q, 8, 50, 0).is_err());
    }

    #[test]
    fn tail_average_matches_pa_action() {
        let (b, q) = (BasisSet::default(), QuadratureRule::default());
        for pot in [PotentialModel::harmonic(1, 1.0, 1.0).unwrap(), PotentialModel::quartic(1, 1.0).unwrap()] {
            for (x, xp, c) in [(0.0, 0.0, vec![]), (0.3, 0.8, vec![0.5, -0.7, 1.2, 0.1])] {
                let p = prefix(x, xp, &c);
                let exact = pa_action(&p, &b, &pot, &q).unwrap();
                let t = tail_conditional_action(&p, &b, &pot, &q, 64, 4000, 11).unwrap();
                assert!((t.mean - exact).abs() <= 3.0 * t.stderr, "{} {} vs {exact}", t.mean, t.stderr);
            }
        }
    }
}
