//! Potentials, their Gaussian transforms and admissibility diagnostics.
//!
//! The Gaussian transform `V̄_α(x) = E[V(x + α ⊙ Z)]`, `Z ~ N(0, I)`, is the
//! object partial averaging integrates along the reference path. Built-in
//! kinds carry closed forms; everything else goes through quadrature.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::basis::WidthVector;
use crate::error::{PavgError, Result};
use crate::quadrature::{BoxDomain, NormalRule, QuadratureRule};

type PotentialFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// User-supplied potential; evaluated through the quadrature transform.
#[derive(Clone)]
pub struct CustomPotential {
    pub name: String,
    func: Arc<PotentialFn>,
}

impl CustomPotential {
    pub fn new(name: impl Into<String>, func: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { name: name.into(), func: Arc::new(func) }
    }
}

impl fmt::Debug for CustomPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomPotential({})", self.name)
    }
}

#[derive(Debug, Clone)]
pub enum PotentialKind {
    /// `V ≡ 0`.
    Free,
    /// `½ m ω² ‖x‖²`.
    Harmonic {
        mass: f64,
        omega: f64,
    },
    /// `c Σ_i x_i⁴`.
    Quartic {
        c: f64,
    },
    /// Attractive Coulomb well `−q/‖r‖`, `q > 0`, three dimensions.
    Coulomb3d {
        q: f64,
    },
    /// `−q/‖r‖ + ½ k_conf ‖r‖²`.
    Coulomb3dConfined {
        q: f64,
        k_conf: f64,
    },
    Custom(CustomPotential),
}

/// Per-dimension standard deviations of the smoothing Gaussian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformWidth(Vec<f64>);

impl TransformWidth {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(PavgError::InvalidArgument("transform widths must be finite and nonnegative".into()));
        }
        Ok(Self(alpha))
    }

    pub fn isotropic(dim: usize, alpha: f64) -> Result<Self> {
        Self::new(vec![alpha; dim])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Node counts for the nested quadrature of the Kato functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KatoQuadrature {
    /// Gauss–Legendre nodes for the time integral (after `u = t²`).
    pub u_nodes: usize,
    /// Nodes for the inner Gaussian average.
    pub inner_nodes: usize,
}

impl Default for KatoQuadrature {
    fn default() -> Self {
        Self { u_nodes: 32, inner_nodes: 32 }
    }
}

#[derive(Debug, Clone)]
pub struct PotentialModel {
    pub kind: PotentialKind,
    dim: usize,
    /// Nodes per axis used whenever the quadrature transform is needed.
    pub transform_nodes: usize,
}

const RADIAL_HALF_SPAN: f64 = 12.0;
const RADIAL_PANELS: usize = 4;

impl PotentialModel {
    pub const DEFAULT_TRANSFORM_NODES: usize = 32;

    fn build(kind: PotentialKind, dim: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(PavgError::InvalidArgument(format!("dimension {dim} not in 1..=3")));
        }
        let positive = |v: f64, what: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(PavgError::InvalidArgument(format!("{what} must be positive, got {v}")))
            }
        };
        match &kind {
            PotentialKind::Harmonic { mass, omega } => {
                positive(*mass, "harmonic mass")?;
                if !(omega.is_finite() && *omega >= 0.0) {
                    return Err(PavgError::InvalidArgument(format!("harmonic omega must be >= 0, got {omega}")));
                }
            }
            PotentialKind::Quartic { c } => positive(*c, "quartic coefficient")?,
            PotentialKind::Coulomb3d { q } => {
                positive(*q, "coulomb charge")?;
                if dim != 3 {
                    return Err(PavgError::InvalidArgument("coulomb potentials are three-dimensional".into()));
                }
            }
            PotentialKind::Coulomb3dConfined { q, k_conf } => {
                positive(*q, "coulomb charge")?;
                positive(*k_conf, "confinement constant")?;
                if dim != 3 {
                    return Err(PavgError::InvalidArgument("coulomb potentials are three-dimensional".into()));
                }
            }
            PotentialKind::Free | PotentialKind::Custom(_) => {}
        }
        Ok(Self { kind, dim, transform_nodes: Self::DEFAULT_TRANSFORM_NODES })
    }

    pub fn free(dim: usize) -> Result<Self> {
        Self::build(PotentialKind::Free, dim)
    }

    pub fn harmonic(dim: usize, mass: f64, omega: f64) -> Result<Self> {
        Self::build(PotentialKind::Harmonic { mass, omega }, dim)
    }

    pub fn quartic(dim: usize, c: f64) -> Result<Self> {
        Self::build(PotentialKind::Quartic { c }, dim)
    }

    pub fn coulomb3d(q: f64) -> Result<Self> {
        Self::build(PotentialKind::Coulomb3d { q }, 3)
    }

    pub fn coulomb3d_confined(q: f64, k_conf: f64) -> Result<Self> {
        Self::build(PotentialKind::Coulomb3dConfined { q, k_conf }, 3)
    }

    pub fn custom(dim: usize, potential: CustomPotential) -> Result<Self> {
        Self::build(PotentialKind::Custom(potential), dim)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> &str {
        match &self.kind {
            PotentialKind::Free => "free",
            PotentialKind::Harmonic { .. } => "harmonic",
            PotentialKind::Quartic { .. } => "quartic",
            PotentialKind::Coulomb3d { .. } => "coulomb3d",
            PotentialKind::Coulomb3dConfined { .. } => "coulomb3d_confined",
            PotentialKind::Custom(c) => &c.name,
        }
    }

    pub fn has_analytic_transform(&self) -> bool {
        !matches!(self.kind, PotentialKind::Custom(_))
    }

    pub fn is_coulomb(&self) -> bool {
        matches!(self.kind, PotentialKind::Coulomb3d { .. } | PotentialKind::Coulomb3dConfined { .. })
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(PavgError::InvalidArgument(format!(
                "point has dimension {}, potential has {}",
                x.len(),
                self.dim
            )));
        }
        Ok(())
    }

    /// `V(x)`.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        self.evaluate_raw(x)
    }

    pub(crate) fn evaluate_raw(&self, x: &[f64]) -> Result<f64> {
        let r2 = || x.iter().map(|v| v * v).sum::<f64>();
        Ok(match &self.kind {
            PotentialKind::Free => 0.0,
            PotentialKind::Harmonic { mass, omega } => 0.5 * mass * omega * omega * r2(),
            PotentialKind::Quartic { c } => c * x.iter().map(|v| v.powi(4)).sum::<f64>(),
            PotentialKind::Coulomb3d { q } => {
                let r = r2().sqrt();
                if r == 0.0 {
                    return Err(PavgError::SingularPoint(x.to_vec()));
                }
                -q / r
            }
            PotentialKind::Coulomb3dConfined { q, k_conf } => {
                let rr = r2();
                let r = rr.sqrt();
                if r == 0.0 {
                    return Err(PavgError::SingularPoint(x.to_vec()));
                }
                -q / r + 0.5 * k_conf * rr
            }
            PotentialKind::Custom(c) => (c.func)(x),
        })
    }

    /// `V̄_α(x)`: closed form when available, quadrature otherwise.
    pub fn gaussian_transform(&self, x: &[f64], alpha: &TransformWidth) -> Result<f64> {
        self.check_point(x)?;
        if alpha.0.len() != self.dim {
            return Err(PavgError::InvalidArgument("transform width has wrong dimension".into()));
        }
        self.transform_raw(x, &alpha.0)
    }

    pub(crate) fn transform_raw(&self, x: &[f64], alpha: &[f64]) -> Result<f64> {
        match &self.kind {
            PotentialKind::Free => Ok(0.0),
            PotentialKind::Harmonic { mass, omega } => {
                let s: f64 = x.iter().zip(alpha).map(|(xi, a)| xi * xi + a * a).sum();
                Ok(0.5 * mass * omega * omega * s)
            }
            PotentialKind::Quartic { c } => {
                let s: f64 = x
                    .iter()
                    .zip(alpha)
                    .map(|(xi, a)| {
                        let (x2, a2) = (xi * xi, a * a);
                        x2 * x2 + 6.0 * x2 * a2 + 3.0 * a2 * a2
                    })
                    .sum();
                Ok(c * s)
            }
            PotentialKind::Coulomb3d { q } => {
                let a = isotropic_width(alpha)?;
                if a == 0.0 {
                    return self.evaluate_raw(x);
                }
                Ok(-q * smeared_inverse_radius(norm(x), a))
            }
            PotentialKind::Coulomb3dConfined { q, k_conf } => {
                let a = isotropic_width(alpha)?;
                if a == 0.0 {
                    return self.evaluate_raw(x);
                }
                let s: f64 = x.iter().map(|xi| xi * xi + a * a).sum();
                Ok(-q * smeared_inverse_radius(norm(x), a) + 0.5 * k_conf * s)
            }
            PotentialKind::Custom(_) => self.numeric_raw(x, alpha, self.transform_nodes, false),
        }
    }

    /// Quadrature realization of the Gaussian transform with `nodes` points
    /// per axis (tensor Gauss–Hermite), or per radial panel for the
    /// Coulomb kinds, whose transform is integrated in spherical coordinates
    /// about the singularity.
    pub fn numeric_transform(&self, x: &[f64], alpha: &TransformWidth, nodes: usize) -> Result<f64> {
        self.check_point(x)?;
        if nodes < 8 {
            return Err(PavgError::InvalidArgument(format!("numeric transform needs >= 8 nodes, got {nodes}")));
        }
        if alpha.0.len() != self.dim {
            return Err(PavgError::InvalidArgument("transform width has wrong dimension".into()));
        }
        self.numeric_raw(x, &alpha.0, nodes, false)
    }

    /// Gaussian average of `V` (or `|V|` when `absolute`) by quadrature.
    fn numeric_raw(&self, x: &[f64], alpha: &[f64], nodes: usize, absolute: bool) -> Result<f64> {
        let value = if self.is_coulomb() {
            let a = isotropic_width(alpha)?;
            if a == 0.0 {
                let v = self.evaluate_raw(x)?;
                if absolute {
                    v.abs()
                } else {
                    v
                }
            } else {
                let radial = |r: f64| {
                    let v = self.radial_value(r);
                    if absolute {
                        v.abs()
                    } else {
                        v
                    }
                };
                radial_gaussian_average(norm(x), a, nodes, radial)?
            }
        } else {
            let rule = NormalRule::new(nodes)?;
            let mut failure = None;
            let v = rule.expectation(x, alpha, |p| match self.evaluate_raw(p) {
                Ok(v) if absolute => v.abs(),
                Ok(v) => v,
                Err(e) => {
                    failure = Some(e);
                    f64::NAN
                }
            });
            if let Some(e) = failure {
                return Err(e);
            }
            v
        };
        if !value.is_finite() {
            return Err(PavgError::TransformDivergent(format!("{} at x = {x:?}, alpha = {alpha:?}", self.name())));
        }
        Ok(value)
    }

    /// Radial profile of the Coulomb kinds.
    fn radial_value(&self, r: f64) -> f64 {
        match &self.kind {
            PotentialKind::Coulomb3d { q } => -q / r,
            PotentialKind::Coulomb3dConfined { q, k_conf } => -q / r + 0.5 * k_conf * r * r,
            _ => unreachable!("radial profile requested for a non-radial potential"),
        }
    }

    /// Kato-class functional
    /// `sup_{x ∈ grid} ∫_0^ε du E|V(x + σ √u Z)|`, by nested quadrature.
    ///
    /// The time integral is taken in `t = √u`, which removes the
    /// `u^{-d/2}`-type endpoint behaviour of the inner average.
    pub fn kato_functional(
        &self,
        sigma: &WidthVector,
        eps: f64,
        x_grid: &[Vec<f64>],
        quad: &KatoQuadrature,
    ) -> Result<f64> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(PavgError::InvalidArgument(format!("eps must lie in (0, 1), got {eps}")));
        }
        if x_grid.is_empty() {
            return Err(PavgError::InvalidArgument("Kato functional needs a nonempty grid".into()));
        }
        if sigma.dim() != self.dim {
            return Err(PavgError::InvalidArgument("width vector has wrong dimension".into()));
        }
        let outer = QuadratureRule::gauss_legendre(quad.u_nodes)?;
        let t_max = eps.sqrt();
        let mut best: f64 = 0.0;
        for x in x_grid {
            self.check_point(x)?;
            let mut total = 0.0;
            for (s, w) in outer.iter() {
                let t = s * t_max;
                let alpha: Vec<f64> = sigma.as_slice().iter().map(|sg| sg * t).collect();
                let inner = self.numeric_raw(x, &alpha, quad.inner_nodes, true).map_err(|e| match e {
                    PavgError::TransformDivergent(m) => PavgError::NotLocallyIntegrable(m),
                    other => other,
                })?;
                total += w * 2.0 * t * inner;
            }
            total *= t_max;
            if !total.is_finite() {
                return Err(PavgError::NotLocallyIntegrable(format!("{} near x = {x:?}", self.name())));
            }
            best = best.max(total);
        }
        Ok(best)
    }

    /// Classical configuration integral
    /// `Z_cl = Π_i (2πσ_i²)^{-1/2} ∫_box e^{-βV(x)} dx`.
    pub fn classical_partition(&self, beta: f64, sigma: &WidthVector, domain: &BoxDomain) -> Result<f64> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(PavgError::InvalidArgument(format!("beta must be positive, got {beta}")));
        }
        if sigma.dim() != self.dim || domain.dim() != self.dim {
            return Err(PavgError::InvalidArgument("dimension mismatch between potential, widths and box".into()));
        }
        let rule = domain.tensor_rule()?;
        let mut total = 0.0;
        let mut peak: f64 = 0.0;
        for (p, w) in &rule {
            let b = (-beta * self.evaluate_raw(p)?).exp();
            peak = peak.max(b);
            total += w * b;
        }
        if domain.require_decay {
            check_boundary_decay(domain, peak, |p| Ok((-beta * self.evaluate_raw(p)?).exp()))?;
        }
        let norm: f64 = sigma.as_slice().iter().map(|s| (2.0 * PI * s * s).sqrt()).product();
        Ok(total / norm)
    }
}

/// Fails with [`PavgError::DomainTooSmall`] when the boundary integrand is
/// not negligible relative to `peak`.
pub(crate) fn check_boundary_decay<F>(domain: &BoxDomain, peak: f64, mut f: F) -> Result<()>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let mut edge: f64 = 0.0;
    for p in domain.boundary_points()? {
        edge = edge.max(f(&p)?);
    }
    let ratio = if peak > 0.0 { edge / peak } else { f64::INFINITY };
    if ratio.is_nan() || ratio >= BoxDomain::DECAY_LIMIT {
        return Err(PavgError::DomainTooSmall { ratio, limit: BoxDomain::DECAY_LIMIT });
    }
    Ok(())
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn isotropic_width(alpha: &[f64]) -> Result<f64> {
    let a = alpha[0];
    if alpha.iter().all(|v| *v == a) {
        Ok(a)
    } else {
        Err(PavgError::Unsupported(format!(
            "anisotropic Coulomb transform (alpha = {alpha:?}) requires an isotropic width"
        )))
    }
}

/// `E[1/‖x + aZ‖] = erf(r/(√2 a))/r`, with the finite limit `√(2/π)/a` at `r = 0`.
fn smeared_inverse_radius(r: f64, a: f64) -> f64 {
    let t = r / (SQRT_2 * a);
    if t < 1e-5 {
        (2.0 / PI).sqrt() / a * (1.0 - t * t / 3.0)
    } else {
        erf(t) / r
    }
}

/// `E[g(‖x + aZ‖)]` for a radial `g` in three dimensions, `‖x‖ = big_r`.
///
/// The angular integral is done in closed form, leaving the radial density
/// `(r/R) φ_a(r − R) − (r/R) φ_a(r + R)` (or its `R → 0` limit), whose `r²`
/// Jacobian absorbs a `1/r` singularity of `g`. The radial integral uses
/// composite Gauss–Legendre over `R ± 12a`.
fn radial_gaussian_average<G: Fn(f64) -> f64>(big_r: f64, a: f64, nodes: usize, g: G) -> Result<f64> {
    let rule = QuadratureRule::gauss_legendre(nodes)?;
    let lo = (big_r - RADIAL_HALF_SPAN * a).max(0.0);
    let hi = big_r + RADIAL_HALF_SPAN * a;
    let inv_norm = 1.0 / ((2.0 * PI).sqrt() * a);
    let a2 = a * a;
    let density = |r: f64| {
        let t = r * big_r / a2;
        if t < 1.0 {
            // e^{-(r²+R²)/2a²} · 2 sinh(t)/R, written without dividing by R
            let sinhc = if t < 1e-8 { 1.0 } else { t.sinh() / t };
            inv_norm * r * (-(r * r + big_r * big_r) / (2.0 * a2)).exp() * 2.0 * (r / a2) * sinhc
        } else {
            let m = (-(r - big_r).powi(2) / (2.0 * a2)).exp();
            let p = (-(r + big_r).powi(2) / (2.0 * a2)).exp();
            inv_norm * (r / big_r) * (m - p)
        }
    };
    Ok(rule.integrate_panels(lo, hi, RADIAL_PANELS, |r| if r > 0.0 { density(r) * g(r) } else { 0.0 }))
}
