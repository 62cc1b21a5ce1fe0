//! Monte Carlo estimators of the density matrix and partition function.
//!
//! The series coefficients are an i.i.d. standard-normal vector, so samples
//! are drawn directly; no Markov chain is involved. Sample `i` always reads
//! the same random stream, and its first `n·d` normals are the coefficients
//! `a_1..a_n`. Runs at different orders therefore share their leading
//! coefficients (common random numbers), which makes differences between
//! orders far less noisy than the individual estimates.

use std::f64::consts::PI;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::action::{Closure, PathKernel, PathScratch};
use crate::basis::{BasisSet, WidthVector};
use crate::error::{PavgError, Result};
use crate::physics::Physics;
use crate::potentials::{check_boundary_decay, PotentialModel};
use crate::quadrature::{BoxDomain, QuadratureRule};
use crate::rng::SampleStreams;
use crate::stats::{batch_means, EstimateResult, SamplerConfig};

/// Which path exponent the estimator averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Tail modes Gaussian-averaged into the potential.
    #[default]
    #[serde(rename = "pa")]
    PartialAveraging,
    /// Tail modes dropped.
    Primitive,
}

impl Method {
    pub fn closure(self, n: usize) -> Closure {
        match self {
            Method::PartialAveraging => Closure::Averaged { residual_order: n },
            Method::Primitive => Closure::Bare,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Method::PartialAveraging => "pa",
            Method::Primitive => "primitive",
        }
    }
}

/// `ρ_fp(x, x') = Π_i (2πσ_i²)^{-1/2} exp(-(x_i - x'_i)²/(2σ_i²))`.
pub fn free_particle_density(x: &[f64], x_prime: &[f64], sigma: &WidthVector) -> Result<f64> {
    if x.len() != sigma.dim() || x_prime.len() != sigma.dim() {
        return Err(PavgError::InvalidArgument("endpoints and widths disagree on dimension".into()));
    }
    Ok(x.iter()
        .zip(x_prime)
        .zip(sigma.as_slice())
        .map(|((a, b), s)| (-(a - b).powi(2) / (2.0 * s * s)).exp() / (2.0 * PI * s * s).sqrt())
        .product())
}

const DENSITY_TAG: u64 = 0;

#[allow(clippy::too_many_arguments)]
fn density_with_tag(
    method: Method,
    x: &[f64],
    x_prime: &[f64],
    physics: &Physics,
    n: usize,
    pot: &PotentialModel,
    basis: &BasisSet,
    quad: &QuadratureRule,
    cfg: &SamplerConfig,
    tag: u64,
) -> Result<EstimateResult> {
    cfg.validate()?;
    let sigma = physics.sigma()?;
    let beta = physics.beta;
    let rho_fp = free_particle_density(x, x_prime, &sigma)?;
    let kernel = PathKernel::new(pot, basis, quad, x, x_prime, &sigma, n, method.closure(n))?;
    let width = n * kernel.dim();

    if width == 0 {
        // the integrand does not depend on the coefficients
        let w = (-beta * kernel.action(&[], &mut PathScratch::default())?).exp();
        let mut r = EstimateResult::exact(w, cfg.n_samples, cfg.seed);
        if !w.is_finite() {
            r = EstimateResult { mean: f64::NAN, stderr: f64::NAN, divergent_count: cfg.n_samples, ..r };
        }
        return Ok(r.scaled(rho_fp));
    }

    let streams = SampleStreams::new(cfg.seed, tag);
    let est = batch_means(
        cfg,
        || (vec![0.0; width], PathScratch::default()),
        |i, (coeffs, scratch)| {
            let mut rng = streams.sample(i);
            for c in coeffs.iter_mut() {
                *c = StandardNormal.sample(&mut rng);
            }
            Ok((-beta * kernel.action(coeffs, scratch)?).exp())
        },
    )?;
    Ok(est.scaled(rho_fp))
}

/// `ρ(x, x'; β)` estimated at series order `n` with the chosen method.
#[allow(clippy::too_many_arguments)]
pub fn density_matrix(
    method: Method,
    x: &[f64],
    x_prime: &[f64],
    physics: &Physics,
    n: usize,
    pot: &PotentialModel,
    basis: &BasisSet,
    quad: &QuadratureRule,
    cfg: &SamplerConfig,
) -> Result<EstimateResult> {
    density_with_tag(method, x, x_prime, physics, n, pot, basis, quad, cfg, DENSITY_TAG)
}

/// Partially averaged density matrix `E[ρ_fp · exp(-β U_n)]`.
#[allow(clippy::too_many_arguments)]
pub fn pa_density_matrix(
    x: &[f64],
    x_prime: &[f64],
    physics: &Physics,
    n: usize,
    pot: &PotentialModel,
    basis: &BasisSet,
    quad: &QuadratureRule,
    cfg: &SamplerConfig,
) -> Result<EstimateResult> {
    density_matrix(Method::PartialAveraging, x, x_prime, physics, n, pot, basis, quad, cfg)
}

/// Density matrix from the truncated series without tail averaging.
/// Samples whose weight overflows are reported in `divergent_count`.
#[allow(clippy::too_many_arguments)]
pub fn primitive_density_matrix(
    x: &[f64],
    x_prime: &[f64],
    physics: &Physics,
    n: usize,
    pot: &PotentialModel,
    basis: &BasisSet,
    quad: &QuadratureRule,
    cfg: &SamplerConfig,
) -> Result<EstimateResult> {
    density_matrix(Method::Primitive, x, x_prime, physics, n, pot, basis, quad, cfg)
}

/// `Z = ∫ ρ(x, x; β) dx` by tensor Gauss–Legendre quadrature over `domain`
/// of independent diagonal estimates.
///
/// `cfg.n_samples` is the total budget; each quadrature node receives an
/// equal share (at least `cfg.batch_count`). Node `j` samples from its own
/// stream, so the node errors are independent and combine as
/// `sqrt(Σ w_j² stderr_j²)`.
#[allow(clippy::too_many_arguments)]
pub fn partition_function(
    method: Method,
    physics: &Physics,
    n: usize,
    pot: &PotentialModel,
    basis: &BasisSet,
    quad: &QuadratureRule,
    cfg: &SamplerConfig,
    domain: &BoxDomain,
) -> Result<EstimateResult> {
    cfg.validate()?;
    if domain.dim() != pot.dim() || physics.dim() != pot.dim() {
        return Err(PavgError::InvalidArgument("dimension mismatch between potential, physics and box".into()));
    }
    let rule = domain.tensor_rule()?;
    let beta = physics.beta;
    if domain.require_decay {
        let mut peak: f64 = 0.0;
        for (p, _) in &rule {
            peak = peak.max(boltzmann(pot, beta, p));
        }
        check_boundary_decay(domain, peak, |p| Ok(boltzmann(pot, beta, p)))?;
    }
    let per_node = SamplerConfig { n_samples: (cfg.n_samples / rule.len() as u64).max(cfg.batch_count), ..*cfg };
    let mut mean = 0.0;
    let mut var = 0.0;
    let mut divergent = 0;
    for (j, (p, w)) in rule.iter().enumerate() {
        let r = density_with_tag(method, p, p, physics, n, pot, basis, quad, &per_node, 1 + j as u64)?;
        mean += w * r.mean;
        var += (w * r.stderr).powi(2);
        divergent += r.divergent_count;
    }
    Ok(EstimateResult {
        mean,
        stderr: var.sqrt(),
        n_samples: per_node.n_samples * rule.len() as u64,
        divergent_count: divergent,
        seed: cfg.seed,
    })
}

/// `e^{-βV(x)}`; singular attractive points count as unbounded.
fn boltzmann(pot: &PotentialModel, beta: f64, x: &[f64]) -> f64 {
    match pot.evaluate_raw(x) {
        Ok(v) => (-beta * v).exp(),
        Err(_) => f64::INFINITY,
    }
}

/// Partially averaged partition function `Z_n`.
#[allow(clippy::too_many_arguments)]
pub fn pa_partition_function(
    physics: &Physics,
    n: usize,
    pot: &PotentialModel,
    basis: &BasisSet,
    quad: &QuadratureRule,
    cfg: &SamplerConfig,
    domain: &BoxDomain,
) -> Result<EstimateResult> {
    partition_function(Method::PartialAveraging, physics, n, pot, basis, quad, cfg, domain)
}

/// Smallest symmetric box (in steps of a quarter thermal width) on which
/// `e^{-βV}` has decayed below [`BoxDomain::DECAY_LIMIT`] of its peak.
pub fn confining_box(pot: &PotentialModel, physics: &Physics, nodes: usize) -> Result<BoxDomain> {
    let sigma = physics.sigma()?;
    let step = 0.25 * sigma.as_slice().iter().cloned().fold(0.0, f64::max);
    let dim = pot.dim();
    for i in 8..=4000 {
        let domain = BoxDomain::symmetric(dim, step * i as f64, nodes);
        match partition_decay(pot, physics.beta, &domain) {
            Ok(()) => return Ok(domain),
            Err(PavgError::DomainTooSmall { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(PavgError::InvalidArgument(format!("{} does not look confining; give the box explicitly", pot.name())))
}

fn partition_decay(pot: &PotentialModel, beta: f64, domain: &BoxDomain) -> Result<()> {
    let mut peak: f64 = 0.0;
    for (p, _) in domain.tensor_rule()? {
        peak = peak.max(boltzmann(pot, beta, &p));
    }
    check_boundary_decay(domain, peak, |p| Ok(boltzmann(pot, beta, p)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (BasisSet, QuadratureRule) {
        (BasisSet::default(), QuadratureRule::default())
    }

    #[test]
    fn free_particle_values() {
        let unit = WidthVector::new(vec![1.0]).unwrap();
        let v = free_particle_density(&[0.0], &[0.0], &unit).unwrap();
        assert!((v - 0.398_942_280_401_432_7).abs() < 1e-15);
        let v = free_particle_density(&[0.0], &[1.0], &unit).unwrap();
        assert!((v - 0.241_970_724_519_143_37).abs() < 1e-15);
        let w3 = WidthVector::new(vec![1.0; 3]).unwrap();
        let v = free_particle_density(&[0.0; 3], &[0.0; 3], &w3).unwrap();
        assert!((v - (2.0 * PI).powf(-1.5)).abs() < 1e-15);
    }

    #[test]
    fn free_particle_is_exact() {
        let (b, q) = setup();
        let free = PotentialModel::free(1).unwrap();
        let phys = Physics::unit(1.0, 1).unwrap();
        let cfg = SamplerConfig::new(2000, 5).unwrap();
        let exact = free_particle_density(&[0.2], &[-0.1], &phys.sigma().unwrap()).unwrap();
        for n in [0, 8, 64] {
            let r = pa_density_matrix(&[0.2], &[-0.1], &phys, n, &free, &b, &q, &cfg).unwrap();
            assert_eq!(r.mean, exact);
            assert_eq!(r.stderr, 0.0);
        }
    }

    #[test]
    fn harmonic_zeroth_order_closed_form() {
        let (b, q) = setup();
        let h = PotentialModel::harmonic(1, 1.0, 1.0).unwrap();
        let phys = Physics::unit(1.0, 1).unwrap();
        let cfg = SamplerConfig::new(1000, 1).unwrap();
        let r = pa_density_matrix(&[0.0], &[0.0], &phys, 0, &h, &b, &q, &cfg).unwrap();
        let exact = (2.0 * PI).sqrt().recip() * (-1.0f64 / 12.0).exp();
        assert!((r.mean - exact).abs() < 1e-12);
        assert_eq!(r.stderr, 0.0);
    }

    #[test]
    fn reproducible_and_order_sensitive() {
        let (b, q) = setup();
        let h = PotentialModel::quartic(1, 1.0).unwrap();
        let phys = Physics::unit(1.0, 1).unwrap();
        let cfg = SamplerConfig::new(4096, 9).unwrap();
        let a = pa_density_matrix(&[0.3], &[0.3], &phys, 4, &h, &b, &q, &cfg).unwrap();
        let again = pa_density_matrix(&[0.3], &[0.3], &phys, 4, &h, &b, &q, &cfg).unwrap();
        assert_eq!(a, again);
        let other =
            pa_density_matrix(&[0.3], &[0.3], &phys, 4, &h, &b, &q, &SamplerConfig { seed: 10, ..cfg }).unwrap();
        assert_ne!(a.mean, other.mean);
    }

    #[test]
    fn pa_bounds_primitive_error_at_low_order() {
        // PA approaches from below, primitive from above for the oscillator
        let (b, q) = setup();
        let h = PotentialModel::harmonic(1, 1.0, 1.0).unwrap();
        let phys = Physics::unit(1.0, 1).unwrap();
        let cfg = SamplerConfig::new(20_000, 2).unwrap();
        let exact = (1.0 / (2.0 * PI * 1f64.sinh())).sqrt();
        let pa = pa_density_matrix(&[0.0], &[0.0], &phys, 2, &h, &b, &q, &cfg).unwrap();
        let pr = primitive_density_matrix(&[0.0], &[0.0], &phys, 2, &h, &b, &q, &cfg).unwrap();
        assert!(pa.mean < exact + 3.0 * pa.stderr);
        assert!(pr.mean > exact);
        assert!((pa.mean - exact).abs() < (pr.mean - exact).abs());
    }

    #[test]
    fn coulomb_pa_never_diverges() {
        let (b, q) = setup();
        let c = PotentialModel::coulomb3d_confined(1.0, 1.0).unwrap();
        let phys = Physics::unit(1.0, 3).unwrap();
        let cfg = SamplerConfig::new(512, 4).unwrap();
        let r = pa_density_matrix(&[0.01, 0.0, 0.0], &[0.01, 0.0, 0.0], &phys, 4, &c, &b, &q, &cfg).unwrap();
        assert_eq!(r.divergent_count, 0);
        assert!(r.mean.is_finite() && r.mean > 0.0);
    }

    #[test]
    fn harmonic_partition_function_small_budget() {
        let (b, q) = setup();
        let h = PotentialModel::harmonic(1, 1.0, 1.0).unwrap();
        let phys = Physics::unit(1.0, 1).unwrap();
        let domain = confining_box(&h, &phys, 32).unwrap();
        let cfg = SamplerConfig::new(64_000, 3).unwrap();
        let z = pa_partition_function(&phys, 8, &h, &b, &q, &cfg, &domain).unwrap();
        let exact = 0.5 / 0.5f64.sinh();
        assert!((z.mean - exact).abs() < (4.0 * z.stderr).max(0.01 * exact), "{z:?}");
    }

    #[test]
    fn too_small_domain_is_rejected() {
        let (b, q) = setup();
        let h = PotentialModel::harmonic(1, 1.0, 1.0).unwrap();
        let phys = Physics::unit(1.0, 1).unwrap();
        let cfg = SamplerConfig::new(640, 3).unwrap();
        let small = BoxDomain::symmetric(1, 2.0, 16);
        assert!(matches!(
            pa_partition_function(&phys, 2, &h, &b, &q, &cfg, &small),
            Err(PavgError::DomainTooSmall { .. })
        ));
    }
}
