//! Convergence studies: estimates over a schedule of series orders, an
//! optional reference value, and pass/fail/inconclusive verdicts.
//!
//! Verdict thresholds: a comparison passes inside 3 combined standard
//! errors and fails beyond 5; anything between is inconclusive.

use std::collections::BTreeMap;
use std::io::Write;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, ContinuousCDF, DiscreteCDF, StudentsT};

use crate::action::{tail_conditional_action_with, Closure, PathKernel, PathScratch, SeriesPathPrefix};
use crate::basis::BasisSet;
use crate::error::{PavgError, Result};
use crate::estimator::{confining_box, density_matrix, free_particle_density, partition_function, Method};
use crate::oracles::{harmonic_exact, GridSpec, Spectrum};
use crate::physics::Physics;
use crate::potentials::{PotentialKind, PotentialModel};
use crate::quadrature::{BoxDomain, QuadratureRule};
use crate::rng::SampleStreams;
use crate::stats::{EstimateResult, SamplerConfig};

pub const DEFAULT_ORDERS: [usize; 8] = [0, 1, 2, 4, 8, 16, 32, 64];
pub const PASS_SIGMAS: f64 = 3.0;
pub const FAIL_SIGMAS: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Observable {
    /// Diagonal density matrix element `ρ(x, x; β)`.
    RhoDiag { x: Vec<f64> },
    /// Partition function over a box; chosen automatically when absent.
    Z { domain: Option<BoxDomain> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub method: Method,
    pub observable: Observable,
    pub physics: Physics,
    pub orders: Vec<usize>,
    pub sampler: SamplerConfig,
    pub quad_nodes: usize,
    /// Overrides the automatic reference.
    pub reference: Option<f64>,
}

impl StudyConfig {
    pub fn new(method: Method, observable: Observable, physics: Physics, sampler: SamplerConfig) -> Self {
        Self {
            method,
            observable,
            physics,
            orders: DEFAULT_ORDERS.to_vec(),
            sampler,
            quad_nodes: QuadratureRule::DEFAULT_NODES,
            reference: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    Inconclusive,
}

/// A verdict and the number that decided it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub outcome: Outcome,
    pub statistic: f64,
    pub detail: String,
}

impl Verdict {
    fn new(outcome: Outcome, statistic: f64, detail: impl Into<String>) -> Self {
        Self { outcome, statistic, detail: detail.into() }
    }

    pub fn passed(&self) -> bool {
        self.outcome == Outcome::Pass
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyPoint {
    pub n: usize,
    pub estimate: EstimateResult,
}

/// Least-squares slope of `ln|error|` against `ln n`, with a 95% interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub orders_used: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub method: Method,
    pub observable: Observable,
    pub potential: String,
    pub beta: f64,
    pub points: Vec<StudyPoint>,
    pub reference: Option<f64>,
    pub reference_source: Option<String>,
    pub classical_bound: Option<f64>,
    pub fitted_slope: Option<RateFit>,
    pub verdicts: BTreeMap<String, Verdict>,
}

impl ConvergenceReport {
    /// A report over precomputed points, with no verdicts attached.
    pub fn from_points(
        method: Method,
        observable: Observable,
        points: Vec<StudyPoint>,
        reference: Option<f64>,
    ) -> Self {
        let mut points = points;
        points.sort_by_key(|p| p.n);
        Self {
            method,
            observable,
            potential: String::new(),
            beta: f64::NAN,
            points,
            reference,
            reference_source: None,
            classical_bound: None,
            fitted_slope: None,
            verdicts: BTreeMap::new(),
        }
    }

    pub fn total_divergent(&self) -> u64 {
        self.points.iter().map(|p| p.estimate.divergent_count).sum()
    }

    /// Rows `n,mean,stderr,reference,abs_error`; the last two are empty
    /// without a reference.
    pub fn write_points_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "n,mean,stderr,reference,abs_error")?;
        for p in &self.points {
            let (reference, err) = match self.reference {
                Some(r) => (format!("{r:.17e}"), format!("{:.17e}", (p.estimate.mean - r).abs())),
                None => (String::new(), String::new()),
            };
            writeln!(w, "{},{:.17e},{:.17e},{reference},{err}", p.n, p.estimate.mean, p.estimate.stderr)?;
        }
        Ok(())
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self).map_err(|e| PavgError::Io(e.to_string()))
    }
}

/// Reference value from a closed form or the grid eigensolver, when one
/// applies to this potential and observable.
pub fn automatic_reference(
    pot: &PotentialModel,
    physics: &Physics,
    observable: &Observable,
) -> Result<Option<(f64, String)>> {
    let beta = physics.beta;
    match (&pot.kind, observable) {
        (PotentialKind::Free, Observable::RhoDiag { x }) => {
            Ok(Some((free_particle_density(x, x, &physics.sigma()?)?, "free-particle kernel".into())))
        }
        (PotentialKind::Harmonic { mass, omega }, obs) if pot.dim() == 1 && physics.masses[0] == *mass => {
            let h = harmonic_exact(beta, *mass, *omega)?;
            Ok(Some(match obs {
                Observable::RhoDiag { x } => (h.rho_diag(x[0]), "Mehler kernel".into()),
                Observable::Z { .. } => (h.z, "harmonic trace".into()),
            }))
        }
        (PotentialKind::Harmonic { .. } | PotentialKind::Quartic { .. }, obs) if pot.dim() == 1 => {
            let spec = Spectrum::new(pot, physics, &GridSpec::thermal(physics)?)?;
            Ok(Some(match obs {
                Observable::RhoDiag { x } => (spec.diagonal_at(beta, x[0])?, "finite-difference eigensolver".into()),
                Observable::Z { .. } => (spec.partition(beta), "finite-difference eigensolver".into()),
            }))
        }
        _ => Ok(None),
    }
}

/// Estimates at every order of the schedule on a shared seed, plus the
/// verdicts that apply.
pub fn run_study(cfg: &StudyConfig, pot: &PotentialModel, basis: &BasisSet) -> Result<ConvergenceReport> {
    if cfg.orders.is_empty() {
        return Err(PavgError::InvalidArgument("study needs at least one order".into()));
    }
    let quad = QuadratureRule::gauss_legendre(cfg.quad_nodes)?;
    let mut orders = cfg.orders.clone();
    orders.sort_unstable();
    orders.dedup();

    let observable = match &cfg.observable {
        Observable::Z { domain: None } => {
            Observable::Z { domain: Some(confining_box(pot, &cfg.physics, BoxDomain::DEFAULT_NODES)?) }
        }
        other => other.clone(),
    };

    let mut points = Vec::with_capacity(orders.len());
    for &n in &orders {
        let estimate = match &observable {
            Observable::RhoDiag { x } => {
                density_matrix(cfg.method, x, x, &cfg.physics, n, pot, basis, &quad, &cfg.sampler)?
            }
            Observable::Z { domain } => {
                let domain = domain.as_ref().expect("domain resolved above");
                partition_function(cfg.method, &cfg.physics, n, pot, basis, &quad, &cfg.sampler, domain)?
            }
        };
        log::info!("{} n = {n}: {:.8e} ± {:.2e}", cfg.method.label(), estimate.mean, estimate.stderr);
        points.push(StudyPoint { n, estimate });
    }

    let (reference, reference_source) = match cfg.reference {
        Some(r) => (Some(r), Some("configured".to_string())),
        None => match automatic_reference(pot, &cfg.physics, &observable)? {
            Some((r, src)) => (Some(r), Some(src)),
            None => (None, None),
        },
    };
    let classical_bound = match &observable {
        Observable::Z { domain: Some(d) } => {
            Some(pot.classical_partition(cfg.physics.beta, &cfg.physics.sigma()?, d)?)
        }
        _ => None,
    };

    let mut report = ConvergenceReport {
        method: cfg.method,
        observable,
        potential: pot.name().to_string(),
        beta: cfg.physics.beta,
        points,
        reference,
        reference_source,
        classical_bound,
        fitted_slope: None,
        verdicts: BTreeMap::new(),
    };
    attach_verdicts(&mut report);
    Ok(report)
}

fn attach_verdicts(report: &mut ConvergenceReport) {
    let mut verdicts = BTreeMap::new();
    verdicts.insert("monotone".to_string(), monotonicity_verdict(report));
    let divergent = report.total_divergent();
    verdicts.insert(
        "no_divergent_samples".to_string(),
        Verdict::new(
            if divergent == 0 { Outcome::Pass } else { Outcome::Fail },
            divergent as f64,
            format!("{divergent} divergent samples across all orders"),
        ),
    );
    if let Some(r) = report.reference {
        verdicts.insert("below_reference".to_string(), upper_bound_verdict(&report.points, r, "reference"));
    }
    if let Some(zc) = report.classical_bound {
        verdicts.insert("below_classical".to_string(), upper_bound_verdict(&report.points, zc, "classical bound"));
    }
    if report.reference.is_some() {
        match fit_rate(report) {
            Ok(fit) => {
                let outcome = if fit.slope <= -2.0 { Outcome::Pass } else { Outcome::Fail };
                verdicts.insert(
                    "rate".to_string(),
                    Verdict::new(
                        outcome,
                        fit.slope,
                        format!("slope {:.3} in [{:.3}, {:.3}]; gate slope <= -2", fit.slope, fit.ci_low, fit.ci_high),
                    ),
                );
                report.fitted_slope = Some(fit);
            }
            Err(e) => {
                verdicts.insert("rate".to_string(), Verdict::new(Outcome::Inconclusive, f64::NAN, e.to_string()));
            }
        }
    }
    report.verdicts = verdicts;
}

/// Largest `(mean - bound)/stderr` over the points: pass within 3σ, fail past 5σ.
fn upper_bound_verdict(points: &[StudyPoint], bound: f64, what: &str) -> Verdict {
    let worst = points
        .iter()
        .map(|p| standardized(p.estimate.mean - bound, p.estimate.stderr))
        .fold(f64::NEG_INFINITY, f64::max);
    let outcome = classify_excess(worst);
    Verdict::new(outcome, worst, format!("max excess over {what} is {worst:.3} standard errors"))
}

fn standardized(excess: f64, stderr: f64) -> f64 {
    if excess.is_nan() || stderr.is_nan() {
        f64::NAN
    } else if stderr > 0.0 {
        excess / stderr
    } else if excess > 0.0 {
        f64::INFINITY
    } else if excess < 0.0 {
        f64::NEG_INFINITY
    } else {
        0.0
    }
}

/// Classifies an excess measured in standard errors; NaN is a failure.
fn classify_excess(z: f64) -> Outcome {
    if z.is_nan() || z > FAIL_SIGMAS {
        Outcome::Fail
    } else if z <= PASS_SIGMAS {
        Outcome::Pass
    } else {
        Outcome::Inconclusive
    }
}

/// Each consecutive pair must satisfy `mean_{k+1} ≥ mean_k − 3σ_combined`.
/// The statistic is the largest drop in combined standard errors.
pub fn monotonicity_verdict(report: &ConvergenceReport) -> Verdict {
    if report.points.len() < 3 {
        return Verdict::new(Outcome::Inconclusive, f64::NAN, "fewer than 3 points");
    }
    let mut worst = f64::NEG_INFINITY;
    let mut at = 0;
    for pair in report.points.windows(2) {
        let (a, b) = (&pair[0].estimate, &pair[1].estimate);
        let drop = standardized(a.mean - b.mean, a.stderr.hypot(b.stderr));
        if drop.is_nan() || drop > worst {
            worst = drop;
            at = pair[1].n;
            if drop.is_nan() {
                break;
            }
        }
    }
    let outcome = classify_excess(worst);
    Verdict::new(outcome, worst, format!("largest drop {worst:.3} standard errors, entering n = {at}"))
}

/// Fits the error decay over points with `n ≥ 1` whose error is resolved
/// (`|mean − reference| > 3·stderr`). Needs at least four such points.
///
/// The interval combines the scatter of the residuals with the propagated
/// error bars (`δ ln|e| = stderr/|e|`), using a Student-t quantile.
pub fn fit_rate(report: &ConvergenceReport) -> Result<RateFit> {
    let reference = report
        .reference
        .ok_or_else(|| PavgError::InsufficientSignal("no reference value to measure errors against".into()))?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut dys = Vec::new();
    let mut used = Vec::new();
    for p in &report.points {
        let err = (p.estimate.mean - reference).abs();
        if p.n >= 1 && err.is_finite() && err > 0.0 && err > 3.0 * p.estimate.stderr {
            xs.push((p.n as f64).ln());
            ys.push(err.ln());
            dys.push(p.estimate.stderr / err);
            used.push(p.n);
        }
    }
    if xs.len() < 4 {
        return Err(PavgError::InsufficientSignal(format!(
            "only {} orders have errors resolved above 3 standard errors (need 4): {used:?}",
            xs.len()
        )));
    }
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let var_resid = ssr / (k - 2.0) / sxx;
    let var_prop: f64 = xs.iter().zip(&dys).map(|(x, dy)| ((x - mx) / sxx * dy).powi(2)).sum();
    let se = (var_resid + var_prop).sqrt();
    let t =
        StudentsT::new(0.0, 1.0, k - 2.0).map_err(|e| PavgError::InvalidArgument(e.to_string()))?.inverse_cdf(0.975);
    Ok(RateFit { slope, ci_low: slope - t * se, ci_high: slope + t * se, orders_used: used })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleConfig {
    pub n: usize,
    pub m: usize,
    pub trials: usize,
    pub tail_samples: usize,
    pub seed: u64,
    pub physics: Physics,
    /// Order of the residual width used for the claimed `U_n`; equal to
    /// `n` for the identity itself, anything else is a negative control.
    pub residual_order: usize,
    /// Agreement rate the trials must not fall significantly below.
    pub target_rate: f64,
}

impl MartingaleConfig {
    pub const MIN_TRIALS: usize = 200;

    pub fn new(n: usize, m: usize, trials: usize, seed: u64, physics: Physics) -> Self {
        Self { n, m, trials, tail_samples: 1000, seed, physics, residual_order: n, target_rate: 0.99 }
    }
}

const PREFIX_STREAM_TAG: u64 = 0x9a7e;

/// Draws `trials` random prefixes (endpoints `~ N(0, σ²)`, coefficients
/// standard normal) and checks `|E[U_m | prefix] − U_n| ≤ 3·stderr`.
///
/// Passes unless the agreement count is significantly below
/// `target_rate` (one-sided binomial p-value below 0.01); fails when the
/// p-value is below 1e-3.
pub fn martingale_verdict(
    cfg: &MartingaleConfig,
    pot: &PotentialModel,
    basis: &BasisSet,
    quad: &QuadratureRule,
) -> Result<Verdict> {
    if cfg.m <= cfg.n {
        return Err(PavgError::InvalidArgument(format!("m = {} must exceed n = {}", cfg.m, cfg.n)));
    }
    if cfg.trials < MartingaleConfig::MIN_TRIALS {
        return Err(PavgError::InvalidArgument(format!(
            "martingale check needs at least {} trials, got {}",
            MartingaleConfig::MIN_TRIALS,
            cfg.trials
        )));
    }
    if !(cfg.target_rate > 0.0 && cfg.target_rate < 1.0) {
        return Err(PavgError::InvalidArgument("target_rate must lie in (0, 1)".into()));
    }
    let sigma = cfg.physics.sigma()?;
    let d = sigma.dim();
    let streams = SampleStreams::new(cfg.seed, PREFIX_STREAM_TAG);
    let agreed: Vec<bool> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = streams.sample(t);
            let mut draw = |scale: &[f64]| -> Vec<f64> {
                scale
                    .iter()
                    .map(|s| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        s * z
                    })
                    .collect::<Vec<f64>>()
            };
            let x = draw(sigma.as_slice());
            let xp = draw(sigma.as_slice());
            let coeffs: Vec<Vec<f64>> = (0..cfg.n).map(|_| draw(&vec![1.0; d])).collect();
            let prefix = SeriesPathPrefix::new(x, xp, cfg.physics.beta, sigma.clone(), coeffs)?;
            let claimed = PathKernel::new(
                pot,
                basis,
                quad,
                &prefix.x,
                &prefix.x_prime,
                &sigma,
                cfg.n,
                Closure::Averaged { residual_order: cfg.residual_order },
            )?
            .action(&prefix.coeffs.concat(), &mut PathScratch::default())?;
            let tail = tail_conditional_action_with(
                &prefix,
                basis,
                pot,
                quad,
                cfg.m,
                cfg.tail_samples,
                cfg.seed.wrapping_add(t.wrapping_mul(0x9E37_79B9_7F4A_7C15)),
                Closure::Averaged { residual_order: cfg.m },
            )?;
            Ok((tail.mean - claimed).abs() <= PASS_SIGMAS * tail.stderr)
        })
        .collect::<Result<_>>()?;
    let hits = agreed.iter().filter(|a| **a).count();
    Ok(binomial_rate_verdict(hits, cfg.trials, cfg.target_rate))
}

/// Verdict on `hits` agreements out of `trials` against a target rate.
pub fn binomial_rate_verdict(hits: usize, trials: usize, target_rate: f64) -> Verdict {
    let rate = hits as f64 / trials as f64;
    let p_value = Binomial::new(target_rate, trials as u64).map(|b| b.cdf(hits as u64)).unwrap_or(f64::NAN);
    let outcome = if rate >= target_rate || p_value >= 0.01 {
        Outcome::Pass
    } else if p_value < 1e-3 {
        Outcome::Fail
    } else {
        Outcome::Inconclusive
    };
    Verdict::new(
        outcome,
        rate,
        format!(
            "{hits}/{trials} trials within 3 standard errors; one-sided p = {p_value:.3e} against rate {target_rate}"
        ),
    )
}
