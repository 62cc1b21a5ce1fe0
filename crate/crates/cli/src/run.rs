//! Dispatch of a validated configuration and report writing.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use pavg_core::estimator::confining_box;
use pavg_core::lab::{automatic_reference, Observable, StudyConfig, StudyPoint};
use pavg_core::{
    density_matrix, eigensolver_density_matrix, harmonic_exact, partition_function, run_study, trotter_square_density,
    BoxDomain, ConvergenceReport, EstimateResult, GridSpec, Method, OracleKernel, PavgError, QuadratureRule,
};
use serde::Serialize;

use crate::config::{Command, ConfigErrors, OracleKind, PotentialSpec, RunConfig, StudyObservable};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Config(#[from] ConfigErrors),
    #[error("{0}")]
    Core(#[from] PavgError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    /// 2 configuration, 3 invalid or unsupported request, 4 numerical
    /// failure, 5 file system.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Core(e) => match e {
                PavgError::InvalidArgument(_) | PavgError::Unsupported(_) => 3,
                PavgError::Io(_) => 5,
                _ => 4,
            },
            RunError::Io(_) => 5,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KatoRow {
    pub eps: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum RunResult {
    Rho {
        method: Method,
        n: usize,
        estimate: EstimateResult,
        reference: Option<f64>,
        reference_source: Option<String>,
    },
    Z {
        method: Method,
        n: usize,
        domain: BoxDomain,
        estimate: EstimateResult,
        reference: Option<f64>,
        reference_source: Option<String>,
        classical_bound: f64,
    },
    Study(ConvergenceReport),
    Kato {
        rows: Vec<KatoRow>,
        strictly_decreasing: bool,
        last_over_first: f64,
    },
    Oracle {
        kind: OracleKind,
        grid: GridSpec,
        trace: f64,
        rho_origin: Option<f64>,
        max_asymmetry: f64,
    },
}

#[derive(Serialize)]
struct Report<'a> {
    schema_version: u32,
    code_version: &'static str,
    config: &'a RunConfig,
    result: &'a RunResult,
}

/// Runs the command, writes `report.json` and the CSV outputs into the
/// configured directory, and returns a one-line summary.
pub fn run(cfg: &RunConfig) -> Result<String, RunError> {
    let pot = cfg.potential.build()?;
    let basis = cfg.method.basis;
    let quad = QuadratureRule::gauss_legendre(cfg.method.quad_nodes)?;
    let physics = &cfg.physics;
    let dir = &cfg.output.dir;
    fs::create_dir_all(dir)?;

    let (result, summary) = match cfg.command {
        Command::Rho => {
            let (x, xp) = (&cfg.observable.x, &cfg.observable.x_prime);
            let n = cfg.method.n;
            let estimate = density_matrix(cfg.method.kind, x, xp, physics, n, &pot, &basis, &quad, &cfg.sampler)?;
            let reference =
                if x == xp { automatic_reference(&pot, physics, &Observable::RhoDiag { x: x.clone() })? } else { None };
            write_single_point(dir, n, estimate, reference.as_ref().map(|r| r.0))?;
            let summary = format!(
                "rho({x:?}, {xp:?}; beta = {}) = {:.8e} +/- {:.2e} ({}, n = {n}, divergent = {})",
                physics.beta,
                estimate.mean,
                estimate.stderr,
                cfg.method.kind.label(),
                estimate.divergent_count
            );
            let (reference, reference_source) = reference.unzip();
            (RunResult::Rho { method: cfg.method.kind, n, estimate, reference, reference_source }, summary)
        }
        Command::Z => {
            let n = cfg.method.n;
            let domain = match &cfg.domain {
                Some(d) => d.clone(),
                None => confining_box(&pot, physics, BoxDomain::DEFAULT_NODES)?,
            };
            let estimate = partition_function(cfg.method.kind, physics, n, &pot, &basis, &quad, &cfg.sampler, &domain)?;
            let reference = automatic_reference(&pot, physics, &Observable::Z { domain: Some(domain.clone()) })?;
            let classical_bound = pot.classical_partition(physics.beta, &physics.sigma()?, &domain)?;
            write_single_point(dir, n, estimate, reference.as_ref().map(|r| r.0))?;
            let summary = format!(
                "Z(beta = {}) = {:.8e} +/- {:.2e} ({}, n = {n}); classical bound {:.8e}",
                physics.beta,
                estimate.mean,
                estimate.stderr,
                cfg.method.kind.label(),
                classical_bound
            );
            let (reference, reference_source) = reference.unzip();
            (
                RunResult::Z {
                    method: cfg.method.kind,
                    n,
                    domain,
                    estimate,
                    reference,
                    reference_source,
                    classical_bound,
                },
                summary,
            )
        }
        Command::Study => {
            let observable = match cfg.study.observable {
                StudyObservable::RhoDiag => Observable::RhoDiag { x: cfg.observable.x.clone() },
                StudyObservable::Z => Observable::Z { domain: cfg.domain.clone() },
            };
            let mut study = StudyConfig::new(cfg.method.kind, observable, physics.clone(), cfg.sampler);
            study.orders = cfg.study.orders.clone();
            study.quad_nodes = cfg.method.quad_nodes;
            study.reference = cfg.study.reference;
            let report = run_study(&study, &pot, &basis)?;
            write_csv(dir, "points.csv", |w| report.write_points_csv(w))?;
            let verdicts: Vec<String> =
                report.verdicts.iter().map(|(k, v)| format!("{k}={}", outcome_name(v.outcome))).collect();
            let slope = report.fitted_slope.as_ref().map_or("n/a".to_string(), |f| format!("{:.3}", f.slope));
            let summary = format!("study ({}): {}; slope {slope}", cfg.method.kind.label(), verdicts.join(" "));
            (RunResult::Study(report), summary)
        }
        Command::Kato => {
            let sigma = physics.sigma()?;
            let mut rows = Vec::with_capacity(cfg.kato.eps.len());
            for &eps in &cfg.kato.eps {
                let value = pot.kato_functional(&sigma, eps, &cfg.kato.grid, &cfg.kato.quadrature)?;
                rows.push(KatoRow { eps, value });
            }
            write_csv(dir, "kato.csv", |w| {
                writeln!(w, "eps,value")?;
                for r in &rows {
                    writeln!(w, "{:.17e},{:.17e}", r.eps, r.value)?;
                }
                Ok(())
            })?;
            let strictly_decreasing = rows.windows(2).all(|p| p[1].value < p[0].value);
            let last_over_first = rows.last().map_or(f64::NAN, |l| l.value / rows[0].value);
            let mut summary = String::from("eps          kato functional");
            for r in &rows {
                summary.push_str(&format!("\n{:<12.6} {:.6e}", r.eps, r.value));
            }
            summary
                .push_str(&format!("\nstrictly decreasing: {strictly_decreasing}; last/first = {last_over_first:.4}"));
            (RunResult::Kato { rows, strictly_decreasing, last_over_first }, summary)
        }
        Command::Oracle => {
            let grid = match cfg.oracle.half_width {
                Some(h) => GridSpec::symmetric(h, cfg.oracle.points)?,
                None => GridSpec::symmetric(10.0 * physics.sigma()?.as_slice()[0], cfg.oracle.points)?,
            };
            let kernel = match cfg.oracle.kind {
                OracleKind::Eigensolver => eigensolver_density_matrix(&pot, physics, &grid)?,
                OracleKind::Trotter => trotter_square_density(&pot, physics, &grid, cfg.oracle.squarings)?,
                OracleKind::HarmonicExact => harmonic_kernel(&cfg.potential, physics.beta, &grid)?,
            };
            write_csv(dir, "oracle_diagonal.csv", |w| kernel.write_diagonal_csv(w))?;
            if cfg.oracle.write_matrix {
                write_csv(dir, "oracle_matrix.csv", |w| kernel.write_csv(w))?;
            }
            let trace = kernel.trace();
            let rho_origin = kernel.diagonal_at(0.0).ok();
            let summary = format!(
                "{:?} oracle on {} points: trace = {trace:.8e}, rho(0, 0) = {}",
                cfg.oracle.kind,
                grid.points,
                rho_origin.map_or("n/a".to_string(), |v| format!("{v:.8e}"))
            );
            let result = RunResult::Oracle {
                kind: cfg.oracle.kind,
                grid,
                trace,
                rho_origin,
                max_asymmetry: kernel.max_asymmetry(),
            };
            (result, summary)
        }
    };

    write_csv(dir, "report.json", |w| {
        let report = Report {
            schema_version: SCHEMA_VERSION,
            code_version: env!("CARGO_PKG_VERSION"),
            config: cfg,
            result: &result,
        };
        serde_json::to_writer_pretty(&mut *w, &report).map_err(|e| PavgError::Io(e.to_string()))?;
        writeln!(w)?;
        Ok(())
    })?;
    Ok(summary)
}

fn outcome_name(o: pavg_core::Outcome) -> &'static str {
    match o {
        pavg_core::Outcome::Pass => "pass",
        pavg_core::Outcome::Fail => "fail",
        pavg_core::Outcome::Inconclusive => "inconclusive",
    }
}

fn harmonic_kernel(spec: &PotentialSpec, beta: f64, grid: &GridSpec) -> Result<OracleKernel, RunError> {
    let PotentialSpec::Harmonic { mass, omega, .. } = *spec else {
        return Err(PavgError::Unsupported("harmonic_exact needs a harmonic potential".into()).into());
    };
    Ok(harmonic_exact(beta, mass, omega)?.on_grid(grid))
}

fn write_single_point(dir: &Path, n: usize, estimate: EstimateResult, reference: Option<f64>) -> Result<(), RunError> {
    let report = ConvergenceReport::from_points(
        Method::PartialAveraging,
        Observable::Z { domain: None },
        vec![StudyPoint { n, estimate }],
        reference,
    );
    write_csv(dir, "points.csv", |w| report.write_points_csv(w))
}

fn write_csv<F>(dir: &Path, name: &str, body: F) -> Result<(), RunError>
where
    F: FnOnce(&mut BufWriter<File>) -> pavg_core::Result<()>,
{
    let mut w = BufWriter::new(File::create(dir.join(name))?);
    body(&mut w)?;
    w.flush()?;
    Ok(())
}
