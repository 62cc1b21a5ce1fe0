//! Partial-averaging random-series path integrals.
//!
//! Estimators for the quantum density matrix `ρ(x, x'; β)` and partition
//! function `Z(β)` built on the Fourier (Wiener) random-series
//! representation of the Brownian bridge, with the modes beyond order `n`
//! averaged analytically into a Gaussian-smeared potential. The crate also
//! carries the independent grid oracles and the convergence diagnostics
//! used to check the estimators.

pub mod action;
pub mod basis;
pub mod error;
pub mod estimator;
pub mod lab;
pub mod oracles;
pub mod physics;
pub mod potentials;
pub mod quadrature;
pub mod rng;
pub mod stats;

pub use action::{pa_action, primitive_action, tail_conditional_action, Closure, PathKernel, SeriesPathPrefix};
pub use basis::{BasisKind, BasisSet, WidthVector};
pub use error::{PavgError, Result};
pub use estimator::{
    density_matrix, free_particle_density, pa_density_matrix, pa_partition_function, partition_function,
    primitive_density_matrix, Method,
};
pub use lab::{
    fit_rate, martingale_verdict, monotonicity_verdict, run_study, ConvergenceReport, MartingaleConfig, Observable,
    Outcome, RateFit, StudyConfig, StudyPoint, Verdict,
};
pub use oracles::{
    eigensolver_density_matrix, harmonic_exact, trotter_square_density, GridSpec, HarmonicExact, OracleKernel, Spectrum,
};
pub use physics::Physics;
pub use potentials::{CustomPotential, KatoQuadrature, PotentialKind, PotentialModel, TransformWidth};
pub use quadrature::{BoxDomain, NormalRule, QuadratureRule};
pub use stats::{EstimateResult, SamplerConfig};
