//! Grid references for one-dimensional density matrices.
//!
//! Two independent constructions on the same uniform grid: diagonalizing a
//! second-order finite-difference Hamiltonian with Dirichlet walls, and
//! repeatedly squaring a high-temperature kernel. Closed forms for the
//! harmonic oscillator anchor both.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{PavgError, Result};
use crate::physics::Physics;
use crate::potentials::PotentialModel;

/// Uniform grid of interior points on `(lower, upper)`; the endpoints
/// themselves carry the Dirichlet condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lower: f64,
    pub upper: f64,
    pub points: usize,
}

impl GridSpec {
    pub const MIN_POINTS: usize = 64;
    pub const DEFAULT_POINTS: usize = 1024;

    pub fn new(lower: f64, upper: f64, points: usize) -> Result<Self> {
        let g = Self { lower, upper, points };
        g.validate()?;
        Ok(g)
    }

    pub fn symmetric(half_width: f64, points: usize) -> Result<Self> {
        Self::new(-half_width, half_width, points)
    }

    /// `±10σ` with the default point count.
    pub fn thermal(physics: &Physics) -> Result<Self> {
        let sigma = physics.sigma()?;
        Self::symmetric(10.0 * sigma.as_slice()[0], Self::DEFAULT_POINTS)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points < Self::MIN_POINTS {
            return Err(PavgError::InvalidArgument(format!(
                "grid needs at least {} points, got {}",
                Self::MIN_POINTS,
                self.points
            )));
        }
        if !(self.lower.is_finite() && self.upper.is_finite() && self.lower < self.upper) {
            return Err(PavgError::InvalidArgument("grid requires finite lower < upper".into()));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        (self.upper - self.lower) / (self.points + 1) as f64
    }

    pub fn coordinates(&self) -> Vec<f64> {
        let dx = self.spacing();
        (1..=self.points).map(|i| self.lower + i as f64 * dx).collect()
    }
}

/// `ρ(x_i, x_j; β)` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleKernel {
    pub beta: f64,
    pub grid: GridSpec,
    pub values: DMatrix<f64>,
}

impl OracleKernel {
    pub fn coordinates(&self) -> Vec<f64> {
        self.grid.coordinates()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.values.diagonal().iter().copied().collect()
    }

    /// `Σ_i ρ(x_i, x_i) Δx`.
    pub fn trace(&self) -> f64 {
        self.values.trace() * self.grid.spacing()
    }

    /// Diagonal at an arbitrary point by four-point Lagrange interpolation.
    pub fn diagonal_at(&self, x: f64) -> Result<f64> {
        interpolate(&self.grid, &self.diagonal(), x)
    }

    pub fn max_asymmetry(&self) -> f64 {
        let n = self.values.nrows();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..i {
                worst = worst.max((self.values[(i, j)] - self.values[(j, i)]).abs());
            }
        }
        worst
    }

    /// `∫ ρ(x, y) ρ(y, x') dy` on the grid: the kernel at twice the `β`.
    pub fn compose(&self) -> OracleKernel {
        let dx = self.grid.spacing();
        OracleKernel { beta: 2.0 * self.beta, grid: self.grid, values: (&self.values * &self.values) * dx }
    }

    /// Rows `x,x_prime,rho`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let xs = self.coordinates();
        writeln!(w, "x,x_prime,rho")?;
        for (i, xi) in xs.iter().enumerate() {
            for (j, xj) in xs.iter().enumerate() {
                writeln!(w, "{xi:.17e},{xj:.17e},{:.17e}", self.values[(i, j)])?;
            }
        }
        Ok(())
    }

    /// Rows `x,rho`.
    pub fn write_diagonal_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,rho")?;
        for (x, v) in self.coordinates().iter().zip(self.diagonal()) {
            writeln!(w, "{x:.17e},{v:.17e}")?;
        }
        Ok(())
    }
}

fn interpolate(grid: &GridSpec, values: &[f64], x: f64) -> Result<f64> {
    let dx = grid.spacing();
    let s = (x - grid.lower) / dx - 1.0;
    let n = values.len();
    if !(s >= 1.0 && s <= (n - 2) as f64) {
        return Err(PavgError::InvalidArgument(format!("x = {x} too close to the grid edge for interpolation")));
    }
    let base = (s.floor() as usize).min(n - 3) - 1;
    let mut total = 0.0;
    for a in 0..4 {
        let mut l = 1.0;
        for b in 0..4 {
            if a != b {
                l *= (s - (base + b) as f64) / (a as f64 - b as f64);
            }
        }
        total += l * values[base + a];
    }
    Ok(total)
}

fn check_oracle_inputs(pot: &PotentialModel, physics: &Physics, grid: &GridSpec) -> Result<f64> {
    grid.validate()?;
    if pot.dim() != 1 || physics.dim() != 1 {
        return Err(PavgError::Unsupported("grid oracles are one-dimensional".into()));
    }
    Ok(physics.masses[0])
}

fn potential_on_grid(pot: &PotentialModel, grid: &GridSpec) -> Result<Vec<f64>> {
    grid.coordinates().iter().map(|x| pot.evaluate(&[*x])).collect()
}

fn warn_if_open(pot: &PotentialModel, beta: f64, v: &[f64]) {
    let vmin = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let edge = v[0].min(v[v.len() - 1]);
    let weight = (-beta * (edge - vmin)).exp();
    if weight > 1e-8 {
        log::warn!(
            "{} is not confined by the grid (edge Boltzmann weight {weight:.2e}); the spectrum is truncated by the walls",
            pot.name()
        );
    }
}

/// Eigenpairs of the finite-difference Hamiltonian
/// `-(1/2m) d²/dx² + V` with Dirichlet walls. One diagonalization serves
/// every temperature.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub grid: GridSpec,
    pub energies: Vec<f64>,
    /// Columns are eigenvectors with unit discrete norm.
    vectors: DMatrix<f64>,
}

impl Spectrum {
    pub fn new(pot: &PotentialModel, physics: &Physics, grid: &GridSpec) -> Result<Self> {
        let mass = check_oracle_inputs(pot, physics, grid)?;
        let v = potential_on_grid(pot, grid)?;
        warn_if_open(pot, physics.beta, &v);
        let n = grid.points;
        let t = 1.0 / (2.0 * mass * grid.spacing().powi(2));
        let h = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                2.0 * t + v[i]
            } else if i.abs_diff(j) == 1 {
                -t
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let energies = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(n, n, |i, c| eig.eigenvectors[(i, order[c])]);
        Ok(Self { grid: *grid, energies, vectors })
    }

    fn boltzmann(&self, beta: f64) -> DVector<f64> {
        let e0 = self.energies[0];
        DVector::from_iterator(self.energies.len(), self.energies.iter().map(|e| (-beta * (e - e0)).exp()))
    }

    /// `Σ_k e^{-βE_k}`.
    pub fn partition(&self, beta: f64) -> f64 {
        (-beta * self.energies[0]).exp() * self.boltzmann(beta).sum()
    }

    pub fn density(&self, beta: f64) -> OracleKernel {
        let w = self.boltzmann(beta);
        let scale = (-beta * self.energies[0]).exp() / self.grid.spacing();
        let mut weighted = self.vectors.clone();
        for (c, wc) in w.iter().enumerate() {
            weighted.column_mut(c).scale_mut(*wc * scale);
        }
        let values = &weighted * self.vectors.transpose();
        OracleKernel { beta, grid: self.grid, values }
    }

    pub fn diagonal(&self, beta: f64) -> Vec<f64> {
        let w = self.boltzmann(beta);
        let scale = (-beta * self.energies[0]).exp() / self.grid.spacing();
        (0..self.grid.points)
            .map(|i| scale * self.vectors.row(i).iter().zip(w.iter()).map(|(v, wk)| v * v * wk).sum::<f64>())
            .collect()
    }

    pub fn diagonal_at(&self, beta: f64, x: f64) -> Result<f64> {
        interpolate(&self.grid, &self.diagonal(beta), x)
    }
}

/// Thermal kernel from a dense diagonalization of the finite-difference
/// Hamiltonian.
pub fn eigensolver_density_matrix(pot: &PotentialModel, physics: &Physics, grid: &GridSpec) -> Result<OracleKernel> {
    Ok(Spectrum::new(pot, physics, grid)?.density(physics.beta))
}

/// Thermal kernel by `squarings`-fold self-composition of the symmetric
/// short-time kernel `ρ_fp(x, x'; τ) e^{-τ(V(x) + V(x'))/2}`, `τ = β/2^k`.
pub fn trotter_square_density(
    pot: &PotentialModel,
    physics: &Physics,
    grid: &GridSpec,
    squarings: u32,
) -> Result<OracleKernel> {
    let mass = check_oracle_inputs(pot, physics, grid)?;
    if squarings < 8 {
        return Err(PavgError::InvalidArgument(format!("need at least 8 squarings, got {squarings}")));
    }
    let dx = grid.spacing();
    let tau = physics.beta / 2f64.powi(squarings as i32);
    let width = (tau / mass).sqrt();
    if width < 2.0 * dx {
        return Err(PavgError::GridResolution { width, two_dx: 2.0 * dx });
    }
    let v = potential_on_grid(pot, grid)?;
    warn_if_open(pot, physics.beta, &v);
    let xs = grid.coordinates();
    let norm = (2.0 * PI * width * width).sqrt().recip();
    let mut k = DMatrix::from_fn(grid.points, grid.points, |i, j| {
        let d = xs[i] - xs[j];
        norm * (-d * d / (2.0 * width * width) - 0.5 * tau * (v[i] + v[j])).exp()
    });
    for _ in 0..squarings {
        k = (&k * &k) * dx;
    }
    Ok(OracleKernel { beta: physics.beta, grid: *grid, values: k })
}

/// Closed forms for `V = ½ m ω² x²` in one dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicExact {
    pub beta: f64,
    pub mass: f64,
    pub omega: f64,
    /// `1 / (2 sinh(βω/2))`.
    pub z: f64,
}

impl HarmonicExact {
    /// Mehler diagonal `sqrt(mω / (2π sinh βω)) exp(-mω x² tanh(βω/2))`.
    pub fn rho_diag(&self, x: f64) -> f64 {
        let bw = self.beta * self.omega;
        let mw = self.mass * self.omega;
        (mw / (2.0 * PI * bw.sinh())).sqrt() * (-mw * x * x * (0.5 * bw).tanh()).exp()
    }

    /// Full Mehler kernel `ρ(x, x')`.
    pub fn rho(&self, x: f64, x_prime: f64) -> f64 {
        let bw = self.beta * self.omega;
        let mw = self.mass * self.omega;
        let s = bw.sinh();
        let q = (x * x + x_prime * x_prime) * bw.cosh() - 2.0 * x * x_prime;
        (mw / (2.0 * PI * s)).sqrt() * (-mw * q / (2.0 * s)).exp()
    }

    pub fn on_grid(&self, grid: &GridSpec) -> OracleKernel {
        let xs = grid.coordinates();
        let values = DMatrix::from_fn(xs.len(), xs.len(), |i, j| self.rho(xs[i], xs[j]));
        OracleKernel { beta: self.beta, grid: *grid, values }
    }
}

pub fn harmonic_exact(beta: f64, mass: f64, omega: f64) -> Result<HarmonicExact> {
    if [beta, mass, omega].iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(PavgError::InvalidArgument("beta, mass and omega must be positive".into()));
    }
    // e^{-t} / (1 - e^{-2t}) stays accurate at both small and large t
    let t = 0.5 * beta * omega;
    let z = (-t).exp() / -(-2.0 * t).exp_m1();
    Ok(HarmonicExact { beta, mass, omega, z })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn harmonic() -> PotentialModel {
        PotentialModel::harmonic(1, 1.0, 1.0).unwrap()
    }

    #[test]
    fn harmonic_closed_forms() {
        let h = harmonic_exact(1.0, 1.0, 1.0).unwrap();
        let series: f64 = (0..200).map(|k| (-(k as f64 + 0.5)).exp()).sum();
        assert!((h.z - series).abs() < 1e-14);
        assert!((h.z - 0.959_517_375_667_471_9).abs() < 1e-12);
        let cold = harmonic_exact(80.0, 1.0, 1.0).unwrap();
        assert!((cold.z / (-40.0f64).exp() - 1.0).abs() < 1e-12);
        let hot = harmonic_exact(1e-4, 1.0, 1.0).unwrap();
        assert!((hot.z * 1e-4 - 1.0).abs() < 1e-8);
        assert!(harmonic_exact(-1.0, 1.0, 1.0).is_err());
        assert!((h.rho(0.3, 0.3) / h.rho_diag(0.3) - 1.0).abs() < 1e-14);
        assert!((h.rho(0.3, -0.2) - h.rho(-0.2, 0.3)).abs() < 1e-16);
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::symmetric(5.0, 32).is_err());
        assert!(GridSpec::new(1.0, -1.0, 128).is_err());
        let g = GridSpec::symmetric(1.0, 99).unwrap();
        assert!((g.spacing() - 0.02).abs() < 1e-15);
        assert!(g.coordinates()[49].abs() < 1e-15);
    }

    #[test]
    fn eigensolver_matches_harmonic_trace_and_mehler() {
        let phys = Physics::unit(1.0, 1).unwrap();
        let grid = GridSpec::thermal(&phys).unwrap();
        let spec = Spectrum::new(&harmonic(), &phys, &grid).unwrap();
        let exact = harmonic_exact(1.0, 1.0, 1.0).unwrap();
        assert!((spec.partition(1.0) - exact.z).abs() < 1e-4);
        let k = spec.density(1.0);
        assert!((k.trace() - exact.z).abs() < 1e-4);
        assert!((k.diagonal_at(0.0).unwrap() / exact.rho_diag(0.0) - 1.0).abs() < 1e-4);
        assert!((k.diagonal_at(0.7).unwrap() / exact.rho_diag(0.7) - 1.0).abs() < 1e-4);
        assert!(k.max_asymmetry() < 1e-12);
        let diag = spec.diagonal(1.0);
        assert!(diag.iter().zip(k.diagonal()).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn free_particle_limit() {
        let phys = Physics::unit(1.0, 1).unwrap();
        let grid = GridSpec::symmetric(60.0, 1024).unwrap();
        let free = PotentialModel::free(1).unwrap();
        let k = eigensolver_density_matrix(&free, &phys, &grid).unwrap();
        let exact = (2.0 * PI).sqrt().recip();
        assert!((k.diagonal_at(0.0).unwrap() / exact - 1.0).abs() < 0.01);

        let grid = GridSpec::symmetric(8.0, 600).unwrap();
        let t = trotter_square_density(&free, &phys, &grid, 8).unwrap();
        let xs = grid.coordinates();
        let mid = grid.points / 2;
        for j in [mid - 20, mid, mid + 7] {
            let d = xs[mid] - xs[j];
            let fp = exact * (-0.5 * d * d).exp();
            assert!((t.values[(mid, j)] - fp).abs() < 1e-6);
        }
    }

    #[test]
    fn trotter_resolution_and_squaring_limits() {
        let phys = Physics::unit(1.0, 1).unwrap();
        let grid = GridSpec::symmetric(8.0, 128).unwrap();
        assert!(trotter_square_density(&harmonic(), &phys, &grid, 7).is_err());
        assert!(matches!(trotter_square_density(&harmonic(), &phys, &grid, 12), Err(PavgError::GridResolution { .. })));
    }

    #[test]
    fn trotter_agrees_with_eigensolver() {
        let phys = Physics::unit(1.0, 1).unwrap();
        let grid = GridSpec::symmetric(8.0, 512).unwrap();
        let t = trotter_square_density(&harmonic(), &phys, &grid, 8).unwrap();
        let e = eigensolver_density_matrix(&harmonic(), &phys, &grid).unwrap();
        let exact = harmonic_exact(1.0, 1.0, 1.0).unwrap();
        assert!((t.diagonal_at(0.0).unwrap() / e.diagonal_at(0.0).unwrap() - 1.0).abs() < 1e-3);
        assert!((t.trace() / exact.z - 1.0).abs() < 1e-3);
        assert!(t.max_asymmetry() < 1e-12);
        assert!(t.values.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn diagonal_csv_has_header_and_rows() {
        let phys = Physics::unit(1.0, 1).unwrap();
        let grid = GridSpec::symmetric(6.0, 64).unwrap();
        let k = eigensolver_density_matrix(&harmonic(), &phys, &grid).unwrap();
        let mut buf = Vec::new();
        k.write_diagonal_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("x,rho"));
        assert_eq!(text.lines().count(), 65);
    }
}
