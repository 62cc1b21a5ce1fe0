use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pavg_core::action::PathScratch;
use pavg_core::{
    eigensolver_density_matrix, pa_density_matrix, BasisSet, Closure, GridSpec, PathKernel, Physics, PotentialModel,
    QuadratureRule, SamplerConfig, TransformWidth,
};

fn action(c: &mut Criterion) {
    let quad = QuadratureRule::gauss_legendre(64).unwrap();
    let basis = BasisSet::default();
    let phys = Physics::unit(1.0, 3).unwrap();
    let sigma = phys.sigma().unwrap();
    let pot = PotentialModel::coulomb3d_confined(1.0, 1.0).unwrap();
    let (x, xp) = ([0.5, 0.0, 0.0], [0.0, 0.5, 0.0]);

    let mut group = c.benchmark_group("pa_action_coulomb3d");
    for n in [4usize, 32, 128] {
        let kernel =
            PathKernel::new(&pot, &basis, &quad, &x, &xp, &sigma, n, Closure::Averaged { residual_order: n }).unwrap();
        let coeffs: Vec<f64> = (0..3 * n).map(|i| ((i as f64) * 0.37).sin()).collect();
        let mut scratch = PathScratch::default();
        group.bench_with_input(BenchmarkId::from_parameter(n), &coeffs, |b, a| {
            b.iter(|| kernel.action(black_box(a), &mut scratch).unwrap())
        });
    }
    group.finish();
}

fn transforms(c: &mut Criterion) {
    let w = TransformWidth::isotropic(3, 0.3).unwrap();
    let coulomb = PotentialModel::coulomb3d(1.0).unwrap();
    let quartic = PotentialModel::quartic(3, 1.0).unwrap();
    let p = [0.4, -0.2, 0.7];
    c.bench_function("transform_coulomb_erf", |b| b.iter(|| coulomb.gaussian_transform(black_box(&p), &w).unwrap()));
    c.bench_function("transform_quartic", |b| b.iter(|| quartic.gaussian_transform(black_box(&p), &w).unwrap()));
    c.bench_function("transform_coulomb_numeric_32", |b| {
        b.iter(|| coulomb.numeric_transform(black_box(&p), &w, 32).unwrap())
    });
}

fn density(c: &mut Criterion) {
    let quad = QuadratureRule::gauss_legendre(64).unwrap();
    let basis = BasisSet::default();
    let phys = Physics::unit(1.0, 1).unwrap();
    let pot = PotentialModel::quartic(1, 1.0).unwrap();
    let cfg = SamplerConfig::new(10_000, 1).unwrap();
    let mut group = c.benchmark_group("pa_density_quartic_10k");
    group.sample_size(10);
    for n in [1usize, 16, 64] {
        group.bench_function(BenchmarkId::from_parameter(n), |b| {
            b.iter(|| pa_density_matrix(&[0.0], &[0.0], &phys, n, &pot, &basis, &quad, &cfg).unwrap())
        });
    }
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let phys = Physics::unit(1.0, 1).unwrap();
    let pot = PotentialModel::quartic(1, 1.0).unwrap();
    let mut group = c.benchmark_group("eigensolver_density");
    group.sample_size(10);
    for points in [256usize, 512] {
        let grid = GridSpec::symmetric(8.0, points).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(points), &grid, |b, g| {
            b.iter(|| eigensolver_density_matrix(&pot, &phys, g).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, action, transforms, density, oracle);
criterion_main!(benches);
