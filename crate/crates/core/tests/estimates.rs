use pavg_core::{
    eigensolver_density_matrix, free_particle_density, pa_density_matrix, pa_partition_function, BasisSet, BoxDomain,
    GridSpec, Physics, PotentialModel, QuadratureRule, SamplerConfig, WidthVector,
};

fn estimate_with_threads(threads: usize) -> (u64, u64, u64, u64) {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    pool.install(|| {
        let phys = Physics::unit(1.0, 1).unwrap();
        let pot = PotentialModel::quartic(1, 1.0).unwrap();
        let quad = QuadratureRule::gauss_legendre(64).unwrap();
        let cfg = SamplerConfig::new(20_000, 5).unwrap();
        let rho = pa_density_matrix(&[0.3], &[0.3], &phys, 8, &pot, &BasisSet::default(), &quad, &cfg).unwrap();
        let domain = BoxDomain::symmetric(1, 4.0, 16);
        let z = pa_partition_function(&phys, 4, &pot, &BasisSet::default(), &quad, &cfg, &domain).unwrap();
        (rho.mean.to_bits(), rho.stderr.to_bits(), z.mean.to_bits(), z.stderr.to_bits())
    })
}

#[test]
fn estimates_do_not_depend_on_the_worker_count() {
    let one = estimate_with_threads(1);
    assert_eq!(one, estimate_with_threads(2));
    assert_eq!(one, estimate_with_threads(5));
}

#[test]
fn free_particle_is_exact_at_every_order() {
    let phys = Physics::unit(2.0, 3).unwrap();
    let pot = PotentialModel::free(3).unwrap();
    let quad = QuadratureRule::gauss_legendre(64).unwrap();
    let cfg = SamplerConfig::new(1_000, 1).unwrap();
    let (x, xp) = ([0.1, -0.4, 0.2], [0.5, 0.0, -0.3]);
    let exact = free_particle_density(&x, &xp, &phys.sigma().unwrap()).unwrap();
    for n in [0, 1, 7, 32] {
        let r = pa_density_matrix(&x, &xp, &phys, n, &pot, &BasisSet::default(), &quad, &cfg).unwrap();
        assert!((r.mean - exact).abs() <= 1e-14 * exact, "n = {n}: {} vs {exact}", r.mean);
        assert_eq!(r.stderr, 0.0);
    }
}

#[test]
fn free_particle_density_matches_the_gaussian() {
    let sigma = WidthVector::from_beta(1.5, &[2.0]).unwrap();
    let s2 = 1.5 / 2.0;
    let expected = (2.0 * std::f64::consts::PI * s2).sqrt().recip() * (-(0.7f64).powi(2) / (2.0 * s2)).exp();
    let got = free_particle_density(&[0.2], &[0.9], &sigma).unwrap();
    assert!((got - expected).abs() < 1e-15);
}

#[test]
fn pa_density_approaches_the_eigensolver_from_below() {
    let phys = Physics::unit(1.0, 1).unwrap();
    let pot = PotentialModel::quartic(1, 1.0).unwrap();
    let quad = QuadratureRule::gauss_legendre(64).unwrap();
    let reference = eigensolver_density_matrix(&pot, &phys, &GridSpec::symmetric(8.0, 1024).unwrap())
        .unwrap()
        .diagonal_at(0.0)
        .unwrap();
    let cfg = SamplerConfig::new(100_000, 3).unwrap();
    let low = pa_density_matrix(&[0.0], &[0.0], &phys, 1, &pot, &BasisSet::default(), &quad, &cfg).unwrap();
    let high = pa_density_matrix(&[0.0], &[0.0], &phys, 16, &pot, &BasisSet::default(), &quad, &cfg).unwrap();
    assert!(low.mean < reference);
    assert!(reference - high.mean < reference - low.mean);
    assert!((high.mean - reference).abs() < 5.0 * high.stderr + 1e-3 * reference);
}
