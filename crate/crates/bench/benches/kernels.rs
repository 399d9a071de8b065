use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use rpfield::constraints::{lattice_penalized_exact, SolverConfig};
use rpfield::free_measure::{free_covariance, lattice_covariance, sample_gff};
use rpfield::interaction::{ActionPlan, Ensemble};
use rpfield::{
    ConstraintSet, CylindricalFunction, DiffOperator, Lagrangian, LatticeSpec, Mollifier, QuadratureConfig, Region,
    TestFunction,
};

fn sampling(c: &mut Criterion) {
    let mut group = c.benchmark_group("sample_gff");
    for n in [32, 64, 128] {
        let spec = LatticeSpec::new(2, n, 16.0, 1).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &spec, |b, spec| {
            let mut seed = 0;
            b.iter(|| {
                seed += 1;
                black_box(sample_gff(spec, seed))
            })
        });
    }
    group.finish();
}

fn covariance(c: &mut Criterion) {
    let f = TestFunction::scalar_gaussian(vec![0.0, 0.0], 0.5);
    let g = TestFunction::scalar_gaussian(vec![1.0, 0.5], 0.7);
    let quad = QuadratureConfig::radial();
    c.bench_function("free_covariance/radial_2d", |b| {
        b.iter(|| free_covariance(black_box(&f), black_box(&g), &quad).unwrap())
    });
    let spec = LatticeSpec::new(2, 64, 16.0, 1).unwrap();
    c.bench_function("lattice_covariance/64x64", |b| {
        b.iter(|| lattice_covariance(&spec, black_box(&f), black_box(&g)).unwrap())
    });
}

fn lattice_solve(c: &mut Criterion) {
    let spec = LatticeSpec::new(2, 32, 8.0, 2).unwrap();
    let cs = ConstraintSet::new(vec![DiffOperator::divergence(2)]).unwrap();
    let f = TestFunction::gaussian(vec![0.0, 0.0], 0.5, 1.0, vec![1.0, 0.0]);
    let m = Mollifier::new(2, 8.0).unwrap();
    let mut group = c.benchmark_group("lattice_penalized_exact");
    group.sample_size(10);
    for a in [10.0, 1000.0] {
        group.bench_with_input(BenchmarkId::from_parameter(a), &a, |b, &a| {
            b.iter(|| lattice_penalized_exact(&f, &f, &cs, a, &m, 2.0, &spec, &SolverConfig::default()).unwrap())
        });
    }
    group.finish();
}

fn action(c: &mut Criterion) {
    let spec = LatticeSpec::new(2, 32, 8.0, 1).unwrap();
    let m = Mollifier::new(2, 4.0).unwrap();
    let plan = ActionPlan::new(&spec, &Lagrangian::clipped_quartic(1.0, 1.0), &Region::ball(2, 2.5), &m).unwrap();
    let f = CylindricalFunction::cosine(TestFunction::scalar_gaussian(vec![0.5, 0.0], 0.5));
    let mut group = c.benchmark_group("ensemble");
    group.sample_size(10);
    group.bench_function("clipped_quartic/256", |b| {
        b.iter(|| Ensemble::generate(&spec, &[&plan], std::slice::from_ref(&f), 256, 1).unwrap())
    });
    group.finish();
}

criterion_group!(benches, sampling, covariance, lattice_solve, action);
criterion_main!(benches);
