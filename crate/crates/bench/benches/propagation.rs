use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use ssfm_core::engine::{run_ensemble, EnsembleOptions, Propagator};
use ssfm_core::lab::{knn_entropy, KnnConfig, SampleDistribution};
use ssfm_core::{generate_input, ChannelParams, InputKind, SeedTree, SimulationGrid, UnitaryDft};

fn params() -> ChannelParams {
    ChannelParams {
        beta2: -2.17e-26,
        gamma: 1.27e-3,
        n_ase: 1e-5,
        b_n: 5e10,
        ..Default::default()
    }
}

fn dft(c: &mut Criterion) {
    let mut g = c.benchmark_group("dft_filter");
    for l in [64usize, 256, 1024] {
        let f = UnitaryDft::new(l);
        let taps = vec![ssfm_core::Complex64::from_polar(1.0, 0.3); l];
        let mut buf = vec![ssfm_core::Complex64::new(0.5, -0.25); l];
        g.throughput(Throughput::Elements(l as u64));
        g.bench_with_input(BenchmarkId::from_parameter(l), &l, |b, _| {
            b.iter(|| f.filter_in_place(black_box(&mut buf), &taps).unwrap())
        });
    }
    g.finish();
}

fn single_realization(c: &mut Criterion) {
    let grid = SimulationGrid::new(2e4, 2e-11, 50, 64).unwrap();
    let prop = Propagator::kerr(grid, params()).unwrap();
    let seeds = SeedTree::new(1);
    let x = generate_input(&InputKind::IidGaussian, 6.4e-3, &grid, &seeds, 0).unwrap();
    c.bench_function("propagate_L64_K50", |b| {
        b.iter(|| prop.propagate_with(black_box(&x), &seeds, 0, |_| {}).unwrap())
    });
}

fn ensemble(c: &mut Criterion) {
    let grid = SimulationGrid::new(2e4, 2e-11, 50, 64).unwrap();
    let prop = Propagator::kerr(grid, params()).unwrap();
    let seeds = SeedTree::new(2);
    let mut g = c.benchmark_group("ensemble_L64_K50");
    g.sample_size(10);
    g.throughput(Throughput::Elements(1000));
    g.bench_function("M1000", |b| {
        b.iter(|| {
            run_ensemble(
                &prop,
                |r| generate_input(&InputKind::IidGaussian, 6.4e-3, &grid, &seeds, r),
                &seeds,
                &EnsembleOptions::new(1000),
            )
            .unwrap()
        })
    });
    g.finish();
}

fn knn(c: &mut Criterion) {
    let mut g = c.benchmark_group("knn_entropy");
    g.sample_size(10);
    for dim in [2usize, 4, 8] {
        let pts = SampleDistribution::ProperGaussian { variance: 1.0 }.draw(dim / 2, 20_000, 3);
        let flat: Vec<f64> = pts.iter().flat_map(|z| [z.re, z.im]).collect();
        g.bench_with_input(BenchmarkId::new("M20000", dim), &dim, |b, &d| {
            b.iter(|| knn_entropy(black_box(&flat), d, &KnnConfig::default()).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, dft, single_realization, ensemble, knn);
criterion_main!(benches);
