use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ppl_core::empirical::{kde, ConstantThreshold, CovariateKde};
use ppl_core::geometry::Triangulation;
use ppl_core::gp::{Case, FitOptions};
use ppl_core::par;
use ppl_core::predict::{simulate, StationaryModel};
use ppl_core::synth;
use ppl_core::tuning::{cross_validate, CVConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn modes() -> Vec<(&'static str, usize)> {
    vec![("sequential", 1), ("parallel", par::threads())]
}

fn cv(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let sample = synth::two_regime_sample(&mut rng, 300);
    let tri = Triangulation::build_irregular_grid(
        &ppl_core::geometry::NodeSet::from_vectors(&[vec![0.0], vec![90.0], vec![180.0], vec![270.0]]).unwrap(),
    )
    .unwrap();
    let cfg = CVConfig {
        folds: 3,
        replicates: 2,
        grid_size: 4,
        exponent_range: [0.0, 4.0],
        case: Case::A,
        seed: 0,
        fit: FitOptions { max_evals: 1500, ..FitOptions::default() },
    };
    let mut g = c.benchmark_group("cross_validate");
    g.sample_size(10);
    for (name, n) in modes() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| par::with_threads(n, || cross_validate(&sample, &tri, &ConstantThreshold(0.0), &cfg).unwrap()))
        });
    }
    g.finish();
}

fn kde_grid(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let sample = synth::storm_peak_sample(&mut rng, 2000);
    let mut g = c.benchmark_group("kde_grid_72x72");
    g.sample_size(10);
    for (name, n) in modes() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| par::with_threads(n, || kde(black_box(&sample), &[20.0, 30.0], &[72, 72]).unwrap()))
        });
    }
    g.finish();
}

fn simulation(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let sample = synth::storm_peak_sample(&mut rng, 1000);
    let density = CovariateKde::new(&sample, &[20.0, 30.0]).unwrap();
    let model = StationaryModel { scale: 1.0, shape: -0.2 };
    let labels = synth::default_labels(2);
    let mut g = c.benchmark_group("simulate_100k");
    g.sample_size(20);
    for (name, n) in modes() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                par::with_threads(n, || {
                    simulate(&model, &density, &ConstantThreshold(2.0), &labels, 0.3, 100_000, 4).unwrap()
                })
            })
        });
    }
    g.finish();
}

criterion_group!(benches, cv, kde_grid, simulation);
criterion_main!(benches);
