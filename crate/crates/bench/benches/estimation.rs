use std::hint::black_box;

use covci::eigenbounds::{tighten_orthonormal, DEFAULT_MAX_ITERS, DEFAULT_TOL};
use covci::precision::Route;
use covci::ustat::required_moments;
use covci::{
    compute_moments, cov_of_cov, epsilon_bound, BoundSource, EigenBounds, PrecisionReport,
};
use covci_bench::{estimate, gaussian_sample};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

fn bench_cov_of_cov(c: &mut Criterion) {
    let mut g = c.benchmark_group("cov_of_cov_p5");
    g.sample_size(10);
    for n in [10_000usize, 100_000] {
        let sample = gaussian_sample(5, n, 1);
        g.throughput(Throughput::Elements(n as u64));
        g.bench_with_input(BenchmarkId::from_parameter(n), &sample, |b, s| {
            b.iter(|| cov_of_cov(black_box(s)).unwrap())
        });
    }
    g.finish();

    let mut g = c.benchmark_group("cov_of_cov_n10000");
    g.sample_size(10);
    for p in [3usize, 5, 10] {
        let sample = gaussian_sample(p, 10_000, 2);
        g.bench_with_input(BenchmarkId::from_parameter(p), &sample, |b, s| {
            b.iter(|| cov_of_cov(black_box(s)).unwrap())
        });
    }
    g.finish();
}

fn bench_moments(c: &mut Criterion) {
    let sample = gaussian_sample(5, 100_000, 3);
    let requests = required_moments(5);
    c.bench_function("moments_p5_n100000", |b| {
        b.iter(|| compute_moments(black_box(&sample), black_box(requests.iter().cloned())).unwrap())
    });
}

fn bench_bounds(c: &mut Criterion) {
    let mut g = c.benchmark_group("eigen_bounds");
    for p in [5usize, 10, 20] {
        let cov = estimate(p, 4);
        let eps = epsilon_bound(&cov, 0.05, BoundSource::LargestEigenvalue)
            .unwrap()
            .epsilon;
        g.bench_with_input(BenchmarkId::new("construct", p), &(), |b, _| {
            b.iter(|| EigenBounds::new(black_box(&cov.sigma_hat), eps).unwrap())
        });
        let eb = EigenBounds::new(&cov.sigma_hat, eps).unwrap();
        g.bench_with_input(BenchmarkId::new("tighten", p), &eb, |b, eb| {
            b.iter(|| tighten_orthonormal(black_box(eb), DEFAULT_MAX_ITERS, DEFAULT_TOL))
        });
        let bound = epsilon_bound(&cov, 0.05, BoundSource::LargestEigenvalue).unwrap();
        g.bench_with_input(BenchmarkId::new("precision_both", p), &cov, |b, cov| {
            b.iter(|| {
                PrecisionReport::compute(
                    black_box(cov),
                    bound,
                    Route::Both,
                    Some((DEFAULT_MAX_ITERS, DEFAULT_TOL)),
                )
                .unwrap()
            })
        });
    }
    g.finish();
}

criterion_group!(benches, bench_cov_of_cov, bench_moments, bench_bounds);
criterion_main!(benches);
