//! Coefficient evaluation and the divergence-form operator, on a one-thread
//! pool against the default pool. Built with `--no-default-features` the
//! same cases run through the sequential fallback.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use landau_core::coefficients::{build_kernels, compute_coefficients};
use landau_core::collision::q_divergence;
use landau_core::grid::make_maxwellian;
use landau_core::{ModelParams, VelocityGrid};

const SIZES: [usize; 2] = [16, 32];

#[cfg(feature = "parallel")]
fn variants() -> Vec<(String, rayon::ThreadPool)> {
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let all = rayon::ThreadPoolBuilder::new().build().unwrap();
    eprintln!("default pool: {} threads", all.current_num_threads());
    vec![("single-thread".to_string(), one), ("default-pool".to_string(), all)]
}

#[cfg(feature = "parallel")]
fn run_in<R: Send>(pool: &rayon::ThreadPool, f: impl FnOnce() -> R + Send) -> R {
    pool.install(f)
}

#[cfg(not(feature = "parallel"))]
fn variants() -> Vec<(String, ())> {
    vec![("sequential".to_string(), ())]
}

#[cfg(not(feature = "parallel"))]
fn run_in<R: Send>(_: &(), f: impl FnOnce() -> R + Send) -> R {
    f()
}

fn bench_operator(c: &mut Criterion) {
    let params = ModelParams::new(-3.0, 0.5).unwrap();
    let variants = variants();
    let mut coeffs_group = c.benchmark_group("coefficients");
    coeffs_group.sample_size(10);
    for n in SIZES {
        let grid = VelocityGrid::new(n, 8.0).unwrap();
        let tables = build_kernels(&grid, &params);
        let f = make_maxwellian(grid, 1.0, [0.0; 3], 1.0).unwrap();
        for (label, pool) in &variants {
            coeffs_group.bench_with_input(BenchmarkId::new(label.as_str(), n), &n, |b, _| {
                b.iter(|| run_in(pool, || compute_coefficients(&f, &tables, &params).unwrap()))
            });
        }
    }
    coeffs_group.finish();

    let mut q_group = c.benchmark_group("q_divergence");
    for n in SIZES {
        let grid = VelocityGrid::new(n, 8.0).unwrap();
        let tables = build_kernels(&grid, &params);
        let f = make_maxwellian(grid, 1.0, [0.0; 3], 1.0).unwrap();
        let fields = compute_coefficients(&f, &tables, &params).unwrap();
        for (label, pool) in &variants {
            q_group.bench_with_input(BenchmarkId::new(label.as_str(), n), &n, |b, _| {
                b.iter(|| run_in(pool, || q_divergence(&f, &f, &fields).unwrap()))
            });
        }
    }
    q_group.finish();
}

criterion_group!(benches, bench_operator);
criterion_main!(benches);
