//! Rayon vs single-thread timings of the two hot paths: the flow right-hand
//! side (boundary quermassintegrals at every node) and the polar chord
//! integral. Build with `--no-default-features` to time the sequential
//! fallback code path instead.

use std::f64::consts::PI;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};

use chordflow::body::ConvexBody;
use chordflow::chord::chord_integral_fixed;
use chordflow::flow::{rhs, FlowConfig};
use chordflow::grid::{make_grid, DirectionGrid};
use chordflow::orlicz::OrliczPhi;

fn ellipse(n: usize, a: f64, b: f64) -> ConvexBody {
    let grid = Arc::new(make_grid(2, n).unwrap());
    let h = (0..n)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / n as f64;
            ((a * t.cos()).powi(2) + (b * t.sin()).powi(2)).sqrt()
        })
        .collect();
    ConvexBody::new(grid, h).unwrap()
}

fn bench_rhs(c: &mut Criterion) {
    let n = 256;
    let body = ellipse(n, 1.2, 1.0);
    let cfg = FlowConfig::new(2.0, OrliczPhi::power(2.0).unwrap(), vec![1.0; n]).unwrap();
    let dirs = DirectionGrid::from_grid(body.grid());
    let mut group = c.benchmark_group("rhs_n256");
    #[cfg(feature = "parallel")]
    {
        group.bench_function("rayon", |b| {
            b.iter(|| rhs(&body, &cfg, &dirs).unwrap())
        });
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        group.bench_function("one_thread", |b| {
            b.iter(|| pool.install(|| rhs(&body, &cfg, &dirs).unwrap()))
        });
    }
    #[cfg(not(feature = "parallel"))]
    group.bench_function("sequential", |b| {
        b.iter(|| rhs(&body, &cfg, &dirs).unwrap())
    });
    group.finish();
}

fn bench_chord_integral(c: &mut Criterion) {
    let body = ellipse(128, 2.0, 1.0);
    let dirs = DirectionGrid::from_grid(body.grid());
    let mut group = c.benchmark_group("chord_integral_n128");
    #[cfg(feature = "parallel")]
    {
        group.bench_function("rayon", |b| {
            b.iter(|| chord_integral_fixed(&body, &dirs, 2.0, 32).unwrap())
        });
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        group.bench_function("one_thread", |b| {
            b.iter(|| pool.install(|| chord_integral_fixed(&body, &dirs, 2.0, 32).unwrap()))
        });
    }
    #[cfg(not(feature = "parallel"))]
    group.bench_function("sequential", |b| {
        b.iter(|| chord_integral_fixed(&body, &dirs, 2.0, 32).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_rhs, bench_chord_integral);
criterion_main!(benches);
