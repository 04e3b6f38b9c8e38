//! Sequential against rayon execution for the batch-parallel kernels.
//!
//! Without the `parallel` feature both variants run the same plain iterators.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use mcflab::expander::{solve_expander_graph1d, ShootingConfig};
use mcflab::gaussian::{entropy_lower_bound, EntropySearchConfig};
use mcflab::geometry::{PolylineCurve, RegularCone};
use mcflab::par::Execution;
use mcflab::Vec2;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn entropy_search(c: &mut Criterion) {
    let curve = PolylineCurve::circle(Vec2::zeros(), 1.0, 256).unwrap();
    let cfg = EntropySearchConfig::spanning(&curve).with_log_t(-3.0, 3.0, 25);
    let mut group = c.benchmark_group("entropy_search");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| entropy_lower_bound(black_box(&curve), &cfg, exec).unwrap())
        });
    }
    group.finish();
}

fn shooting_scan(c: &mut Criterion) {
    let cone = RegularCone::symmetric(0.5).unwrap();
    let mut group = c.benchmark_group("expander_shooting");
    group.sample_size(10);
    for (name, exec) in MODES {
        let cfg = ShootingConfig { refinement_check: false, exec, ..ShootingConfig::default() };
        group.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| solve_expander_graph1d(black_box(cone), cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, entropy_search, shooting_scan);
criterion_main!(benches);
