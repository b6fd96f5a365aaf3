use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use spinsqueeze::certify::{certify_depth, CertifyOptions, InMemoryTables, MeasurementRecord};
use spinsqueeze::curves::compute_curve_with;
use spinsqueeze::variational::{minimize_at_x, SearchOptions};
use spinsqueeze::{CurveGrid, Execution, Spin};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn curve_sweep(c: &mut Criterion) {
    let mut g = c.benchmark_group("curve_sweep");
    g.sample_size(10);
    for two_j in [20, 200] {
        let spin = Spin::new(two_j).unwrap();
        for (name, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(name, two_j), &spin, |b, &s| {
                b.iter(|| compute_curve_with(s, &CurveGrid::default(), exec).unwrap())
            });
        }
    }
    g.finish();
}

fn certify_scan(c: &mut Criterion) {
    let mut g = c.benchmark_group("certify_scan");
    g.sample_size(10);
    let n = 2_000u64;
    let rec = MeasurementRecord::new(
        n,
        Spin::new(1).unwrap(),
        0.95 * n as f64 / 2.0,
        n as f64 / 4.0 / 20.0,
    );
    // tables are computed once and shared, so only the per-k scan is timed
    let tables = InMemoryTables::default();
    for (name, exec) in MODES {
        let opts = CertifyOptions {
            execution: exec,
            ..CertifyOptions::default()
        };
        certify_depth(&rec, &opts, &tables).unwrap();
        g.bench_function(name, |b| {
            b.iter(|| certify_depth(&rec, &opts, &tables).unwrap())
        });
    }
    g.finish();
}

fn variational_restarts(c: &mut Criterion) {
    let mut g = c.benchmark_group("variational_restarts");
    g.sample_size(10);
    let spin = Spin::new(7).unwrap();
    for (name, exec) in MODES {
        let mut opts = SearchOptions::new(1);
        opts.execution = exec;
        g.bench_function(name, |b| {
            b.iter(|| minimize_at_x(spin, 0.5, &opts).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, curve_sweep, certify_scan, variational_restarts);
criterion_main!(benches);
