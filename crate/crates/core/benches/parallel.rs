use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use peakon::geometry::curvature_eigenvalues;
use peakon::par::{map_ordered, Exec};
use peakon::scan::{run_scan, ScanConfig};

fn scan(c: &mut Criterion) {
    let mut group = c.benchmark_group("scan");
    group.sample_size(10);
    for n in [2, 3] {
        let cfg = ScanConfig { n, samples: 200, ..Default::default() };
        for exec in [Exec::Sequential, Exec::Parallel] {
            group.bench_with_input(BenchmarkId::new(format!("{exec:?}"), n), &cfg, |b, cfg| {
                b.iter(|| run_scan(cfg, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn curvature_sweep(c: &mut Criterion) {
    let points: Vec<[f64; 3]> = (1..=100)
        .flat_map(|i| (1..=100).map(move |j| (0.1 * i as f64, 0.1 * j as f64)))
        .map(|(a, b)| [a + b, b, 0.0])
        .collect();
    let mut group = c.benchmark_group("curvature_sweep");
    for exec in [Exec::Sequential, Exec::Parallel] {
        group.bench_function(format!("{exec:?}"), |b| {
            b.iter(|| map_ordered(&points, exec, |q| curvature_eigenvalues(q).unwrap().max()))
        });
    }
    group.finish();
}

criterion_group!(benches, scan, curvature_sweep);
criterion_main!(benches);
