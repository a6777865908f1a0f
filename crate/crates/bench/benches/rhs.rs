use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use shoreline::detectors;
use shoreline::flux::assemble_rhs;
use shoreline::{PhysParams, Scheme, SchemeConfig};
use shoreline_bench::shoreline_fixture;

fn rhs(c: &mut Criterion) {
    let phys = PhysParams::default();
    let mut group = c.benchmark_group("assemble_rhs");
    for cells in [100, 1000, 10_000] {
        let g = shoreline_fixture(cells);
        for scheme in [Scheme::SkT, Scheme::Ku07, Scheme::PiecewiseConstant] {
            let cfg = SchemeConfig::with_scheme(scheme);
            group.bench_with_input(BenchmarkId::new(scheme.name(), cells), &g, |b, g| {
                b.iter(|| assemble_rhs(black_box(g), &cfg, &phys).unwrap())
            });
        }
    }
    group.finish();
}

fn suppressors(c: &mut Criterion) {
    let phys = PhysParams::default();
    let cfg = SchemeConfig::default();
    let g = shoreline_fixture(1000);
    c.bench_function("detectors/1000", |b| b.iter(|| detectors::compute(black_box(&g), &cfg, &phys)));
}

criterion_group!(benches, rhs, suppressors);
criterion_main!(benches);
