use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use edgar_core::stats::{hypergeom_sf_exact, hypergeom_sf_poisson};
use edgar_core::EnrichmentCounts;
use std::hint::black_box;

fn survival(c: &mut Criterion) {
    let mut group = c.benchmark_group("sf");
    let cases = [
        (
            "ad_fixture",
            EnrichmentCounts::new(8_000, 242, 14, 8).unwrap(),
        ),
        (
            "large_n",
            EnrichmentCounts::new(1_000_000, 1000, 100, 5).unwrap(),
        ),
        (
            "wide_tail",
            EnrichmentCounts::new(100_000, 50_000, 5_000, 2_600).unwrap(),
        ),
    ];
    for (name, counts) in cases {
        group.bench_with_input(BenchmarkId::new("exact", name), &counts, |b, c| {
            b.iter(|| hypergeom_sf_exact(black_box(c)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("poisson", name), &counts, |b, c| {
            b.iter(|| hypergeom_sf_poisson(black_box(c)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, survival);
criterion_main!(benches);
