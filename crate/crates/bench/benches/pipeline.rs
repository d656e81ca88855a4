use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use edgar_bench::{ad_store_with_padding, planted};
use edgar_core::{run_pipeline, PipelineConfig};
use std::hint::black_box;

/// Latency should track the query neighbourhood, not the graph size.
fn ad_padding(c: &mut Criterion) {
    let mut group = c.benchmark_group("ad_query_padded");
    let config = PipelineConfig::default();
    for extra in [0usize, 80_000, 400_000] {
        let (store, query) = ad_store_with_padding(extra);
        group.bench_with_input(
            BenchmarkId::from_parameter(store.nodes().len()),
            &store,
            |b, s| b.iter(|| run_pipeline(black_box(s), &query, &config).unwrap()),
        );
    }
    group.finish();
}

fn planted_scaling(c: &mut Criterion) {
    let mut group = c.benchmark_group("planted_population");
    group.sample_size(20);
    let config = PipelineConfig::default();
    for population in [1_000usize, 10_000, 50_000] {
        let (store, query) = planted(population, 9);
        group.throughput(Throughput::Elements(store.edges().len() as u64));
        group.bench_with_input(BenchmarkId::from_parameter(population), &store, |b, s| {
            b.iter(|| run_pipeline(black_box(s), &query, &config).unwrap())
        });
    }
    group.finish();
}

fn expansion(c: &mut Criterion) {
    let mut group = c.benchmark_group("store");
    group.sample_size(10);
    let fx = edgar_core::synth::ad_fixture();
    group.bench_function("ingest_expand_ad", |b| b.iter(|| fx.store().unwrap()));
    group.finish();
}

criterion_group!(benches, ad_padding, planted_scaling, expansion);
criterion_main!(benches);
