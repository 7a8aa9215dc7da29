//! Benchmarks for the data-parallel inner loops, comparing the rayon
//! batch helper against its sequential twin over identical closures.
//! Build with `--no-default-features` to measure the pure sequential
//! fallback build as well.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use serde_json::Value;

use litforge_core::chunk::{chunk_document, ChunkParams, WhitespaceTokenizer};
use litforge_core::embedding::{mock_embed, Role};
use litforge_core::exec;
use litforge_core::retrieval::{Metric, VectorIndex};
use litforge_core::synth::{synth_docs, synth_records, SynthConfig};
use litforge_core::validate::{run_all, ValidationConfig};

fn bench_chunking(c: &mut Criterion) {
    let docs: Vec<_> = synth_docs(&SynthConfig { seed: 1, docs: 60, ..SynthConfig::default() })
        .into_iter()
        .map(|d| d.doc)
        .collect();
    let params = ChunkParams::default();
    let work = |doc: &litforge_core::structure::StructuredDoc| {
        chunk_document(doc, &WhitespaceTokenizer, params).unwrap().len()
    };

    let mut group = c.benchmark_group("chunking");
    group.bench_function("parallel", |b| b.iter(|| black_box(exec::map_batch(&docs, work))));
    group.bench_function("sequential", |b| b.iter(|| black_box(exec::map_batch_seq(&docs, work))));
    group.finish();
}

fn bench_validation(c: &mut Criterion) {
    let records: Vec<(Option<u64>, Value)> = synth_records(2, 24)
        .iter()
        .map(|r| (Some(r.corpus_id), r.to_value()))
        .collect();
    let config = ValidationConfig::default();
    let work = |(id, value): &(Option<u64>, Value)| run_all(value, *id, &config).aggregate;

    let mut group = c.benchmark_group("validation");
    group.sample_size(10);
    group.bench_function("parallel", |b| b.iter(|| black_box(exec::map_batch(&records, work))));
    group.bench_function("sequential", |b| {
        b.iter(|| black_box(exec::map_batch_seq(&records, work)))
    });
    group.finish();
}

fn bench_embedding(c: &mut Criterion) {
    let texts: Vec<String> =
        (0..256).map(|i| format!("passage number {i} about catalytic spectra")).collect();
    let work = |text: &String| mock_embed(text, Role::Passage);

    let mut group = c.benchmark_group("embedding");
    group.bench_function("parallel", |b| b.iter(|| black_box(exec::map_batch(&texts, work))));
    group.bench_function("sequential", |b| {
        b.iter(|| black_box(exec::map_batch_seq(&texts, work)))
    });
    group.finish();
}

fn bench_search(c: &mut Criterion) {
    let items = (0..4096)
        .map(|i| (format!("{i}P0"), mock_embed(&format!("indexed paragraph {i}"), Role::Passage)));
    let index = VectorIndex::build(items, Metric::InnerProduct).unwrap();
    let queries: Vec<_> =
        (0..16).map(|i| mock_embed(&format!("query {i}"), Role::Query)).collect();

    // The scan inside `search` itself runs through the batch helpers, so
    // this lane reflects the feature-selected execution mode.
    let mut group = c.benchmark_group("search");
    group.bench_function("top10-batch", |b| {
        b.iter(|| {
            for q in &queries {
                black_box(index.search(q.as_slice(), 10).unwrap());
            }
        })
    });
    group.finish();
}

criterion_group!(benches, bench_chunking, bench_validation, bench_embedding, bench_search);
criterion_main!(benches);
