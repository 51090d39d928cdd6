use std::collections::BTreeSet;

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use layerflow_bench::{corpus, grid};
use layerflow_core::corpus::{filter_corpus, FilterConfig};
use layerflow_core::dsl::{check_policy_output, Difficulty, DslConfig};
use layerflow_core::graph::{decode_topo, density_scores, depth_oracle};

fn validation(c: &mut Criterion) {
    let config = DslConfig::default();
    let prior = BTreeSet::new();
    let mut group = c.benchmark_group("check_policy_output");
    for (w, d) in [(1, 2), (2, 3), (3, 3)] {
        let text = format!("Plan:\n```yaml\n{}```\n", grid(w, d, Difficulty::HARD).to_yaml());
        group.bench_with_input(BenchmarkId::from_parameter(w * d), &text, |b, text| {
            b.iter(|| check_policy_output(black_box(text), &prior, &config).unwrap())
        });
    }
    group.finish();
}

fn density(c: &mut Criterion) {
    let doc = grid(3, 3, Difficulty::HARD);
    c.bench_function("decode_and_score", |b| {
        b.iter(|| density_scores(&decode_topo(black_box(&doc), None), Difficulty::HARD))
    });
    let dag = decode_topo(&doc, None);
    c.bench_function("depth_oracle", |b| b.iter(|| depth_oracle(black_box(&dag))));
}

fn filter(c: &mut Criterion) {
    let config = FilterConfig::default();
    let mut group = c.benchmark_group("filter_corpus");
    group.sample_size(20);
    for n in [100, 1000] {
        let records = corpus(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &records, |b, records| {
            b.iter(|| filter_corpus(black_box(records), &config))
        });
    }
    group.finish();
}

criterion_group!(benches, validation, density, filter);
criterion_main!(benches);
