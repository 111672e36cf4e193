use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use et4el::category::{expand_category, PrepositionList};
use et4el::example::{MentionExample, Span};
use et4el::linker::{link, LinkConfig};
use et4el::typing::Featurizer;
use et4el_bench::scoring_fixture;

fn bench_link(c: &mut Criterion) {
    let mut group = c.benchmark_group("link");
    for &(cats, cands) in &[(1_000, 30), (60_000, 30)] {
        let (t, set, index) = scoring_fixture(cats, cands, 40);
        let config = LinkConfig::default();
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{cats}x{cands}")),
            &(),
            |b, _| b.iter(|| link(black_box(&t), black_box(&set), &index, &config).unwrap()),
        );
    }
    group.finish();
}

fn bench_featurize(c: &mut Criterion) {
    let tokens: Vec<String> =
        "ATHLETICS - BERLIN GRAND PRIX RESULTS . Michael Johnson ( U.S. ) 20.02"
            .split_whitespace()
            .map(str::to_string)
            .collect();
    let ex = MentionExample::new(tokens, Span::new(7, 9)).unwrap();
    let f = Featurizer::new(1 << 20, 0).unwrap();
    c.bench_function("featurize", |b| b.iter(|| f.featurize(black_box(&ex))));
}

fn bench_expand(c: &mut Criterion) {
    let preps = PrepositionList::default();
    c.bench_function("expand_category", |b| {
        b.iter(|| expand_category(black_box("Populated places established in 1624"), &preps))
    });
}

criterion_group!(benches, bench_link, bench_featurize, bench_expand);
criterion_main!(benches);
