use std::hint::black_box;

use cqproof::deriver_sk::chase_kb;
use cqproof::fixtures::gen_chain;
use cqproof::search::{min_size, min_tree_size, tree_shaped_min, Deriver, Measure};
use cqproof::syntax::parse_query;
use cqproof::KnowledgeBase;
use cqproof_bench::{example1_goal, path_goal};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn path_queries(c: &mut Criterion) {
    let mut group = c.benchmark_group("path_query");
    for n in [2, 4, 6, 8, 10] {
        let g = path_goal(n);
        group.bench_with_input(BenchmarkId::new("min_tree_size", n), &g, |b, g| {
            b.iter(|| min_tree_size(black_box(g)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("tree_shaped_min", n), &g, |b, g| {
            b.iter(|| tree_shaped_min(black_box(g)).unwrap())
        });
    }
    group.finish();
}

fn chain_gadget(c: &mut Criterion) {
    let (q, ans) = parse_query("q(x) :- R(x,y), A(y).\nanswers a.").unwrap();
    let base = KnowledgeBase::new(vec![], vec![]).unwrap();
    let mut group = c.benchmark_group("chain_gadget");
    for n in [2, 6, 12] {
        let f = gen_chain(&base, &q, &ans, n).unwrap();
        let tree = f.goal(Deriver::Sk, Measure::TreeSize);
        let size = f.goal(Deriver::Sk, Measure::Size);
        group.bench_with_input(BenchmarkId::new("min_tree_size", n), &tree, |b, g| {
            b.iter(|| min_tree_size(black_box(g)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("min_size", n), &size, |b, g| {
            b.iter(|| min_size(black_box(g)).unwrap())
        });
    }
    group.finish();
}

fn chase(c: &mut Criterion) {
    let g = example1_goal();
    let cfg = g.chase_config();
    c.bench_function("chase/example1", |b| b.iter(|| chase_kb(black_box(&g.kb), cfg).unwrap()));
    let g = path_goal(8);
    let cfg = g.chase_config();
    c.bench_function("chase/path8", |b| b.iter(|| chase_kb(black_box(&g.kb), cfg).unwrap()));
}

criterion_group!(benches, path_queries, chain_gadget, chase);
criterion_main!(benches);
