//! Sequential against data-parallel execution on the same workloads.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ivpcert::corpus::{self, CorpusEntry};
use ivpcert::exec::Execution;
use ivpcert::expr::{parse_expr, Scope, SymbolKind};
use ivpcert::ivp::{Bound, Interval};
use ivpcert::oracle::{falsify, SamplePlan};
use ivpcert::prover::{CertifyOptions, LemmaStore};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn small_corpus() -> Vec<CorpusEntry> {
    corpus::builtin()
        .into_iter()
        .map(|mut e| {
            e.sweep.retain(|n| (1..=6).contains(n));
            e
        })
        .collect()
}

fn corpus_run(c: &mut Criterion) {
    let entries = small_corpus();
    let mut g = c.benchmark_group("corpus");
    g.sample_size(10);
    for (name, exec) in MODES {
        let opts = CertifyOptions { exec, ..CertifyOptions::default() };
        g.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, opts| {
            b.iter(|| {
                let mut store = LemmaStore::new();
                corpus::run(&entries, &mut store, opts)
            })
        });
    }
    g.finish();
}

fn falsifier(c: &mut Criterion) {
    let scope = Scope::new().with("t", SymbolKind::OdeVar).with("a", SymbolKind::Const);
    let lhs = parse_expr("(cos(t) + i*sin(t))^12*exp(i*a)", &scope).unwrap();
    let rhs = parse_expr("exp(i*(12*t + a))", &scope).unwrap();
    let window = Interval { lo: Bound::parse("-3").unwrap(), hi: Bound::parse("3").unwrap() };
    let plan = SamplePlan::new("t", window).count(400).precision(256).seed(1).consts(["a".into()]);
    let mut g = c.benchmark_group("falsify");
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| falsify(&lhs, &rhs, &plan, exec)));
    }
    g.finish();
}

criterion_group!(benches, corpus_run, falsifier);
criterion_main!(benches);
