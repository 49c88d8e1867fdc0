use criterion::{criterion_group, criterion_main, Criterion};
use hnn_cert::certify::{dual_search, paper_certificate, DualBudget};
use hnn_cert::enumerate::{enumerate_surfaces, SearchBudget};
use hnn_cert::turns::{build_product_graph, TurnSystem};
use hnn_cert_bench::cyclic_special;
use std::hint::black_box;

fn turn_system(c: &mut Criterion) {
    let ts = cyclic_special(5, 2);
    c.bench_function("turn_system z5 m2", |b| {
        b.iter(|| TurnSystem::new(black_box(&ts.word), &ts.hnn).unwrap())
    });
}

fn certificates(c: &mut Criterion) {
    let mut g = c.benchmark_group("certify");
    for (n, m) in [(2, 1), (3, 2), (5, 2)] {
        let ts = cyclic_special(n, m);
        let pg = build_product_graph(&ts);
        g.bench_function(format!("table z{n} m{m}"), |b| {
            b.iter(|| paper_certificate(&ts, &pg, n as u64).unwrap())
        });
        g.bench_function(format!("dual z{n} m{m}"), |b| {
            b.iter(|| dual_search(&ts, &pg, DualBudget::default()).unwrap())
        });
    }
    g.finish();
}

fn enumeration(c: &mut Criterion) {
    let mut g = c.benchmark_group("enumerate");
    g.sample_size(10);
    let ts = cyclic_special(2, 1);
    for deg in [2, 4] {
        let budget = SearchBudget {
            max_degree: deg,
            max_piece_turns: 6,
            ..SearchBudget::default()
        };
        g.bench_function(format!("z2 m1 degree {deg}"), |b| {
            b.iter(|| enumerate_surfaces(&ts, budget).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, turn_system, certificates, enumeration);
criterion_main!(benches);
