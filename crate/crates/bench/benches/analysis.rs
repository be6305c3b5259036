use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use crpq_core::boundedness::{is_bounded, AnalysisOptions};
use crpq_core::homomorphism::{succinct_containment, SearchCaps, SearchStats};
use crpq_core::succinct_nfa::{membership, NfaCaps, SuccinctNfa};
use crpq_core::expansion::SuccinctCq;
use crpq_core::syntax::{parse_ucrpq, parse_word, Var};
use std::hint::black_box;

/// Atoms `(src, word, exponent, dst)`.
fn succinct(atoms: &[(&str, &str, u64, &str)]) -> SuccinctCq {
    let v = |s: &str| Var::new(s).unwrap();
    let raw = atoms.iter().map(|&(s, w, e, d)| (v(s), parse_word(w).unwrap(), e, v(d))).collect();
    SuccinctCq::from_parts(Vec::new(), raw)
}

fn bench_membership(c: &mut Criterion) {
    let nfa = SuccinctNfa::parse("initial: p\nfinals: r\np -[(ab)^13]-> q\nq -[(ab)^7]-> q\nq -[b]-> r\nq -[(ab)^1000]-> r\n").unwrap();
    let v = parse_word("ab").unwrap();
    let mut group = c.benchmark_group("membership");
    for m in [20u64, 1_013, 1_000_000] {
        group.bench_with_input(BenchmarkId::from_parameter(m), &m, |b, &m| {
            b.iter(|| membership(&nfa, &v, black_box(m), NfaCaps::default()).unwrap())
        });
    }
    group.finish();
}

fn bench_containment(c: &mut Criterion) {
    let left = succinct(&[("x", "ab", 400, "y"), ("y", "a", 30, "z"), ("z", "b", 1, "x")]);
    let right = succinct(&[("u", "ab", 150, "v"), ("v", "ab", 50, "w"), ("p", "a", 7, "q")]);
    c.bench_function("succinct_containment", |b| {
        b.iter(|| {
            let mut stats = SearchStats::default();
            succinct_containment(black_box(&left), &right, SearchCaps::default(), &mut stats).unwrap()
        })
    });
}

fn bench_boundedness(c: &mut Criterion) {
    let opts = AnalysisOptions::default();
    let mut group = c.benchmark_group("is_bounded");
    group.sample_size(10);
    for (name, text) in [
        ("absorbed_star", "?x -[a]-> ?y, ?x -[a*]-> ?z, ?z -[b]-> ?w"),
        ("star_vs_letter", "?x -[a*]-> ?y, ?x -[b]-> ?y"),
        ("two_stars", "?x -[a*]-> ?y, ?x -[b*]-> ?y"),
    ] {
        let q = parse_ucrpq(text).unwrap();
        group.bench_function(name, |b| b.iter(|| is_bounded(black_box(&q), &opts).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, bench_membership, bench_containment, bench_boundedness);
criterion_main!(benches);
