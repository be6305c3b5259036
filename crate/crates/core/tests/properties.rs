//! Property tests against the explicit-graph oracles.

mod common;

use std::collections::BTreeSet;

use common::*;
use crpq_core::boundedness::{
    is_bounded, is_bounded_in, oracle_check, AnalysisOptions, Enumeration, OracleCheck, Verdict, ZplusMode,
};
use crpq_core::expansion::{bound_query, ExponentDomain, ExpansionSpace};
use crpq_core::homomorphism::{expansion_contained, ContainmentWitness, SearchCaps, SearchStats};
use crpq_core::oracle::{contained_by_evaluation, eval_on_graph, materialize_graph, qbf_satisfiable};
use crpq_core::qbfgen::{build_q1, surrogate_bounded, Literal, QVar, Qbf};
use crpq_core::syntax::{parse_ucrpq, Atom, Crpq, RegexExpr, Symbol, Ucrpq, Word};
use crpq_core::Var;
use proptest::prelude::*;
use proptest::test_runner::RngSeed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Fixed seed so runs are reproducible.
fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        rng_seed: RngSeed::Fixed(0x00c0_ffee),
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn symbol() -> impl Strategy<Value = Symbol> {
    prop::sample::select(vec!["a", "b", "c", "x1", "a_y"]).prop_map(sym)
}

fn word() -> impl Strategy<Value = Word> {
    prop::collection::vec(symbol(), 1..4).prop_map(Word)
}

fn regex() -> impl Strategy<Value = RegexExpr> {
    let leaf = prop_oneof![
        symbol().prop_map(RegexExpr::Letter),
        Just(RegexExpr::Epsilon),
        (word(), 0u64..2000).prop_map(|(w, n)| RegexExpr::Power(w, n)),
        (word(), 0u64..2000).prop_map(|(w, n)| RegexExpr::PowerLE(w, n)),
        word().prop_map(RegexExpr::Star),
    ];
    leaf.prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(RegexExpr::concat),
            prop::collection::vec(inner, 2..4).prop_map(RegexExpr::union),
        ]
    })
}

fn crpq() -> impl Strategy<Value = Crpq> {
    let v = prop::sample::select(vec!["x", "y", "z", "w1"]).prop_map(var);
    let atom = prop_oneof![
        4 => (v.clone(), regex(), v.clone()).prop_map(|(s, r, d)| Atom::edge(&s, r, &d)),
        1 => (v.clone(), v).prop_map(|(s, d)| Atom::Equality(s, d)),
    ];
    prop::collection::vec(atom, 1..5).prop_map(Crpq::new)
}

fn supported_ucrpq(rng: &mut ChaCha8Rng) -> Ucrpq {
    let n = rng.random_range(1..=2);
    Ucrpq {
        disjuncts: (0..n).map(|_| random_ssf_crpq(rng, 3)).collect(),
    }
}

proptest! {
    #![proptest_config(config(200))]

    #[test]
    fn render_then_parse_is_identity(q in prop::collection::vec(crpq(), 1..3)) {
        let q = Ucrpq { disjuncts: q };
        let text = q.to_string();
        prop_assert_eq!(parse_ucrpq(&text).unwrap(), q, "{}", text);
    }

    #[test]
    fn collapse_is_idempotent(q in crpq()) {
        let once = q.collapse();
        prop_assert_eq!(once.collapse(), once.clone());
        let no_equalities = once.atoms.iter().all(|a| matches!(a, Atom::Edge { .. }));
        prop_assert!(no_equalities);
    }

    #[test]
    fn collapse_preserves_answers(q in crpq(), seed in any::<u64>()) {
        let q = Ucrpq::single(q);
        let c = q.collapse();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alphabet: Vec<Symbol> = q.alphabet().into_iter().collect();
        for _ in 0..3 {
            let n = rng.random_range(1..5);
            let g = crpq_core::oracle::random_graph(&mut rng, n, &alphabet);
            prop_assert_eq!(eval_on_graph(&q, &g), eval_on_graph(&c, &g));
        }
    }
}

proptest! {
    #![proptest_config(config(300))]

    /// A CQ is contained in a union exactly when the union holds on its
    /// canonical database.
    #[test]
    fn expansion_containment_matches_evaluation(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let left = random_succinct_cq(&mut rng, 4, 6, "l");
        let right = supported_ucrpq(&mut rng);
        let mut stats = SearchStats::default();
        let fast = expansion_contained(&left, &right, SearchCaps::default(), &mut stats).unwrap();
        let slow = contained_by_evaluation(&left, &right, 10_000).unwrap();
        prop_assert_eq!(matches!(fast, ContainmentWitness::Contained(_)), slow, "left {}; right {}", left, right);
        if let ContainmentWitness::Contained(proof) = fast {
            let target = &right.disjuncts[proof.disjunct];
            let g = materialize_graph(&left, 10_000).unwrap();
            prop_assert!(eval_on_graph(&Ucrpq::single(target.clone()), &g));
            let lambda = Ucrpq::single(proof.expansion.to_crpq());
            prop_assert!(eval_on_graph(&lambda, &g));
        }
    }

    #[test]
    fn large_exponents_agree_with_evaluation(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let left = random_succinct_cq(&mut rng, 3, 200, "l");
        let right = supported_ucrpq(&mut rng);
        let mut stats = SearchStats::default();
        let fast = expansion_contained(&left, &right, SearchCaps::default(), &mut stats).unwrap();
        let slow = contained_by_evaluation(&left, &right, 100_000).unwrap();
        prop_assert_eq!(matches!(fast, ContainmentWitness::Contained(_)), slow, "left {}; right {}", left, right);
    }
}

fn small_opts() -> AnalysisOptions {
    AnalysisOptions {
        expansion_cap: 5_000,
        ..AnalysisOptions::default()
    }
}

proptest! {
    #![proptest_config(config(40))]

    /// Bounded verdicts survive the oracle; unbounded witnesses really
    /// escape the rewriting.
    #[test]
    fn verdicts_are_confirmed_by_oracle(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = Ucrpq::single(random_ssf_crpq(&mut rng, 3));
        let report = is_bounded(&q, &small_opts()).unwrap();
        let check = oracle_check(&q, &report, seed);
        prop_assert!(!matches!(check, OracleCheck::Refuted(_)), "{}: {:?}", q, check);
    }

    #[test]
    fn long_exponent_mode_does_not_change_verdict(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = Ucrpq::single(random_ssf_crpq(&mut rng, 3));
        let paper = is_bounded(&q, &small_opts()).unwrap().verdict;
        let safe = is_bounded(&q, &AnalysisOptions { zplus_mode: ZplusMode::Safe, ..small_opts() }).unwrap().verdict;
        let full = is_bounded(&q, &AnalysisOptions { enumeration: Enumeration::Full, ..small_opts() }).unwrap().verdict;
        for other in [safe, full] {
            if !matches!(other, Verdict::Inconclusive(_)) && !matches!(paper, Verdict::Inconclusive(_)) {
                prop_assert_eq!(&paper, &other, "{}", q);
            }
        }
    }

    #[test]
    fn letter_sets_are_monotone_and_consistent(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = Ucrpq::single(random_letter_crpq(&mut rng, 3, 1));
        let opts = small_opts();
        let stars: BTreeSet<Symbol> = q.disjuncts[0]
            .edges()
            .filter_map(|(_, e, _)| match e {
                RegexExpr::Star(w) => Some(w.0[0].clone()),
                _ => None,
            })
            .collect();
        let all = is_bounded_in(&q, &stars, &opts).unwrap().verdict;
        let plain = is_bounded(&q, &opts).unwrap().verdict;
        if !matches!(all, Verdict::Inconclusive(_)) && !matches!(plain, Verdict::Inconclusive(_)) {
            prop_assert_eq!(&all, &plain, "{}", q);
        }
        if all == Verdict::Bounded {
            for a in &stars {
                let v = is_bounded_in(&q, &BTreeSet::from([a.clone()]), &opts).unwrap().verdict;
                prop_assert!(v != Verdict::Unbounded, "{} bounded in all stars but not in {}", q, a);
            }
        }
    }
}

fn random_qbf(rng: &mut ChaCha8Rng, n: usize, l: usize, clauses: usize) -> Qbf {
    let lit = |rng: &mut ChaCha8Rng| {
        let var = if rng.random_bool(0.5) { QVar::X(rng.random_range(1..=n)) } else { QVar::Y(rng.random_range(1..=l)) };
        Literal { var, positive: rng.random_bool(0.5) }
    };
    Qbf {
        n_universal: n,
        n_existential: l,
        clauses: (0..clauses).map(|_| [lit(rng), lit(rng), lit(rng)]).collect(),
    }
}

#[test]
fn reduction_surrogate_matches_satisfiability() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut t, mut f) = (0, 0);
    for _ in 0..40 {
        let n = rng.random_range(1..=2);
        let l = rng.random_range(1..=2);
        let k = rng.random_range(1..=3);
        let phi = random_qbf(&mut rng, n, l, k);
        let sat = qbf_satisfiable(&phi).unwrap();
        if sat { t += 1 } else { f += 1 }
        assert_eq!(surrogate_bounded(&phi, SearchCaps::default()).unwrap(), sat, "{phi}");
    }
    assert!(t > 0 && f > 0, "{t} true, {f} false");
}

#[test]
fn assignment_query_is_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..5 {
        let l = rng.random_range(1..=2);
        let phi = random_qbf(&mut rng, 1, l, 2);
        let report = is_bounded(&Ucrpq::single(build_q1(&phi)), &AnalysisOptions::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Bounded, "{phi}");
    }
}

#[test]
fn free_variables_become_loops() {
    let q = crpq_core::parse_crpq("?x -[a*]-> ?y").unwrap();
    let b = q.reduce_free_vars(&[var("x")]).unwrap();
    assert_eq!(b.to_string(), "?x -[a*]-> ?y, ?x -[a_x]-> ?x");
    let two = q.reduce_free_vars(&[var("x"), var("y")]).unwrap();
    assert_eq!(two.alphabet().len(), 3);
    assert!(q.reduce_free_vars(&[Var::new("z").unwrap()]).is_err());
    // unbounded with x free: the answer pairs are a-paths of any length
    let report = is_bounded(&Ucrpq::single(two), &AnalysisOptions::default()).unwrap();
    assert_eq!(report.verdict, Verdict::Unbounded);
    let report = is_bounded(&Ucrpq::single(b), &AnalysisOptions::default()).unwrap();
    assert_eq!(report.verdict, Verdict::Bounded);
}

#[test]
fn rewriting_of_single_star() {
    let q = parse_ucrpq("?x -[(ab)*]-> ?y").unwrap();
    let report = is_bounded(&q, &AnalysisOptions::default()).unwrap();
    assert_eq!(report.verdict, Verdict::Bounded);
    let z = report.bounds[0].z;
    assert_eq!(report.rewriting.unwrap().disjuncts[0], bound_query(&q.disjuncts[0], z));
}

/// Expansions of q(m) just above Z are contained in q(Z) for bounded q.
#[test]
fn bounded_queries_absorb_longer_expansions() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut bounded = 0;
    for _ in 0..60 {
        let q = Ucrpq::single(random_ssf_crpq(&mut rng, 3));
        let report = is_bounded(&q, &small_opts()).unwrap();
        if report.verdict != Verdict::Bounded {
            continue;
        }
        bounded += 1;
        let z = report.thresholds.z;
        let m = z + rng.random_range(1..=5);
        let space = ExpansionSpace::new(&q.disjuncts[0], 1_000_000, |_, _| ExponentDomain::range(0, m))
            .unwrap()
            .require_long(z, |_| true);
        let mut stats = SearchStats::default();
        for lambda in space.iter().take(300) {
            let w = expansion_contained(&lambda, &report.reference, SearchCaps::default(), &mut stats).unwrap();
            assert!(matches!(w, ContainmentWitness::Contained(_)), "{lambda} escapes the rewriting of {q}");
        }
    }
    assert!(bounded >= 5, "only {bounded} bounded queries sampled");
}
