//! Seeded generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use crpq_core::expansion::SuccinctCq;
use crpq_core::succinct_nfa::{SuccinctNfa, Transition};
use crpq_core::syntax::{Atom, Crpq, RegexExpr, Symbol, Ucrpq, Var, Word};
use rand::seq::IndexedRandom;
use rand::Rng;

pub fn sym(s: &str) -> Symbol {
    Symbol::new(s).unwrap()
}

pub fn var(s: &str) -> Var {
    Var::new(s).unwrap()
}

pub fn letters(names: &[&str]) -> BTreeSet<Symbol> {
    names.iter().map(|s| sym(s)).collect()
}

pub fn random_word(rng: &mut impl Rng, alphabet: &[&str], max_len: usize) -> Word {
    let len = rng.random_range(1..=max_len);
    Word((0..len).map(|_| sym(alphabet.choose(rng).unwrap())).collect())
}

/// Up to `max_states` states over {a, b}. About half of the transition
/// words are factors of `v v v ...`, so that `v^m` is often accepted.
pub fn random_nfa(rng: &mut impl Rng, v: &Word, max_states: usize, max_word: usize, max_exp: u64) -> SuccinctNfa {
    let n = rng.random_range(1..=max_states);
    let n_trans = rng.random_range(1..=2 * n + 1);
    let transitions = (0..n_trans)
        .map(|_| {
            let word = if rng.random_bool(0.5) {
                let start = rng.random_range(0..v.len());
                let len = rng.random_range(1..=max_word);
                Word((start..start + len).map(|i| v.0[i % v.len()].clone()).collect())
            } else {
                random_word(rng, &["a", "b"], max_word)
            };
            Transition {
                from: rng.random_range(0..n),
                word,
                exp: rng.random_range(0..=max_exp),
                to: rng.random_range(0..n),
            }
        })
        .collect();
    let finals = (0..n).filter(|_| rng.random_bool(0.4)).collect::<BTreeSet<_>>();
    SuccinctNfa {
        states: (0..n).map(|i| format!("q{i}")).collect(),
        initial: 0,
        finals: if finals.is_empty() { BTreeSet::from([n - 1]) } else { finals },
        transitions,
    }
}

/// Up to `max_atoms` atoms over a small variable pool.
pub fn random_succinct_cq(rng: &mut impl Rng, max_atoms: usize, max_exp: u64, prefix: &str) -> SuccinctCq {
    let n_atoms = rng.random_range(1..=max_atoms);
    let pool: Vec<Var> = (0..3).map(|i| var(&format!("{prefix}{i}"))).collect();
    let raw = (0..n_atoms)
        .map(|_| {
            (
                pool.choose(rng).unwrap().clone(),
                random_word(rng, &["a", "b"], 2),
                rng.random_range(0..=max_exp),
                pool.choose(rng).unwrap().clone(),
            )
        })
        .collect();
    SuccinctCq::from_parts(Vec::new(), raw)
}

/// A query whose atoms are pieces of atoms of `left`: each chosen atom
/// `w^e` becomes `w^k` for some `k <= e`, with endpoints renamed into a
/// pool. Such pairs are contained noticeably more often than random ones.
pub fn derived_succinct_cq(rng: &mut impl Rng, left: &SuccinctCq, max_atoms: usize, prefix: &str) -> SuccinctCq {
    if left.atoms.is_empty() {
        return random_succinct_cq(rng, max_atoms, 3, prefix);
    }
    let n_atoms = rng.random_range(1..=max_atoms);
    let names: Vec<Var> = left.vars.iter().map(|v| var(&format!("{prefix}{}", v.as_str()))).collect();
    let index = |v: &Var| left.vars.iter().position(|x| x == v).unwrap();
    let raw = (0..n_atoms)
        .map(|_| {
            let a = left.atoms.choose(rng).unwrap();
            let src = if rng.random_bool(0.8) { names[index(&a.src)].clone() } else { names.choose(rng).unwrap().clone() };
            let dst = if rng.random_bool(0.8) { names[index(&a.dst)].clone() } else { names.choose(rng).unwrap().clone() };
            (src, a.word.clone(), rng.random_range(0..=a.exp), dst)
        })
        .collect();
    SuccinctCq::from_parts(Vec::new(), raw)
}

/// Atoms `a`, `b`, `c` or their stars, at least `min_star_letters` distinct
/// letters under stars.
pub fn random_letter_crpq(rng: &mut impl Rng, max_atoms: usize, min_star_letters: usize) -> Crpq {
    loop {
        let n_atoms = rng.random_range(1..=max_atoms);
        let pool = ["x", "y", "z"];
        let mut stars = BTreeSet::new();
        let atoms: Vec<Atom> = (0..n_atoms)
            .map(|_| {
                let l = sym(["a", "b", "c"].choose(rng).unwrap());
                let label = if rng.random_bool(0.6) {
                    stars.insert(l.clone());
                    RegexExpr::Star(Word(vec![l]))
                } else {
                    RegexExpr::Letter(l)
                };
                Atom::edge(&var(pool.choose(rng).unwrap()), label, &var(pool.choose(rng).unwrap()))
            })
            .collect();
        if stars.len() >= min_star_letters {
            return Crpq::new(atoms);
        }
    }
}

/// Small queries mixing powers, bounded powers, unions and stars.
pub fn random_ssf_crpq(rng: &mut impl Rng, max_atoms: usize) -> Crpq {
    let n_atoms = rng.random_range(1..=max_atoms);
    let pool = ["x", "y", "z", "w"];
    let atoms = (0..n_atoms)
        .map(|_| {
            let w = random_word(rng, &["a", "b"], 2);
            let label = match rng.random_range(0..6) {
                0 => RegexExpr::word(&w),
                1 => RegexExpr::Power(w, rng.random_range(1..=20)),
                2 => RegexExpr::PowerLE(w, rng.random_range(1..=9)),
                3 => RegexExpr::union(vec![RegexExpr::word(&w), RegexExpr::letter(&sym("c"))]),
                _ => RegexExpr::Star(w),
            };
            Atom::edge(&var(pool.choose(rng).unwrap()), label, &var(pool.choose(rng).unwrap()))
        })
        .collect();
    Crpq::new(atoms)
}

pub fn ucrpq(text: &str) -> Ucrpq {
    crpq_core::parse_ucrpq(text).unwrap()
}
