//! Deciding boundedness, producing the star-free rewriting, and
//! boundedness restricted to stars over chosen letters.

use std::collections::BTreeSet;
use std::fmt;
use std::time::{Duration, Instant};

use crate::expansion::{bound_letters, bound_query, ExponentDomain, ExpansionError, ExpansionSpace, SuccinctCq, DEFAULT_EXPANSION_CAP};
use crate::homomorphism::{expansion_contained, ContainmentWitness, SearchCaps, SearchStats};
use crate::oracle::{contained_by_evaluation, eval_on_graph, materialize_graph, sampled_equivalence, Agreement};
use crate::syntax::{Crpq, FragmentClass, Symbol, Ucrpq, Word};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalysisError {
    #[error("query is outside the supported fragment: {0}")]
    Unsupported(String),
    #[error("bound {0} overflows 64 bits")]
    Overflow(&'static str),
    #[error(transparent)]
    Expansion(#[from] ExpansionError),
}

/// The counts behind the thresholds of one disjunct.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundsProfile {
    pub nratoms: u64,
    pub nrvars: u64,
    /// Longest word of a non-recursive atom, at least 1.
    pub n: u64,
    /// Words under stars.
    pub recwords: BTreeSet<Word>,
    pub zred: u64,
    pub zcol: u64,
    pub z: u64,
    pub zplus: u64,
    /// Longest starred word, at least 1.
    pub max_rec_word: u64,
}

impl BoundsProfile {
    /// Derivation of `z` for display.
    pub fn derivation(&self) -> String {
        format!(
            "Z = nratoms^3 * N * nrvars * Zred = {}^3 * {} * {} * {} = {}",
            self.nratoms, self.n, self.nrvars, self.zred, self.z
        )
    }
}

fn mul(a: u64, b: u64, what: &'static str) -> Result<u64, AnalysisError> {
    a.checked_mul(b).ok_or(AnalysisError::Overflow(what))
}

/// Thresholds of a single CRPQ, counted after collapsing equalities.
pub fn compute_bounds(q: &Crpq) -> Result<BoundsProfile, AnalysisError> {
    let q = q.collapse();
    let mut nratoms = 0u64;
    let mut n = 1u64;
    let mut recwords = BTreeSet::new();
    for (_, label, _) in q.edges() {
        nratoms += 1;
        match label {
            crate::syntax::RegexExpr::Star(w) => {
                recwords.insert(w.clone());
            }
            other => n = n.max(other.max_word_len()),
        }
    }
    let nrvars = q.vars().len() as u64;
    let zred = recwords
        .iter()
        .try_fold(1u64, |acc, w| mul(acc, w.len() as u64, "Zred"))?;
    let zcol = mul(mul(mul(nratoms, n, "Zcol")?, nrvars, "Zcol")?, zred, "Zcol")?;
    let z = mul(mul(nratoms, nratoms, "Z")?, zcol, "Z")?;
    let zplus = mul(nratoms, z, "Z+")?
        .checked_add(1)
        .ok_or(AnalysisError::Overflow("Z+"))?;
    let max_rec_word = recwords.iter().map(|w| w.len() as u64).max().unwrap_or(1);
    Ok(BoundsProfile {
        nratoms,
        nrvars,
        n,
        recwords,
        zred,
        zcol,
        z,
        zplus,
        max_rec_word,
    })
}

/// How the long exponent is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZplusMode {
    /// `nratoms * Z + 1`.
    #[default]
    Paper,
    /// `nratoms * Z * max|w| + nrvars + 1`, large enough to exceed the size
    /// of any expansion of the rewriting.
    Safe,
}

/// Exponents tried for star atoms on the left-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Enumeration {
    /// `{0..Z} ∪ {Z+}`.
    #[default]
    Restricted,
    /// `{0..Z+}`.
    Full,
}

/// Thresholds used for a whole union.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Thresholds {
    pub z: u64,
    pub zplus: u64,
}

/// Maximum `Z` over the disjuncts; `Z+` grows with the largest disjunct.
pub fn thresholds(profiles: &[BoundsProfile], mode: ZplusMode) -> Result<Thresholds, AnalysisError> {
    let z = profiles.iter().map(|p| p.z).max().unwrap_or(1);
    let atoms = profiles.iter().map(|p| p.nratoms).max().unwrap_or(1).max(1);
    let zplus = match mode {
        ZplusMode::Paper => mul(atoms, z, "Z+")?.checked_add(1),
        ZplusMode::Safe => {
            let w = profiles.iter().map(|p| p.max_rec_word).max().unwrap_or(1);
            let vars = profiles.iter().map(|p| p.nrvars).max().unwrap_or(0);
            mul(mul(atoms, z, "Z+")?, w, "Z+")?.checked_add(vars + 1)
        }
    }
    .ok_or(AnalysisError::Overflow("Z+"))?;
    Ok(Thresholds { z, zplus })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnalysisOptions {
    pub caps: SearchCaps,
    /// Largest number of left-hand expansions examined per disjunct.
    pub expansion_cap: u64,
    pub zplus_mode: ZplusMode,
    pub enumeration: Enumeration,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            caps: SearchCaps::default(),
            expansion_cap: DEFAULT_EXPANSION_CAP,
            zplus_mode: ZplusMode::Paper,
            enumeration: Enumeration::Restricted,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Bounded,
    Unbounded,
    Inconclusive(String),
}

impl Verdict {
    pub fn is_bounded(&self) -> bool {
        *self == Verdict::Bounded
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Bounded => "bounded",
            Verdict::Unbounded => "unbounded",
            Verdict::Inconclusive(_) => "inconclusive",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Inconclusive(why) => write!(f, "inconclusive ({why})"),
            v => f.write_str(v.label()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnalysisStats {
    /// Size of the left-hand expansion space, saturating.
    pub expansions_total: u128,
    pub expansions_checked: u64,
    pub nfa_calls: u64,
    pub steps: u64,
    pub wall: Duration,
}

/// Letters whose stars can be bounded, and letters whose test gave up.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LetterSet {
    pub bounded: BTreeSet<Symbol>,
    pub inconclusive: BTreeSet<Symbol>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalysisReport {
    pub verdict: Verdict,
    pub bounds: Vec<BoundsProfile>,
    pub thresholds: Thresholds,
    /// Stars bounded on the right-hand side; `None` means all of them.
    pub letters_tested: Option<BTreeSet<Symbol>>,
    /// The query every expansion was checked against.
    pub reference: Ucrpq,
    /// Present when bounded.
    pub rewriting: Option<Ucrpq>,
    /// First expansion not contained in the reference, when unbounded.
    pub witness: Option<SuccinctCq>,
    pub letters: Option<LetterSet>,
    pub stats: AnalysisStats,
}

fn check_fragment(q: &Ucrpq) -> Result<(), AnalysisError> {
    if q.disjuncts.is_empty() {
        return Err(AnalysisError::Unsupported("empty union".into()));
    }
    if !q.in_supported_fragment() {
        return Err(AnalysisError::Unsupported(
            "stars are allowed only over a literal word as a whole atom label".into(),
        ));
    }
    Ok(())
}

struct Scan {
    verdict: Verdict,
    witness: Option<SuccinctCq>,
    stats: AnalysisStats,
}

/// Check every space's expansions against `right` in order; the first
/// uncontained expansion decides.
fn scan(spaces: Vec<ExpansionSpace>, right: &Ucrpq, opts: &AnalysisOptions) -> Scan {
    let mut stats = AnalysisStats::default();
    let mut search = SearchStats::default();
    let mut gave_up: Option<String> = None;
    for space in spaces {
        let count = space.count();
        stats.expansions_total = stats.expansions_total.saturating_add(count);
        if count > opts.expansion_cap as u128 {
            gave_up.get_or_insert(format!(
                "{count} expansions exceed the cap of {}",
                opts.expansion_cap
            ));
            continue;
        }
        for lambda in space.iter() {
            stats.expansions_checked += 1;
            match expansion_contained(&lambda, right, opts.caps, &mut search) {
                Ok(ContainmentWitness::Contained(_)) => {}
                Ok(ContainmentWitness::NotContained) => {
                    stats.nfa_calls = search.nfa_calls;
                    stats.steps = search.steps;
                    return Scan {
                        verdict: Verdict::Unbounded,
                        witness: Some(lambda),
                        stats,
                    };
                }
                Err(e) => {
                    gave_up.get_or_insert(e.to_string());
                }
            }
        }
    }
    stats.nfa_calls = search.nfa_calls;
    stats.steps = search.steps;
    Scan {
        verdict: gave_up.map_or(Verdict::Bounded, Verdict::Inconclusive),
        witness: None,
        stats,
    }
}

fn long_domain(t: Thresholds, e: Enumeration) -> ExponentDomain {
    match e {
        Enumeration::Restricted => ExponentDomain::bounded(t.z, t.zplus),
        Enumeration::Full => ExponentDomain::range(0, t.zplus),
    }
}

/// Decide whether `q` is equivalent to a union of CQs. Expansions whose
/// stars all stay within `Z` belong to the rewriting already, so only the
/// others are checked.
pub fn is_bounded(q: &Ucrpq, opts: &AnalysisOptions) -> Result<AnalysisReport, AnalysisError> {
    let start = Instant::now();
    check_fragment(q)?;
    let bounds = q.disjuncts.iter().map(compute_bounds).collect::<Result<Vec<_>, _>>()?;
    let t = thresholds(&bounds, opts.zplus_mode)?;
    let reference = Ucrpq {
        disjuncts: q.disjuncts.iter().map(|d| bound_query(d, t.z)).collect(),
    };
    let mut spaces = Vec::new();
    for d in &q.disjuncts {
        let mut stars = BTreeSet::new();
        let space = ExpansionSpace::new(d, opts.caps.normalize, |i, _| {
            stars.insert(i);
            long_domain(t, opts.enumeration)
        })?;
        spaces.push(space.require_long(t.z, |i| stars.contains(&i)));
    }
    let run = scan(spaces, &reference, opts);
    Ok(finish(run, bounds, t, None, reference, start))
}

fn finish(
    run: Scan,
    bounds: Vec<BoundsProfile>,
    thresholds: Thresholds,
    letters_tested: Option<BTreeSet<Symbol>>,
    reference: Ucrpq,
    start: Instant,
) -> AnalysisReport {
    let mut stats = run.stats;
    stats.wall = start.elapsed();
    AnalysisReport {
        rewriting: run.verdict.is_bounded().then(|| reference.clone()),
        verdict: run.verdict,
        bounds,
        thresholds,
        letters_tested,
        reference,
        witness: run.witness,
        letters: None,
        stats,
    }
}

/// The equivalent union of CQs with powers, for a bounded query.
pub fn rewrite(q: &Ucrpq, opts: &AnalysisOptions) -> Result<Ucrpq, AnalysisError> {
    let report = is_bounded(q, opts)?;
    match report.verdict {
        Verdict::Bounded => Ok(report.reference),
        v => Err(AnalysisError::Unsupported(format!("no rewriting: query is {v}"))),
    }
}

fn star_letters(q: &Ucrpq) -> Result<BTreeSet<Symbol>, AnalysisError> {
    let mut out = BTreeSet::new();
    for d in &q.disjuncts {
        for (_, label, _) in d.edges() {
            match label.classify() {
                FragmentClass::AStar => {
                    if let crate::syntax::RegexExpr::Star(w) = label {
                        out.insert(w.0[0].clone());
                    }
                }
                FragmentClass::WStar => {
                    return Err(AnalysisError::Unsupported(
                        "letter analysis needs stars over single letters".into(),
                    ))
                }
                _ => {}
            }
        }
    }
    Ok(out)
}

/// Decide whether `q` is equivalent to the query with its stars over
/// letters of `letters` bounded. Other stars stay unbounded on the right
/// and range up to a small stretch bound on the left.
pub fn is_bounded_in(q: &Ucrpq, letters: &BTreeSet<Symbol>, opts: &AnalysisOptions) -> Result<AnalysisReport, AnalysisError> {
    let start = Instant::now();
    check_fragment(q)?;
    star_letters(q)?;
    let bounds = q.disjuncts.iter().map(compute_bounds).collect::<Result<Vec<_>, _>>()?;
    let t = thresholds(&bounds, opts.zplus_mode)?;
    let reference = Ucrpq {
        disjuncts: q.disjuncts.iter().map(|d| bound_letters(d, letters, t.z)).collect(),
    };
    let stretch = bounds
        .iter()
        .map(|p| p.nratoms.saturating_mul(p.n))
        .max()
        .unwrap_or(0)
        .saturating_add(1);
    let mut spaces = Vec::new();
    for d in &q.disjuncts {
        let mut chosen = BTreeSet::new();
        let space = ExpansionSpace::new(d, opts.caps.normalize, |i, w| {
            if w.len() == 1 && letters.contains(&w.0[0]) {
                chosen.insert(i);
                long_domain(t, opts.enumeration)
            } else {
                ExponentDomain::range(0, stretch)
            }
        })?;
        spaces.push(space.require_long(t.z, |i| chosen.contains(&i)));
    }
    let run = scan(spaces, &reference, opts);
    Ok(finish(run, bounds, t, Some(letters.clone()), reference, start))
}

/// The largest set of letters whose stars can all be bounded: the union of
/// the star letters that can be bounded one at a time.
pub fn maximal_bounded_letters(q: &Ucrpq, opts: &AnalysisOptions) -> Result<LetterSet, AnalysisError> {
    let mut out = LetterSet::default();
    for a in star_letters(q)? {
        let single = BTreeSet::from([a.clone()]);
        match is_bounded_in(q, &single, opts)?.verdict {
            Verdict::Bounded => {
                out.bounded.insert(a);
            }
            Verdict::Unbounded => {}
            Verdict::Inconclusive(_) => {
                out.inconclusive.insert(a);
            }
        }
    }
    Ok(out)
}

/// Result of re-checking a report with the explicit-graph oracles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleCheck {
    Confirmed(String),
    Refuted(String),
    Skipped(String),
}

const ORACLE_TRIALS: usize = 100;
const ORACLE_GRAPH_SIZE: usize = 6;
const ORACLE_MATERIALIZE_CAP: u64 = 20_000;

/// Bounded: the query and its rewriting agree on sampled graphs.
/// Unbounded: the witness satisfies the query but not the reference.
pub fn oracle_check(q: &Ucrpq, report: &AnalysisReport, seed: u64) -> OracleCheck {
    match report.verdict {
        Verdict::Bounded => match sampled_equivalence(q, &report.reference, ORACLE_TRIALS, ORACLE_GRAPH_SIZE, seed) {
            Agreement::Agree { graphs } => OracleCheck::Confirmed(format!("agreement on {graphs} graphs")),
            Agreement::Disagree(g) => OracleCheck::Refuted(format!("query and rewriting differ on:\n{g}")),
            Agreement::Skipped(why) => OracleCheck::Skipped(why),
        },
        Verdict::Unbounded => {
            let Some(w) = &report.witness else {
                return OracleCheck::Refuted("unbounded verdict without a witness".into());
            };
            let Ok(g) = materialize_graph(w, ORACLE_MATERIALIZE_CAP) else {
                return OracleCheck::Skipped("witness too large to materialize".into());
            };
            if !eval_on_graph(q, &g) {
                return OracleCheck::Refuted("witness does not satisfy the query".into());
            }
            match contained_by_evaluation(w, &report.reference, ORACLE_MATERIALIZE_CAP) {
                Ok(false) => OracleCheck::Confirmed("witness is not contained in the reference".into()),
                Ok(true) => OracleCheck::Refuted("witness satisfies the reference".into()),
                Err(e) => OracleCheck::Skipped(e.to_string()),
            }
        }
        Verdict::Inconclusive(_) => OracleCheck::Skipped("inconclusive verdict".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_crpq, parse_ucrpq};

    #[test]
    fn bounds_examples() {
        let p = compute_bounds(&parse_crpq("?x -[a*]-> ?y, ?x -[b]-> ?y").unwrap()).unwrap();
        assert_eq!((p.nratoms, p.nrvars, p.n, p.zred, p.zcol, p.z, p.zplus), (2, 2, 1, 1, 4, 16, 33));
        let p = compute_bounds(&parse_crpq("?x -[(aba)*]-> ?y, ?x -[(aba)^3]-> ?z").unwrap()).unwrap();
        assert_eq!((p.nratoms, p.nrvars, p.n, p.zred, p.z), (2, 3, 9, 3, 648));
        let p = compute_bounds(&parse_crpq("?x -[a b]-> ?y, ?y -[c]-> ?z").unwrap()).unwrap();
        assert_eq!((p.zred, p.z), (1, 8 * 2 * 3));
    }

    #[test]
    fn small_verdicts() {
        let opts = AnalysisOptions::default();
        let r = is_bounded(&parse_ucrpq("?x -[a*]-> ?y, ?x -[b]-> ?y").unwrap(), &opts).unwrap();
        assert_eq!(r.verdict, Verdict::Unbounded);
        assert_eq!(r.witness.unwrap().atoms.iter().map(|a| a.exp).max(), Some(33));
        let r = is_bounded(&parse_ucrpq("?x -[a*]-> ?y").unwrap(), &opts).unwrap();
        assert_eq!(r.verdict, Verdict::Bounded);
        let q = parse_ucrpq("?x -[a b]-> ?y").unwrap();
        let r = is_bounded(&q, &opts).unwrap();
        assert_eq!(r.rewriting, Some(q));
    }

    #[test]
    fn letter_examples() {
        let opts = AnalysisOptions::default();
        let q = parse_ucrpq("?x -[a*]-> ?y, ?x -[b]-> ?y, ?x -[c*]-> ?w").unwrap();
        let l = maximal_bounded_letters(&q, &opts).unwrap();
        assert_eq!(l.bounded, BTreeSet::from([Symbol::new("c").unwrap()]));
        assert!(is_bounded_in(&q, &BTreeSet::new(), &opts).unwrap().verdict.is_bounded());
    }
}
