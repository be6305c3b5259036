//! JSON and text rendering of analysis results.

use std::fmt::Write as _;

use crpq_core::boundedness::{AnalysisReport, BoundsProfile, Enumeration, OracleCheck, ZplusMode};
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct Bounds {
    pub nratoms: u64,
    pub nrvars: u64,
    #[serde(rename = "N")]
    pub n: u64,
    pub recwords: Vec<String>,
    #[serde(rename = "Zred")]
    pub zred: u64,
    #[serde(rename = "Zcol")]
    pub zcol: u64,
    #[serde(rename = "Z")]
    pub z: u64,
    #[serde(rename = "Zplus")]
    pub zplus: u64,
}

impl From<&BoundsProfile> for Bounds {
    fn from(p: &BoundsProfile) -> Self {
        Bounds {
            nratoms: p.nratoms,
            nrvars: p.nrvars,
            n: p.n,
            recwords: p.recwords.iter().map(ToString::to_string).collect(),
            zred: p.zred,
            zcol: p.zcol,
            z: p.z,
            zplus: p.zplus,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Thresholds {
    #[serde(rename = "Z")]
    pub z: u64,
    #[serde(rename = "Zplus")]
    pub zplus: u64,
}

#[derive(Debug, Serialize)]
pub struct Stats {
    pub expansions_total: u128,
    pub expansions_checked: u64,
    pub nfa_calls: u64,
    pub search_steps: u64,
    pub wall_ms: Option<u128>,
    pub seed: u64,
}

#[derive(Debug, Serialize)]
pub struct Mode {
    pub zplus_mode: &'static str,
    pub enumeration: &'static str,
    pub cap: u64,
    pub letters: Option<String>,
    pub oracle_verify: bool,
}

#[derive(Debug, Serialize)]
pub struct OracleJson {
    pub status: &'static str,
    pub detail: String,
}

#[derive(Debug, Serialize)]
pub struct ReportJson {
    pub schema: u32,
    pub verdict: &'static str,
    pub reason: Option<String>,
    /// Profile of the disjunct with the largest `Z`.
    pub bounds: Bounds,
    pub disjuncts: Vec<Bounds>,
    pub thresholds: Thresholds,
    pub letters_tested: Option<Vec<String>>,
    pub rewriting: Option<String>,
    pub witness: Option<String>,
    pub maximal_letters: Option<Vec<String>>,
    pub inconclusive_letters: Option<Vec<String>>,
    pub oracle: Option<OracleJson>,
    pub stats: Stats,
    pub mode: Mode,
}

pub fn zplus_mode_name(m: ZplusMode) -> &'static str {
    match m {
        ZplusMode::Paper => "paper",
        ZplusMode::Safe => "safe",
    }
}

pub fn enumeration_name(e: Enumeration) -> &'static str {
    match e {
        Enumeration::Restricted => "restricted",
        Enumeration::Full => "full",
    }
}

pub fn oracle_json(c: &OracleCheck) -> OracleJson {
    let (status, detail) = match c {
        OracleCheck::Confirmed(d) => ("confirmed", d),
        OracleCheck::Refuted(d) => ("refuted", d),
        OracleCheck::Skipped(d) => ("skipped", d),
    };
    OracleJson {
        status,
        detail: detail.clone(),
    }
}

pub fn build(
    r: &AnalysisReport,
    oracle: Option<&OracleCheck>,
    mode: Mode,
    seed: u64,
    timing: bool,
) -> ReportJson {
    let dominant = r
        .bounds
        .iter()
        .max_by_key(|p| p.z)
        .expect("at least one disjunct");
    let names = |s: &std::collections::BTreeSet<crpq_core::Symbol>| s.iter().map(ToString::to_string).collect::<Vec<_>>();
    ReportJson {
        schema: SCHEMA_VERSION,
        verdict: r.verdict.label(),
        reason: match &r.verdict {
            crpq_core::Verdict::Inconclusive(why) => Some(why.clone()),
            _ => None,
        },
        bounds: dominant.into(),
        disjuncts: r.bounds.iter().map(Into::into).collect(),
        thresholds: Thresholds {
            z: r.thresholds.z,
            zplus: r.thresholds.zplus,
        },
        letters_tested: r.letters_tested.as_ref().map(names),
        rewriting: r.rewriting.as_ref().map(ToString::to_string),
        witness: r.witness.as_ref().map(ToString::to_string),
        maximal_letters: r.letters.as_ref().map(|l| names(&l.bounded)),
        inconclusive_letters: r.letters.as_ref().map(|l| names(&l.inconclusive)),
        oracle: oracle.map(oracle_json),
        stats: Stats {
            expansions_total: r.stats.expansions_total,
            expansions_checked: r.stats.expansions_checked,
            nfa_calls: r.stats.nfa_calls,
            search_steps: r.stats.steps,
            wall_ms: timing.then_some(r.stats.wall.as_millis()),
            seed,
        },
        mode,
    }
}

pub fn text(r: &AnalysisReport, oracle: Option<&OracleCheck>, timing: bool) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "verdict: {}", r.verdict);
    for (i, p) in r.bounds.iter().enumerate() {
        let _ = writeln!(out, "disjunct {}: {}", i + 1, p.derivation());
        let _ = writeln!(
            out,
            "  Zred = {}, Zcol = {}, Z+ = nratoms * Z + 1 = {}",
            p.zred, p.zcol, p.zplus
        );
    }
    let _ = writeln!(
        out,
        "thresholds: Z = {}, long exponent = {}",
        r.thresholds.z, r.thresholds.zplus
    );
    if let Some(l) = &r.letters_tested {
        let names: Vec<String> = l.iter().map(ToString::to_string).collect();
        let _ = writeln!(out, "letters tested: {{{}}}", names.join(", "));
    }
    if let Some(rw) = &r.rewriting {
        let _ = writeln!(out, "rewriting: {rw}");
    }
    if let Some(w) = &r.witness {
        let _ = writeln!(out, "witness: {w}");
    }
    if let Some(l) = &r.letters {
        let names: Vec<String> = l.bounded.iter().map(ToString::to_string).collect();
        let _ = writeln!(out, "maximal letters: {{{}}}", names.join(", "));
        if !l.inconclusive.is_empty() {
            let names: Vec<String> = l.inconclusive.iter().map(ToString::to_string).collect();
            let _ = writeln!(out, "undecided letters: {{{}}}", names.join(", "));
        }
    }
    if let Some(c) = oracle {
        let j = oracle_json(c);
        let _ = writeln!(out, "oracle: {} ({})", j.status, j.detail);
    }
    let _ = write!(
        out,
        "stats: {} of {} expansions checked, {} automaton calls, {} search steps",
        r.stats.expansions_checked, r.stats.expansions_total, r.stats.nfa_calls, r.stats.steps
    );
    if timing {
        let _ = write!(out, ", {} ms", r.stats.wall.as_millis());
    }
    out.push('\n');
    out
}
