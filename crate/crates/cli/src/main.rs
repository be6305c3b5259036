//! `crpq-bound`: boundedness analysis of CRPQs from the command line.

mod report;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use crpq_core::boundedness::{
    is_bounded, is_bounded_in, maximal_bounded_letters, oracle_check, AnalysisError, AnalysisOptions, AnalysisReport,
    Enumeration, OracleCheck, Verdict, ZplusMode,
};
use crpq_core::expansion::{alternatives, ExpSet, ExponentDomain, ExpansionSpace, SuccinctCq};
use crpq_core::homomorphism::{
    expansion_contained, succinct_containment, ContainmentWitness, SearchCaps, SearchStats,
};
use crpq_core::oracle::{eval_on_graph, GraphDb};
use crpq_core::qbfgen::{build_q1, build_q2, reduction, Qbf};
use crpq_core::succinct_nfa::{membership, NfaCaps, SuccinctNfa};
use crpq_core::syntax::{parse_ucrpq, parse_word, Crpq, Ucrpq, Var};
use crpq_core::Symbol;

const EXIT_USAGE: u8 = 64;
/// An oracle contradicted a verdict.
const EXIT_SOFTWARE: u8 = 70;
const SEED_ENV: &str = "CRPQ_BOUND_SEED";

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{source}")]
    Syntax {
        path: PathBuf,
        source: crpq_core::syntax::SyntaxError,
    },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

#[derive(Parser, Debug)]
#[command(name = "crpq-bound", version, about = "Boundedness analysis for conjunctive regular path queries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ZplusArg {
    Paper,
    Safe,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Emit {
    Q,
    Q1,
    Q2,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide boundedness and print the rewriting or a witness.
    Analyze {
        file: PathBuf,
        #[arg(long)]
        json: bool,
        /// Comma-separated letters, `all` for every starred letter, or
        /// `max` for the largest set of letters that can be bounded.
        #[arg(long)]
        letters: Option<String>,
        /// Largest number of expansions examined per disjunct.
        #[arg(long, default_value_t = crpq_core::expansion::DEFAULT_EXPANSION_CAP)]
        cap: u64,
        #[arg(long)]
        full_enumeration: bool,
        #[arg(long, value_enum, default_value_t = ZplusArg::Paper)]
        zplus_mode: ZplusArg,
        /// Re-check the verdict against explicit graphs.
        #[arg(long)]
        oracle_verify: bool,
        /// Seed for sampled graphs; falls back to CRPQ_BOUND_SEED, then 0.
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated free variables, turned into fresh self-loops.
        #[arg(long)]
        free: Option<String>,
        /// Report wall-clock time.
        #[arg(long)]
        timing: bool,
    },
    /// Decide whether the left query is contained in the right one.
    Contains {
        left: PathBuf,
        right: PathBuf,
        #[arg(long)]
        json: bool,
        /// Largest star exponent tried on the left; with stars on the left
        /// a positive answer is only reported as inconclusive.
        #[arg(long, default_value_t = 4)]
        star_bound: u64,
        #[arg(long, default_value_t = crpq_core::expansion::DEFAULT_EXPANSION_CAP)]
        cap: u64,
    },
    /// Decide whether `v^m` is accepted by a succinct automaton.
    Member {
        automaton: PathBuf,
        v: String,
        m: u64,
        /// Longest input handled by the dynamic-programming fallback.
        #[arg(long, default_value_t = NfaCaps::default().dp_length)]
        dp_cap: u64,
    },
    /// Encode a quantified formula as a query.
    Qbfgen {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Emit::Q)]
        emit: Emit,
    },
    /// Evaluate a query on a graph given as CSV.
    Eval {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        query: PathBuf,
    },
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_query(path: &Path) -> Result<Ucrpq, CliError> {
    parse_ucrpq(&read(path)?).map_err(|source| CliError::Syntax {
        path: path.to_path_buf(),
        source,
    })
}

fn verdict_code(v: &Verdict) -> u8 {
    match v {
        Verdict::Bounded => 0,
        Verdict::Unbounded => 1,
        Verdict::Inconclusive(_) => 2,
    }
}

fn seed_from(arg: Option<u64>) -> Result<u64, CliError> {
    if let Some(s) = arg {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{SEED_ENV} must be an unsigned integer, got `{s}`"))),
        Err(_) => Ok(0),
    }
}

fn star_letters(q: &Ucrpq) -> BTreeSet<Symbol> {
    q.disjuncts
        .iter()
        .flat_map(|d| d.edges())
        .filter_map(|(_, e, _)| match e {
            crpq_core::RegexExpr::Star(w) if w.len() == 1 => Some(w.0[0].clone()),
            _ => None,
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn analyze(
    file: &Path,
    json: bool,
    letters: Option<String>,
    cap: u64,
    full_enumeration: bool,
    zplus_mode: ZplusArg,
    oracle_verify: bool,
    seed: Option<u64>,
    free: Option<String>,
    timing: bool,
) -> Result<u8, CliError> {
    let seed = seed_from(seed)?;
    let mut q = read_query(file)?;
    if let Some(free) = &free {
        let vars = free
            .split(',')
            .map(|v| Var::new(v.trim().trim_start_matches('?')))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        q = Ucrpq {
            disjuncts: q
                .disjuncts
                .iter()
                .map(|d| d.reduce_free_vars(&vars))
                .collect::<Result<Vec<Crpq>, _>>()
                .map_err(|e| CliError::Usage(e.to_string()))?,
        };
    }
    let opts = AnalysisOptions {
        caps: SearchCaps::default(),
        expansion_cap: cap,
        zplus_mode: match zplus_mode {
            ZplusArg::Paper => ZplusMode::Paper,
            ZplusArg::Safe => ZplusMode::Safe,
        },
        enumeration: if full_enumeration {
            Enumeration::Full
        } else {
            Enumeration::Restricted
        },
    };
    let mut report: AnalysisReport = match letters.as_deref() {
        None | Some("max") => is_bounded(&q, &opts)?,
        Some("all") => is_bounded_in(&q, &star_letters(&q), &opts)?,
        Some(list) => {
            let set = list
                .split(',')
                .map(|s| Symbol::new(s.trim()))
                .collect::<Result<BTreeSet<_>, _>>()
                .map_err(|e| CliError::Usage(e.to_string()))?;
            is_bounded_in(&q, &set, &opts)?
        }
    };
    if letters.as_deref() == Some("max") {
        report.letters = Some(maximal_bounded_letters(&q, &opts)?);
    }
    let oracle = oracle_verify.then(|| oracle_check(&q, &report, seed));
    let mode = report::Mode {
        zplus_mode: report::zplus_mode_name(opts.zplus_mode),
        enumeration: report::enumeration_name(opts.enumeration),
        cap,
        letters,
        oracle_verify,
    };
    if json {
        let j = report::build(&report, oracle.as_ref(), mode, seed, timing);
        println!("{}", serde_json::to_string_pretty(&j).expect("report serializes"));
    } else {
        print!("{}", report::text(&report, oracle.as_ref(), timing));
    }
    if let Some(OracleCheck::Refuted(why)) = &oracle {
        eprintln!("error: the oracle contradicts the verdict: {why}");
        return Ok(EXIT_SOFTWARE);
    }
    Ok(verdict_code(&report.verdict))
}

/// The single expansion of a CRPQ whose atoms are words or exact powers.
fn as_succinct(q: &Crpq) -> Option<SuccinctCq> {
    let q = q.collapse();
    let mut raw = Vec::new();
    for (s, label, d) in q.edges() {
        let alts = alternatives(label, crpq_core::expansion::DEFAULT_MATERIALIZE_CAP).ok()?;
        let [alt] = alts.as_slice() else {
            return None;
        };
        let ExpSet::Exact(n) = alt.exps else {
            return None;
        };
        raw.push((s.clone(), alt.word.clone(), n, d.clone()));
    }
    Some(SuccinctCq::from_parts(q.vars(), raw))
}

fn contains(left: &Path, right: &Path, json: bool, star_bound: u64, cap: u64) -> Result<u8, CliError> {
    let lq = read_query(left)?;
    let rq = read_query(right)?;
    let caps = SearchCaps::default();
    let succinct_right = match rq.disjuncts.as_slice() {
        [d] => as_succinct(d),
        _ => None,
    };
    let left_has_stars = lq
        .disjuncts
        .iter()
        .flat_map(|d| d.edges())
        .any(|(_, e, _)| e.classify().is_star());
    let mut stats = SearchStats::default();
    let mut checked = 0u64;
    let mut outcome: Result<Option<SuccinctCq>, String> = Ok(None);
    let mut last_proof = None;
    'outer: for d in &lq.disjuncts {
        let space = ExpansionSpace::new(d, caps.normalize, |_, _| ExponentDomain::range(0, star_bound))
            .map_err(|e| CliError::Usage(e.to_string()))?;
        if space.count() > cap as u128 {
            outcome = Err(format!("{} left expansions exceed the cap of {cap}", space.count()));
            break;
        }
        for lambda in space.iter() {
            checked += 1;
            let result = match &succinct_right {
                Some(r) => succinct_containment(&lambda, r, caps, &mut stats).map(|p| p.map(|p| p.hom.to_string())),
                None => expansion_contained(&lambda, &rq, caps, &mut stats).map(|w| match w {
                    ContainmentWitness::Contained(p) => Some(p.hom.to_string()),
                    ContainmentWitness::NotContained => None,
                }),
            };
            match result {
                Ok(Some(hom)) => last_proof = Some(hom),
                Ok(None) => {
                    outcome = Ok(Some(lambda));
                    break 'outer;
                }
                Err(e) => {
                    outcome = Err(e.to_string());
                    break 'outer;
                }
            }
        }
    }
    let (verdict, code, reason, witness) = match outcome {
        Ok(Some(w)) => ("not contained", 1, None, Some(w.to_string())),
        Ok(None) if left_has_stars => (
            "inconclusive",
            2,
            Some(format!("left stars were only tried up to {star_bound}")),
            None,
        ),
        Ok(None) => ("contained", 0, None, None),
        Err(why) => ("inconclusive", 2, Some(why), None),
    };
    let method = if succinct_right.is_some() { "succinct" } else { "expansion" };
    if json {
        let j = serde_json::json!({
            "schema": report::SCHEMA_VERSION,
            "verdict": verdict,
            "reason": reason,
            "method": method,
            "witness": witness,
            "homomorphism": if code == 0 { last_proof } else { None },
            "stats": { "expansions_checked": checked, "nfa_calls": stats.nfa_calls, "search_steps": stats.steps },
        });
        println!("{}", serde_json::to_string_pretty(&j).expect("report serializes"));
    } else {
        println!("verdict: {verdict}");
        if let Some(r) = reason {
            println!("reason: {r}");
        }
        if let Some(w) = witness {
            println!("left expansion not contained: {w}");
        }
        if code == 0 {
            if let Some(h) = last_proof {
                println!("homomorphism: {h}");
            }
        }
        println!("method: {method}, {checked} left expansions, {} automaton calls", stats.nfa_calls);
    }
    Ok(code)
}

fn member(automaton: &Path, v: &str, m: u64, dp_cap: u64) -> Result<u8, CliError> {
    let nfa = SuccinctNfa::parse(&read(automaton)?).map_err(|e| CliError::Usage(format!("{}: {e}", automaton.display())))?;
    let v = parse_word(v).map_err(|e| CliError::Usage(format!("word: {e}")))?;
    let caps = NfaCaps {
        dp_length: dp_cap,
        ..NfaCaps::default()
    };
    match membership(&nfa, &v, m, caps) {
        Ok(true) => {
            println!("accepted");
            Ok(0)
        }
        Ok(false) => {
            println!("rejected");
            Ok(1)
        }
        Err(e) => {
            println!("inconclusive: {e}");
            Ok(2)
        }
    }
}

fn qbfgen(file: &Path, emit: Emit) -> Result<u8, CliError> {
    let phi = Qbf::parse(&read(file)?).map_err(|e| CliError::Usage(format!("{}: {e}", file.display())))?;
    let q = match emit {
        Emit::Q => reduction(&phi),
        Emit::Q1 => Ucrpq::single(build_q1(&phi)),
        Emit::Q2 => Ucrpq::single(build_q2(&phi)),
    };
    println!("{q}");
    Ok(0)
}

fn eval(graph: &Path, query: &Path) -> Result<u8, CliError> {
    let file = std::fs::File::open(graph).map_err(|source| CliError::Io {
        path: graph.to_path_buf(),
        source,
    })?;
    let db = GraphDb::from_csv(file).map_err(|e| CliError::Usage(format!("{}: {e}", graph.display())))?;
    let q = read_query(query)?;
    if eval_on_graph(&q, &db) {
        println!("true");
        Ok(0)
    } else {
        println!("false");
        Ok(1)
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Analyze {
            file,
            json,
            letters,
            cap,
            full_enumeration,
            zplus_mode,
            oracle_verify,
            seed,
            free,
            timing,
        } => analyze(&file, json, letters, cap, full_enumeration, zplus_mode, oracle_verify, seed, free, timing),
        Command::Contains {
            left,
            right,
            json,
            star_bound,
            cap,
        } => contains(&left, &right, json, star_bound, cap),
        Command::Member { automaton, v, m, dp_cap } => member(&automaton, &v, m, dp_cap),
        Command::Qbfgen { file, emit } => qbfgen(&file, emit),
        Command::Eval { graph, query } => eval(&graph, &query),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
