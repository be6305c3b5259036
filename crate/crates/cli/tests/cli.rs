use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn run(args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_crpq-bound"));
    cmd.env_remove("CRPQ_BOUND_SEED");
    for a in args {
        match a.strip_prefix('@') {
            Some(file) => cmd.arg(data(file)),
            None => cmd.arg(a),
        };
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("valid json")
}

#[test]
fn absorbed_star_is_bounded_with_rewriting() {
    let o = run(&["analyze", "@absorbed_star.crpq"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("verdict: bounded"));
    assert!(out.contains("rewriting: ?x -[a]-> ?y, ?x -[a^<=108]-> ?z, ?z -[b]-> ?w"));
    assert!(out.contains("3^3 * 1 * 4 * 1 = 108"));
}

#[test]
fn star_against_letter_is_unbounded_with_witness() {
    let o = run(&["analyze", "--json", "@unbounded.crpq"]);
    assert_eq!(o.status.code(), Some(1));
    let j = json(&o);
    assert_eq!(j["verdict"], "unbounded");
    assert_eq!(j["bounds"]["Z"], 16);
    assert_eq!(j["bounds"]["Zplus"], 33);
    assert_eq!(j["witness"], "?x -[a^33]-> ?y, ?x -[b]-> ?y");
    assert!(j["rewriting"].is_null());
}

#[test]
fn maximal_letters_json() {
    let o = run(&["analyze", "--json", "--letters", "max", "@letters.crpq"]);
    let j = json(&o);
    assert_eq!(j["maximal_letters"], serde_json::json!(["c"]));
    assert_eq!(j["inconclusive_letters"], serde_json::json!([]));
}

#[test]
fn explicit_letter_set() {
    let o = run(&["analyze", "--letters", "c", "@letters.crpq"]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["analyze", "--letters", "a", "@letters.crpq"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn json_reports_are_byte_identical() {
    let args = ["analyze", "--json", "--oracle-verify", "--seed", "7", "@absorbed_star.crpq"];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
    let j = json(&first);
    assert_eq!(j["schema"], 1);
    assert_eq!(j["stats"]["seed"], 7);
    assert!(j["stats"]["wall_ms"].is_null());
    assert_eq!(j["oracle"]["status"], "confirmed");
}

#[test]
fn seed_falls_back_to_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_crpq-bound"))
        .env("CRPQ_BOUND_SEED", "42")
        .args(["analyze", "--json"])
        .arg(data("absorbed_star.crpq"))
        .output()
        .unwrap();
    assert_eq!(json(&o)["stats"]["seed"], 42);
}

#[test]
fn modes_are_echoed() {
    let o = run(&["analyze", "--json", "--zplus-mode", "safe", "--full-enumeration", "--cap", "500", "@unbounded.crpq"]);
    assert_eq!(o.status.code(), Some(1));
    let j = json(&o);
    assert_eq!(j["mode"]["zplus_mode"], "safe");
    assert_eq!(j["mode"]["enumeration"], "full");
    assert_eq!(j["mode"]["cap"], 500);
}

#[test]
fn usage_and_parse_errors_exit_64() {
    assert_eq!(run(&["analyze", "@missing.crpq"]).status.code(), Some(64));
    assert_eq!(run(&["analyze", "@ab13.nfa"]).status.code(), Some(64));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(run(&["analyze", "--zplus-mode", "odd", "@absorbed_star.crpq"]).status.code(), Some(64));
}

#[test]
fn containment_of_powers() {
    let o = run(&["contains", "@left.crpq", "@right.crpq"]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["contains", "--json", "@left.crpq", "@right_long.crpq"]);
    assert_eq!(o.status.code(), Some(1));
    let j = json(&o);
    assert_eq!(j["verdict"], "not contained");
    assert_eq!(j["method"], "succinct");
}

#[test]
fn containment_with_left_stars_is_partial() {
    assert_eq!(run(&["contains", "@unbounded.crpq", "@absorbed_star.crpq"]).status.code(), Some(1));
    assert_eq!(run(&["contains", "@absorbed_star.crpq", "@absorbed_star.crpq"]).status.code(), Some(2));
}

#[test]
fn membership() {
    let o = run(&["member", "@ab13.nfa", "ab", "13"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "accepted");
    assert_eq!(run(&["member", "@ab13.nfa", "ab", "12"]).status.code(), Some(1));
    assert_eq!(run(&["member", "@ab13.nfa", "ba", "13"]).status.code(), Some(1));
}

#[test]
fn evaluation_on_csv_graph() {
    assert_eq!(run(&["eval", "--graph", "@path.csv", "--query", "@absorbed_star.crpq"]).status.code(), Some(0));
    assert_eq!(run(&["eval", "--graph", "@path.csv", "--query", "@right.crpq"]).status.code(), Some(1));
}

#[test]
fn qbf_queries_parse_back() {
    for emit in ["q", "q1", "q2"] {
        let o = run(&["qbfgen", "@tiny.qbf", "--emit", emit]);
        assert_eq!(o.status.code(), Some(0));
        crpq_core::parse_ucrpq(&stdout(&o)).expect("emitted query parses");
    }
}
