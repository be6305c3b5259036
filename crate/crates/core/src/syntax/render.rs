use super::parse::lex_symbol_run;
use super::{RegexExpr, Symbol};

fn trailing_ident(s: &str) -> &str {
    let start = s
        .rfind(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
        .map_or(0, |i| i + 1);
    &s[start..]
}

fn leading_ident(s: &str) -> &str {
    let end = s
        .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
        .unwrap_or(s.len());
    &s[..end]
}

/// Append `piece`, inserting a space when juxtaposition would lex differently.
fn push_piece(acc: &mut String, piece: &str) {
    let tail = trailing_ident(acc);
    let head = leading_ident(piece);
    if !tail.is_empty() && !head.is_empty() {
        let joined = format!("{tail}{head}");
        let mut separate = lex_symbol_run(tail);
        separate.extend(lex_symbol_run(head));
        if lex_symbol_run(&joined) != separate {
            acc.push(' ');
        }
    }
    acc.push_str(piece);
}

pub(crate) fn render_symbols(syms: &[Symbol]) -> String {
    let mut out = String::new();
    for s in syms {
        push_piece(&mut out, s.as_str());
    }
    out
}

fn render_base_word(w: &super::Word) -> String {
    let body = render_symbols(&w.0);
    if w.len() == 1 {
        body
    } else {
        format!("({body})")
    }
}

fn prec(r: &RegexExpr) -> u8 {
    match r {
        RegexExpr::Union(_) => 0,
        RegexExpr::Concat(_) => 1,
        _ => 2,
    }
}

pub(crate) fn render_regex(r: &RegexExpr) -> String {
    match r {
        RegexExpr::Epsilon => "eps".to_string(),
        RegexExpr::Letter(s) => s.as_str().to_string(),
        RegexExpr::Concat(cs) => {
            let mut out = String::new();
            for c in cs {
                let piece = if prec(c) < 1 {
                    format!("({})", render_regex(c))
                } else {
                    render_regex(c)
                };
                push_piece(&mut out, &piece);
            }
            out
        }
        RegexExpr::Union(cs) => cs.iter().map(render_regex).collect::<Vec<_>>().join(" + "),
        RegexExpr::Power(w, n) => format!("{}^{n}", render_base_word(w)),
        RegexExpr::PowerLE(w, n) => format!("{}^<={n}", render_base_word(w)),
        RegexExpr::Star(w) => format!("{}*", render_base_word(w)),
    }
}

#[cfg(test)]
mod tests {
    use super::super::*;

    #[test]
    fn roundtrip_tricky_juxtapositions() {
        for src in [
            "?x -[e p s]-> ?y",
            "?x -[eps a]-> ?y",
            "?x -[a_x b]-> ?y",
            "?x -[(ab)^3 (a+b) c*]-> ?y",
            "?x -[x1 y2 (x1 y1)^<=4]-> ?y | ?u = ?v",
        ] {
            let q = parse_ucrpq(src).unwrap();
            let printed = q.to_string();
            assert_eq!(parse_ucrpq(&printed).unwrap(), q, "{src} -> {printed}");
        }
    }

    #[test]
    fn renders_compactly() {
        let q = parse_ucrpq("?x -[ a b ]-> ?y, ?x -[(a b)^11 + c]-> ?z").unwrap();
        assert_eq!(q.to_string(), "?x -[ab]-> ?y, ?x -[(ab)^11 + c]-> ?z");
    }
}
