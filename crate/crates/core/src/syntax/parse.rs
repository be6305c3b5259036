use super::{Atom, Crpq, RegexExpr, Symbol, SyntaxError, Ucrpq, Var, Word};
use std::sync::Arc;

pub(crate) fn is_symbol_name(s: &str) -> bool {
    let b = s.as_bytes();
    !b.is_empty() && symbol_len(b) == b.len() && !(s == "eps")
}

/// Length of the symbol token at the start of `b`, or 0.
fn symbol_len(b: &[u8]) -> usize {
    if b.is_empty() || !b[0].is_ascii_alphabetic() {
        return 0;
    }
    let mut i = 1;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    if i < b.len() && b[i] == b'_' {
        i += 1;
        while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
            i += 1;
        }
    }
    i
}

fn is_ident_byte(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_'
}

/// Whether `eps` starts here as a keyword rather than three letters.
fn eps_at(b: &[u8]) -> bool {
    b.starts_with(b"eps") && b.get(3).is_none_or(|c| !is_ident_byte(*c))
}

/// Split a run of identifier characters into regex tokens, `None` for `eps`.
pub(crate) fn lex_symbol_run(s: &str) -> Vec<Option<String>> {
    let b = s.as_bytes();
    let mut i = 0;
    let mut out = Vec::new();
    while i < b.len() {
        if eps_at(&b[i..]) {
            out.push(None);
            i += 3;
            continue;
        }
        let n = symbol_len(&b[i..]);
        if n == 0 {
            break;
        }
        out.push(Some(s[i..i + n].to_string()));
        i += n;
    }
    out
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

type PResult<T> = Result<T, SyntaxError>;

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            src: src.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn err<T>(&self, message: impl Into<String>) -> PResult<T> {
        Err(SyntaxError {
            line: self.line,
            col: self.col,
            message: message.into(),
        })
    }

    fn rest(&self) -> &'a [u8] {
        &self.src[self.pos..]
    }

    fn bump(&mut self, n: usize) {
        for _ in 0..n {
            if self.src[self.pos] == b'\n' {
                self.line += 1;
                self.col = 1;
            } else {
                self.col += 1;
            }
            self.pos += 1;
        }
    }

    fn skip_ws(&mut self) {
        loop {
            match self.rest().first() {
                Some(c) if c.is_ascii_whitespace() => self.bump(1),
                Some(b'#') => {
                    while self.rest().first().is_some_and(|c| *c != b'\n') {
                        self.bump(1);
                    }
                }
                _ => break,
            }
        }
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos == self.src.len()
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(tok.as_bytes()) {
            self.bump(tok.len());
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> PResult<()> {
        if self.eat(tok) {
            Ok(())
        } else {
            self.err(format!("expected `{tok}`"))
        }
    }

    fn nat(&mut self) -> PResult<u64> {
        self.skip_ws();
        let n = self.rest().iter().take_while(|c| c.is_ascii_digit()).count();
        if n == 0 {
            return self.err("expected a natural number");
        }
        let text = std::str::from_utf8(&self.rest()[..n]).expect("ascii digits");
        match text.parse::<u64>() {
            Ok(v) => {
                self.bump(n);
                Ok(v)
            }
            Err(_) => self.err("exponent does not fit in 64 bits"),
        }
    }

    fn var(&mut self) -> PResult<Var> {
        self.skip_ws();
        if self.rest().first() != Some(&b'?') {
            return self.err("expected a variable `?name`");
        }
        self.bump(1);
        let n = self.rest().iter().take_while(|c| is_ident_byte(**c)).count();
        if n == 0 {
            return self.err("expected a variable name after `?`");
        }
        let name = std::str::from_utf8(&self.rest()[..n]).expect("ascii ident");
        let v = Var(Arc::from(name));
        self.bump(n);
        Ok(v)
    }

    fn query(&mut self) -> PResult<Ucrpq> {
        let mut disjuncts = vec![self.crpq()?];
        while self.eat("|") {
            disjuncts.push(self.crpq()?);
        }
        if !self.at_end() {
            return self.err("unexpected trailing input");
        }
        Ok(Ucrpq { disjuncts })
    }

    fn crpq(&mut self) -> PResult<Crpq> {
        let mut atoms = vec![self.atom()?];
        while self.eat(",") {
            atoms.push(self.atom()?);
        }
        Ok(Crpq::new(atoms))
    }

    fn atom(&mut self) -> PResult<Atom> {
        let src = self.var()?;
        if self.eat("=") {
            let dst = self.var()?;
            return Ok(Atom::Equality(src, dst));
        }
        self.expect("-[")?;
        let label = self.regex()?;
        self.expect("]->")?;
        let dst = self.var()?;
        Ok(Atom::Edge { src, label, dst })
    }

    fn regex(&mut self) -> PResult<RegexExpr> {
        let mut terms = vec![self.term()?];
        while self.eat("+") {
            terms.push(self.term()?);
        }
        Ok(RegexExpr::union(terms))
    }

    fn starts_factor(&mut self) -> bool {
        self.skip_ws();
        match self.rest().first() {
            Some(b'(') => true,
            Some(c) => c.is_ascii_alphabetic(),
            None => false,
        }
    }

    fn term(&mut self) -> PResult<RegexExpr> {
        if !self.starts_factor() {
            return self.err("expected a symbol, `eps` or `(`");
        }
        let mut factors = Vec::new();
        while self.starts_factor() {
            factors.push(self.factor()?);
        }
        Ok(RegexExpr::concat(factors))
    }

    fn factor(&mut self) -> PResult<RegexExpr> {
        let (line, col) = (self.line, self.col);
        let base = self.base()?;
        let at_base = |message: &str| -> PResult<RegexExpr> {
            Err(SyntaxError {
                line,
                col,
                message: message.to_string(),
            })
        };
        self.skip_ws();
        if self.eat("^<=") {
            let n = self.nat()?;
            return match base.as_word() {
                Some(w) if !w.is_empty() => Ok(RegexExpr::PowerLE(w, n)),
                Some(_) => at_base("power over the empty word"),
                None => at_base("power over non-word"),
            };
        }
        if self.eat("^") {
            let n = self.nat()?;
            return match base.as_word() {
                Some(w) if !w.is_empty() => Ok(RegexExpr::Power(w, n)),
                Some(_) => at_base("power over the empty word"),
                None => at_base("power over non-word"),
            };
        }
        if self.eat("*") {
            return match base.as_word() {
                Some(w) if !w.is_empty() => Ok(RegexExpr::Star(w)),
                Some(_) => at_base("star over the empty word"),
                None => at_base("star over non-word"),
            };
        }
        Ok(base)
    }

    fn base(&mut self) -> PResult<RegexExpr> {
        self.skip_ws();
        if self.eat("(") {
            let inner = self.regex()?;
            self.expect(")")?;
            return Ok(inner);
        }
        if eps_at(self.rest()) {
            self.bump(3);
            return Ok(RegexExpr::Epsilon);
        }
        let n = symbol_len(self.rest());
        if n == 0 {
            return self.err("expected a symbol");
        }
        let name = std::str::from_utf8(&self.rest()[..n]).expect("ascii symbol");
        let s = Symbol(Arc::from(name));
        self.bump(n);
        Ok(RegexExpr::Letter(s))
    }
}

pub fn parse_ucrpq(src: &str) -> Result<Ucrpq, SyntaxError> {
    Parser::new(src).query()
}

/// Parse a query that must consist of a single disjunct.
pub fn parse_crpq(src: &str) -> Result<Crpq, SyntaxError> {
    let mut p = Parser::new(src);
    let q = p.crpq()?;
    if !p.at_end() {
        return p.err("unexpected trailing input");
    }
    Ok(q)
}

pub fn parse_regex(src: &str) -> Result<RegexExpr, SyntaxError> {
    let mut p = Parser::new(src);
    let r = p.regex()?;
    if !p.at_end() {
        return p.err("unexpected trailing input");
    }
    Ok(r)
}

/// Parse a literal word such as `abba` or `x1 y2`; `eps` is the empty word.
pub fn parse_word(src: &str) -> Result<Word, SyntaxError> {
    let r = parse_regex(src)?;
    match r.as_word() {
        Some(w) => Ok(w),
        None => Err(SyntaxError {
            line: 1,
            col: 1,
            message: "expected a literal word".to_string(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_examples() {
        let q = parse_ucrpq("?x -[a*]-> ?y, ?x -[b]-> ?y").unwrap();
        assert_eq!(q.disjuncts[0].atoms.len(), 2);
        let r = parse_regex("(ab)^11 + c").unwrap();
        let ab = parse_word("ab").unwrap();
        assert_eq!(
            r,
            RegexExpr::Union(vec![
                RegexExpr::Power(ab, 11),
                RegexExpr::Letter(Symbol::new("c").unwrap())
            ])
        );
        assert!(matches!(parse_regex("a*").unwrap(), RegexExpr::Star(_)));
        assert_eq!(parse_word("x1y22a").unwrap().len(), 3);
        assert_eq!(parse_regex("eps").unwrap(), RegexExpr::Epsilon);
        assert_eq!(parse_word("epsa").unwrap().len(), 4);
    }

    #[test]
    fn star_over_non_word() {
        let e = parse_ucrpq("?x -[(a+b)*]-> ?y").unwrap_err();
        assert_eq!(e.message, "star over non-word");
        assert_eq!((e.line, e.col), (1, 6));
    }

    #[test]
    fn error_positions() {
        let e = parse_ucrpq("?x -[a]-> ?y,\n  ?y -[]-> ?z").unwrap_err();
        assert_eq!(e.line, 2);
        let e = parse_ucrpq("?x -[a]->").unwrap_err();
        assert!(e.message.contains("variable"));
        assert!(parse_ucrpq("?x -[a^99999999999999999999999]-> ?y").is_err());
    }

    #[test]
    fn symbol_names() {
        assert!(is_symbol_name("a"));
        assert!(is_symbol_name("x12"));
        assert!(is_symbol_name("a_node_1"));
        assert!(!is_symbol_name("ab"));
        assert!(!is_symbol_name("eps"));
        assert!(!is_symbol_name("1a"));
    }
}
