//! Concrete syntax for distributional clause programs.
//!
//! The syntax is Prolog-like. `h ~ D` in a clause head defines a random
//! variable, `~(h)` (or `≃(h)`) denotes its outcome, and categorical
//! distributions are written `[0.7:b, 0.3:g]`. `%` starts a line comment.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::program::{Clause, DistributionTemplate, DistributionalClause, Program};
use crate::term::{is_probabilistic_fact, Atom, Symbol, Term, Var, WK};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Name(String),
    Var(String),
    Int(i64),
    Real(f64),
    Open,
    /// `(` directly after a name, without layout: functional notation.
    OpenCall,
    Close,
    OpenList,
    CloseList,
    Bar,
    Comma,
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Name(n) => write!(f, "`{n}`"),
            Tok::Var(v) => write!(f, "variable `{v}`"),
            Tok::Int(i) => write!(f, "`{i}`"),
            Tok::Real(r) => write!(f, "`{r}`"),
            Tok::Open | Tok::OpenCall => f.write_str("`(`"),
            Tok::Close => f.write_str("`)`"),
            Tok::OpenList => f.write_str("`[`"),
            Tok::CloseList => f.write_str("`]`"),
            Tok::Bar => f.write_str("`|`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::End => f.write_str("end of clause"),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

// `~` always stands alone, so `1..~(n)` lexes as `1`, `..`, `~(n)`.
pub(crate) const SYMBOL_CHARS: &str = "+-*/\\^<>=:.?@#&$";

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut tokens = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, column, message: String| ParseError { line, column, message };

    macro_rules! advance {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        if c.is_whitespace() {
            advance!();
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                advance!();
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            advance!();
            advance!();
            while i < chars.len() && !(chars[i] == '*' && chars.get(i + 1) == Some(&'/')) {
                advance!();
            }
            if i >= chars.len() {
                return Err(err(tl, tc, "unterminated block comment".into()));
            }
            advance!();
            advance!();
            continue;
        }
        let tok = if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                advance!();
            }
            let mut real = false;
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                real = true;
                advance!();
                while i < chars.len() && chars[i].is_ascii_digit() {
                    advance!();
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    real = true;
                    while i < j {
                        advance!();
                    }
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        advance!();
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            if real {
                Tok::Real(text.parse().map_err(|_| err(tl, tc, format!("bad number `{text}`")))?)
            } else {
                Tok::Int(text.parse().map_err(|_| err(tl, tc, format!("integer `{text}` out of range")))?)
            }
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                advance!();
            }
            let text: String = chars[start..i].iter().collect();
            if c.is_uppercase() || c == '_' {
                Tok::Var(text)
            } else {
                Tok::Name(text)
            }
        } else if c == '\'' {
            advance!();
            let mut text = String::new();
            loop {
                if i >= chars.len() {
                    return Err(err(tl, tc, "unterminated quoted atom".into()));
                }
                let ch = chars[i];
                advance!();
                match ch {
                    '\'' if i < chars.len() && chars[i] == '\'' => {
                        text.push('\'');
                        advance!();
                    }
                    '\'' => break,
                    '\\' if i < chars.len() => {
                        let esc = chars[i];
                        advance!();
                        text.push(match esc {
                            'n' => '\n',
                            't' => '\t',
                            other => other,
                        });
                    }
                    other => text.push(other),
                }
            }
            Tok::Name(text)
        } else if c == '≃' || c == '~' {
            advance!();
            Tok::Name("~".into())
        } else if c == '(' {
            advance!();
            let functional = matches!(
                tokens.last(),
                Some(Token { tok: Tok::Name(_), line: l, column: cc }) if *l == tl && {
                    let prev: &Token = tokens.last().unwrap();
                    cc + name_width(&prev.tok) == tc
                }
            );
            if functional {
                Tok::OpenCall
            } else {
                Tok::Open
            }
        } else if c == ')' {
            advance!();
            Tok::Close
        } else if c == '[' {
            advance!();
            if i < chars.len() && chars[i] == ']' {
                advance!();
                Tok::Name("[]".into())
            } else {
                Tok::OpenList
            }
        } else if c == ']' {
            advance!();
            Tok::CloseList
        } else if c == '|' {
            advance!();
            Tok::Bar
        } else if c == ',' {
            advance!();
            Tok::Comma
        } else if c == '!' || c == ';' {
            advance!();
            Tok::Name(c.to_string())
        } else if c == '.'
            && (i + 1 == chars.len() || chars[i + 1].is_whitespace() || chars[i + 1] == '%')
        {
            advance!();
            Tok::End
        } else if SYMBOL_CHARS.contains(c) {
            let start = i;
            while i < chars.len() && SYMBOL_CHARS.contains(chars[i]) {
                // a trailing `.` followed by layout ends the clause
                if chars[i] == '.'
                    && i > start
                    && (i + 1 == chars.len() || chars[i + 1].is_whitespace() || chars[i + 1] == '%')
                {
                    break;
                }
                advance!();
            }
            Tok::Name(chars[start..i].iter().collect())
        } else {
            return Err(err(tl, tc, format!("unexpected character `{c}`")));
        };
        tokens.push(Token { tok, line: tl, column: tc });
    }
    Ok(tokens)
}

/// Width in source columns of a name token, used to detect `name(`.
fn name_width(tok: &Tok) -> usize {
    match tok {
        Tok::Name(n) if n == "[]" => 2,
        // quoted names are never followed directly by `(` in practice; the
        // width check then fails harmlessly
        Tok::Name(n) => n.chars().count(),
        _ => usize::MAX / 2,
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub(crate) enum Assoc {
    Xfx,
    Xfy,
    Yfx,
}

pub(crate) fn infix_op(name: &str) -> Option<(u32, Assoc)> {
    Some(match name {
        ":-" => (1200, Assoc::Xfx),
        "," => (1000, Assoc::Xfy),
        "=" | "\\=" | "is" | "<" | ">" | "=<" | ">=" | "=:=" | "=\\=" | "~" => (700, Assoc::Xfx),
        ":" => (550, Assoc::Xfy),
        ".." => (550, Assoc::Xfx),
        "+" | "-" => (500, Assoc::Yfx),
        "*" | "/" | "//" | "mod" => (400, Assoc::Yfx),
        _ => return None,
    })
}

pub(crate) fn infix_priorities(name: &str) -> Option<(u32, u32, u32)> {
    infix_op(name).map(|(p, assoc)| match assoc {
        Assoc::Xfx => (p, p - 1, p - 1),
        Assoc::Xfy => (p, p - 1, p),
        Assoc::Yfx => (p, p, p - 1),
    })
}

const PREFIX_MINUS: u32 = 200;

#[derive(Default)]
struct VarScope {
    ids: HashMap<String, Var>,
    names: Vec<Symbol>,
}

impl VarScope {
    fn get(&mut self, name: &str) -> Var {
        if name == "_" {
            return self.fresh("_");
        }
        if let Some(v) = self.ids.get(name) {
            return *v;
        }
        let v = self.fresh(name);
        self.ids.insert(name.to_owned(), v);
        v
    }

    fn fresh(&mut self, name: &str) -> Var {
        let v = Var(self.names.len() as u32);
        let display = if name == "_" { format!("_{}", v.0) } else { name.to_owned() };
        self.names.push(Symbol::intern(&display));
        v
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    vars: VarScope,
    eof_line: usize,
}

impl Parser {
    fn new(src: &str) -> Result<Parser, ParseError> {
        let tokens = lex(src)?;
        let eof_line = src.lines().count().max(1);
        Ok(Parser { tokens, pos: 0, vars: VarScope::default(), eof_line })
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn error_here(&self, message: impl Into<String>) -> ParseError {
        let (line, column) = match self.tokens.get(self.pos) {
            Some(t) => (t.line, t.column),
            None => (self.eof_line, 1),
        };
        ParseError { line, column, message: message.into() }
    }

    fn next(&mut self) -> Result<Tok, ParseError> {
        let tok = self.peek().cloned().ok_or_else(|| self.error_here("unexpected end of input"))?;
        self.pos += 1;
        Ok(tok)
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        match self.peek() {
            Some(t) if *t == want => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(self.error_here(format!("expected {want}, found {t}"))),
            None => Err(self.error_here(format!("expected {want}, found end of input"))),
        }
    }

    fn starts_term(tok: &Tok) -> bool {
        !matches!(tok, Tok::Close | Tok::CloseList | Tok::Bar | Tok::Comma | Tok::End)
    }

    fn parse(&mut self, max: u32) -> Result<Term, ParseError> {
        let (mut left, mut left_prec) = self.primary(max)?;
        loop {
            let name = match self.peek() {
                Some(Tok::Name(n)) => n.clone(),
                Some(Tok::Comma) => ",".to_owned(),
                _ => break,
            };
            let Some((prec, lmax, rmax)) = infix_priorities(&name) else { break };
            if prec > max || left_prec > lmax {
                break;
            }
            self.pos += 1;
            let right = self.parse(rmax)?;
            left = Term::compound(&name, vec![left, right]);
            left_prec = prec;
        }
        Ok(left)
    }

    fn primary(&mut self, max: u32) -> Result<(Term, u32), ParseError> {
        let start = self.pos;
        match self.next()? {
            Tok::Int(i) => Ok((Term::Int(i), 0)),
            Tok::Real(r) => Ok((Term::Real(r), 0)),
            Tok::Var(name) => Ok((Term::Var(self.vars.get(&name)), 0)),
            Tok::Open | Tok::OpenCall => {
                let t = self.parse(1200)?;
                self.expect(Tok::Close)?;
                Ok((t, 0))
            }
            Tok::OpenList => {
                let mut items = vec![self.parse(999)?];
                while self.peek() == Some(&Tok::Comma) {
                    self.pos += 1;
                    items.push(self.parse(999)?);
                }
                let tail = if self.peek() == Some(&Tok::Bar) {
                    self.pos += 1;
                    self.parse(999)?
                } else {
                    Term::nil()
                };
                self.expect(Tok::CloseList)?;
                Ok((Term::list_with_tail(items, tail), 0))
            }
            Tok::Name(name) => {
                if self.peek() == Some(&Tok::OpenCall) {
                    self.pos += 1;
                    let mut args = vec![self.parse(999)?];
                    while self.peek() == Some(&Tok::Comma) {
                        self.pos += 1;
                        args.push(self.parse(999)?);
                    }
                    self.expect(Tok::Close)?;
                    if name == "~" && args.len() == 1 {
                        return Ok((Term::outcome(args.pop().unwrap()), 0));
                    }
                    return Ok((Term::compound(&name, args), 0));
                }
                if name == "-" {
                    match self.peek() {
                        Some(Tok::Int(i)) => {
                            let i = *i;
                            self.pos += 1;
                            return Ok((Term::Int(-i), 0));
                        }
                        Some(Tok::Real(r)) => {
                            let r = *r;
                            self.pos += 1;
                            return Ok((Term::Real(-r), 0));
                        }
                        Some(t) if Self::starts_term(t) && max >= PREFIX_MINUS => {
                            let arg = self.parse(PREFIX_MINUS)?;
                            return Ok((Term::compound("-", vec![arg]), PREFIX_MINUS));
                        }
                        _ => {}
                    }
                }
                let prec = if infix_op(&name).is_some() { 1201.min(max) } else { 0 };
                Ok((Term::sym(&name), prec))
            }
            other => {
                self.pos = start;
                Err(self.error_here(format!("unexpected {other}")))
            }
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn take_var_names(&mut self) -> Vec<Symbol> {
        std::mem::take(&mut self.vars).names
    }
}

/// One parsed clause of either kind.
#[derive(Clone, Debug, PartialEq)]
pub enum ParsedClause {
    Ordinary(Clause),
    Distributional(DistributionalClause),
}

fn to_atom(t: &Term, what: &str) -> Result<Atom, String> {
    match t {
        Term::Sym(_) | Term::Compound(..) => Ok(Atom::from_term(t).unwrap()),
        Term::Outcome(_) => Err(format!("outcome term `{t}` cannot be used as {what}")),
        Term::Var(_) => Err(format!("variable cannot be used as {what}")),
        _ => Err(format!("number `{t}` cannot be used as {what}")),
    }
}

fn flatten_conj(t: &Term, out: &mut Vec<Term>) {
    match t {
        Term::Compound(f, args) if f.as_str() == "," && args.len() == 2 => {
            flatten_conj(&args[0], out);
            flatten_conj(&args[1], out);
        }
        Term::Sym(s) if s.as_str() == "true" => {}
        other => out.push(other.clone()),
    }
}

fn build_clause(term: Term, var_names: Vec<Symbol>) -> Result<ParsedClause, String> {
    let (head, body_term) = match &term {
        Term::Compound(f, args) if f.as_str() == ":-" && args.len() == 2 => {
            (args[0].clone(), Some(args[1].clone()))
        }
        _ => (term.clone(), None),
    };
    let mut goals = Vec::new();
    if let Some(b) = &body_term {
        flatten_conj(b, &mut goals);
    }
    let body = goals.iter().map(|g| to_atom(g, "a goal")).collect::<Result<Vec<_>, _>>()?;
    match &head {
        Term::Compound(f, args) if *f == WK.tilde && args.len() == 2 => {
            let rv = args[0].clone();
            if matches!(rv, Term::Var(_)) || rv.is_number() {
                return Err(format!("`{rv}` cannot name a random variable"));
            }
            let dist = DistributionTemplate::from_term(&args[1])?;
            Ok(ParsedClause::Distributional(DistributionalClause { rv, dist, body, var_names }))
        }
        _ => {
            let head = to_atom(&head, "a clause head")?;
            if is_probabilistic_fact(&head) {
                return Err(format!(
                    "probabilistic fact predicate {}/2 cannot be a rule head",
                    head.pred
                ));
            }
            if matches!(head.pred.as_str(), ":-" | ",") {
                return Err("malformed clause".into());
            }
            Ok(ParsedClause::Ordinary(Clause { head, body, var_names }))
        }
    }
}

/// Parses a sequence of `.`-terminated clauses.
pub fn parse_clauses(src: &str) -> Result<Vec<ParsedClause>, ParseError> {
    let mut p = Parser::new(src)?;
    let mut out = Vec::new();
    while !p.at_end() {
        let start = p.tokens[p.pos].clone();
        let term = p.parse(1200)?;
        p.expect(Tok::End)?;
        let names = p.take_var_names();
        let clause = build_clause(term, names).map_err(|message| ParseError {
            line: start.line,
            column: start.column,
            message,
        })?;
        out.push(clause);
    }
    Ok(out)
}

pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let mut clauses = Vec::new();
    let mut dist_clauses = Vec::new();
    for c in parse_clauses(src)? {
        match c {
            ParsedClause::Ordinary(c) => clauses.push(c),
            ParsedClause::Distributional(d) => dist_clauses.push(d),
        }
    }
    Ok(Program::new(clauses, dist_clauses))
}

/// Parses terms that share one variable scope. Each may end with `.`.
pub fn parse_terms(srcs: &[&str]) -> Result<Vec<Term>, ParseError> {
    let mut scope = VarScope::default();
    let mut out = Vec::new();
    for src in srcs {
        let mut p = Parser::new(src)?;
        p.vars = scope;
        let t = p.parse(1200)?;
        if p.peek() == Some(&Tok::End) {
            p.pos += 1;
        }
        if !p.at_end() {
            return Err(p.error_here("unexpected trailing input"));
        }
        scope = std::mem::take(&mut p.vars);
        out.push(t);
    }
    Ok(out)
}

pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    Ok(parse_terms(&[src])?.pop().unwrap())
}

/// Parses a single atom, such as a query.
pub fn parse_atom(src: &str) -> Result<Atom, ParseError> {
    let t = parse_term(src)?;
    to_atom(&t, "an atom").map_err(|message| ParseError { line: 1, column: 1, message })
}

/// Evidence lines: `+atom.` for atoms that must hold, `-atom.` for atoms that
/// must not hold. Blank lines and `%` comments are skipped.
pub fn parse_evidence_lines(src: &str) -> Result<Vec<(bool, Atom)>, ParseError> {
    let mut out = Vec::new();
    for (i, raw) in src.lines().enumerate() {
        let line = raw.split('%').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let positive = match line.chars().next() {
            Some('+') => true,
            Some('-') => false,
            _ => {
                return Err(ParseError {
                    line: i + 1,
                    column: 1,
                    message: "evidence line must start with `+` or `-`".into(),
                })
            }
        };
        let atom = parse_atom(&line[1..]).map_err(|e| ParseError {
            line: i + 1,
            column: e.column + 1,
            message: e.message,
        })?;
        out.push((positive, atom));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::DistKind;

    #[test]
    fn poisson_clause() {
        let p = parse_program("nballs ~ poisson(6).").unwrap();
        assert_eq!(p.dist_clauses.len(), 1);
        let d = &p.dist_clauses[0];
        assert_eq!(d.rv, Term::sym("nballs"));
        assert_eq!(d.dist.kind, DistKind::Poisson);
        assert_eq!(d.dist.params, vec![Term::Int(6)]);
        assert!(d.body.is_empty());
    }

    #[test]
    fn outcome_in_body() {
        let p = parse_program("many :- dist_gt(~(number), 9).").unwrap();
        let c = &p.clauses[0];
        assert_eq!(c.head, Atom::named("many", vec![]));
        assert_eq!(
            c.body,
            vec![Atom::named("dist_gt", vec![Term::outcome(Term::sym("number")), Term::Int(9)])]
        );
    }

    #[test]
    fn glyph_outcome() {
        let a = parse_atom("dist_gt(≃(number), 9)").unwrap();
        assert_eq!(a, parse_atom("dist_gt(~(number), 9)").unwrap());
    }

    #[test]
    fn dist_rel_head_rejected() {
        let e = parse_program("dist_eq(X,Y) :- foo(X,Y).").unwrap_err();
        assert!(e.message.contains("rule head"), "{e}");
        assert_eq!((e.line, e.column), (1, 1));
    }

    #[test]
    fn categorical_and_conditional_clause() {
        let p = parse_program("color(B) ~ [0.7:b, 0.3:g] :- between(1, ~(nballs), B).").unwrap();
        let d = &p.dist_clauses[0];
        assert_eq!(d.dist.kind, DistKind::Categorical);
        assert_eq!(d.dist.params.len(), 2);
        assert_eq!(d.body[0].pred.as_str(), "between");
        assert_eq!(d.var_names.len(), 1);
    }

    #[test]
    fn unknown_distribution() {
        let e = parse_program("x ~ zipf(2).").unwrap_err();
        assert!(e.message.contains("unknown distribution"), "{e}");
    }

    #[test]
    fn bad_categorical_sum() {
        let e = parse_program("x ~ [0.5:a, 0.4:b].").unwrap_err();
        assert!(e.message.contains("sum"), "{e}");
    }

    #[test]
    fn syntax_error_position() {
        let e = parse_program("a :- b.\nc :- (d.\n").unwrap_err();
        assert_eq!(e.line, 2);
    }

    #[test]
    fn operators_and_ranges() {
        let t = parse_term("D2 is D - 1").unwrap();
        assert_eq!(t.functor().unwrap().0.as_str(), "is");
        let r = parse_term("uniform(1..~(n))").unwrap();
        let arg = &r.args()[0];
        assert_eq!(arg.functor().unwrap().0.as_str(), "..");
        let neg = parse_term("X is -3 + 2 * Y").unwrap();
        assert_eq!(neg.args()[1].functor().unwrap().0.as_str(), "+");
        assert_eq!(neg.args()[1].args()[0], Term::Int(-3));
        let frac = parse_term("1/3:a").unwrap();
        assert_eq!(frac.functor().unwrap().0.as_str(), ":");
    }

    #[test]
    fn evidence_lines() {
        let ev = parse_evidence_lines("% obs\n+nogreen(8).\n-dist_eq(~(c), g).\n\n").unwrap();
        assert_eq!(ev.len(), 2);
        assert!(ev[0].0);
        assert!(!ev[1].0);
        assert!(parse_evidence_lines("nogreen(1).").is_err());
    }

    #[test]
    fn anonymous_variables_are_distinct() {
        let p = parse_program("p :- q(_, _).").unwrap();
        let body = &p.clauses[0].body[0];
        assert_ne!(body.args[0], body.args[1]);
    }
}
