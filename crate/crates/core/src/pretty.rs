//! Printing in the concrete syntax accepted by the parser.
//!
//! Output re-parses to an alpha-equivalent program. Reserved predicates of
//! the magic transformation print as `c(...)` and `a_name(...)`.

use std::fmt::{self, Write};

use crate::parser::{infix_priorities, SYMBOL_CHARS};
use crate::program::{Clause, DistributionalClause, Program};
use crate::term::{Atom, Symbol, Term, Var, CALL_PREDICATE, WK, WRAPPER_PREFIX};

/// Source-level name of a symbol.
pub fn display_name(s: Symbol) -> String {
    let name = s.as_str();
    if name == CALL_PREDICATE {
        "c".to_owned()
    } else if let Some(rest) = name.strip_prefix(WRAPPER_PREFIX) {
        format!("a_{rest}")
    } else {
        name.to_owned()
    }
}

fn needs_quotes(name: &str) -> bool {
    let mut chars = name.chars();
    let Some(first) = chars.next() else { return true };
    if first.is_lowercase() {
        return !name.chars().all(|c| c.is_alphanumeric() || c == '_');
    }
    if matches!(name, "[]" | "!" | ";" | "~") {
        return false;
    }
    !name.chars().all(|c| SYMBOL_CHARS.contains(c))
}

fn write_name(out: &mut String, s: Symbol) {
    let name = display_name(s);
    if needs_quotes(&name) {
        out.push('\'');
        for c in name.chars() {
            match c {
                '\'' => out.push_str("''"),
                '\\' => out.push_str("\\\\"),
                '\n' => out.push_str("\\n"),
                c => out.push(c),
            }
        }
        out.push('\'');
    } else {
        out.push_str(&name);
    }
}

struct Printer<'a> {
    names: &'a [Symbol],
}

impl Printer<'_> {
    fn var(&self, out: &mut String, v: Var) {
        match self.names.get(v.0 as usize) {
            Some(name) => out.push_str(name.as_str()),
            None => {
                let _ = write!(out, "_G{}", v.0);
            }
        }
    }

    fn term(&self, out: &mut String, t: &Term, max: u32) {
        match t {
            Term::Var(v) => self.var(out, *v),
            Term::Sym(s) => write_name(out, *s),
            Term::Int(i) => {
                let _ = write!(out, "{i}");
            }
            Term::Real(r) => {
                let _ = write!(out, "{r:?}");
            }
            Term::Outcome(inner) => {
                out.push_str("~(");
                self.term(out, inner, 999);
                out.push(')');
            }
            Term::Compound(f, args) => {
                if *f == WK.cons && args.len() == 2 {
                    return self.list(out, t);
                }
                if args.len() == 2 {
                    if let Some((p, lmax, rmax)) = infix_priorities(f.as_str()) {
                        return self.infix(out, f.as_str(), &args[0], &args[1], (p, lmax, rmax), max);
                    }
                }
                if args.len() == 1 && f.as_str() == "-" {
                    let paren = max < 200;
                    if paren {
                        out.push('(');
                    }
                    out.push('-');
                    let mut operand = String::new();
                    self.term(&mut operand, &args[0], 200);
                    if operand.starts_with(|c: char| SYMBOL_CHARS.contains(c) || c.is_ascii_digit()) {
                        let _ = write!(out, "({operand})");
                    } else {
                        out.push_str(&operand);
                    }
                    if paren {
                        out.push(')');
                    }
                    return;
                }
                write_name(out, *f);
                self.args(out, args);
            }
        }
    }

    fn args(&self, out: &mut String, args: &[Term]) {
        out.push('(');
        for (i, a) in args.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            self.term(out, a, 999);
        }
        out.push(')');
    }

    fn operand(&self, t: &Term, max: u32, tight: bool) -> String {
        let mut s = String::new();
        self.term(&mut s, t, max);
        let symbolic_edge = |c: char| SYMBOL_CHARS.contains(c);
        let negative = matches!(t, Term::Int(i) if *i < 0)
            || matches!(t, Term::Real(r) if r.is_sign_negative());
        if negative
            || (tight && (s.starts_with(symbolic_edge) || s.ends_with(symbolic_edge)))
        {
            s = format!("({s})");
        }
        s
    }

    fn infix(
        &self,
        out: &mut String,
        op: &str,
        left: &Term,
        right: &Term,
        (p, lmax, rmax): (u32, u32, u32),
        max: u32,
    ) {
        let paren = p > max;
        if paren {
            out.push('(');
        }
        let spaced = p >= 700 || op.chars().all(char::is_alphabetic);
        let tight = !spaced;
        let l = self.operand(left, lmax, tight);
        let r = self.operand(right, rmax, tight);
        out.push_str(&l);
        if op == "," {
            out.push_str(", ");
        } else if spaced {
            let _ = write!(out, " {op} ");
        } else {
            out.push_str(op);
        }
        out.push_str(&r);
        if paren {
            out.push(')');
        }
    }

    fn list(&self, out: &mut String, t: &Term) {
        out.push('[');
        let mut cur = t;
        let mut first = true;
        loop {
            match cur {
                Term::Compound(f, args) if *f == WK.cons && args.len() == 2 => {
                    if !first {
                        out.push(',');
                    }
                    first = false;
                    self.term(out, &args[0], 999);
                    cur = &args[1];
                }
                Term::Sym(s) if *s == WK.nil => break,
                tail => {
                    out.push('|');
                    self.term(out, tail, 999);
                    break;
                }
            }
        }
        out.push(']');
    }

    fn atom(&self, out: &mut String, a: &Atom, max: u32) {
        self.term(out, &a.to_term(), max)
    }

    fn body(&self, out: &mut String, body: &[Atom]) {
        if body.is_empty() {
            return;
        }
        out.push_str(" :- ");
        for (i, b) in body.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            self.atom(out, b, 999);
        }
    }
}

/// Prints a term with the given variable names.
pub fn term_to_string(t: &Term, names: &[Symbol]) -> String {
    let mut s = String::new();
    Printer { names }.term(&mut s, t, 1200);
    s
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&term_to_string(self, &[]))
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        Printer { names: &[] }.atom(&mut s, self, 1200);
        f.write_str(&s)
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = Printer { names: &self.var_names };
        let mut s = String::new();
        p.atom(&mut s, &self.head, 1199);
        p.body(&mut s, &self.body);
        s.push('.');
        f.write_str(&s)
    }
}

impl fmt::Display for DistributionalClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = Printer { names: &self.var_names };
        let mut s = String::new();
        p.term(&mut s, &self.rv, 699);
        s.push_str(" ~ ");
        p.term(&mut s, &self.dist.to_term(), 699);
        p.body(&mut s, &self.body);
        s.push('.');
        f.write_str(&s)
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.dist_clauses {
            writeln!(f, "{d}")?;
        }
        for c in &self.clauses {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}
