//! The magic set transformation and its probabilistic extension.
//!
//! `magic` adds a call guard `c(A0)` to every clause and clauses that
//! propagate calls to body atoms. `pmagic` additionally activates each
//! distributional clause only when an outcome of its random variable is
//! compared somewhere, and routes builtins and probabilistic facts through
//! wrappers `a_b(X..) :- c(b(X..)), b(X..)`.

use std::fmt;

use indexmap::IndexMap;

use crate::program::{default_var_names, Clause, DistributionalClause, Evidence, Program};
use crate::term::{Atom, DistRel, PredKey, Symbol, Term, CALL_PREDICATE, WRAPPER_PREFIX};

#[derive(Clone, Debug, PartialEq)]
pub struct TransformedProgram {
    pub clauses: Vec<Clause>,
    pub dist_clauses: Vec<DistributionalClause>,
    /// Builtins and probabilistic-fact predicates with their wrapper names.
    pub call_wrapper_map: IndexMap<PredKey, Symbol>,
    /// For each clause, the random variable whose activation guard it
    /// carries, if it was generated from a distributional clause.
    pub guard_rv: Vec<Option<Term>>,
    /// For each distributional clause, the index of the original clause.
    pub dist_origin: Vec<usize>,
    /// The untransformed program.
    pub original: Program,
}

/// `c(a)`.
pub fn call_atom(a: &Atom) -> Atom {
    Atom::named(CALL_PREDICATE, vec![a.to_term()])
}

/// `c(dist_eq(~(h), ~(h)))`: asks for the distribution of `h`. It unifies
/// with every activation guard of `h` and with no guard of another random
/// variable.
pub fn demand_atom(rv: &Term) -> Atom {
    let o = Term::outcome(rv.clone());
    call_atom(&Atom::new(DistRel::Eq.symbol(), vec![o.clone(), o]))
}

pub fn wrapper_name(pred: Symbol) -> Symbol {
    Symbol::intern(&format!("{WRAPPER_PREFIX}{pred}"))
}

/// Whether `pred` is a reserved call or wrapper predicate.
pub fn is_reserved(pred: Symbol) -> bool {
    let name = pred.as_str();
    name == CALL_PREDICATE || name.starts_with(WRAPPER_PREFIX)
}

fn with_fresh_name(names: &mut Vec<Symbol>, base: &str) {
    let taken = |s: &str| names.iter().any(|n| n.as_str() == s);
    let mut candidate = base.to_owned();
    let mut i = 1;
    while taken(&candidate) {
        candidate = format!("{base}{i}");
        i += 1;
    }
    names.push(Symbol::intern(&candidate));
}

struct Builder<'a> {
    p: &'a Program,
    wrap: bool,
    out: TransformedProgram,
}

impl Builder<'_> {
    fn needs_wrapper(&self, a: &Atom) -> bool {
        self.wrap && (a.dist_rel().is_some() || self.p.is_builtin(a.key()))
    }

    fn body_atom(&mut self, a: &Atom) -> Atom {
        if !self.needs_wrapper(a) {
            return a.clone();
        }
        let name = *self
            .out
            .call_wrapper_map
            .entry(a.key())
            .or_insert_with(|| wrapper_name(a.pred));
        Atom { pred: name, args: a.args.clone() }
    }

    fn push_clause(&mut self, c: Clause, guard: Option<Term>) {
        self.out.clauses.push(c);
        self.out.guard_rv.push(guard);
    }

    /// Clauses `c(b_i) :- guard, b_1, ..., b_{i-1}` for every body atom.
    fn propagation(&mut self, guard: &Atom, body: &[Atom], names: &[Symbol], rv: Option<&Term>) {
        for i in 0..body.len() {
            let mut prefix = vec![guard.clone()];
            prefix.extend(body[..i].iter().map(|b| self.body_atom(b)));
            let head = call_atom(&body[i]);
            self.push_clause(Clause { head, body: prefix, var_names: names.to_vec() }, rv.cloned());
        }
    }

    fn clause(&mut self, c: &Clause) {
        let guard = call_atom(&c.head);
        let mut body = vec![guard.clone()];
        body.extend(c.body.iter().map(|b| self.body_atom(b)));
        self.push_clause(Clause { head: c.head.clone(), body, var_names: c.var_names.clone() }, None);
        self.propagation(&guard, &c.body, &c.var_names, None);
    }

    fn dist_clause(&mut self, index: usize, d: &DistributionalClause) {
        let fresh = Term::var(d.num_vars());
        let mut names = d.var_names.clone();
        with_fresh_name(&mut names, "X");
        for rel in DistRel::ALL {
            for outcome_first in [true, false] {
                let outcome = Term::outcome(d.rv.clone());
                let args = if outcome_first {
                    vec![outcome, fresh.clone()]
                } else {
                    vec![fresh.clone(), outcome]
                };
                let guard = call_atom(&Atom::new(rel.symbol(), args));
                let mut body = vec![guard.clone()];
                body.extend(d.body.iter().map(|b| self.body_atom(b)));
                self.out.dist_clauses.push(DistributionalClause {
                    rv: d.rv.clone(),
                    dist: d.dist.clone(),
                    body,
                    var_names: names.clone(),
                });
                self.out.dist_origin.push(index);
                self.propagation(&guard, &d.body, &names, Some(&d.rv));
            }
        }
    }

    fn finish(mut self) -> TransformedProgram {
        let wrappers: Vec<(PredKey, Symbol)> = self.out.call_wrapper_map.iter().map(|(k, v)| (*k, *v)).collect();
        for (key, name) in wrappers {
            self.push_clause(wrapper_clause(key, name), None);
        }
        self.out
    }
}

fn wrapper_var_names(arity: usize) -> Vec<Symbol> {
    match arity {
        1..=3 => ["X", "Y", "Z"][..arity].iter().map(|n| Symbol::intern(n)).collect(),
        _ => (1..=arity).map(|i| Symbol::intern(&format!("X{i}"))).collect(),
    }
}

/// `a_b(X1..Xn) :- c(b(X1..Xn)), b(X1..Xn).`
fn wrapper_clause(key: PredKey, name: Symbol) -> Clause {
    let vars: Vec<Term> = (0..key.arity as u32).map(Term::var).collect();
    let inner = Atom::new(key.name, vars.clone());
    Clause {
        head: Atom::new(name, vars),
        body: vec![call_atom(&inner), inner],
        var_names: wrapper_var_names(key.arity),
    }
}

fn transform(p: &Program, wrap: bool) -> TransformedProgram {
    let mut b = Builder {
        p,
        wrap,
        out: TransformedProgram {
            clauses: Vec::new(),
            dist_clauses: Vec::new(),
            call_wrapper_map: IndexMap::new(),
            guard_rv: Vec::new(),
            dist_origin: Vec::new(),
            original: p.clone(),
        },
    };
    for c in &p.clauses {
        b.clause(c);
    }
    for (i, d) in p.dist_clauses.iter().enumerate() {
        b.dist_clause(i, d);
    }
    b.finish()
}

/// The magic transformation of a program without distributional clauses.
pub fn magic(p: &Program) -> TransformedProgram {
    debug_assert!(p.dist_clauses.is_empty());
    transform(p, false)
}

/// The probabilistic magic transformation.
pub fn pmagic(p: &Program) -> TransformedProgram {
    transform(p, true)
}

/// Adds the facts `c(a)` for the query and each evidence atom. Queries and
/// evidence over probabilistic facts also get their wrapper, whose
/// derivation signals that the fact holds.
pub fn seed(t: &TransformedProgram, query: Option<&Atom>, e: &Evidence) -> TransformedProgram {
    let mut out = t.clone();
    for a in query.into_iter().chain(e.atoms()) {
        let fact = Clause { head: call_atom(a), body: Vec::new(), var_names: default_var_names(0) };
        if !out.clauses.contains(&fact) {
            out.clauses.push(fact);
            out.guard_rv.push(None);
        }
        if a.dist_rel().is_some() && !out.call_wrapper_map.contains_key(&a.key()) {
            let name = wrapper_name(a.pred);
            out.call_wrapper_map.insert(a.key(), name);
            out.clauses.push(wrapper_clause(a.key(), name));
            out.guard_rv.push(None);
        }
    }
    out
}

impl TransformedProgram {
    /// The transformed clauses as an ordinary program.
    pub fn to_program(&self) -> Program {
        Program::new(self.clauses.clone(), self.dist_clauses.clone())
    }

    /// The atom whose presence in an interpretation shows that `a` holds:
    /// the wrapper atom for probabilistic facts, `a` itself otherwise.
    pub fn membership_atom(&self, a: &Atom) -> Atom {
        membership_atom(a)
    }
}

pub(crate) fn membership_atom(a: &Atom) -> Atom {
    if a.dist_rel().is_some() {
        Atom { pred: wrapper_name(a.pred), args: a.args.clone() }
    } else {
        a.clone()
    }
}

impl fmt::Display for TransformedProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.clauses {
            writeln!(f, "{c}")?;
        }
        for d in &self.dist_clauses {
            writeln!(f, "{d}")?;
        }
        Ok(())
    }
}
