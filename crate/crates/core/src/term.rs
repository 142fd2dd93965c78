//! Logical terms, atoms, substitutions and unification.
//!
//! Symbols are interned process-wide, so comparing or hashing a term never
//! touches string data. Variables are numbered; a clause owns the names of
//! its variables for printing.

use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, LazyLock, RwLock};

use indexmap::IndexMap;

use crate::bindings::Bindings;

/// Interned name of a functor, predicate or constant.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(u32);

#[derive(Default)]
struct Interner {
    ids: HashMap<&'static str, u32>,
    names: Vec<&'static str>,
}

static INTERNER: LazyLock<RwLock<Interner>> = LazyLock::new(Default::default);

impl Symbol {
    pub fn intern(name: &str) -> Symbol {
        if let Some(&id) = INTERNER.read().unwrap().ids.get(name) {
            return Symbol(id);
        }
        let mut interner = INTERNER.write().unwrap();
        if let Some(&id) = interner.ids.get(name) {
            return Symbol(id);
        }
        // Symbols live for the whole process.
        let leaked: &'static str = Box::leak(name.to_owned().into_boxed_str());
        let id = interner.names.len() as u32;
        interner.names.push(leaked);
        interner.ids.insert(leaked, id);
        Symbol(id)
    }

    pub fn as_str(self) -> &'static str {
        INTERNER.read().unwrap().names[self.0 as usize]
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_str())
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Symbols the engine refers to on hot paths.
pub(crate) struct WellKnown {
    pub nil: Symbol,
    pub cons: Symbol,
    pub tilde: Symbol,
    pub colon: Symbol,
    pub range: Symbol,
    pub dist_rel: [Symbol; 5],
}

pub(crate) static WK: LazyLock<WellKnown> = LazyLock::new(|| WellKnown {
    nil: Symbol::intern("[]"),
    cons: Symbol::intern("."),
    tilde: Symbol::intern("~"),
    colon: Symbol::intern(":"),
    range: Symbol::intern(".."),
    dist_rel: DistRel::ALL.map(|r| Symbol::intern(r.name())),
});

/// Reserved predicate holding call atoms of the magic transformation.
pub const CALL_PREDICATE: &str = "$c$";
/// Prefix of the reserved builtin-wrapper predicates.
pub const WRAPPER_PREFIX: &str = "$a$";

/// The comparison relations that form probabilistic facts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DistRel {
    Eq,
    Lt,
    Leq,
    Gt,
    Geq,
}

impl DistRel {
    pub const ALL: [DistRel; 5] = [DistRel::Eq, DistRel::Lt, DistRel::Leq, DistRel::Gt, DistRel::Geq];

    pub fn name(self) -> &'static str {
        match self {
            DistRel::Eq => "dist_eq",
            DistRel::Lt => "dist_lt",
            DistRel::Leq => "dist_leq",
            DistRel::Gt => "dist_gt",
            DistRel::Geq => "dist_geq",
        }
    }

    pub fn symbol(self) -> Symbol {
        WK.dist_rel[self as usize]
    }

    pub fn from_symbol(sym: Symbol) -> Option<DistRel> {
        WK.dist_rel.iter().position(|&s| s == sym).map(|i| DistRel::ALL[i])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub u32);

/// A first-order term. `Outcome(t)` denotes the sampled value of the random
/// variable named by `t`.
#[derive(Clone, Debug)]
pub enum Term {
    Var(Var),
    Sym(Symbol),
    Int(i64),
    /// Compared and hashed by bit pattern.
    Real(f64),
    Compound(Symbol, Arc<[Term]>),
    Outcome(Arc<Term>),
}

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Term::Var(a), Term::Var(b)) => a == b,
            (Term::Sym(a), Term::Sym(b)) => a == b,
            (Term::Int(a), Term::Int(b)) => a == b,
            (Term::Real(a), Term::Real(b)) => a.to_bits() == b.to_bits(),
            (Term::Compound(f, a), Term::Compound(g, b)) => f == g && a == b,
            (Term::Outcome(a), Term::Outcome(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Term {}

impl Hash for Term {
    fn hash<H: Hasher>(&self, state: &mut H) {
        std::mem::discriminant(self).hash(state);
        match self {
            Term::Var(v) => v.hash(state),
            Term::Sym(s) => s.hash(state),
            Term::Int(i) => i.hash(state),
            Term::Real(r) => r.to_bits().hash(state),
            Term::Compound(f, args) => {
                f.hash(state);
                args.hash(state);
            }
            Term::Outcome(t) => t.hash(state),
        }
    }
}

impl Term {
    pub fn var(id: u32) -> Term {
        Term::Var(Var(id))
    }

    pub fn sym(name: &str) -> Term {
        Term::Sym(Symbol::intern(name))
    }

    pub fn compound(name: &str, args: Vec<Term>) -> Term {
        Term::app(Symbol::intern(name), args)
    }

    /// Compound with the given functor, or a plain symbol when `args` is empty.
    pub fn app(functor: Symbol, args: Vec<Term>) -> Term {
        if args.is_empty() {
            Term::Sym(functor)
        } else {
            Term::Compound(functor, args.into())
        }
    }

    pub fn outcome(inner: Term) -> Term {
        Term::Outcome(Arc::new(inner))
    }

    pub fn nil() -> Term {
        Term::Sym(WK.nil)
    }

    pub fn list(items: Vec<Term>) -> Term {
        Term::list_with_tail(items, Term::nil())
    }

    pub fn list_with_tail(items: Vec<Term>, tail: Term) -> Term {
        items
            .into_iter()
            .rev()
            .fold(tail, |acc, item| Term::Compound(WK.cons, Arc::from(vec![item, acc])))
    }

    /// Elements of a proper list.
    pub fn as_list(&self) -> Option<Vec<Term>> {
        let mut items = Vec::new();
        let mut cur = self;
        loop {
            match cur {
                Term::Sym(s) if *s == WK.nil => return Some(items),
                Term::Compound(f, args) if *f == WK.cons && args.len() == 2 => {
                    items.push(args[0].clone());
                    cur = &args[1];
                }
                _ => return None,
            }
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Sym(_) | Term::Int(_) | Term::Real(_) => true,
            Term::Compound(_, args) => args.iter().all(Term::is_ground),
            Term::Outcome(t) => t.is_ground(),
        }
    }

    pub fn contains_outcome(&self) -> bool {
        match self {
            Term::Outcome(_) => true,
            Term::Compound(_, args) => args.iter().any(Term::contains_outcome),
            _ => false,
        }
    }

    /// Variables in order of first occurrence.
    pub fn vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    pub(crate) fn collect_vars(&self, out: &mut Vec<Var>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(*v)
                }
            }
            Term::Compound(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
            Term::Outcome(t) => t.collect_vars(out),
            _ => {}
        }
    }

    pub fn max_var(&self) -> Option<u32> {
        match self {
            Term::Var(v) => Some(v.0),
            Term::Compound(_, args) => args.iter().filter_map(Term::max_var).max(),
            Term::Outcome(t) => t.max_var(),
            _ => None,
        }
    }

    pub fn is_number(&self) -> bool {
        matches!(self, Term::Int(_) | Term::Real(_))
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Term::Int(i) => Some(*i as f64),
            Term::Real(r) => Some(*r),
            _ => None,
        }
    }

    /// Name and arity of a symbol or compound.
    pub fn functor(&self) -> Option<(Symbol, usize)> {
        match self {
            Term::Sym(s) => Some((*s, 0)),
            Term::Compound(f, args) => Some((*f, args.len())),
            _ => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::Compound(_, args) => args,
            _ => &[],
        }
    }

    /// Rewrites every variable through `f`.
    pub fn map_vars(&self, f: &mut impl FnMut(Var) -> Term) -> Term {
        match self {
            Term::Var(v) => f(*v),
            Term::Compound(func, args) => {
                Term::Compound(*func, args.iter().map(|a| a.map_vars(f)).collect())
            }
            Term::Outcome(t) => Term::outcome(t.map_vars(f)),
            other => other.clone(),
        }
    }

    pub fn shift_vars(&self, offset: u32) -> Term {
        if offset == 0 {
            return self.clone();
        }
        self.map_vars(&mut |v| Term::Var(Var(v.0 + offset)))
    }
}

/// Predicate name and arity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PredKey {
    pub name: Symbol,
    pub arity: usize,
}

impl PredKey {
    pub fn new(name: &str, arity: usize) -> PredKey {
        PredKey { name: Symbol::intern(name), arity }
    }
}

impl fmt::Display for PredKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", crate::pretty::display_name(self.name), self.arity)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Atom {
    pub pred: Symbol,
    pub args: Arc<[Term]>,
}

impl Atom {
    pub fn new(pred: Symbol, args: Vec<Term>) -> Atom {
        Atom { pred, args: args.into() }
    }

    pub fn named(pred: &str, args: Vec<Term>) -> Atom {
        Atom::new(Symbol::intern(pred), args)
    }

    pub fn key(&self) -> PredKey {
        PredKey { name: self.pred, arity: self.args.len() }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn to_term(&self) -> Term {
        Term::app(self.pred, self.args.to_vec())
    }

    /// Reads a symbol or compound as an atom.
    pub fn from_term(t: &Term) -> Option<Atom> {
        match t {
            Term::Sym(s) => Some(Atom { pred: *s, args: Arc::from(Vec::new()) }),
            Term::Compound(f, args) => Some(Atom { pred: *f, args: args.clone() }),
            _ => None,
        }
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    pub fn max_var(&self) -> Option<u32> {
        self.args.iter().filter_map(Term::max_var).max()
    }

    pub fn vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.args.iter().for_each(|a| a.collect_vars(&mut out));
        out
    }

    pub fn dist_rel(&self) -> Option<DistRel> {
        if self.args.len() == 2 {
            DistRel::from_symbol(self.pred)
        } else {
            None
        }
    }

    pub fn map_args(&self, mut f: impl FnMut(&Term) -> Term) -> Atom {
        Atom { pred: self.pred, args: self.args.iter().map(&mut f).collect() }
    }

    pub fn shift_vars(&self, offset: u32) -> Atom {
        if offset == 0 {
            return self.clone();
        }
        self.map_args(|a| a.shift_vars(offset))
    }

    /// Renumbers variables to `0..n` in order of first occurrence, so
    /// variants of the same atom compare equal.
    pub fn canonical(&self) -> Atom {
        if self.is_ground() {
            return self.clone();
        }
        let vars = self.vars();
        if vars.is_empty() {
            return self.clone();
        }
        let already = vars.iter().enumerate().all(|(i, v)| v.0 == i as u32);
        if already {
            return self.clone();
        }
        self.map_args(|a| {
            a.map_vars(&mut |v| Term::var(vars.iter().position(|w| *w == v).unwrap() as u32))
        })
    }
}

/// True for atoms over `dist_eq/2`, `dist_lt/2`, `dist_leq/2`, `dist_gt/2`
/// and `dist_geq/2`.
pub fn is_probabilistic_fact(atom: &Atom) -> bool {
    atom.dist_rel().is_some()
}

/// Variable bindings, kept fully applied so that applying twice is the same
/// as applying once.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution {
    bindings: IndexMap<Var, Term>,
}

impl Substitution {
    pub fn new() -> Substitution {
        Substitution::default()
    }

    pub fn get(&self, v: Var) -> Option<&Term> {
        self.bindings.get(&v)
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Term)> {
        self.bindings.iter()
    }

    pub fn insert(&mut self, v: Var, t: Term) {
        self.bindings.insert(v, t);
    }
}

impl FromIterator<(Var, Term)> for Substitution {
    fn from_iter<I: IntoIterator<Item = (Var, Term)>>(iter: I) -> Self {
        Substitution { bindings: iter.into_iter().collect() }
    }
}

/// Most general unifier of `a` and `b`, with occurs check.
///
/// An outcome term unifies with a variable or with another outcome term whose
/// inner term unifies; it never unifies with any other term.
pub fn unify(a: &Term, b: &Term) -> Option<Substitution> {
    let mut bindings = Bindings::new();
    if !bindings.unify(a, b) {
        return None;
    }
    let mut vars = a.vars();
    for v in b.vars() {
        if !vars.contains(&v) {
            vars.push(v);
        }
    }
    Some(
        vars.into_iter()
            .filter_map(|v| {
                let t = bindings.resolve(&Term::Var(v));
                (t != Term::Var(v)).then_some((v, t))
            })
            .collect(),
    )
}

pub fn apply(s: &Substitution, t: &Term) -> Term {
    t.map_vars(&mut |v| s.get(v).cloned().unwrap_or(Term::Var(v)))
}

pub fn apply_atom(s: &Substitution, a: &Atom) -> Atom {
    a.map_args(|t| apply(s, t))
}
