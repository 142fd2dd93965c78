//! Trail-based binding store shared by unification, joins and the
//! backward-chaining lookahead.

use crate::term::{Term, Var};

#[derive(Clone, Copy, Debug)]
pub(crate) struct Mark {
    trail: usize,
    next_var: u32,
}

#[derive(Clone, Debug, Default)]
pub(crate) struct Bindings {
    slots: Vec<Option<Term>>,
    trail: Vec<u32>,
    next_var: u32,
}

impl Bindings {
    pub fn new() -> Bindings {
        Bindings::default()
    }

    /// Store whose variables `0..n` are reserved for the caller.
    pub fn with_vars(n: u32) -> Bindings {
        Bindings { slots: vec![None; n as usize], trail: Vec::new(), next_var: n }
    }

    /// Clears all bindings and reserves variables `0..n` again.
    pub fn reset(&mut self, n: u32) {
        self.slots.clear();
        self.slots.resize(n as usize, None);
        self.trail.clear();
        self.next_var = n;
    }

    /// Reserves `n` fresh variables and returns the first id.
    pub fn fresh(&mut self, n: u32) -> u32 {
        let first = self.next_var;
        self.next_var += n;
        if self.slots.len() < self.next_var as usize {
            self.slots.resize(self.next_var as usize, None);
        }
        first
    }

    pub fn mark(&self) -> Mark {
        Mark { trail: self.trail.len(), next_var: self.next_var }
    }

    pub fn undo(&mut self, mark: Mark) {
        for v in self.trail.drain(mark.trail..) {
            self.slots[v as usize] = None;
        }
        self.next_var = mark.next_var;
    }

    fn lookup(&self, v: Var) -> Option<&Term> {
        self.slots.get(v.0 as usize).and_then(Option::as_ref)
    }

    pub fn deref<'a>(&'a self, mut t: &'a Term) -> &'a Term {
        while let Term::Var(v) = t {
            match self.lookup(*v) {
                Some(next) => t = next,
                None => break,
            }
        }
        t
    }

    fn bind(&mut self, v: Var, t: Term) {
        let i = v.0 as usize;
        if self.slots.len() <= i {
            self.slots.resize(i + 1, None);
        }
        if self.next_var <= v.0 {
            self.next_var = v.0 + 1;
        }
        self.slots[i] = Some(t);
        self.trail.push(v.0);
    }

    fn occurs(&self, v: Var, t: &Term) -> bool {
        match self.deref(t) {
            Term::Var(w) => *w == v,
            Term::Compound(_, args) => args.iter().any(|a| self.occurs(v, a)),
            Term::Outcome(inner) => self.occurs(v, inner),
            _ => false,
        }
    }

    /// Unifies two terms, leaving bindings in place on success. On failure
    /// partial bindings remain; callers undo to a mark.
    pub fn unify(&mut self, a: &Term, b: &Term) -> bool {
        let (a, b) = (self.deref(a), self.deref(b));
        match (a, b) {
            (Term::Var(x), Term::Var(y)) if x == y => true,
            (Term::Var(x), other) | (other, Term::Var(x)) => {
                let x = *x;
                if self.occurs(x, other) {
                    return false;
                }
                let other = other.clone();
                self.bind(x, other);
                true
            }
            (Term::Compound(f, xs), Term::Compound(g, ys)) => {
                if f != g || xs.len() != ys.len() {
                    return false;
                }
                let (xs, ys) = (xs.clone(), ys.clone());
                xs.iter().zip(ys.iter()).all(|(x, y)| self.unify(x, y))
            }
            (Term::Outcome(x), Term::Outcome(y)) => {
                let (x, y) = (x.clone(), y.clone());
                self.unify(&x, &y)
            }
            _ => a == b,
        }
    }

    pub fn unify_args(&mut self, xs: &[Term], ys: &[Term]) -> bool {
        xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| self.unify(x, y))
    }

    /// Applies all bindings.
    pub fn resolve(&self, t: &Term) -> Term {
        match t {
            Term::Var(v) => match self.lookup(*v) {
                Some(bound) => self.resolve(bound),
                None => t.clone(),
            },
            Term::Compound(f, args) => {
                if t.is_ground() {
                    t.clone()
                } else {
                    Term::Compound(*f, args.iter().map(|a| self.resolve(a)).collect())
                }
            }
            Term::Outcome(inner) => {
                if inner.is_ground() {
                    t.clone()
                } else {
                    Term::outcome(self.resolve(inner))
                }
            }
            _ => t.clone(),
        }
    }

    pub fn resolve_args(&self, args: &[Term]) -> Vec<Term> {
        args.iter().map(|a| self.resolve(a)).collect()
    }
}
