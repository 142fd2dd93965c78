//! Clauses compiled for forward chaining.

use std::hash::{Hash, Hasher};

use rustc_hash::{FxHashMap, FxHasher};

use crate::magic::TransformedProgram;
use crate::program::{DistributionTemplate, Program};
use crate::term::{Atom, Term};

#[derive(Clone, Debug)]
pub(crate) enum Head {
    Atom(Atom),
    Dist { rv: Term, dist: DistributionTemplate },
}

#[derive(Clone, Debug)]
pub(crate) enum Goal {
    /// Matched against the interpretation.
    Fact(Atom),
    Builtin(Atom),
    /// Probabilistic fact, evaluated after the rest of the body matched.
    Pf(Atom),
}

#[derive(Clone, Debug)]
pub(crate) struct Rule {
    pub head: Head,
    pub body: Vec<Goal>,
    pub nvars: u32,
    /// Random variable named by the activation guard; instances where it is
    /// not a ground, outcome-free term are skipped.
    pub guard_rv: Option<Term>,
    /// Indices into `body` of the `Fact` goals.
    pub fact_positions: Vec<usize>,
    /// For each entry of `fact_positions`, the order in which to solve the
    /// body when that goal ranges over the newest atoms: the goal moves
    /// ahead of the fact goals before it, but never ahead of a builtin.
    pub orders: Vec<Vec<usize>>,
}

fn delta_first(body: &[Goal], pos: usize) -> Vec<usize> {
    let at = body[..pos].iter().rposition(|g| matches!(g, Goal::Builtin(_))).map_or(0, |i| i + 1);
    let mut order: Vec<usize> = (0..at).collect();
    order.push(pos);
    order.extend((at..body.len()).filter(|&i| i != pos));
    order
}

#[derive(Clone, Debug)]
pub(crate) struct RuleSet {
    pub rules: Vec<Rule>,
    /// `(rule, k)` pairs keyed by the full signature of their `k`-th fact goal.
    pub exact: FxHashMap<u64, Vec<(usize, usize)>>,
    /// The same pairs keyed by every prefix of the goal signature.
    pub by_prefix: FxHashMap<u64, Vec<(usize, usize)>>,
}

const SIGNATURE_DEPTH: usize = 4;

/// Hashes of the successive prefixes of the first-argument path of `a`:
/// the predicate, then the functor of its first argument, and so on. The
/// flag is set when the path stops at a variable.
pub(crate) fn signature(a: &Atom, out: &mut Vec<u64>) -> bool {
    let mut h = FxHasher::default();
    a.key().hash(&mut h);
    out.push(h.finish());
    let mut cur = a.args.first();
    for _ in 0..SIGNATURE_DEPTH {
        match cur {
            Some(Term::Var(_)) => return true,
            Some(Term::Outcome(inner)) => {
                '~'.hash(&mut h);
                cur = Some(inner);
            }
            Some(Term::Compound(f, args)) => {
                (f, args.len()).hash(&mut h);
                cur = args.first();
            }
            Some(Term::Sym(s)) => {
                s.hash(&mut h);
                cur = None;
            }
            _ => return false,
        }
        out.push(h.finish());
    }
    false
}

fn goal(p: &Program, a: &Atom) -> Goal {
    if a.dist_rel().is_some() {
        Goal::Pf(a.clone())
    } else if p.is_builtin(a.key()) {
        Goal::Builtin(a.clone())
    } else {
        Goal::Fact(a.clone())
    }
}

fn rule(p: &Program, head: Head, body: &[Atom], guard_rv: Option<Term>) -> Rule {
    let body: Vec<Goal> = body.iter().map(|a| goal(p, a)).collect();
    let head_max = match &head {
        Head::Atom(a) => a.max_var(),
        Head::Dist { rv, dist } => rv.max_var().max(dist.params.iter().filter_map(Term::max_var).max()),
    };
    let body_max = body
        .iter()
        .filter_map(|g| match g {
            Goal::Fact(a) | Goal::Builtin(a) | Goal::Pf(a) => a.max_var(),
        })
        .max();
    let nvars = head_max.max(body_max).map_or(0, |m| m + 1);
    let fact_positions: Vec<usize> = body.iter().enumerate().filter(|(_, g)| matches!(g, Goal::Fact(_))).map(|(i, _)| i).collect();
    let orders = fact_positions.iter().map(|&pos| delta_first(&body, pos)).collect();
    Rule { head, body, nvars, guard_rv, fact_positions, orders }
}

impl RuleSet {
    /// Pairs `(rule, k)` whose `k`-th fact goal may unify with some atom at
    /// positions `lo..hi`, sorted and deduplicated.
    pub(crate) fn triggered(&self, interp: &super::interp::Interpretation, lo: u32, hi: u32) -> Vec<(usize, usize)> {
        let mut seen = rustc_hash::FxHashSet::default();
        let mut due = Vec::new();
        let mut sig = Vec::new();
        for i in lo..hi {
            sig.clear();
            let open = signature(interp.atom(i), &mut sig);
            let (&last, shorter) = sig.split_last().unwrap();
            if !seen.insert((last, open)) {
                continue;
            }
            for h in shorter {
                due.extend(self.exact.get(h).into_iter().flatten());
            }
            let last_map = if open { &self.by_prefix } else { &self.exact };
            due.extend(last_map.get(&last).into_iter().flatten());
        }
        due.sort_unstable();
        due.dedup();
        due
    }


    fn new(rules: Vec<Rule>) -> RuleSet {
        let mut exact: FxHashMap<u64, Vec<(usize, usize)>> = FxHashMap::default();
        let mut by_prefix: FxHashMap<u64, Vec<(usize, usize)>> = FxHashMap::default();
        let mut sig = Vec::new();
        for (r, rule) in rules.iter().enumerate() {
            for (k, &pos) in rule.fact_positions.iter().enumerate() {
                let Goal::Fact(a) = &rule.body[pos] else { unreachable!() };
                sig.clear();
                signature(a, &mut sig);
                exact.entry(*sig.last().unwrap()).or_default().push((r, k));
                for &h in &sig {
                    by_prefix.entry(h).or_default().push((r, k));
                }
            }
        }
        RuleSet { rules, exact, by_prefix }
    }

    pub fn from_program(p: &Program) -> RuleSet {
        let mut rules: Vec<Rule> = p.clauses.iter().map(|c| rule(p, Head::Atom(c.head.clone()), &c.body, None)).collect();
        rules.extend(p.dist_clauses.iter().map(|d| {
            rule(p, Head::Dist { rv: d.rv.clone(), dist: d.dist.clone() }, &d.body, None)
        }));
        RuleSet::new(rules)
    }

    pub fn from_transformed(t: &TransformedProgram) -> RuleSet {
        let p = &t.original;
        let mut rules: Vec<Rule> = t
            .clauses
            .iter()
            .zip(&t.guard_rv)
            .map(|(c, g)| rule(p, Head::Atom(c.head.clone()), &c.body, g.clone()))
            .collect();
        rules.extend(t.dist_clauses.iter().map(|d| {
            rule(p, Head::Dist { rv: d.rv.clone(), dist: d.dist.clone() }, &d.body, Some(d.rv.clone()))
        }));
        RuleSet::new(rules)
    }
}
