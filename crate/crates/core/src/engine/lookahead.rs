//! Depth-bounded SLD resolution over the original program, used to prune
//! values that make the evidence impossible.
//!
//! The optimistic search treats goals at the depth bound and facts about
//! unsampled random variables as true; if it still finds no proof, none
//! exists. The pessimistic search treats them as false; a proof it finds is
//! a real proof.

use std::ops::ControlFlow;

use super::interp::Interpretation;
use super::sampler::resolve_known;
use super::{FactTable, ValueTable};
use crate::bindings::Bindings;
use crate::builtins;
use crate::distributions::compare;
use crate::program::Program;
use crate::term::{Atom, Term};

pub(crate) struct Lookahead<'a> {
    pub program: &'a Program,
    pub interp: &'a Interpretation,
    pub tpf: &'a FactTable,
    pub tdis: &'a ValueTable,
    pub hypothesis: (&'a Term, &'a Term),
    pub optimistic: bool,
}

type Goals = Vec<(Atom, u32)>;

impl Lookahead<'_> {
    /// Searches for a proof of `goal` where each clause expansion of a goal
    /// costs one unit of its depth.
    pub fn prove(&self, goal: &Atom, depth: u32) -> bool {
        let mut b = Bindings::with_vars(goal.max_var().map_or(0, |m| m + 1));
        let mut goals = vec![(goal.clone(), depth)];
        self.solve(&mut goals, &mut b)
    }

    fn value(&self, rv: &Term) -> Option<Term> {
        if rv == self.hypothesis.0 {
            return Some(self.hypothesis.1.clone());
        }
        self.tdis.get(rv).cloned()
    }

    /// Truth of a probabilistic fact, if it is determined.
    fn pf_truth(&self, pf: &Atom) -> Option<bool> {
        if !pf.is_ground() {
            return None;
        }
        if let Some(&b) = self.tpf.get(pf) {
            return Some(b);
        }
        let known = |t: &Term| self.value(t);
        let a = resolve_known(&pf.args[0], &known)?;
        let b = resolve_known(&pf.args[1], &known)?;
        compare(pf.dist_rel()?, &a, &b).ok()
    }

    /// Proves the goals on the stack, last first.
    fn solve(&self, goals: &mut Goals, b: &mut Bindings) -> bool {
        let Some((goal, depth)) = goals.pop() else { return true };
        let proved = self.step(&goal, depth, goals, b);
        goals.push((goal, depth));
        proved
    }

    fn unknown(&self, goals: &mut Goals, b: &mut Bindings) -> bool {
        self.optimistic && self.solve(goals, b)
    }

    fn step(&self, goal: &Atom, depth: u32, goals: &mut Goals, b: &mut Bindings) -> bool {
        if goal.dist_rel().is_some() {
            let pf = Atom { pred: goal.pred, args: b.resolve_args(&goal.args).into() };
            return match self.pf_truth(&pf) {
                Some(true) => self.solve(goals, b),
                Some(false) => false,
                None => self.unknown(goals, b),
            };
        }
        if self.program.is_builtin(goal.key()) {
            let name = goal.pred.as_str();
            if !builtins::is_decidable(name, &goal.args, b) {
                return self.unknown(goals, b);
            }
            let flow = builtins::solve(name, &goal.args, b, &mut |b| {
                if self.solve(goals, b) {
                    ControlFlow::Break(())
                } else {
                    ControlFlow::Continue(())
                }
            });
            return flow.is_break();
        }
        let args = b.resolve_args(&goal.args);
        if args.iter().all(Term::is_ground) && self.interp.contains(&Atom { pred: goal.pred, args: args.into() }) {
            return self.solve(goals, b);
        }
        if depth == 0 {
            return self.unknown(goals, b);
        }
        let key = goal.key();
        for clause in self.program.clauses.iter().filter(|c| c.head.key() == key) {
            let mark = b.mark();
            let offset = b.fresh(clause.num_vars());
            let head = clause.head.shift_vars(offset);
            if b.unify_args(&goal.args, &head.args) {
                let before = goals.len();
                goals.extend(clause.body.iter().rev().map(|a| (a.shift_vars(offset), depth - 1)));
                let proved = self.solve(goals, b);
                goals.truncate(before);
                if proved {
                    b.undo(mark);
                    return true;
                }
            }
            b.undo(mark);
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_atom, parse_program, parse_term};
    use crate::programs::NOGREEN;

    struct Fixture {
        program: Program,
        interp: Interpretation,
        tpf: FactTable,
        tdis: ValueTable,
        hyp: (Term, Term),
    }

    impl Fixture {
        fn new(src: &str, values: &[(&str, &str)], hyp: (&str, &str)) -> Fixture {
            let t = |s: &str| parse_term(s).unwrap();
            Fixture {
                program: parse_program(src).unwrap(),
                interp: Interpretation::new(),
                tpf: FactTable::default(),
                tdis: values.iter().map(|(k, v)| (t(k), t(v))).collect(),
                hyp: (t(hyp.0), t(hyp.1)),
            }
        }

        fn search(&self, optimistic: bool) -> Lookahead<'_> {
            Lookahead {
                program: &self.program,
                interp: &self.interp,
                tpf: &self.tpf,
                tdis: &self.tdis,
                hypothesis: (&self.hyp.0, &self.hyp.1),
                optimistic,
            }
        }

        fn maybe_proof(&self, goal: &str, depth: u32) -> bool {
            self.search(true).prove(&parse_atom(goal).unwrap(), depth)
        }

        fn maybe_fail(&self, goal: &str, depth: u32) -> bool {
            !self.search(false).prove(&parse_atom(goal).unwrap(), depth)
        }
    }

    #[test]
    fn depth_zero_is_undecided() {
        let f = Fixture::new("a :- b.", &[], ("h", "1"));
        assert!(f.maybe_proof("a", 0));
        assert!(f.maybe_fail("a", 0));
    }

    #[test]
    fn nogreen_rules_out_a_green_first_draw() {
        let f = Fixture::new(NOGREEN, &[("drawnball(1)", "3")], ("color(3)", "green"));
        assert!(!f.maybe_proof("nogreen(1)", 2));
        let f = Fixture::new(NOGREEN, &[("drawnball(1)", "3")], ("color(3)", "red"));
        assert!(f.maybe_proof("nogreen(1)", 2));
        assert!(!f.maybe_fail("nogreen(1)", 2));
    }

    #[test]
    fn deterministic_proofs() {
        let f = Fixture::new("a :- b, c. b. c :- d. d.", &[], ("h", "1"));
        assert!(f.maybe_proof("a", 3));
        assert!(!f.maybe_fail("a", 3));
        assert!(f.maybe_fail("a", 2));
        assert!(!f.maybe_proof("e", 5));
    }

    #[test]
    fn untabled_fact_is_assumed_to_fail_pessimistically() {
        let f = Fixture::new("a :- dist_eq(~(x), 1).", &[], ("h", "1"));
        assert!(f.maybe_fail("a", 4));
        assert!(f.maybe_proof("a", 4));
        let f = Fixture::new("a :- dist_eq(~(x), 1).", &[("x", "1")], ("h", "1"));
        assert!(!f.maybe_fail("a", 4));
        let f = Fixture::new("a :- dist_eq(~(x), 1).", &[], ("x", "2"));
        assert!(!f.maybe_proof("a", 4));
    }
}
