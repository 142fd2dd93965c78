//! Semi-naive forward chaining with deferred evaluation of probabilistic
//! facts.
//!
//! Each round sees only the atoms present when it started, matching the
//! stochastic consequence operator: instances are found against `I_old` and
//! their heads become visible in the next round. A clause instance whose
//! probabilistic fact cannot be evaluated yet, because a random variable it
//! mentions has no distribution so far, is kept and retried in later rounds.

use std::ops::ControlFlow;

use rustc_hash::FxHashSet;

use super::interp::{Insert, Interpretation};
use super::rules::{Goal, Head, Rule, RuleSet};
use super::EngineError;
use crate::bindings::Bindings;
use crate::builtins;
use crate::distributions::compare;
use crate::magic::demand_atom;
use crate::program::DistributionTemplate;
use crate::term::{Atom, Term, WK};

pub(crate) enum PfValue {
    True,
    False,
    /// Waiting for random variable `rv`. `ready` means its distribution is
    /// available and only a choice of value is missing.
    Blocked { rv: Term, ready: bool },
    /// The sample contradicts the evidence.
    Reject,
}

pub(crate) trait PfEvaluator {
    /// Evaluates a ground probabilistic fact. Distributions derived at or
    /// after position `visible` must be ignored.
    fn eval(&mut self, pf: &Atom, interp: &Interpretation, visible: u32) -> Result<PfValue, EngineError>;

    /// True when a fact blocked on `rv` certainly stays blocked, so it
    /// need not be retried yet.
    fn stalled(&self, _rv: &Term, _ready: bool, _interp: &Interpretation, _visible: u32) -> bool {
        false
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) enum GroundHead {
    Atom(Atom),
    Dist { rv: Term, dist: DistributionTemplate },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) struct Instance {
    head: GroundHead,
    pfs: Vec<Atom>,
}

#[derive(Clone, Debug)]
pub(crate) struct Pending {
    instance: Instance,
    pub rv: Term,
    pub ready: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Status {
    Fixpoint,
    Rejected,
}

enum Step {
    Done,
    Blocked(Pending),
    Rejected,
}

#[derive(Clone)]
pub(crate) struct Chase<'r> {
    rules: &'r RuleSet,
    pub interp: Interpretation,
    delta_start: u32,
    prev_end: u32,
    started: bool,
    pub pending: Vec<Pending>,
    /// Instances that were ever blocked, to keep `pending` free of
    /// duplicates.
    blocked: FxHashSet<Instance>,
    scratch: Bindings,
    negative: &'r FxHashSet<Atom>,
    /// Emit `c(dist_eq(~(h), _))` for a random variable `h` that blocks a
    /// probabilistic fact, so the transformed program activates its
    /// distributional clause.
    demand: bool,
    max_derived: usize,
}

/// Evaluates ground arithmetic inside distribution parameters.
fn normalize(t: &Term) -> Term {
    if builtins::is_evaluable(t) {
        return builtins::eval_ground(t).unwrap().to_term();
    }
    match t {
        Term::Compound(f, args) => Term::Compound(*f, args.iter().map(normalize).collect()),
        _ => t.clone(),
    }
}

impl<'r> Chase<'r> {
    pub fn new(rules: &'r RuleSet, negative: &'r FxHashSet<Atom>, demand: bool, max_derived: usize) -> Chase<'r> {
        Chase {
            rules,
            interp: Interpretation::new(),
            delta_start: 0,
            prev_end: 0,
            started: false,
            pending: Vec::new(),
            blocked: FxHashSet::default(),
            scratch: Bindings::new(),
            negative,
            demand,
            max_derived,
        }
    }

    /// Adds initial facts; only valid before the first round.
    pub fn add_fact(&mut self, a: &Atom) {
        debug_assert!(!self.started);
        self.interp.insert(a.canonical());
        self.prev_end = self.interp.len() as u32;
    }

    /// Runs rounds until no new atom is derived or the sample is rejected.
    pub fn run(&mut self, ev: &mut impl PfEvaluator) -> Result<Status, EngineError> {
        loop {
            let before = self.interp.len();
            for p in std::mem::take(&mut self.pending) {
                if ev.stalled(&p.rv, p.ready, &self.interp, self.prev_end) {
                    self.pending.push(p);
                    continue;
                }
                match self.process(p.instance, ev)? {
                    Step::Done => {}
                    Step::Blocked(p) => self.pending.push(p),
                    Step::Rejected => return Ok(Status::Rejected),
                }
            }
            if !self.started {
                for rule in &self.rules.rules {
                    let status = if rule.fact_positions.is_empty() {
                        let order: Vec<usize> = (0..rule.body.len()).collect();
                        self.fire(rule, &order, &vec![(0, 0); rule.body.len()], ev)?
                    } else {
                        let Goal::Fact(a) = &rule.body[rule.fact_positions[0]] else { unreachable!() };
                        if !self.interp.has_pred_in(a.key(), 0, self.prev_end) {
                            continue;
                        }
                        self.fire(rule, &rule.orders[0], &vec![(0, self.prev_end); rule.body.len()], ev)?
                    };
                    if status == Status::Rejected {
                        return Ok(Status::Rejected);
                    }
                }
            } else {
                let due = self.rules.triggered(&self.interp, self.delta_start, self.prev_end);
                for (r, k) in due {
                    let rule = &self.rules.rules[r];
                    let mut ranges = vec![(0, 0); rule.body.len()];
                    for (j, &fp) in rule.fact_positions.iter().enumerate() {
                        ranges[fp] = match j.cmp(&k) {
                            std::cmp::Ordering::Less => (0, self.delta_start),
                            std::cmp::Ordering::Equal => (self.delta_start, self.prev_end),
                            std::cmp::Ordering::Greater => (0, self.prev_end),
                        };
                    }
                    if self.fire(rule, &rule.orders[k], &ranges, ev)? == Status::Rejected {
                        return Ok(Status::Rejected);
                    }
                }
            }
            self.started = true;
            self.delta_start = self.prev_end;
            self.prev_end = self.interp.len() as u32;
            if self.interp.len() > self.max_derived {
                return Err(EngineError::DerivationCap(self.max_derived));
            }
            if self.interp.len() == before {
                return Ok(Status::Fixpoint);
            }
        }
    }

    fn fire(
        &mut self,
        rule: &Rule,
        order: &[usize],
        ranges: &[(u32, u32)],
        ev: &mut impl PfEvaluator,
    ) -> Result<Status, EngineError> {
        let mut found = Vec::new();
        let mut b = std::mem::take(&mut self.scratch);
        b.reset(rule.nvars);
        let _ = self.join(rule, order, ranges, &mut b, &mut found);
        self.scratch = b;

        for inst in found {
            match self.process(inst, ev)? {
                Step::Done => {}
                Step::Blocked(p) => {
                    if self.blocked.insert(p.instance.clone()) {
                        self.pending.push(p);
                    }
                }
                Step::Rejected => return Ok(Status::Rejected),
            }
        }
        Ok(Status::Fixpoint)
    }

    /// Solves the goals of `rule` listed in `order`, collecting an instance
    /// per solution.
    fn join(
        &self,
        rule: &Rule,
        order: &[usize],
        ranges: &[(u32, u32)],
        b: &mut Bindings,
        out: &mut Vec<Instance>,
    ) -> ControlFlow<()> {
        let Some((&gi, rest)) = order.split_first() else {
            if let Some(inst) = instantiate(rule, b) {
                out.push(inst);
            }
            return ControlFlow::Continue(());
        };
        match &rule.body[gi] {
            Goal::Fact(a) => {
                let (lo, hi) = ranges[gi];
                for i in self.interp.candidates(a.key(), &a.args, b, lo, hi).iter() {
                    let fact = self.interp.atom(i);
                    let mark = b.mark();
                    let n = self.interp.var_count(i);
                    let ok = if n == 0 {
                        b.unify_args(&a.args, &fact.args)
                    } else {
                        let offset = b.fresh(n);
                        b.unify_args(&a.args, &fact.shift_vars(offset).args)
                    };
                    if ok {
                        self.join(rule, rest, ranges, b, out)?;
                    }
                    b.undo(mark);
                }
                ControlFlow::Continue(())
            }
            Goal::Builtin(a) => {
                builtins::solve(a.pred.as_str(), &a.args, b, &mut |b| self.join(rule, rest, ranges, b, out))
            }
            Goal::Pf(_) => self.join(rule, rest, ranges, b, out),
        }
    }

    fn process(&mut self, inst: Instance, ev: &mut impl PfEvaluator) -> Result<Step, EngineError> {
        for pf in &inst.pfs {
            match ev.eval(pf, &self.interp, self.prev_end)? {
                PfValue::True => {}
                PfValue::False => return Ok(Step::Done),
                PfValue::Reject => return Ok(Step::Rejected),
                PfValue::Blocked { rv, ready } => {
                    if self.demand && !ready {
                        self.interp.insert(demand_atom(&rv));
                    }
                    return Ok(Step::Blocked(Pending { instance: inst, rv, ready }));
                }
            }
        }
        match &inst.head {
            GroundHead::Atom(a) => {
                let a = a.canonical();
                if self.negative.contains(&a) {
                    return Ok(Step::Rejected);
                }
                self.interp.insert(a);
            }
            GroundHead::Dist { rv, dist } => {
                let dist_term = dist.to_term();
                let tilde = Atom::new(WK.tilde, vec![rv.clone(), dist_term.clone()]);
                if let Insert::Conflict(first) = self.interp.insert_dist(rv.clone(), dist_term.clone(), tilde) {
                    return Err(EngineError::ConflictingDistributions { rv: rv.clone(), first, second: dist_term });
                }
            }
        }
        Ok(Step::Done)
    }
}

fn instantiate(rule: &Rule, b: &Bindings) -> Option<Instance> {
    if let Some(g) = &rule.guard_rv {
        let g = b.resolve(g);
        if !g.is_ground() || g.contains_outcome() {
            return None;
        }
    }
    let head = match &rule.head {
        Head::Atom(a) => GroundHead::Atom(Atom { pred: a.pred, args: b.resolve_args(&a.args).into() }),
        Head::Dist { rv, dist } => {
            let rv = b.resolve(rv);
            if !rv.is_ground() || rv.contains_outcome() {
                return None;
            }
            let params: Vec<Term> = dist.params.iter().map(|p| normalize(&b.resolve(p))).collect();
            if !params.iter().all(Term::is_ground) {
                return None;
            }
            GroundHead::Dist { rv, dist: DistributionTemplate { kind: dist.kind, params } }
        }
    };
    let mut pfs = Vec::new();
    for g in &rule.body {
        if let Goal::Pf(a) = g {
            let args = b.resolve_args(&a.args);
            if !args.iter().all(Term::is_ground) {
                return None;
            }
            pfs.push(Atom { pred: a.pred, args: args.into() });
        }
    }
    Some(Instance { head, pfs })
}

/// Evaluates probabilistic facts without sampling: facts over plain values
/// are compared, facts mentioning outcomes stay blocked.
pub(crate) struct StaticEval;

impl PfEvaluator for StaticEval {
    fn stalled(&self, _rv: &Term, _ready: bool, _interp: &Interpretation, _visible: u32) -> bool {
        true
    }

    fn eval(&mut self, pf: &Atom, interp: &Interpretation, visible: u32) -> Result<PfValue, EngineError> {
        if let Some(rv) = first_outcome(&pf.args) {
            let ready = interp.dist(&rv, visible).is_some();
            return Ok(PfValue::Blocked { rv, ready });
        }
        let rel = pf.dist_rel().expect("probabilistic fact");
        Ok(if compare(rel, &pf.args[0], &pf.args[1])? { PfValue::True } else { PfValue::False })
    }
}

fn first_outcome(args: &[Term]) -> Option<Term> {
    fn find(t: &Term) -> Option<Term> {
        match t {
            Term::Outcome(inner) => find(inner).or_else(|| Some((**inner).clone())),
            Term::Compound(_, args) => args.iter().find_map(find),
            _ => None,
        }
    }
    args.iter().find_map(find)
}
