//! Evaluation of probabilistic facts while sampling: tabling in `T_pf`,
//! drawing values into `T_dis`, and the evidence-driven steering of finite
//! choices in likelihood weighting.

use indexmap::IndexSet;

use super::chase::{PfEvaluator, PfValue};
use super::interp::Interpretation;
use super::lookahead::Lookahead;
use super::{EngineError, FactTable, Mode, ValueTable};
use crate::distributions::{compare, DistError, Distribution, RandomSource};
use crate::program::{DistributionTemplate, Evidence, Program};
use crate::term::{Atom, DistRel, Term};

/// Why resolving outcome terms stopped.
pub(crate) enum Halt {
    Pf(PfValue),
    Err(EngineError),
}

impl From<EngineError> for Halt {
    fn from(e: EngineError) -> Halt {
        Halt::Err(e)
    }
}

impl From<DistError> for Halt {
    fn from(e: DistError) -> Halt {
        Halt::Err(e.into())
    }
}

/// Source of values for random variables.
pub(crate) trait Values {
    fn value_of(&mut self, rv: &Term, interp: &Interpretation, visible: u32) -> Result<Term, Halt>;
}

/// Replaces outcome terms by values, innermost first.
pub(crate) fn resolve(v: &mut impl Values, t: &Term, interp: &Interpretation, visible: u32) -> Result<Term, Halt> {
    match t {
        Term::Outcome(inner) => {
            let rv = resolve(v, inner, interp, visible)?;
            v.value_of(&rv, interp, visible)
        }
        Term::Compound(f, args) if t.contains_outcome() => {
            let args = args.iter().map(|a| resolve(v, a, interp, visible)).collect::<Result<Vec<_>, _>>()?;
            Ok(Term::Compound(*f, args.into()))
        }
        _ => Ok(t.clone()),
    }
}

/// Truth of a ground probabilistic fact.
pub(crate) fn eval_pf(v: &mut impl Values, pf: &Atom, interp: &Interpretation, visible: u32) -> Result<bool, Halt> {
    let rel = pf.dist_rel().expect("probabilistic fact");
    let a = resolve(v, &pf.args[0], interp, visible)?;
    let b = resolve(v, &pf.args[1], interp, visible)?;
    Ok(compare(rel, &a, &b)?)
}

/// Resolves outcomes using known values only.
pub(crate) fn resolve_known(t: &Term, known: &dyn Fn(&Term) -> Option<Term>) -> Option<Term> {
    match t {
        Term::Outcome(inner) => known(&resolve_known(inner, known)?),
        Term::Compound(f, args) if t.contains_outcome() => {
            let args = args.iter().map(|a| resolve_known(a, known)).collect::<Option<Vec<_>>>()?;
            Some(Term::Compound(*f, args.into()))
        }
        _ => Some(t.clone()),
    }
}

/// Settings shared by all samples of a run.
pub(crate) struct SampleSetup<'a> {
    pub original: &'a Program,
    pub evidence: &'a Evidence,
    pub mode: Mode,
    pub depth: u32,
}

/// Values removed from the distribution of `rv` by the lookahead, with the
/// values sampled before it.
#[derive(Clone, Debug, PartialEq)]
pub struct Prune {
    pub assignment: Vec<(Term, Term)>,
    pub rv: Term,
    pub removed: Vec<Term>,
}

pub(crate) struct Sampler<'a> {
    setup: &'a SampleSetup<'a>,
    rng: RandomSource,
    pub tpf: FactTable,
    pub tdis: ValueTable,
    pub weight: f64,
    pub trace: Option<Vec<Prune>>,
}

impl<'a> Sampler<'a> {
    pub fn new(setup: &'a SampleSetup<'a>, rng: RandomSource, trace: bool) -> Sampler<'a> {
        Sampler {
            setup,
            rng,
            tpf: FactTable::default(),
            tdis: ValueTable::default(),
            weight: 1.0,
            trace: trace.then(Vec::new),
        }
    }

    /// Values `v` such that `dist_eq(~(rv), v)` or `dist_eq(v, ~(rv))` is
    /// in `set`, where the random variable inside the outcome is matched
    /// after substituting the values sampled so far.
    fn evidence_values(&self, set: &IndexSet<Atom>, rv: &Term) -> Vec<Term> {
        let known = |t: &Term| self.tdis.get(t).cloned();
        let mut out = Vec::new();
        for a in set {
            if a.dist_rel() != Some(DistRel::Eq) {
                continue;
            }
            for (x, v) in [(&a.args[0], &a.args[1]), (&a.args[1], &a.args[0])] {
                if let Term::Outcome(inner) = x {
                    if !v.contains_outcome() && resolve_known(inner, &known).as_ref() == Some(rv) {
                        out.push(v.clone());
                    }
                }
            }
        }
        out
    }

    /// Whether the hypothesis `rv = value` leaves the evidence possible as
    /// far as the bounded lookahead can tell.
    fn possible(&self, rv: &Term, value: &Term, interp: &Interpretation) -> bool {
        let s = self.setup;
        let look = |optimistic| Lookahead {
            program: s.original,
            interp,
            tpf: &self.tpf,
            tdis: &self.tdis,
            hypothesis: (rv, value),
            optimistic,
        };
        let optimistic = look(true);
        if !s.evidence.positive.iter().all(|b| optimistic.prove(b, s.depth)) {
            return false;
        }
        let pessimistic = look(false);
        !s.evidence.negative.iter().any(|b| pessimistic.prove(b, s.depth))
    }

    fn sample_rv(&mut self, rv: &Term, dist: &Term, interp: &Interpretation, visible: u32) -> Result<Term, Halt> {
        let template = DistributionTemplate::from_term(dist).map_err(EngineError::Invalid)?;
        let params = template
            .params
            .iter()
            .map(|p| resolve(self, p, interp, visible))
            .collect::<Result<Vec<_>, _>>()?;
        let mut d = Distribution::from_params(template.kind, &params)?;
        if d.is_empty() {
            return Err(Halt::Pf(PfValue::Reject));
        }
        let mut w = 1.0;
        if self.setup.mode == Mode::LikelihoodWeighting && d.is_finite() {
            for v in self.evidence_values(&self.setup.evidence.negative, rv) {
                let (rest, p) = d.remove_and_renormalize(&v)?;
                d = rest;
                w *= 1.0 - p;
            }
            if d.is_empty() {
                return Err(Halt::Pf(PfValue::Reject));
            }
            if let Some(v) = self.evidence_values(&self.setup.evidence.positive, rv).into_iter().next() {
                let m = d.mass(&v)?;
                if m == 0.0 {
                    return Err(Halt::Pf(PfValue::Reject));
                }
                w *= m;
                d = Distribution::categorical(vec![(1.0, v)]);
            }
            if self.setup.depth > 0 {
                let mut removed = Vec::new();
                for (_, v) in d.support().unwrap() {
                    if !self.possible(rv, &v, interp) {
                        let (rest, p) = d.remove_and_renormalize(&v)?;
                        d = rest;
                        w *= 1.0 - p;
                        removed.push(v);
                    }
                }
                if let Some(trace) = &mut self.trace {
                    if !removed.is_empty() {
                        let assignment = self.tdis.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
                        trace.push(Prune { assignment, rv: rv.clone(), removed });
                    }
                }
                if d.is_empty() {
                    return Err(Halt::Pf(PfValue::Reject));
                }
            }
        }
        let x = d.draw(&mut self.rng)?;
        self.tdis.insert(rv.clone(), x.clone());
        self.weight *= w;
        Ok(x)
    }
}

impl Values for Sampler<'_> {
    fn value_of(&mut self, rv: &Term, interp: &Interpretation, visible: u32) -> Result<Term, Halt> {
        if let Some(v) = self.tdis.get(rv) {
            return Ok(v.clone());
        }
        match interp.dist(rv, visible) {
            Some(d) => {
                let d = d.clone();
                self.sample_rv(rv, &d, interp, visible)
            }
            None => Err(Halt::Pf(PfValue::Blocked { rv: rv.clone(), ready: false })),
        }
    }
}

impl PfEvaluator for Sampler<'_> {
    fn stalled(&self, rv: &Term, _ready: bool, interp: &Interpretation, visible: u32) -> bool {
        !self.tdis.contains_key(rv) && interp.dist(rv, visible).is_none()
    }

    fn eval(&mut self, pf: &Atom, interp: &Interpretation, visible: u32) -> Result<PfValue, EngineError> {
        if let Some(&b) = self.tpf.get(pf) {
            return Ok(if b { PfValue::True } else { PfValue::False });
        }
        match eval_pf(self, pf, interp, visible) {
            Ok(b) => {
                let e = self.setup.evidence;
                if (b && e.negative.contains(pf)) || (!b && e.positive.contains(pf)) {
                    self.weight = 0.0;
                    return Ok(PfValue::Reject);
                }
                self.tpf.insert(pf.clone(), b);
                Ok(if b { PfValue::True } else { PfValue::False })
            }
            Err(Halt::Pf(PfValue::Reject)) => {
                self.weight = 0.0;
                Ok(PfValue::Reject)
            }
            Err(Halt::Pf(v)) => Ok(v),
            Err(Halt::Err(e)) => Err(e),
        }
    }
}
