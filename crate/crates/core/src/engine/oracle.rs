//! Exact inference by enumerating the values of every random variable a
//! world needs, for programs with finite distributions.
//!
//! Worlds are explored depth first. Each one is chased to a fixpoint; the
//! first random variable that blocks a probabilistic fact and whose
//! distribution is known is then branched on, with one child per value.
//! Random variables that nothing asks about are never enumerated.

use indexmap::IndexMap;
use rustc_hash::FxHashSet;

use super::chase::{Chase, PfEvaluator, PfValue, Status};
use super::estimator::Posterior;
use super::interp::Interpretation;
use super::rules::RuleSet;
use super::sampler::{eval_pf, resolve, Halt, Values};
use super::{max_derived_from_env, EngineError};
use crate::distributions::Distribution;
use crate::magic::{demand_atom, membership_atom, pmagic, seed, wrapper_name};
use crate::program::{Clause, DistributionTemplate, Evidence, Program};
use crate::term::{Atom, Term};

#[derive(Clone, Debug, PartialEq)]
pub struct OracleOptions {
    /// Enumerate the seeded probabilistic magic transformation instead of
    /// the program itself.
    pub transformed: bool,
    /// Enumerate Poisson variables over `0..=n`, dropping the tail.
    pub truncate: Option<i64>,
    pub max_worlds: u64,
    /// Values imposed on random variables; other values get probability 0.
    pub forced: Vec<(Term, Term)>,
    /// Random variables whose posterior is reported.
    pub track: Vec<Term>,
    pub max_derived: usize,
}

impl Default for OracleOptions {
    fn default() -> OracleOptions {
        OracleOptions {
            transformed: false,
            truncate: None,
            max_worlds: 10_000_000,
            forced: Vec::new(),
            track: Vec::new(),
            max_derived: max_derived_from_env(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    /// P(q and e).
    pub p_query_and_evidence: f64,
    /// P(e).
    pub p_evidence: f64,
    /// Number of complete worlds visited.
    pub worlds: u64,
    /// P(rv = v | e) for each tracked random variable.
    pub posteriors: Vec<Posterior>,
}

impl OracleResult {
    /// P(q | e), undefined when P(e) = 0.
    pub fn conditional(&self) -> Option<f64> {
        (self.p_evidence > 0.0).then(|| self.p_query_and_evidence / self.p_evidence)
    }
}

struct Assignment<'a> {
    values: &'a IndexMap<Term, Term>,
}

impl Values for Assignment<'_> {
    fn value_of(&mut self, rv: &Term, interp: &Interpretation, visible: u32) -> Result<Term, Halt> {
        if let Some(v) = self.values.get(rv) {
            return Ok(v.clone());
        }
        let Some(d) = interp.dist(rv, visible) else {
            return Err(Halt::Pf(PfValue::Blocked { rv: rv.clone(), ready: false }));
        };
        let template = DistributionTemplate::from_term(d).map_err(EngineError::Invalid)?;
        for p in &template.params {
            resolve(self, p, interp, visible)?;
        }
        Err(Halt::Pf(PfValue::Blocked { rv: rv.clone(), ready: true }))
    }
}

impl PfEvaluator for Assignment<'_> {
    fn stalled(&self, rv: &Term, ready: bool, interp: &Interpretation, visible: u32) -> bool {
        !self.values.contains_key(rv) && (ready || interp.dist(rv, visible).is_none())
    }

    fn eval(&mut self, pf: &Atom, interp: &Interpretation, visible: u32) -> Result<PfValue, EngineError> {
        match eval_pf(self, pf, interp, visible) {
            Ok(true) => Ok(PfValue::True),
            Ok(false) => Ok(PfValue::False),
            Err(Halt::Pf(v)) => Ok(v),
            Err(Halt::Err(e)) => Err(e),
        }
    }
}

#[derive(Clone)]
struct World<'r> {
    chase: Chase<'r>,
    values: IndexMap<Term, Term>,
    prob: f64,
}

fn poisson_masses(rate: f64, n: i64) -> Vec<(f64, Term)> {
    let mut p = (-rate).exp();
    let mut out = Vec::with_capacity(n.max(0) as usize + 1);
    for k in 0..=n {
        out.push((p, Term::Int(k)));
        p *= rate / (k + 1) as f64;
    }
    out
}

/// `a_rel(args) :- rel(args)` for each probabilistic fact among the query
/// and evidence, so their truth shows up as an atom.
fn with_pf_members(p: &Program, atoms: &[&Atom]) -> Program {
    let mut clauses = p.clauses.clone();
    for a in atoms.iter().filter(|a| a.dist_rel().is_some()) {
        let head = Atom { pred: wrapper_name(a.pred), args: a.args.clone() };
        let c = Clause::new(head, vec![(*a).clone()]);
        if !clauses.contains(&c) {
            clauses.push(c);
        }
    }
    Program::new(clauses, p.dist_clauses.clone())
}

/// Computes P(q and e) and P(e) by summing over all worlds.
pub fn exact_enumerate(p: &Program, q: &Atom, e: &Evidence, opts: &OracleOptions) -> Result<OracleResult, EngineError> {
    if !q.is_ground() {
        return Err(EngineError::NonGround(q.clone()));
    }
    let mut seeds = Vec::new();
    let rules = if opts.transformed {
        for rv in &opts.track {
            seeds.push(demand_atom(rv));
        }
        RuleSet::from_transformed(&seed(&pmagic(p), Some(q), e))
    } else {
        let atoms: Vec<&Atom> = std::iter::once(q).chain(e.atoms()).collect();
        RuleSet::from_program(&with_pf_members(p, &atoms))
    };
    let negative: FxHashSet<Atom> = e.negative.iter().map(membership_atom).collect();
    let positive: Vec<Atom> = e.positive.iter().map(membership_atom).collect();
    let query = membership_atom(q);
    let forced: IndexMap<&Term, &Term> = opts.forced.iter().map(|(k, v)| (k, v)).collect();

    let mut chase = Chase::new(&rules, &negative, opts.transformed, opts.max_derived);
    for s in &seeds {
        chase.add_fact(s);
    }
    let mut stack = vec![World { chase, values: IndexMap::new(), prob: 1.0 }];
    let mut result = OracleResult { p_query_and_evidence: 0.0, p_evidence: 0.0, worlds: 0, posteriors: Vec::new() };
    let mut tracked: Vec<IndexMap<Term, f64>> = vec![IndexMap::new(); opts.track.len()];

    while let Some(mut w) = stack.pop() {
        let status = w.chase.run(&mut Assignment { values: &w.values })?;
        if status == Status::Rejected {
            continue;
        }
        let interp = &w.chase.interp;
        let visible = interp.len() as u32;
        let mut next = w.chase.pending.iter().find(|p| p.ready).map(|p| p.rv.clone());
        if next.is_none() {
            for rv in opts.track.iter().filter(|rv| !w.values.contains_key(*rv)) {
                if let Err(Halt::Pf(PfValue::Blocked { rv, ready: true })) =
                    (Assignment { values: &w.values }).value_of(rv, interp, visible)
                {
                    next = Some(rv);
                    break;
                }
            }
        }
        let Some(rv) = next else {
            result.worlds += 1;
            if result.worlds > opts.max_worlds {
                return Err(EngineError::WorldCap(opts.max_worlds));
            }
            let holds = positive.iter().all(|a| interp.contains(a)) && !negative.iter().any(|a| interp.contains(a));
            if holds {
                result.p_evidence += w.prob;
                if interp.contains(&query) {
                    result.p_query_and_evidence += w.prob;
                }
                for (i, rv) in opts.track.iter().enumerate() {
                    if let Some(v) = w.values.get(rv) {
                        *tracked[i].entry(v.clone()).or_insert(0.0) += w.prob;
                    }
                }
            }
            continue;
        };
        let dist = interp.dist(&rv, visible).expect("ready random variable").clone();
        let template = DistributionTemplate::from_term(&dist).map_err(EngineError::Invalid)?;
        let mut a = Assignment { values: &w.values };
        let params = template
            .params
            .iter()
            .map(|p| resolve(&mut a, p, interp, visible))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|h| match h {
                Halt::Err(e) => e,
                Halt::Pf(_) => EngineError::Invalid(format!("parameters of `{rv}` are not known")),
            })?;
        let d = Distribution::from_params(template.kind, &params)?;
        let support = match (&d, opts.truncate) {
            (Distribution::Poisson { rate }, Some(n)) => poisson_masses(*rate, n),
            _ => d.support().ok_or_else(|| EngineError::NotFinite { rv: rv.clone(), dist: dist.clone() })?,
        };
        let support: Vec<(f64, Term)> = match forced.get(&rv) {
            Some(v) => support.into_iter().filter(|(_, x)| x == *v).collect(),
            None => support,
        };
        for (m, v) in support.into_iter().rev() {
            if m == 0.0 {
                continue;
            }
            let mut child = w.clone();
            child.values.insert(rv.clone(), v);
            child.prob *= m;
            stack.push(child);
        }
    }

    if result.p_evidence > 0.0 {
        for (rv, masses) in opts.track.iter().zip(tracked) {
            let values = masses.into_iter().map(|(v, m)| (v, m / result.p_evidence)).collect();
            result.posteriors.push(Posterior::sorted(rv.clone(), values));
        }
    }
    Ok(result)
}
