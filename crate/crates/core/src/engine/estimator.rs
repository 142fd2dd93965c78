//! The sampling loop: one forward-chaining run per sample, aggregated into
//! a weighted estimate of p(q | e).

use indexmap::IndexMap;
use rustc_hash::FxHashSet;

use super::chase::{Chase, PfValue, Status};
use super::interp::Interpretation;
use super::rules::RuleSet;
use super::sampler::{Halt, Prune, SampleSetup, Sampler, Values};
use super::{Convergence, EngineError, FactTable, Mode, SamplerConfig, ValueTable};
use crate::distributions::RandomSource;
use crate::magic::{demand_atom, membership_atom, pmagic, seed};
use crate::program::{Evidence, Program};
use crate::term::{Atom, DistRel, Term};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Estimate {
    Value(f64),
    /// Every sample had weight 0.
    NoAcceptedSamples,
}

impl Estimate {
    pub fn value(self) -> Option<f64> {
        match self {
            Estimate::Value(v) => Some(v),
            Estimate::NoAcceptedSamples => None,
        }
    }
}

/// Running sums over weighted samples.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EstimatorState {
    /// Total weight of samples where the query holds.
    pub n_plus: f64,
    /// Total weight of samples where it does not.
    pub n_minus: f64,
    pub samples_drawn: u64,
    /// Samples with positive weight.
    pub accepted: u64,
    pub sum_w2: f64,
    pub sum_w2_query: f64,
}

impl EstimatorState {
    pub fn add(&mut self, weight: f64, query: bool) {
        self.samples_drawn += 1;
        if weight > 0.0 {
            self.accepted += 1;
        }
        let w2 = weight * weight;
        self.sum_w2 += w2;
        if query {
            self.n_plus += weight;
            self.sum_w2_query += w2;
        } else {
            self.n_minus += weight;
        }
    }

    pub fn estimate(&self) -> Estimate {
        let total = self.n_plus + self.n_minus;
        if total > 0.0 {
            Estimate::Value(self.n_plus / total)
        } else {
            Estimate::NoAcceptedSamples
        }
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.samples_drawn == 0 {
            0.0
        } else {
            self.accepted as f64 / self.samples_drawn as f64
        }
    }

    /// Delta-method standard error of the self-normalized estimate.
    pub fn std_error(&self) -> Option<f64> {
        let total = self.n_plus + self.n_minus;
        let p = self.estimate().value()?;
        let var = (self.sum_w2_query * (1.0 - 2.0 * p) + p * p * self.sum_w2) / (total * total);
        Some(var.max(0.0).sqrt())
    }
}

/// Normalized distribution of a tracked random variable.
#[derive(Clone, Debug, PartialEq)]
pub struct Posterior {
    pub rv: Term,
    pub values: Vec<(Term, f64)>,
}

impl Posterior {
    /// Orders values numerically when possible, otherwise by their text.
    pub(crate) fn sorted(rv: Term, mut values: Vec<(Term, f64)>) -> Posterior {
        values.sort_by(|(a, _), (b, _)| match (a.as_f64(), b.as_f64()) {
            (Some(x), Some(y)) => x.total_cmp(&y),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => a.to_string().cmp(&b.to_string()),
        });
        Posterior { rv, values }
    }

    pub fn get(&self, v: &Term) -> f64 {
        self.values.iter().find(|(x, _)| x == v).map_or(0.0, |(_, p)| *p)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub estimate: Estimate,
    pub state: EstimatorState,
    pub posteriors: Vec<Posterior>,
}

/// One sampled interpretation with its tables.
#[derive(Clone, Debug)]
pub struct WeightedSample {
    pub interpretation: Interpretation,
    pub weight: f64,
    pub query: bool,
    /// `T_dis`, in sampling order.
    pub values: ValueTable,
    /// `T_pf`.
    pub facts: FactTable,
    /// Lookahead removals, when traced.
    pub prunes: Vec<Prune>,
}

struct Summary {
    weight: f64,
    query: bool,
    tracked: Vec<Option<Term>>,
}

/// A query and evidence prepared for sampling.
pub struct Inference {
    program: Program,
    evidence: Evidence,
    cfg: SamplerConfig,
    rules: RuleSet,
    seeds: Vec<Atom>,
    negative: FxHashSet<Atom>,
    positive: Vec<Atom>,
    query: Atom,
}

fn continuous_evidence(p: &Program, e: &Evidence) -> Option<Atom> {
    let continuous = |t: &Term| match t {
        Term::Outcome(inner) => p
            .dist_clauses
            .iter()
            .any(|d| d.dist.kind.is_continuous() && d.rv.functor().is_some() && d.rv.functor() == inner.functor()),
        _ => false,
    };
    e.atoms()
        .find(|a| a.dist_rel() == Some(DistRel::Eq) && (continuous(&a.args[0]) || continuous(&a.args[1])))
        .cloned()
}

impl Inference {
    pub fn new(p: &Program, q: &Atom, e: &Evidence, cfg: &SamplerConfig) -> Result<Inference, EngineError> {
        if !q.is_ground() {
            return Err(EngineError::NonGround(q.clone()));
        }
        if cfg.max_samples == 0 {
            return Err(EngineError::Invalid("at least one sample is needed".into()));
        }
        if let Some(a) = continuous_evidence(p, e) {
            return Err(EngineError::ContinuousEvidence(a));
        }
        let t = seed(&pmagic(p), Some(q), e);
        let seeds = cfg
            .track
            .iter()
            .map(demand_atom)
            .collect();
        Ok(Inference {
            program: p.clone(),
            evidence: e.clone(),
            cfg: cfg.clone(),
            rules: RuleSet::from_transformed(&t),
            seeds,
            negative: e.negative.iter().map(membership_atom).collect(),
            positive: e.positive.iter().map(membership_atom).collect(),
            query: membership_atom(q),
        })
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.cfg
    }

    /// Draws sample number `index` of the run.
    pub fn sample(&self, index: u64) -> Result<WeightedSample, EngineError> {
        self.sample_with(index, self.cfg.mode, false)
    }

    /// Like [`Inference::sample`], also recording lookahead removals.
    pub fn sample_traced(&self, index: u64) -> Result<WeightedSample, EngineError> {
        self.sample_with(index, self.cfg.mode, true)
    }

    fn sample_with(&self, index: u64, mode: Mode, trace: bool) -> Result<WeightedSample, EngineError> {
        let setup = SampleSetup { original: &self.program, evidence: &self.evidence, mode, depth: self.cfg.depth };
        let mut s = Sampler::new(&setup, RandomSource::split(self.cfg.seed, index), trace);
        let mut chase = Chase::new(&self.rules, &self.negative, true, self.cfg.max_derived);
        for f in &self.seeds {
            chase.add_fact(f);
        }
        let mut accepted = chase.run(&mut s)? == Status::Fixpoint;
        if accepted {
            let visible = chase.interp.len() as u32;
            for rv in &self.cfg.track {
                if s.tdis.contains_key(rv) {
                    continue;
                }
                match s.value_of(rv, &chase.interp, visible) {
                    Err(Halt::Pf(PfValue::Reject)) => accepted = false,
                    Err(Halt::Err(e)) => return Err(e),
                    _ => {}
                }
            }
            accepted &= self.positive.iter().all(|a| chase.interp.contains(a));
        }
        let weight = if accepted { s.weight } else { 0.0 };
        Ok(WeightedSample {
            query: chase.interp.contains(&self.query),
            interpretation: chase.interp,
            weight,
            values: s.tdis,
            facts: s.tpf,
            prunes: s.trace.unwrap_or_default(),
        })
    }

    fn summary(&self, index: u64) -> Result<Summary, EngineError> {
        let s = self.sample(index)?;
        let tracked = self.cfg.track.iter().map(|rv| s.values.get(rv).cloned()).collect();
        Ok(Summary { weight: s.weight, query: s.query, tracked })
    }

    fn batch(&self, range: std::ops::Range<u64>, pool: Option<&Pool>) -> Result<Vec<Summary>, EngineError> {
        #[cfg(feature = "parallel")]
        if let Some(pool) = pool {
            use rayon::prelude::*;
            return pool.install(|| range.into_par_iter().map(|i| self.summary(i)).collect());
        }
        let _ = pool;
        range.map(|i| self.summary(i)).collect()
    }

    /// Samples until the convergence rule is met.
    pub fn run(&self) -> Result<Evaluation, EngineError> {
        let pool = make_pool(self.cfg.workers)?;
        let mut state = EstimatorState::default();
        let mut tracked: Vec<IndexMap<Term, f64>> = vec![IndexMap::new(); self.cfg.track.len()];
        let batch = match self.cfg.convergence {
            Convergence::Fixed => self.cfg.max_samples,
            Convergence::StderrBelow(_) => 1000,
        };
        let mut drawn = 0;
        while drawn < self.cfg.max_samples {
            let hi = (drawn + batch).min(self.cfg.max_samples);
            for s in self.batch(drawn..hi, pool.as_ref())? {
                state.add(s.weight, s.query);
                for (i, v) in s.tracked.into_iter().enumerate() {
                    if let (Some(v), true) = (v, s.weight > 0.0) {
                        *tracked[i].entry(v).or_insert(0.0) += s.weight;
                    }
                }
            }
            drawn = hi;
            if let Convergence::StderrBelow(tau) = self.cfg.convergence {
                if state.std_error().is_some_and(|se| se < tau) {
                    break;
                }
            }
        }
        let posteriors = self
            .cfg
            .track
            .iter()
            .zip(tracked)
            .map(|(rv, masses)| {
                let total: f64 = masses.values().sum();
                let values = masses.into_iter().map(|(v, m)| (v, m / total)).collect();
                Posterior::sorted(rv.clone(), values)
            })
            .collect();
        Ok(Evaluation { estimate: state.estimate(), state, posteriors })
    }
}

#[cfg(feature = "parallel")]
type Pool = rayon::ThreadPool;
#[cfg(not(feature = "parallel"))]
type Pool = ();

#[cfg(feature = "parallel")]
fn make_pool(workers: usize) -> Result<Option<Pool>, EngineError> {
    if workers <= 1 {
        return Ok(None);
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map(Some)
        .map_err(|e| EngineError::Invalid(format!("cannot start workers: {e}")))
}

#[cfg(not(feature = "parallel"))]
fn make_pool(_workers: usize) -> Result<Option<Pool>, EngineError> {
    Ok(None)
}

/// Estimates p(q | e) by sampling the seeded probabilistic magic
/// transformation of `p`.
pub fn evaluate(p: &Program, q: &Atom, e: &Evidence, cfg: &SamplerConfig) -> Result<Evaluation, EngineError> {
    Inference::new(p, q, e, cfg)?.run()
}
