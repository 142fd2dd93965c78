//! Ground distributions: drawing, point masses and the removal with
//! renormalization used when steering samples away from evidence.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution as _;
use thiserror::Error;

use crate::builtins::{eval_ground, num_cmp, Num};
use crate::program::DistKind;
use crate::term::{DistRel, Term, WK};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum DistError {
    #[error("empty distribution")]
    Empty,
    #[error("point masses are only defined for finite distributions")]
    NotFinite,
    #[error("cannot order non-numeric values `{0}` and `{1}`")]
    NonNumericOrdering(Term, Term),
    #[error("invalid distribution: {0}")]
    Invalid(String),
}

/// A distribution with ground parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum Distribution {
    /// `(probability, value)` entries with distinct values.
    Categorical(Vec<(f64, Term)>),
    /// Equal mass on each of the distinct values.
    UniformDiscrete(Vec<Term>),
    UniformContinuous { low: f64, high: f64 },
    Poisson { rate: f64 },
    Gamma { shape: f64, scale: f64 },
}

fn number(t: &Term, what: &str) -> Result<f64, DistError> {
    eval_ground(t)
        .map(Num::as_f64)
        .ok_or_else(|| DistError::Invalid(format!("{what} `{t}` is not a number")))
}

/// Values of `uniform(L)`: a proper list or an integer range `Lo..Hi`.
fn uniform_values(t: &Term) -> Result<Vec<Term>, DistError> {
    if let Some(items) = t.as_list() {
        return Ok(items);
    }
    if let Term::Compound(f, args) = t {
        if *f == WK.range && args.len() == 2 {
            return match (eval_ground(&args[0]), eval_ground(&args[1])) {
                (Some(Num::Int(lo)), Some(Num::Int(hi))) => Ok((lo..=hi).map(Term::Int).collect()),
                _ => Err(DistError::Invalid(format!("range `{t}` needs integer bounds"))),
            };
        }
    }
    Err(DistError::Invalid(format!("`{t}` is neither a list nor a range")))
}

impl Distribution {
    /// Builds a distribution from ground, outcome-free parameters. Arithmetic
    /// in parameters is evaluated.
    pub fn from_params(kind: DistKind, params: &[Term]) -> Result<Distribution, DistError> {
        let d = match kind {
            DistKind::Categorical => {
                let mut entries: Vec<(f64, Term)> = Vec::with_capacity(params.len());
                for p in params {
                    let (prob, value) = match p {
                        Term::Compound(f, args) if *f == WK.colon && args.len() == 2 => {
                            (number(&args[0], "probability")?, args[1].clone())
                        }
                        _ => return Err(DistError::Invalid(format!("bad categorical entry `{p}`"))),
                    };
                    if !(0.0..=1.0).contains(&prob) {
                        return Err(DistError::Invalid(format!("probability {prob} outside [0,1]")));
                    }
                    match entries.iter_mut().find(|(_, v)| *v == value) {
                        Some(e) => e.0 += prob,
                        None => entries.push((prob, value)),
                    }
                }
                let total: f64 = entries.iter().map(|e| e.0).sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(DistError::Invalid(format!("probabilities sum to {total}, not 1")));
                }
                Distribution::Categorical(entries)
            }
            DistKind::UniformDiscrete => {
                let values = uniform_values(&params[0])?;
                let mut distinct: Vec<Term> = Vec::with_capacity(values.len());
                for v in &values {
                    if !distinct.contains(v) {
                        distinct.push(v.clone());
                    }
                }
                if distinct.len() == values.len() {
                    Distribution::UniformDiscrete(distinct)
                } else {
                    let n = values.len() as f64;
                    Distribution::Categorical(
                        distinct
                            .into_iter()
                            .map(|v| (values.iter().filter(|w| **w == v).count() as f64 / n, v))
                            .collect(),
                    )
                }
            }
            DistKind::UniformContinuous => {
                let low = number(&params[0], "lower bound")?;
                let high = number(&params[1], "upper bound")?;
                if low.partial_cmp(&high) != Some(std::cmp::Ordering::Less) {
                    return Err(DistError::Invalid(format!("uniform({low},{high}) needs low < high")));
                }
                Distribution::UniformContinuous { low, high }
            }
            DistKind::Poisson => {
                let rate = number(&params[0], "rate")?;
                if !(rate > 0.0 && rate.is_finite()) {
                    return Err(DistError::Invalid(format!("poisson rate {rate} must be positive")));
                }
                Distribution::Poisson { rate }
            }
            DistKind::Gamma => {
                let shape = number(&params[0], "shape")?;
                let scale = number(&params[1], "scale")?;
                if !(shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite()) {
                    return Err(DistError::Invalid(format!("gamma({shape},{scale}) needs positive parameters")));
                }
                Distribution::Gamma { shape, scale }
            }
        };
        Ok(d)
    }

    pub fn categorical(entries: Vec<(f64, Term)>) -> Distribution {
        Distribution::Categorical(entries)
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Distribution::Categorical(_) | Distribution::UniformDiscrete(_))
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self, Distribution::UniformContinuous { .. } | Distribution::Gamma { .. })
    }

    pub fn is_empty(&self) -> bool {
        match self {
            Distribution::Categorical(e) => e.is_empty(),
            Distribution::UniformDiscrete(v) => v.is_empty(),
            _ => false,
        }
    }

    /// `(mass, value)` pairs of a finite distribution.
    pub fn support(&self) -> Option<Vec<(f64, Term)>> {
        match self {
            Distribution::Categorical(e) => Some(e.clone()),
            Distribution::UniformDiscrete(v) => {
                let p = 1.0 / v.len() as f64;
                Some(v.iter().map(|x| (p, x.clone())).collect())
            }
            _ => None,
        }
    }

    pub fn mass(&self, v: &Term) -> Result<f64, DistError> {
        match self {
            Distribution::Categorical(e) => Ok(e.iter().find(|(_, x)| x == v).map_or(0.0, |(p, _)| *p)),
            Distribution::UniformDiscrete(vals) => {
                Ok(if vals.contains(v) { 1.0 / vals.len() as f64 } else { 0.0 })
            }
            _ => Err(DistError::NotFinite),
        }
    }

    /// Deletes `v` and rescales the remaining masses to sum to one. Returns
    /// the new distribution and the mass `v` had. Removing the last value
    /// leaves an empty distribution.
    pub fn remove_and_renormalize(&self, v: &Term) -> Result<(Distribution, f64), DistError> {
        let entries = self.support().ok_or(DistError::NotFinite)?;
        let Some(pos) = entries.iter().position(|(_, x)| x == v) else {
            return Ok((self.clone(), 0.0));
        };
        let removed = entries[pos].0;
        let rest = 1.0 - removed;
        let remaining: Vec<(f64, Term)> = entries
            .into_iter()
            .enumerate()
            .filter(|(i, _)| *i != pos)
            .map(|(_, (p, x))| (if rest > 0.0 { p / rest } else { 0.0 }, x))
            .collect();
        let remaining = if rest > 0.0 { remaining } else { Vec::new() };
        Ok((Distribution::Categorical(remaining), removed))
    }

    /// Draws one value.
    ///
    /// Categorical: inverse CDF on one uniform. Discrete uniform: one
    /// uniform index. Continuous uniform: `low + (high - low) * u`.
    /// Poisson: sequential inversion for rates up to 30, otherwise
    /// Hörmann's PTRS transformed rejection. Gamma: Marsaglia and Tsang.
    pub fn draw(&self, r: &mut RandomSource) -> Result<Term, DistError> {
        match self {
            Distribution::Categorical(entries) => {
                if entries.is_empty() {
                    return Err(DistError::Empty);
                }
                let u: f64 = r.random();
                let mut acc = 0.0;
                for (p, v) in entries {
                    acc += p;
                    if u < acc {
                        return Ok(v.clone());
                    }
                }
                // rounding left u above the total; take the last positive entry
                let (_, v) = entries.iter().rev().find(|(p, _)| *p > 0.0).ok_or(DistError::Empty)?;
                Ok(v.clone())
            }
            Distribution::UniformDiscrete(values) => {
                if values.is_empty() {
                    return Err(DistError::Empty);
                }
                Ok(values[r.random_range(0..values.len())].clone())
            }
            Distribution::UniformContinuous { low, high } => {
                let u: f64 = r.random();
                Ok(Term::Real(low + (high - low) * u))
            }
            Distribution::Poisson { rate } => Ok(Term::Int(poisson(*rate, r))),
            Distribution::Gamma { shape, scale } => {
                let g = rand_distr::Gamma::new(*shape, *scale)
                    .map_err(|e| DistError::Invalid(e.to_string()))?;
                Ok(Term::Real(g.sample(r)))
            }
        }
    }
}

fn poisson(rate: f64, r: &mut RandomSource) -> i64 {
    if rate <= 30.0 {
        let mut p = (-rate).exp();
        let mut cdf = p;
        let u: f64 = r.random();
        let mut k = 0i64;
        while u > cdf {
            k += 1;
            p *= rate / k as f64;
            cdf += p;
            if p == 0.0 && cdf < u {
                // u sits in the tail lost to rounding
                break;
            }
        }
        return k;
    }
    // PTRS, W. Hörmann (1993), "The transformed rejection method for
    // generating Poisson random variables".
    let slam = rate.sqrt();
    let loglam = rate.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u: f64 = r.random::<f64>() - 0.5;
        let v: f64 = r.random();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + rate + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as i64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        if v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln() <= -rate + k * loglam - ln_factorial(k) {
            return k as i64;
        }
    }
}

/// `ln(k!)` by direct summation for small `k` and Stirling's series above.
fn ln_factorial(k: f64) -> f64 {
    if k < 10.0 {
        return (2..=k as u64).map(|i| (i as f64).ln()).sum();
    }
    let n = k + 1.0;
    (n - 0.5) * n.ln() - n + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * n)
        - 1.0 / (360.0 * n.powi(3))
        + 1.0 / (1260.0 * n.powi(5))
}

/// Evaluates a comparison between two ground values. Integers and reals
/// compare numerically; `dist_eq` on non-numbers is structural equality.
pub fn compare(rel: DistRel, a: &Term, b: &Term) -> Result<bool, DistError> {
    use std::cmp::Ordering::*;
    match (Num::from_term(a), Num::from_term(b)) {
        (Some(x), Some(y)) => {
            let Some(o) = num_cmp(x, y) else { return Ok(false) };
            Ok(match rel {
                DistRel::Eq => o == Equal,
                DistRel::Lt => o == Less,
                DistRel::Leq => o != Greater,
                DistRel::Gt => o == Greater,
                DistRel::Geq => o != Less,
            })
        }
        _ if rel == DistRel::Eq => Ok(a == b),
        _ => Err(DistError::NonNumericOrdering(a.clone(), b.clone())),
    }
}

/// Seeded pseudo-random stream: ChaCha8 with a 64-bit seed.
///
/// The stream for sample `i` of a run with master seed `s` is
/// `ChaCha8Rng::seed_from_u64(s)` switched to stream number `i`, so every
/// sample has its own independent sequence regardless of how samples are
/// distributed over workers.
#[derive(Clone, Debug)]
pub struct RandomSource {
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64) -> RandomSource {
        RandomSource { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// The documented split: stream `index` of the master seed.
    pub fn split(seed: u64, index: u64) -> RandomSource {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        RandomSource { rng }
    }
}

impl RngCore for RandomSource {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}
