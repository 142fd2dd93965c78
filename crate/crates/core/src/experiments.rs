//! Parameter sweeps over the shipped programs, reported as plain tables.
//!
//! `nogreen-sweep` measures acceptance rates of the nogreen program over
//! the number of observed draws and the lookahead depth. `urn-uniform` and
//! `urn-poisson` estimate the posterior over the number of balls in the
//! urn for each sampling method.

use std::fmt;
use std::str::FromStr;

use crate::engine::{evaluate, EngineError, Mode, SamplerConfig};
use crate::parser::{parse_atom, parse_evidence_lines, parse_program, parse_term};
use crate::program::Evidence;
use crate::programs;
use crate::term::Term;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    NogreenSweep,
    UrnUniform,
    UrnPoisson,
}

impl Experiment {
    pub const ALL: [Experiment; 3] = [Experiment::NogreenSweep, Experiment::UrnUniform, Experiment::UrnPoisson];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::NogreenSweep => "nogreen-sweep",
            Experiment::UrnUniform => "urn-uniform",
            Experiment::UrnPoisson => "urn-poisson",
        }
    }

    pub fn default_samples(self) -> u64 {
        match self {
            Experiment::NogreenSweep => 200,
            Experiment::UrnUniform => 20_000,
            Experiment::UrnPoisson => 100_000,
        }
    }

    pub fn default_methods(self) -> Vec<Mode> {
        match self {
            Experiment::NogreenSweep => vec![Mode::LikelihoodWeighting],
            _ => vec![Mode::Rejection, Mode::LikelihoodWeighting],
        }
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Experiment, String> {
        Experiment::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Experiment::ALL.iter().map(|e| e.name()).collect();
            format!("unknown experiment `{s}`; expected one of {}", names.join(", "))
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOptions {
    /// Samples per run; the experiment's default when `None`.
    pub samples: Option<u64>,
    /// Independent runs per cell. Run `r` uses seed `seed + r`.
    pub repeats: u32,
    pub seed: u64,
    pub workers: usize,
    /// Methods to sweep; the experiment's default when empty.
    pub methods: Vec<Mode>,
    /// Depths for `nogreen-sweep`; `1..=8` when empty.
    pub depths: Vec<u32>,
    /// Numbers of observed draws for `nogreen-sweep`; `1..=8` when empty.
    pub draws: Vec<u32>,
    /// Lookahead depth for the urn experiments.
    pub depth: u32,
}

impl Default for ExperimentOptions {
    fn default() -> ExperimentOptions {
        ExperimentOptions {
            samples: None,
            repeats: 5,
            seed: 0,
            workers: 1,
            methods: Vec::new(),
            depths: Vec::new(),
            draws: Vec::new(),
            depth: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
    Missing,
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(i) => write!(f, "{i}"),
            Cell::Real(r) => write!(f, "{r}"),
            Cell::Text(s) => f.write_str(s),
            Cell::Missing => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| *h == name)
    }
}

/// Mean and sample standard deviation; the deviation is 0 for fewer than
/// two values.
pub fn mean_std(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return Some((mean, 0.0));
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((mean, var.sqrt()))
}

fn real_or_missing(x: Option<f64>) -> Cell {
    x.map_or(Cell::Missing, Cell::Real)
}

/// Exact posterior over the number of balls (1 to 8) of the uniform urn
/// given ten green observations, summing over the number of green balls.
pub fn urn_uniform_exact() -> [f64; 8] {
    let mut post = [0.0; 8];
    for (i, slot) in post.iter_mut().enumerate() {
        let n = i as i32 + 1;
        let mut binom = 1.0;
        let mut lik = 0.0;
        for k in 0..=n {
            let green = (f64::from(k) * 0.8 + f64::from(n - k) * 0.2) / f64::from(n);
            lik += binom / 2f64.powi(n) * green.powi(10);
            binom = binom * f64::from(n - k) / f64::from(k + 1);
        }
        *slot = lik / 8.0;
    }
    let total: f64 = post.iter().sum();
    post.map(|p| p / total)
}

fn evidence(src: &str) -> Evidence {
    Evidence::new(parse_evidence_lines(src).expect("shipped evidence parses")).expect("shipped evidence is ground")
}

pub fn run(exp: Experiment, opts: &ExperimentOptions) -> Result<Table, EngineError> {
    match exp {
        Experiment::NogreenSweep => nogreen_sweep(opts),
        Experiment::UrnUniform => urn(opts, exp, programs::URN, Some(urn_uniform_exact().to_vec())),
        Experiment::UrnPoisson => urn(opts, exp, programs::URN_POISSON, None),
    }
}

fn methods(exp: Experiment, opts: &ExperimentOptions) -> Vec<Mode> {
    if opts.methods.is_empty() {
        exp.default_methods()
    } else {
        opts.methods.clone()
    }
}

fn or_range(xs: &[u32]) -> Vec<u32> {
    if xs.is_empty() {
        (1..=8).collect()
    } else {
        xs.to_vec()
    }
}

fn nogreen_sweep(opts: &ExperimentOptions) -> Result<Table, EngineError> {
    let exp = Experiment::NogreenSweep;
    let program = parse_program(programs::NOGREEN).expect("shipped program parses");
    let query = parse_atom(programs::NOGREEN_QUERY).expect("shipped query parses");
    let samples = opts.samples.unwrap_or(exp.default_samples());
    let mut rows = Vec::new();
    for method in methods(exp, opts) {
        for d in or_range(&opts.draws) {
            let e = evidence(&programs::nogreen_evidence(d));
            for depth in or_range(&opts.depths) {
                let mut estimates = Vec::new();
                let mut rates = Vec::new();
                for r in 0..opts.repeats {
                    let cfg = SamplerConfig {
                        mode: method,
                        depth,
                        max_samples: samples,
                        seed: opts.seed + u64::from(r),
                        workers: opts.workers,
                        ..Default::default()
                    };
                    let ev = evaluate(&program, &query, &e, &cfg)?;
                    estimates.extend(ev.estimate.value());
                    rates.push(ev.state.acceptance_rate());
                }
                let est = mean_std(&estimates);
                let acc = mean_std(&rates);
                rows.push(vec![
                    Cell::Int(d.into()),
                    Cell::Int(depth.into()),
                    Cell::Text(method.name().into()),
                    Cell::Int(samples as i64),
                    Cell::Int(opts.repeats.into()),
                    real_or_missing(est.map(|m| m.0)),
                    real_or_missing(est.map(|m| m.1)),
                    real_or_missing(acc.map(|m| m.0)),
                    real_or_missing(acc.map(|m| m.1)),
                ]);
            }
        }
    }
    Ok(Table {
        header: vec![
            "d",
            "depth",
            "method",
            "samples",
            "repeats",
            "mean_estimate",
            "std_estimate",
            "acceptance_rate",
            "std_acceptance_rate",
        ],
        rows,
    })
}

fn urn(opts: &ExperimentOptions, exp: Experiment, src: &str, exact: Option<Vec<f64>>) -> Result<Table, EngineError> {
    let program = parse_program(src).expect("shipped program parses");
    let e = evidence(programs::URN_EVIDENCE);
    let nballs = parse_term("nballs").expect("term parses");
    let query = parse_atom("dist_eq(~(nballs), 1)").expect("atom parses");
    let samples = opts.samples.unwrap_or(exp.default_samples());
    let mut rows = Vec::new();
    for method in methods(exp, opts) {
        let mut runs = Vec::new();
        let mut rates = Vec::new();
        for r in 0..opts.repeats {
            let cfg = SamplerConfig {
                mode: method,
                depth: opts.depth,
                max_samples: samples,
                seed: opts.seed + u64::from(r),
                workers: opts.workers,
                track: vec![nballs.clone()],
                ..Default::default()
            };
            let ev = evaluate(&program, &query, &e, &cfg)?;
            rates.push(ev.state.acceptance_rate());
            if ev.estimate.value().is_some() {
                runs.push(ev.posteriors.into_iter().next().expect("one tracked variable"));
            }
        }
        let largest = runs
            .iter()
            .flat_map(|p| p.values.iter().filter_map(|(v, _)| v.as_f64()))
            .fold(0.0f64, f64::max) as i64;
        let top = match &exact {
            Some(x) => x.len() as i64,
            None => largest,
        };
        let acc = mean_std(&rates).map(|m| m.0);
        for n in 1..=top {
            let masses: Vec<f64> = runs.iter().map(|p| p.get(&Term::Int(n))).collect();
            let est = mean_std(&masses);
            rows.push(vec![
                Cell::Text(method.name().into()),
                Cell::Int(n),
                Cell::Int(samples as i64),
                Cell::Int(opts.repeats.into()),
                real_or_missing(est.map(|m| m.0)),
                real_or_missing(est.map(|m| m.1)),
                real_or_missing(acc),
                real_or_missing(exact.as_ref().map(|x| x[n as usize - 1])),
            ]);
        }
    }
    Ok(Table {
        header: vec!["method", "nballs", "samples", "repeats", "mean_posterior", "std_posterior", "acceptance_rate", "exact"],
        rows,
    })
}
