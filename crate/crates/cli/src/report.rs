//! JSON and CSV renderings of results.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;
use std::time::Duration;

use serde_json::{json, Value};

use dclp::engine::{Convergence, Estimate, Evaluation, OracleResult, Posterior, SamplerConfig};
use dclp::experiments::{Cell, Experiment, Table};
use dclp::validate::ValidationReport;

use super::EvaluateArgs;

pub const SCHEMA: u32 = 1;

/// One evaluation together with the configuration that produced it.
pub struct RunResult {
    estimate: Option<f64>,
    std_error: Option<f64>,
    n_plus: f64,
    n_minus: f64,
    samples: u64,
    accepted: u64,
    acceptance_rate: f64,
    wall_time_ms: f64,
    seed: u64,
    program: String,
    query: String,
    evidence: Option<String>,
    method: &'static str,
    depth: u32,
    max_samples: u64,
    workers: usize,
    convergence: String,
    posteriors: Vec<Posterior>,
}

const NO_ACCEPTED: &str = "no-accepted-samples";

const CSV_HEADER: [&str; 17] = [
    "estimate",
    "std_error",
    "n_plus",
    "n_minus",
    "samples",
    "accepted",
    "acceptance_rate",
    "wall_time_ms",
    "seed",
    "program",
    "query",
    "evidence",
    "method",
    "depth",
    "max_samples",
    "workers",
    "convergence",
];

fn convergence_name(c: Convergence) -> String {
    match c {
        Convergence::Fixed => "fixed".into(),
        Convergence::StderrBelow(tau) => format!("stderr:{tau}"),
    }
}

fn posteriors_json(ps: &[Posterior]) -> Value {
    ps.iter()
        .map(|p| {
            let values: Vec<Value> = p
                .values
                .iter()
                .map(|(v, m)| json!({ "value": v.to_string(), "probability": m }))
                .collect();
            json!({ "rv": p.rv.to_string(), "values": values })
        })
        .collect()
}

impl RunResult {
    pub fn new(ev: &Evaluation, elapsed: Duration, args: &EvaluateArgs, cfg: &SamplerConfig) -> RunResult {
        let s = &ev.state;
        RunResult {
            estimate: match ev.estimate {
                Estimate::Value(v) => Some(v),
                Estimate::NoAcceptedSamples => None,
            },
            std_error: s.std_error(),
            n_plus: s.n_plus,
            n_minus: s.n_minus,
            samples: s.samples_drawn,
            accepted: s.accepted,
            acceptance_rate: s.acceptance_rate(),
            wall_time_ms: elapsed.as_secs_f64() * 1000.0,
            seed: cfg.seed,
            program: args.program.display().to_string(),
            query: args.q.query.clone(),
            evidence: args.q.evidence.as_ref().map(|p| p.display().to_string()),
            method: cfg.mode.name(),
            depth: cfg.depth,
            max_samples: cfg.max_samples,
            workers: cfg.workers,
            convergence: convergence_name(cfg.convergence),
            posteriors: ev.posteriors.clone(),
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "schema": SCHEMA,
            "estimate": self.estimate.map_or(json!(NO_ACCEPTED), |v| json!(v)),
            "std_error": self.std_error,
            "n_plus": self.n_plus,
            "n_minus": self.n_minus,
            "samples": self.samples,
            "accepted": self.accepted,
            "acceptance_rate": self.acceptance_rate,
            "wall_time_ms": self.wall_time_ms,
            "seed": self.seed,
            "config": {
                "program": self.program,
                "query": self.query,
                "evidence": self.evidence,
                "method": self.method,
                "depth": self.depth,
                "samples": self.max_samples,
                "workers": self.workers,
                "convergence": self.convergence,
            },
            "posteriors": posteriors_json(&self.posteriors),
        })
    }

    fn csv_record(&self) -> Vec<String> {
        let opt = |x: Option<f64>| x.map_or_else(String::new, |v| v.to_string());
        vec![
            self.estimate.map_or_else(|| NO_ACCEPTED.to_string(), |v| v.to_string()),
            opt(self.std_error),
            self.n_plus.to_string(),
            self.n_minus.to_string(),
            self.samples.to_string(),
            self.accepted.to_string(),
            self.acceptance_rate.to_string(),
            self.wall_time_ms.to_string(),
            self.seed.to_string(),
            self.program.clone(),
            self.query.clone(),
            self.evidence.clone().unwrap_or_default(),
            self.method.to_string(),
            self.depth.to_string(),
            self.max_samples.to_string(),
            self.workers.to_string(),
            self.convergence.clone(),
        ]
    }

    pub fn write_csv<W: Write>(&self, w: &mut csv::Writer<W>, header: bool) -> csv::Result<()> {
        if header {
            w.write_record(CSV_HEADER)?;
        }
        w.write_record(self.csv_record())?;
        w.flush()?;
        Ok(())
    }
}

/// Appends `r` to the CSV file at `path`, writing the header first when
/// the file is new or empty.
pub fn append_csv(path: &Path, r: &RunResult) -> csv::Result<()> {
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let empty = file.metadata()?.len() == 0;
    let mut w = csv::Writer::from_writer(file);
    r.write_csv(&mut w, empty)
}

pub fn validation_json(r: &ValidationReport) -> Value {
    let ranks = r.predicate_rank.as_ref().map(|ranks| {
        ranks.iter().map(|(k, v)| (k.to_string(), json!(v))).collect::<serde_json::Map<_, _>>()
    });
    json!({
        "schema": SCHEMA,
        "valid": r.is_valid(),
        "errors": r.errors,
        "warnings": r.warnings,
        "ranks": ranks,
    })
}

pub fn oracle_json(r: &OracleResult) -> Value {
    json!({
        "schema": SCHEMA,
        "p_query_and_evidence": r.p_query_and_evidence,
        "p_evidence": r.p_evidence,
        "p_query_given_evidence": r.conditional(),
        "worlds": r.worlds,
        "posteriors": posteriors_json(&r.posteriors),
    })
}

pub fn write_table<W: Write>(out: W, t: &Table) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&t.header)?;
    for row in &t.rows {
        w.write_record(row.iter().map(Cell::to_string))?;
    }
    w.flush()?;
    Ok(())
}

fn cell_json(c: &Cell) -> Value {
    match c {
        Cell::Int(i) => json!(i),
        Cell::Real(r) => json!(r),
        Cell::Text(s) => json!(s),
        Cell::Missing => Value::Null,
    }
}

pub fn table_json(exp: Experiment, t: &Table) -> Value {
    let rows: Vec<Value> = t
        .rows
        .iter()
        .map(|row| {
            let obj: serde_json::Map<String, Value> =
                t.header.iter().zip(row).map(|(h, c)| (h.to_string(), cell_json(c))).collect();
            Value::Object(obj)
        })
        .collect();
    json!({ "schema": SCHEMA, "experiment": exp.name(), "rows": rows })
}
