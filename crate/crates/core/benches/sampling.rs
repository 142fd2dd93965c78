//! Sequential against data-parallel sampling on the shipped programs.
//!
//! Without the `parallel` feature both variants take the sequential path.

use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use dclp::engine::{evaluate, Mode, SamplerConfig};
use dclp::programs::{nogreen_evidence, NOGREEN, NOGREEN_QUERY, URN, URN_EVIDENCE};
use dclp::{parse_atom, parse_evidence_lines, parse_program, Atom, Evidence, Program};

struct Workload {
    name: &'static str,
    program: Program,
    query: Atom,
    evidence: Evidence,
    mode: Mode,
    depth: u32,
    samples: u64,
}

fn workloads() -> Vec<Workload> {
    let ev = |src: &str| Evidence::new(parse_evidence_lines(src).unwrap()).unwrap();
    vec![
        Workload {
            name: "urn-lw",
            program: parse_program(URN).unwrap(),
            query: parse_atom("dist_eq(~(nballs), 1)").unwrap(),
            evidence: ev(URN_EVIDENCE),
            mode: Mode::LikelihoodWeighting,
            depth: 0,
            samples: 256,
        },
        Workload {
            name: "nogreen8-depth8",
            program: parse_program(NOGREEN).unwrap(),
            query: parse_atom(NOGREEN_QUERY).unwrap(),
            evidence: ev(&nogreen_evidence(8)),
            mode: Mode::LikelihoodWeighting,
            depth: 8,
            samples: 256,
        },
    ]
}

fn sampling(c: &mut Criterion) {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get()).max(2);
    for w in workloads() {
        let mut group = c.benchmark_group(w.name);
        group.sample_size(10).measurement_time(Duration::from_secs(20));
        for (label, workers) in [("sequential", 1), ("parallel", cores)] {
            let cfg = SamplerConfig { mode: w.mode, depth: w.depth, max_samples: w.samples, workers, ..Default::default() };
            group.bench_with_input(BenchmarkId::new(label, workers), &cfg, |b, cfg| {
                b.iter(|| black_box(evaluate(&w.program, &w.query, &w.evidence, cfg).unwrap()))
            });
        }
        group.finish();
    }
}

criterion_group!(benches, sampling);
criterion_main!(benches);
