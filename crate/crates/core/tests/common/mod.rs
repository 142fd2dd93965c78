//! Test corpus and reference oracles shared by the integration tests.

#![allow(dead_code)]

use std::collections::HashSet;

use dclp::builtins::{eval_ground, num_cmp, Num};
use dclp::distributions::compare;
use dclp::{apply, apply_atom, parse_atom, parse_evidence_lines, parse_program, unify, Atom, Evidence, Program, Substitution, Term};

pub struct Case {
    pub name: &'static str,
    pub src: &'static str,
    pub query: &'static str,
    pub evidence: &'static str,
}

impl Case {
    pub fn program(&self) -> Program {
        parse_program(self.src).unwrap_or_else(|e| panic!("{}: {e}", self.name))
    }

    pub fn query(&self) -> Atom {
        parse_atom(self.query).unwrap()
    }

    pub fn evidence(&self) -> Evidence {
        Evidence::new(parse_evidence_lines(self.evidence).unwrap()).unwrap()
    }
}

const fn case(name: &'static str, src: &'static str, query: &'static str, evidence: &'static str) -> Case {
    Case { name, src, query, evidence }
}

/// Programs without random variables.
pub const DETERMINISTIC: &[Case] = &[
    case("fact", "a :- b. b.", "a", ""),
    case("self-loop", "a :- a.", "a", ""),
    case(
        "path",
        "edge(1,2). edge(2,3). edge(3,4). path(X,Y) :- edge(X,Y). path(X,Y) :- edge(X,Z), path(Z,Y).",
        "path(1,4)",
        "",
    ),
    case(
        "path-back",
        "edge(1,2). edge(2,3). edge(3,4). path(X,Y) :- edge(X,Y). path(X,Y) :- edge(X,Z), path(Z,Y).",
        "path(4,1)",
        "",
    ),
    case("count", "nat(0). nat(N) :- nat(M), M < 5, N is M + 1.", "nat(5)", ""),
    case("count-past", "nat(0). nat(N) :- nat(M), M < 5, N is M + 1.", "nat(6)", ""),
    case("squares", "sq(X, Y) :- between(1, 4, X), Y is X * X.", "sq(3, 9)", ""),
    case(
        "ancestor",
        "parent(ann, bob). parent(bob, cat). anc(X,Y) :- parent(X,Y). anc(X,Y) :- parent(X,Z), anc(Z,Y).",
        "anc(ann, cat)",
        "",
    ),
    case(
        "parity",
        "even(0). odd(N) :- even(M), M < 6, N is M + 1. even(N) :- odd(M), M < 6, N is M + 1.",
        "even(4)",
        "",
    ),
    case("unpack", "items([a,b,c]). first(X) :- items(L), L = [X|_].", "first(a)", ""),
    case("constant-pf", "ok :- dist_lt(1, 2). bad :- dist_gt(1, 2).", "ok", ""),
    case("constant-pf-false", "ok :- dist_lt(1, 2). bad :- dist_gt(1, 2).", "bad", ""),
    case("filter", "q :- p(X), X > 3. p(1). p(5).", "q", ""),
    case("with-evidence", "a. b :- a.", "b", "+a."),
];

/// Programs whose random variables all have finite distributions.
pub const PROBABILISTIC: &[Case] = &[
    case("coin", "coin ~ [0.3:h, 0.7:t]. heads :- dist_eq(~(coin), h).", "heads", ""),
    case(
        "two-coins",
        "c1 ~ [0.5:h, 0.5:t]. c2 ~ [0.5:h, 0.5:t].
         both :- dist_eq(~(c1), h), dist_eq(~(c2), h).
         one :- dist_eq(~(c1), h). one :- dist_eq(~(c2), h).",
        "both",
        "+one.",
    ),
    case("die", "d ~ uniform(1..6). big :- dist_gt(~(d), 4).", "big", ""),
    case(
        "dice-equal",
        "die(1). die(2). d(I) ~ uniform(1..3) :- die(I). eq :- dist_eq(~(d(1)), ~(d(2))).",
        "eq",
        "",
    ),
    case(
        "alarm",
        "burglary ~ [0.1:t, 0.9:f]. earthquake ~ [0.2:t, 0.8:f].
         alarm :- dist_eq(~(burglary), t). alarm :- dist_eq(~(earthquake), t).",
        "dist_eq(~(burglary), t)",
        "+alarm.",
    ),
    case(
        "rain",
        "rain ~ [0.3:y, 0.7:n].
         wet ~ [0.9:y, 0.1:n] :- dist_eq(~(rain), y).
         wet ~ [0.2:y, 0.8:n] :- dist_eq(~(rain), n).",
        "dist_eq(~(rain), y)",
        "+dist_eq(~(wet), y).",
    ),
    case(
        "alarm-negative",
        "burglary ~ [0.1:t, 0.9:f]. earthquake ~ [0.2:t, 0.8:f].
         alarm :- dist_eq(~(burglary), t). alarm :- dist_eq(~(earthquake), t).",
        "dist_eq(~(earthquake), t)",
        "+alarm.\n-dist_eq(~(burglary), t).",
    ),
    case(
        "nested",
        "col(I) ~ [0.5:r, 0.5:g] :- between(1, 3, I). pick ~ uniform(1..3).
         red :- dist_eq(~(col(~(pick))), r).",
        "red",
        "+dist_eq(~(col(1)), r).",
    ),
    case("bounded", "n ~ uniform([1,2,3]). m ~ uniform(1..~(n)).", "dist_eq(~(m), 1)", ""),
    case("less", "a ~ uniform([1,2,3]). b ~ uniform([1,2,3]).", "dist_lt(~(a), ~(b))", "-dist_eq(~(a), 3)."),
    case("geq", "x ~ [0.2:1, 0.3:2, 0.5:3].", "dist_geq(~(x), 2)", "+dist_leq(~(x), 2)."),
    case(
        "chain",
        "s(0) ~ [0.5:a, 0.5:b]. t(1). t(2).
         s(T) ~ [0.9:a, 0.1:b] :- t(T), T0 is T - 1, dist_eq(~(s(T0)), a).
         s(T) ~ [0.1:a, 0.9:b] :- t(T), T0 is T - 1, dist_eq(~(s(T0)), b).",
        "dist_eq(~(s(0)), a)",
        "+dist_eq(~(s(2)), b).",
    ),
    case("irrelevant", "junk ~ uniform([1,2,3,4]). f ~ [0.6:x, 0.4:y].", "dist_eq(~(f), x)", ""),
    case(
        "random-graph",
        "pair(1,2). pair(2,3). pair(1,3).
         edge(A,B) ~ [0.6:y, 0.4:n] :- pair(A,B).
         conn(A,B) :- pair(A,B), dist_eq(~(edge(A,B)), y).
         path(A,B) :- conn(A,B). path(A,C) :- conn(A,B), path(B,C).",
        "path(1,3)",
        "",
    ),
    case(
        "small-urn",
        "nballs ~ uniform(1..3).
         ball(B) :- between(1, 3, B), dist_leq(B, ~(nballs)).
         color(B) ~ [0.5:g, 0.5:b] :- ball(B).
         drawn ~ uniform(1..~(nballs)).",
        "dist_eq(~(nballs), 1)",
        "+dist_eq(~(color(~(drawn))), g).",
    ),
    case(
        "small-nogreen",
        "numballs ~ uniform([1,2,3]).
         ball(M) :- between(1, 3, M), dist_leq(M, ~(numballs)).
         color(B) ~ uniform([red, green]) :- ball(B).
         draw(N) :- between(1, 2, N).
         drawnball(D) ~ uniform(1..~(numballs)) :- draw(D).
         nogreen(0).
         nogreen(D) :- draw(D), dist_eq(~(color(~(drawnball(D)))), red), D2 is D - 1, nogreen(D2).",
        "dist_eq(~(numballs), 1)",
        "+nogreen(2).",
    ),
    case(
        "sprinkler",
        "cloudy ~ [0.5:y, 0.5:n].
         sprinkler ~ [0.1:on, 0.9:off] :- dist_eq(~(cloudy), y).
         sprinkler ~ [0.5:on, 0.5:off] :- dist_eq(~(cloudy), n).
         rain ~ [0.8:y, 0.2:n] :- dist_eq(~(cloudy), y).
         rain ~ [0.2:y, 0.8:n] :- dist_eq(~(cloudy), n).
         wet :- dist_eq(~(sprinkler), on). wet :- dist_eq(~(rain), y).",
        "dist_eq(~(cloudy), y)",
        "+wet.",
    ),
    case(
        "not-all-tails",
        "coin(I) ~ [0.4:h, 0.6:t] :- between(1, 3, I).
         tails :- dist_eq(~(coin(1)), t), dist_eq(~(coin(2)), t), dist_eq(~(coin(3)), t).",
        "dist_eq(~(coin(1)), h)",
        "-tails.",
    ),
    case(
        "certain",
        "coin ~ [0.3:h, 0.7:t].",
        "dist_eq(~(coin), h)",
        "+dist_eq(~(coin), h).",
    ),
    case(
        "excluded",
        "y ~ uniform([a,b,c,d]). good :- dist_eq(~(y), a). good :- dist_eq(~(y), b).",
        "good",
        "-dist_eq(~(y), a).",
    ),
];

/// Cases with evidence on which the lookahead has something to prune.
pub const LOOKAHEAD: &[&str] = &["two-coins", "alarm", "small-nogreen", "sprinkler", "not-all-tails"];

/// Posterior over the urn size under a uniform prior on 1..=n_max: given n balls of which k are green, each draw
/// is observed green with probability (0.8k + 0.2(n - k)) / n.
pub fn urn_closed_form(n_max: u32, draws: i32) -> Vec<f64> {
    let choose = |n: u32, k: u32| (1..=k).fold(1.0, |acc, i| acc * f64::from(n + 1 - i) / f64::from(i));
    let unnorm: Vec<f64> = (1..=n_max)
        .map(|n| {
            (0..=n)
                .map(|k| {
                    let green = (0.8 * f64::from(k) + 0.2 * f64::from(n - k)) / f64::from(n);
                    choose(n, k) / 2f64.powi(n as i32) * green.powi(draws)
                })
                .sum::<f64>()
        })
        .collect();
    let z: f64 = unnorm.iter().sum();
    unnorm.into_iter().map(|u| u / z).collect()
}

pub fn by_name(name: &str) -> &'static Case {
    DETERMINISTIC.iter().chain(PROBABILISTIC).find(|c| c.name == name).unwrap()
}

fn solve_builtin(name: &str, args: &[Term], s: &Substitution) -> Vec<Substitution> {
    let arg = |i: usize| apply(s, &args[i]);
    let num = |t: &Term| -> Option<Num> { eval_ground(t).or_else(|| Num::from_term(t)) };
    let extend = |a: &Term, b: &Term| -> Option<Substitution> {
        let m = unify(a, b)?;
        let mut out = s.clone();
        for (v, t) in m.iter() {
            out.insert(*v, t.clone());
        }
        Some(out)
    };
    match name {
        "is" => num(&arg(1)).and_then(|v| extend(&arg(0), &v.to_term())).into_iter().collect(),
        "=" => extend(&arg(0), &arg(1)).into_iter().collect(),
        "between" => match (num(&arg(0)), num(&arg(1))) {
            (Some(Num::Int(lo)), Some(Num::Int(hi))) => {
                (lo..=hi).filter_map(|i| extend(&arg(2), &Term::Int(i))).collect()
            }
            _ => Vec::new(),
        },
        op => {
            let (Some(x), Some(y)) = (num(&arg(0)), num(&arg(1))) else { return Vec::new() };
            let Some(o) = num_cmp(x, y) else { return Vec::new() };
            use std::cmp::Ordering::*;
            let holds = match op {
                "<" => o == Less,
                ">" => o == Greater,
                "=<" => o != Greater,
                ">=" => o != Less,
                "=:=" => o == Equal,
                "=\\=" => o != Equal,
                _ => panic!("unexpected builtin {op}"),
            };
            if holds {
                vec![s.clone()]
            } else {
                Vec::new()
            }
        }
    }
}

/// Naive bottom-up least model of a program without random variables:
/// every clause is re-evaluated against the whole interpretation until
/// nothing changes.
pub fn naive_least_model(p: &Program) -> HashSet<Atom> {
    assert!(p.dist_clauses.is_empty());
    let mut model: HashSet<Atom> = HashSet::new();
    loop {
        let facts: Vec<Atom> = model.iter().cloned().collect();
        let mut next = model.clone();
        for c in &p.clauses {
            let mut partial = vec![Substitution::new()];
            for g in &c.body {
                let mut out = Vec::new();
                for s in &partial {
                    if let Some(rel) = g.dist_rel() {
                        let a = apply_atom(s, g);
                        if compare(rel, &a.args[0], &a.args[1]).unwrap_or(false) {
                            out.push(s.clone());
                        }
                    } else if p.is_builtin(g.key()) {
                        out.extend(solve_builtin(g.pred.as_str(), &g.args, s));
                    } else {
                        let goal = apply_atom(s, g).to_term();
                        for f in &facts {
                            if let Some(m) = unify(&goal, &f.to_term()) {
                                let mut ext = s.clone();
                                for (v, t) in m.iter() {
                                    ext.insert(*v, t.clone());
                                }
                                out.push(ext);
                            }
                        }
                    }
                }
                partial = out;
            }
            for s in partial {
                let h = apply_atom(&s, &c.head);
                assert!(h.is_ground(), "non-ground head {h} in {}", c);
                next.insert(h);
            }
        }
        if next.len() == model.len() {
            return model;
        }
        model = next;
    }
}
