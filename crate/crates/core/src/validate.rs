//! Static validation: distribution stratification at the predicate level,
//! range restriction of distribution parameters, and advisory warnings.

use std::collections::HashSet;
use std::fmt;

use indexmap::IndexMap;
use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use crate::program::{DistKind, Program};
use crate::term::{Atom, PredKey, Symbol, Term, Var};

/// A node of the ranking: an ordinary predicate, or the `h ~ D` relation
/// of one kind of random variable (functor and arity of `h`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RankKey {
    Pred(PredKey),
    RandomVar(PredKey),
}

impl fmt::Display for RankKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RankKey::Pred(k) => write!(f, "{k}"),
            RankKey::RandomVar(k) => write!(f, "{k} ~ _"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
    /// Present iff no stratification error was found.
    pub predicate_rank: Option<IndexMap<RankKey, usize>>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }
}

fn rv_key(rv: &Term) -> Option<PredKey> {
    rv.functor().map(|(name, arity)| PredKey { name, arity })
}

/// Kinds of random variables named by outcome terms inside `t`, including
/// nested ones.
fn outcome_kinds(t: &Term, out: &mut Vec<PredKey>) {
    match t {
        Term::Outcome(inner) => {
            if let Some(k) = rv_key(inner) {
                if !out.contains(&k) {
                    out.push(k);
                }
            }
            outcome_kinds(inner, out);
        }
        Term::Compound(_, args) => args.iter().for_each(|a| outcome_kinds(a, out)),
        _ => {}
    }
}

fn atom_outcome_kinds(a: &Atom) -> Vec<PredKey> {
    let mut out = Vec::new();
    a.args.iter().for_each(|t| outcome_kinds(t, &mut out));
    out
}

#[derive(Default)]
struct RankGraph {
    graph: DiGraph<RankKey, bool>,
    nodes: IndexMap<RankKey, NodeIndex>,
}

impl RankGraph {
    fn node(&mut self, k: RankKey) -> NodeIndex {
        if let Some(&n) = self.nodes.get(&k) {
            return n;
        }
        let n = self.graph.add_node(k);
        self.nodes.insert(k, n);
        n
    }

    /// Records `rank(hi) >= rank(lo)`, strictly when `strict`.
    fn edge(&mut self, hi: RankKey, lo: RankKey, strict: bool) {
        let (a, b) = (self.node(hi), self.node(lo));
        match self.graph.find_edge(a, b) {
            Some(e) => self.graph[e] |= strict,
            None => {
                self.graph.add_edge(a, b, strict);
            }
        }
    }
}

pub fn validate(p: &Program) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut g = RankGraph::default();

    let body_nodes = |g: &mut RankGraph, head: RankKey, body: &[Atom], strict: bool| {
        for b in body {
            if b.dist_rel().is_none() && !p.is_builtin(b.key()) {
                g.edge(head, RankKey::Pred(b.key()), strict);
            }
            for k in atom_outcome_kinds(b) {
                g.edge(head, RankKey::RandomVar(k), strict);
            }
        }
    };

    for c in &p.clauses {
        let head = RankKey::Pred(c.head.key());
        g.node(head);
        body_nodes(&mut g, head, &c.body, false);
        for k in atom_outcome_kinds(&c.head) {
            g.edge(head, RankKey::RandomVar(k), false);
        }
    }
    for d in &p.dist_clauses {
        let Some(key) = rv_key(&d.rv) else { continue };
        let head = RankKey::RandomVar(key);
        g.node(head);
        body_nodes(&mut g, head, &d.body, true);
        let mut kinds = Vec::new();
        outcome_kinds(&d.rv, &mut kinds);
        d.dist.params.iter().for_each(|t| outcome_kinds(t, &mut kinds));
        for k in kinds {
            g.edge(head, RankKey::RandomVar(k), true);
        }
    }

    // tarjan_scc yields components with dependencies before dependents
    let sccs = tarjan_scc(&g.graph);
    let mut component = vec![0usize; g.graph.node_count()];
    for (i, scc) in sccs.iter().enumerate() {
        for n in scc {
            component[n.index()] = i;
        }
    }
    let mut cyclic = false;
    for scc in &sccs {
        let members: HashSet<NodeIndex> = scc.iter().copied().collect();
        let strict_inside = g.graph.edge_indices().find(|&e| {
            let (a, b) = g.graph.edge_endpoints(e).unwrap();
            g.graph[e] && members.contains(&a) && members.contains(&b)
        });
        if let Some(e) = strict_inside {
            cyclic = true;
            let (a, b) = g.graph.edge_endpoints(e).unwrap();
            let mut names: Vec<String> = scc.iter().map(|n| g.graph[*n].to_string()).collect();
            names.sort();
            report.errors.push(format!(
                "not distribution-stratified: {} must rank strictly above {}, but they depend on each other through the cycle {{{}}}",
                g.graph[a],
                g.graph[b],
                names.join(", ")
            ));
        }
    }

    if !cyclic {
        let mut comp_rank = vec![0usize; sccs.len()];
        for (i, scc) in sccs.iter().enumerate() {
            let mut r = 0;
            for n in scc {
                for e in g.graph.edges(*n) {
                    use petgraph::visit::EdgeRef;
                    let j = component[e.target().index()];
                    if j != i {
                        r = r.max(comp_rank[j] + usize::from(*e.weight()));
                    }
                }
            }
            comp_rank[i] = r;
        }
        let ranks = g.nodes.iter().map(|(k, n)| (*k, comp_rank[component[n.index()]])).collect();
        report.predicate_rank = Some(ranks);
    }

    range_restriction(p, &mut report);
    builtin_outcomes(p, &mut report);
    continuous_equalities(p, &mut report);

    if !p.dist_clauses.is_empty() {
        report.warnings.push(
            "each ground random variable must have a single distribution; this is checked while sampling".into(),
        );
        report.warnings.push(
            "measurability of probabilistic facts and finite support of derived atoms are assumed, not verified"
                .into(),
        );
    }
    report
}

fn var_name(names: &[Symbol], v: Var) -> String {
    names.get(v.0 as usize).map_or_else(|| format!("_G{}", v.0), |s| s.as_str().to_owned())
}

fn range_restriction(p: &Program, report: &mut ValidationReport) {
    for d in &p.dist_clauses {
        let mut bound = d.rv.vars();
        for b in &d.body {
            b.args.iter().for_each(|t| t.collect_vars(&mut bound));
        }
        let mut dist_vars = Vec::new();
        d.dist.params.iter().for_each(|t| t.collect_vars(&mut dist_vars));
        for v in dist_vars {
            if !bound.contains(&v) {
                report.errors.push(format!(
                    "variable {} in the distribution of `{}` occurs neither in the random variable nor in the body",
                    var_name(&d.var_names, v),
                    crate::pretty::term_to_string(&d.rv, &d.var_names)
                ));
            }
        }
    }
}

fn builtin_outcomes(p: &Program, report: &mut ValidationReport) {
    let bodies = p.clauses.iter().flat_map(|c| &c.body).chain(p.dist_clauses.iter().flat_map(|d| &d.body));
    let mut seen = HashSet::new();
    for b in bodies {
        if p.is_builtin(b.key()) && b.args.iter().any(Term::contains_outcome) && seen.insert(b.key()) {
            report.warnings.push(format!(
                "builtin {} is applied to an outcome term and will never succeed; compare outcomes with dist_eq/dist_lt/dist_leq/dist_gt/dist_geq",
                b.key()
            ));
        }
    }
}

fn continuous_equalities(p: &Program, report: &mut ValidationReport) {
    let continuous: HashSet<PredKey> = p
        .dist_clauses
        .iter()
        .filter(|d| matches!(d.dist.kind, DistKind::UniformContinuous | DistKind::Gamma))
        .filter_map(|d| rv_key(&d.rv))
        .collect();
    let is_continuous_outcome = |t: &Term| match t {
        Term::Outcome(inner) => rv_key(inner).is_some_and(|k| continuous.contains(&k)),
        _ => false,
    };
    let bodies = p.clauses.iter().flat_map(|c| &c.body).chain(p.dist_clauses.iter().flat_map(|d| &d.body));
    for b in bodies {
        if b.dist_rel() == Some(crate::term::DistRel::Eq)
            && is_continuous_outcome(&b.args[0])
            && is_continuous_outcome(&b.args[1])
        {
            report.warnings.push(format!(
                "`{b}` compares two continuous outcomes for equality, which almost surely fails"
            ));
        }
    }
}
