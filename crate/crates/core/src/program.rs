//! Program representation: definite clauses, distributional clauses and
//! distribution templates.

use indexmap::IndexSet;

use crate::term::{Atom, PredKey, Symbol, Term, WK};

/// Builtins evaluated directly instead of through clauses, unless the program
/// defines a predicate of the same name and arity.
pub const BUILTINS: &[(&str, usize)] = &[
    ("is", 2),
    ("between", 3),
    ("<", 2),
    (">", 2),
    ("=<", 2),
    (">=", 2),
    ("=:=", 2),
    ("=\\=", 2),
    ("=", 2),
];

#[derive(Clone, Debug, PartialEq)]
pub struct Clause {
    pub head: Atom,
    pub body: Vec<Atom>,
    /// Display names of variables `0..n`.
    pub var_names: Vec<Symbol>,
}

impl Clause {
    pub fn new(head: Atom, body: Vec<Atom>) -> Clause {
        let mut clause = Clause { head, body, var_names: Vec::new() };
        clause.var_names = default_var_names(clause.num_vars());
        clause
    }

    pub fn num_vars(&self) -> u32 {
        std::iter::once(&self.head)
            .chain(&self.body)
            .filter_map(Atom::max_var)
            .max()
            .map_or(0, |m| m + 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DistKind {
    Categorical,
    UniformDiscrete,
    UniformContinuous,
    Poisson,
    Gamma,
}

impl DistKind {
    pub fn is_finite(self) -> bool {
        matches!(self, DistKind::Categorical | DistKind::UniformDiscrete)
    }

    pub fn is_continuous(self) -> bool {
        matches!(self, DistKind::UniformContinuous | DistKind::Gamma)
    }
}

/// Distribution as written in a clause head. Parameters may contain
/// variables, outcome terms and arithmetic; categorical parameters are
/// `Prob:Value` pairs.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DistributionTemplate {
    pub kind: DistKind,
    pub params: Vec<Term>,
}

impl DistributionTemplate {
    /// Term form used in `h ~ D` atoms and for printing.
    pub fn to_term(&self) -> Term {
        match self.kind {
            DistKind::Categorical => Term::list(self.params.clone()),
            DistKind::UniformDiscrete | DistKind::UniformContinuous => {
                Term::compound("uniform", self.params.clone())
            }
            DistKind::Poisson => Term::compound("poisson", self.params.clone()),
            DistKind::Gamma => Term::compound("gamma", self.params.clone()),
        }
    }

    pub fn from_term(t: &Term) -> Result<DistributionTemplate, String> {
        if let Some(items) = t.as_list() {
            for item in &items {
                match item {
                    Term::Compound(f, args) if *f == WK.colon && args.len() == 2 => {}
                    _ => return Err(format!("categorical entry `{item}` is not of the form P:Value")),
                }
            }
            if items.is_empty() {
                return Err("empty categorical distribution".into());
            }
            let literal: Option<Vec<f64>> = items.iter().map(|i| i.args()[0].as_f64()).collect();
            if let Some(probs) = literal {
                if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                    return Err(format!("categorical probability {p} outside [0,1]"));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(format!("categorical probabilities sum to {total}, not 1"));
                }
            }
            return Ok(DistributionTemplate { kind: DistKind::Categorical, params: items });
        }
        let (name, arity) = t.functor().ok_or_else(|| format!("`{t}` is not a distribution"))?;
        let kind = match (name.as_str(), arity) {
            ("uniform", 1) => DistKind::UniformDiscrete,
            ("uniform", 2) => DistKind::UniformContinuous,
            ("poisson", 1) => DistKind::Poisson,
            ("gamma", 2) => DistKind::Gamma,
            _ => return Err(format!("unknown distribution constructor {name}/{arity}")),
        };
        Ok(DistributionTemplate { kind, params: t.args().to_vec() })
    }

    pub fn map_terms(&self, mut f: impl FnMut(&Term) -> Term) -> DistributionTemplate {
        DistributionTemplate { kind: self.kind, params: self.params.iter().map(&mut f).collect() }
    }
}

/// `rv ~ dist :- body.`
#[derive(Clone, Debug, PartialEq)]
pub struct DistributionalClause {
    pub rv: Term,
    pub dist: DistributionTemplate,
    pub body: Vec<Atom>,
    pub var_names: Vec<Symbol>,
}

impl DistributionalClause {
    pub fn new(rv: Term, dist: DistributionTemplate, body: Vec<Atom>) -> DistributionalClause {
        let mut clause = DistributionalClause { rv, dist, body, var_names: Vec::new() };
        clause.var_names = default_var_names(clause.num_vars());
        clause
    }

    /// The head as the atom `~(rv, dist)`.
    pub fn head_atom(&self) -> Atom {
        Atom::new(WK.tilde, vec![self.rv.clone(), self.dist.to_term()])
    }

    pub fn num_vars(&self) -> u32 {
        let head = self.head_atom();
        std::iter::once(&head)
            .chain(&self.body)
            .filter_map(Atom::max_var)
            .max()
            .map_or(0, |m| m + 1)
    }
}

pub(crate) fn default_var_names(n: u32) -> Vec<Symbol> {
    (0..n).map(|i| Symbol::intern(&format!("_G{i}"))).collect()
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Program {
    pub clauses: Vec<Clause>,
    pub dist_clauses: Vec<DistributionalClause>,
    /// Builtins in effect: [`BUILTINS`] minus predicates the program defines.
    pub builtin_whitelist: IndexSet<PredKey>,
}

impl Program {
    pub fn new(clauses: Vec<Clause>, dist_clauses: Vec<DistributionalClause>) -> Program {
        let defined: IndexSet<PredKey> = clauses.iter().map(|c| c.head.key()).collect();
        let builtin_whitelist = BUILTINS
            .iter()
            .map(|&(n, a)| PredKey::new(n, a))
            .filter(|k| !defined.contains(k))
            .collect();
        Program { clauses, dist_clauses, builtin_whitelist }
    }

    pub fn is_builtin(&self, key: PredKey) -> bool {
        self.builtin_whitelist.contains(&key)
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty() && self.dist_clauses.is_empty()
    }

    /// Predicates defined by ordinary clauses, in order of first definition.
    pub fn defined_predicates(&self) -> IndexSet<PredKey> {
        self.clauses.iter().map(|c| c.head.key()).collect()
    }

    pub fn is_deterministic(&self) -> bool {
        self.dist_clauses.is_empty()
    }
}

/// Positive and negative evidence atoms.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Evidence {
    pub positive: IndexSet<Atom>,
    pub negative: IndexSet<Atom>,
}

impl Evidence {
    /// Builds evidence from `(is_positive, atom)` pairs. Atoms must be
    /// ground and no atom may be both positive and negative.
    pub fn new(items: impl IntoIterator<Item = (bool, Atom)>) -> Result<Evidence, String> {
        let mut e = Evidence::default();
        for (positive, atom) in items {
            if !atom.is_ground() {
                return Err(format!("evidence atom `{atom}` is not ground"));
            }
            if positive {
                e.positive.insert(atom);
            } else {
                e.negative.insert(atom);
            }
        }
        if let Some(a) = e.positive.iter().find(|a| e.negative.contains(*a)) {
            return Err(format!("`{a}` is both positive and negative evidence"));
        }
        Ok(e)
    }

    pub fn is_empty(&self) -> bool {
        self.positive.is_empty() && self.negative.is_empty()
    }

    /// All evidence atoms, positive first.
    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.positive.iter().chain(&self.negative)
    }
}
