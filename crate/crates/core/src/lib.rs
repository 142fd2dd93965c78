//! Probabilistic logic programming with distributional clauses.
//!
//! Programs are parsed, validated, rewritten with the probabilistic magic
//! set transformation, and queried by sampled forward chaining with
//! rejection sampling or likelihood weighting and a depth-bounded
//! lookahead.

mod bindings;
pub mod builtins;
pub mod distributions;
pub mod engine;
pub mod experiments;
pub mod magic;
pub mod parser;
pub mod pretty;
pub mod programs;
pub mod validate;
pub mod program;
pub mod term;

pub use parser::{parse_atom, parse_evidence_lines, parse_program, parse_term, parse_terms, ParseError};
pub use program::{Clause, Evidence, DistKind, DistributionTemplate, DistributionalClause, Program};
pub use term::{apply, apply_atom, is_probabilistic_fact, unify, Atom, DistRel, PredKey, Substitution, Symbol, Term, Var};
