//! Arithmetic and the builtin predicates `is/2`, `between/3`, comparisons
//! and `=/2`.
//!
//! A builtin whose arguments are not sufficiently instantiated, or that
//! meets an outcome term where it needs a number, simply has no solutions.

use std::ops::ControlFlow;

use crate::bindings::Bindings;
use crate::term::Term;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Num {
    Int(i64),
    Real(f64),
}

impl Num {
    pub fn to_term(self) -> Term {
        match self {
            Num::Int(i) => Term::Int(i),
            Num::Real(r) => Term::Real(r),
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Num::Int(i) => i as f64,
            Num::Real(r) => r,
        }
    }

    pub fn from_term(t: &Term) -> Option<Num> {
        match t {
            Term::Int(i) => Some(Num::Int(*i)),
            Term::Real(r) => Some(Num::Real(*r)),
            _ => None,
        }
    }
}

/// Compares two numbers, exactly for two integers and as reals otherwise.
pub fn num_cmp(a: Num, b: Num) -> Option<std::cmp::Ordering> {
    match (a, b) {
        (Num::Int(x), Num::Int(y)) => Some(x.cmp(&y)),
        _ => a.as_f64().partial_cmp(&b.as_f64()),
    }
}

fn int_or_real(a: Num, b: Num, int: fn(i64, i64) -> Option<i64>, real: fn(f64, f64) -> f64) -> Option<Num> {
    match (a, b) {
        (Num::Int(x), Num::Int(y)) => int(x, y).map(Num::Int),
        _ => Some(Num::Real(real(a.as_f64(), b.as_f64()))),
    }
}

/// Evaluates an arithmetic expression; `None` when it is unbound, not
/// numeric, or undefined (division by zero, overflow).
pub(crate) fn eval(t: &Term, b: &Bindings) -> Option<Num> {
    let t = b.deref(t);
    match t {
        Term::Int(i) => Some(Num::Int(*i)),
        Term::Real(r) => Some(Num::Real(*r)),
        Term::Compound(f, args) if args.len() == 1 => {
            let x = eval(&args[0], b)?;
            match f.as_str() {
                "-" => match x {
                    Num::Int(i) => i.checked_neg().map(Num::Int),
                    Num::Real(r) => Some(Num::Real(-r)),
                },
                "abs" => match x {
                    Num::Int(i) => i.checked_abs().map(Num::Int),
                    Num::Real(r) => Some(Num::Real(r.abs())),
                },
                "float" => Some(Num::Real(x.as_f64())),
                "sqrt" => Some(Num::Real(x.as_f64().sqrt())),
                "exp" => Some(Num::Real(x.as_f64().exp())),
                "log" => Some(Num::Real(x.as_f64().ln())),
                _ => None,
            }
        }
        Term::Compound(f, args) if args.len() == 2 => {
            let x = eval(&args[0], b)?;
            let y = eval(&args[1], b)?;
            match f.as_str() {
                "+" => int_or_real(x, y, i64::checked_add, |a, b| a + b),
                "-" => int_or_real(x, y, i64::checked_sub, |a, b| a - b),
                "*" => int_or_real(x, y, i64::checked_mul, |a, b| a * b),
                "/" => match (x, y) {
                    (_, Num::Int(0)) => None,
                    (Num::Int(p), Num::Int(q)) if p % q == 0 => Some(Num::Int(p / q)),
                    _ if y.as_f64() == 0.0 => None,
                    _ => Some(Num::Real(x.as_f64() / y.as_f64())),
                },
                "//" => match (x, y) {
                    (Num::Int(p), Num::Int(q)) => p.checked_div(q).map(Num::Int),
                    _ => None,
                },
                "mod" => match (x, y) {
                    (Num::Int(p), Num::Int(q)) if q != 0 => Some(Num::Int(((p % q) + q) % q)),
                    _ => None,
                },
                "min" => Some(if num_cmp(x, y)? == std::cmp::Ordering::Greater { y } else { x }),
                "max" => Some(if num_cmp(x, y)? == std::cmp::Ordering::Less { y } else { x }),
                _ => None,
            }
        }
        _ => None,
    }
}

/// Evaluates a variable-free expression.
pub fn eval_ground(t: &Term) -> Option<Num> {
    eval(t, &Bindings::new())
}

/// True when `t` is an arithmetic expression over numbers that can be
/// replaced by its value.
pub(crate) fn is_evaluable(t: &Term) -> bool {
    matches!(t, Term::Compound(..)) && eval_ground(t).is_some()
}

/// Whether `name/arity` is one of the builtin predicates.
pub fn is_builtin_name(name: &str, arity: usize) -> bool {
    crate::program::BUILTINS.iter().any(|&(n, a)| n == name && a == arity)
}

/// Calls `k` once per solution of the builtin goal, with its bindings in
/// place. Bindings made here are undone before returning.
pub(crate) fn solve(
    name: &str,
    args: &[Term],
    b: &mut Bindings,
    k: &mut dyn FnMut(&mut Bindings) -> ControlFlow<()>,
) -> ControlFlow<()> {
    let mark = b.mark();
    let result = match (name, args) {
        ("=", [x, y]) => {
            if b.unify(x, y) {
                k(b)
            } else {
                ControlFlow::Continue(())
            }
        }
        ("is", [lhs, rhs]) => match eval(rhs, b) {
            Some(v) if b.unify(lhs, &v.to_term()) => k(b),
            _ => ControlFlow::Continue(()),
        },
        ("between", [lo, hi, x]) => {
            let (Some(Num::Int(lo)), Some(Num::Int(hi))) = (eval(lo, b), eval(hi, b)) else {
                return ControlFlow::Continue(());
            };
            match b.deref(x).clone() {
                Term::Int(i) => {
                    if lo <= i && i <= hi {
                        k(b)
                    } else {
                        ControlFlow::Continue(())
                    }
                }
                Term::Var(_) => {
                    for i in lo..=hi {
                        let m = b.mark();
                        if b.unify(x, &Term::Int(i)) {
                            k(b)?;
                        }
                        b.undo(m);
                    }
                    ControlFlow::Continue(())
                }
                _ => ControlFlow::Continue(()),
            }
        }
        (op, [x, y]) => {
            let holds = match (eval(x, b), eval(y, b)) {
                (Some(x), Some(y)) => num_cmp(x, y).is_some_and(|o| {
                    use std::cmp::Ordering::*;
                    match op {
                        "<" => o == Less,
                        ">" => o == Greater,
                        "=<" => o != Greater,
                        ">=" => o != Less,
                        "=:=" => o == Equal,
                        "=\\=" => o != Equal,
                        _ => false,
                    }
                }),
                _ => false,
            };
            if holds {
                k(b)
            } else {
                ControlFlow::Continue(())
            }
        }
        _ => ControlFlow::Continue(()),
    };
    b.undo(mark);
    result
}

/// Whether a builtin call has enough bound arguments to be decided.
pub(crate) fn is_decidable(name: &str, args: &[Term], b: &Bindings) -> bool {
    match (name, args) {
        ("=", _) => true,
        ("is", [_, rhs]) => eval(rhs, b).is_some(),
        ("between", [lo, hi, _]) => eval(lo, b).is_some() && eval(hi, b).is_some(),
        (_, [x, y]) => eval(x, b).is_some() && eval(y, b).is_some(),
        _ => false,
    }
}
