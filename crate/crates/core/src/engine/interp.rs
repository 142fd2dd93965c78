//! The growing set of derived atoms, indexed for joins.

use std::hash::{Hash, Hasher};

use indexmap::IndexSet;
use rustc_hash::{FxBuildHasher, FxHashMap, FxHasher};

use crate::bindings::Bindings;
use crate::term::{Atom, PredKey, Symbol, Term};

/// Principal functor of a term, used as an index key.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Key {
    Sym(Symbol),
    Int(i64),
    Real(u64),
    Fun(Symbol, u32),
    Outcome(Symbol, u32),
    /// Hash of a whole ground term.
    Ground(u64),
}

/// A position inside an atom: an argument, or an argument of the first
/// argument. The second kind indexes call atoms `c(p(..))` by the
/// arguments of `p`. Each position is keyed either by its principal functor
/// or, when ground, by the whole term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Path {
    Arg(u8),
    Sub(u8),
    WholeArg(u8),
    WholeSub(u8),
}

const MAX_POSITIONS: u8 = 4;

fn paths(arity: usize) -> impl Iterator<Item = Path> {
    let top = (0..(arity as u8).min(MAX_POSITIONS)).map(Path::Arg);
    let sub = (0..if arity > 0 { MAX_POSITIONS } else { 0 }).map(Path::Sub);
    let whole_top = (0..(arity as u8).min(MAX_POSITIONS)).map(Path::WholeArg);
    let whole_sub = (0..if arity > 0 { MAX_POSITIONS } else { 0 }).map(Path::WholeSub);
    whole_top.chain(whole_sub).chain(top).chain(sub)
}

/// Structural hash of `t` under `b`; false if `t` is not ground.
fn hash_ground(t: &Term, b: Option<&Bindings>, h: &mut FxHasher) -> bool {
    let t = match b {
        Some(b) => b.deref(t),
        None => t,
    };
    match t {
        Term::Var(_) => false,
        Term::Sym(s) => {
            h.write_u8(0);
            s.hash(h);
            true
        }
        Term::Int(i) => {
            h.write_u8(1);
            h.write_i64(*i);
            true
        }
        Term::Real(r) => {
            h.write_u8(2);
            h.write_u64(r.to_bits());
            true
        }
        Term::Compound(f, args) => {
            h.write_u8(3);
            f.hash(h);
            h.write_usize(args.len());
            args.iter().all(|a| hash_ground(a, b, h))
        }
        Term::Outcome(inner) => {
            h.write_u8(4);
            hash_ground(inner, b, h)
        }
    }
}

fn ground_key(t: &Term, b: Option<&Bindings>) -> At {
    let mut h = FxHasher::default();
    if hash_ground(t, b, &mut h) {
        At::Key(Key::Ground(h.finish()))
    } else {
        At::Wild
    }
}

enum At {
    Key(Key),
    /// A variable: matches anything.
    Wild,
    /// The position does not exist.
    Absent,
}

fn key_of(t: &Term, b: Option<&Bindings>) -> At {
    let deref = |t| match b {
        Some(b) => b.deref(t),
        None => t,
    };
    match deref(t) {
        Term::Var(_) => At::Wild,
        Term::Sym(s) => At::Key(Key::Sym(*s)),
        Term::Int(i) => At::Key(Key::Int(*i)),
        Term::Real(r) => At::Key(Key::Real(r.to_bits())),
        Term::Compound(f, args) => At::Key(Key::Fun(*f, args.len() as u32)),
        Term::Outcome(inner) => match deref(inner) {
            Term::Sym(s) => At::Key(Key::Outcome(*s, 0)),
            Term::Compound(f, args) => At::Key(Key::Outcome(*f, args.len() as u32)),
            _ => At::Wild,
        },
    }
}

fn at(args: &[Term], path: Path, b: Option<&Bindings>) -> At {
    let sub = |j: u8, key: fn(&Term, Option<&Bindings>) -> At| {
        let first = match b {
            Some(b) => b.deref(&args[0]),
            None => &args[0],
        };
        match first {
            Term::Var(_) => At::Wild,
            Term::Compound(_, inner) if (j as usize) < inner.len() => key(&inner[j as usize], b),
            _ => At::Absent,
        }
    };
    match path {
        Path::Arg(i) => key_of(&args[i as usize], b),
        Path::WholeArg(i) => ground_key(&args[i as usize], b),
        Path::Sub(j) => sub(j, key_of),
        Path::WholeSub(j) => sub(j, ground_key),
    }
}

/// Positions returned by [`Interpretation::candidates`]: a keyed run and
/// the run of atoms with a variable at the chosen position.
pub(crate) struct Candidates<'a>([&'a [u32]; 2]);

impl Candidates<'_> {
    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.0[0].iter().chain(self.0[1]).copied()
    }
}

#[derive(Clone, Debug, Default)]
struct PredIndex {
    all: Vec<u32>,
    by_key: FxHashMap<(Path, Key), Vec<u32>>,
    wild: FxHashMap<Path, Vec<u32>>,
}

fn in_range(list: &[u32], lo: u32, hi: u32) -> &[u32] {
    let a = list.partition_point(|&i| i < lo);
    let b = list.partition_point(|&i| i < hi);
    &list[a..b]
}

/// Derived atoms in insertion order, plus the distributions derived for
/// random variables.
#[derive(Clone, Debug, Default)]
pub struct Interpretation {
    atoms: IndexSet<Atom, FxBuildHasher>,
    var_counts: Vec<u32>,
    index: FxHashMap<PredKey, PredIndex>,
    dists: FxHashMap<Term, (Term, u32)>,
}

pub(crate) enum Insert {
    New,
    Present,
    /// A second, different distribution for the random variable.
    Conflict(Term),
}

impl Interpretation {
    pub fn new() -> Interpretation {
        Interpretation::default()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn contains(&self, a: &Atom) -> bool {
        self.atoms.contains(a)
    }

    /// Atoms in derivation order.
    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.atoms.iter()
    }

    pub(crate) fn atom(&self, i: u32) -> &Atom {
        &self.atoms[i as usize]
    }

    pub(crate) fn var_count(&self, i: u32) -> u32 {
        self.var_counts[i as usize]
    }

    /// The distribution derived for `rv`, if it was derived before position
    /// `visible`.
    pub(crate) fn dist(&self, rv: &Term, visible: u32) -> Option<&Term> {
        self.dists.get(rv).filter(|(_, at)| *at < visible).map(|(d, _)| d)
    }

    /// Random variables with a derived distribution.
    pub fn random_variables(&self) -> impl Iterator<Item = (&Term, &Term)> {
        self.dists.iter().map(|(rv, (d, _))| (rv, d))
    }

    /// Adds an atom, which must be canonical.
    pub(crate) fn insert(&mut self, a: Atom) -> bool {
        if self.atoms.contains(&a) {
            return false;
        }
        let i = self.atoms.len() as u32;
        let vars = if a.is_ground() { 0 } else { a.vars().len() as u32 };
        let entry = self.index.entry(a.key()).or_default();
        entry.all.push(i);
        for path in paths(a.args.len()) {
            match at(&a.args, path, None) {
                At::Key(k) => entry.by_key.entry((path, k)).or_default().push(i),
                At::Wild => entry.wild.entry(path).or_default().push(i),
                At::Absent => {}
            }
        }
        self.atoms.insert(a);
        self.var_counts.push(vars);
        true
    }

    /// Records `rv ~ dist` as derived.
    pub(crate) fn insert_dist(&mut self, rv: Term, dist: Term, tilde: Atom) -> Insert {
        if let Some((existing, _)) = self.dists.get(&rv) {
            return if *existing == dist { Insert::Present } else { Insert::Conflict(existing.clone()) };
        }
        let at = self.atoms.len() as u32;
        self.insert(tilde);
        self.dists.insert(rv, (dist, at));
        Insert::New
    }

    /// Indices of atoms in positions `lo..hi` that may unify with
    /// `pred(args)` under `b`, using the most selective bound position.
    pub(crate) fn candidates(&self, pred: PredKey, args: &[Term], b: &Bindings, lo: u32, hi: u32) -> Candidates<'_> {
        if lo >= hi {
            return Candidates([&[], &[]]);
        }
        let Some(entry) = self.index.get(&pred) else { return Candidates([&[], &[]]) };
        Candidates(Self::runs(entry, args, b, lo, hi))
    }

    fn runs<'a>(entry: &'a PredIndex, args: &[Term], b: &Bindings, lo: u32, hi: u32) -> [&'a [u32]; 2] {
        let mut best: Option<[&[u32]; 2]> = None;
        let mut best_len = usize::MAX;
        for path in paths(args.len()) {
            let At::Key(k) = at(args, path, Some(b)) else { continue };
            let keyed = entry.by_key.get(&(path, k)).map_or(&[][..], Vec::as_slice);
            let wild = entry.wild.get(&path).map_or(&[][..], Vec::as_slice);
            let len = keyed.len() + wild.len();
            if len < best_len {
                best_len = len;
                best = Some([keyed, wild]);
                if len <= 1 {
                    break;
                }
            }
        }
        match best {
            Some([keyed, wild]) => [in_range(keyed, lo, hi), in_range(wild, lo, hi)],
            None => [in_range(&entry.all, lo, hi), &[]],
        }
    }

    /// Predicates of the atoms in positions `lo..hi`, without repeats.
    /// Whether any atom of `pred` was added in positions `lo..hi`.
    pub(crate) fn has_pred_in(&self, pred: PredKey, lo: u32, hi: u32) -> bool {
        self.index.get(&pred).is_some_and(|e| !in_range(&e.all, lo, hi).is_empty())
    }
}
