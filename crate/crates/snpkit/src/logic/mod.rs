//! SNP sentences: representation, the text format, syntactic classes, model
//! checking and padding of monadic sentences with a domain predicate.

mod eval;
pub mod ground;
mod text;

pub use eval::{check_fo_part, find_violation, Violation};
pub use ground::{check_model, expansions, Grounding, Lit, SolveOutcome, Solver};
pub use text::{parse_sentence, print_sentence};

use crate::error::{Error, Result};
use crate::structures::{canonical_key, CanonKey, Elem, RelSymbol, Signature, Structure, SymbolId, UnionFind};
use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Literal {
    /// `sym` indexes the full signature (input symbols first); `args` index
    /// the clause variables.
    Rel { positive: bool, sym: SymbolId, args: Vec<usize> },
    Eq { positive: bool, lhs: usize, rhs: usize },
}

impl Literal {
    pub fn rel(positive: bool, sym: SymbolId, args: impl Into<Vec<usize>>) -> Self {
        Literal::Rel { positive, sym, args: args.into() }
    }

    pub fn neg(sym: SymbolId, args: impl Into<Vec<usize>>) -> Self {
        Literal::rel(false, sym, args)
    }

    pub fn pos(sym: SymbolId, args: impl Into<Vec<usize>>) -> Self {
        Literal::rel(true, sym, args)
    }

    pub fn is_positive(&self) -> bool {
        match self {
            Literal::Rel { positive, .. } | Literal::Eq { positive, .. } => *positive,
        }
    }

    pub fn vars(&self) -> Vec<usize> {
        match self {
            Literal::Rel { args, .. } => args.clone(),
            Literal::Eq { lhs, rhs, .. } => vec![*lhs, *rhs],
        }
    }

    pub fn negated(&self) -> Literal {
        match self.clone() {
            Literal::Rel { positive, sym, args } => Literal::Rel { positive: !positive, sym, args },
            Literal::Eq { positive, lhs, rhs } => Literal::Eq { positive: !positive, lhs, rhs },
        }
    }

    fn remap(&self, f: impl Fn(usize) -> usize) -> Literal {
        match self {
            Literal::Rel { positive, sym, args } => {
                Literal::Rel { positive: *positive, sym: *sym, args: args.iter().map(|&v| f(v)).collect() }
            }
            Literal::Eq { positive, lhs, rhs } => Literal::Eq { positive: *positive, lhs: f(*lhs), rhs: f(*rhs) },
        }
    }
}

/// A disjunction of literals, universally quantified over `vars`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Clause {
    pub vars: Vec<String>,
    pub lits: Vec<Literal>,
}

impl Clause {
    /// Clause over variables named `x1..xk`, where `k` is one more than the
    /// largest variable index used.
    pub fn anonymous(lits: Vec<Literal>) -> Clause {
        let k = lits.iter().flat_map(|l| l.vars()).max().map_or(0, |m| m + 1);
        Clause { vars: (1..=k).map(|i| format!("x{i}")).collect(), lits }
    }

    pub fn width(&self) -> usize {
        self.vars.len()
    }

    /// Renames variables to `x1..xk` in order of first occurrence and drops
    /// unused ones.
    pub fn normalized(&self) -> Clause {
        let mut order: Vec<usize> = Vec::new();
        for l in &self.lits {
            for v in l.vars() {
                if !order.contains(&v) {
                    order.push(v);
                }
            }
        }
        let lits = self.lits.iter().map(|l| l.remap(|v| order.iter().position(|&w| w == v).unwrap())).collect();
        Clause::anonymous(lits)
    }

    /// Substitutes variables by `map[v]` (a variable of the new clause) and
    /// drops duplicate literals.
    pub fn substitute(&self, map: &[usize], vars: Vec<String>) -> Clause {
        let mut lits: Vec<Literal> = Vec::new();
        for l in &self.lits {
            let l = l.remap(|v| map[v]);
            if !lits.contains(&l) {
                lits.push(l);
            }
        }
        Clause { vars, lits }
    }

    /// The structure on the clause variables with a tuple for every negative
    /// relational literal.
    pub fn pattern_structure(&self, sig: &Arc<Signature>) -> Structure {
        let mut s = Structure::new(sig.clone(), self.vars.len());
        for l in &self.lits {
            if let Literal::Rel { positive: false, sym, args } = l {
                let t: Vec<Elem> = args.iter().map(|&v| v as Elem).collect();
                s.insert(*sym, &t);
            }
        }
        s
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SentenceStats {
    pub ht: usize,
    pub lh: usize,
    pub wd: usize,
    pub ar: usize,
}

impl fmt::Display for SentenceStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ht={} lh={} wd={} ar={}", self.ht, self.lh, self.wd, self.ar)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SyntacticClass {
    pub is_snp: bool,
    pub is_monotone: bool,
    pub is_guarded: bool,
    pub is_monadic: bool,
    pub is_connected: bool,
}

impl SyntacticClass {
    pub fn is_gmsnp(&self) -> bool {
        self.is_monotone && self.is_guarded
    }

    pub fn is_mmsnp(&self) -> bool {
        self.is_monotone && self.is_monadic
    }
}

/// `∃σ ∀x̄ ⋀ clauses` over input signature τ.
#[derive(Clone, Debug)]
pub struct Sentence {
    input: Arc<Signature>,
    exist: Arc<Signature>,
    full: Arc<Signature>,
    clauses: Vec<Clause>,
}

impl PartialEq for Sentence {
    fn eq(&self, other: &Self) -> bool {
        self.input == other.input && self.exist == other.exist && self.clauses == other.clauses
    }
}

impl Eq for Sentence {}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_sentence(self))
    }
}

impl Sentence {
    pub fn new(input: Signature, exist: Signature, clauses: Vec<Clause>) -> Result<Sentence> {
        let full = input.concat(&exist).map_err(|_| {
            Error::SignatureMismatch("input and existential signatures share a symbol name".into())
        })?;
        for s in full.symbols() {
            if s.arity == 0 {
                return Err(Error::Precondition(format!("symbol {} has arity 0", s.name)));
            }
        }
        for c in &clauses {
            if c.lits.is_empty() {
                return Err(Error::Precondition("empty clause".into()));
            }
            for l in &c.lits {
                for v in l.vars() {
                    if v >= c.vars.len() {
                        return Err(Error::Internal(format!("variable index {v} out of range")));
                    }
                }
                if let Literal::Rel { sym, args, .. } = l {
                    if *sym >= full.len() {
                        return Err(Error::UndeclaredSymbol(format!("#{sym}")));
                    }
                    if args.len() != full.arity(*sym) {
                        return Err(Error::ArityMismatch {
                            name: full.name(*sym).to_string(),
                            expected: full.arity(*sym),
                            found: args.len(),
                        });
                    }
                }
            }
        }
        Ok(Sentence { input: Arc::new(input), exist: Arc::new(exist), full: Arc::new(full), clauses })
    }

    pub fn input(&self) -> &Arc<Signature> {
        &self.input
    }

    pub fn exist(&self) -> &Arc<Signature> {
        &self.exist
    }

    /// Input symbols followed by existential symbols.
    pub fn full(&self) -> &Arc<Signature> {
        &self.full
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn is_input(&self, sym: SymbolId) -> bool {
        sym < self.input.len()
    }

    pub fn with_clauses(&self, clauses: Vec<Clause>) -> Result<Sentence> {
        Sentence::new((*self.input).clone(), (*self.exist).clone(), clauses)
    }

    pub fn stats(&self) -> SentenceStats {
        SentenceStats {
            ht: self.full.len(),
            lh: self.clauses.len(),
            wd: self.clauses.iter().map(Clause::width).max().unwrap_or(0),
            ar: self.full.max_arity(),
        }
    }

    pub fn classify(&self) -> SyntacticClass {
        let is_monotone = self.clauses.iter().all(|c| {
            c.lits.iter().all(|l| match l {
                Literal::Rel { positive, sym, .. } => !*positive || !self.is_input(*sym),
                Literal::Eq { positive, .. } => !*positive,
            })
        });
        let is_guarded = self.clauses.iter().all(clause_is_guarded);
        let is_monadic = self.exist.symbols().iter().all(|s| s.arity == 1);
        let is_connected = self.clauses.iter().all(|c| crate::structures::is_connected(&c.pattern_structure(&self.full)));
        SyntacticClass { is_snp: true, is_monotone, is_guarded, is_monadic, is_connected }
    }

    pub fn forbidden_patterns(&self) -> Vec<ForbiddenPattern> {
        self.clauses.iter().map(|c| ForbiddenPattern::of(c, &self.full)).collect()
    }

    /// Expands a τ-structure with empty existential relations.
    pub fn empty_expansion(&self, a: &Structure) -> Result<Structure> {
        a.require_signature(&self.input, "expansion")?;
        a.project(&self.full)
    }
}

fn clause_is_guarded(c: &Clause) -> bool {
    c.lits.iter().all(|l| match l {
        Literal::Rel { positive: true, args, .. } => c.lits.iter().any(|g| match g {
            Literal::Rel { positive: false, args: gargs, .. } => args.iter().all(|v| gargs.contains(v)),
            _ => false,
        }),
        _ => true,
    })
}

/// Free-function forms of the sentence methods.
pub fn stats(phi: &Sentence) -> SentenceStats {
    phi.stats()
}

pub fn classify(phi: &Sentence) -> SyntacticClass {
    phi.classify()
}

pub fn clause_pattern_structure(phi: &Sentence, c: &Clause) -> Structure {
    c.pattern_structure(phi.full())
}

/// The negation of a clause read as a conjunction: the positive part is the
/// structure of negative literals, the rest is kept as side conditions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForbiddenPattern {
    pub positive_part: Structure,
    /// Atoms that must be absent (positive literals of the clause).
    pub negated_atoms: Vec<(SymbolId, Vec<usize>)>,
    /// Variable pairs that must be equal (`x != y` literals of the clause).
    pub equalities: Vec<(usize, usize)>,
    /// Variable pairs that must differ (`x = y` literals of the clause).
    pub disequalities: Vec<(usize, usize)>,
}

impl ForbiddenPattern {
    fn of(c: &Clause, sig: &Arc<Signature>) -> Self {
        let mut fp = ForbiddenPattern {
            positive_part: c.pattern_structure(sig),
            negated_atoms: Vec::new(),
            equalities: Vec::new(),
            disequalities: Vec::new(),
        };
        for l in &c.lits {
            match l {
                Literal::Rel { positive: true, sym, args } => fp.negated_atoms.push((*sym, args.clone())),
                Literal::Eq { positive: false, lhs, rhs } => fp.equalities.push((*lhs, *rhs)),
                Literal::Eq { positive: true, lhs, rhs } => fp.disequalities.push((*lhs, *rhs)),
                _ => {}
            }
        }
        fp
    }
}

/// Replaces each `x != y` literal by identifying `x` and `y`. A clause made
/// only of such literals is returned unchanged.
pub fn merge_equalities(c: &Clause) -> Clause {
    let n = c.vars.len();
    let mut uf = UnionFind::new(n);
    for l in &c.lits {
        if let Literal::Eq { positive: false, lhs, rhs } = l {
            uf.union(*lhs, *rhs);
        }
    }
    let keep: Vec<Literal> = c
        .lits
        .iter()
        .filter(|l| !matches!(l, Literal::Eq { positive: false, .. }))
        .cloned()
        .collect();
    if keep.is_empty() {
        return c.clone();
    }
    let map: Vec<usize> = (0..n).map(|v| uf.find(v)).collect();
    let merged = Clause { vars: c.vars.clone(), lits: keep };
    merged.substitute(&map, c.vars.clone()).normalized_keep_names(&c.vars)
}

impl Clause {
    /// Like `normalized`, but keeps the original names of surviving variables.
    fn normalized_keep_names(&self, names: &[String]) -> Clause {
        let mut order: Vec<usize> = Vec::new();
        for l in &self.lits {
            for v in l.vars() {
                if !order.contains(&v) {
                    order.push(v);
                }
            }
        }
        let lits = self.lits.iter().map(|l| l.remap(|v| order.iter().position(|&w| w == v).unwrap())).collect();
        Clause { vars: order.iter().map(|&v| names[v].clone()).collect(), lits }
    }
}

/// Adds a fresh unary input symbol `D` and a literal `!D(v)` for every
/// variable `v` of every clause.
pub fn gamma_padding(phi: &Sentence) -> Result<Sentence> {
    if !phi.classify().is_mmsnp() {
        return Err(Error::Precondition("padding expects a monotone sentence with unary existential symbols".into()));
    }
    let dname = phi.full().fresh_name("D");
    let mut input = (*phi.input).clone();
    let d = input.push(RelSymbol::new(dname, 1))?;
    let shift = |sym: SymbolId| if sym >= d { sym + 1 } else { sym };
    let clauses = phi
        .clauses
        .iter()
        .map(|c| {
            let mut lits: Vec<Literal> = (0..c.vars.len()).map(|v| Literal::neg(d, vec![v])).collect();
            lits.extend(c.lits.iter().map(|l| match l {
                Literal::Rel { positive, sym, args } => Literal::Rel { positive: *positive, sym: shift(*sym), args: args.clone() },
                other => other.clone(),
            }));
            Clause { vars: c.vars.clone(), lits }
        })
        .collect();
    Sentence::new(input, (*phi.exist).clone(), clauses)
}

/// `a` with the padding symbol interpreted as the full domain.
pub fn pad_structure(padded: &Sentence, a: &Structure) -> Result<Structure> {
    let mut out = a.project(padded.input())?;
    let d = padded.input().len() - 1;
    for e in 0..a.size() as Elem {
        out.insert(d, &[e]);
    }
    Ok(out)
}

/// Key identifying a clause up to renaming of its variables.
pub fn clause_key(sig: &Signature, c: &Clause) -> CanonKey {
    let mut syms = Vec::with_capacity(2 * sig.len() + 2);
    for s in sig.symbols() {
        syms.push(RelSymbol::new(format!("{}-", s.name), s.arity));
        syms.push(RelSymbol::new(format!("{}+", s.name), s.arity));
    }
    syms.push(RelSymbol::new("=-", 2));
    syms.push(RelSymbol::new("=+", 2));
    let csig = Arc::new(Signature::new(syms).expect("distinct names"));
    let mut st = Structure::new(csig, c.vars.len());
    for l in &c.lits {
        match l {
            Literal::Rel { positive, sym, args } => {
                let t: Vec<Elem> = args.iter().map(|&v| v as Elem).collect();
                st.insert(2 * sym + usize::from(*positive), &t);
            }
            Literal::Eq { positive, lhs, rhs } => {
                st.insert(2 * sig.len() + usize::from(*positive), &[*lhs as Elem, *rhs as Elem]);
            }
        }
    }
    canonical_key(&st, 0)
}

/// Symbols of the full signature mentioned in some clause.
pub fn used_symbols(phi: &Sentence) -> BTreeSet<SymbolId> {
    phi.clauses
        .iter()
        .flat_map(|c| c.lits.iter())
        .filter_map(|l| match l {
            Literal::Rel { sym, .. } => Some(*sym),
            _ => None,
        })
        .collect()
}
