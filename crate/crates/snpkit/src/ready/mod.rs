//! Recolouring-ready equivalents of connected guarded monotone sentences,
//! at micro scale.
//!
//! Ω(Φ) adds a complement `X~` for every existential `X`, splits clauses
//! until their patterns are correctly labelled, introduces one symbol per
//! guarded piece (a piece whose root is extended to a τ-tuple) and defines
//! those symbols by clauses generated with the Δ machinery. Ω′ replaces the
//! existential symbols by one symbol per ordered τ-guarded colour.
//!
//! The Ω′ order clauses skip twin positions of a colour (positions no atom
//! can tell apart). Without that, a covering clause instantiated with
//! repeated variables would need a colour atom with repeated arguments and
//! hence a reflexive `<`.

mod grecolour;
mod prime;

pub use grecolour::{
    check_gmsnp_recolouring, gmsnp_context, gmsnp_recolouring_search, skeletons, GContext, GFailure, GOutcome, GRecolouring,
    GSearchStats, Skeleton,
};

pub use prime::{is_tau_guarded, omega_prime, ordered_guarded_colours, OmegaPrimeCounters, OmegaPrimeOutput};
#[cfg(test)]
pub(crate) use prime::existentials_inside_tau_atoms;

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::hn_transform::{defining_patterns, forbidding_patterns, tuples_over, Expander, Pattern, Special};
use crate::logic::{clause_key, merge_equalities, Clause, Literal, Sentence, SentenceStats};
use crate::structures::{canonical_key, enumerate_pieces, Elem, Piece, RelSymbol, Signature, Structure, SymbolId};
use std::collections::HashSet;

/// Φ with complements: existential symbols σ followed by `X~` for each
/// `X ∈ σ`.
#[derive(Clone, Debug)]
pub struct Complemented {
    pub sentence: Sentence,
    /// `(X, X~, arity)` as ids of `sentence`.
    pub pairs: Vec<(SymbolId, SymbolId, usize)>,
    /// The rewritten clauses of Φ; the labelling clauses follow them in
    /// `sentence`.
    pub rewritten: usize,
}

/// Replaces every positive `X(ȳ)` by `¬X~(ȳ)` and adds, for every `R ∈ τ`
/// and `X ∈ σ`, the clauses `R(x̄) ⇒ X(ȳ) ∨ X~(ȳ)` and
/// `¬(R(x̄) ∧ X(ȳ) ∧ X~(ȳ))` for every ȳ over x̄.
pub fn colour_complements(phi: &Sentence) -> Result<Complemented> {
    let class = phi.classify();
    if !class.is_gmsnp() || !class.is_connected {
        return Err(Error::Precondition("Ω expects a connected guarded monotone sentence".into()));
    }
    let (t, s) = (phi.input().len(), phi.exist().len());
    let mut exist = (**phi.exist()).clone();
    let mut names = (**phi.full()).clone();
    let mut pairs = Vec::new();
    for j in 0..s {
        let x = phi.exist().get(j).clone();
        let name = names.fresh_name(&format!("{}~", x.name));
        names.push(RelSymbol::new(name.clone(), x.arity))?;
        exist.push(RelSymbol::new(name, x.arity))?;
        pairs.push((t + j, t + s + j, x.arity));
    }
    let mut clauses = Vec::new();
    for c in phi.clauses() {
        let c = merge_equalities(c);
        let mut lits = Vec::new();
        for l in &c.lits {
            match l {
                Literal::Rel { positive: true, sym, args } => lits.push(Literal::neg(sym + s, args.clone())),
                Literal::Rel { .. } => lits.push(l.clone()),
                Literal::Eq { .. } => return Err(Error::Precondition("equality literal survives merging".into())),
            }
        }
        clauses.push(Clause { vars: c.vars, lits });
    }
    let rewritten = clauses.len();
    for r in 0..t {
        let k = phi.input().arity(r);
        let xs: Vec<usize> = (0..k).collect();
        for &(x, xc, a) in &pairs {
            for y in tuples_over(k, a) {
                clauses.push(Clause::anonymous(vec![
                    Literal::neg(r, xs.clone()),
                    Literal::pos(x, y.clone()),
                    Literal::pos(xc, y.clone()),
                ]));
                clauses.push(Clause::anonymous(vec![Literal::neg(r, xs.clone()), Literal::neg(x, y.clone()), Literal::neg(xc, y)]));
            }
        }
    }
    let sentence = Sentence::new((**phi.input()).clone(), exist, clauses)?;
    Ok(Complemented { sentence, pairs, rewritten })
}

/// Tuples of arity `a` over the element set of some tuple of `s`.
fn guarded_tuples(s: &Structure, a: usize) -> Vec<Vec<Elem>> {
    let mut out: Vec<Vec<Elem>> = Vec::new();
    for (_, t) in s.all_tuples() {
        let mut set: Vec<Elem> = t.to_vec();
        set.sort_unstable();
        set.dedup();
        for y in tuples_over(set.len(), a) {
            let y: Vec<Elem> = y.iter().map(|&i| set[i]).collect();
            if !out.contains(&y) {
                out.push(y);
            }
        }
    }
    out
}

/// Every guarded tuple of the arity of some `X` lies in exactly one of `X`,
/// `X~`.
pub fn is_correctly_labelled(s: &Structure, pairs: &[(SymbolId, SymbolId, usize)]) -> bool {
    pairs.iter().all(|&(x, xc, a)| guarded_tuples(s, a).iter().all(|y| s.holds(x, y) != s.holds(xc, y)))
}

/// Splits the rewritten clauses on `X(ȳ)` / `X~(ȳ)` until every pattern is
/// correctly labelled. Clauses whose pattern holds both `X(ȳ)` and `X~(ȳ)`
/// are dropped: they come from tautologies.
pub fn correct_labelling_closure(c: &Complemented, budget: &Budget) -> Result<Vec<Clause>> {
    let full = c.sentence.full().clone();
    let mut meter = budget.meter("omega labelling");
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut work: Vec<Clause> = c.sentence.clauses()[..c.rewritten].iter().rev().cloned().collect();
    'work: while let Some(cl) = work.pop() {
        meter.node()?;
        let s = cl.pattern_structure(&full);
        for &(x, xc, a) in &c.pairs {
            for y in guarded_tuples(&s, a) {
                match (s.holds(x, &y), s.holds(xc, &y)) {
                    (true, true) => continue 'work,
                    (false, false) => {
                        let args: Vec<usize> = y.iter().map(|&e| e as usize).collect();
                        for sym in [xc, x] {
                            let mut lits = cl.lits.clone();
                            lits.push(Literal::neg(sym, args.clone()));
                            work.push(Clause { vars: cl.vars.clone(), lits });
                        }
                        continue 'work;
                    }
                    _ => {}
                }
            }
        }
        if seen.insert(clause_key(&full, &cl)) {
            meter.clause()?;
            out.push(cl);
        }
    }
    Ok(out)
}

/// A piece `(P, t̄)` of a labelled pattern whose root is extended by fresh
/// elements to a tuple s̄ with `R(s̄)` for some `R ∈ τ`, and the new guarded
/// tuples labelled.
#[derive(Clone, Debug)]
pub struct GuardedPiece {
    pub name: String,
    /// `P ∪ s̄` rooted at s̄ (root first), over the complemented signature.
    pub pre: Structure,
    /// The τ-symbol imposed on the root.
    pub relation: SymbolId,
    pub piece: Piece,
}

/// One guarded piece per class of root-order-preserving isomorphism.
pub fn guarded_pieces(
    family: &[Structure],
    tau: usize,
    pairs: &[(SymbolId, SymbolId, usize)],
    taken: &Signature,
    budget: &Budget,
) -> Result<Vec<GuardedPiece>> {
    let mut meter = budget.meter("omega pieces");
    let mut names = taken.clone();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for m in family {
        let sig = m.sig().clone();
        for p in enumerate_pieces(m) {
            let root = p.root.clone();
            for r in 0..tau {
                let k = sig.arity(r);
                if k < root.len() {
                    continue;
                }
                let n = m.size();
                let fresh: Vec<Elem> = (n as Elem..(n + k - root.len()) as Elem).collect();
                let mut support: Vec<Elem> = p.support.clone();
                support.extend(&fresh);
                let mut items: Vec<Elem> = root.iter().chain(&fresh).copied().collect();
                items.sort_unstable();
                loop {
                    let ext = extend_root(m, &items, r, pairs);
                    for s in ext {
                        meter.structure()?;
                        let mut order = items.clone();
                        order.extend(support.iter().filter(|e| !items.contains(e)));
                        let pre = s.induced(&order);
                        if seen.insert(canonical_key(&pre, k)) {
                            let name = names.fresh_name(&format!("G{}", out.len() + 1));
                            names.push(RelSymbol::new(name.clone(), k))?;
                            out.push(GuardedPiece { name, pre, relation: r, piece: p.clone() });
                        }
                    }
                    if !crate::structures::next_permutation(&mut items) {
                        break;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `m` with the fresh elements of `s` added, `R(s)` imposed and every newly
/// guarded tuple labelled in all possible ways.
fn extend_root(m: &Structure, s: &[Elem], r: SymbolId, pairs: &[(SymbolId, SymbolId, usize)]) -> Vec<Structure> {
    let fresh = s.iter().filter(|&&e| e as usize >= m.size()).count();
    let mut base = m.with_extra_elements(fresh);
    base.insert(r, s);
    let mut set: Vec<Elem> = s.to_vec();
    set.sort_unstable();
    let mut open: Vec<(SymbolId, SymbolId, Vec<Elem>)> = Vec::new();
    for &(x, xc, a) in pairs {
        for y in tuples_over(set.len(), a) {
            let y: Vec<Elem> = y.iter().map(|&i| set[i]).collect();
            if !base.holds(x, &y) && !base.holds(xc, &y) {
                open.push((x, xc, y));
            }
        }
    }
    let mut out = Vec::with_capacity(1 << open.len());
    for bits in 0u64..(1u64 << open.len()) {
        let mut s2 = base.clone();
        for (i, (x, xc, y)) in open.iter().enumerate() {
            s2.insert(if bits >> i & 1 == 1 { *x } else { *xc }, y);
        }
        out.push(s2);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OmegaOptions {
    /// Variable bound for generated clauses; defaults to the size of the
    /// largest labelled pattern.
    pub max_clause_vars: Option<usize>,
    pub subsume: bool,
}

impl Default for OmegaOptions {
    fn default() -> Self {
        OmegaOptions { max_clause_vars: None, subsume: true }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OmegaCounters {
    pub rewritten: usize,
    pub labelling: usize,
    pub closure: usize,
    pub pieces: usize,
    pub defining: usize,
    pub forbidding: usize,
    pub total: usize,
}

#[derive(Clone, Debug)]
pub struct OmegaReport {
    pub before: SentenceStats,
    pub after: SentenceStats,
    pub clause_vars: usize,
    pub counters: OmegaCounters,
}

#[derive(Clone, Debug)]
pub struct OmegaOutput {
    pub sentence: Sentence,
    pub complemented: Complemented,
    /// Canonical databases of the labelled clauses.
    pub family: Vec<Structure>,
    pub pieces: Vec<GuardedPiece>,
    pub report: OmegaReport,
}

pub fn omega_transform(phi: &Sentence, opts: &OmegaOptions, budget: &Budget) -> Result<OmegaOutput> {
    let comp = colour_complements(phi)?;
    let closure = correct_labelling_closure(&comp, budget)?;
    let full = comp.sentence.full().clone();
    let family: Vec<Structure> = closure.iter().map(|c| c.pattern_structure(&full)).collect();
    let tau = phi.input().len();
    let pieces = guarded_pieces(&family, tau, &comp.pairs, &full, budget)?;
    let cap = opts.max_clause_vars.unwrap_or_else(|| family.iter().map(Structure::size).max().unwrap_or(1));

    let specials = pieces.iter().map(|g| (g.name.clone(), Special { pre: g.pre.clone(), root_len: g.pre_root_len() })).collect();
    let ex = Expander::new(&full, specials)?;
    let targets: Vec<Structure> = family.iter().map(|m| m.project(&ex.sig)).collect::<Result<_>>()?;
    let (_, forbidding) = forbidding_patterns(&ex, &targets, cap, opts.subsume, "omega forbidding clauses", budget)?;
    let (_, defining) = defining_patterns(&ex, cap, opts.subsume, &forbidding, "omega defining clauses", budget)?;

    // Ω's full signature is the expander signature: complemented symbols,
    // then one symbol per guarded piece.
    let mut exist = (**comp.sentence.exist()).clone();
    for g in &pieces {
        exist.push(RelSymbol::new(g.name.clone(), g.pre_root_len()))?;
    }
    let labelling: Vec<Clause> = comp.sentence.clauses()[comp.rewritten..].to_vec();
    let mut counters = OmegaCounters {
        rewritten: comp.rewritten,
        labelling: labelling.len(),
        closure: closure.len(),
        pieces: pieces.len(),
        defining: defining.len(),
        forbidding: forbidding.len(),
        total: 0,
    };
    let mut clauses = closure;
    clauses.extend(labelling);
    clauses.extend(defining.iter().chain(&forbidding).map(|p| companion_clause(&ex, &pieces, p)));
    let mut meter = budget.meter("omega assembling");
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for c in clauses {
        if seen.insert(clause_key(&ex.sig, &c)) {
            meter.clause()?;
            out.push(c);
        }
    }
    counters.total = out.len();
    let sentence = Sentence::new((**phi.input()).clone(), exist, out)?;
    let report = OmegaReport { before: phi.stats(), after: sentence.stats(), clause_vars: cap, counters };
    Ok(OmegaOutput { sentence, complemented: comp, family, pieces, report })
}

impl GuardedPiece {
    fn pre_root_len(&self) -> usize {
        self.pre.sig().arity(self.relation)
    }
}

/// The clause of a generated pattern, with the τ-atom of every piece atom
/// (its companion) added to the body, so each piece atom is read as its
/// pre-structure.
fn companion_clause(ex: &Expander, pieces: &[GuardedPiece], p: &Pattern) -> Clause {
    let mut lits = Vec::new();
    let mut push = |l: Literal| {
        if !lits.contains(&l) {
            lits.push(l);
        }
    };
    let args = |t: &[Elem]| t.iter().map(|&e| e as usize).collect::<Vec<_>>();
    for (s, t) in p.body.all_tuples() {
        push(Literal::neg(s, args(t)));
        if s >= ex.base_len {
            push(Literal::neg(pieces[s - ex.base_len].relation, args(t)));
        }
    }
    if let Some((i, heads)) = &p.head {
        push(Literal::neg(pieces[*i].relation, args(heads)));
        push(Literal::pos(ex.special_sym(*i), args(heads)));
    }
    Clause::anonymous(lits).normalized()
}

/// Set partitions of `0..k` as restricted-growth block vectors.
pub(crate) fn partitions(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; k];
    fn rec(i: usize, used: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for b in 0..=used {
            cur[i] = b;
            rec(i + 1, used.max(b + 1), cur, out);
        }
    }
    if k == 0 {
        return vec![Vec::new()];
    }
    rec(0, 0, &mut cur, &mut out);
    out
}

#[cfg(test)]
mod tests;
