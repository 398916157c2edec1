//! The order-and-pieces expansion Δ(Φ) of a connected guarded monotone
//! sentence: same finite models, with expanded models forming an
//! amalgamation class.
//!
//! Δ lives over the input signature τ with existential symbols
//! `R+` for R ∈ τ, `X+`/`X-` for X ∈ σ, one symbol per piece of a forbidden
//! pattern, and a linear order `<`.

mod expand;

pub use expand::{distinct_patterns, minimal_patterns, Expander, Pattern, Special};

use crate::budget::{Budget, Meter};
use crate::error::{Error, Result};
use crate::logic::{merge_equalities, Clause, Literal, Sentence, SentenceStats};
use crate::structures::{enumerate_pieces, Elem, HomSearch, Piece, RelSymbol, Signature, Structure, StructureIter, SymbolId};
use rayon::prelude::*;
use std::collections::HashSet;
use std::sync::Arc;

/// `R+` and `R-` for every symbol `R` of a base signature.
#[derive(Clone, Debug)]
pub struct PrimedSignature {
    pub base: Arc<Signature>,
    pub primed: Arc<Signature>,
}

impl PrimedSignature {
    pub fn new(base: &Arc<Signature>) -> Result<PrimedSignature> {
        let mut syms = Vec::with_capacity(2 * base.len());
        for s in base.symbols() {
            syms.push(RelSymbol::new(format!("{}+", s.name), s.arity));
        }
        for s in base.symbols() {
            syms.push(RelSymbol::new(format!("{}-", s.name), s.arity));
        }
        Ok(PrimedSignature { base: base.clone(), primed: Arc::new(Signature::new(syms)?) })
    }

    pub fn plus(&self, sym: SymbolId) -> SymbolId {
        sym
    }

    pub fn minus(&self, sym: SymbolId) -> SymbolId {
        self.base.len() + sym
    }
}

/// Canonical databases of the forbidden patterns of Φ′.
#[derive(Clone, Debug)]
pub struct ForbiddenFamily {
    pub structures: Vec<Structure>,
    /// Clause of Φ each member came from.
    pub origin: Vec<usize>,
}

/// A piece of a member of the forbidden family, named as a Δ symbol.
#[derive(Clone, Debug)]
pub struct RhoSymbol {
    pub name: String,
    pub piece: Piece,
    /// Member of the forbidden family the piece was first found in.
    pub origin: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HnOptions {
    /// Variable cap for generated clauses; defaults to wd(Φ).
    pub max_clause_vars: Option<usize>,
    /// Drop generated clauses subsumed by other generated clauses.
    pub subsume: bool,
}

impl Default for HnOptions {
    fn default() -> Self {
        HnOptions { max_clause_vars: None, subsume: true }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DeltaCounters {
    pub phi_prime: usize,
    pub order: usize,
    pub item2_candidates: usize,
    pub item2: usize,
    pub item3_candidates: usize,
    pub item3: usize,
    pub correctness: usize,
    pub total: usize,
}

#[derive(Clone, Debug)]
pub struct DeltaReport {
    pub before: SentenceStats,
    pub after: SentenceStats,
    pub rho: usize,
    pub clause_vars: usize,
    pub counters: DeltaCounters,
}

#[derive(Clone, Debug)]
pub struct DeltaOutput {
    pub sentence: Sentence,
    pub rho: Vec<RhoSymbol>,
    pub report: DeltaReport,
}

/// Rewrites every forbidden pattern positively: atoms of negative literals
/// become `R+`, atoms of positive literals become `X-`. The result has the
/// primed signature as input and purely negative clauses.
pub fn build_phi_prime(phi: &Sentence) -> Result<(Sentence, PrimedSignature)> {
    let class = phi.classify();
    if !class.is_gmsnp() || !class.is_connected {
        return Err(Error::Precondition("the expansion expects a connected guarded monotone sentence".into()));
    }
    let primed = PrimedSignature::new(phi.full())?;
    let mut clauses = Vec::new();
    for c in phi.clauses() {
        let c = merge_equalities(c);
        let mut lits = Vec::new();
        for l in &c.lits {
            match l {
                Literal::Rel { positive, sym, args } => {
                    let s = if *positive { primed.minus(*sym) } else { primed.plus(*sym) };
                    lits.push(Literal::neg(s, args.clone()));
                }
                Literal::Eq { .. } => {
                    return Err(Error::Precondition("equality literal survives merging in a monotone clause".into()))
                }
            }
        }
        clauses.push(Clause { vars: c.vars.clone(), lits });
    }
    let sentence = Sentence::new((*primed.primed).clone(), Signature::empty(), clauses)?;
    Ok((sentence, primed))
}

pub fn forbidden_family(phi_prime: &Sentence) -> ForbiddenFamily {
    let structures: Vec<Structure> = phi_prime.clauses().iter().map(|c| c.pattern_structure(phi_prime.full())).collect();
    let origin = (0..structures.len()).collect();
    ForbiddenFamily { structures, origin }
}

/// Pieces of all members, one per class of root-order-preserving
/// isomorphism across the whole family.
pub fn family_pieces(family: &ForbiddenFamily, taken: &Signature) -> Vec<RhoSymbol> {
    let mut seen = HashSet::new();
    let mut names = taken.clone();
    let mut out = Vec::new();
    for (i, m) in family.structures.iter().enumerate() {
        for p in enumerate_pieces(m) {
            if seen.insert(p.key()) {
                let name = names.fresh_name(&format!("P{}", out.len() + 1));
                names.push(RelSymbol::new(name.clone(), p.root_len())).expect("fresh name");
                out.push(RhoSymbol { name, piece: p, origin: family.origin[i] });
            }
        }
    }
    out
}

/// Irreflexivity, transitivity and totality of `<`.
pub fn order_axioms(lt: SymbolId) -> Vec<Clause> {
    vec![
        Clause::anonymous(vec![Literal::neg(lt, vec![0, 0])]),
        Clause::anonymous(vec![Literal::neg(lt, vec![0, 1]), Literal::neg(lt, vec![1, 2]), Literal::pos(lt, vec![0, 2])]),
        Clause::anonymous(vec![
            Literal::pos(lt, vec![0, 1]),
            Literal::Eq { positive: true, lhs: 0, rhs: 1 },
            Literal::pos(lt, vec![1, 0]),
        ]),
    ]
}

/// Symbol ids of Δ, for clause assembly.
#[derive(Clone, Debug)]
pub struct DeltaLayout {
    /// `(R, R+, arity)` for R ∈ τ.
    pub tau: Vec<(SymbolId, SymbolId, usize)>,
    /// `(X+, X-, arity)` for X ∈ σ.
    pub sigma: Vec<(SymbolId, SymbolId, usize)>,
    pub rho: Vec<SymbolId>,
    pub lt: SymbolId,
}

/// `R(x̄) ⟺ R+(x̄) ∧ correct(x̄)` for every R ∈ τ, where `correct` says that
/// every σ-tuple over the variables of x̄ is in exactly one of `X+`, `X-`.
pub fn correctness_clauses(layout: &DeltaLayout) -> Vec<Clause> {
    let mut out = Vec::new();
    for &(r, rp, k) in &layout.tau {
        let xs: Vec<usize> = (0..k).collect();
        let mut pairs: Vec<(SymbolId, SymbolId, Vec<usize>)> = Vec::new();
        for &(xp, xm, a) in &layout.sigma {
            for y in tuples_over(k, a) {
                pairs.push((xp, xm, y));
            }
        }
        out.push(Clause::anonymous(vec![Literal::neg(r, xs.clone()), Literal::pos(rp, xs.clone())]));
        for (xp, xm, y) in &pairs {
            out.push(Clause::anonymous(vec![
                Literal::neg(r, xs.clone()),
                Literal::pos(*xp, y.clone()),
                Literal::pos(*xm, y.clone()),
            ]));
            out.push(Clause::anonymous(vec![
                Literal::neg(r, xs.clone()),
                Literal::neg(*xp, y.clone()),
                Literal::neg(*xm, y.clone()),
            ]));
        }
        // backward: one clause per choice of which half of each X+ ↔ X- to violate
        for choice in 0u64..(1u64 << pairs.len()) {
            let mut lits = vec![Literal::neg(rp, xs.clone()), Literal::pos(r, xs.clone())];
            for (j, (xp, xm, y)) in pairs.iter().enumerate() {
                if choice >> j & 1 == 0 {
                    lits.push(Literal::pos(*xp, y.clone()));
                    lits.push(Literal::neg(*xm, y.clone()));
                } else {
                    lits.push(Literal::neg(*xp, y.clone()));
                    lits.push(Literal::pos(*xm, y.clone()));
                }
            }
            out.push(Clause::anonymous(lits));
        }
    }
    out
}

pub(crate) fn tuples_over(k: usize, a: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..a {
        out = out.into_iter().flat_map(|t| (0..k).map(move |v| [t.clone(), vec![v]].concat())).collect();
    }
    out
}

/// Everything derived from Φ that the clause generators need.
#[derive(Clone, Debug)]
pub struct HnContext {
    pub phi: Sentence,
    pub phi_prime: Sentence,
    pub primed: PrimedSignature,
    pub family: ForbiddenFamily,
    pub rho: Vec<RhoSymbol>,
    /// Primed symbols occurring in the family, in primed order; they are the
    /// base symbols of `expander`.
    pub used: Vec<SymbolId>,
    pub expander: Expander,
    /// Family members over the expander signature.
    pub targets: Vec<Structure>,
}

impl HnContext {
    pub fn new(phi: &Sentence) -> Result<HnContext> {
        let (phi_prime, primed) = build_phi_prime(phi)?;
        let family = forbidden_family(&phi_prime);
        let rho = family_pieces(&family, &primed.primed);
        let mut used: Vec<SymbolId> = family.structures.iter().flat_map(|m| m.all_tuples().map(|(s, _)| s)).collect();
        used.sort_unstable();
        used.dedup();
        let base = Signature::new(used.iter().map(|&s| primed.primed.get(s).clone()).collect())?;
        let specials = rho
            .iter()
            .map(|r| (r.name.clone(), Special { pre: r.piece.rooted(), root_len: r.piece.root_len() }))
            .collect();
        let expander = Expander::new(&base, specials)?;
        let targets = family.structures.iter().map(|m| m.project(&expander.sig)).collect::<Result<_>>()?;
        Ok(HnContext { phi: phi.clone(), phi_prime, primed, family, rho, used, expander, targets })
    }

    pub fn default_cap(&self) -> usize {
        self.phi.stats().wd
    }
}

/// Negative clauses whose pattern, with piece atoms expanded, receives a
/// homomorphism from a member of the family. Returns the candidate count
/// and the kept patterns.
pub fn generate_item3_clauses(ctx: &HnContext, cap: usize, subsume: bool, budget: &Budget) -> Result<(usize, Vec<Pattern>)> {
    forbidding_patterns(&ctx.expander, &ctx.targets, cap, subsume, "delta item iii", budget)
}

/// Clauses `ψ ⇒ p(x̄)` for a piece symbol `p`, where the pre-structure of
/// `p` maps into the expansion of ψ with its root sent to x̄. With
/// `subsume`, clauses whose body contains an item-(iii) pattern are dropped
/// as well.
pub fn generate_item2_clauses(
    ctx: &HnContext,
    cap: usize,
    subsume: bool,
    item3: &[Pattern],
    budget: &Budget,
) -> Result<(usize, Vec<Pattern>)> {
    defining_patterns(&ctx.expander, cap, subsume, item3, "delta item ii", budget)
}

/// Patterns of at most `cap` elements whose expansion receives a
/// homomorphism from one of `targets` (over the expander signature).
pub fn forbidding_patterns(
    ex: &Expander,
    targets: &[Structure],
    cap: usize,
    subsume: bool,
    stage: &str,
    budget: &Budget,
) -> Result<(usize, Vec<Pattern>)> {
    let per_target: Vec<Result<Vec<Pattern>>> = targets
        .par_iter()
        .map(|m| {
            let mut meter = budget.meter(stage);
            let mut out = Vec::new();
            for (q, _) in ex.covers(m, 0, cap, &mut meter)? {
                if q.tuple_count() > 0 && ex.receives(m, &q, &[]) {
                    out.push(Pattern { body: q, head: None });
                }
            }
            Ok(out)
        })
        .collect();
    let mut all = Vec::new();
    for r in per_target {
        all.extend(r?);
    }
    let all = distinct_patterns(ex, all);
    let n = all.len();
    if !subsume {
        return Ok((n, all));
    }
    // only patterns without a removable atom can be minimal
    let holds = |q: &Structure| targets.iter().any(|m| ex.receives(m, q, &[]));
    let all: Vec<Pattern> = all.into_par_iter().filter(|p| p.body.isolated_elements().is_empty() && irreducible(&p.body, holds)).collect();
    let mut meter = budget.meter(stage);
    Ok((n, minimal_patterns(ex, all, &mut meter)?))
}

/// Headed patterns `ψ ⇒ s(x̄)` for every special `s` whose pre-structure
/// maps into the expansion of ψ with its root sent to x̄. With `subsume`,
/// bodies containing one of `forbidding` are dropped as well.
pub fn defining_patterns(
    ex: &Expander,
    cap: usize,
    subsume: bool,
    forbidding: &[Pattern],
    stage: &str,
    budget: &Budget,
) -> Result<(usize, Vec<Pattern>)> {
    let per_special: Vec<Result<Vec<Pattern>>> = (0..ex.specials.len())
        .into_par_iter()
        .map(|i| {
            let mut meter = budget.meter(stage);
            let sp = &ex.specials[i];
            let mut out = Vec::new();
            for (q, heads) in ex.covers(&sp.pre, sp.root_len, cap, &mut meter)? {
                if q.holds(ex.special_sym(i), &heads) || !ex.receives(&sp.pre, &q, &heads) {
                    continue;
                }
                out.push(Pattern { body: q, head: Some((i, heads)) });
            }
            Ok(out)
        })
        .collect();
    let mut all = Vec::new();
    for r in per_special {
        all.extend(r?);
    }
    let all = distinct_patterns(ex, all);
    let n = all.len();
    if !subsume {
        return Ok((n, all));
    }
    let all: Vec<Pattern> = all
        .into_par_iter()
        .filter(|p| {
            let (i, heads) = p.head.as_ref().unwrap();
            p.body.isolated_elements().iter().all(|e| heads.contains(e)) && irreducible(&p.body, |q| ex.receives(&ex.specials[*i].pre, q, heads))
        })
        .collect();
    let mut meter = budget.meter(stage);
    let kept = minimal_patterns(ex, all, &mut meter)?;
    let kept = kept
        .into_iter()
        .filter(|p| !forbidding.iter().any(|f| HomSearch::new_unchecked(&f.body, &p.body).exists()))
        .collect();
    Ok((n, kept))
}

/// Brute-force item (iii): every pattern over the expander signature with
/// at most `cap` elements, filtered by the defining condition.
pub fn naive_item3_clauses(ctx: &HnContext, cap: usize, budget: &Budget) -> Result<Vec<Pattern>> {
    let ex = &ctx.expander;
    let mut meter = budget.meter("naive item iii");
    let mut all = Vec::new();
    for q in StructureIter::new(ex.sig.clone(), 1, cap)? {
        meter.structure()?;
        let holds = |q: &Structure| ctx.targets.iter().any(|m| ex.receives(m, q, &[]));
        if q.tuple_count() > 0 && q.isolated_elements().is_empty() && holds(&q) && irreducible(&q, holds) {
            all.push(Pattern { body: q, head: None });
        }
    }
    minimal_patterns(ex, distinct_patterns(ex, all), &mut meter)
}

/// Brute-force item (ii) over all labelled bodies and head tuples.
pub fn naive_item2_clauses(ctx: &HnContext, cap: usize, item3: &[Pattern], budget: &Budget) -> Result<Vec<Pattern>> {
    let ex = &ctx.expander;
    let mut meter = budget.meter("naive item ii");
    let mut all = Vec::new();
    for q in StructureIter::new(ex.sig.clone(), 1, cap)? {
        meter.structure()?;
        for (i, sp) in ex.specials.iter().enumerate() {
            let n = q.size();
            let mut heads = vec![0 as Elem; sp.root_len];
            loop {
                let holds = |q: &Structure| ex.receives(&sp.pre, q, &heads);
                let unused = q.isolated_elements().iter().any(|e| !heads.contains(e));
                if !unused && !q.holds(ex.special_sym(i), &heads) && holds(&q) && irreducible(&q, holds) {
                    all.push(Pattern { body: q.clone(), head: Some((i, heads.clone())) });
                }
                if !odometer(&mut heads, n) {
                    break;
                }
            }
        }
    }
    let kept = minimal_patterns(ex, distinct_patterns(ex, all), &mut meter)?;
    Ok(kept
        .into_iter()
        .filter(|p| !item3.iter().any(|f| HomSearch::new_unchecked(&f.body, &p.body).exists()))
        .collect())
}

/// No single atom can be dropped without losing `holds`.
fn irreducible(q: &Structure, holds: impl Fn(&Structure) -> bool) -> bool {
    q.all_tuples().all(|(s, t)| {
        let mut r = q.clone();
        r.remove(s, t);
        !holds(&r)
    })
}

fn odometer(t: &mut [Elem], n: usize) -> bool {
    for d in t.iter_mut().rev() {
        *d += 1;
        if (*d as usize) < n {
            return true;
        }
        *d = 0;
    }
    false
}

fn pattern_clause(ex: &Expander, p: &Pattern, map: &[SymbolId]) -> Clause {
    let mut lits = Vec::new();
    for (s, t) in p.body.all_tuples() {
        lits.push(Literal::neg(map[s], t.iter().map(|&e| e as usize).collect::<Vec<_>>()));
    }
    if let Some((i, args)) = &p.head {
        lits.push(Literal::pos(map[ex.special_sym(*i)], args.iter().map(|&e| e as usize).collect::<Vec<_>>()));
    }
    let vars = (1..=p.body.size()).map(|i| format!("x{i}")).collect();
    Clause { vars, lits }.normalized()
}

pub fn delta_transform(phi: &Sentence, opts: &HnOptions, budget: &Budget) -> Result<DeltaOutput> {
    let ctx = HnContext::new(phi)?;
    let cap = opts.max_clause_vars.unwrap_or_else(|| ctx.default_cap());
    let input = phi.input();
    let mut exist = Signature::empty();
    let mut names = (**phi.full()).clone();
    let mut fresh = |exist: &mut Signature, base: &str, arity: usize| -> Result<SymbolId> {
        let name = names.fresh_name(base);
        names.push(RelSymbol::new(name.clone(), arity))?;
        Ok(input.len() + exist.push(RelSymbol::new(name, arity))?)
    };
    // Δ ids for the primed symbols that occur in Δ
    let mut primed_to_delta = vec![usize::MAX; ctx.primed.primed.len()];
    let mut tau = Vec::new();
    for (r, s) in input.symbols().iter().enumerate() {
        let id = fresh(&mut exist, &format!("{}+", s.name), s.arity)?;
        primed_to_delta[ctx.primed.plus(r)] = id;
        tau.push((r, id, s.arity));
    }
    let mut sigma = Vec::new();
    for (j, s) in phi.exist().symbols().iter().enumerate() {
        let x = input.len() + j;
        let p = fresh(&mut exist, &format!("{}+", s.name), s.arity)?;
        let m = fresh(&mut exist, &format!("{}-", s.name), s.arity)?;
        primed_to_delta[ctx.primed.plus(x)] = p;
        primed_to_delta[ctx.primed.minus(x)] = m;
        sigma.push((p, m, s.arity));
    }
    let mut rho_ids = Vec::new();
    for r in &ctx.rho {
        rho_ids.push(fresh(&mut exist, &r.name, r.piece.root_len())?);
    }
    let lt = fresh(&mut exist, "<", 2)?;
    let layout = DeltaLayout { tau, sigma, rho: rho_ids.clone(), lt };
    let mut gen_map: Vec<SymbolId> = ctx.used.iter().map(|&s| primed_to_delta[s]).collect();
    gen_map.extend(&rho_ids);
    if gen_map.contains(&usize::MAX) {
        return Err(Error::Internal("negative input atom in a forbidden pattern".into()));
    }

    let with_stage = |e: Error, what: &str| match e {
        Error::Budget { stage, resource, limit } => Error::Budget { stage: format!("{stage} ({what})"), resource, limit },
        other => other,
    };
    let (c3, item3) = generate_item3_clauses(&ctx, cap, opts.subsume, budget).map_err(|e| with_stage(e, "before item ii"))?;
    let (c2, item2) = generate_item2_clauses(&ctx, cap, opts.subsume, &item3, budget)
        .map_err(|e| with_stage(e, &format!("after {} item iii clauses", item3.len())))?;

    let mut counters = DeltaCounters {
        item2_candidates: c2,
        item2: item2.len(),
        item3_candidates: c3,
        item3: item3.len(),
        ..DeltaCounters::default()
    };
    let mut clauses: Vec<Clause> = Vec::new();
    for c in ctx.phi_prime.clauses() {
        let lits = c
            .lits
            .iter()
            .map(|l| match l {
                Literal::Rel { positive, sym, args } => Literal::Rel { positive: *positive, sym: primed_to_delta[*sym], args: args.clone() },
                other => other.clone(),
            })
            .collect();
        clauses.push(Clause { vars: c.vars.clone(), lits });
    }
    counters.phi_prime = clauses.len();
    let order = order_axioms(lt);
    counters.order = order.len();
    clauses.extend(order);
    let ex = &ctx.expander;
    clauses.extend(item2.iter().chain(&item3).map(|p| pattern_clause(ex, p, &gen_map)));
    let corr = correctness_clauses(&layout);
    counters.correctness = corr.len();
    clauses.extend(corr);

    let mut full = (**input).clone();
    for s in exist.symbols() {
        full.push(s.clone())?;
    }
    let mut meter: Meter = budget.meter("delta");
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for c in clauses {
        if seen.insert(crate::logic::clause_key(&full, &c)) {
            meter.clause().map_err(|e| with_stage(e, "assembling"))?;
            out.push(c);
        }
    }
    counters.total = out.len();
    let sentence = Sentence::new((**input).clone(), exist, out)?;
    let report = DeltaReport { before: phi.stats(), after: sentence.stats(), rho: ctx.rho.len(), clause_vars: cap, counters };
    Ok(DeltaOutput { sentence, rho: ctx.rho, report })
}
