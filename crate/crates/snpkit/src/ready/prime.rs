//! Ω′: one existential symbol per ordered τ-guarded colour, plus a strict
//! order `<` that every colour atom respects.
//!
//! A model of Φ with a linear order becomes a model of Ω′(Φ) by putting
//! `X_T(ā)` on every increasing enumeration ā of a τ-guarded set whose
//! induced structure is `T`. Conversely the σ-atoms of Φ are read off the
//! colour atoms; the clauses below make that reading well defined and keep
//! it a model.

use super::partitions;
use crate::budget::{Budget, Meter};
use crate::error::{Error, Result};
use crate::hn_transform::tuples_over;
use crate::logic::{clause_key, merge_equalities, Clause, Literal, Sentence};
use crate::recolouring::{enumerate_colours, ColourTable};
use crate::structures::{Elem, RelSymbol, Signature, Structure, SymbolId};
use std::collections::{HashMap, HashSet};
use std::sync::Arc;

/// Some τ-tuple of `s` contains every element.
pub fn is_tau_guarded(s: &Structure, tau: usize) -> bool {
    (0..tau).any(|r| {
        s.tuples(r).any(|t| {
            let mut seen = vec![false; s.size()];
            t.iter().for_each(|&e| seen[e as usize] = true);
            seen.iter().all(|&b| b)
        })
    })
}

/// The colour table of Φ up to size `n` and the ids of its τ-guarded
/// colours, in table order. A colour on `0..k` is read with the natural
/// order.
pub fn ordered_guarded_colours(phi: &Sentence, n: usize, budget: &Budget) -> Result<(ColourTable, Vec<usize>)> {
    let table = enumerate_colours(phi, n, budget)?;
    let tau = phi.input().len();
    let ids = (0..table.len()).filter(|&i| is_tau_guarded(&table.colours[i], tau)).collect();
    Ok((table, ids))
}

/// Every existential literal lies inside the variables of a τ-atom of its
/// clause.
pub(crate) fn existentials_inside_tau_atoms(phi: &Sentence) -> bool {
    let tau = phi.input().len();
    phi.clauses().iter().all(|c| {
        let c = merge_equalities(c);
        let guards: Vec<Vec<usize>> = c
            .lits
            .iter()
            .filter_map(|l| match l {
                Literal::Rel { positive: false, sym, args } if *sym < tau => Some(args.clone()),
                _ => None,
            })
            .collect();
        c.lits.iter().all(|l| match l {
            Literal::Rel { sym, args, .. } if *sym >= tau => guards.iter().any(|g| args.iter().all(|v| g.contains(v))),
            _ => true,
        })
    })
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OmegaPrimeCounters {
    pub colours: usize,
    pub covering: usize,
    pub consistency: usize,
    pub conflicts: usize,
    pub violations: usize,
    pub order: usize,
    pub cycles: usize,
}

#[derive(Clone, Debug)]
pub struct OmegaPrimeOutput {
    pub sentence: Sentence,
    /// The colour of each colour symbol, in symbol order; symbol `τ.len() + i`
    /// stands for `colours[i]`.
    pub colours: Vec<Structure>,
    pub order_sym: SymbolId,
    pub counters: OmegaPrimeCounters,
}

struct Builder<'a> {
    tau: usize,
    colours: &'a [Structure],
    /// σ-part of the structure induced on an ordered tuple of positions.
    views: HashMap<(usize, Vec<Elem>), Vec<(SymbolId, Vec<Elem>)>>,
    out: Vec<Clause>,
    keys: HashSet<crate::structures::CanonKey>,
    sig: Arc<Signature>,
}

impl Builder<'_> {
    fn view(&mut self, c: usize, pos: &[Elem]) -> &Vec<(SymbolId, Vec<Elem>)> {
        let tau = self.tau;
        let colours = self.colours;
        self.views.entry((c, pos.to_vec())).or_insert_with(|| {
            let s = colours[c].induced(pos);
            let mut v: Vec<(SymbolId, Vec<Elem>)> =
                s.all_tuples().filter(|(sym, _)| *sym >= tau).map(|(sym, t)| (sym, t.to_vec())).collect();
            v.sort();
            v
        })
    }

    fn emit(&mut self, lits: Vec<Literal>, meter: &mut Meter) -> Result<bool> {
        let c = Clause::anonymous(lits).normalized();
        if self.keys.insert(clause_key(&self.sig, &c)) {
            meter.clause()?;
            self.out.push(c);
            return Ok(true);
        }
        Ok(false)
    }
}

/// A colour placed on distinct clause variables: `X_T(vars)`.
#[derive(Clone)]
struct Placement {
    colour: usize,
    vars: Vec<usize>,
}

pub fn omega_prime(phi: &Sentence, n: usize, budget: &Budget) -> Result<OmegaPrimeOutput> {
    let class = phi.classify();
    if !class.is_gmsnp() || !class.is_connected {
        return Err(Error::Precondition("Ω′ expects a connected guarded monotone sentence".into()));
    }
    let ar = phi.input().max_arity();
    if n < ar {
        return Err(Error::Precondition(format!("Ω′ needs n ≥ {ar}, the largest input arity")));
    }
    if !existentials_inside_tau_atoms(phi) {
        return Err(Error::Unsupported("Ω′ needs every existential literal inside an input atom of its clause".into()));
    }
    let tau = phi.input().len();
    let (table, ids) = ordered_guarded_colours(phi, n, budget)?;
    let colours: Vec<Structure> = ids.iter().map(|&i| table.colours[i].clone()).collect();

    let mut exist = Signature::empty();
    let mut taken = (**phi.input()).clone();
    for c in &colours {
        let name = taken.fresh_name(&format!("C{}", exist.len() + 1));
        taken.push(RelSymbol::new(name.clone(), c.size()))?;
        exist.push(RelSymbol::new(name, c.size()))?;
    }
    let lt_name = taken.fresh_name("Lt");
    taken.push(RelSymbol::new(lt_name.clone(), 2))?;
    exist.push(RelSymbol::new(lt_name, 2))?;
    let lt = tau + colours.len();
    let sym_of = |i: usize| tau + i;
    let by_size: Vec<Vec<usize>> =
        (0..=n).map(|k| (0..colours.len()).filter(|&i| colours[i].size() == k).collect()).collect();

    let mut meter = budget.meter("omega prime");
    let mut b = Builder { tau, colours: &colours, views: HashMap::new(), out: Vec::new(), keys: HashSet::new(), sig: Arc::new(taken) };
    let mut counters = OmegaPrimeCounters { colours: colours.len(), ..Default::default() };

    // Every input tuple carries a colour on some ordering of its elements.
    for r in 0..tau {
        let a = phi.input().arity(r);
        for p in partitions(a) {
            let k = p.iter().max().map_or(0, |m| m + 1);
            let mut lits = vec![Literal::neg(r, p.clone())];
            for pi in b_perms(k) {
                let mut inv = vec![0 as Elem; k];
                for (j, &v) in pi.iter().enumerate() {
                    inv[v as usize] = j as Elem;
                }
                let t: Vec<Elem> = p.iter().map(|&v| inv[v]).collect();
                for &c in &by_size[k] {
                    if colours[c].holds(r, &t) {
                        lits.push(Literal::pos(sym_of(c), pi.iter().map(|&v| v as usize).collect::<Vec<_>>()));
                    }
                }
            }
            meter.node()?;
            counters.covering += b.emit(lits, &mut meter)? as usize;
        }
    }

    // A colour atom excludes the input tuples its colour lacks.
    for (c, col) in colours.iter().enumerate() {
        let k = col.size();
        let xs: Vec<usize> = (0..k).collect();
        for r in 0..tau {
            for args in tuples_over(k, phi.input().arity(r)) {
                let t: Vec<Elem> = args.iter().map(|&e| e as Elem).collect();
                if !col.holds(r, &t) {
                    counters.consistency += b.emit(vec![Literal::neg(sym_of(c), xs.clone()), Literal::neg(r, args)], &mut meter)? as usize;
                }
            }
        }
    }

    // Overlapping colour atoms agree on the existential atoms of the overlap.
    for c1 in 0..colours.len() {
        let k1 = colours[c1].size();
        for c2 in c1..colours.len() {
            let k2 = colours[c2].size();
            for (dom, img) in partial_injections(k1, k2) {
                meter.node()?;
                if c1 == c2 && dom == img && dom.len() == k1 {
                    continue;
                }
                if b.view(c1, &dom).clone() == *b.view(c2, &img) {
                    continue;
                }
                let mut vars2: Vec<usize> = Vec::with_capacity(k2);
                let mut fresh = k1;
                for j in 0..k2 as Elem {
                    match img.iter().position(|&x| x == j) {
                        Some(i) => vars2.push(dom[i] as usize),
                        None => {
                            vars2.push(fresh);
                            fresh += 1;
                        }
                    }
                }
                let lits = vec![Literal::neg(sym_of(c1), (0..k1).collect::<Vec<_>>()), Literal::neg(sym_of(c2), vars2)];
                counters.conflicts += b.emit(lits, &mut meter)? as usize;
            }
        }
    }

    // Colour atoms that realise a forbidden pattern of Φ.
    for c in phi.clauses() {
        let c = merge_equalities(c);
        for q in partitions(c.vars.len()) {
            let Some(lits) = quotient(&c, &q) else { continue };
            counters.violations += violation_clauses(&lits, tau, &by_size, sym_of, &mut b, &mut meter)?;
        }
    }

    // Colour atoms list their elements in increasing order. Twin positions
    // are exempt: a colour repeating an element must be able to sit on a
    // tuple with that repetition.
    for (c, col) in colours.iter().enumerate() {
        let k = col.size();
        for i in 0..k {
            for j in i + 1..k {
                if twins(col, i as Elem, j as Elem) {
                    continue;
                }
                let lits = vec![Literal::neg(sym_of(c), (0..k).collect::<Vec<_>>()), Literal::pos(lt, vec![i, j])];
                counters.order += b.emit(lits, &mut meter)? as usize;
            }
        }
    }
    for len in 1..=phi.stats().wd.max(1) {
        let lits = (0..len).map(|i| Literal::neg(lt, vec![i, (i + 1) % len])).collect();
        counters.cycles += b.emit(lits, &mut meter)? as usize;
    }

    let sentence = Sentence::new((**phi.input()).clone(), exist, b.out)?;
    Ok(OmegaPrimeOutput { sentence, colours, order_sym: lt, counters })
}

/// Replacing `j` by `i` in any tuple never changes an atom of `s`.
pub(crate) fn twins(s: &Structure, i: Elem, j: Elem) -> bool {
    let k = s.size();
    (0..s.sig().len()).all(|sym| {
        tuples_over(k, s.sig().arity(sym)).into_iter().all(|t| {
            let t: Vec<Elem> = t.iter().map(|&e| e as Elem).collect();
            let m: Vec<Elem> = t.iter().map(|&e| if e == j { i } else { e }).collect();
            s.holds(sym, &t) == s.holds(sym, &m)
        })
    })
}

fn b_perms(k: usize) -> Vec<Vec<Elem>> {
    let mut v: Vec<Elem> = (0..k as Elem).collect();
    let mut out = vec![v.clone()];
    while crate::structures::next_permutation(&mut v) {
        out.push(v.clone());
    }
    out
}

/// Pairs (positions of a k1-tuple, positions of a k2-tuple) of equal nonzero
/// length with distinct entries; `dom` is increasing.
fn partial_injections(k1: usize, k2: usize) -> Vec<(Vec<Elem>, Vec<Elem>)> {
    let mut out = Vec::new();
    for mask in 1u32..(1 << k1) {
        let dom: Vec<Elem> = (0..k1 as Elem).filter(|&i| mask >> i & 1 == 1).collect();
        if dom.len() > k2 {
            continue;
        }
        for img in tuples_over(k2, dom.len()) {
            if img.iter().enumerate().all(|(i, x)| !img[..i].contains(x)) {
                out.push((dom.clone(), img.iter().map(|&e| e as Elem).collect()));
            }
        }
    }
    out
}

/// The literals of `c` after identifying variables in the same block of `q`,
/// or `None` when the identification makes the clause true.
fn quotient(c: &Clause, q: &[usize]) -> Option<Vec<Literal>> {
    let mut out: Vec<Literal> = Vec::new();
    for l in &c.lits {
        match l {
            Literal::Eq { positive, lhs, rhs } => {
                if (q[*lhs] == q[*rhs]) == *positive {
                    return None;
                }
            }
            Literal::Rel { positive, sym, args } => {
                let l = Literal::rel(*positive, *sym, args.iter().map(|&v| q[v]).collect::<Vec<_>>());
                if out.contains(&l.negated()) {
                    return None;
                }
                if !out.contains(&l) {
                    out.push(l);
                }
            }
        }
    }
    Some(out)
}

/// Clauses forbidding the colour atoms under which the quotient clause
/// `lits` is false. Each existential literal is read from the placement on
/// the first input atom containing it.
fn violation_clauses(
    lits: &[Literal],
    tau: usize,
    by_size: &[Vec<usize>],
    sym_of: impl Fn(usize) -> SymbolId,
    b: &mut Builder<'_>,
    meter: &mut Meter,
) -> Result<usize> {
    let mut tau_lits = Vec::new();
    let mut sets: Vec<Vec<usize>> = Vec::new();
    for l in lits {
        if let Literal::Rel { positive: false, sym, args } = l {
            if *sym < tau {
                tau_lits.push(l.clone());
                let mut v = args.clone();
                v.sort_unstable();
                v.dedup();
                if !sets.contains(&v) {
                    sets.push(v);
                }
            }
        }
    }
    let mut assigned: Vec<Vec<&Literal>> = vec![Vec::new(); sets.len()];
    for l in lits {
        if let Literal::Rel { sym, args, .. } = l {
            if *sym >= tau {
                let i = sets.iter().position(|v| args.iter().all(|x| v.contains(x))).ok_or_else(|| {
                    Error::Internal("existential literal outside every input atom".into())
                })?;
                assigned[i].push(l);
            }
        }
    }
    let used: Vec<usize> = (0..sets.len()).filter(|&i| !assigned[i].is_empty()).collect();
    let mut options: Vec<Vec<Placement>> = Vec::new();
    for &i in &used {
        let v = &sets[i];
        let k = v.len();
        let mut opts = Vec::new();
        for pi in b_perms(k) {
            let vars: Vec<usize> = pi.iter().map(|&j| v[j as usize]).collect();
            let at = |x: usize| vars.iter().position(|&y| y == x).map(|p| p as Elem);
            for &c in &by_size[k] {
                meter.node()?;
                let col = &b.colours[c];
                let fits = |l: &Literal| match l {
                    Literal::Rel { sym, args, .. } => {
                        let t: Option<Vec<Elem>> = args.iter().map(|&x| at(x)).collect();
                        t.map(|t| col.holds(*sym, &t))
                    }
                    _ => None,
                };
                let tau_ok = tau_lits.iter().all(|l| fits(l) != Some(false));
                let violated = assigned[i].iter().all(|l| fits(l) == Some(!l.is_positive()));
                if tau_ok && violated {
                    opts.push(Placement { colour: c, vars: vars.clone() });
                }
            }
        }
        if opts.is_empty() {
            return Ok(0);
        }
        options.push(opts);
    }
    let mut count = 0;
    let mut chosen: Vec<Placement> = Vec::new();
    product(&options, &mut chosen, b, meter, &mut |chosen, b, meter| {
        let mut out = tau_lits.clone();
        out.extend(chosen.iter().map(|p| Literal::neg(sym_of(p.colour), p.vars.clone())));
        count += b.emit(out, meter)? as usize;
        Ok(())
    })?;
    Ok(count)
}

type Emit<'e, 'a> = dyn FnMut(&[Placement], &mut Builder<'a>, &mut Meter) -> Result<()> + 'e;

/// Every choice of one placement per set whose placements agree on the
/// existential atoms of their overlaps.
fn product<'a>(
    options: &[Vec<Placement>],
    chosen: &mut Vec<Placement>,
    b: &mut Builder<'a>,
    meter: &mut Meter,
    f: &mut Emit<'_, 'a>,
) -> Result<()> {
    let i = chosen.len();
    if i == options.len() {
        return f(chosen, b, meter);
    }
    for p in &options[i] {
        meter.node()?;
        let mut ok = true;
        for q in chosen.iter() {
            let mut dom = Vec::new();
            let mut img = Vec::new();
            for (a, x) in p.vars.iter().enumerate() {
                if let Some(c) = q.vars.iter().position(|y| y == x) {
                    dom.push(a as Elem);
                    img.push(c as Elem);
                }
            }
            if !dom.is_empty() && b.view(p.colour, &dom).clone() != *b.view(q.colour, &img) {
                ok = false;
                break;
            }
        }
        if ok {
            chosen.push(p.clone());
            product(options, chosen, b, meter, f)?;
            chosen.pop();
        }
    }
    Ok(())
}
