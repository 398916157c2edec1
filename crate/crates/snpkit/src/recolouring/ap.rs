//! Bounded amalgamation check over the expanded finite models of a sentence.

use super::{all_tuples, injective_tuples, subsets};
use crate::budget::{Budget, Meter};
use crate::error::Result;
use crate::logic::{expansions, Grounding, Sentence, SolveOutcome};
use crate::structures::{canonical_key, Elem, Structure, StructureIter};
use rayon::prelude::*;
use std::collections::HashSet;

/// A pair `a`, `b` glued along `common_a[i] ~ common_b[i]`, with a witness
/// if one was found on at most `bound` elements. `a` embeds into the
/// witness as the first `a.size()` elements, `b` through `embed_b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApCertificate {
    pub a: Structure,
    pub b: Structure,
    pub common_a: Vec<Elem>,
    pub common_b: Vec<Elem>,
    pub bound: usize,
    pub witness: Option<(Structure, Vec<Elem>)>,
}

/// Searches a model of Φ's first-order part on at most `max_witness`
/// elements into which `a` and `b` embed, agreeing on the common part.
pub fn amalgamate(
    phi: &Sentence,
    a: &Structure,
    b: &Structure,
    common_a: &[Elem],
    common_b: &[Elem],
    max_witness: usize,
    meter: &mut Meter,
) -> Result<Option<(Structure, Vec<Elem>)>> {
    let mut f: Vec<Option<Elem>> = vec![None; b.size()];
    for (&x, &y) in common_a.iter().zip(common_b) {
        f[y as usize] = Some(x);
    }
    let rest_b: Vec<usize> = (0..b.size()).filter(|&y| f[y].is_none()).collect();
    let rest_a: Vec<Elem> = (0..a.size() as Elem).filter(|x| !common_a.contains(x)).collect();
    let mut used = vec![false; rest_a.len()];
    place(phi, a, b, &rest_b, &rest_a, 0, a.size(), &mut used, &mut f, max_witness, meter)
}

#[allow(clippy::too_many_arguments)]
fn place(
    phi: &Sentence,
    a: &Structure,
    b: &Structure,
    rest_b: &[usize],
    rest_a: &[Elem],
    i: usize,
    size: usize,
    used: &mut Vec<bool>,
    f: &mut Vec<Option<Elem>>,
    max_witness: usize,
    meter: &mut Meter,
) -> Result<Option<(Structure, Vec<Elem>)>> {
    meter.node()?;
    if i == rest_b.len() {
        let f: Vec<Elem> = f.iter().map(|x| x.expect("placed")).collect();
        return complete(phi, a, b, &f, size, meter).map(|w| w.map(|w| (w, f)));
    }
    let y = rest_b[i];
    if size < max_witness {
        f[y] = Some(size as Elem);
        if let Some(w) = place(phi, a, b, rest_b, rest_a, i + 1, size + 1, used, f, max_witness, meter)? {
            return Ok(Some(w));
        }
    }
    for j in 0..rest_a.len() {
        if !used[j] {
            used[j] = true;
            f[y] = Some(rest_a[j]);
            let r = place(phi, a, b, rest_b, rest_a, i + 1, size, used, f, max_witness, meter)?;
            used[j] = false;
            if r.is_some() {
                return Ok(r);
            }
        }
    }
    f[y] = None;
    Ok(None)
}

/// Fills in the tuples that are neither inside `a` nor inside the image of `b`.
fn complete(
    phi: &Sentence,
    a: &Structure,
    b: &Structure,
    f: &[Elem],
    size: usize,
    meter: &mut Meter,
) -> Result<Option<Structure>> {
    let na = a.size() as Elem;
    let mut inv = vec![None; size];
    for (y, &x) in f.iter().enumerate() {
        inv[x as usize] = Some(y as Elem);
    }
    for sym in 0..a.sig().len() {
        for t in all_tuples(b.size(), a.sig().arity(sym)) {
            let g: Vec<Elem> = t.iter().map(|&y| f[y as usize]).collect();
            if g.iter().all(|&x| x < na) && a.holds(sym, &g) != b.holds(sym, &t) {
                return Ok(None);
            }
        }
    }
    let fixed = |sym, t: &[Elem]| {
        if t.iter().all(|&x| x < na) {
            return Some(a.holds(sym, t));
        }
        let back: Option<Vec<Elem>> = t.iter().map(|&x| inv[x as usize]).collect();
        back.map(|u| b.holds(sym, &u))
    };
    let g = Grounding::new(phi, size, fixed, meter)?;
    if g.is_conflicting() {
        return Ok(None);
    }
    Ok(match g.solver().solve(meter)? {
        SolveOutcome::Sat(m) => Some(g.build(&m)),
        SolveOutcome::Unsat => None,
    })
}

/// Expanded models of Φ of size 1..=max_size, one per isomorphism class.
pub fn efm_pool(phi: &Sentence, max_size: usize, budget: &Budget) -> Result<Vec<Structure>> {
    let mut meter = budget.meter("amalgamation pool");
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for t in StructureIter::new(phi.input().clone(), 1, max_size)?.up_to_iso() {
        for e in expansions(phi, &t, budget)? {
            if seen.insert((e.size(), canonical_key(&e, 0))) {
                meter.structure()?;
                out.push(e);
            }
        }
    }
    Ok(out)
}

/// Checks every pair from `pool` glued along every proper common part and
/// returns the pairs without a witness on at most `max_witness` elements.
/// Members of `pool` must be models of Φ's first-order part.
pub fn bounded_ap_check_pool(
    phi: &Sentence,
    pool: &[Structure],
    max_witness: usize,
    budget: &Budget,
) -> Result<Vec<ApCertificate>> {
    let mut jobs = Vec::new();
    for i in 0..pool.len() {
        for j in i..pool.len() {
            let (a, b) = (&pool[i], &pool[j]);
            for k in 0..a.size().min(b.size()) {
                if a.size() + b.size() - k > max_witness {
                    continue;
                }
                for sa in subsets(a.size(), k) {
                    let ca = a.induced(&sa);
                    for sb in injective_tuples(b.size(), k) {
                        if b.induced(&sb) == ca {
                            jobs.push((i, j, sa.clone(), sb));
                        }
                    }
                }
            }
        }
    }
    let results: Vec<Result<Option<ApCertificate>>> = jobs
        .into_par_iter()
        .map(|(i, j, ca, cb)| {
            let mut meter = budget.meter("amalgamation");
            let (a, b) = (&pool[i], &pool[j]);
            let w = amalgamate(phi, a, b, &ca, &cb, max_witness, &mut meter)?;
            Ok(w.is_none().then(|| ApCertificate {
                a: a.clone(),
                b: b.clone(),
                common_a: ca,
                common_b: cb,
                bound: max_witness,
                witness: None,
            }))
        })
        .collect();
    let mut out = Vec::new();
    for r in results {
        if let Some(c) = r? {
            out.push(c);
        }
    }
    Ok(out)
}

/// [`bounded_ap_check_pool`] over all expanded models of size ≤ `max_base`.
/// Only pairs whose free amalgam fits in `max_witness` elements are checked.
pub fn bounded_ap_check(phi: &Sentence, max_base: usize, max_witness: usize, budget: &Budget) -> Result<Vec<ApCertificate>> {
    let pool = efm_pool(phi, max_base, budget)?;
    bounded_ap_check_pool(phi, &pool, max_witness, budget)
}
