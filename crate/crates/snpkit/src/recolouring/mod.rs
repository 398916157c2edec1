//! Colours, recolourings between SNP sentences, the extension ξ′, and a
//! bounded amalgamation checker.
//!
//! An n-colour of Φ is a model of Φ's first-order part on `0..k` with
//! `1 ≤ k ≤ n`. A recolouring maps colours of Φ1 to colours of Φ2 with the
//! same input reduct such that applying it to every small substructure of a
//! model of Φ1 yields a model of Φ2.

mod ap;
mod search;

pub use ap::{amalgamate, bounded_ap_check, bounded_ap_check_pool, efm_pool, ApCertificate};
pub use search::{recolouring_search, SearchOutcome, SearchStats};

use crate::budget::{Budget, Meter};
use crate::error::{Error, Result};
use crate::logic::{check_fo_part, expansions, find_violation, merge_equalities, Grounding, Literal, Sentence, SolveOutcome};
use crate::structures::{Elem, Signature, Structure, StructureIter, SymbolId, Tuple};
use std::collections::HashMap;
use std::sync::Arc;

/// All n-colours of a sentence, indexed for lookups by structure, by input
/// reduct and by the colours on the faces (maximal proper subsets).
#[derive(Clone, Debug)]
pub struct ColourTable {
    pub n: usize,
    pub sig: Arc<Signature>,
    pub tau: Arc<Signature>,
    pub colours: Vec<Structure>,
    index: HashMap<Structure, usize>,
    by_tau: HashMap<Structure, Vec<usize>>,
    by_faces: HashMap<Vec<usize>, Vec<usize>>,
    /// `perms[k]`: all permutations of `0..k`, as tuples.
    perms: Vec<Vec<Vec<Elem>>>,
    /// Per colour, its view under each permutation of `perms[size]`.
    permuted: Vec<Vec<usize>>,
    face_ids: Vec<Vec<usize>>,
}

/// Colours come by size, then by input reduct in enumeration order, then by
/// number of tuples and tuple list.
pub fn enumerate_colours(phi: &Sentence, n: usize, budget: &Budget) -> Result<ColourTable> {
    if n == 0 {
        return Err(Error::Precondition("colours need n ≥ 1".into()));
    }
    let mut meter = budget.meter("colours");
    let mut colours = Vec::new();
    for a in StructureIter::new(phi.input().clone(), 1, n)? {
        let mut es = expansions(phi, &a, budget)?;
        es.sort_by_cached_key(|c| (c.tuple_count(), c.all_tuples().map(|(s, t)| (s, t.clone())).collect::<Vec<_>>()));
        for c in es {
            meter.structure()?;
            colours.push(c);
        }
    }
    ColourTable::from_colours(phi, n, colours)
}

impl ColourTable {
    fn from_colours(phi: &Sentence, n: usize, colours: Vec<Structure>) -> Result<ColourTable> {
        let mut t = ColourTable {
            n,
            sig: phi.full().clone(),
            tau: phi.input().clone(),
            colours,
            index: HashMap::new(),
            by_tau: HashMap::new(),
            by_faces: HashMap::new(),
            perms: (0..=n).map(|k| injective_tuples(k, k)).collect(),
            permuted: Vec::new(),
            face_ids: Vec::new(),
        };
        for (i, c) in t.colours.iter().enumerate() {
            t.index.insert(c.clone(), i);
        }
        let closed = || Error::Internal("colour set not closed under substructures".into());
        for i in 0..t.colours.len() {
            let r = t.tau_reduct(&t.colours[i]);
            t.by_tau.entry(r).or_default().push(i);
            let faces = t.faces(i).ok_or_else(closed)?;
            t.by_faces.entry(faces.clone()).or_default().push(i);
            t.face_ids.push(faces);
            let k = t.colours[i].size();
            let views = t.perms[k].iter().map(|p| t.view(i, p)).collect::<Option<Vec<_>>>().ok_or_else(closed)?;
            t.permuted.push(views);
        }
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.colours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colours.is_empty()
    }

    pub fn id_of(&self, s: &Structure) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn tau_reduct(&self, s: &Structure) -> Structure {
        s.project(&self.tau).expect("colour over the full signature")
    }

    /// Colours with the given input reduct.
    pub fn with_reduct(&self, r: &Structure) -> &[usize] {
        self.by_tau.get(r).map_or(&[], Vec::as_slice)
    }

    /// The colour induced on `tuple` (distinct elements), relabelled so that
    /// `tuple[i]` becomes `i`.
    pub fn view(&self, id: usize, tuple: &[Elem]) -> Option<usize> {
        self.id_of(&self.colours[id].induced(tuple))
    }

    /// Colours of the faces of a colour of size ≥ 2, face `i` omitting
    /// element `i`; empty for size 1.
    fn faces(&self, id: usize) -> Option<Vec<usize>> {
        let k = self.colours[id].size();
        if k == 1 {
            return Some(Vec::new());
        }
        (0..k)
            .map(|i| {
                let face: Vec<Elem> = (0..k as Elem).filter(|&e| e as usize != i).collect();
                self.view(id, &face)
            })
            .collect()
    }

    /// Permutations of `0..k` in a fixed order; indices into this list are
    /// accepted by [`ColourTable::permuted`].
    pub fn perms(&self, k: usize) -> &[Vec<Elem>] {
        &self.perms[k]
    }

    /// `view(id, perms(size)[pi])`, precomputed.
    pub fn permuted(&self, id: usize, pi: usize) -> usize {
        self.permuted[id][pi]
    }

    /// Colour of face `j` (element `j` removed) of a colour of size ≥ 2.
    pub fn face(&self, id: usize, j: usize) -> usize {
        self.face_ids[id][j]
    }

    /// Colours whose faces are the given colours (empty slice: all colours
    /// of size 1).
    pub fn with_faces(&self, faces: &[usize]) -> &[usize] {
        self.by_faces.get(faces).map_or(&[], Vec::as_slice)
    }

    /// Σ_{k ≤ n} 2^(ht·k^ar), when it fits.
    pub fn count_bound(&self) -> Option<u128> {
        let ht = self.sig.len() as u32;
        let ar = self.sig.max_arity() as u32;
        let mut total: u128 = 0;
        for k in 1..=self.n as u128 {
            let bits = (ht as u128).checked_mul(k.checked_pow(ar)?)?;
            if bits >= 127 {
                return None;
            }
            total = total.checked_add(1u128 << bits)?;
        }
        Some(total)
    }
}

/// A map from colours of Φ1 to colours of Φ2, by colour id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Recolouring {
    pub map: Vec<usize>,
}

/// Two subsets whose colour images disagree on a tuple.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtensionConflict {
    pub first: Vec<Elem>,
    pub second: Vec<Elem>,
    pub sym: SymbolId,
    pub tuple: Tuple,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CheckFailure {
    /// Condition (i): input reducts differ.
    Reduct { colour: usize },
    /// Condition (ii): `map` (defined on `domain` of the source colour) is a
    /// partial isomorphism between the colours but not between their images.
    PartialIso { source: usize, target: usize, domain: Vec<Elem>, map: Vec<Elem> },
    /// Condition (iii): `d` models Φ1's first-order part, its extension does
    /// not model Φ2's.
    Extension { d: Structure, image: Structure, clause: usize },
    Conflict { d: Structure, conflict: ExtensionConflict },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ConditionMode {
    #[default]
    PatternDirected,
    Naive,
}

pub fn require_common_input(phi1: &Sentence, phi2: &Sentence) -> Result<()> {
    if phi1.input().symbols() != phi2.input().symbols() {
        return Err(Error::SignatureMismatch("the sentences have different input signatures".into()));
    }
    Ok(())
}

/// Injective tuples of length `len` over `0..k`, lexicographic.
pub(crate) fn injective_tuples(k: usize, len: usize) -> Vec<Vec<Elem>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(len);
    fn rec(k: usize, len: usize, cur: &mut Vec<Elem>, out: &mut Vec<Vec<Elem>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for e in 0..k as Elem {
            if !cur.contains(&e) {
                cur.push(e);
                rec(k, len, cur, out);
                cur.pop();
            }
        }
    }
    rec(k, len, &mut cur, &mut out);
    out
}

/// Increasing tuples of length `len` over `0..k`.
pub(crate) fn subsets(k: usize, len: usize) -> Vec<Vec<Elem>> {
    injective_tuples(k, len).into_iter().filter(|t| t.windows(2).all(|w| w[0] < w[1])).collect()
}

/// All tuples of length `len` over `0..k`.
pub(crate) fn all_tuples(k: usize, len: usize) -> Vec<Tuple> {
    let mut out = vec![Tuple::new()];
    for _ in 0..len {
        out = out.into_iter().flat_map(|t| (0..k as Elem).map(move |e| {
            let mut u = t.clone();
            u.push(e);
            u
        })).collect();
    }
    out
}

/// ξ′(a): every subset of at most n elements receives the image of its
/// colour. Errors when some small substructure of `a` is not a colour.
pub fn apply_extension(
    xi: &Recolouring,
    a: &Structure,
    c1: &ColourTable,
    c2: &ColourTable,
) -> Result<std::result::Result<Structure, ExtensionConflict>> {
    a.require_signature(&c1.sig, "extension")?;
    let mut seen: HashMap<(SymbolId, Tuple), (bool, Vec<Elem>)> = HashMap::new();
    let mut out = Structure::new(c2.sig.clone(), a.size());
    let arities: Vec<usize> = c2.sig.symbols().iter().map(|s| s.arity).collect();
    for size in 1..=c1.n.min(a.size()) {
        let locals: Vec<Vec<Tuple>> = arities.iter().map(|&r| all_tuples(size, r)).collect();
        for s in subsets(a.size(), size) {
            let id = c1.id_of(&a.induced(&s)).ok_or_else(|| {
                Error::Precondition("structure has a small substructure that models no colour".into())
            })?;
            let u = &c2.colours[xi.map[id]];
            for (sym, ts) in locals.iter().enumerate() {
                for t in ts {
                    let g: Tuple = t.iter().map(|&e| s[e as usize]).collect();
                    let v = u.holds(sym, t);
                    match seen.get(&(sym, g.clone())) {
                        Some((w, first)) if *w != v => {
                            return Ok(Err(ExtensionConflict { first: first.clone(), second: s.clone(), sym, tuple: g }))
                        }
                        Some(_) => {}
                        None => {
                            if v {
                                out.insert(sym, &g);
                            }
                            seen.insert((sym, g), (v, s.clone()));
                        }
                    }
                }
            }
        }
    }
    Ok(Ok(out))
}

pub fn check_condition_i(xi: &Recolouring, c1: &ColourTable, c2: &ColourTable) -> Option<CheckFailure> {
    (0..c1.len())
        .find(|&t| c1.tau_reduct(&c1.colours[t]) != c2.tau_reduct(&c2.colours[xi.map[t]]))
        .map(|colour| CheckFailure::Reduct { colour })
}

/// Condition (ii) in the equivalent form: the image of the colour induced
/// on any tuple of a colour is the colour induced on that tuple of the image.
pub fn check_condition_ii(xi: &Recolouring, c1: &ColourTable, c2: &ColourTable) -> Result<Option<CheckFailure>> {
    for t in 0..c1.len() {
        let k = c1.colours[t].size();
        for len in 1..=k {
            for s in injective_tuples(k, len) {
                let v = c1.view(t, &s).ok_or_else(|| Error::Internal("colour set not closed".into()))?;
                if c2.view(xi.map[t], &s) != Some(xi.map[v]) {
                    return Ok(Some(CheckFailure::PartialIso {
                        source: t,
                        target: v,
                        domain: s,
                        map: (0..len as Elem).collect(),
                    }));
                }
            }
        }
    }
    Ok(None)
}

/// Condition (ii) literally: every partial isomorphism between two colours
/// is one between their images. Quadratic in the number of colours.
pub fn check_condition_ii_naive(xi: &Recolouring, c1: &ColourTable, c2: &ColourTable) -> Option<CheckFailure> {
    use crate::structures::is_partial_isomorphism;
    for t in 0..c1.len() {
        let a = &c1.colours[t];
        for u in 0..c1.len() {
            let b = &c1.colours[u];
            for len in 1..=a.size().min(b.size()) {
                for dom in subsets(a.size(), len) {
                    for img in injective_tuples(b.size(), len) {
                        if is_partial_isomorphism(a, b, &dom, &img)
                            && !is_partial_isomorphism(&c2.colours[xi.map[t]], &c2.colours[xi.map[u]], &dom, &img)
                        {
                            return Some(CheckFailure::PartialIso { source: t, target: u, domain: dom, map: img });
                        }
                    }
                }
            }
        }
    }
    None
}

/// A model `d` of Φ1's first-order part (on at most wd(Φ2) elements) whose
/// extension violates clause `clause` of Φ2, together with the colour
/// images responsible: for each subset, the Φ1 colour found there and the
/// facts its image must have for the violation.
#[derive(Clone, Debug)]
pub struct ExtensionViolation {
    pub d: Structure,
    pub clause: usize,
    pub assignment: Vec<Elem>,
    pub blame: Vec<(usize, Vec<(SymbolId, Tuple, bool)>)>,
}

/// Pattern-directed search for condition-(iii) violations: for every clause
/// of Φ2 and every way of placing its variables on more than n elements,
/// look for a model of Φ1's first-order part on those elements whose
/// colour images falsify the clause. Colours whose images cannot take part
/// are excluded by blocking clauses and a solver decides the rest. Stops
/// after `limit` violations.
pub fn extension_violations(
    phi1: &Sentence,
    phi2: &Sentence,
    c1: &ColourTable,
    c2: &ColourTable,
    image: &dyn Fn(usize) -> usize,
    limit: usize,
    meter: &mut Meter,
) -> Result<Vec<ExtensionViolation>> {
    let n = c1.n;
    let wd2 = phi2.stats().wd;
    let mut by_size: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
    for (t, c) in c1.colours.iter().enumerate() {
        by_size[c.size()].push(t);
    }
    let mut out = Vec::new();
    for (ci, c) in phi2.clauses().iter().enumerate() {
        let c = merge_equalities(c);
        let k = c.vars.len();
        for m in (n + 1)..=wd2.min(k) {
            let mut h = vec![0 as Elem; k];
            let mut placements = Vec::new();
            surjections(k, m, 0, 0, &mut h, &mut placements);
            for h in placements {
                let Some(reqs) = requirements(&c.lits, &h) else { continue };
                let mut cells: Vec<(Vec<Elem>, Vec<(SymbolId, Tuple, bool)>)> = reqs.into_iter().collect();
                cells.sort();
                let mut g = Grounding::new(phi1, m, |_, _| None, meter)?;
                if g.is_conflicting() {
                    continue;
                }
                for (cell, facts) in &cells {
                    for &t in &by_size[cell.len()] {
                        let u = &c2.colours[image(t)];
                        if !facts.iter().all(|(s, tup, v)| u.holds(*s, tup) == *v) {
                            g.push_clause(blocking(&g, c1, &[(cell, t)]));
                        }
                    }
                }
                let mut solver = g.solver();
                while out.len() < limit {
                    let SolveOutcome::Sat(model) = solver.solve(meter)? else { break };
                    let d = g.build(&model);
                    let chosen: Vec<usize> = cells
                        .iter()
                        .map(|(cell, _)| c1.id_of(&d.induced(cell)).ok_or_else(|| Error::Internal("cell is not a colour".into())))
                        .collect::<Result<_>>()?;
                    let pairs: Vec<(&Vec<Elem>, usize)> = cells.iter().map(|(cell, _)| cell).zip(chosen.iter().copied()).collect();
                    solver.add_clause(blocking(&g, c1, &pairs));
                    let blame = chosen.into_iter().zip(cells.iter().map(|(_, f)| f.clone())).collect();
                    out.push(ExtensionViolation { d, clause: ci, assignment: h.clone(), blame });
                }
                if out.len() >= limit {
                    return Ok(out);
                }
            }
        }
    }
    Ok(out)
}

/// A clause that is false exactly when every `cell` carries its colour.
fn blocking(g: &Grounding, c1: &ColourTable, cells: &[(&Vec<Elem>, usize)]) -> Vec<u32> {
    let mut lits = Vec::new();
    for (cell, t) in cells {
        let col = &c1.colours[*t];
        for sym in 0..c1.sig.len() {
            for tup in all_tuples(cell.len(), c1.sig.arity(sym)) {
                let glob: Tuple = tup.iter().map(|&e| cell[e as usize]).collect();
                let v = g.var(sym, &glob).expect("no atom is fixed");
                lits.push(2 * v + u32::from(col.holds(sym, &tup)));
            }
        }
    }
    lits
}

/// Maps `0..k` onto exactly `m` values, first occurrences in increasing order.
fn surjections(k: usize, m: usize, i: usize, used: usize, h: &mut Vec<Elem>, out: &mut Vec<Vec<Elem>>) {
    if k - i < m - used {
        return;
    }
    if i == k {
        out.push(h.clone());
        return;
    }
    for b in 0..=used.min(m - 1) {
        h[i] = b as Elem;
        surjections(k, m, i + 1, used.max(b + 1), h, out);
    }
}

/// Facts the colour images must have, per subset, for the literals to be
/// false under `h`; `None` if that is impossible.
fn requirements(lits: &[Literal], h: &[Elem]) -> Option<HashMap<Vec<Elem>, Vec<(SymbolId, Tuple, bool)>>> {
    let mut reqs: HashMap<Vec<Elem>, Vec<(SymbolId, Tuple, bool)>> = HashMap::new();
    for l in lits {
        match l {
            Literal::Eq { positive, lhs, rhs } => {
                if (h[*lhs] == h[*rhs]) == *positive {
                    return None;
                }
            }
            Literal::Rel { positive, sym, args } => {
                let g: Vec<Elem> = args.iter().map(|&v| h[v]).collect();
                let mut s = g.clone();
                s.sort_unstable();
                s.dedup();
                let local: Tuple = g.iter().map(|e| s.binary_search(e).unwrap() as Elem).collect();
                let entry = reqs.entry(s).or_default();
                if entry.iter().any(|(x, t, v)| *x == *sym && *t == local && *v == *positive) {
                    return None;
                }
                if !entry.iter().any(|(x, t, _)| *x == *sym && *t == local) {
                    entry.push((*sym, local, !*positive));
                }
            }
        }
    }
    Some(reqs)
}

/// Naive condition (iii): every model of Φ1's first-order part on at most
/// wd(Φ2) elements.
pub fn naive_extension_violation(
    phi1: &Sentence,
    phi2: &Sentence,
    xi: &Recolouring,
    c1: &ColourTable,
    c2: &ColourTable,
    budget: &Budget,
) -> Result<Option<CheckFailure>> {
    let mut meter = budget.meter("condition iii");
    let wd2 = phi2.stats().wd.max(1);
    for d in StructureIter::new(c1.sig.clone(), 1, wd2)? {
        meter.structure()?;
        if !check_fo_part(phi1, &d)? {
            continue;
        }
        match apply_extension(xi, &d, c1, c2)? {
            Err(conflict) => return Ok(Some(CheckFailure::Conflict { d, conflict })),
            Ok(image) => {
                if let Some(v) = find_violation(phi2, &image)? {
                    return Ok(Some(CheckFailure::Extension { d, image, clause: v.clause }));
                }
            }
        }
    }
    Ok(None)
}

/// Conditions (i)–(iii). `None` means ξ is a recolouring.
pub fn check_recolouring(
    phi1: &Sentence,
    phi2: &Sentence,
    xi: &Recolouring,
    c1: &ColourTable,
    c2: &ColourTable,
    mode: ConditionMode,
    budget: &Budget,
) -> Result<Option<CheckFailure>> {
    require_common_input(phi1, phi2)?;
    if c1.n != c2.n || c1.n < phi1.stats().ar.max(phi2.stats().ar) {
        return Err(Error::Precondition("colour tables must share n ≥ the maximal arity".into()));
    }
    if xi.map.len() != c1.len() || xi.map.iter().any(|&u| u >= c2.len()) {
        return Err(Error::Precondition("map is not a function between the colour sets".into()));
    }
    if let Some(f) = check_condition_i(xi, c1, c2) {
        return Ok(Some(f));
    }
    if let Some(f) = check_condition_ii(xi, c1, c2)? {
        return Ok(Some(f));
    }
    match mode {
        ConditionMode::Naive => naive_extension_violation(phi1, phi2, xi, c1, c2, budget),
        ConditionMode::PatternDirected => {
            let mut meter = budget.meter("condition iii");
            let v = extension_violations(phi1, phi2, c1, c2, &|t| xi.map[t], 1, &mut meter)?;
            Ok(v.into_iter().next().map(|v| {
                let image = apply_extension(xi, &v.d, c1, c2).ok().and_then(|r| r.ok()).expect("consistent after (ii)");
                CheckFailure::Extension { d: v.d, image, clause: v.clause }
            }))
        }
    }
}

#[cfg(test)]
mod tests;
