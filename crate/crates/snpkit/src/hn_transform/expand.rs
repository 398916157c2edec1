//! Patterns over a base signature extended by "special" symbols, each of
//! which stands for a rooted structure (its pre-structure). Expanding a
//! pattern replaces every special atom by a copy of its pre-structure with
//! fresh elements for the non-root part.
//!
//! The generators below produce every pattern of at most `cap` elements that
//! is the image of a homomorphism from a target structure into the expansion,
//! together with some non-minimal extras; a subsumption filter then keeps one
//! representative per minimal pattern.

use crate::budget::Meter;
use crate::error::Result;
use crate::structures::{canonical_key, CanonKey, Elem, HomSearch, RelSymbol, Signature, Structure, SymbolId, Tuple, UnionFind};
use std::collections::HashSet;
use std::sync::Arc;

#[derive(Clone, Debug)]
pub struct Special {
    /// Rooted structure over the expander signature (base tuples only), root
    /// elements first.
    pub pre: Structure,
    pub root_len: usize,
}

#[derive(Clone, Debug)]
pub struct Expander {
    /// Base symbols followed by one symbol per special.
    pub sig: Arc<Signature>,
    pub base_len: usize,
    pub specials: Vec<Special>,
    /// Signature used for subsumption: `sig` plus one head marker per special.
    marked: Arc<Signature>,
}

/// A pattern, optionally with a head atom `special(args)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern {
    pub body: Structure,
    pub head: Option<(usize, Vec<Elem>)>,
}

impl Expander {
    pub fn new(base: &Signature, specials: Vec<(String, Special)>) -> Result<Expander> {
        let mut sig = base.clone();
        let mut spec = Vec::new();
        for (name, s) in specials {
            sig.push(RelSymbol::new(name, s.root_len))?;
            spec.push(s);
        }
        let mut marked = sig.clone();
        for i in 0..spec.len() {
            let name = marked.fresh_name(&format!("head{i}"));
            marked.push(RelSymbol::new(name, spec[i].root_len))?;
        }
        let sig = Arc::new(sig);
        let spec = spec
            .into_iter()
            .map(|s| Special { pre: s.pre.project(&sig).expect("pre-structure over base symbols"), root_len: s.root_len })
            .collect();
        Ok(Expander { sig, base_len: base.len(), specials: spec, marked: Arc::new(marked) })
    }

    pub fn special_sym(&self, i: usize) -> SymbolId {
        self.base_len + i
    }

    /// Replaces special atoms by copies of their pre-structures. Elements of
    /// `q` keep their indices; fresh elements follow.
    pub fn expand(&self, q: &Structure) -> Structure {
        let mut total = q.size();
        for i in 0..self.specials.len() {
            total += q.relation_len(self.special_sym(i)) * (self.specials[i].pre.size() - self.specials[i].root_len);
        }
        let mut out = Structure::new(self.sig.clone(), total);
        let mut next = q.size() as Elem;
        let mut buf = Tuple::new();
        for (sym, t) in q.all_tuples() {
            if sym < self.base_len {
                out.insert(sym, t);
                continue;
            }
            let sp = &self.specials[sym - self.base_len];
            let mut map: Vec<Elem> = t.to_vec();
            for _ in sp.root_len..sp.pre.size() {
                map.push(next);
                next += 1;
            }
            for (s2, t2) in sp.pre.all_tuples() {
                buf.clear();
                buf.extend(t2.iter().map(|&e| map[e as usize]));
                out.insert(s2, &buf);
            }
        }
        out
    }

    /// Whether `target` maps homomorphically into the expansion of `q`,
    /// sending its first `fixed.len()` elements to `fixed`.
    pub fn receives(&self, target: &Structure, q: &Structure, fixed: &[Elem]) -> bool {
        let e = self.expand(q);
        HomSearch::new_unchecked(target, &e).fix_prefix(fixed).exists()
    }

    /// Structure used for keys and subsumption: the body plus a head marker.
    pub fn marked(&self, p: &Pattern) -> Structure {
        let mut s = p.body.project(&self.marked).expect("same symbol names");
        if let Some((i, args)) = &p.head {
            s.insert(self.sig.len() + i, args);
        }
        s
    }

    pub fn key(&self, p: &Pattern) -> CanonKey {
        canonical_key(&self.marked(p), 0)
    }

    /// Candidate patterns `q` with at most `cap` elements such that `target`
    /// maps into the expansion of `q`, with the first `fixed` elements of the
    /// target sent to elements of `q` (returned alongside `q`).
    pub fn covers(&self, target: &Structure, fixed: usize, cap: usize, meter: &mut Meter) -> Result<Vec<(Structure, Vec<Elem>)>> {
        let tuples: Vec<(SymbolId, Tuple)> = target.all_tuples().map(|(s, t)| (s, t.clone())).collect();
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        let mut bins = vec![0usize; tuples.len()];
        self.bins_rec(target, &tuples, fixed, cap, 0, 0, &mut bins, &mut out, &mut seen, meter)?;
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn bins_rec(
        &self,
        target: &Structure,
        tuples: &[(SymbolId, Tuple)],
        fixed: usize,
        cap: usize,
        i: usize,
        groups: usize,
        bins: &mut Vec<usize>,
        out: &mut Vec<(Structure, Vec<Elem>)>,
        seen: &mut HashSet<CanonKey>,
        meter: &mut Meter,
    ) -> Result<()> {
        meter.node()?;
        if i == tuples.len() {
            return self.with_groups(target, tuples, fixed, cap, groups, bins, out, seen, meter);
        }
        // plain tuples need a base symbol; special atoms only exist in q
        for b in 0..=groups + 1 {
            if b == 0 && tuples[i].0 >= self.base_len {
                continue;
            }
            if b > 0 && self.specials.is_empty() {
                break;
            }
            bins[i] = b;
            if b > 0 && !self.group_feasible(tuples, &bins[..=i], b) {
                continue;
            }
            self.bins_rec(target, tuples, fixed, cap, i + 1, groups.max(b), bins, out, seen, meter)?;
        }
        Ok(())
    }

    /// Whether the tuples assigned so far to group `g` map into some
    /// pre-structure.
    fn group_feasible(&self, tuples: &[(SymbolId, Tuple)], bins: &[usize], g: usize) -> bool {
        let gs = self.group_structure(tuples, bins, g).1;
        self.specials.iter().any(|sp| gs.size() <= sp.pre.size() && HomSearch::new_unchecked(&gs, &sp.pre).exists())
    }

    fn group_structure(&self, tuples: &[(SymbolId, Tuple)], bins: &[usize], g: usize) -> (Vec<Elem>, Structure) {
        let mut elems: Vec<Elem> = Vec::new();
        for (k, (_, t)) in tuples.iter().enumerate().take(bins.len()) {
            if bins[k] == g {
                elems.extend(t.iter().copied());
            }
        }
        elems.sort_unstable();
        elems.dedup();
        let mut gs = Structure::new(self.sig.clone(), elems.len());
        for (k, (s, t)) in tuples.iter().enumerate().take(bins.len()) {
            if bins[k] == g {
                let lt: Tuple = t.iter().map(|e| elems.binary_search(e).unwrap() as Elem).collect();
                gs.insert(*s, &lt);
            }
        }
        (elems, gs)
    }

    #[allow(clippy::too_many_arguments)]
    fn with_groups(
        &self,
        target: &Structure,
        tuples: &[(SymbolId, Tuple)],
        fixed: usize,
        cap: usize,
        groups: usize,
        bins: &[usize],
        out: &mut Vec<(Structure, Vec<Elem>)>,
        seen: &mut HashSet<CanonKey>,
        meter: &mut Meter,
    ) -> Result<()> {
        let n = target.size();
        // groups each element occurs in (plain tuples count as group 0)
        let mut occurs: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (k, (_, t)) in tuples.iter().enumerate() {
            for &e in t {
                if !occurs[e as usize].contains(&bins[k]) {
                    occurs[e as usize].push(bins[k]);
                }
            }
        }
        // per group: its elements and all admissible (special, map) choices
        let mut options: Vec<(Vec<Elem>, Vec<(usize, Vec<Elem>)>)> = Vec::new();
        for g in 1..=groups {
            let (elems, gs) = self.group_structure(tuples, bins, g);
            let mut choices = Vec::new();
            for (si, sp) in self.specials.iter().enumerate() {
                HomSearch::new_unchecked(&gs, &sp.pre).for_each(|h| {
                    let ok = elems.iter().zip(h).all(|(&e, &img)| {
                        (img as usize) < sp.root_len || ((e as usize) >= fixed && occurs[e as usize].len() == 1)
                    });
                    if ok {
                        choices.push((si, h.to_vec()));
                    }
                    true
                });
            }
            if choices.is_empty() {
                return Ok(());
            }
            options.push((elems, choices));
        }
        let mut pick = vec![0usize; options.len()];
        loop {
            meter.node()?;
            self.emit(target, tuples, fixed, cap, bins, &options, &pick, out, seen, meter)?;
            let mut i = options.len();
            loop {
                if i == 0 {
                    return Ok(());
                }
                i -= 1;
                pick[i] += 1;
                if pick[i] < options[i].1.len() {
                    break;
                }
                pick[i] = 0;
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn emit(
        &self,
        target: &Structure,
        tuples: &[(SymbolId, Tuple)],
        fixed: usize,
        cap: usize,
        bins: &[usize],
        options: &[(Vec<Elem>, Vec<(usize, Vec<Elem>)>)],
        pick: &[usize],
        out: &mut Vec<(Structure, Vec<Elem>)>,
        seen: &mut HashSet<CanonKey>,
        meter: &mut Meter,
    ) -> Result<()> {
        let n = target.size();
        let mut slot_base = Vec::new();
        let mut total = n;
        for (g, (_, choices)) in options.iter().enumerate() {
            slot_base.push(total);
            total += self.specials[choices[pick[g]].0].root_len;
        }
        let mut uf = UnionFind::new(total);
        let mut exposed = vec![false; n];
        for (g, (elems, choices)) in options.iter().enumerate() {
            let (si, h) = &choices[pick[g]];
            let rl = self.specials[*si].root_len;
            for (&e, &img) in elems.iter().zip(h) {
                if (img as usize) < rl {
                    uf.union(e as usize, slot_base[g] + img as usize);
                } else {
                    exposed[e as usize] = true;
                }
            }
        }
        // classes of q~, ordered by smallest member
        let mut class_of = vec![usize::MAX; total];
        let mut reps: Vec<usize> = Vec::new();
        for v in 0..total {
            if v < n && exposed[v] {
                continue;
            }
            let r = uf.find(v);
            if class_of[r] == usize::MAX {
                class_of[r] = reps.len();
                reps.push(r);
            }
            class_of[v] = class_of[r];
        }
        let k = reps.len();
        let mut qt = Structure::new(self.sig.clone(), k);
        for (idx, (s, t)) in tuples.iter().enumerate() {
            if bins[idx] == 0 {
                let ct: Tuple = t.iter().map(|&e| class_of[uf.find(e as usize)] as Elem).collect();
                qt.insert(*s, &ct);
            }
        }
        for (g, (_, choices)) in options.iter().enumerate() {
            let si = choices[pick[g]].0;
            let args: Tuple =
                (0..self.specials[si].root_len).map(|i| class_of[uf.find(slot_base[g] + i)] as Elem).collect();
            qt.insert(self.special_sym(si), &args);
        }
        let heads: Vec<Elem> = (0..fixed).map(|e| class_of[uf.find(e)] as Elem).collect();
        // every quotient of q~ with at most `cap` classes
        let mut block = vec![0usize; k];
        quotients(k, cap, &mut block, 0, 0, &mut |blk: &[usize], nb: usize| {
            meter.node()?;
            let map: Vec<Elem> = blk.iter().map(|&b| b as Elem).collect();
            let q = qt.map_into(&map, nb);
            let h: Vec<Elem> = heads.iter().map(|&e| map[e as usize]).collect();
            let key = canonical_key(&with_fixed_marks(&q, &h), 0);
            if seen.insert(key) {
                out.push((q, h));
            }
            Ok(())
        })
    }
}

/// Marks the fixed images by listing them as a prefix, so keys distinguish
/// where the fixed elements land.
fn with_fixed_marks(q: &Structure, fixed: &[Elem]) -> Structure {
    if fixed.is_empty() {
        return q.clone();
    }
    let mut sig = (**q.sig()).clone();
    let mut ids = Vec::new();
    for i in 0..fixed.len() {
        let name = sig.fresh_name(&format!("fixed{i}"));
        ids.push(sig.push(RelSymbol::new(name, 1)).unwrap());
    }
    let mut s = q.project(&Arc::new(sig)).unwrap();
    for (i, &e) in fixed.iter().enumerate() {
        s.insert(ids[i], &[e]);
    }
    s
}

/// Restricted-growth enumeration of set partitions of `0..k` into at most
/// `cap` blocks.
fn quotients(
    k: usize,
    cap: usize,
    block: &mut Vec<usize>,
    i: usize,
    used: usize,
    f: &mut impl FnMut(&[usize], usize) -> Result<()>,
) -> Result<()> {
    if i == k {
        return f(block, used);
    }
    // leave room: remaining elements can always join existing blocks
    for b in 0..=used.min(cap.saturating_sub(1)) {
        if b == used && used >= cap {
            break;
        }
        block[i] = b;
        quotients(k, cap, block, i + 1, used.max(b + 1), f)?;
    }
    Ok(())
}

/// Drops every pattern implied by another one: `q` goes when some other
/// pattern maps into it (with heads) and either `q` does not map back or the
/// other one comes first in the order by element count, atom count, key.
pub fn minimal_patterns(ex: &Expander, pats: Vec<Pattern>, meter: &mut Meter) -> Result<Vec<Pattern>> {
    let pats = distinct_patterns(ex, pats);
    let marked: Vec<Structure> = pats.iter().map(|p| ex.marked(p)).collect();
    let hom = |a: usize, b: usize| HomSearch::new_unchecked(&marked[a], &marked[b]).exists();
    let mut keep = Vec::new();
    for i in 0..pats.len() {
        meter.nodes(pats.len() as u64)?;
        let dominated = (0..pats.len()).any(|j| j != i && hom(j, i) && (j < i || !hom(i, j)));
        if !dominated {
            keep.push(i);
        }
    }
    let mut pats: Vec<Option<Pattern>> = pats.into_iter().map(Some).collect();
    Ok(keep.into_iter().map(|i| pats[i].take().unwrap()).collect())
}

/// Sorted and deduplicated by key, without subsumption.
pub fn distinct_patterns(ex: &Expander, pats: Vec<Pattern>) -> Vec<Pattern> {
    let mut keyed: Vec<(usize, usize, CanonKey, Pattern)> = pats
        .into_iter()
        .map(|p| {
            let m = ex.marked(&p);
            (m.size(), m.tuple_count(), canonical_key(&m, 0), p)
        })
        .collect();
    keyed.sort_by(|a, b| (a.0, a.1, &a.2).cmp(&(b.0, b.1, &b.2)));
    keyed.dedup_by(|a, b| a.2 == b.2);
    keyed.into_iter().map(|k| k.3).collect()
}
