use super::{Elem, Structure, SymbolId, Tuple};
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MorphismKind {
    Homomorphism,
    Embedding,
    /// Isomorphism between the substructure induced on `domain` and its image.
    PartialIsomorphism { domain: Vec<Elem> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Morphism {
    pub map: Vec<Elem>,
    pub kind: MorphismKind,
}

impl Morphism {
    /// Re-checks the defining property against `a` and `b`.
    pub fn verify(&self, a: &Structure, b: &Structure) -> bool {
        match &self.kind {
            MorphismKind::Homomorphism => is_homomorphism(a, b, &self.map),
            MorphismKind::Embedding => {
                let mut seen = vec![false; b.size()];
                self.map.iter().all(|&v| !std::mem::replace(&mut seen[v as usize], true))
                    && is_homomorphism(a, b, &self.map)
                    && reflects(a, b, &self.map)
            }
            MorphismKind::PartialIsomorphism { domain } => is_partial_isomorphism(a, b, domain, &self.map),
        }
    }
}

fn is_homomorphism(a: &Structure, b: &Structure, map: &[Elem]) -> bool {
    let mut buf = Tuple::new();
    map.len() == a.size()
        && a.all_tuples().all(|(s, t)| {
            buf.clear();
            buf.extend(t.iter().map(|&e| map[e as usize]));
            b.holds(s, &buf)
        })
}

fn reflects(a: &Structure, b: &Structure, map: &[Elem]) -> bool {
    let mut inv = vec![u32::MAX; b.size()];
    for (x, &y) in map.iter().enumerate() {
        inv[y as usize] = x as Elem;
    }
    let mut buf = Tuple::new();
    b.all_tuples().all(|(s, t)| {
        buf.clear();
        for &e in t {
            if inv[e as usize] == u32::MAX {
                return true;
            }
            buf.push(inv[e as usize]);
        }
        a.holds(s, &buf)
    })
}

/// `map[i]` is the image of `domain[i]`; checks that the induced substructures
/// on `domain` in `a` and on the image in `b` correspond exactly.
pub fn is_partial_isomorphism(a: &Structure, b: &Structure, domain: &[Elem], map: &[Elem]) -> bool {
    if domain.len() != map.len() {
        return false;
    }
    let mut seen = vec![false; b.size()];
    if map.iter().any(|&v| std::mem::replace(&mut seen[v as usize], true)) {
        return false;
    }
    a.induced(domain) == b.induced(map)
}

/// Backtracking search for homomorphisms, injective homomorphisms, or
/// embeddings from `a` to `b`, optionally with some images fixed.
///
/// Elements of `a` are assigned in a static order: fixed elements first, then
/// greedily the element with most tuples linking it to already-ordered
/// elements (ties: higher degree, then lower index). Candidates for an
/// element are read off a tuple linking it to assigned elements when one
/// exists.
pub struct HomSearch<'a> {
    a: &'a Structure,
    b: &'a Structure,
    injective: bool,
    reflect: bool,
    fixed: Vec<Option<Elem>>,
}

struct Plan {
    order: Vec<Elem>,
    step_of: Vec<usize>,
    checks: Vec<Vec<(SymbolId, Tuple)>>,
    anchor: Vec<Option<(SymbolId, Tuple)>>,
}

impl<'a> HomSearch<'a> {
    pub fn new(a: &'a Structure, b: &'a Structure) -> Result<Self> {
        a.require_signature(b.sig(), "homomorphism search")?;
        Ok(Self::new_unchecked(a, b))
    }

    pub(crate) fn new_unchecked(a: &'a Structure, b: &'a Structure) -> Self {
        HomSearch { a, b, injective: false, reflect: false, fixed: vec![None; a.size()] }
    }

    pub fn injective(mut self) -> Self {
        self.injective = true;
        self
    }

    pub fn embedding(mut self) -> Self {
        self.injective = true;
        self.reflect = true;
        self
    }

    pub fn fix(mut self, x: Elem, y: Elem) -> Self {
        self.fixed[x as usize] = Some(y);
        self
    }

    pub fn fix_prefix(mut self, images: &[Elem]) -> Self {
        for (x, &y) in images.iter().enumerate() {
            self.fixed[x] = Some(y);
        }
        self
    }

    fn plan(&self) -> Plan {
        let n = self.a.size();
        let tuples: Vec<(SymbolId, Tuple)> = self.a.all_tuples().map(|(s, t)| (s, t.clone())).collect();
        let mut degree = vec![0usize; n];
        for (_, t) in &tuples {
            for &e in t {
                degree[e as usize] += 1;
            }
        }
        let mut order: Vec<Elem> = (0..n as Elem).filter(|&e| self.fixed[e as usize].is_some()).collect();
        let mut placed = vec![false; n];
        for &e in &order {
            placed[e as usize] = true;
        }
        while order.len() < n {
            let mut best: Option<(usize, usize, Elem)> = None;
            for e in (0..n as Elem).filter(|&e| !placed[e as usize]) {
                let links = tuples
                    .iter()
                    .filter(|(_, t)| t.contains(&e) && t.iter().any(|&x| placed[x as usize]))
                    .count();
                let key = (links, degree[e as usize], e);
                let better = match best {
                    None => true,
                    Some((bl, bd, be)) => (links, degree[e as usize]) > (bl, bd) || ((links, degree[e as usize]) == (bl, bd) && e < be),
                };
                if better {
                    best = Some(key);
                }
            }
            let e = best.unwrap().2;
            placed[e as usize] = true;
            order.push(e);
        }
        let mut step_of = vec![0usize; n];
        for (i, &e) in order.iter().enumerate() {
            step_of[e as usize] = i;
        }
        let mut checks = vec![Vec::new(); n];
        let mut anchor: Vec<Option<(SymbolId, Tuple)>> = vec![None; n];
        for (s, t) in tuples {
            let last = t.iter().map(|&e| step_of[e as usize]).max().unwrap_or(0);
            let y = order[last];
            if anchor[last].is_none() && t.iter().any(|&e| e != y) {
                anchor[last] = Some((s, t.clone()));
            }
            checks[last].push((s, t));
        }
        // An anchor whose non-y entries are all earlier is always usable; a
        // tuple of only y (a loop) also narrows candidates.
        for step in 0..n {
            if anchor[step].is_none() {
                anchor[step] = checks[step].first().cloned();
            }
        }
        Plan { order, step_of, checks, anchor }
    }

    /// Calls `f` on every solution (as a map indexed by elements of `a`) until
    /// it returns `false`.
    pub fn for_each(&self, mut f: impl FnMut(&[Elem]) -> bool) {
        let n = self.a.size();
        if n == 0 {
            f(&[]);
            return;
        }
        if self.b.size() == 0 {
            return;
        }
        let plan = self.plan();
        let mut h = vec![u32::MAX; n];
        let mut inv = vec![u32::MAX; self.b.size()];
        self.rec(&plan, 0, &mut h, &mut inv, &mut f);
    }

    fn candidates(&self, plan: &Plan, step: usize, h: &[Elem]) -> Vec<Elem> {
        let y = plan.order[step];
        if let Some(v) = self.fixed[y as usize] {
            return vec![v];
        }
        let m = self.b.size();
        let Some((sym, t)) = &plan.anchor[step] else {
            return (0..m as Elem).collect();
        };
        let mut mark = vec![false; m];
        'tuples: for bt in self.b.tuples(*sym) {
            let mut val = u32::MAX;
            for (i, &e) in t.iter().enumerate() {
                if e == y {
                    if val == u32::MAX {
                        val = bt[i];
                    } else if val != bt[i] {
                        continue 'tuples;
                    }
                } else if plan.step_of[e as usize] < step && h[e as usize] != bt[i] {
                    continue 'tuples;
                }
            }
            mark[val as usize] = true;
        }
        (0..m as Elem).filter(|&v| mark[v as usize]).collect()
    }

    fn rec(
        &self,
        plan: &Plan,
        step: usize,
        h: &mut Vec<Elem>,
        inv: &mut Vec<Elem>,
        f: &mut impl FnMut(&[Elem]) -> bool,
    ) -> bool {
        if step == plan.order.len() {
            return f(h);
        }
        let y = plan.order[step];
        let mut buf = Tuple::new();
        for v in self.candidates(plan, step, h) {
            if self.injective && inv[v as usize] != u32::MAX {
                continue;
            }
            h[y as usize] = v;
            inv[v as usize] = y;
            let ok = plan.checks[step].iter().all(|(s, t)| {
                buf.clear();
                buf.extend(t.iter().map(|&e| h[e as usize]));
                self.b.holds(*s, &buf)
            }) && (!self.reflect || self.reflects_at(v, inv));
            let keep_going = !ok || self.rec(plan, step + 1, h, inv, f);
            inv[v as usize] = u32::MAX;
            h[y as usize] = u32::MAX;
            if !keep_going {
                return false;
            }
        }
        true
    }

    /// Every tuple of `b` inside the current image and containing `v` must
    /// come from a tuple of `a`.
    fn reflects_at(&self, v: Elem, inv: &[Elem]) -> bool {
        let mut buf = Tuple::new();
        for s in 0..self.b.sig().len() {
            for bt in self.b.tuples(s) {
                if !bt.contains(&v) {
                    continue;
                }
                buf.clear();
                let mut inside = true;
                for &e in bt {
                    let p = inv[e as usize];
                    if p == u32::MAX {
                        inside = false;
                        break;
                    }
                    buf.push(p);
                }
                if inside && !self.a.holds(s, &buf) {
                    return false;
                }
            }
        }
        true
    }

    pub fn first(&self) -> Option<Vec<Elem>> {
        let mut out = None;
        self.for_each(|h| {
            out = Some(h.to_vec());
            false
        });
        out
    }

    pub fn exists(&self) -> bool {
        self.first().is_some()
    }

    pub fn count(&self) -> usize {
        let mut c = 0;
        self.for_each(|_| {
            c += 1;
            true
        });
        c
    }

    pub fn all(&self) -> Vec<Vec<Elem>> {
        let mut out = Vec::new();
        self.for_each(|h| {
            out.push(h.to_vec());
            true
        });
        out
    }
}

/// First homomorphism from `a` to `b` in backtracking order.
pub fn hom_search(a: &Structure, b: &Structure) -> Result<Option<Morphism>> {
    Ok(HomSearch::new(a, b)?.first().map(|map| Morphism { map, kind: MorphismKind::Homomorphism }))
}

/// First embedding (injective, relation-reflecting homomorphism).
pub fn embedding_search(a: &Structure, b: &Structure) -> Result<Option<Morphism>> {
    Ok(HomSearch::new(a, b)?.embedding().first().map(|map| Morphism { map, kind: MorphismKind::Embedding }))
}

/// All embeddings of `a` into `b`.
pub fn enumerate_embeddings(a: &Structure, b: &Structure) -> Result<Vec<Morphism>> {
    Ok(HomSearch::new(a, b)?
        .embedding()
        .all()
        .into_iter()
        .map(|map| Morphism { map, kind: MorphismKind::Embedding })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::{RelSymbol, Signature};
    use std::sync::Arc;

    fn gsig() -> Arc<Signature> {
        Arc::new(Signature::new(vec![RelSymbol::new("E", 2)]).unwrap())
    }

    fn sym_cycle(n: u32) -> Structure {
        let mut s = Structure::new(gsig(), n as usize);
        for i in 0..n {
            s.insert(0, &[i, (i + 1) % n]);
            s.insert(0, &[(i + 1) % n, i]);
        }
        s
    }

    fn clique(n: u32) -> Structure {
        let mut s = Structure::new(gsig(), n as usize);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s.insert(0, &[i, j]);
                }
            }
        }
        s
    }

    fn edge() -> Structure {
        Structure::from_tuples(gsig(), 2, [(0, [0u32, 1])]).unwrap()
    }

    #[test]
    fn edge_maps_into_k5() {
        let m = hom_search(&edge(), &clique(5)).unwrap().unwrap();
        assert!(m.verify(&edge(), &clique(5)));
    }

    #[test]
    fn triangle_does_not_map_to_an_edge() {
        let mut k2 = edge();
        k2.insert(0, &[1, 0]);
        assert!(hom_search(&sym_cycle(3), &k2).unwrap().is_none());
    }

    #[test]
    fn edge_has_six_embeddings_into_a_triangle() {
        // Brute force: injective maps of 2 elements into 3 = 6, each edge of
        // the symmetric triangle present in both directions, but reflection
        // fails because the reverse edge is not in the source.
        let src = edge();
        let tri = clique(3);
        let mut directed_tri = Structure::new(gsig(), 3);
        for i in 0..3 {
            directed_tri.insert(0, &[i, (i + 1) % 3]);
        }
        let brute = |b: &Structure| {
            let mut c = 0;
            for x in 0..b.size() as u32 {
                for y in 0..b.size() as u32 {
                    if x != y
                        && (Morphism { map: vec![x, y], kind: MorphismKind::Embedding }).verify(&src, b)
                    {
                        c += 1;
                    }
                }
            }
            c
        };
        assert_eq!(enumerate_embeddings(&src, &tri).unwrap().len(), brute(&tri));
        assert_eq!(brute(&tri), 0);
        assert_eq!(enumerate_embeddings(&src, &directed_tri).unwrap().len(), brute(&directed_tri));
        assert_eq!(brute(&directed_tri), 3);
        let mut sym_edge = edge();
        sym_edge.insert(0, &[1, 0]);
        assert_eq!(enumerate_embeddings(&sym_edge, &tri).unwrap().len(), 6);
    }

    #[test]
    fn triangle_does_not_embed_in_pentagon() {
        assert!(embedding_search(&sym_cycle(3), &sym_cycle(5)).unwrap().is_none());
        // but the pentagon maps onto the triangle
        assert!(hom_search(&sym_cycle(5), &sym_cycle(3)).unwrap().is_some());
    }

    #[test]
    fn identity_is_an_embedding() {
        let c = sym_cycle(4);
        let m = embedding_search(&c, &c).unwrap().unwrap();
        assert!(m.verify(&c, &c));
    }

    #[test]
    fn fixed_images_are_respected() {
        let c5 = sym_cycle(5);
        let hs = HomSearch::new(&c5, &c5).unwrap().embedding().fix(0, 2);
        let all = hs.all();
        // automorphisms of C5 sending 0 to 2: a rotation and a reflection
        assert_eq!(all.len(), 2);
        assert!(all.iter().all(|h| h[0] == 2));
    }

    #[test]
    fn signature_mismatch_is_an_error() {
        let other = Arc::new(Signature::new(vec![RelSymbol::new("F", 2)]).unwrap());
        let b = Structure::new(other, 2);
        assert!(hom_search(&edge(), &b).is_err());
    }
}
