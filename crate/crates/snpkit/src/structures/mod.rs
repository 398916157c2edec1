//! Finite relational structures over a fixed signature.
//!
//! Elements are stored 0-based internally; the text format is 1-based.

mod canon;
mod enumerate;
mod hom;
mod pieces;
mod query;
mod text;

pub use canon::{canonical_form, canonical_key, CanonKey};
pub(crate) use canon::next_permutation;
pub use enumerate::{
    enumerate_structures, random_structure, structure_count, StructureIter,
};
pub use hom::{
    embedding_search, enumerate_embeddings, hom_search, is_partial_isomorphism, HomSearch, Morphism,
    MorphismKind,
};
pub use pieces::{enumerate_pieces, is_separated, exists_pre_formula, pre_formula, Piece, PreFormula};
pub use query::{canonical_database, canonical_query, Atom};
pub use text::{parse_structure, print_structure};

use crate::error::{Error, Result};
use smallvec::SmallVec;
use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

pub type Elem = u32;
pub type Tuple = SmallVec<[Elem; 4]>;
pub type SymbolId = usize;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelSymbol {
    pub name: String,
    pub arity: usize,
}

impl RelSymbol {
    pub fn new(name: impl Into<String>, arity: usize) -> Self {
        RelSymbol { name: name.into(), arity }
    }
}

/// Ordered list of symbols with unique names.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Signature {
    symbols: Vec<RelSymbol>,
}

impl Signature {
    pub fn new(symbols: Vec<RelSymbol>) -> Result<Self> {
        let mut sig = Signature::default();
        for s in symbols {
            sig.push(s)?;
        }
        Ok(sig)
    }

    pub fn empty() -> Self {
        Signature::default()
    }

    pub fn push(&mut self, sym: RelSymbol) -> Result<SymbolId> {
        if self.find(&sym.name).is_some() {
            return Err(Error::SignatureMismatch(format!("duplicate symbol `{}`", sym.name)));
        }
        self.symbols.push(sym);
        Ok(self.symbols.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[RelSymbol] {
        &self.symbols
    }

    pub fn get(&self, id: SymbolId) -> &RelSymbol {
        &self.symbols[id]
    }

    pub fn arity(&self, id: SymbolId) -> usize {
        self.symbols[id].arity
    }

    pub fn name(&self, id: SymbolId) -> &str {
        &self.symbols[id].name
    }

    pub fn find(&self, name: &str) -> Option<SymbolId> {
        self.symbols.iter().position(|s| s.name == name)
    }

    pub fn max_arity(&self) -> usize {
        self.symbols.iter().map(|s| s.arity).max().unwrap_or(0)
    }

    /// `self` followed by `other`; names must stay unique.
    pub fn concat(&self, other: &Signature) -> Result<Signature> {
        let mut out = self.clone();
        for s in &other.symbols {
            out.push(s.clone())?;
        }
        Ok(out)
    }

    /// Names not already used in this signature, derived from `base`.
    pub fn fresh_name(&self, base: &str) -> String {
        if self.find(base).is_none() {
            return base.to_string();
        }
        (1..).map(|i| format!("{base}{i}")).find(|n| self.find(n).is_none()).unwrap()
    }
}

#[derive(Clone, Debug, Default)]
struct Relation {
    tuples: BTreeSet<Tuple>,
    /// Membership bitmap, kept when `size^arity <= 64`.
    bits: Option<u64>,
}

/// A finite structure with domain `{0, .., size-1}`.
#[derive(Clone)]
pub struct Structure {
    sig: Arc<Signature>,
    size: usize,
    rels: Vec<Relation>,
}

impl PartialEq for Structure {
    fn eq(&self, other: &Self) -> bool {
        self.size == other.size
            && (Arc::ptr_eq(&self.sig, &other.sig) || self.sig == other.sig)
            && self.rels.iter().zip(&other.rels).all(|(a, b)| a.tuples == b.tuples)
    }
}

impl Eq for Structure {}

impl Hash for Structure {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.size.hash(state);
        for r in &self.rels {
            r.tuples.hash(state);
        }
    }
}

impl fmt::Debug for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_structure(self))
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_structure(self))
    }
}

fn dense_ok(size: usize, arity: usize) -> bool {
    let mut cells: u128 = 1;
    for _ in 0..arity {
        cells *= size as u128;
        if cells > 64 {
            return false;
        }
    }
    true
}

impl Structure {
    pub fn new(sig: Arc<Signature>, size: usize) -> Self {
        let rels = sig
            .symbols()
            .iter()
            .map(|s| Relation { tuples: BTreeSet::new(), bits: dense_ok(size, s.arity).then_some(0) })
            .collect();
        Structure { sig, size, rels }
    }

    pub fn from_tuples<I, T>(sig: Arc<Signature>, size: usize, tuples: I) -> Result<Self>
    where
        I: IntoIterator<Item = (SymbolId, T)>,
        T: AsRef<[Elem]>,
    {
        let mut s = Structure::new(sig, size);
        for (sym, t) in tuples {
            s.try_insert(sym, t.as_ref())?;
        }
        Ok(s)
    }

    pub fn sig(&self) -> &Arc<Signature> {
        &self.sig
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn arity(&self, sym: SymbolId) -> usize {
        self.sig.arity(sym)
    }

    fn bit_index(&self, t: &[Elem]) -> usize {
        let mut idx = 0usize;
        for &e in t.iter().rev() {
            idx = idx * self.size + e as usize;
        }
        idx
    }

    pub fn holds(&self, sym: SymbolId, t: &[Elem]) -> bool {
        let rel = &self.rels[sym];
        match rel.bits {
            Some(bits) => (bits >> self.bit_index(t)) & 1 == 1,
            None => rel.tuples.contains(t),
        }
    }

    /// Inserts a tuple, checking arity and range.
    pub fn try_insert(&mut self, sym: SymbolId, t: &[Elem]) -> Result<bool> {
        if sym >= self.sig.len() {
            return Err(Error::Internal(format!("symbol id {sym} out of range")));
        }
        let arity = self.sig.arity(sym);
        if t.len() != arity {
            return Err(Error::ArityMismatch {
                name: self.sig.name(sym).to_string(),
                expected: arity,
                found: t.len(),
            });
        }
        if let Some(&e) = t.iter().find(|&&e| e as usize >= self.size) {
            return Err(Error::Precondition(format!(
                "element {} outside domain of size {}",
                e + 1,
                self.size
            )));
        }
        Ok(self.insert(sym, t))
    }

    /// Inserts a tuple; caller guarantees arity and range.
    pub fn insert(&mut self, sym: SymbolId, t: &[Elem]) -> bool {
        debug_assert_eq!(t.len(), self.sig.arity(sym));
        let idx = self.rels[sym].bits.map(|_| self.bit_index(t));
        let rel = &mut self.rels[sym];
        if let (Some(bits), Some(i)) = (rel.bits.as_mut(), idx) {
            *bits |= 1 << i;
        }
        rel.tuples.insert(Tuple::from_slice(t))
    }

    pub fn remove(&mut self, sym: SymbolId, t: &[Elem]) -> bool {
        let idx = self.rels[sym].bits.map(|_| self.bit_index(t));
        let rel = &mut self.rels[sym];
        if let (Some(bits), Some(i)) = (rel.bits.as_mut(), idx) {
            *bits &= !(1 << i);
        }
        rel.tuples.remove(t)
    }

    pub fn set(&mut self, sym: SymbolId, t: &[Elem], value: bool) {
        if value {
            self.insert(sym, t);
        } else {
            self.remove(sym, t);
        }
    }

    pub fn tuples(&self, sym: SymbolId) -> impl Iterator<Item = &Tuple> + '_ {
        self.rels[sym].tuples.iter()
    }

    pub fn relation_len(&self, sym: SymbolId) -> usize {
        self.rels[sym].tuples.len()
    }

    /// Every tuple of every relation, in symbol order.
    pub fn all_tuples(&self) -> impl Iterator<Item = (SymbolId, &Tuple)> + '_ {
        self.rels.iter().enumerate().flat_map(|(s, r)| r.tuples.iter().map(move |t| (s, t)))
    }

    pub fn tuple_count(&self) -> usize {
        self.rels.iter().map(|r| r.tuples.len()).sum()
    }

    /// Substructure induced on `elems`, relabelled so that `elems[i]` becomes `i`.
    pub fn induced(&self, elems: &[Elem]) -> Structure {
        let mut pos = vec![u32::MAX; self.size];
        for (i, &e) in elems.iter().enumerate() {
            pos[e as usize] = i as u32;
        }
        let mut out = Structure::new(self.sig.clone(), elems.len());
        let mut buf = Tuple::new();
        for (sym, t) in self.all_tuples() {
            buf.clear();
            if t.iter().all(|&e| {
                let p = pos[e as usize];
                buf.push(p);
                p != u32::MAX
            }) {
                out.insert(sym, &buf);
            }
        }
        out
    }

    /// Image of the structure under `map` into a domain of `new_size` elements.
    pub fn map_into(&self, map: &[Elem], new_size: usize) -> Structure {
        let mut out = Structure::new(self.sig.clone(), new_size);
        let mut buf = Tuple::new();
        for (sym, t) in self.all_tuples() {
            buf.clear();
            buf.extend(t.iter().map(|&e| map[e as usize]));
            out.insert(sym, &buf);
        }
        out
    }

    /// Same structure with `k` extra isolated elements appended.
    pub fn with_extra_elements(&self, k: usize) -> Structure {
        let map: Vec<Elem> = (0..self.size as Elem).collect();
        self.map_into(&map, self.size + k)
    }

    /// Re-expresses the structure over `target`: symbols are matched by name,
    /// symbols missing from `self` are empty, symbols missing from `target`
    /// are dropped.
    pub fn project(&self, target: &Arc<Signature>) -> Result<Structure> {
        let mut out = Structure::new(target.clone(), self.size);
        for (tid, tsym) in target.symbols().iter().enumerate() {
            if let Some(sid) = self.sig.find(&tsym.name) {
                if self.sig.arity(sid) != tsym.arity {
                    return Err(Error::ArityMismatch {
                        name: tsym.name.clone(),
                        expected: tsym.arity,
                        found: self.sig.arity(sid),
                    });
                }
                for t in self.tuples(sid) {
                    out.insert(tid, t);
                }
            }
        }
        Ok(out)
    }

    pub fn same_signature(&self, other: &Structure) -> bool {
        Arc::ptr_eq(&self.sig, &other.sig) || *self.sig == *other.sig
    }

    pub fn require_signature(&self, sig: &Signature, what: &str) -> Result<()> {
        if *self.sig != *sig {
            return Err(Error::SignatureMismatch(format!(
                "{what}: structure over [{}], expected [{}]",
                sig_names(&self.sig),
                sig_names(sig)
            )));
        }
        Ok(())
    }

    /// Elements that occur in no tuple.
    pub fn isolated_elements(&self) -> Vec<Elem> {
        let mut seen = vec![false; self.size];
        for (_, t) in self.all_tuples() {
            for &e in t {
                seen[e as usize] = true;
            }
        }
        (0..self.size as Elem).filter(|&e| !seen[e as usize]).collect()
    }

    /// Connected components of the co-occurrence graph, each sorted.
    pub fn components(&self) -> Vec<Vec<Elem>> {
        let mut uf = UnionFind::new(self.size);
        for (_, t) in self.all_tuples() {
            for w in t.windows(2) {
                uf.union(w[0] as usize, w[1] as usize);
            }
        }
        uf.groups().into_iter().map(|g| g.into_iter().map(|e| e as Elem).collect()).collect()
    }
}

pub(crate) fn sig_names(sig: &Signature) -> String {
    sig.symbols().iter().map(|s| format!("{}/{}", s.name, s.arity)).collect::<Vec<_>>().join(" ")
}

/// True iff the structure is not the disjoint union of two structures with
/// nonempty domains.
pub fn is_connected(a: &Structure) -> bool {
    a.size() <= 1 || a.components().len() == 1
}

/// Disjoint-set forest over `0..n`.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut c = x;
        while self.parent[c] != r {
            let next = self.parent[c];
            self.parent[c] = r;
            c = next;
        }
        r
    }

    /// Unites the classes; the smaller root survives so labels stay stable.
    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }

    /// Classes ordered by their smallest member.
    pub fn groups(&mut self) -> Vec<Vec<usize>> {
        let n = self.parent.len();
        let mut slot = vec![usize::MAX; n];
        let mut out: Vec<Vec<usize>> = Vec::new();
        for x in 0..n {
            let r = self.find(x);
            if slot[r] == usize::MAX {
                slot[r] = out.len();
                out.push(Vec::new());
            }
            out[slot[r]].push(x);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph_sig() -> Arc<Signature> {
        Arc::new(Signature::new(vec![RelSymbol::new("E", 2)]).unwrap())
    }

    #[test]
    fn dense_and_sparse_membership_agree() {
        let sig = Arc::new(
            Signature::new(vec![RelSymbol::new("E", 2), RelSymbol::new("T", 3)]).unwrap(),
        );
        // size 5: E is dense (25 cells), T is sparse (125 cells).
        let mut s = Structure::new(sig, 5);
        s.insert(0, &[4, 3]);
        s.insert(1, &[4, 3, 2]);
        assert!(s.holds(0, &[4, 3]));
        assert!(!s.holds(0, &[3, 4]));
        assert!(s.holds(1, &[4, 3, 2]));
        assert!(s.remove(0, &[4, 3]));
        assert!(!s.holds(0, &[4, 3]));
    }

    #[test]
    fn arity_and_range_are_checked() {
        let mut s = Structure::new(graph_sig(), 2);
        assert!(matches!(s.try_insert(0, &[0]), Err(Error::ArityMismatch { .. })));
        assert!(s.try_insert(0, &[0, 2]).is_err());
        assert!(s.try_insert(0, &[1, 1]).unwrap());
    }

    #[test]
    fn connectivity_basics() {
        let sig = graph_sig();
        assert!(is_connected(&Structure::new(sig.clone(), 1)));
        assert!(!is_connected(&Structure::new(sig.clone(), 2)));
        let path = Structure::from_tuples(sig, 3, [(0, [0u32, 1]), (0, [2, 1])]).unwrap();
        assert!(is_connected(&path));
    }

    #[test]
    fn induced_relabels_in_listing_order() {
        let sig = graph_sig();
        let s = Structure::from_tuples(sig, 3, [(0, [0u32, 1]), (0, [1, 2])]).unwrap();
        let sub = s.induced(&[2, 1]);
        assert_eq!(sub.size(), 2);
        assert!(sub.holds(0, &[1, 0]));
        assert_eq!(sub.tuple_count(), 1);
    }
}
