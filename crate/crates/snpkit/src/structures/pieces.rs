use super::canon::{canonical_key, next_permutation, CanonKey};
use super::query::Atom;
use super::{Elem, Structure};
use crate::error::{Error, Result};
use std::collections::HashSet;
use std::fmt;

/// A proper part `support` of `host` with an ordered root inside it, such
/// that every tuple of the host lies in the support or in root ∪ (host ∖ support).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Piece {
    pub host: Structure,
    pub support: Vec<Elem>,
    pub root: Vec<Elem>,
}

impl Piece {
    pub fn new(host: Structure, support: Vec<Elem>, root: Vec<Elem>) -> Result<Piece> {
        let mut support = support;
        support.sort_unstable();
        support.dedup();
        let n = host.size();
        if support.is_empty() || support.len() >= n || support.iter().any(|&e| e as usize >= n) {
            return Err(Error::Precondition("piece support must be a nonempty proper subset of the host".into()));
        }
        if root.is_empty() || root.iter().any(|e| !support.contains(e)) || has_repeats(&root) {
            return Err(Error::Precondition("piece root must list distinct support elements".into()));
        }
        if !is_separated(&host, &support, &root) {
            return Err(Error::Precondition("support and root do not separate the host".into()));
        }
        Ok(Piece { host, support, root })
    }

    pub fn root_len(&self) -> usize {
        self.root.len()
    }

    /// Elements of the support that are not in the root, ascending.
    pub fn params(&self) -> Vec<Elem> {
        self.support.iter().copied().filter(|e| !self.root.contains(e)).collect()
    }

    /// The substructure induced on the support, relabelled so that the root
    /// comes first (in root order) followed by the other support elements.
    pub fn rooted(&self) -> Structure {
        let mut order = self.root.clone();
        order.extend(self.params());
        self.host.induced(&order)
    }

    /// Key identifying the piece up to isomorphisms that fix the root order.
    pub fn key(&self) -> CanonKey {
        canonical_key(&self.rooted(), self.root.len())
    }
}

fn has_repeats(v: &[Elem]) -> bool {
    v.iter().enumerate().any(|(i, e)| v[..i].contains(e))
}

/// The separation condition on a single candidate.
pub fn is_separated(host: &Structure, support: &[Elem], root: &[Elem]) -> bool {
    host.all_tuples().all(|(_, t)| {
        t.iter().all(|e| support.contains(e)) || t.iter().all(|e| root.contains(e) || !support.contains(e))
    })
}

/// All pieces of `b`, one per class under root-order-preserving isomorphism.
/// Order: by support bitmask, then root set bitmask, then root ordering.
pub fn enumerate_pieces(b: &Structure) -> Vec<Piece> {
    let n = b.size();
    assert!(n < 32, "piece enumeration is exhaustive over subsets");
    let mut seen: HashSet<CanonKey> = HashSet::new();
    let mut out = Vec::new();
    let full = (1u32 << n) - 1;
    for pmask in 1..full {
        let support: Vec<Elem> = (0..n as Elem).filter(|&e| pmask >> e & 1 == 1).collect();
        // T ranges over nonempty submasks of P
        let mut tmask = pmask;
        let mut tmasks = Vec::new();
        while tmask > 0 {
            tmasks.push(tmask);
            tmask = (tmask - 1) & pmask;
        }
        tmasks.reverse();
        for tmask in tmasks {
            let mut root: Vec<Elem> = (0..n as Elem).filter(|&e| tmask >> e & 1 == 1).collect();
            if !is_separated(b, &support, &root) {
                continue;
            }
            loop {
                let p = Piece { host: b.clone(), support: support.clone(), root: root.clone() };
                if seen.insert(p.key()) {
                    out.push(p);
                }
                if !next_permutation(&mut root) {
                    break;
                }
            }
        }
    }
    out
}

/// Atoms of a piece with the root replaced by `free` and the other support
/// elements by parameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreFormula {
    pub free: Vec<String>,
    pub params: Vec<String>,
    pub atoms: Vec<Atom>,
    /// Whether the parameters are existentially quantified.
    pub closed: bool,
}

impl PreFormula {
    pub fn display<'a>(&'a self, sig: &'a super::Signature) -> impl fmt::Display + 'a {
        struct D<'a>(&'a PreFormula, &'a super::Signature);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let body: Vec<String> = self.0.atoms.iter().map(|a| a.display(self.1).to_string()).collect();
                let body = if body.is_empty() { "true".to_string() } else { body.join(" & ") };
                if self.0.closed && !self.0.params.is_empty() {
                    write!(f, "exists {} ({})", self.0.params.join(" "), body)
                } else {
                    f.write_str(&body)
                }
            }
        }
        D(self, sig)
    }
}

pub fn pre_formula(p: &Piece, free: &[String]) -> Result<PreFormula> {
    if free.len() != p.root.len() {
        return Err(Error::ArityMismatch { name: "piece root".into(), expected: p.root.len(), found: free.len() });
    }
    let rooted = p.rooted();
    let k = p.root.len();
    let mut params = Vec::new();
    let mut i = 1;
    while params.len() < rooted.size() - k {
        let name = format!("p{i}");
        if !free.contains(&name) {
            params.push(name);
        }
        i += 1;
    }
    let name_of = |e: Elem| if (e as usize) < k { free[e as usize].clone() } else { params[e as usize - k].clone() };
    let atoms = rooted.all_tuples().map(|(s, t)| Atom { sym: s, args: t.iter().map(|&e| name_of(e)).collect() }).collect();
    Ok(PreFormula { free: free.to_vec(), params, atoms, closed: false })
}

pub fn exists_pre_formula(p: &Piece, free: &[String]) -> Result<PreFormula> {
    Ok(PreFormula { closed: true, ..pre_formula(p, free)? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::{RelSymbol, Signature};
    use std::sync::Arc;

    fn gsig() -> Arc<Signature> {
        Arc::new(Signature::new(vec![RelSymbol::new("E", 2)]).unwrap())
    }

    /// Independent check: every subset pair and ordering, filtered by the
    /// definition, then grouped by brute-force root-preserving isomorphism.
    fn brute_classes(b: &Structure) -> usize {
        let n = b.size();
        let mut reps: Vec<Structure> = Vec::new();
        let mut rep_roots: Vec<usize> = Vec::new();
        for pmask in 1u32..(1 << n) - 1 {
            for tmask in 1u32..(1 << n) {
                if tmask & !pmask != 0 {
                    continue;
                }
                let sup: Vec<u32> = (0..n as u32).filter(|e| pmask >> e & 1 == 1).collect();
                let t: Vec<u32> = (0..n as u32).filter(|e| tmask >> e & 1 == 1).collect();
                let ok = b.all_tuples().all(|(_, tu)| {
                    tu.iter().all(|&e| pmask >> e & 1 == 1)
                        || tu.iter().all(|&e| tmask >> e & 1 == 1 || pmask >> e & 1 == 0)
                });
                if !ok {
                    continue;
                }
                let mut root = t.clone();
                loop {
                    let mut order = root.clone();
                    order.extend(sup.iter().filter(|e| !root.contains(e)));
                    let s = b.induced(&order);
                    let iso = reps.iter().zip(&rep_roots).any(|(r, &k)| {
                        k == root.len() && r.size() == s.size() && {
                            let mut perm: Vec<u32> = (k as u32..s.size() as u32).collect();
                            let mut found = false;
                            loop {
                                let mut map: Vec<u32> = (0..k as u32).collect();
                                map.extend(&perm);
                                if s.map_into(&map, s.size()) == *r {
                                    found = true;
                                    break;
                                }
                                if !next_permutation(&mut perm) {
                                    break;
                                }
                            }
                            found
                        }
                    });
                    if !iso {
                        reps.push(s);
                        rep_roots.push(root.len());
                    }
                    if !next_permutation(&mut root) {
                        break;
                    }
                }
            }
        }
        reps.len()
    }

    #[test]
    fn directed_edge_pieces() {
        let b = Structure::from_tuples(gsig(), 2, [(0, [0u32, 1])]).unwrap();
        let ps = enumerate_pieces(&b);
        // {1} with root (1) and {2} with root (2) are both valid and isomorphic
        // as rooted one-element structures without tuples.
        assert_eq!(ps.len(), 1);
        assert_eq!(ps[0].support, vec![0]);
        assert_eq!(ps[0].root, vec![0]);
        assert!(pre_formula(&ps[0], &["x".into()]).unwrap().atoms.is_empty());
        assert_eq!(brute_classes(&b), 1);
    }

    #[test]
    fn single_element_has_no_pieces() {
        let b = Structure::new(gsig(), 1);
        assert!(enumerate_pieces(&b).is_empty());
    }

    #[test]
    fn counts_match_brute_force_on_small_graphs() {
        let path = Structure::from_tuples(gsig(), 3, [(0, [0u32, 1]), (0, [1, 2])]).unwrap();
        let tri = Structure::from_tuples(gsig(), 3, [(0, [0u32, 1]), (0, [1, 2]), (0, [2, 0])]).unwrap();
        let loose = Structure::new(gsig(), 3);
        for b in [path, tri, loose] {
            let ps = enumerate_pieces(&b);
            assert_eq!(ps.len(), brute_classes(&b));
            for p in &ps {
                assert!(is_separated(&p.host, &p.support, &p.root));
            }
        }
    }

    #[test]
    fn pre_formula_substitutes_root() {
        let b = Structure::from_tuples(gsig(), 3, [(0, [0u32, 1]), (0, [1, 2])]).unwrap();
        let p = Piece::new(b, vec![0, 1], vec![0]).unwrap_err();
        assert!(matches!(p, Error::Precondition(_)));
        let b = Structure::from_tuples(gsig(), 3, [(0, [0u32, 1]), (0, [1, 2])]).unwrap();
        let p = Piece::new(b, vec![0, 1], vec![0, 1]).unwrap();
        let pre = pre_formula(&p, &["x".into(), "y".into()]).unwrap();
        assert_eq!(pre.atoms, vec![Atom::new(0, ["x", "y"])]);
        assert!(pre_formula(&p, &["x".into()]).is_err());
        let b = Structure::from_tuples(gsig(), 3, [(0, [0u32, 1]), (0, [1, 2])]).unwrap();
        let p = Piece::new(b, vec![1, 2], vec![1]).unwrap();
        let ex = exists_pre_formula(&p, &["x".into()]).unwrap();
        assert_eq!(ex.params, vec!["p1"]);
        assert_eq!(ex.display(p.host.sig()).to_string(), "exists p1 (E(x,p1))");
    }
}
