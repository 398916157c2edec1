use super::{Elem, Structure, Tuple};

/// Isomorphism-invariant key of a structure, optionally with a fixed prefix
/// of elements that must keep their positions (used for rooted structures).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonKey {
    pub size: usize,
    pub prefix: usize,
    pub code: Vec<u32>,
}

fn encode(s: &Structure, relabel: &[Elem], out: &mut Vec<u32>) {
    out.clear();
    let mut buf: Vec<Tuple> = Vec::new();
    for sym in 0..s.sig().len() {
        buf.clear();
        buf.extend(s.tuples(sym).map(|t| t.iter().map(|&e| relabel[e as usize]).collect::<Tuple>()));
        buf.sort_unstable();
        out.push(buf.len() as u32);
        for t in &buf {
            out.extend(t.iter().copied());
        }
    }
}

/// Colour refinement: returns a colour per element, stable under isomorphisms
/// fixing the prefix pointwise.
fn refine(s: &Structure, prefix: usize) -> Vec<u32> {
    let n = s.size();
    let mut colour: Vec<u32> = (0..n).map(|e| if e < prefix { e as u32 } else { prefix as u32 }).collect();
    loop {
        let mut sig: Vec<(u32, Vec<(usize, usize, Vec<u32>)>)> = (0..n).map(|e| (colour[e], Vec::new())).collect();
        for (sym, t) in s.all_tuples() {
            let cols: Vec<u32> = t.iter().map(|&e| colour[e as usize]).collect();
            for (i, &e) in t.iter().enumerate() {
                sig[e as usize].1.push((sym, i, cols.clone()));
            }
        }
        for entry in &mut sig {
            entry.1.sort_unstable();
        }
        let mut distinct: Vec<&(u32, Vec<(usize, usize, Vec<u32>)>)> = sig.iter().collect();
        distinct.sort();
        distinct.dedup();
        let next: Vec<u32> = sig.iter().map(|x| distinct.binary_search(&x).unwrap() as u32).collect();
        let classes = |c: &[u32]| {
            let mut v = c.to_vec();
            v.sort_unstable();
            v.dedup();
            v.len()
        };
        if classes(&next) == classes(&colour) {
            return next;
        }
        colour = next;
    }
}

/// Returns the canonical key and a relabelling `perm` (old element to new
/// label) realising it. Exhaustive over permutations inside refinement cells,
/// which is fine for the small structures this crate handles.
pub fn canonical_form(s: &Structure, prefix: usize) -> (CanonKey, Vec<Elem>) {
    let n = s.size();
    let colour = refine(s, prefix);
    let mut cells: Vec<Vec<Elem>> = Vec::new();
    let mut order: Vec<Elem> = (0..n as Elem).collect();
    order.sort_by_key(|&e| (colour[e as usize], e));
    for e in order {
        match cells.last_mut() {
            Some(c) if colour[c[0] as usize] == colour[e as usize] => c.push(e),
            _ => cells.push(vec![e]),
        }
    }
    let mut best: Option<(Vec<u32>, Vec<Elem>)> = None;
    let mut relabel = vec![0 as Elem; n];
    let mut code = Vec::new();
    let mut perms: Vec<Vec<Elem>> = cells.clone();
    loop {
        let mut next_label = 0;
        for c in &perms {
            for &e in c {
                relabel[e as usize] = next_label;
                next_label += 1;
            }
        }
        encode(s, &relabel, &mut code);
        if best.as_ref().is_none_or(|(b, _)| code < *b) {
            best = Some((code.clone(), relabel.clone()));
        }
        // advance the product of per-cell permutations
        let mut i = perms.len();
        loop {
            if i == 0 {
                let (code, perm) = best.unwrap();
                return (CanonKey { size: n, prefix, code }, perm);
            }
            i -= 1;
            if next_permutation(&mut perms[i]) {
                break;
            }
            perms[i].sort_unstable();
        }
    }
}

pub fn canonical_key(s: &Structure, prefix: usize) -> CanonKey {
    canonical_form(s, prefix).0
}

pub(crate) fn next_permutation(v: &mut [Elem]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}
