//! Splitting a sentence into a disjunction of connected sentences, and the
//! ∀∃ containment test between such disjunctions.

use crate::error::{Error, Result};
use crate::logic::{clause_key, merge_equalities, Clause, Sentence};
use crate::structures::{CanonKey, UnionFind};
use std::collections::HashSet;

#[derive(Clone, Debug)]
pub struct Decomposition {
    pub disjuncts: Vec<Sentence>,
    /// For each disjunct, the chosen component index of every clause.
    pub provenance: Vec<Vec<(usize, usize)>>,
    /// Number of disjuncts before removing duplicates.
    pub product_size: u128,
}

/// The parts of a clause that share no variables, after identifying
/// variables related by `x != y` literals. Parts are ordered by their
/// smallest variable.
pub fn clause_components(c: &Clause) -> Vec<Clause> {
    let c = merge_equalities(c);
    let n = c.vars.len();
    let mut uf = UnionFind::new(n);
    for l in &c.lits {
        let vs = l.vars();
        for w in vs.windows(2) {
            uf.union(w[0], w[1]);
        }
    }
    let groups = uf.groups();
    if groups.len() <= 1 {
        return vec![c];
    }
    groups
        .into_iter()
        .map(|g| {
            let lits: Vec<_> = c.lits.iter().filter(|l| l.vars().iter().any(|v| g.contains(v))).cloned().collect();
            let mut map = vec![usize::MAX; n];
            for (i, &v) in g.iter().enumerate() {
                map[v] = i;
            }
            let vars = g.iter().map(|&v| c.vars[v].clone()).collect();
            Clause { vars: c.vars.clone(), lits }.substitute(&map, vars)
        })
        .collect()
}

/// Rewrites `phi` as an equivalent disjunction of connected sentences over
/// the same signatures. Disjuncts come in lexicographic order of the
/// per-clause component choices (first clause most significant); repeated
/// disjuncts, compared as clause sets up to variable renaming, are dropped.
pub fn connected_decomposition(phi: &Sentence, max_disjuncts: usize) -> Result<Decomposition> {
    if !phi.classify().is_gmsnp() {
        return Err(Error::Precondition("decomposition expects a guarded monotone sentence".into()));
    }
    let parts: Vec<Vec<Clause>> = phi.clauses().iter().map(clause_components).collect();
    let product_size = parts.iter().fold(1u128, |acc, p| acc.saturating_mul(p.len() as u128));
    if product_size > max_disjuncts as u128 {
        return Err(Error::Budget {
            stage: "decompose".into(),
            resource: "disjuncts",
            limit: max_disjuncts as u64,
        });
    }
    let keys: Vec<Vec<CanonKey>> =
        parts.iter().map(|p| p.iter().map(|c| clause_key(phi.full(), c)).collect()).collect();
    let mut seen: HashSet<Vec<CanonKey>> = HashSet::new();
    let mut out = Decomposition { disjuncts: Vec::new(), provenance: Vec::new(), product_size };
    let mut choice = vec![0usize; parts.len()];
    loop {
        let mut clauses = Vec::new();
        let mut ks: Vec<CanonKey> = Vec::new();
        for (i, &j) in choice.iter().enumerate() {
            if !ks.contains(&keys[i][j]) {
                ks.push(keys[i][j].clone());
                clauses.push(parts[i][j].clone());
            }
        }
        ks.sort();
        if seen.insert(ks) {
            out.disjuncts.push(phi.with_clauses(clauses)?);
            out.provenance.push(choice.iter().copied().enumerate().collect());
        }
        // odometer, last clause fastest
        let mut i = parts.len();
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            choice[i] += 1;
            if choice[i] < parts[i].len() {
                break;
            }
            choice[i] = 0;
        }
    }
}

/// `∀i ∃j pairwise(lhs[i], rhs[j])`, trying `j` in the given order and
/// stopping at the first success.
pub fn disjunction_containment(
    lhs: &[Sentence],
    rhs: &[Sentence],
    mut pairwise: impl FnMut(&Sentence, &Sentence) -> Result<bool>,
) -> Result<bool> {
    for l in lhs {
        let mut found = false;
        for r in rhs {
            if pairwise(l, r)? {
                found = true;
                break;
            }
        }
        if !found {
            return Ok(false);
        }
    }
    Ok(true)
}
