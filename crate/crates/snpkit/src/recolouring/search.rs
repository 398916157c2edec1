//! Recolouring search.
//!
//! ξ is fixed by its values on one representative per isomorphism class of
//! colours. Candidates per representative already satisfy conditions (i)
//! and (ii) locally; condition (iii) is enforced lazily: each violation found
//! on a complete candidate becomes a nogood over the images of the colours
//! it used, and the search restarts with conflict-directed backjumping.

use super::{
    check_condition_i, check_condition_ii, extension_violations, require_common_input, ColourTable,
    Recolouring,
};
use crate::budget::{Budget, Meter};
use crate::error::{Error, Result};
use crate::logic::Sentence;
use crate::structures::{Elem, SymbolId, Tuple};
use std::collections::{BTreeSet, HashSet};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchOutcome {
    Found(Recolouring),
    /// Every candidate was refuted.
    Absent,
    /// The budget ran out first.
    Unknown(String),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub representatives: usize,
    pub rounds: usize,
    pub nogoods: usize,
    pub nodes: u64,
}

/// Facts about the images of representatives that must not all hold.
type Nogood = Vec<(usize, Vec<(SymbolId, Tuple, bool)>)>;

struct Orbits {
    /// Representative of each colour and the permutation `p` with
    /// `colour = view(rep, p)`, as an index into the table's permutations.
    rep: Vec<usize>,
    perm: Vec<usize>,
    perm_tuple: Vec<Vec<Elem>>,
    reps: Vec<usize>,
}

fn orbits(c: &ColourTable) -> Orbits {
    let mut rep = vec![0; c.len()];
    let mut perm = vec![0; c.len()];
    let mut perm_tuple = vec![Vec::new(); c.len()];
    for t in 0..c.len() {
        let k = c.colours[t].size();
        let (qi, r) = (0..c.perms(k).len()).map(|qi| (qi, c.permuted(t, qi))).min_by_key(|&(_, v)| v).expect("k ≥ 1");
        let q = &c.perms(k)[qi];
        let mut p = vec![0 as Elem; k];
        for (j, &e) in q.iter().enumerate() {
            p[e as usize] = j as Elem;
        }
        rep[t] = r;
        perm[t] = c.perms(k).iter().position(|x| *x == p).expect("permutation");
        perm_tuple[t] = p;
    }
    let mut reps: Vec<usize> = (0..c.len()).filter(|&t| rep[t] == t).collect();
    reps.sort_by_key(|&t| (c.colours[t].size(), c.colours[t].tuple_count(), t));
    Orbits { rep, perm, perm_tuple, reps }
}

struct Csp<'a> {
    c2: &'a ColourTable,
    orb: Orbits,
    /// Position of each representative in the variable order.
    pos: Vec<usize>,
    domains: Vec<Vec<usize>>,
    /// Per variable, the Φ1 colour of each face.
    faces: Vec<Vec<usize>>,
    nogoods: Vec<Nogood>,
    /// Nogood ids indexed by their last variable.
    watch: Vec<Vec<usize>>,
    value: Vec<usize>,
}

impl Csp<'_> {
    fn image(&self, t: usize) -> Option<usize> {
        let r = self.orb.rep[t];
        let u = self.value[self.pos[r]];
        Some(self.c2.permuted(u, self.orb.perm[t]))
    }

    /// Culprit variables if assigning `u` to variable `i` violates a face
    /// constraint or a nogood.
    fn conflicts(&self, i: usize, u: usize) -> Option<BTreeSet<usize>> {
        for (j, t) in self.faces[i].iter().enumerate() {
            if Some(self.c2.face(u, j)) != self.image(*t) {
                return Some(BTreeSet::from([self.pos[self.orb.rep[*t]]]));
            }
        }
        for &g in &self.watch[i] {
            let holds = self.nogoods[g].iter().all(|(r, facts)| {
                let v = if self.pos[*r] == i { u } else { self.value[self.pos[*r]] };
                let s = &self.c2.colours[v];
                facts.iter().all(|(sym, tup, val)| s.holds(*sym, tup) == *val)
            });
            if holds {
                return Some(self.nogoods[g].iter().map(|(r, _)| self.pos[*r]).filter(|&j| j != i).collect());
            }
        }
        None
    }

    /// Conflict-directed backjumping over the variables in order; true
    /// when every variable got a value.
    fn solve(&mut self, meter: &mut Meter) -> Result<bool> {
        let n = self.domains.len();
        let mut next = vec![0usize; n];
        let mut conf: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        let mut i = 0;
        loop {
            if i == n {
                return Ok(true);
            }
            let mut assigned = false;
            while next[i] < self.domains[i].len() {
                meter.node()?;
                let u = self.domains[i][next[i]];
                next[i] += 1;
                match self.conflicts(i, u) {
                    Some(c) => conf[i].extend(c),
                    None => {
                        self.value[i] = u;
                        assigned = true;
                        break;
                    }
                }
            }
            if assigned {
                i += 1;
                if i < n {
                    next[i] = 0;
                    conf[i].clear();
                }
                continue;
            }
            let Some(&h) = conf[i].iter().next_back() else { return Ok(false) };
            let carried: Vec<usize> = conf[i].iter().copied().filter(|&j| j != h).collect();
            conf[h].extend(carried);
            for j in h..=i {
                self.value[j] = usize::MAX;
            }
            i = h;
        }
    }

    fn add_nogood(&mut self, g: Nogood) {
        let last = g.iter().map(|(r, _)| self.pos[*r]).max().expect("nonempty nogood");
        self.watch[last].push(self.nogoods.len());
        self.nogoods.push(g);
    }
}

/// Existential symbols with the same name and arity on both sides.
/// Candidates sharing more of these facts with the source colour are tried
/// first, which makes the identity the first candidate when Φ1 = Φ2.
fn shared_symbols(c1: &ColourTable, c2: &ColourTable) -> Vec<(SymbolId, SymbolId)> {
    (c2.tau.len()..c2.sig.len())
        .filter_map(|s2| {
            let sym = c2.sig.get(s2);
            c1.sig.find(&sym.name).filter(|&s1| s1 >= c1.tau.len() && c1.sig.arity(s1) == sym.arity).map(|s1| (s1, s2))
        })
        .collect()
}

pub fn recolouring_search(
    phi1: &Sentence,
    phi2: &Sentence,
    c1: &ColourTable,
    c2: &ColourTable,
    budget: &Budget,
) -> Result<(SearchOutcome, SearchStats)> {
    require_common_input(phi1, phi2)?;
    if c1.n != c2.n {
        return Err(Error::Precondition("colour tables must share n".into()));
    }
    let mut meter = budget.meter("recolouring search");
    match run(phi1, phi2, c1, c2, &mut meter) {
        Ok(r) => Ok(r),
        Err(e) if e.is_budget() => Ok((SearchOutcome::Unknown(e.to_string()), SearchStats { nodes: meter.nodes, ..Default::default() })),
        Err(e) => Err(e),
    }
}

fn run(
    phi1: &Sentence,
    phi2: &Sentence,
    c1: &ColourTable,
    c2: &ColourTable,
    meter: &mut Meter,
) -> Result<(SearchOutcome, SearchStats)> {
    let mut csp = build_csp(c1, c2)?;
    let nvars = csp.domains.len();
    let mut stats = SearchStats { representatives: nvars, ..Default::default() };
    let mut seen: HashSet<Nogood> = HashSet::new();
    loop {
        stats.rounds += 1;
        csp.value.iter_mut().for_each(|v| *v = usize::MAX);
        let solved = csp.solve(meter)?;
        stats.nodes = meter.nodes;
        if !solved {
            return Ok((SearchOutcome::Absent, stats));
        }
        let map: Vec<usize> = (0..c1.len())
            .map(|t| csp.image(t).ok_or_else(|| Error::Internal("image outside the colour set".into())))
            .collect::<Result<_>>()?;
        let xi = Recolouring { map };
        debug_assert!(check_condition_i(&xi, c1, c2).is_none());
        debug_assert!(check_condition_ii(&xi, c1, c2)?.is_none());
        let found = extension_violations(phi1, phi2, c1, c2, &|t| xi.map[t], 32, meter)?;
        if found.is_empty() {
            stats.nodes = meter.nodes;
            return Ok((SearchOutcome::Found(xi), stats));
        }
        let mut added = 0;
        for v in found {
            if let Some(g) = lift(&csp, &v.blame) {
                if seen.insert(g.clone()) {
                    csp.add_nogood(g);
                    added += 1;
                }
            }
        }
        if added == 0 {
            return Err(Error::Internal("violation did not yield a new nogood".into()));
        }
        stats.nogoods += added;
    }
}

fn build_csp<'a>(c1: &ColourTable, c2: &'a ColourTable) -> Result<Csp<'a>> {
    let orb = orbits(c1);
    let mut pos = vec![usize::MAX; c1.len()];
    for (i, &r) in orb.reps.iter().enumerate() {
        pos[r] = i;
    }
    let shared = shared_symbols(c1, c2);
    let agreement = |t: usize, u: usize| {
        let (a, b) = (&c1.colours[t], &c2.colours[u]);
        shared.iter().map(|&(s1, s2)| a.tuples(s1).filter(|x| b.holds(s2, x)).count()).sum::<usize>()
    };
    let mut domains = Vec::new();
    let mut faces = Vec::new();
    for &r in &orb.reps {
        let k = c1.colours[r].size();
        let autos: Vec<usize> = (0..c1.perms(k).len()).filter(|&a| c1.permuted(r, a) == r).collect();
        let mut dom: Vec<usize> = c2
            .with_reduct(&c1.tau_reduct(&c1.colours[r]))
            .iter()
            .copied()
            .filter(|&u| autos.iter().all(|&a| c2.permuted(u, a) == u))
            .collect();
        dom.sort_by_cached_key(|&u| (std::cmp::Reverse(agreement(r, u)), c2.colours[u].tuple_count(), u));
        domains.push(dom);
        faces.push(if k == 1 { Vec::new() } else { (0..k).map(|j| c1.face(r, j)).collect() });
    }
    let nvars = orb.reps.len();
    Ok(Csp {
        c2,
        orb,
        pos,
        domains,
        faces,
        nogoods: Vec::new(),
        watch: vec![Vec::new(); nvars],
        value: vec![usize::MAX; nvars],
    })
}

/// Moves the blamed facts from colours to their representatives.
fn lift(csp: &Csp, blame: &[(usize, Vec<(SymbolId, Tuple, bool)>)]) -> Option<Nogood> {
    let mut out: Nogood = Vec::new();
    for (t, facts) in blame {
        let r = csp.orb.rep[*t];
        let p = &csp.orb.perm_tuple[*t];
        let i = match out.iter().position(|(x, _)| *x == r) {
            Some(i) => i,
            None => {
                out.push((r, Vec::new()));
                out.len() - 1
            }
        };
        for (sym, tup, val) in facts {
            let g: Tuple = tup.iter().map(|&e| p[e as usize]).collect();
            let entry = &mut out[i].1;
            match entry.iter().find(|(s, u, _)| *s == *sym && *u == g) {
                Some((_, _, w)) if *w != *val => return None,
                Some(_) => {}
                None => entry.push((*sym, g, *val)),
            }
        }
    }
    for (_, f) in &mut out {
        f.sort();
    }
    out.sort();
    Some(out)
}

/// A uniformly guided random map satisfying conditions (i) and (ii), if the
/// greedy walk does not get stuck.
#[cfg(test)]
pub(crate) fn random_consistent_map(c1: &ColourTable, c2: &ColourTable, rng: &mut impl rand::Rng) -> Option<Recolouring> {
    let mut csp = build_csp(c1, c2).ok()?;
    for i in 0..csp.domains.len() {
        let ok: Vec<usize> = csp.domains[i].iter().copied().filter(|&u| csp.conflicts(i, u).is_none()).collect();
        if ok.is_empty() {
            return None;
        }
        csp.value[i] = ok[rng.gen_range(0..ok.len())];
    }
    let map = (0..c1.len()).map(|t| csp.image(t)).collect::<Option<_>>()?;
    Some(Recolouring { map })
}
