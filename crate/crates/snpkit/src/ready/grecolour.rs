//! Recolourings between ordered τ-guarded colours.
//!
//! A colour on `0..k` is read with the natural order, so no two distinct
//! colours are identified by a relabelling. A map ξ from the guarded colours
//! of Φ1 to those of Φ2 must keep the input reduct (both sides sit on the
//! same input tuples of the same ordered structure, so the reducts are equal,
//! not just isomorphic). It is checked on skeletons: ordered models of Φ1 on
//! at most `max(wd(Φ2), 2n − 1)` elements, cut down to their input relations
//! and the colours of their guarded sets. Every skeleton must give
//! consistent Φ2 atoms on the guarded sets that extend to a model of Φ2.

use super::prime::ordered_guarded_colours;
use crate::budget::{Budget, Meter};
use crate::error::{Error, Result};
use crate::hn_transform::tuples_over;
use crate::logic::{Grounding, Lit, Sentence, SolveOutcome};
use crate::recolouring::{require_common_input, ColourTable};
use crate::structures::{is_connected, Elem, Structure, StructureIter, SymbolId};
use std::collections::HashMap;

/// An ordered model of Φ1 reduced to what a recolouring can see.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Skeleton {
    /// Input relations on `0..m`, standardly ordered.
    pub input: Structure,
    /// Element sets of the input tuples, ascending and deduplicated.
    pub sets: Vec<Vec<Elem>>,
    /// Colour-table id of the structure induced on each set.
    pub colours: Vec<usize>,
}

/// Both colour tables, the guarded colours of each and the skeletons of Φ1.
#[derive(Clone, Debug)]
pub struct GContext {
    pub n: usize,
    pub max_size: usize,
    pub table1: ColourTable,
    pub guarded1: Vec<usize>,
    pub table2: ColourTable,
    pub guarded2: Vec<usize>,
    pub skeletons: Vec<Skeleton>,
    phi2: Sentence,
}

/// ξ as pairs (Φ1 colour id, Φ2 colour id), one per guarded colour of Φ1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GRecolouring {
    pub map: Vec<(usize, usize)>,
}

impl GRecolouring {
    pub fn image(&self, c: usize) -> Option<usize> {
        self.map.iter().find(|p| p.0 == c).map(|p| p.1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GFailure {
    /// Some colour is sent to a colour with a different input reduct.
    Reduct { colour: usize },
    /// Two guarded sets of the skeleton disagree on a Φ2 atom.
    Disagreement { skeleton: usize, sym: SymbolId, tuple: Vec<Elem> },
    /// The fixed Φ2 atoms do not extend to a model of Φ2.
    NoExtension { skeleton: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GOutcome {
    Found(GRecolouring),
    Absent,
    Unknown(String),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GSearchStats {
    pub colours1: usize,
    pub colours2: usize,
    pub skeletons: usize,
    pub nodes: u64,
}

fn guarded_sets(a: &Structure, tau: usize) -> Vec<Vec<Elem>> {
    let mut sets: Vec<Vec<Elem>> = Vec::new();
    for r in 0..tau {
        for t in a.tuples(r) {
            let mut s = t.to_vec();
            s.sort_unstable();
            s.dedup();
            if !sets.contains(&s) {
                sets.push(s);
            }
        }
    }
    sets.sort();
    sets
}

/// All skeletons of Φ1 on 1..=`max_size` elements whose input part is
/// connected without isolated elements. Projected model enumeration: each
/// model found is blocked on the atoms inside its guarded sets only.
pub fn skeletons(phi: &Sentence, table: &ColourTable, max_size: usize, budget: &Budget) -> Result<Vec<Skeleton>> {
    let tau = phi.input().len();
    let mut meter = budget.meter("skeletons");
    let mut out = Vec::new();
    for a in StructureIter::new(phi.input().clone(), 1, max_size)? {
        if !a.isolated_elements().is_empty() || !is_connected(&a) {
            continue;
        }
        let sets = guarded_sets(&a, tau);
        let g = Grounding::new(phi, a.size(), |s, t| (s < tau).then(|| a.holds(s, t)), &mut meter)?;
        let mut projected: Vec<u32> = Vec::new();
        for s in &sets {
            for sym in tau..phi.full().len() {
                for t in tuples_over(s.len(), phi.full().arity(sym)) {
                    let t: Vec<Elem> = t.iter().map(|&i| s[i]).collect();
                    if let Some(v) = g.var(sym, &t) {
                        if !projected.contains(&v) {
                            projected.push(v);
                        }
                    }
                }
            }
        }
        let mut solver = g.solver();
        while let SolveOutcome::Sat(model) = solver.solve(&mut meter)? {
            meter.structure()?;
            let full = g.build(&model);
            let colours = sets
                .iter()
                .map(|s| table.id_of(&full.induced(s)).ok_or_else(|| Error::Internal("guarded set without a colour".into())))
                .collect::<Result<Vec<_>>>()?;
            out.push(Skeleton { input: a.clone(), sets: sets.clone(), colours });
            let block: Vec<Lit> = projected.iter().map(|&v| 2 * v + u32::from(model[v as usize])).collect();
            if block.is_empty() {
                break;
            }
            solver.add_clause(block);
        }
    }
    Ok(out)
}

/// Colour tables and skeletons for a search from Φ1 to Φ2. `max_size`
/// defaults to `max(wd(Φ2), 2n − 1)` with `n = max(ar(Φ1), ar(Φ2))`.
pub fn gmsnp_context(phi1: &Sentence, phi2: &Sentence, max_size: Option<usize>, budget: &Budget) -> Result<GContext> {
    require_common_input(phi1, phi2)?;
    for phi in [phi1, phi2] {
        if !phi.classify().is_gmsnp() {
            return Err(Error::Precondition("GMSNP-recolourings need guarded monotone sentences".into()));
        }
    }
    let n = phi1.stats().ar.max(phi2.stats().ar).max(1);
    let max_size = max_size.unwrap_or_else(|| phi2.stats().wd.max(2 * n - 1));
    let (table1, guarded1) = ordered_guarded_colours(phi1, n, budget)?;
    let (table2, guarded2) = ordered_guarded_colours(phi2, n, budget)?;
    let skeletons = skeletons(phi1, &table1, max_size, budget)?;
    Ok(GContext { n, max_size, table1, guarded1, table2, guarded2, skeletons, phi2: phi2.clone() })
}

impl GContext {
    /// Φ2 colours with the input reduct of the Φ1 colour `c`.
    pub fn candidates(&self, c: usize) -> Vec<usize> {
        let r = self.table1.tau_reduct(&self.table1.colours[c]);
        self.guarded2.iter().copied().filter(|&d| self.table2.tau_reduct(&self.table2.colours[d]) == r).collect()
    }

    /// Checks one skeleton under a (possibly partial) map.
    fn check_skeleton(&self, i: usize, image: &impl Fn(usize) -> usize, meter: &mut Meter) -> Result<Option<GFailure>> {
        let sk = &self.skeletons[i];
        let tau = self.phi2.input().len();
        let full = self.phi2.full();
        let mut fixed: HashMap<(SymbolId, Vec<Elem>), bool> = HashMap::new();
        for (s, &c) in sk.sets.iter().zip(&sk.colours) {
            let target = &self.table2.colours[image(c)];
            for sym in tau..full.len() {
                for t in tuples_over(s.len(), full.arity(sym)) {
                    let local: Vec<Elem> = t.iter().map(|&e| e as Elem).collect();
                    let global: Vec<Elem> = t.iter().map(|&e| s[e]).collect();
                    let v = target.holds(sym, &local);
                    if let Some(&old) = fixed.get(&(sym, global.clone())) {
                        if old != v {
                            return Ok(Some(GFailure::Disagreement { skeleton: i, sym, tuple: global }));
                        }
                    } else {
                        fixed.insert((sym, global), v);
                    }
                }
            }
        }
        let a = &sk.input;
        let g = Grounding::new(
            &self.phi2,
            a.size(),
            |s, t| if s < tau { Some(a.holds(s, t)) } else { fixed.get(&(s, t.to_vec())).copied() },
            meter,
        )?;
        if g.is_conflicting() {
            return Ok(Some(GFailure::NoExtension { skeleton: i }));
        }
        Ok(match g.solver().solve(meter)? {
            SolveOutcome::Sat(_) => None,
            SolveOutcome::Unsat => Some(GFailure::NoExtension { skeleton: i }),
        })
    }
}

/// Both conditions for a complete map.
pub fn check_gmsnp_recolouring(ctx: &GContext, xi: &GRecolouring, budget: &Budget) -> Result<Option<GFailure>> {
    let mut meter = budget.meter("gmsnp recolouring check");
    for &c in &ctx.guarded1 {
        let Some(d) = xi.image(c) else {
            return Ok(Some(GFailure::Reduct { colour: c }));
        };
        if !ctx.candidates(c).contains(&d) {
            return Ok(Some(GFailure::Reduct { colour: c }));
        }
    }
    let image = |c: usize| xi.image(c).expect("total map");
    for i in 0..ctx.skeletons.len() {
        if let Some(f) = ctx.check_skeleton(i, &image, &mut meter)? {
            return Ok(Some(f));
        }
    }
    Ok(None)
}

/// Depth-first search over images, colours in table order (so by size).
/// A skeleton is checked as soon as all of its colours have images.
pub fn gmsnp_recolouring_search(ctx: &GContext, budget: &Budget) -> Result<(GOutcome, GSearchStats)> {
    let mut stats = GSearchStats {
        colours1: ctx.guarded1.len(),
        colours2: ctx.guarded2.len(),
        skeletons: ctx.skeletons.len(),
        nodes: 0,
    };
    let order = &ctx.guarded1;
    let pos: HashMap<usize, usize> = order.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut due: Vec<Vec<usize>> = vec![Vec::new(); order.len()];
    for (i, sk) in ctx.skeletons.iter().enumerate() {
        if let Some(last) = sk.colours.iter().map(|c| pos[c]).max() {
            due[last].push(i);
        }
    }
    let cands: Vec<Vec<usize>> = order.iter().map(|&c| ctx.candidates(c)).collect();
    if cands.iter().any(Vec::is_empty) {
        return Ok((GOutcome::Absent, stats));
    }
    let mut meter = budget.meter("gmsnp recolouring search");
    let mut chosen = vec![usize::MAX; order.len()];
    let res = dfs(ctx, 0, &cands, &due, &pos, &mut chosen, &mut meter, &mut stats.nodes);
    let outcome = match res {
        Ok(true) => GOutcome::Found(GRecolouring { map: order.iter().zip(&chosen).map(|(&c, &d)| (c, d)).collect() }),
        Ok(false) => GOutcome::Absent,
        Err(e) if e.is_budget() => GOutcome::Unknown(e.to_string()),
        Err(e) => return Err(e),
    };
    Ok((outcome, stats))
}

#[allow(clippy::too_many_arguments)]
fn dfs(
    ctx: &GContext,
    i: usize,
    cands: &[Vec<usize>],
    due: &[Vec<usize>],
    pos: &HashMap<usize, usize>,
    chosen: &mut Vec<usize>,
    meter: &mut Meter,
    nodes: &mut u64,
) -> Result<bool> {
    if i == cands.len() {
        return Ok(true);
    }
    for &d in &cands[i] {
        meter.node()?;
        *nodes += 1;
        chosen[i] = d;
        let image = |c: usize| chosen[pos[&c]];
        let mut ok = true;
        for &s in &due[i] {
            if ctx.check_skeleton(s, &image, meter)?.is_some() {
                ok = false;
                break;
            }
        }
        if ok && dfs(ctx, i + 1, cands, due, pos, chosen, meter, nodes)? {
            return Ok(true);
        }
    }
    chosen[i] = usize::MAX;
    Ok(false)
}
