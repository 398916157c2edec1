//! Deciding fm(Φ1) ⊆ fm(Φ2) for guarded monotone sentences, and a bounded
//! brute-force search for counterexamples.
//!
//! The decision pipeline splits both sentences into connected disjuncts,
//! applies Δ to each, and looks for recolourings between the Δ images. A
//! recolouring between any two sentences already proves containment; the
//! absence of one only refutes it once both sides have been through Δ.

use crate::budget::Budget;
use crate::decompose::connected_decomposition;
use crate::error::{Error, Result};
use crate::hn_transform::{delta_transform, HnOptions};
use crate::logic::{check_model, Sentence};
use crate::recolouring::{enumerate_colours, recolouring_search, require_common_input, ColourTable, Recolouring, SearchOutcome, SearchStats};
use crate::structures::{Structure, StructureIter};
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Contained,
    NotContained,
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Recolouring,
    OracleFalsified,
    /// The oracle alone ran to its size bound without a counterexample.
    OracleExhausted,
    Budget,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MethodChoice {
    /// Oracle first, then recolourings.
    #[default]
    Auto,
    Recolouring,
    Oracle,
}

/// A τ-structure in fm(Φ1) but not in fm(Φ2).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub structure: Structure,
    /// An expansion satisfying Φ1's first-order part.
    pub expansion: Structure,
}

/// The recolouring search between disjunct `lhs` of Φ1 and disjunct `rhs`
/// of Φ2.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairRecord {
    pub lhs: usize,
    pub rhs: usize,
    pub outcome: SearchOutcome,
    pub stats: SearchStats,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stage {
    pub name: String,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContainmentVerdict {
    pub outcome: Outcome,
    pub method: Method,
    pub counterexample: Option<Counterexample>,
    /// Pairs searched, in (lhs, rhs) order.
    pub pairs: Vec<PairRecord>,
    pub stages: Vec<Stage>,
    /// Why the verdict is Unknown.
    pub reason: Option<String>,
}

impl ContainmentVerdict {
    fn new(outcome: Outcome, method: Method) -> Self {
        ContainmentVerdict { outcome, method, counterexample: None, pairs: Vec::new(), stages: Vec::new(), reason: None }
    }

    /// The recolouring for each pair that has one.
    pub fn recolourings(&self) -> impl Iterator<Item = (usize, usize, &Recolouring)> {
        self.pairs.iter().filter_map(|p| match &p.outcome {
            SearchOutcome::Found(x) => Some((p.lhs, p.rhs, x)),
            _ => None,
        })
    }
}

#[derive(Clone, Debug)]
pub struct ContainmentOptions {
    pub method: MethodChoice,
    /// Search recolourings between the sentences as given, without
    /// decomposition or Δ. Never yields NotContained by recolouring.
    pub raw: bool,
    /// Largest structure the oracle tries.
    pub max_size: usize,
    pub max_disjuncts: usize,
    pub hn: HnOptions,
    pub budget: Budget,
}

impl Default for ContainmentOptions {
    fn default() -> Self {
        ContainmentOptions {
            method: MethodChoice::Auto,
            raw: false,
            max_size: 4,
            max_disjuncts: 64,
            hn: HnOptions::default(),
            budget: Budget::default(),
        }
    }
}

/// The first τ-structure (by size, then enumeration order, up to
/// isomorphism) with at most `max_size` elements in fm(Φ1) ∖ fm(Φ2).
pub fn falsify_containment(phi1: &Sentence, phi2: &Sentence, max_size: usize, budget: &Budget) -> Result<Option<Counterexample>> {
    require_common_input(phi1, phi2)?;
    let mut meter = budget.meter("falsify");
    for size in 1..=max_size {
        let batch: Vec<Structure> = StructureIter::new(phi1.input().clone(), size, size)?.up_to_iso().collect();
        meter.reserve_structures(batch.len() as u128 + meter.structures as u128)?;
        meter.structures += batch.len() as u64;
        let hit = batch
            .par_iter()
            .map(|a| -> Result<Option<Counterexample>> {
                let Some(expansion) = check_model(phi1, a, budget)? else { return Ok(None) };
                if check_model(phi2, a, budget)?.is_some() {
                    return Ok(None);
                }
                Ok(Some(Counterexample { structure: a.clone(), expansion }))
            })
            .find_first(|r| !matches!(r, Ok(None)));
        if let Some(r) = hit {
            return r;
        }
    }
    Ok(None)
}

fn unknown(e: Error, mut v: ContainmentVerdict) -> Result<ContainmentVerdict> {
    if !e.is_budget() {
        return Err(e);
    }
    v.outcome = Outcome::Unknown;
    v.method = Method::Budget;
    v.reason = Some(e.to_string());
    Ok(v)
}

pub fn decide_containment(phi1: &Sentence, phi2: &Sentence, opts: &ContainmentOptions) -> Result<ContainmentVerdict> {
    require_common_input(phi1, phi2)?;
    let mut v = ContainmentVerdict::new(Outcome::Unknown, Method::Budget);
    if opts.method != MethodChoice::Recolouring {
        match falsify_containment(phi1, phi2, opts.max_size, &opts.budget) {
            Ok(Some(c)) => {
                v.stages.push(Stage { name: "oracle".into(), detail: format!("counterexample of size {}", c.structure.size()) });
                v.outcome = Outcome::NotContained;
                v.method = Method::OracleFalsified;
                v.counterexample = Some(c);
                return Ok(v);
            }
            Ok(None) => {
                v.stages.push(Stage { name: "oracle".into(), detail: format!("no counterexample up to size {}", opts.max_size) })
            }
            Err(e) if e.is_budget() && opts.method == MethodChoice::Auto => {
                v.stages.push(Stage { name: "oracle".into(), detail: e.to_string() })
            }
            Err(e) => return unknown(e, v),
        }
        if opts.method == MethodChoice::Oracle {
            v.method = Method::OracleExhausted;
            v.reason = Some(format!("no counterexample up to size {}", opts.max_size));
            return Ok(v);
        }
    }
    if opts.raw {
        return raw_recolouring(phi1, phi2, opts, v);
    }
    match through_delta(phi1, phi2, opts, &mut v) {
        Ok(()) => Ok(v),
        Err(e) => unknown(e, v),
    }
}

fn colour_n(sentences: &[&Sentence]) -> usize {
    sentences.iter().map(|s| s.stats().ar).max().unwrap_or(1).max(1)
}

fn raw_recolouring(phi1: &Sentence, phi2: &Sentence, opts: &ContainmentOptions, mut v: ContainmentVerdict) -> Result<ContainmentVerdict> {
    let n = colour_n(&[phi1, phi2]);
    let tables = enumerate_colours(phi1, n, &opts.budget).and_then(|c1| Ok((c1, enumerate_colours(phi2, n, &opts.budget)?)));
    let (c1, c2) = match tables {
        Ok(t) => t,
        Err(e) => return unknown(e, v),
    };
    v.stages.push(Stage { name: "colours".into(), detail: format!("n={n}: {} and {} colours", c1.len(), c2.len()) });
    let (outcome, stats) = recolouring_search(phi1, phi2, &c1, &c2, &opts.budget)?;
    match &outcome {
        SearchOutcome::Found(_) => {
            v.outcome = Outcome::Contained;
            v.method = Method::Recolouring;
        }
        SearchOutcome::Absent => {
            v.method = Method::Recolouring;
            v.reason = Some("no recolouring between the sentences as given; only Δ images decide".into());
        }
        SearchOutcome::Unknown(r) => v.reason = Some(r.clone()),
    }
    v.pairs.push(PairRecord { lhs: 0, rhs: 0, outcome, stats });
    Ok(v)
}

fn through_delta(phi1: &Sentence, phi2: &Sentence, opts: &ContainmentOptions, v: &mut ContainmentVerdict) -> Result<()> {
    let mut sides = Vec::new();
    for (name, phi) in [("lhs", phi1), ("rhs", phi2)] {
        let d = connected_decomposition(phi, opts.max_disjuncts)?;
        v.stages.push(Stage { name: format!("decompose {name}"), detail: format!("{} disjuncts", d.disjuncts.len()) });
        let mut deltas = Vec::new();
        for (i, s) in d.disjuncts.iter().enumerate() {
            let out = delta_transform(s, &opts.hn, &opts.budget)?;
            v.stages.push(Stage {
                name: format!("delta {name} {i}"),
                detail: format!("{} -> {}", out.report.before, out.report.after),
            });
            deltas.push(out.sentence);
        }
        sides.push(deltas);
    }
    let rhs = sides.pop().expect("two sides");
    let lhs = sides.pop().expect("two sides");
    let all: Vec<&Sentence> = lhs.iter().chain(&rhs).collect();
    let n = colour_n(&all);
    let tables = |ss: &[Sentence]| -> Result<Vec<ColourTable>> { ss.iter().map(|s| enumerate_colours(s, n, &opts.budget)).collect() };
    let (lt, rt) = (tables(&lhs)?, tables(&rhs)?);
    v.stages.push(Stage {
        name: "colours".into(),
        detail: format!(
            "n={n}: lhs {:?}, rhs {:?}",
            lt.iter().map(ColourTable::len).collect::<Vec<_>>(),
            rt.iter().map(ColourTable::len).collect::<Vec<_>>()
        ),
    });
    let mut order: Vec<usize> = (0..rhs.len()).collect();
    order.sort_by_key(|&j| (rhs[j].clauses().len(), j));
    let per_lhs: Vec<Result<Vec<PairRecord>>> = (0..lhs.len())
        .into_par_iter()
        .map(|i| {
            let mut recs = Vec::new();
            for &j in &order {
                let (outcome, stats) = recolouring_search(&lhs[i], &rhs[j], &lt[i], &rt[j], &opts.budget)?;
                let done = matches!(outcome, SearchOutcome::Found(_));
                recs.push(PairRecord { lhs: i, rhs: j, outcome, stats });
                if done {
                    break;
                }
            }
            Ok(recs)
        })
        .collect();
    let mut all_found = true;
    let mut refuted = false;
    for recs in per_lhs {
        let recs = recs?;
        if !recs.iter().any(|r| matches!(r.outcome, SearchOutcome::Found(_))) {
            all_found = false;
            if recs.iter().all(|r| r.outcome == SearchOutcome::Absent) {
                refuted = true;
            } else if v.reason.is_none() {
                v.reason = recs.iter().find_map(|r| match &r.outcome {
                    SearchOutcome::Unknown(s) => Some(s.clone()),
                    _ => None,
                });
            }
        }
        v.pairs.extend(recs);
    }
    v.method = Method::Recolouring;
    if refuted {
        v.outcome = Outcome::NotContained;
        v.reason = None;
    } else if all_found {
        v.outcome = Outcome::Contained;
    } else {
        v.method = Method::Budget;
    }
    Ok(())
}

#[cfg(test)]
mod tests;
