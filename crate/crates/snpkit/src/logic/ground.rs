//! Grounding of a sentence over a fixed domain and a small CDCL solver.

use super::{Literal, Sentence};
use crate::budget::{Budget, Meter};
use crate::error::Result;
use crate::structures::{Elem, Signature, Structure, SymbolId, Tuple};
use std::sync::Arc;

/// Solver literal: `2 * var` for the atom, `2 * var + 1` for its negation.
pub type Lit = u32;

fn neg(l: Lit) -> Lit {
    l ^ 1
}

/// All clauses of a sentence instantiated over `0..size`, with some atoms
/// fixed by the caller and the others turned into solver variables.
#[derive(Clone, Debug)]
pub struct Grounding {
    size: usize,
    sig: Arc<Signature>,
    offsets: Vec<usize>,
    fixed: Vec<Option<bool>>,
    var_of: Vec<u32>,
    atoms: Vec<(SymbolId, Tuple)>,
    clauses: Vec<Vec<Lit>>,
    conflict: bool,
}

fn decode(mut idx: usize, arity: usize, size: usize) -> Tuple {
    let mut t = Tuple::new();
    for _ in 0..arity {
        t.push((idx % size) as Elem);
        idx /= size;
    }
    t
}

impl Grounding {
    pub fn new(
        phi: &Sentence,
        size: usize,
        fixed: impl Fn(SymbolId, &[Elem]) -> Option<bool>,
        meter: &mut Meter,
    ) -> Result<Grounding> {
        let sig = phi.full().clone();
        let mut offsets = Vec::with_capacity(sig.len() + 1);
        let mut total = 0usize;
        for s in sig.symbols() {
            offsets.push(total);
            total += size.pow(s.arity as u32);
        }
        offsets.push(total);
        let mut g = Grounding {
            size,
            sig: sig.clone(),
            offsets,
            fixed: Vec::with_capacity(total),
            var_of: vec![u32::MAX; total],
            atoms: Vec::new(),
            clauses: Vec::new(),
            conflict: false,
        };
        for sym in 0..sig.len() {
            for i in 0..g.offsets[sym + 1] - g.offsets[sym] {
                let t = decode(i, sig.arity(sym), size);
                let f = fixed(sym, &t);
                if f.is_none() {
                    g.var_of[g.offsets[sym] + i] = g.atoms.len() as u32;
                    g.atoms.push((sym, t));
                }
                g.fixed.push(f);
            }
        }
        if size > 0 {
            for c in phi.clauses() {
                g.ground_clause(c, meter)?;
                if g.conflict {
                    break;
                }
            }
        }
        Ok(g)
    }

    fn index(&self, sym: SymbolId, t: &[Elem]) -> usize {
        let mut idx = 0;
        let mut mul = 1;
        for &e in t {
            idx += e as usize * mul;
            mul *= self.size;
        }
        self.offsets[sym] + idx
    }

    /// Solver variable of an atom, or `None` if the atom is fixed.
    pub fn var(&self, sym: SymbolId, t: &[Elem]) -> Option<u32> {
        let v = self.var_of[self.index(sym, t)];
        (v != u32::MAX).then_some(v)
    }

    pub fn fixed_value(&self, sym: SymbolId, t: &[Elem]) -> Option<bool> {
        self.fixed[self.index(sym, t)]
    }

    pub fn num_vars(&self) -> usize {
        self.atoms.len()
    }

    pub fn atom(&self, v: u32) -> &(SymbolId, Tuple) {
        &self.atoms[v as usize]
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    /// True if some clause is already false under the fixed atoms.
    pub fn is_conflicting(&self) -> bool {
        self.conflict
    }

    fn ground_clause(&mut self, c: &super::Clause, meter: &mut Meter) -> Result<()> {
        let k = c.vars.len();
        let mut buckets: Vec<Vec<&Literal>> = vec![Vec::new(); k];
        for l in &c.lits {
            if let Some(m) = l.vars().into_iter().max() {
                buckets[m].push(l);
            }
        }
        let mut h = vec![0 as Elem; k];
        let mut lits: Vec<Lit> = Vec::new();
        self.ground_rec(0, &buckets, &mut h, &mut lits, meter)
    }

    fn ground_rec(
        &mut self,
        depth: usize,
        buckets: &[Vec<&Literal>],
        h: &mut Vec<Elem>,
        lits: &mut Vec<Lit>,
        meter: &mut Meter,
    ) -> Result<()> {
        if depth == h.len() {
            meter.node()?;
            self.push_clause(lits.clone());
            return Ok(());
        }
        let mut buf = Tuple::new();
        'values: for v in 0..self.size as Elem {
            h[depth] = v;
            let mark = lits.len();
            for l in &buckets[depth] {
                match l {
                    Literal::Eq { positive, lhs, rhs } => {
                        if (h[*lhs] == h[*rhs]) == *positive {
                            lits.truncate(mark);
                            continue 'values;
                        }
                    }
                    Literal::Rel { positive, sym, args } => {
                        buf.clear();
                        buf.extend(args.iter().map(|&a| h[a]));
                        let idx = self.index(*sym, &buf);
                        match self.fixed[idx] {
                            Some(val) if val == *positive => {
                                lits.truncate(mark);
                                continue 'values;
                            }
                            Some(_) => {}
                            None => lits.push(2 * self.var_of[idx] + u32::from(!*positive)),
                        }
                    }
                }
            }
            self.ground_rec(depth + 1, buckets, h, lits, meter)?;
            lits.truncate(mark);
            if self.conflict {
                return Ok(());
            }
        }
        Ok(())
    }

    /// Adds a clause over solver literals; duplicate literals are removed and
    /// tautologies dropped.
    pub fn push_clause(&mut self, mut lits: Vec<Lit>) {
        lits.sort_unstable();
        lits.dedup();
        if lits.windows(2).any(|w| w[0] ^ 1 == w[1]) {
            return;
        }
        if lits.is_empty() {
            self.conflict = true;
        }
        self.clauses.push(lits);
    }

    /// Adds `∨ (sym(t) = value)` over a mix of fixed and free atoms.
    pub fn push_atom_clause(&mut self, atoms: &[(SymbolId, Tuple, bool)]) {
        let mut lits = Vec::new();
        for (sym, t, value) in atoms {
            let idx = self.index(*sym, t);
            match self.fixed[idx] {
                Some(f) if f == *value => return,
                Some(_) => {}
                None => lits.push(2 * self.var_of[idx] + u32::from(!*value)),
            }
        }
        self.push_clause(lits);
    }

    pub fn solver(&self) -> Solver {
        Solver::new(self.atoms.len(), &self.clauses, self.conflict)
    }

    /// The structure with every fixed-true atom and every atom true in `model`.
    pub fn build(&self, model: &[bool]) -> Structure {
        let mut s = Structure::new(self.sig.clone(), self.size);
        for sym in 0..self.sig.len() {
            for i in 0..self.offsets[sym + 1] - self.offsets[sym] {
                let idx = self.offsets[sym] + i;
                let on = match self.fixed[idx] {
                    Some(v) => v,
                    None => model[self.var_of[idx] as usize],
                };
                if on {
                    s.insert(sym, &decode(i, self.sig.arity(sym), self.size));
                }
            }
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveOutcome {
    Sat(Vec<bool>),
    Unsat,
}

/// CDCL over clauses given as literal lists: two watched literals, first-UIP
/// learning, non-chronological backjumping and activity-ordered decisions
/// (initially most occurrences first), `false` before `true`.
#[derive(Clone, Debug)]
pub struct Solver {
    clauses: Vec<Vec<Lit>>,
    watches: Vec<Vec<usize>>,
    assign: Vec<i8>,
    level: Vec<u32>,
    reason: Vec<Option<usize>>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    bump: f64,
    seen: Vec<bool>,
    root_conflict: bool,
}

impl Solver {
    pub fn new(nvars: usize, clauses: &[Vec<Lit>], conflict: bool) -> Solver {
        let mut occ = vec![0usize; nvars];
        for c in clauses {
            for &l in c {
                occ[(l / 2) as usize] += 1;
            }
        }
        // ties broken towards lower variables
        let activity = (0..nvars).map(|v| occ[v] as f64 + 1.0 / (v as f64 + 2.0)).collect();
        let mut s = Solver {
            clauses: Vec::new(),
            watches: vec![Vec::new(); 2 * nvars],
            assign: vec![-1; nvars],
            level: vec![0; nvars],
            reason: vec![None; nvars],
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity,
            bump: 1.0,
            seen: vec![false; nvars],
            root_conflict: conflict,
        };
        for c in clauses {
            match c.len() {
                0 => s.root_conflict = true,
                1 => {
                    if !s.enqueue(c[0], None) {
                        s.root_conflict = true;
                    }
                }
                _ => {
                    s.attach(c.clone());
                }
            }
        }
        s
    }

    fn attach(&mut self, c: Vec<Lit>) -> usize {
        let id = self.clauses.len();
        self.watches[c[0] as usize].push(id);
        self.watches[c[1] as usize].push(id);
        self.clauses.push(c);
        id
    }

    /// Adds a clause between searches; later calls to
    /// [`Solver::for_each_model`] restart from the top level.
    pub fn add_clause(&mut self, mut lits: Vec<Lit>) {
        self.cancel_until(0);
        lits.sort_unstable();
        lits.dedup();
        if lits.windows(2).any(|w| w[0] ^ 1 == w[1]) {
            return;
        }
        // unassigned or true literals first
        lits.sort_by_key(|&l| self.value(l) == 0);
        match lits.len() {
            0 => self.root_conflict = true,
            1 => {
                if !self.enqueue(lits[0], None) {
                    self.root_conflict = true;
                }
            }
            _ => {
                if self.value(lits[0]) == 0 {
                    self.root_conflict = true;
                } else if self.value(lits[1]) == 0 {
                    let first = lits[0];
                    let id = self.attach(lits);
                    self.enqueue(first, Some(id));
                } else {
                    self.attach(lits);
                }
            }
        }
    }

    fn value(&self, l: Lit) -> i8 {
        let a = self.assign[(l / 2) as usize];
        if a < 0 {
            -1
        } else {
            i8::from((a == 1) == (l & 1 == 0))
        }
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    /// Makes `l` true; returns false if it is already false.
    fn enqueue(&mut self, l: Lit, reason: Option<usize>) -> bool {
        match self.value(l) {
            1 => true,
            0 => false,
            _ => {
                let v = (l / 2) as usize;
                self.assign[v] = i8::from(l & 1 == 0);
                self.level[v] = self.decision_level();
                self.reason[v] = reason;
                self.trail.push(l);
                true
            }
        }
    }

    /// Unit propagation; returns the conflicting clause, if any.
    fn propagate(&mut self) -> Option<usize> {
        while self.qhead < self.trail.len() {
            let p = neg(self.trail[self.qhead]);
            self.qhead += 1;
            let ws = std::mem::take(&mut self.watches[p as usize]);
            let mut keep = Vec::with_capacity(ws.len());
            let mut conflict = None;
            for (i, &cid) in ws.iter().enumerate() {
                if conflict.is_some() {
                    keep.extend_from_slice(&ws[i..]);
                    break;
                }
                let c = &mut self.clauses[cid];
                if c[0] == p {
                    c.swap(0, 1);
                }
                let first = c[0];
                let val = |assign: &[i8], l: Lit| {
                    let a = assign[(l / 2) as usize];
                    if a < 0 { -1 } else { i8::from((a == 1) == (l & 1 == 0)) }
                };
                let a_first = val(&self.assign, first);
                if a_first == 1 {
                    keep.push(cid);
                    continue;
                }
                let mut moved = false;
                for k in 2..c.len() {
                    let l = c[k];
                    if val(&self.assign, l) != 0 {
                        c.swap(1, k);
                        self.watches[l as usize].push(cid);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                keep.push(cid);
                if a_first == 0 || !self.enqueue(first, Some(cid)) {
                    conflict = Some(cid);
                }
            }
            self.watches[p as usize] = keep;
            if conflict.is_some() {
                return conflict;
            }
        }
        None
    }

    fn cancel_until(&mut self, level: u32) {
        if self.decision_level() <= level {
            return;
        }
        let pos = self.trail_lim[level as usize];
        for &l in &self.trail[pos..] {
            let v = (l / 2) as usize;
            self.assign[v] = -1;
            self.reason[v] = None;
        }
        self.trail.truncate(pos);
        self.trail_lim.truncate(level as usize);
        self.qhead = pos;
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.bump;
        if self.activity[v] > 1e100 {
            self.activity.iter_mut().for_each(|a| *a *= 1e-100);
            self.bump *= 1e-100;
        }
    }

    /// First-UIP clause for a conflict at the current level, asserting
    /// literal first, and the level to jump back to.
    fn analyze(&mut self, mut cid: usize) -> (Vec<Lit>, u32) {
        let dl = self.decision_level();
        let mut learnt = vec![0];
        let mut pending = 0;
        let mut idx = self.trail.len();
        let mut p: Option<Lit> = None;
        loop {
            let c = self.clauses[cid].clone();
            for &q in &c {
                if Some(q) == p {
                    continue;
                }
                let v = (q / 2) as usize;
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump_var(v);
                    if self.level[v] == dl {
                        pending += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if self.seen[(self.trail[idx] / 2) as usize] {
                    break;
                }
            }
            let l = self.trail[idx];
            let v = (l / 2) as usize;
            self.seen[v] = false;
            pending -= 1;
            if pending == 0 {
                learnt[0] = neg(l);
                break;
            }
            p = Some(l);
            cid = self.reason[v].expect("implied literal has a reason");
        }
        for &q in &learnt[1..] {
            self.seen[(q / 2) as usize] = false;
        }
        self.bump /= 0.95;
        let mut back = 0;
        if learnt.len() > 1 {
            let (mut bi, mut bl) = (1, 0);
            for (i, &q) in learnt.iter().enumerate().skip(1) {
                let lv = self.level[(q / 2) as usize];
                if lv > bl {
                    bi = i;
                    bl = lv;
                }
            }
            learnt.swap(1, bi);
            back = bl;
        }
        (learnt, back)
    }

    /// Learns from a falsified clause and backjumps; false when the clause
    /// set is unsatisfiable.
    fn resolve_conflict(&mut self, cid: usize) -> bool {
        if self.decision_level() == 0 {
            return false;
        }
        let (learnt, back) = self.analyze(cid);
        self.cancel_until(back);
        if learnt.len() == 1 {
            self.enqueue(learnt[0], None);
        } else {
            let id = self.attach(learnt.clone());
            self.enqueue(learnt[0], Some(id));
        }
        true
    }

    fn pick(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for v in 0..self.assign.len() {
            if self.assign[v] < 0 && best.is_none_or(|b| self.activity[v] > self.activity[b]) {
                best = Some(v);
            }
        }
        best
    }

    /// Calls `f` on each model until it returns `false`. Every total
    /// assignment satisfying the clauses is visited exactly once.
    pub fn for_each_model(&mut self, meter: &mut Meter, mut f: impl FnMut(&[bool]) -> bool) -> Result<()> {
        self.cancel_until(0);
        if self.root_conflict {
            return Ok(());
        }
        loop {
            if let Some(cid) = self.propagate() {
                meter.node()?;
                if !self.resolve_conflict(cid) {
                    return Ok(());
                }
                continue;
            }
            match self.pick() {
                Some(v) => {
                    meter.node()?;
                    self.trail_lim.push(self.trail.len());
                    self.enqueue(2 * v as Lit + 1, None);
                }
                None => {
                    let model: Vec<bool> = self.assign.iter().map(|&a| a == 1).collect();
                    if !f(&model) {
                        return Ok(());
                    }
                    // block this model through its decisions
                    let block: Vec<Lit> = self.trail_lim.iter().rev().map(|&pos| neg(self.trail[pos])).collect();
                    if block.is_empty() {
                        return Ok(());
                    }
                    let top = self.decision_level() - 1;
                    self.cancel_until(top);
                    if block.len() == 1 {
                        self.enqueue(block[0], None);
                    } else {
                        let id = self.attach(block.clone());
                        self.enqueue(block[0], Some(id));
                    }
                }
            }
        }
    }

    pub fn solve(&mut self, meter: &mut Meter) -> Result<SolveOutcome> {
        let mut out = SolveOutcome::Unsat;
        self.for_each_model(meter, |m| {
            out = SolveOutcome::Sat(m.to_vec());
            false
        })?;
        Ok(out)
    }
}

/// An expansion of the τ-structure `a` satisfying the first-order part, if any.
pub fn check_model(phi: &Sentence, a: &Structure, budget: &Budget) -> Result<Option<Structure>> {
    a.require_signature(phi.input(), "model check")?;
    let mut meter = budget.meter("check_model");
    let ninput = phi.input().len();
    let g = Grounding::new(phi, a.size(), |s, t| (s < ninput).then(|| a.holds(s, t)), &mut meter)?;
    Ok(match g.solver().solve(&mut meter)? {
        SolveOutcome::Sat(m) => Some(g.build(&m)),
        SolveOutcome::Unsat => None,
    })
}

/// Every expansion of `a` satisfying the first-order part, in solver order.
pub fn expansions(phi: &Sentence, a: &Structure, budget: &Budget) -> Result<Vec<Structure>> {
    a.require_signature(phi.input(), "expansion enumeration")?;
    let mut meter = budget.meter("expansions");
    let ninput = phi.input().len();
    let g = Grounding::new(phi, a.size(), |s, t| (s < ninput).then(|| a.holds(s, t)), &mut meter)?;
    let mut out = Vec::new();
    g.solver().for_each_model(&mut meter, |m| {
        out.push(g.build(m));
        true
    })?;
    Ok(out)
}
