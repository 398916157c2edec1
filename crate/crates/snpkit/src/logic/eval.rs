use super::{Clause, Literal, Sentence};
use crate::error::Result;
use crate::structures::{Elem, Structure, Tuple};

/// A clause and an assignment of its variables under which it is false.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub clause: usize,
    pub assignment: Vec<Elem>,
}

pub(crate) fn literal_holds(l: &Literal, a: &Structure, h: &[Elem], buf: &mut Tuple) -> bool {
    match l {
        Literal::Rel { positive, sym, args } => {
            buf.clear();
            buf.extend(args.iter().map(|&v| h[v]));
            a.holds(*sym, buf) == *positive
        }
        Literal::Eq { positive, lhs, rhs } => (h[*lhs] == h[*rhs]) == *positive,
    }
}

/// Literals grouped by the largest variable they mention.
fn buckets(c: &Clause) -> Vec<Vec<&Literal>> {
    let mut b = vec![Vec::new(); c.vars.len()];
    for l in &c.lits {
        if let Some(m) = l.vars().into_iter().max() {
            b[m].push(l);
        }
    }
    b
}

/// First falsifying assignment of `c` in `a` (variables assigned in index
/// order, values ascending). With `touch`, only assignments using that
/// element are considered.
pub(crate) fn clause_violation(c: &Clause, a: &Structure, touch: Option<Elem>) -> Option<Vec<Elem>> {
    let k = c.vars.len();
    if a.size() == 0 {
        return None;
    }
    let b = buckets(c);
    let mut h = vec![0 as Elem; k];
    let mut buf = Tuple::new();
    fn rec(
        depth: usize,
        b: &[Vec<&Literal>],
        a: &Structure,
        h: &mut Vec<Elem>,
        buf: &mut Tuple,
        touch: Option<Elem>,
        touched: bool,
    ) -> bool {
        if depth == h.len() {
            return touch.is_none() || touched;
        }
        for v in 0..a.size() as Elem {
            h[depth] = v;
            if b[depth].iter().any(|l| literal_holds(l, a, h, buf)) {
                continue;
            }
            if rec(depth + 1, b, a, h, buf, touch, touched || Some(v) == touch) {
                return true;
            }
        }
        false
    }
    if rec(0, &b, a, &mut h, &mut buf, touch, false) {
        Some(h)
    } else {
        None
    }
}

/// First violated clause instance, scanning clauses in order.
pub fn find_violation(phi: &Sentence, a: &Structure) -> Result<Option<Violation>> {
    a.require_signature(phi.full(), "first-order part check")?;
    Ok(phi
        .clauses()
        .iter()
        .enumerate()
        .find_map(|(i, c)| clause_violation(c, a, None).map(|assignment| Violation { clause: i, assignment })))
}

/// Whether `a` (over input and existential symbols) satisfies every clause
/// under every assignment, repeated elements included.
pub fn check_fo_part(phi: &Sentence, a: &Structure) -> Result<bool> {
    Ok(find_violation(phi, a)?.is_none())
}

/// Like [`find_violation`] restricted to assignments that use `e`.
#[allow(dead_code)]
pub(crate) fn find_violation_touching(phi: &Sentence, a: &Structure, e: Elem) -> Option<Violation> {
    phi.clauses()
        .iter()
        .enumerate()
        .find_map(|(i, c)| clause_violation(c, a, Some(e)).map(|assignment| Violation { clause: i, assignment }))
}
