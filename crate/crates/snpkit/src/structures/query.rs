use super::{Signature, Structure, SymbolId};
use crate::error::{Error, Result};
use std::fmt;
use std::sync::Arc;

/// A positive atom over named variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub sym: SymbolId,
    pub args: Vec<String>,
}

impl Atom {
    pub fn new(sym: SymbolId, args: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Atom { sym, args: args.into_iter().map(Into::into).collect() }
    }

    pub fn display<'a>(&'a self, sig: &'a Signature) -> impl fmt::Display + 'a {
        struct D<'a>(&'a Atom, &'a Signature);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}({})", self.1.name(self.0.sym), self.0.args.join(","))
            }
        }
        D(self, sig)
    }
}

/// Builds the canonical database of a conjunction. Declared variables come
/// first, then the remaining variables in order of first occurrence; the
/// returned list maps element index to variable name.
pub fn canonical_database(sig: &Arc<Signature>, atoms: &[Atom], declared: &[String]) -> Result<(Structure, Vec<String>)> {
    let mut vars: Vec<String> = Vec::new();
    for v in declared.iter().chain(atoms.iter().flat_map(|a| a.args.iter())) {
        if !vars.contains(v) {
            vars.push(v.clone());
        }
    }
    let mut s = Structure::new(sig.clone(), vars.len());
    for a in atoms {
        if a.sym >= sig.len() {
            return Err(Error::UndeclaredSymbol(format!("#{}", a.sym)));
        }
        let t: Vec<u32> = a.args.iter().map(|v| vars.iter().position(|w| w == v).unwrap() as u32).collect();
        s.try_insert(a.sym, &t)?;
    }
    Ok((s, vars))
}

/// One atom per tuple, over variables `x1..xn` (all elements are returned as
/// variables, including isolated ones).
pub fn canonical_query(a: &Structure) -> (Vec<Atom>, Vec<String>) {
    let vars: Vec<String> = (1..=a.size()).map(|i| format!("x{i}")).collect();
    let atoms = a
        .all_tuples()
        .map(|(s, t)| Atom { sym: s, args: t.iter().map(|&e| vars[e as usize].clone()).collect() })
        .collect();
    (atoms, vars)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::RelSymbol;

    fn sig() -> Arc<Signature> {
        Arc::new(Signature::new(vec![RelSymbol::new("E", 2), RelSymbol::new("B", 2)]).unwrap())
    }

    #[test]
    fn two_cycle() {
        let (s, vars) = canonical_database(&sig(), &[Atom::new(0, ["x", "y"]), Atom::new(0, ["y", "x"])], &[]).unwrap();
        assert_eq!(vars, ["x", "y"]);
        assert_eq!(s.size(), 2);
        assert!(s.holds(0, &[0, 1]) && s.holds(0, &[1, 0]));
        assert_eq!(s.tuple_count(), 2);
    }

    #[test]
    fn declared_variables_without_atoms() {
        let (s, _) = canonical_database(&sig(), &[], &["x".to_string()]).unwrap();
        assert_eq!(s.size(), 1);
        assert_eq!(s.tuple_count(), 0);
    }

    #[test]
    fn blue_triangle_pattern() {
        let mut atoms = Vec::new();
        for (a, b) in [("x", "y"), ("y", "z"), ("z", "x")] {
            atoms.push(Atom::new(0, [a, b]));
            atoms.push(Atom::new(1, [a, b]));
        }
        let (s, _) = canonical_database(&sig(), &atoms, &[]).unwrap();
        assert_eq!(s.size(), 3);
        assert_eq!(s.relation_len(0), 3);
        assert_eq!(s.relation_len(1), 3);
    }

    #[test]
    fn query_round_trip() {
        let s = Structure::from_tuples(sig(), 3, [(0, vec![0u32, 1])]).unwrap();
        let (atoms, vars) = canonical_query(&s);
        assert_eq!(atoms.len(), 1);
        assert_eq!(atoms[0].display(s.sig()).to_string(), "E(x1,x2)");
        let (back, _) = canonical_database(s.sig(), &atoms, &vars).unwrap();
        assert_eq!(back, s);
        let empty = Structure::new(sig(), 2);
        let (atoms, vars) = canonical_query(&empty);
        assert!(atoms.is_empty());
        assert_eq!(vars.len(), 2);
    }

    #[test]
    fn arity_is_checked() {
        assert!(canonical_database(&sig(), &[Atom::new(0, ["x"])], &[]).is_err());
    }
}
