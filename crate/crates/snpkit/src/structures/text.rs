use super::{Elem, Signature, Structure, Tuple};
use crate::error::{Error, Result};
use crate::lex::{Cursor, Tok};
use std::sync::Arc;

/// Parses the `structure { domain n  R { (1,2) ... } ... }` format.
///
/// Every symbol named in the text must exist in `sig`; symbols of `sig` not
/// mentioned are empty.
pub fn parse_structure(text: &str, sig: &Arc<Signature>) -> Result<Structure> {
    let mut cur = Cursor::new(text)?;
    cur.keyword("structure")?;
    cur.expect(Tok::LBrace)?;
    cur.keyword("domain")?;
    let n = cur.int("domain size")? as usize;
    if n == 0 {
        return Err(cur.error("domain size must be at least 1"));
    }
    let mut s = Structure::new(sig.clone(), n);
    let mut seen = vec![false; sig.len()];
    while *cur.peek() != Tok::RBrace {
        let (line, col) = cur.here();
        let name = cur.ident("relation name or `}`")?;
        let sym = sig.find(&name).ok_or_else(|| Error::parse(line, col, format!("undeclared symbol `{name}`")))?;
        if seen[sym] {
            return Err(Error::parse(line, col, format!("relation `{name}` listed twice")));
        }
        seen[sym] = true;
        let arity = sig.arity(sym);
        cur.expect(Tok::LBrace)?;
        while *cur.peek() != Tok::RBrace {
            let (tl, tc) = cur.here();
            cur.expect(Tok::LParen)?;
            let mut t = Tuple::new();
            loop {
                let (el, ec) = cur.here();
                let v = cur.int("element")?;
                if v == 0 || v as usize > n {
                    return Err(Error::parse(el, ec, format!("element {v} outside 1..{n}")));
                }
                t.push((v - 1) as Elem);
                if *cur.peek() == Tok::Comma {
                    cur.next();
                } else {
                    break;
                }
            }
            cur.expect(Tok::RParen)?;
            if t.len() != arity {
                return Err(Error::parse(
                    tl,
                    tc,
                    format!("tuple of length {} for `{name}` of arity {arity}", t.len()),
                ));
            }
            s.insert(sym, &t);
        }
        cur.expect(Tok::RBrace)?;
    }
    cur.expect(Tok::RBrace)?;
    if !cur.at_eof() {
        return Err(cur.error("trailing input after structure"));
    }
    Ok(s)
}

/// Prints in the canonical layout; empty relations are omitted.
pub fn print_structure(s: &Structure) -> String {
    let mut out = format!("structure {{ domain {}\n", s.size());
    for (sym, rel) in s.sig().symbols().iter().enumerate() {
        if s.relation_len(sym) == 0 {
            continue;
        }
        out.push_str("  ");
        out.push_str(&rel.name);
        out.push_str(" {");
        for t in s.tuples(sym) {
            out.push_str(" (");
            let parts: Vec<String> = t.iter().map(|e| (e + 1).to_string()).collect();
            out.push_str(&parts.join(","));
            out.push(')');
        }
        out.push_str(" }\n");
    }
    out.push_str("}\n");
    out
}
