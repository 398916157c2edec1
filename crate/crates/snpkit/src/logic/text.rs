use super::{Clause, Literal, Sentence};
use crate::error::{Error, Result};
use crate::lex::{Cursor, Tok};
use crate::structures::{RelSymbol, Signature};

fn parse_sig(cur: &mut Cursor) -> Result<Signature> {
    cur.expect(Tok::LBrace)?;
    let mut sig = Signature::empty();
    while *cur.peek() != Tok::RBrace {
        let (line, col) = cur.here();
        let name = cur.ident("symbol declaration")?;
        cur.expect(Tok::Slash)?;
        let arity = cur.int("arity")? as usize;
        if arity == 0 {
            return Err(Error::parse(line, col, format!("symbol `{name}` must have arity at least 1")));
        }
        sig.push(RelSymbol::new(name.clone(), arity))
            .map_err(|_| Error::parse(line, col, format!("symbol `{name}` declared twice")))?;
    }
    cur.expect(Tok::RBrace)?;
    Ok(sig)
}

fn var_index(vars: &mut Vec<String>, name: String) -> usize {
    match vars.iter().position(|v| *v == name) {
        Some(i) => i,
        None => {
            vars.push(name);
            vars.len() - 1
        }
    }
}

fn parse_clause(cur: &mut Cursor, full: &Signature) -> Result<Clause> {
    let (cl, cc) = cur.here();
    cur.expect(Tok::LBrace)?;
    let mut vars = Vec::new();
    let mut lits = Vec::new();
    loop {
        if *cur.peek() == Tok::RBrace && lits.is_empty() {
            return Err(Error::parse(cl, cc, "empty clause"));
        }
        let negated = *cur.peek() == Tok::Bang;
        if negated {
            cur.next();
        }
        let (line, col) = cur.here();
        let head = cur.ident("literal")?;
        match cur.peek().clone() {
            Tok::LParen => {
                cur.next();
                let sym = full
                    .find(&head)
                    .ok_or_else(|| Error::UndeclaredSymbol(format!("`{head}` at {line}:{col}")))?;
                let mut args = Vec::new();
                loop {
                    let v = cur.ident("variable")?;
                    args.push(var_index(&mut vars, v));
                    if *cur.peek() == Tok::Comma {
                        cur.next();
                    } else {
                        break;
                    }
                }
                cur.expect(Tok::RParen)?;
                if args.len() != full.arity(sym) {
                    return Err(Error::ArityMismatch { name: head, expected: full.arity(sym), found: args.len() });
                }
                lits.push(Literal::Rel { positive: !negated, sym, args });
            }
            Tok::Eq | Tok::NotEq => {
                if negated {
                    return Err(Error::parse(line, col, "write `x != y` instead of negating an equality"));
                }
                let positive = cur.next() == Tok::Eq;
                let lhs = var_index(&mut vars, head);
                let rhs_name = cur.ident("variable")?;
                let rhs = var_index(&mut vars, rhs_name);
                lits.push(Literal::Eq { positive, lhs, rhs });
            }
            t => return Err(cur.error(format!("expected `(`, `=` or `!=`, found {}", t.describe()))),
        }
        match cur.next() {
            Tok::Pipe => continue,
            Tok::RBrace => break,
            t => {
                let (l, c) = cur.here();
                return Err(Error::parse(l, c, format!("expected `|` or `}}`, found {}", t.describe())));
            }
        }
    }
    Ok(Clause { vars, lits })
}

/// Parses `sentence { input { E/2 } exists { B/2 } clause { !E(x,y) | B(x,y) } ... }`.
/// The `exists` block may be omitted.
pub fn parse_sentence(text: &str) -> Result<Sentence> {
    let mut cur = Cursor::new(text)?;
    cur.keyword("sentence")?;
    cur.expect(Tok::LBrace)?;
    cur.keyword("input")?;
    let input = parse_sig(&mut cur)?;
    let exist = if matches!(cur.peek(), Tok::Ident(s) if s == "exists") {
        cur.next();
        parse_sig(&mut cur)?
    } else {
        Signature::empty()
    };
    let (sl, sc) = cur.here();
    let full = input
        .concat(&exist)
        .map_err(|e| Error::parse(sl, sc, format!("symbol declared as both input and existential ({e})")))?;
    let mut clauses = Vec::new();
    while *cur.peek() != Tok::RBrace {
        cur.keyword("clause")?;
        clauses.push(parse_clause(&mut cur, &full)?);
    }
    cur.expect(Tok::RBrace)?;
    if !cur.at_eof() {
        return Err(cur.error("trailing input after sentence"));
    }
    Sentence::new(input, exist, clauses)
}

fn print_sig(sig: &Signature) -> String {
    let parts: Vec<String> = sig.symbols().iter().map(|s| format!("{}/{}", s.name, s.arity)).collect();
    if parts.is_empty() {
        "{ }".into()
    } else {
        format!("{{ {} }}", parts.join(" "))
    }
}

pub(crate) fn print_literal(phi: &Sentence, c: &Clause, l: &Literal) -> String {
    match l {
        Literal::Rel { positive, sym, args } => {
            let a: Vec<&str> = args.iter().map(|&v| c.vars[v].as_str()).collect();
            format!("{}{}({})", if *positive { "" } else { "!" }, phi.full().name(*sym), a.join(","))
        }
        Literal::Eq { positive, lhs, rhs } => {
            format!("{} {} {}", c.vars[*lhs], if *positive { "=" } else { "!=" }, c.vars[*rhs])
        }
    }
}

pub fn print_sentence(phi: &Sentence) -> String {
    let mut out = format!("sentence {{ input {} exists {}\n", print_sig(phi.input()), print_sig(phi.exist()));
    for c in phi.clauses() {
        let lits: Vec<String> = c.lits.iter().map(|l| print_literal(phi, c, l)).collect();
        out.push_str(&format!("  clause {{ {} }}\n", lits.join(" | ")));
    }
    out.push_str("}\n");
    out
}
