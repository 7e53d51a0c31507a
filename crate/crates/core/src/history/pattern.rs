//! History patterns.
//!
//! ```text
//! Q = w(taking1, true); R = r(token2, t); T = w(token1, t + 1);
//! [Q; R; T; None!; w(token1, 0)]*
//! ```
//!
//! Atoms `r(cell, v)` and `w(cell, v)` match one event. The value is `_`, a
//! pattern variable (bound at its first match, compared afterwards) or an
//! expression over bound variables. A cell written without subscripts also
//! matches every element of an array of that name; subscripts may use
//! pattern variables. `None!` matches any segment without writes, `None!x`
//! any segment without writes to `x` and `None?x` any segment without reads
//! of `x`. `[P; Q]` is concatenation, `[P]*` and `[P]+` iterate, `&` and `|`
//! are conjunction and disjunction over the same segment. Each iteration of
//! `*` and `+` starts from the bindings outside it.

use std::collections::HashMap;

use crate::expr::{parse_term, Term};
use crate::machine::{Access, MemEvent};
use crate::syntax::{SyntaxError, Tok, Tokens};
use crate::value::{Value, DEFAULT_INT_BOUND};

use super::HistError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CellPat {
    /// A scalar cell, or every element of the array of that name.
    Name(String),
    Indexed(String, Vec<Term<String>>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ValPat {
    Any,
    Var(String),
    Expr(Term<String>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Pattern {
    Event { access: Access, cell: CellPat, value: ValPat },
    NoWrites(Option<CellPat>),
    NoReads(CellPat),
    Seq(Vec<Pattern>),
    Star(Box<Pattern>),
    Plus(Box<Pattern>),
    And(Box<Pattern>, Box<Pattern>),
    Or(Box<Pattern>, Box<Pattern>),
}

pub fn parse_pattern(text: &str) -> Result<Pattern, HistError> {
    let mut ts = Tokens::new(text).map_err(err)?;
    let mut defs = HashMap::new();
    while matches!(ts.peek(), Tok::Word(_)) && ts.peek_at(1) == &Tok::Sym("=") {
        let name = ts.ident("a pattern name").map_err(err)?;
        ts.next();
        let p = alt(&mut ts, &defs).map_err(err)?;
        ts.expect_sym(";").map_err(err)?;
        defs.insert(name, p);
    }
    let p = alt(&mut ts, &defs).map_err(err)?;
    if !ts.at_eof() {
        return Err(err(ts.unexpected("end of pattern")));
    }
    Ok(p)
}

fn err(e: SyntaxError) -> HistError {
    HistError::Parse { line: e.line, msg: format!("column {}: {}", e.col, e.msg) }
}

type Defs = HashMap<String, Pattern>;

fn alt(ts: &mut Tokens, defs: &Defs) -> Result<Pattern, SyntaxError> {
    let mut p = conj(ts, defs)?;
    while ts.eat_sym("|") {
        p = Pattern::Or(Box::new(p), Box::new(conj(ts, defs)?));
    }
    Ok(p)
}

fn conj(ts: &mut Tokens, defs: &Defs) -> Result<Pattern, SyntaxError> {
    let mut p = item(ts, defs)?;
    while ts.eat_sym("&") {
        p = Pattern::And(Box::new(p), Box::new(item(ts, defs)?));
    }
    Ok(p)
}

fn item(ts: &mut Tokens, defs: &Defs) -> Result<Pattern, SyntaxError> {
    if ts.eat_sym("(") {
        let p = alt(ts, defs)?;
        ts.expect_sym(")")?;
        return Ok(p);
    }
    if ts.eat_sym("[") {
        let mut parts = vec![alt(ts, defs)?];
        while ts.eat_sym(";") {
            parts.push(alt(ts, defs)?);
        }
        ts.expect_sym("]")?;
        let seq = if parts.len() == 1 { parts.pop().unwrap() } else { Pattern::Seq(parts) };
        return Ok(if ts.eat_sym("*") {
            Pattern::Star(Box::new(seq))
        } else if ts.eat_sym("+") {
            Pattern::Plus(Box::new(seq))
        } else {
            seq
        });
    }
    if ts.eat_word("None") {
        if ts.eat_sym("!") {
            let cell = if matches!(ts.peek(), Tok::Word(_)) { Some(cell_pat(ts)?) } else { None };
            return Ok(Pattern::NoWrites(cell));
        }
        if ts.eat_sym("?") {
            return Ok(Pattern::NoReads(cell_pat(ts)?));
        }
        return Err(ts.unexpected("`!` or `?` after `None`"));
    }
    let name = ts.ident("a pattern")?;
    if (name == "r" || name == "w") && ts.is_sym("(") {
        ts.next();
        let cell = cell_pat(ts)?;
        ts.expect_sym(",")?;
        let value = match parse_term(ts, &mut |_, w| Ok(w))? {
            Term::Atom(v) if v == "_" => ValPat::Any,
            Term::Atom(v) => ValPat::Var(v),
            e => ValPat::Expr(e),
        };
        ts.expect_sym(")")?;
        let access = if name == "r" { Access::R } else { Access::W };
        return Ok(Pattern::Event { access, cell, value });
    }
    defs.get(&name).cloned().ok_or_else(|| ts.error(format!("undefined pattern {name}")))
}

fn cell_pat(ts: &mut Tokens) -> Result<CellPat, SyntaxError> {
    let name = ts.ident("a cell name")?;
    let mut idx = Vec::new();
    while ts.eat_sym("[") {
        idx.push(parse_term(ts, &mut |_, w| Ok(w))?);
        ts.expect_sym("]")?;
    }
    Ok(if idx.is_empty() { CellPat::Name(name) } else { CellPat::Indexed(name, idx) })
}

type Bindings = Vec<(String, Value)>;

#[derive(Clone, Debug, PartialEq)]
enum Out {
    End(usize, Bindings),
    /// The history ran out inside the pattern.
    Open,
}

struct Matcher<'a> {
    cells: &'a [String],
    h: &'a [MemEvent],
    partial: bool,
}

fn lookup(b: &Bindings, v: &str) -> Option<Value> {
    b.iter().rev().find(|(n, _)| n == v).map(|(_, x)| *x)
}

fn eval(e: &Term<String>, b: &Bindings) -> Option<Value> {
    e.eval(&mut |v: &String| lookup(b, v).ok_or(crate::value::EvalError::Unbound(v.clone())), DEFAULT_INT_BOUND).ok()
}

fn push(out: &mut Vec<Out>, o: Out) {
    if !out.contains(&o) {
        out.push(o);
    }
}

impl Matcher<'_> {
    fn cell_is(&self, pat: &CellPat, cell: u16, b: &Bindings) -> bool {
        let actual = &self.cells[cell as usize];
        match pat {
            CellPat::Name(n) => actual == n || (actual.starts_with(n.as_str()) && actual[n.len()..].starts_with('[')),
            CellPat::Indexed(n, idx) => {
                let mut want = n.clone();
                for e in idx {
                    match eval(e, b).and_then(|v| v.as_index().ok()) {
                        Some(i) => want.push_str(&format!("[{i}]")),
                        None => return false,
                    }
                }
                *actual == want
            }
        }
    }

    fn segment(&self, i: usize, b: &Bindings, ok: impl Fn(&MemEvent) -> bool) -> Vec<Out> {
        let mut out = vec![Out::End(i, b.clone())];
        for j in i..self.h.len() {
            if !ok(&self.h[j]) {
                break;
            }
            out.push(Out::End(j + 1, b.clone()));
        }
        out
    }

    fn run(&self, p: &Pattern, i: usize, b: &Bindings) -> Vec<Out> {
        match p {
            Pattern::Event { access, cell, value } => {
                let Some(e) = self.h.get(i) else {
                    return if self.partial { vec![Out::Open] } else { Vec::new() };
                };
                if e.access != *access || !self.cell_is(cell, e.cell, b) {
                    return Vec::new();
                }
                let mut b = b.clone();
                let ok = match value {
                    ValPat::Any => true,
                    ValPat::Var(v) => match lookup(&b, v) {
                        Some(x) => x == e.value,
                        None => {
                            b.push((v.clone(), e.value));
                            true
                        }
                    },
                    ValPat::Expr(x) => eval(x, &b) == Some(e.value),
                };
                if ok {
                    vec![Out::End(i + 1, b)]
                } else {
                    Vec::new()
                }
            }
            Pattern::NoWrites(cell) => self
                .segment(i, b, |e| e.access != Access::W || cell.as_ref().is_some_and(|c| !self.cell_is(c, e.cell, b))),
            Pattern::NoReads(cell) => self.segment(i, b, |e| e.access != Access::R || !self.cell_is(cell, e.cell, b)),
            Pattern::Seq(ps) => {
                let mut cur = vec![Out::End(i, b.clone())];
                let mut out = Vec::new();
                for p in ps {
                    let mut next = Vec::new();
                    for o in cur {
                        match o {
                            Out::End(j, b) => {
                                for o in self.run(p, j, &b) {
                                    match o {
                                        Out::Open => push(&mut out, Out::Open),
                                        end => push(&mut next, end),
                                    }
                                }
                            }
                            Out::Open => push(&mut out, Out::Open),
                        }
                    }
                    cur = next;
                }
                for o in cur {
                    push(&mut out, o);
                }
                out
            }
            Pattern::Star(q) => self.iterate(q, i, b, true),
            Pattern::Plus(q) => self.iterate(q, i, b, false),
            Pattern::Or(l, r) => {
                let mut out = self.run(l, i, b);
                for o in self.run(r, i, b) {
                    push(&mut out, o);
                }
                out
            }
            Pattern::And(l, r) => {
                let ls = self.run(l, i, b);
                let mut out = Vec::new();
                let at_end = |o: &Out| matches!(o, Out::Open) || matches!(o, Out::End(j, _) if *j == self.h.len());
                for lo in &ls {
                    match lo {
                        Out::End(j, lb) => {
                            for ro in self.run(r, i, lb) {
                                match ro {
                                    Out::End(k, rb) if k == *j => push(&mut out, Out::End(k, rb)),
                                    Out::Open if *j == self.h.len() => push(&mut out, Out::Open),
                                    _ => {}
                                }
                            }
                        }
                        Out::Open => {
                            if self.run(r, i, b).iter().any(at_end) {
                                push(&mut out, Out::Open);
                            }
                        }
                    }
                }
                out
            }
        }
    }

    fn iterate(&self, q: &Pattern, i: usize, b: &Bindings, allow_empty: bool) -> Vec<Out> {
        let mut out = Vec::new();
        if allow_empty {
            out.push(Out::End(i, b.clone()));
        }
        // An iteration may match nothing; that only matters for `+` at the
        // start, every other empty iteration ends where a previous one did.
        let mut seen = vec![false; self.h.len() + 1];
        seen[i] = allow_empty;
        let mut work = vec![i];
        while let Some(j) = work.pop() {
            for o in self.run(q, j, b) {
                match o {
                    Out::Open => push(&mut out, Out::Open),
                    Out::End(k, _) if k >= j && !seen[k] => {
                        seen[k] = true;
                        push(&mut out, Out::End(k, b.clone()));
                        work.push(k);
                    }
                    Out::End(..) => {}
                }
            }
        }
        out
    }
}

/// Does the whole of `h` match `p`? `cells` names the cells `h` refers to.
pub fn match_pattern(p: &Pattern, cells: &[String], h: &[MemEvent]) -> bool {
    let m = Matcher { cells, h, partial: false };
    m.run(p, 0, &Vec::new()).iter().any(|o| matches!(o, Out::End(j, _) if *j == h.len()))
}

/// Is `h` a prefix of some history matching `p`? An atom reached after the
/// end of `h` counts as matchable.
pub fn match_prefix(p: &Pattern, cells: &[String], h: &[MemEvent]) -> bool {
    let m = Matcher { cells, h, partial: true };
    m.run(p, 0, &Vec::new()).iter().any(|o| matches!(o, Out::Open) || matches!(o, Out::End(j, _) if *j == h.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cells() -> Vec<String> {
        ["x", "y", "a[0]", "a[1]"].iter().map(|s| s.to_string()).collect()
    }

    fn ev(access: Access, cell: u16, v: i64) -> MemEvent {
        MemEvent { access, cell, value: Value::Int(v), stmt: 0 }
    }

    fn w(cell: u16, v: i64) -> MemEvent {
        ev(Access::W, cell, v)
    }

    fn r(cell: u16, v: i64) -> MemEvent {
        ev(Access::R, cell, v)
    }

    fn full(p: &str, h: &[MemEvent]) -> bool {
        match_pattern(&parse_pattern(p).unwrap(), &cells(), h)
    }

    fn prefix(p: &str, h: &[MemEvent]) -> bool {
        match_prefix(&parse_pattern(p).unwrap(), &cells(), h)
    }

    #[test]
    fn atoms_and_sequences() {
        assert!(full("[w(x, 1); r(y, _)]", &[w(0, 1), r(1, 5)]));
        assert!(!full("[w(x, 1); r(y, _)]", &[w(0, 2), r(1, 5)]));
        assert!(!full("w(x, 1)", &[w(0, 1), w(0, 1)]));
        assert!(full("[r(x, v); w(y, v + 1)]", &[r(0, 3), w(1, 4)]));
        assert!(!full("[r(x, v); w(y, v + 1)]", &[r(0, 3), w(1, 3)]));
        assert!(full("[r(x, v); r(y, v)]", &[r(0, 3), r(1, 3)]));
        assert!(!full("[r(x, v); r(y, v)]", &[r(0, 3), r(1, 4)]));
    }

    #[test]
    fn none_segments() {
        assert!(full("None!", &[]));
        assert!(full("None!", &[r(0, 1), r(1, 1)]));
        assert!(!full("None!", &[r(0, 1), w(1, 1)]));
        assert!(full("None!x", &[r(0, 1), w(1, 1)]));
        assert!(!full("None?y", &[r(0, 1), r(1, 1)]));
        assert!(full("[None!; w(x, 1); None!]", &[r(1, 0), w(0, 1), r(0, 1)]));
    }

    #[test]
    fn iteration_scopes_variables() {
        let p = "[[r(x, v); w(y, v)]]*";
        assert!(full(p, &[]));
        assert!(full(p, &[r(0, 1), w(1, 1), r(0, 2), w(1, 2)]));
        assert!(!full(p, &[r(0, 1), w(1, 2)]));
        assert!(!full("[w(x, 1)]+", &[]));
        assert!(full("[w(x, 1)]+", &[w(0, 1), w(0, 1)]));
    }

    #[test]
    fn arrays() {
        assert!(full("w(a, _)", &[w(3, 0)]));
        assert!(!full("w(a, _)", &[w(0, 0)]));
        assert!(full("[r(x, i); w(a[i], 7)]", &[r(0, 1), w(3, 7)]));
        assert!(!full("[r(x, i); w(a[i], 7)]", &[r(0, 0), w(3, 7)]));
        assert!(full("None!a", &[w(0, 1), r(2, 0)]));
    }

    #[test]
    fn conjunction_and_disjunction() {
        assert!(full("[w(x, _)]* & None!y", &[w(0, 1), w(0, 2)]));
        assert!(!full("[w(x, _)]* & None!x", &[w(0, 1)]));
        assert!(full("w(x, 1) | w(y, 1)", &[w(1, 1)]));
    }

    #[test]
    fn prefixes() {
        let p = "Q = w(x, 1); [Q; None!; w(y, 0)]*";
        assert!(prefix(p, &[]));
        assert!(prefix(p, &[w(0, 1)]));
        assert!(prefix(p, &[w(0, 1), r(1, 0), r(0, 1)]));
        assert!(prefix(p, &[w(0, 1), w(1, 0), w(0, 1)]));
        assert!(!prefix(p, &[w(1, 0)]));
        assert!(!full(p, &[w(0, 1)]));
    }

    #[test]
    fn errors() {
        assert!(parse_pattern("[Q]*").unwrap_err().to_string().contains("undefined pattern Q"));
        assert!(parse_pattern("None").is_err());
        assert!(parse_pattern("w(x, 1) w(x, 1)").is_err());
    }
}
