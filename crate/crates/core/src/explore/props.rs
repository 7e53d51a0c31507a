//! Safety properties checked during exploration and their file format.

use std::fmt;

use crate::expr::{parse_term, DisplayTerm, Term};
use crate::lang::code::{CellId, Code, StmtId};
use crate::lang::Program;
use crate::machine::{Effect, State, Step};
use crate::syntax::{SyntaxError, Tok, Tokens};
use crate::value::{EvalError, Value};

use super::stutter::check_stutter;

/// A set of control points of one thread.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Region {
    Label(StmtId),
    /// Inclusive range of statement ordinals.
    Range(usize, usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PAtom {
    Local { thread: usize, local: u16 },
    Cell(CellId),
    At { thread: usize, stmt: StmtId },
}

pub type PExpr = Term<PAtom>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PropKind {
    NeverBoth { t1: usize, r1: Region, t2: usize, r2: Region },
    AlwaysAt { thread: usize, stmt: StmtId, expr: PExpr },
    Stutter { writer: usize, reader: usize, decl: usize, write: StmtId, read: StmtId },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropertySpec {
    /// Source text, used as the property's name in reports.
    pub name: String,
    pub kind: PropKind,
}

impl fmt::Display for PropertySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Values observed by one stutter property so far.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct StutterLog {
    pub writes: Vec<Value>,
    pub reads: Vec<Value>,
}

/// Per-path monitor state: one log per stutter property, in property order.
pub type Monitors = Vec<StutterLog>;

pub fn initial_monitors(props: &[PropertySpec]) -> Monitors {
    props.iter().filter(|p| matches!(p.kind, PropKind::Stutter { .. })).map(|_| StutterLog::default()).collect()
}

/// Records the data write/read performed by `step` in the stutter logs.
pub fn observe(
    props: &[PropertySpec],
    code: &Code,
    mons: &mut Monitors,
    step: Step,
    stmt: Option<StmtId>,
    effect: &Effect,
) {
    let mut k = 0;
    for p in props {
        if let PropKind::Stutter { writer, reader, decl, write, read } = p.kind {
            let in_family = |c: CellId| code.cells_of_decl(decl).contains(&c);
            let tid = step.tid as usize;
            match *effect {
                Effect::Write { cell, value } if tid == writer + 1 && stmt == Some(write) && in_family(cell) => {
                    mons[k].writes.push(value)
                }
                Effect::Read { cell, value, .. } if tid == reader + 1 && stmt == Some(read) && in_family(cell) => {
                    mons[k].reads.push(value)
                }
                _ => {}
            }
            k += 1;
        }
    }
}

fn in_region(code: &Code, s: &State, t: usize, r: &Region) -> bool {
    match (s.next_stmt(code, t), r) {
        (Some(n), Region::Label(l)) => n == *l,
        (Some(n), Region::Range(a, b)) => (*a..=*b).contains(&code.stmt(n).ordinal),
        (None, _) => false,
    }
}

pub fn eval_pexpr(code: &Code, s: &State, e: &PExpr) -> Result<Value, EvalError> {
    e.eval(
        &mut |a: &PAtom| match *a {
            PAtom::Local { thread, local } => s.threads[thread].locals[local as usize]
                .ok_or_else(|| EvalError::Unbound(code.threads[thread].locals[local as usize].clone())),
            PAtom::Cell(c) => Ok(s.g[c as usize]),
            PAtom::At { thread, stmt } => Ok(Value::Bool(s.next_stmt(code, thread) == Some(stmt))),
        },
        crate::value::DEFAULT_INT_BOUND,
    )
}

/// Whether `p` is violated in `s` (with the path's monitor state).
pub fn violated(
    code: &Code,
    p: &PropertySpec,
    s: &State,
    mons: &Monitors,
    mon_index: usize,
) -> Result<bool, EvalError> {
    Ok(match &p.kind {
        PropKind::NeverBoth { t1, r1, t2, r2 } => in_region(code, s, *t1, r1) && in_region(code, s, *t2, r2),
        PropKind::AlwaysAt { thread, stmt, expr } => {
            s.next_stmt(code, *thread) == Some(*stmt) && !eval_pexpr(code, s, expr)?.as_bool()?
        }
        PropKind::Stutter { decl, .. } => {
            let log = &mons[mon_index];
            let mut writes = Vec::with_capacity(log.writes.len() + 1);
            writes.push(code.decls[*decl].init);
            writes.extend_from_slice(&log.writes);
            check_stutter(&writes, &log.reads).is_err()
        }
    })
}

/// Evaluates every property; returns the indices of violated ones.
pub fn violations(code: &Code, props: &[PropertySpec], s: &State, mons: &Monitors) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    let mut k = 0;
    for (i, p) in props.iter().enumerate() {
        let mi = k;
        if matches!(p.kind, PropKind::Stutter { .. }) {
            k += 1;
        }
        if violated(code, p, s, mons, mi).map_err(|e| format!("property `{p}`: {e}"))? {
            out.push(i);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {msg}")]
pub struct PropError {
    pub line: usize,
    pub msg: String,
}

/// Parses a property file: one property per line, `#` comments.
pub fn parse_properties(p: &Program, text: &str) -> Result<Vec<PropertySpec>, PropError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| PropError { line: i + 1, msg };
        let kind = parse_line(p, line).map_err(err)?;
        out.push(PropertySpec { name: line.split_whitespace().collect::<Vec<_>>().join(" "), kind });
    }
    Ok(out)
}

fn syn(e: SyntaxError) -> String {
    e.to_string()
}

fn thread_of(p: &Program, name: &str) -> Result<usize, String> {
    p.thread_index(name).map_err(|e| e.to_string())
}

fn label_of(p: &Program, t: usize, label: &str) -> Result<StmtId, String> {
    p.resolve(t, label).map_err(|e| e.to_string())
}

/// `T@L` or `T@A..B`.
fn parse_region(p: &Program, ts: &mut Tokens) -> Result<(usize, Region), String> {
    let t = thread_of(p, &ts.ident("a thread name").map_err(syn)?)?;
    ts.expect_sym("@").map_err(syn)?;
    let a = label_of(p, t, &ts.word("a label").map_err(syn)?)?;
    if ts.eat_sym("..") {
        let b = label_of(p, t, &ts.word("a label").map_err(syn)?)?;
        let (oa, ob) = (p.code.stmt(a).ordinal, p.code.stmt(b).ordinal);
        if oa > ob {
            return Err("region end precedes its start".into());
        }
        Ok((t, Region::Range(oa, ob)))
    } else {
        Ok((t, Region::Label(a)))
    }
}

fn key_value(ts: &mut Tokens, key: &str) -> Result<String, String> {
    ts.expect_word(key).map_err(syn)?;
    ts.expect_sym("=").map_err(syn)?;
    ts.word("a value").map_err(syn)
}

fn key_label(ts: &mut Tokens, key: &str) -> Result<String, String> {
    ts.expect_word(key).map_err(syn)?;
    ts.expect_sym("@").map_err(syn)?;
    ts.word("a label").map_err(syn)
}

fn parse_line(p: &Program, line: &str) -> Result<PropKind, String> {
    let mut ts = Tokens::new(line).map_err(syn)?;
    let head = ts.ident("a property kind").map_err(syn)?;
    let kind = match head.as_str() {
        "never" => {
            ts.expect_sym("-").map_err(syn)?;
            ts.expect_word("both").map_err(syn)?;
            let (t1, r1) = parse_region(p, &mut ts)?;
            let (t2, r2) = parse_region(p, &mut ts)?;
            PropKind::NeverBoth { t1, r1, t2, r2 }
        }
        "always" => {
            ts.expect_sym("-").map_err(syn)?;
            ts.expect_word("at").map_err(syn)?;
            let (thread, region) = parse_region(p, &mut ts)?;
            let Region::Label(stmt) = region else {
                return Err("always-at takes a single label".into());
            };
            let expr = parse_pexpr(p, thread, &mut ts)?;
            PropKind::AlwaysAt { thread, stmt, expr }
        }
        "stutter" => {
            let writer = thread_of(p, &key_value(&mut ts, "writer")?)?;
            let reader = thread_of(p, &key_value(&mut ts, "reader")?)?;
            let cells = key_value(&mut ts, "cells")?;
            let decl = p.code.decl_by_name(&cells).ok_or_else(|| format!("unknown shared variable `{cells}`"))?;
            let write = label_of(p, writer, &key_label(&mut ts, "write")?)?;
            let read = label_of(p, reader, &key_label(&mut ts, "read")?)?;
            use crate::lang::code::LKind;
            if !matches!(p.code.stmt(write).kind, LKind::Write { .. }) {
                return Err("the write label must be a shared write".into());
            }
            if !matches!(p.code.stmt(read).kind, LKind::Read { .. }) {
                return Err("the read label must be a shared read".into());
            }
            PropKind::Stutter { writer, reader, decl, write, read }
        }
        other => return Err(format!("unknown property `{other}`")),
    };
    if !ts.at_eof() {
        return Err(syn(ts.unexpected("end of line")));
    }
    Ok(kind)
}

/// Predicate over a configuration. Unqualified names are locals of `thread`
/// or shared variables; `T.x` is local `x` of thread `T`; `at(T, L)` holds
/// when `T`'s next statement is `L`.
fn parse_pexpr(p: &Program, thread: usize, ts: &mut Tokens) -> Result<PExpr, String> {
    let mut failure: Option<String> = None;
    let r = parse_term(ts, &mut |ts: &mut Tokens, w: String| -> Result<PAtom, SyntaxError> {
        let mut fail = |msg: String, ts: &Tokens| {
            let e = ts.error(msg.clone());
            failure = Some(msg);
            e
        };
        if w == "at" && ts.is_sym("(") {
            ts.next();
            let t = ts.ident("a thread name")?;
            ts.expect_sym(",")?;
            let l = ts.word("a label")?;
            ts.expect_sym(")")?;
            let t = thread_of(p, &t).map_err(|m| fail(m, ts))?;
            let stmt = label_of(p, t, &l).map_err(|m| fail(m, ts))?;
            return Ok(PAtom::At { thread: t, stmt });
        }
        if ts.is_sym(".") {
            ts.next();
            let x = ts.ident("a local variable")?;
            let t = thread_of(p, &w).map_err(|m| fail(m, ts))?;
            return local_atom(p, t, &x).map_err(|m| fail(m, ts));
        }
        if let Some(d) = p.code.decl_by_name(&w) {
            let mut ix = Vec::new();
            while ts.eat_sym("[") {
                ix.push(match ts.peek().clone() {
                    Tok::Word(b) if b == "true" || b == "false" => {
                        ts.next();
                        (b == "true") as i64
                    }
                    _ => ts.int()?,
                });
                ts.expect_sym("]")?;
            }
            if ix.len() != p.code.decls[d].dims.len() {
                return Err(fail(format!("`{w}` needs {} constant subscripts", p.code.decls[d].dims.len()), ts));
            }
            let c = p.code.cell_at(d as u16, &ix).map_err(|e| fail(e.to_string(), ts))?;
            return Ok(PAtom::Cell(c));
        }
        local_atom(p, thread, &w).map_err(|m| fail(m, ts))
    });
    match r {
        Ok(e) => Ok(e),
        Err(e) => Err(failure.unwrap_or_else(|| e.to_string())),
    }
}

fn local_atom(p: &Program, thread: usize, name: &str) -> Result<PAtom, String> {
    let t = &p.code.threads[thread];
    t.locals
        .iter()
        .position(|l| l == name)
        .map(|local| PAtom::Local { thread, local: local as u16 })
        .ok_or_else(|| format!("thread {} has no local `{name}`", t.name))
}

pub fn display_pexpr(p: &Program, e: &PExpr) -> String {
    let code = &p.code;
    DisplayTerm(e, &|a: &PAtom, f: &mut fmt::Formatter<'_>| match *a {
        PAtom::Local { thread, local } => {
            write!(f, "{}.{}", code.threads[thread].name, code.threads[thread].locals[local as usize])
        }
        PAtom::Cell(c) => write!(f, "{}", code.cell_name(c)),
        PAtom::At { thread, stmt } => write!(f, "at({}, {})", code.threads[thread].name, code.stmt(stmt).label),
    })
    .to_string()
}
