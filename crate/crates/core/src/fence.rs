//! Fence planning from declared sufficient orderings.
//!
//! Each ordering `A < B` of a thread is either already kept by PSO or needs a
//! fence somewhere in the set of gaps between `A` and `B`. Gaps are insertion
//! points in a block: gap `g` of a block with `n` statements sits before
//! statement `g`, so there are `n + 1` of them. A cross-iteration ordering
//! needs a fence after `A` or before `B` in the next iteration, which is an
//! interval that wraps around the end of the loop body. Planning stabs every
//! interval with as few gaps as possible.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::explore::{self, Exploration, ExploreError, ExploreParams};
use crate::history::order::{memory_order, orderings_hold, OrderReq};
use crate::lang::ast::{Stmt, StmtKind, Thread};
use crate::lang::code::{BlockId, Code, LCell, LExpr, LKind, LVar, LocalId, StmtId};
use crate::lang::{LangError, Program};
use crate::machine::Model;

/// `before` of thread `thread` must take effect ahead of `after`.
pub type OrderingConstraint = OrderReq;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum FenceError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Explore(#[from] ExploreError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Reason {
    SameVariable,
    DataDependent,
    ControlDependent,
    FirstIsRead,
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Reason::SameVariable => "same-variable",
            Reason::DataDependent => "data-dependent",
            Reason::ControlDependent => "control-dependent",
            Reason::FirstIsRead => "first-is-read",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum OrderClass {
    Preserved(Reason),
    /// Any of `gaps` in `block` satisfies the ordering.
    NeedsFence {
        block: BlockId,
        gaps: Vec<usize>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct FencePlacement {
    pub thread: usize,
    pub block: BlockId,
    pub gap: usize,
}

/// Parses `order THREAD A < B [cross-iter]` lines. `#` starts a comment.
pub fn parse_orderings(p: &Program, text: &str) -> Result<Vec<OrderingConstraint>, FenceError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.split('#').next().unwrap_or("").trim();
        if l.is_empty() {
            continue;
        }
        let err = |msg: String| FenceError::Parse { line, msg };
        let words: Vec<&str> = l.split_whitespace().collect();
        let cross_iter = match words.as_slice() {
            ["order", _, _, "<", _] => false,
            ["order", _, _, "<", _, "cross-iter"] => true,
            _ => return Err(err(format!("expected `order THREAD A < B [cross-iter]`, found `{l}`"))),
        };
        let t = p.thread_index(words[1]).map_err(|e| err(e.to_string()))?;
        let before = p.resolve(t, words[2]).map_err(|e| err(e.to_string()))?;
        let after = p.resolve(t, words[4]).map_err(|e| err(e.to_string()))?;
        for s in [before, after] {
            if !matches!(p.code.stmt(s).kind, LKind::Read { .. } | LKind::Write { .. }) {
                return Err(err(format!("{} is not a shared access", p.code.stmt(s).label)));
            }
        }
        if !cross_iter && p.code.stmt(before).ordinal >= p.code.stmt(after).ordinal {
            return Err(err(format!("{} does not precede {}; mark it cross-iter", words[2], words[4])));
        }
        out.push(OrderReq { thread: t, before, after, cross_iter });
    }
    Ok(out)
}

/// The deepest block containing both statements, with the positions of the
/// statements (or of their enclosing compounds) in it.
fn common_block(code: &Code, a: StmtId, b: StmtId) -> (BlockId, usize, usize) {
    let chain = |s: StmtId| -> Vec<StmtId> {
        let mut v = code.stmt(s).ancestors.clone();
        v.push(s);
        v
    };
    let (ca, cb) = (chain(a), chain(b));
    let mut k = 0;
    while k < ca.len() && k < cb.len() && ca[k] == cb[k] {
        k += 1;
    }
    // ca[k] and cb[k] are siblings in the common block (k can't run past a
    // plain access statement, and a == b is handled by the caller).
    let (sa, sb) = (ca[k.min(ca.len() - 1)], cb[k.min(cb.len() - 1)]);
    (code.stmt(sa).block, code.stmt(sa).pos, code.stmt(sb).pos)
}

fn loop_body_of(code: &Code, mut block: BlockId) -> Option<BlockId> {
    loop {
        let parent = code.block(block).parent?;
        if matches!(code.stmt(parent).kind, LKind::While { .. }) {
            return Some(block);
        }
        block = code.stmt(parent).block;
    }
}

fn locals_of(e: &LExpr, out: &mut BTreeSet<LocalId>) {
    e.visit_atoms(&mut |v| match v {
        LVar::Local(l) => {
            out.insert(*l);
        }
        LVar::Cell(c) => cell_locals(c, out),
    });
}

fn cell_locals(c: &LCell, out: &mut BTreeSet<LocalId>) {
    if let LCell::Indexed { indices, .. } = c {
        for e in indices {
            locals_of(e, out);
        }
    }
}

fn uses(kind: &LKind) -> BTreeSet<LocalId> {
    let mut out = BTreeSet::new();
    match kind {
        LKind::Write { cell, value } => {
            cell_locals(cell, &mut out);
            locals_of(value, &mut out);
        }
        LKind::Read { value, .. } | LKind::Local { value, .. } => locals_of(value, &mut out),
        _ => {}
    }
    out
}

fn guard(kind: &LKind) -> Option<BTreeSet<LocalId>> {
    let mut out = BTreeSet::new();
    match kind {
        LKind::If { cond, .. } | LKind::While { cond, .. } => locals_of(cond, &mut out),
        _ => return None,
    }
    Some(out)
}

/// Every local some statement of `block` (at any depth) may assign.
fn assigned_in(code: &Code, block: BlockId, out: &mut BTreeSet<LocalId>) {
    for &s in &code.block(block).stmts {
        match &code.stmt(s).kind {
            LKind::Read { local, .. } | LKind::Local { local, .. } => {
                out.insert(*local);
            }
            LKind::If { then_block, else_block, .. } => {
                assigned_in(code, *then_block, out);
                assigned_in(code, *else_block, out);
            }
            LKind::While { body, .. } => assigned_in(code, *body, out),
            _ => {}
        }
    }
}

/// Propagates the taint set `t` through one statement of a block walk:
/// straight-line assignments extend or kill it, compounds may only kill.
fn flow(code: &Code, s: StmtId, t: &mut BTreeSet<LocalId>) {
    match &code.stmt(s).kind {
        LKind::Local { local, value } => {
            let mut u = BTreeSet::new();
            locals_of(value, &mut u);
            if u.is_disjoint(t) {
                t.remove(local);
            } else {
                t.insert(*local);
            }
        }
        LKind::Read { local, .. } => {
            t.remove(local);
        }
        LKind::If { then_block, else_block, .. } => {
            let mut k = BTreeSet::new();
            assigned_in(code, *then_block, &mut k);
            assigned_in(code, *else_block, &mut k);
            t.retain(|l| !k.contains(l));
        }
        LKind::While { body, .. } => {
            let mut k = BTreeSet::new();
            assigned_in(code, *body, &mut k);
            t.retain(|l| !k.contains(l));
        }
        _ => {}
    }
}

/// Data or control dependence of `b` on the local defined by read `a`.
/// Conservative: anything that might break the def-use chain does.
fn dependence(code: &Code, a: StmtId, b: StmtId, cross_iter: bool) -> Option<Reason> {
    let LKind::Read { local, .. } = code.stmt(a).kind else { return None };
    let sa = code.stmt(a);
    let (block, pa, pb) = common_block(code, a, b);
    if sa.block != block || (!cross_iter && pa >= pb) {
        return None;
    }
    let walk_block = if cross_iter { loop_body_of(code, block)? } else { block };
    if walk_block != block {
        return None;
    }
    let stmts = &code.block(block).stmts;
    let between: Vec<StmtId> = if cross_iter {
        stmts[pa + 1..].iter().chain(&stmts[..pb]).copied().collect()
    } else {
        stmts[pa + 1..pb].to_vec()
    };
    let mut t = BTreeSet::from([local]);
    for s in between {
        flow(code, s, &mut t);
    }
    // Descend from the compound at `pb` to `b` itself.
    let sb = code.stmt(b);
    let chain: Vec<StmtId> = sb.ancestors.iter().copied().chain([b]).collect();
    let k = chain.iter().position(|x| code.stmt(*x).block == block).expect("b lies in the common block");
    let mut control = false;
    for w in chain[k..].windows(2) {
        let (c, next) = (w[0], w[1]);
        if let LKind::While { body, .. } = &code.stmt(c).kind {
            let mut killed = BTreeSet::new();
            assigned_in(code, *body, &mut killed);
            t.retain(|l| !killed.contains(l));
        }
        if guard(&code.stmt(c).kind).is_some_and(|g| !g.is_disjoint(&t)) {
            control = true;
        }
        let child = code.stmt(next).block;
        for &s in &code.block(child).stmts[..code.stmt(next).pos] {
            flow(code, s, &mut t);
        }
    }
    if !uses(&sb.kind).is_disjoint(&t) {
        Some(Reason::DataDependent)
    } else if control {
        Some(Reason::ControlDependent)
    } else {
        None
    }
}

fn same_cell(code: &Code, a: StmtId, b: StmtId) -> bool {
    let cell = |s: StmtId| match &code.stmt(s).kind {
        LKind::Read { cell, .. } | LKind::Write { cell, .. } => Some(cell.clone()),
        _ => None,
    };
    matches!((cell(a), cell(b)), (Some(LCell::Fixed(x)), Some(LCell::Fixed(y))) if x == y)
}

/// Classifies one ordering. With `strict`, a read first is not enough on
/// its own to keep the order.
pub fn classify(p: &Program, c: &OrderingConstraint, strict: bool) -> Result<OrderClass, FenceError> {
    let code = &p.code;
    let (a, b) = (c.before, c.after);
    if code.stmt(a).thread != c.thread || code.stmt(b).thread != c.thread {
        return Err(FenceError::Invalid("ordering mixes threads".into()));
    }
    if a == b && !c.cross_iter {
        return Err(FenceError::Invalid(format!("{} is ordered before itself", code.stmt(a).label)));
    }
    if same_cell(code, a, b) {
        return Ok(OrderClass::Preserved(Reason::SameVariable));
    }
    if let Some(r) = dependence(code, a, b, c.cross_iter) {
        return Ok(OrderClass::Preserved(r));
    }
    if !strict && matches!(code.stmt(a).kind, LKind::Read { .. }) {
        return Ok(OrderClass::Preserved(Reason::FirstIsRead));
    }
    let (block, pa, pb) = if a == b {
        let s = code.stmt(a);
        (s.block, s.pos, s.pos)
    } else {
        common_block(code, a, b)
    };
    if c.cross_iter {
        let body = loop_body_of(code, block).ok_or_else(|| {
            FenceError::Invalid(format!(
                "{} < {} is cross-iter but not inside a loop",
                code.stmt(a).label,
                code.stmt(b).label
            ))
        })?;
        let (pa, pb) = if body == block {
            (pa, pb)
        } else {
            let pos_in = |s: StmtId| {
                let st = code.stmt(s);
                st.ancestors.iter().chain([&s]).map(|x| code.stmt(*x)).find(|x| x.block == body).unwrap().pos
            };
            (pos_in(a), pos_in(b))
        };
        let n = code.block(body).stmts.len();
        let gaps = (pa + 1..=n).chain(0..=pb).collect();
        return Ok(OrderClass::NeedsFence { block: body, gaps });
    }
    if pa >= pb {
        return Err(FenceError::Invalid(format!("{} does not precede {}", code.stmt(a).label, code.stmt(b).label)));
    }
    Ok(OrderClass::NeedsFence { block, gaps: (pa + 1..=pb).collect() })
}

/// Minimum set of points hitting every interval. Intervals are contiguous
/// runs of points on a cycle of `size` points, listed from their first
/// point. On a line this is the classic greedy by earliest right endpoint,
/// which puts each fence as late as possible before the access it orders.
/// With wrapping intervals every point is tried as a member of the answer and
/// the rest is solved on the line cut there; the first minimum wins.
pub fn min_stab(size: usize, intervals: &[Vec<usize>]) -> Vec<usize> {
    fn greedy(ivs: &mut [(usize, usize)]) -> Vec<usize> {
        ivs.sort_by_key(|&(lo, hi)| (hi, lo));
        let mut out: Vec<usize> = Vec::new();
        for &(lo, hi) in ivs.iter() {
            if out.last().is_none_or(|&pt| pt < lo) {
                out.push(hi);
            }
        }
        out
    }
    let wraps = |iv: &Vec<usize>| iv.windows(2).any(|w| w[1] < w[0]);
    if intervals.is_empty() {
        return Vec::new();
    }
    if !intervals.iter().any(wraps) {
        let mut ivs: Vec<(usize, usize)> = intervals.iter().map(|iv| (iv[0], *iv.last().unwrap())).collect();
        return greedy(&mut ivs);
    }
    let mut best: Option<Vec<usize>> = None;
    for p in 0..size {
        // Rotate so that p + 1 becomes the origin.
        let rot = |x: usize| (x + size - p - 1) % size;
        let mut rest: Vec<(usize, usize)> =
            intervals.iter().filter(|iv| !iv.contains(&p)).map(|iv| (rot(iv[0]), rot(*iv.last().unwrap()))).collect();
        let mut pts: Vec<usize> = greedy(&mut rest).into_iter().map(|x| (x + p + 1) % size).collect();
        pts.push(p);
        pts.sort_unstable();
        pts.dedup();
        if best.as_ref().is_none_or(|b| pts.len() < b.len()) {
            best = Some(pts);
        }
    }
    best.unwrap()
}

/// Per-thread, per-block minimum set of gaps covering every ordering that
/// PSO does not already keep.
pub fn plan_fences(p: &Program, cs: &[OrderingConstraint], strict: bool) -> Result<Vec<FencePlacement>, FenceError> {
    let mut by_block: BTreeMap<(usize, BlockId), Vec<Vec<usize>>> = BTreeMap::new();
    for c in cs {
        if let OrderClass::NeedsFence { block, gaps } = classify(p, c, strict)? {
            by_block.entry((c.thread, block)).or_default().push(gaps);
        }
    }
    let mut out = Vec::new();
    for ((thread, block), ivs) in by_block {
        let size = p.code.block(block).stmts.len() + 1;
        out.extend(min_stab(size, &ivs).into_iter().map(|gap| FencePlacement { thread, block, gap }));
    }
    Ok(out)
}

/// Does `plan` put a fence into every interval of `ivs`?
pub fn covers(plan: &[FencePlacement], classes: &[(usize, OrderClass)]) -> bool {
    classes.iter().all(|(t, c)| match c {
        OrderClass::Preserved(_) => true,
        OrderClass::NeedsFence { block, gaps } => {
            plan.iter().any(|f| f.thread == *t && f.block == *block && gaps.contains(&f.gap))
        }
    })
}

fn ast_block<'a>(code: &Code, threads: &'a mut [Thread], block: BlockId) -> &'a mut Vec<Stmt> {
    let b = code.block(block);
    match b.parent {
        None => &mut threads[b.thread].body,
        Some(owner) => {
            let s = code.stmt(owner);
            let parent = ast_block(code, threads, s.block);
            match (&mut parent[s.pos].kind, &s.kind) {
                (StmtKind::If { then_branch, else_branch, .. }, LKind::If { then_block, .. }) => {
                    if *then_block == block {
                        then_branch
                    } else {
                        else_branch
                    }
                }
                (StmtKind::While { body, .. }, LKind::While { .. }) => body,
                _ => unreachable!("blocks mirror the syntax tree"),
            }
        }
    }
}

/// Inserts a `fence` at every placement. New fences are labelled `F1`,
/// `F2`, ... per thread, skipping labels already in use.
pub fn apply_fences(p: &Program, fs: &[FencePlacement]) -> Result<Program, FenceError> {
    let code = &p.code;
    let mut threads = p.threads.clone();
    let mut sorted: Vec<FencePlacement> = fs.to_vec();
    sorted.sort();
    sorted.dedup();
    let mut next = vec![0usize; code.threads.len()];
    let mut labelled: Vec<(FencePlacement, String)> = Vec::new();
    for f in &sorted {
        if f.thread >= code.threads.len() || f.block as usize >= code.blocks.len() {
            return Err(FenceError::Invalid(format!("no block {} in thread {}", f.block, f.thread)));
        }
        let b = code.block(f.block);
        if b.thread != f.thread || f.gap > b.stmts.len() {
            return Err(FenceError::Invalid(format!("gap {} is outside block {}", f.gap, f.block)));
        }
        let label = loop {
            next[f.thread] += 1;
            let l = format!("F{}", next[f.thread]);
            // Unique program-wide so a fence never shares a name with a
            // statement of another thread.
            if (0..code.threads.len()).all(|t| code.label(t, &l).is_none()) {
                break l;
            }
        };
        labelled.push((*f, label));
    }
    // Insert from the back so earlier gap indices stay valid.
    for (f, label) in labelled.into_iter().rev() {
        ast_block(code, &mut threads, f.block).insert(f.gap, Stmt { label, kind: StmtKind::Fence });
    }
    Ok(Program::new(p.shared.clone(), threads)?)
}

/// A fence after every statement of every thread.
pub fn fence_everywhere(p: &Program) -> Result<Program, FenceError> {
    let code = &p.code;
    let fs: Vec<FencePlacement> =
        code.stmts.iter().map(|s| FencePlacement { thread: s.thread, block: s.block, gap: s.pos + 1 }).collect();
    apply_fences(p, &fs)
}

/// `fence P1 between Q1 and R1`, or `at start of` / `at end of` a block.
pub fn describe(p: &Program, f: &FencePlacement) -> String {
    let code = &p.code;
    let b = code.block(f.block);
    let thread = &code.threads[f.thread].name;
    let owner = b.parent.map_or_else(|| thread.clone(), |s| code.stmt(s).label.clone());
    let label = |i: usize| &code.stmt(b.stmts[i]).label;
    if b.stmts.is_empty() {
        format!("fence {thread} in {owner}")
    } else if f.gap == 0 {
        format!("fence {thread} at start of {owner} before {}", label(0))
    } else if f.gap == b.stmts.len() {
        format!("fence {thread} at end of {owner} after {}", label(f.gap - 1))
    } else {
        format!("fence {thread} between {} and {}", label(f.gap - 1), label(f.gap))
    }
}

/// Maps constraints onto a rewritten program with the same labels.
pub fn remap(from: &Program, to: &Program, cs: &[OrderingConstraint]) -> Result<Vec<OrderingConstraint>, FenceError> {
    cs.iter()
        .map(|c| {
            let lbl = |s: StmtId| from.code.stmt(s).label.as_str();
            Ok(OrderReq {
                thread: c.thread,
                before: to.resolve(c.thread, lbl(c.before))?,
                after: to.resolve(c.thread, lbl(c.after))?,
                cross_iter: c.cross_iter,
            })
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct Validation {
    pub plan: Vec<FencePlacement>,
    pub program: Program,
    pub exploration: Exploration,
    pub runs: usize,
    /// Sampled runs whose memory order broke some ordering.
    pub ordering_failures: usize,
}

/// Applies the plan, explores the fenced program under PSO and replays
/// `runs` random PSO executions of it, checking every ordering on each.
pub fn validate_plan(
    p: &Program,
    cs: &[OrderingConstraint],
    params: &ExploreParams,
    strict: bool,
    runs: usize,
    seed: u64,
) -> Result<Validation, FenceError> {
    let plan = plan_fences(p, cs, strict)?;
    let fenced = apply_fences(p, &plan)?;
    let mut params = params.clone();
    params.model = Model::Pso;
    // Properties refer to statements by id; resolve them again on the
    // rewritten program from their source text.
    let text: Vec<&str> = params.props.iter().map(|x| x.name.as_str()).collect();
    params.props =
        explore::parse_properties(&fenced, &text.join("\n")).map_err(|e| FenceError::Invalid(e.to_string()))?;
    let exploration = explore::explore(&fenced, &params)?;
    let cs2 = remap(p, &fenced, cs)?;
    let mut failures = 0;
    for run in explore::sample_runs(&fenced, &params, runs, seed)? {
        if orderings_hold(&memory_order(Model::Pso, &run.trace), &cs2).is_err() {
            failures += 1;
        }
    }
    Ok(Validation { plan, program: fenced, exploration, runs, ordering_failures: failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::lang::parse_program;

    fn cs(p: &Program, text: &str) -> Vec<OrderingConstraint> {
        parse_orderings(p, text).unwrap()
    }

    fn class(p: &Program, line: &str) -> OrderClass {
        classify(p, &cs(p, line)[0], false).unwrap()
    }

    #[test]
    fn bakery_classes() {
        let p = parse_program(corpus::BAKERY).unwrap();
        assert_eq!(class(&p, "order P1 R1 < T1"), OrderClass::Preserved(Reason::DataDependent));
        assert_eq!(class(&p, "order P1 V1 < X1"), OrderClass::Preserved(Reason::FirstIsRead));
        assert_eq!(class(&p, "order P1 T1 < W1"), OrderClass::Preserved(Reason::SameVariable));
        let OrderClass::NeedsFence { gaps, .. } = class(&p, "order P1 T1 < V1") else { panic!() };
        assert_eq!(gaps, vec![3, 4]);
        let OrderClass::NeedsFence { gaps, .. } = class(&p, "order P1 P1 < R1 cross-iter") else { panic!() };
        assert_eq!(gaps, vec![11, 0, 1]);
    }

    #[test]
    fn strict_mode_drops_read_first() {
        let p = parse_program(corpus::SIMPSON).unwrap();
        let c = &cs(&p, "order R S2 < Q2 cross-iter")[0];
        assert_eq!(classify(&p, c, false).unwrap(), OrderClass::Preserved(Reason::FirstIsRead));
        assert!(matches!(classify(&p, c, true).unwrap(), OrderClass::NeedsFence { .. }));
        let c = &cs(&p, "order R P2 < R2")[0];
        assert_eq!(classify(&p, c, true).unwrap(), OrderClass::Preserved(Reason::DataDependent));
    }

    #[test]
    fn dependence_through_locals_and_guards() {
        let p = parse_program(
            "shared x = 0; shared y = 0; shared z = 0;
             thread A { R: a := x; b := a + 1; W: y := b; c := 0; V: z := c; if a = 1 { U: y := 2 } }",
        )
        .unwrap();
        let strict = |l: &str| classify(&p, &cs(&p, l)[0], true).unwrap();
        assert_eq!(strict("order A R < W"), OrderClass::Preserved(Reason::DataDependent));
        assert!(matches!(strict("order A R < V"), OrderClass::NeedsFence { .. }));
        assert_eq!(strict("order A R < U"), OrderClass::Preserved(Reason::ControlDependent));
    }

    #[test]
    fn killed_definitions_break_the_chain() {
        let p = parse_program("shared x = 0; shared y = 0; thread A { R: a := x; a := 3; W: y := a }").unwrap();
        assert!(matches!(classify(&p, &cs(&p, "order A R < W")[0], true).unwrap(), OrderClass::NeedsFence { .. }));
    }

    #[test]
    fn corpus_plans() {
        let p = parse_program(corpus::BAKERY).unwrap();
        let plan = plan_fences(&p, &cs(&p, corpus::BAKERY_ORDER), false).unwrap();
        let lines: Vec<String> = plan.iter().map(|f| describe(&p, f)).collect();
        assert_eq!(
            lines,
            [
                "fence P1 between Q1 and R1",
                "fence P1 between T1 and U1",
                "fence P2 between Q2 and R2",
                "fence P2 between T2 and U2"
            ]
        );
        let p = parse_program(corpus::SIMPSON).unwrap();
        let plan = plan_fences(&p, &cs(&p, corpus::SIMPSON_ORDER), false).unwrap();
        let lines: Vec<String> = plan.iter().map(|f| describe(&p, f)).collect();
        assert_eq!(lines, ["fence W between R1 and S1", "fence W between S1 and T1", "fence R between Q2 and R2"]);
        let p = parse_program(corpus::PETERSON).unwrap();
        let plan = plan_fences(&p, &cs(&p, corpus::PETERSON_ORDER), false).unwrap();
        let lines: Vec<String> = plan.iter().map(|f| describe(&p, f)).collect();
        assert_eq!(
            lines,
            [
                "fence P1 between A1 and B1",
                "fence P1 between B1 and C1",
                "fence P2 between A2 and B2",
                "fence P2 between B2 and C2"
            ]
        );
    }

    #[test]
    fn empty_orderings_plan_nothing() {
        let p = parse_program(corpus::BAKERY).unwrap();
        assert!(plan_fences(&p, &cs(&p, "# nothing\n"), false).unwrap().is_empty());
        assert_eq!(apply_fences(&p, &[]).unwrap(), p);
    }

    #[test]
    fn apply_keeps_labels() {
        let p = parse_program(corpus::BAKERY).unwrap();
        let plan = plan_fences(&p, &cs(&p, corpus::BAKERY_ORDER), false).unwrap();
        let q = apply_fences(&p, &plan).unwrap();
        assert_eq!(q.statement_count(), p.statement_count() + 4);
        for s in &p.code.stmts {
            assert!(q.code.label(s.thread, &s.label).is_some());
        }
        let body = q.code.block(q.code.stmt(q.resolve(0, "Q1").unwrap()).block);
        let labels: Vec<&str> = body.stmts.iter().take(6).map(|s| q.code.stmt(*s).label.as_str()).collect();
        assert_eq!(labels, ["Q1", "F1", "R1", "T1", "F2", "U1"]);
    }

    #[test]
    fn fence_everywhere_follows_every_statement() {
        let p = parse_program(corpus::PETERSON).unwrap();
        let q = fence_everywhere(&p).unwrap();
        assert_eq!(q.statement_count(), 2 * p.statement_count());
        let printed = q.to_string();
        assert!(parse_program(&printed).unwrap() == q);
    }

    #[test]
    fn orderings_errors() {
        let p = parse_program(corpus::BAKERY).unwrap();
        let err = |t: &str| parse_orderings(&p, t).unwrap_err().to_string();
        assert!(err("order P1 V1 < T1").contains("cross-iter"));
        assert!(err("order P1 CS < T1").contains("not a shared access"));
        assert!(err("order P3 T1 < V1").starts_with("line 1"));
        assert!(err("order P1 T1 V1").contains("expected"));
    }

    #[test]
    fn stabbing_on_a_cycle() {
        assert_eq!(min_stab(5, &[]), Vec::<usize>::new());
        assert_eq!(min_stab(5, &[vec![1, 2], vec![2, 3]]), vec![2]);
        assert_eq!(min_stab(7, &[vec![4], vec![5], vec![5, 6, 0, 1]]), vec![4, 5]);
        assert_eq!(min_stab(6, &[vec![4, 5, 0], vec![5, 0, 1]]), vec![0]);
    }
}
