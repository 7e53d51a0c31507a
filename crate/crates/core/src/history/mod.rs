//! History-based compatibility checking: per-thread histories with read
//! placeholders, their merges, the last-write function and the Compat
//! predicate in its non-recursive and recursive forms.

pub mod order;
pub mod parse;
pub mod pattern;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::expr::Term;
use crate::machine::{Access, MemEvent};
use crate::value::{Value, DEFAULT_INT_BOUND};

pub use order::{orderings_hold, OrderReq};
pub use parse::{parse_constraints, parse_histories};
pub use pattern::{match_pattern, match_prefix, parse_pattern, Pattern};

pub const DEFAULT_MERGE_CAP: usize = 16;

pub type PhId = u32;
pub type HCell = u16;

/// Value expression of a write: constants combined with placeholders bound
/// by earlier reads.
pub type WExpr = Term<PhId>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ReadVal {
    Ph(PhId),
    Known(Value),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum HEvent {
    Read { cell: HCell, val: ReadVal },
    Write { cell: HCell, value: WExpr },
}

impl HEvent {
    pub fn cell(&self) -> HCell {
        match self {
            HEvent::Read { cell, .. } | HEvent::Write { cell, .. } => *cell,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Placeholder {
    pub name: String,
    pub cell: HCell,
    /// Reported in witnesses (`r(x, ph=?)`).
    pub query: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CAtom {
    Ph(PhId),
    Final(HCell),
}

pub type Constraint = Term<CAtom>;

/// A compatibility question: initial values, one history per thread, and
/// extra constraints over placeholders and final values.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Problem {
    pub cells: Vec<String>,
    pub inits: Vec<Value>,
    pub threads: Vec<(String, Vec<HEvent>)>,
    pub placeholders: Vec<Placeholder>,
    pub constraints: Vec<Constraint>,
}

impl Problem {
    pub fn total_len(&self) -> usize {
        self.threads.iter().map(|(_, h)| h.len()).sum()
    }

    pub fn cell_index(&self, name: &str) -> Option<HCell> {
        self.cells.iter().position(|c| c == name).map(|i| i as HCell)
    }

    /// Builds a problem from recorded histories: every read gets a fresh
    /// placeholder, and with `identity` a constraint pins it to the value
    /// that was observed.
    pub fn from_histories(
        cells: &[String],
        inits: &[Value],
        names: &[String],
        hs: &[Vec<MemEvent>],
        identity: bool,
    ) -> Problem {
        let mut p = Problem { cells: cells.to_vec(), inits: inits.to_vec(), ..Problem::default() };
        for (name, h) in names.iter().zip(hs) {
            let mut evs = Vec::with_capacity(h.len());
            for e in h {
                match e.access {
                    Access::W => evs.push(HEvent::Write { cell: e.cell, value: Term::Const(e.value) }),
                    Access::R => {
                        let id = p.placeholders.len() as PhId;
                        p.placeholders.push(Placeholder { name: format!("ph{}", id + 1), cell: e.cell, query: false });
                        if identity {
                            p.constraints.push(Term::Binary(
                                crate::value::BinOp::Eq,
                                Box::new(Term::Atom(CAtom::Ph(id))),
                                Box::new(Term::Const(e.value)),
                            ));
                        }
                        evs.push(HEvent::Read { cell: e.cell, val: ReadVal::Ph(id) });
                    }
                }
            }
            p.threads.push((name.clone(), evs));
        }
        p
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum HistError {
    #[error("{total} events exceed the merge cap of {cap}")]
    CapExceeded { total: usize, cap: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Invalid(String),
}

/// An interleaving, as back-pointers `(thread, index)` into the inputs.
pub type MergedHistory = Vec<(u16, u16)>;

/// All order-preserving interleavings of sequences with the given lengths,
/// in lexicographic order of the thread choices.
pub fn merge_all_lens(lens: &[usize], cap: usize) -> Result<Vec<MergedHistory>, HistError> {
    let total: usize = lens.iter().sum();
    if total > cap {
        return Err(HistError::CapExceeded { total, cap });
    }
    fn rec(lens: &[usize], pos: &mut Vec<usize>, cur: &mut MergedHistory, out: &mut Vec<MergedHistory>) {
        let mut any = false;
        for t in 0..lens.len() {
            if pos[t] < lens[t] {
                any = true;
                cur.push((t as u16, pos[t] as u16));
                pos[t] += 1;
                rec(lens, pos, cur, out);
                pos[t] -= 1;
                cur.pop();
            }
        }
        if !any {
            out.push(cur.clone());
        }
    }
    let mut out = Vec::new();
    rec(lens, &mut vec![0; lens.len()], &mut Vec::with_capacity(total), &mut out);
    Ok(out)
}

/// All interleavings of `hs`, materialized.
pub fn merge_all<T: Clone>(hs: &[Vec<T>], cap: usize) -> Result<Vec<Vec<T>>, HistError> {
    let lens: Vec<usize> = hs.iter().map(Vec::len).collect();
    Ok(merge_all_lens(&lens, cap)?
        .into_iter()
        .map(|m| m.iter().map(|&(t, i)| hs[t as usize][i as usize].clone()).collect())
        .collect())
}

/// Last value written to `cell` in `h`, or `init` if there is none.
pub fn last_write<'a>(cell: HCell, init: Value, h: impl IntoIterator<Item = &'a MemEvent>) -> Value {
    h.into_iter().filter(|e| e.access == Access::W && e.cell == cell).last().map_or(init, |e| e.value)
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Witness {
    pub merge: MergedHistory,
    /// Value of every placeholder, by id.
    pub binding: Vec<Value>,
    pub finals: Vec<Value>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompatResult {
    pub witnesses: Vec<Witness>,
    /// The recursive engine stopped at its witness limit.
    pub truncated: bool,
}

impl CompatResult {
    pub fn sat(&self) -> bool {
        !self.witnesses.is_empty()
    }
}

fn eval_write(e: &WExpr, binding: &[Option<Value>]) -> Option<Value> {
    e.eval(
        &mut |ph: &PhId| binding[*ph as usize].ok_or(crate::value::EvalError::Unbound(String::new())),
        DEFAULT_INT_BOUND,
    )
    .ok()
}

fn eval_constraint(c: &Constraint, binding: &[Option<Value>], finals: Option<&[Value]>) -> Option<bool> {
    c.eval(
        &mut |a: &CAtom| -> Result<Value, crate::value::EvalError> {
            let v = match a {
                CAtom::Ph(p) => binding[*p as usize],
                CAtom::Final(x) => finals.map(|f| f[*x as usize]),
            };
            v.ok_or(crate::value::EvalError::Unbound(String::new()))
        },
        DEFAULT_INT_BOUND,
    )
    .and_then(Value::as_bool)
    .ok()
}

/// Evaluates the non-recursive definition on one merge: reads must see the
/// last write before them (placeholders are bound to it), finals are the
/// last writes overall, and the extra constraints must hold. Any evaluation
/// error rejects the merge.
pub fn check_merge(p: &Problem, merge: &[(u16, u16)]) -> Option<Witness> {
    let mut cur = p.inits.clone();
    let mut binding: Vec<Option<Value>> = vec![None; p.placeholders.len()];
    for &(t, i) in merge {
        match &p.threads[t as usize].1[i as usize] {
            HEvent::Read { cell, val } => {
                let v = cur[*cell as usize];
                match val {
                    ReadVal::Known(k) if *k != v => return None,
                    ReadVal::Known(_) => {}
                    ReadVal::Ph(ph) => binding[*ph as usize] = Some(v),
                }
            }
            HEvent::Write { cell, value } => cur[*cell as usize] = eval_write(value, &binding)?,
        }
    }
    for c in &p.constraints {
        if eval_constraint(c, &binding, Some(&cur)) != Some(true) {
            return None;
        }
    }
    // Placeholders that never occur in a read stay at the cell's initial value.
    let binding = binding.iter().zip(&p.placeholders).map(|(b, ph)| b.unwrap_or(p.inits[ph.cell as usize])).collect();
    Some(Witness { merge: merge.to_vec(), binding, finals: cur })
}

/// Compat by enumeration of every merge (bounded by `cap` events).
pub fn compat_check(p: &Problem, cap: usize) -> Result<CompatResult, HistError> {
    validate(p)?;
    let lens: Vec<usize> = p.threads.iter().map(|(_, h)| h.len()).collect();
    let merges = merge_all_lens(&lens, cap)?;
    let witnesses = crate::par::par_filter_map(&merges, |m| check_merge(p, m));
    Ok(CompatResult { witnesses, truncated: false })
}

/// Compat by head consumption: repeatedly pick a thread, consume the first
/// event of its history and thread the current values through. A read binds
/// its placeholder to the current value of its cell. Constraints whose
/// placeholders are all bound are checked as soon as possible.
pub fn compat_check_rec(p: &Problem, limit: Option<usize>) -> Result<CompatResult, HistError> {
    validate(p)?;
    let uses: Vec<Vec<PhId>> = p
        .constraints
        .iter()
        .map(|c| {
            let mut v = Vec::new();
            let mut finals = false;
            c.visit_atoms(&mut |a| match a {
                CAtom::Ph(ph) => v.push(*ph),
                CAtom::Final(_) => finals = true,
            });
            if finals {
                vec![PhId::MAX]
            } else {
                v
            }
        })
        .collect();
    let mut st = Rec {
        p,
        limit,
        uses: &uses,
        pos: vec![0; p.threads.len()],
        cur: p.inits.clone(),
        binding: vec![None; p.placeholders.len()],
        merge: Vec::with_capacity(p.total_len()),
        out: Vec::new(),
        truncated: false,
    };
    st.go();
    Ok(CompatResult { witnesses: st.out, truncated: st.truncated })
}

struct Rec<'a> {
    p: &'a Problem,
    limit: Option<usize>,
    uses: &'a [Vec<PhId>],
    pos: Vec<usize>,
    cur: Vec<Value>,
    binding: Vec<Option<Value>>,
    merge: MergedHistory,
    out: Vec<Witness>,
    truncated: bool,
}

impl Rec<'_> {
    fn full(&self) -> bool {
        self.limit.is_some_and(|l| self.out.len() >= l)
    }

    /// Constraints mentioning `ph` that are now fully bound must not fail.
    fn early_ok(&self, ph: PhId) -> bool {
        self.p.constraints.iter().zip(self.uses).all(|(c, u)| {
            if !u.contains(&ph) || u.iter().any(|q| *q == PhId::MAX || self.binding[*q as usize].is_none()) {
                return true;
            }
            eval_constraint(c, &self.binding, None) == Some(true)
        })
    }

    fn go(&mut self) {
        if self.full() {
            self.truncated = true;
            return;
        }
        let mut any = false;
        for t in 0..self.p.threads.len() {
            let h = &self.p.threads[t].1;
            let i = self.pos[t];
            if i >= h.len() {
                continue;
            }
            any = true;
            self.merge.push((t as u16, i as u16));
            self.pos[t] += 1;
            match &h[i] {
                HEvent::Read { cell, val } => {
                    let v = self.cur[*cell as usize];
                    match val {
                        ReadVal::Known(k) => {
                            if *k == v {
                                self.go();
                            }
                        }
                        ReadVal::Ph(ph) => {
                            let old = self.binding[*ph as usize].replace(v);
                            if self.early_ok(*ph) {
                                self.go();
                            }
                            self.binding[*ph as usize] = old;
                        }
                    }
                }
                HEvent::Write { cell, value } => {
                    if let Some(v) = eval_write(value, &self.binding) {
                        let old = std::mem::replace(&mut self.cur[*cell as usize], v);
                        self.go();
                        self.cur[*cell as usize] = old;
                    }
                }
            }
            self.pos[t] -= 1;
            self.merge.pop();
            if self.full() {
                if !any || self.pos.iter().zip(&self.p.threads).any(|(k, (_, h))| *k < h.len()) {
                    self.truncated = true;
                }
                return;
            }
        }
        if !any {
            if let Some(w) = check_merge(self.p, &self.merge) {
                self.out.push(w);
            }
        }
    }
}

fn validate(p: &Problem) -> Result<(), HistError> {
    if p.inits.len() != p.cells.len() {
        return Err(HistError::Invalid("every cell needs an initial value".into()));
    }
    // A write may only use placeholders read earlier in the same thread.
    for (name, h) in &p.threads {
        let mut seen = Vec::new();
        for e in h {
            match e {
                HEvent::Read { val: ReadVal::Ph(ph), .. } => seen.push(*ph),
                HEvent::Write { value, .. } => {
                    for ph in value.atoms() {
                        if !seen.contains(ph) {
                            return Err(HistError::Invalid(format!(
                                "thread {name}: write uses placeholder {} before it is read",
                                p.placeholders[*ph as usize].name
                            )));
                        }
                    }
                }
                _ => {}
            }
        }
    }
    Ok(())
}

/// Checks one given interleaving, with the placeholders bound exactly as
/// the constraints of `p` demand. Used to certify recorded executions.
pub fn certify(p: &Problem, merge: &[(u16, u16)]) -> bool {
    let lens: Vec<usize> = p.threads.iter().map(|(_, h)| h.len()).collect();
    let mut next = vec![0usize; lens.len()];
    for &(t, i) in merge {
        if t as usize >= lens.len() || next[t as usize] != i as usize {
            return false;
        }
        next[t as usize] += 1;
    }
    next == lens && check_merge(p, merge).is_some()
}

/// Names and values for reporting a witness.
pub fn describe_witness(p: &Problem, w: &Witness) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    for (ph, v) in p.placeholders.iter().zip(&w.binding) {
        if ph.query {
            m.insert(ph.name.clone(), v.to_string());
        }
    }
    for (c, v) in p.cells.iter().zip(&w.finals) {
        m.insert(format!("final {c}"), v.to_string());
    }
    m
}

pub fn format_merge(p: &Problem, merge: &[(u16, u16)]) -> String {
    merge
        .iter()
        .map(|&(t, i)| {
            let (name, h) = &p.threads[t as usize];
            format!("{name}:{}", parse::format_event(p, &h[i as usize]))
        })
        .collect::<Vec<_>>()
        .join(" ")
}
