//! Machine states and the small-step relation shared by the SC and PSO
//! engines. The two models differ only in where writes go (memory or the
//! per-cell store buffer), how reads are resolved, and the extra Flush/Fence
//! transitions with their buffer-emptiness side conditions.

use std::fmt;
use std::hash::{DefaultHasher, Hash, Hasher};

use serde::Serialize;
use smallvec::SmallVec;
use thiserror::Error;

use crate::lang::code::{BlockId, CellId, Code, LCell, LExpr, LKind, LVar, StmtId};
use crate::lang::Program;
use crate::value::{EvalError, Value, DEFAULT_INT_BOUND};

/// Thread id: 0 is the root thread, spawned threads are `1..=n`.
pub type Tid = u16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Sc,
    Pso,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Sc => "sc",
            Model::Pso => "pso",
        })
    }
}

impl std::str::FromStr for Model {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "sc" => Ok(Model::Sc),
            "pso" => Ok(Model::Pso),
            _ => Err(format!("unknown memory model `{s}` (expected sc or pso)")),
        }
    }
}

/// Transition rules. The derived order is the tie-breaking order used by
/// the explorer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    Gw,
    Gr,
    Lrw,
    IteT,
    IteF,
    WhlT,
    WhlF,
    SkpSyc,
    Join(Tid),
    ParComp,
    End,
    Flush(CellId),
    Fence,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::Gw => "GW",
            Rule::Gr => "GR",
            Rule::Lrw => "LRW",
            Rule::IteT => "ITE-T",
            Rule::IteF => "ITE-F",
            Rule::WhlT => "WHL-T",
            Rule::WhlF => "WHL-F",
            Rule::SkpSyc => "SKP-SYC",
            Rule::Join(_) => "JOIN",
            Rule::ParComp => "PARCOMP",
            Rule::End => "END",
            Rule::Flush(_) => "FLUSH",
            Rule::Fence => "FENCE",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Step {
    pub tid: Tid,
    pub rule: Rule,
}

impl Step {
    pub fn new(tid: Tid, rule: Rule) -> Step {
        Step { tid, rule }
    }
}

/// Exploration bounds applied while computing enabled steps. `None` means
/// unbounded, which is what the plain engines use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Limits {
    /// WHL-T budget for loops that are not nested in another loop.
    pub unroll: Option<u16>,
    /// WHL-T budget for loops nested inside another loop.
    pub spin: Option<u16>,
    /// Maximum buffered entries per (thread, cell).
    pub buffer: Option<u16>,
    pub int_bound: Option<i64>,
}

impl Limits {
    pub fn int_bound(&self) -> i64 {
        self.int_bound.unwrap_or(DEFAULT_INT_BOUND)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Frame {
    pub block: BlockId,
    pub pos: u16,
    /// WHL-T count for the loop at `pos`.
    pub iters: u16,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Status {
    Idle,
    Running,
    Ended,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BufEntry {
    pub cell: CellId,
    pub value: Value,
    /// Statement that produced the write.
    pub stmt: StmtId,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ThreadState {
    pub status: Status,
    pub locals: SmallVec<[Option<Value>; 8]>,
    pub stack: SmallVec<[Frame; 4]>,
    /// All of this thread's store buffers, ordered by cell and FIFO within a
    /// cell (head first). Always empty under SC.
    pub buffer: SmallVec<[BufEntry; 4]>,
}

impl ThreadState {
    pub fn buffered(&self, cell: CellId) -> impl DoubleEndedIterator<Item = &BufEntry> {
        self.buffer.iter().filter(move |e| e.cell == cell)
    }

    pub fn buffer_len(&self, cell: CellId) -> usize {
        self.buffered(cell).count()
    }

    pub fn at_end(&self) -> bool {
        self.status == Status::Running && self.stack.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RootPc {
    BeforePar,
    /// Waiting to join the thread with this index (0-based).
    Join(u16),
    AtEnd,
    Done,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct State {
    pub g: Vec<Value>,
    pub root: RootPc,
    pub threads: Vec<ThreadState>,
}

impl State {
    pub fn initial(code: &Code) -> State {
        State {
            g: code.cell_inits.clone(),
            root: RootPc::BeforePar,
            threads: code
                .threads
                .iter()
                .map(|t| ThreadState {
                    status: Status::Idle,
                    locals: t.locals.iter().map(|_| None).collect(),
                    stack: SmallVec::new(),
                    buffer: SmallVec::new(),
                })
                .collect(),
        }
    }

    /// Statement the spawned thread `idx` executes next, if any.
    pub fn next_stmt(&self, code: &Code, idx: usize) -> Option<StmtId> {
        let ts = &self.threads[idx];
        if ts.status != Status::Running {
            return None;
        }
        let top = ts.stack.last()?;
        code.block(top.block).stmts.get(top.pos as usize).copied()
    }

    pub fn is_final(&self) -> bool {
        self.root == RootPc::Done
    }

    /// 128-bit fingerprint used for the visited set.
    pub fn fingerprint(&self) -> u128 {
        fingerprint_of(self)
    }
}

pub fn fingerprint_of<T: Hash + ?Sized>(x: &T) -> u128 {
    let mut a = DefaultHasher::new();
    0x9e37_79b9_u32.hash(&mut a);
    x.hash(&mut a);
    let mut b = DefaultHasher::new();
    0x85eb_ca6b_u32.hash(&mut b);
    x.hash(&mut b);
    ((a.finish() as u128) << 64) | b.finish() as u128
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Access {
    R,
    W,
}

/// One history element as recorded during execution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MemEvent {
    pub access: Access,
    pub cell: CellId,
    pub value: Value,
    pub stmt: StmtId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Effect {
    Silent,
    Write { cell: CellId, value: Value },
    Read { cell: CellId, value: Value, forwarded: bool },
    Local { local: u16, value: Value },
    Branch(bool),
    Flush { cell: CellId, value: Value, stmt: StmtId },
    Spawn,
    Join(Tid),
    End,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub state: State,
    pub stmt: Option<StmtId>,
    pub effect: Effect,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum StepError {
    #[error("step {0} is not enabled")]
    NotEnabled(String),
    #[error("{thread} at {label}: {source}")]
    Eval { thread: String, label: String, source: EvalError },
}

/// Enabled steps plus the exploration flags raised while computing them.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Enabled {
    pub steps: Vec<Step>,
    /// Some loop wanted another iteration past its budget.
    pub bound_hit: bool,
    /// Some write was held back because its buffer was full.
    pub saturated: bool,
}

fn eval_err(code: &Code, idx: usize, stmt: StmtId, source: EvalError) -> StepError {
    StepError::Eval { thread: code.threads[idx].name.clone(), label: code.stmt(stmt).label.clone(), source }
}

/// Resolves a cell reference with the thread's current locals.
pub fn resolve_cell(
    code: &Code,
    locals: &[Option<Value>],
    c: &LCell,
    idx: usize,
    bound: i64,
) -> Result<CellId, EvalError> {
    match c {
        LCell::Fixed(id) => Ok(*id),
        LCell::Indexed { decl, indices } => {
            let mut ix: SmallVec<[i64; 2]> = SmallVec::new();
            for e in indices {
                ix.push(eval_local(code, locals, e, idx, bound)?.as_index()?);
            }
            code.cell_at(*decl, &ix)
        }
    }
}

fn local_value(code: &Code, locals: &[Option<Value>], l: u16, idx: usize) -> Result<Value, EvalError> {
    locals[l as usize].ok_or_else(|| EvalError::Unbound(code.threads[idx].locals[l as usize].clone()))
}

/// Evaluates an expression that mentions no shared cell (except inside
/// subscripts, which the discipline forbids anyway).
pub fn eval_local(
    code: &Code,
    locals: &[Option<Value>],
    e: &LExpr,
    idx: usize,
    bound: i64,
) -> Result<Value, EvalError> {
    e.eval(
        &mut |v: &LVar| match v {
            LVar::Local(l) => local_value(code, locals, *l, idx),
            LVar::Cell(_) => Err(EvalError::Type("shared variable in a local expression".into())),
        },
        bound,
    )
}

/// Evaluation under the relaxed model: a shared read returns the tail of
/// the thread's own buffer for that cell, or memory when it is empty. With
/// an empty buffer this is exactly the SC evaluation.
pub fn eval_in(
    code: &Code,
    g: &[Value],
    ts: &ThreadState,
    idx: usize,
    e: &LExpr,
    bound: i64,
) -> Result<(Value, bool), EvalError> {
    let mut forwarded = false;
    let v = e.eval(
        &mut |v: &LVar| match v {
            LVar::Local(l) => local_value(code, &ts.locals, *l, idx),
            LVar::Cell(c) => {
                let cell = resolve_cell(code, &ts.locals, c, idx, bound)?;
                match ts.buffered(cell).next_back() {
                    Some(e) => {
                        forwarded = true;
                        Ok(e.value)
                    }
                    None => Ok(g[cell as usize]),
                }
            }
        },
        bound,
    )?;
    Ok((v, forwarded))
}

/// Pops finished blocks. Leaving an `if` branch advances past the `if`;
/// leaving a loop body returns to the loop for another guard test.
fn settle(code: &Code, ts: &mut ThreadState) {
    loop {
        let Some(top) = ts.stack.last() else { return };
        if (top.pos as usize) < code.block(top.block).stmts.len() {
            return;
        }
        ts.stack.pop();
        let Some(parent) = ts.stack.last_mut() else { return };
        let owner = code.block(parent.block).stmts[parent.pos as usize];
        match code.stmt(owner).kind {
            LKind::While { .. } => return,
            _ => {
                parent.pos += 1;
                parent.iters = 0;
            }
        }
    }
}

fn advance(code: &Code, ts: &mut ThreadState) {
    let top = ts.stack.last_mut().expect("running thread has a frame");
    top.pos += 1;
    top.iters = 0;
    settle(code, ts);
}

fn enter(code: &Code, ts: &mut ThreadState, block: BlockId) {
    ts.stack.push(Frame { block, pos: 0, iters: 0 });
    settle(code, ts);
}

/// Steps whose premises hold in `s`, in (tid, rule) order.
pub fn enabled(model: Model, code: &Code, s: &State, limits: &Limits) -> Result<Enabled, StepError> {
    let mut out = Enabled::default();
    let bound = limits.int_bound();
    match s.root {
        RootPc::BeforePar => out.steps.push(Step::new(0, Rule::ParComp)),
        RootPc::Join(i) => {
            if s.threads[i as usize].status == Status::Ended {
                out.steps.push(Step::new(0, Rule::Join(i + 1)));
            }
        }
        RootPc::AtEnd => out.steps.push(Step::new(0, Rule::End)),
        RootPc::Done => {}
    }
    for (idx, ts) in s.threads.iter().enumerate() {
        let tid = idx as Tid + 1;
        if ts.status != Status::Running {
            continue;
        }
        let empty = ts.buffer.is_empty();
        match s.next_stmt(code, idx) {
            None => {
                if empty {
                    out.steps.push(Step::new(tid, Rule::End));
                }
            }
            Some(sid) => {
                let st = code.stmt(sid);
                let rule = match &st.kind {
                    LKind::Write { cell, .. } => {
                        let full = match (model, limits.buffer) {
                            (Model::Pso, Some(b)) => {
                                let c = resolve_cell(code, &ts.locals, cell, idx, bound)
                                    .map_err(|e| eval_err(code, idx, sid, e))?;
                                ts.buffer_len(c) >= b as usize
                            }
                            _ => false,
                        };
                        if full {
                            out.saturated = true;
                            None
                        } else {
                            Some(Rule::Gw)
                        }
                    }
                    LKind::Read { .. } => Some(Rule::Gr),
                    LKind::Local { .. } => Some(Rule::Lrw),
                    LKind::If { cond, .. } => {
                        let b = eval_local(code, &ts.locals, cond, idx, bound)
                            .and_then(Value::as_bool)
                            .map_err(|e| eval_err(code, idx, sid, e))?;
                        Some(if b { Rule::IteT } else { Rule::IteF })
                    }
                    LKind::While { cond, .. } => {
                        let b = eval_local(code, &ts.locals, cond, idx, bound)
                            .and_then(Value::as_bool)
                            .map_err(|e| eval_err(code, idx, sid, e))?;
                        if !b {
                            Some(Rule::WhlF)
                        } else {
                            let budget = if st.loop_depth(code) == 0 { limits.unroll } else { limits.spin };
                            let iters = ts.stack.last().expect("frame").iters;
                            match budget {
                                Some(n) if iters >= n => {
                                    out.bound_hit = true;
                                    None
                                }
                                _ => Some(Rule::WhlT),
                            }
                        }
                    }
                    LKind::Skip => Some(Rule::SkpSyc),
                    LKind::Fence => match model {
                        Model::Sc => Some(Rule::SkpSyc),
                        Model::Pso => empty.then_some(Rule::Fence),
                    },
                };
                if let Some(rule) = rule {
                    out.steps.push(Step::new(tid, rule));
                }
            }
        }
        let mut last = None;
        for e in &ts.buffer {
            if last != Some(e.cell) {
                out.steps.push(Step::new(tid, Rule::Flush(e.cell)));
                last = Some(e.cell);
            }
        }
    }
    Ok(out)
}

/// Applies `step` to `s`. The step is validated against the rule premises
/// (but not against exploration limits).
pub fn step(model: Model, code: &Code, s: &State, step: Step, limits: &Limits) -> Result<Outcome, StepError> {
    let not_enabled = || StepError::NotEnabled(format_step(code, step));
    let bound = limits.int_bound();
    let mut ns = s.clone();
    if step.tid == 0 {
        let effect = match (s.root, step.rule) {
            (RootPc::BeforePar, Rule::ParComp) => {
                for ts in ns.threads.iter_mut() {
                    ts.status = Status::Running;
                }
                for (idx, t) in code.threads.iter().enumerate() {
                    enter(code, &mut ns.threads[idx], t.root);
                }
                ns.root = if ns.threads.is_empty() { RootPc::AtEnd } else { RootPc::Join(0) };
                Effect::Spawn
            }
            (RootPc::Join(i), Rule::Join(t)) if t == i + 1 && s.threads[i as usize].status == Status::Ended => {
                ns.root = if (i as usize + 1) < s.threads.len() { RootPc::Join(i + 1) } else { RootPc::AtEnd };
                Effect::Join(t)
            }
            (RootPc::AtEnd, Rule::End) => {
                ns.root = RootPc::Done;
                Effect::End
            }
            _ => return Err(not_enabled()),
        };
        return Ok(Outcome { state: ns, stmt: None, effect });
    }
    let idx = step.tid as usize - 1;
    if idx >= s.threads.len() || s.threads[idx].status != Status::Running {
        return Err(not_enabled());
    }
    if let Rule::Flush(cell) = step.rule {
        if model != Model::Pso {
            return Err(not_enabled());
        }
        let ts = &mut ns.threads[idx];
        let Some(pos) = ts.buffer.iter().position(|e| e.cell == cell) else {
            return Err(not_enabled());
        };
        let e = ts.buffer.remove(pos);
        ns.g[cell as usize] = e.value;
        return Ok(Outcome {
            state: ns,
            stmt: Some(e.stmt),
            effect: Effect::Flush { cell, value: e.value, stmt: e.stmt },
        });
    }
    let Some(sid) = s.next_stmt(code, idx) else {
        if step.rule == Rule::End && s.threads[idx].buffer.is_empty() {
            ns.threads[idx].status = Status::Ended;
            return Ok(Outcome { state: ns, stmt: None, effect: Effect::End });
        }
        return Err(not_enabled());
    };
    let st = code.stmt(sid);
    let err = |e| eval_err(code, idx, sid, e);
    let ts = &mut ns.threads[idx];
    let effect = match (&st.kind, step.rule) {
        (LKind::Write { cell, value }, Rule::Gw) => {
            let c = resolve_cell(code, &ts.locals, cell, idx, bound).map_err(err)?;
            let v = eval_local(code, &ts.locals, value, idx, bound).map_err(err)?;
            match model {
                Model::Sc => ns.g[c as usize] = v,
                Model::Pso => {
                    let at = ts.buffer.iter().rposition(|e| e.cell <= c).map_or(0, |p| p + 1);
                    ts.buffer.insert(at, BufEntry { cell: c, value: v, stmt: sid });
                }
            }
            advance(code, &mut ns.threads[idx]);
            Effect::Write { cell: c, value: v }
        }
        (LKind::Read { local, cell, value }, Rule::Gr) => {
            let c = resolve_cell(code, &ts.locals, cell, idx, bound).map_err(err)?;
            let (v, forwarded) = eval_in(code, &s.g, ts, idx, value, bound).map_err(err)?;
            // The event records the cell's value, not the whole expression.
            let (cv, _) =
                eval_in(code, &s.g, ts, idx, &LExpr::Atom(LVar::Cell(LCell::Fixed(c))), bound).map_err(err)?;
            ts.locals[*local as usize] = Some(v);
            advance(code, ts);
            Effect::Read { cell: c, value: cv, forwarded }
        }
        (LKind::Local { local, value }, Rule::Lrw) => {
            let v = eval_local(code, &ts.locals, value, idx, bound).map_err(err)?;
            ts.locals[*local as usize] = Some(v);
            advance(code, ts);
            Effect::Local { local: *local, value: v }
        }
        (LKind::If { cond, then_block, else_block }, Rule::IteT | Rule::IteF) => {
            let b = eval_local(code, &ts.locals, cond, idx, bound).and_then(Value::as_bool).map_err(err)?;
            if b != (step.rule == Rule::IteT) {
                return Err(not_enabled());
            }
            enter(code, ts, if b { *then_block } else { *else_block });
            Effect::Branch(b)
        }
        (LKind::While { cond, body }, Rule::WhlT | Rule::WhlF) => {
            let b = eval_local(code, &ts.locals, cond, idx, bound).and_then(Value::as_bool).map_err(err)?;
            if b != (step.rule == Rule::WhlT) {
                return Err(not_enabled());
            }
            if b {
                ts.stack.last_mut().expect("frame").iters += 1;
                enter(code, ts, *body);
            } else {
                advance(code, ts);
            }
            Effect::Branch(b)
        }
        (LKind::Skip, Rule::SkpSyc) | (LKind::Fence, Rule::SkpSyc)
            if model == Model::Sc || matches!(st.kind, LKind::Skip) =>
        {
            advance(code, ts);
            Effect::Silent
        }
        (LKind::Fence, Rule::Fence) if model == Model::Pso && ts.buffer.is_empty() => {
            advance(code, ts);
            Effect::Silent
        }
        _ => return Err(not_enabled()),
    };
    Ok(Outcome { state: ns, stmt: Some(sid), effect })
}

/// History element produced by an outcome, if any. Writes are recorded when
/// issued, so histories follow program order under both models.
pub fn history_event(o: &Outcome) -> Option<MemEvent> {
    let stmt = o.stmt?;
    match o.effect {
        Effect::Write { cell, value } => Some(MemEvent { access: Access::W, cell, value, stmt }),
        Effect::Read { cell, value, .. } => Some(MemEvent { access: Access::R, cell, value, stmt }),
        _ => None,
    }
}

/// State plus the per-thread histories accumulated so far.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Config {
    pub model: Model,
    pub state: State,
    pub histories: Vec<Vec<MemEvent>>,
}

impl Config {
    pub fn initial(model: Model, code: &Code) -> Config {
        Config { model, state: State::initial(code), histories: vec![Vec::new(); code.threads.len()] }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEntry {
    pub step: Step,
    pub stmt: Option<StmtId>,
    pub effect: Effect,
}

/// How a run chooses among enabled steps.
#[derive(Clone, Debug)]
pub enum Policy {
    /// Replay exactly these steps.
    Schedule(Vec<Step>),
    /// Always the first enabled step in (tid, rule) order.
    First,
    /// Rotate through threads, taking each thread's first enabled step.
    RoundRobin,
    /// Uniformly random among enabled steps.
    Random(u64),
}

#[derive(Clone, Debug)]
pub struct Run {
    pub config: Config,
    pub trace: Vec<TraceEntry>,
    pub schedule: Vec<Step>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum RunError {
    #[error("schedule step {index} ({step}) is not enabled")]
    InvalidStep { index: usize, step: String },
    #[error("step {index}: {source}")]
    Step { index: usize, source: StepError },
}

/// Runs `p` from its initial configuration. Stops when no step is enabled,
/// the schedule is exhausted, or `max_steps` steps have been taken.
pub fn run(model: Model, p: &Program, policy: Policy, limits: &Limits, max_steps: usize) -> Result<Run, RunError> {
    use rand::{Rng, SeedableRng};
    let code = &p.code;
    let mut cfg = Config::initial(model, code);
    let mut trace = Vec::new();
    let mut schedule = Vec::new();
    let mut rng = match policy {
        Policy::Random(seed) => Some(rand_chacha::ChaCha8Rng::seed_from_u64(seed)),
        _ => None,
    };
    let mut rr_next: Tid = 0;
    for index in 0..max_steps {
        let chosen = match &policy {
            Policy::Schedule(steps) => {
                let Some(&s) = steps.get(index) else { break };
                let en = enabled(model, code, &cfg.state, limits).map_err(|source| RunError::Step { index, source })?;
                if !en.steps.contains(&s) {
                    return Err(RunError::InvalidStep { index, step: format_step(code, s) });
                }
                s
            }
            _ => {
                let en = enabled(model, code, &cfg.state, limits).map_err(|source| RunError::Step { index, source })?;
                if en.steps.is_empty() {
                    break;
                }
                match &policy {
                    Policy::First => en.steps[0],
                    Policy::RoundRobin => {
                        let n = code.threads.len() as Tid + 1;
                        let pick = (0..n)
                            .map(|k| (rr_next + k) % n)
                            .find_map(|t| en.steps.iter().find(|s| s.tid == t))
                            .copied()
                            .expect("some step is enabled");
                        rr_next = (pick.tid + 1) % n;
                        pick
                    }
                    _ => {
                        let r = rng.as_mut().expect("seeded");
                        en.steps[r.random_range(0..en.steps.len())]
                    }
                }
            }
        };
        let o = step(model, code, &cfg.state, chosen, limits).map_err(|source| RunError::Step { index, source })?;
        if chosen.tid > 0 {
            if let Some(ev) = history_event(&o) {
                cfg.histories[chosen.tid as usize - 1].push(ev);
            }
        }
        trace.push(TraceEntry { step: chosen, stmt: o.stmt, effect: o.effect });
        schedule.push(chosen);
        cfg.state = o.state;
    }
    Ok(Run { config: cfg, trace, schedule })
}

pub fn thread_name(code: &Code, tid: Tid) -> &str {
    if tid == 0 {
        "main"
    } else {
        &code.threads[tid as usize - 1].name
    }
}

pub fn format_step(code: &Code, s: Step) -> String {
    let t = thread_name(code, s.tid);
    match s.rule {
        Rule::Flush(c) => format!("{t} FLUSH {}", code.cell_name(c)),
        Rule::Join(j) => format!("{t} JOIN {}", thread_name(code, j)),
        r => format!("{t} {}", r.name()),
    }
}

/// Parses one `tid RULE [arg]` schedule line.
pub fn parse_step(code: &Code, line: &str) -> Result<Step, String> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    let tid_of = |name: &str| -> Result<Tid, String> {
        if name == "main" {
            return Ok(0);
        }
        code.thread_by_name(name).map(|i| i as Tid + 1).ok_or_else(|| format!("unknown thread `{name}`"))
    };
    let (t, r, arg) = match parts.as_slice() {
        [t, r] => (*t, *r, None),
        [t, r, a] => (*t, *r, Some(*a)),
        _ => return Err(format!("malformed schedule line `{line}`")),
    };
    let tid = tid_of(t)?;
    let rule = match (r, arg) {
        ("GW", None) => Rule::Gw,
        ("GR", None) => Rule::Gr,
        ("LRW", None) => Rule::Lrw,
        ("ITE-T", None) => Rule::IteT,
        ("ITE-F", None) => Rule::IteF,
        ("WHL-T", None) => Rule::WhlT,
        ("WHL-F", None) => Rule::WhlF,
        ("SKP-SYC", None) => Rule::SkpSyc,
        ("PARCOMP", None) => Rule::ParComp,
        ("END", None) => Rule::End,
        ("FENCE", None) => Rule::Fence,
        ("JOIN", Some(a)) => Rule::Join(tid_of(a)?),
        ("FLUSH", Some(a)) => Rule::Flush(code.cell_by_name(a).ok_or_else(|| format!("unknown cell `{a}`"))?),
        _ => return Err(format!("malformed schedule line `{line}`")),
    };
    Ok(Step { tid, rule })
}

/// Schedule file text: a `model` header followed by one step per line.
pub fn format_schedule(code: &Code, model: Model, steps: &[Step]) -> String {
    let mut out = format!("model {model}\n");
    for s in steps {
        out.push_str(&format_step(code, *s));
        out.push('\n');
    }
    out
}

pub fn parse_schedule(code: &Code, text: &str) -> Result<(Model, Vec<Step>), String> {
    let mut lines = text.lines().map(|l| l.split('#').next().unwrap_or("").trim()).filter(|l| !l.is_empty());
    let header = lines.next().ok_or("empty schedule file")?;
    let model = match header.split_whitespace().collect::<Vec<_>>().as_slice() {
        ["model", m] => m.parse::<Model>()?,
        _ => return Err(format!("schedule must start with `model sc|pso`, found `{header}`")),
    };
    let steps = lines.map(|l| parse_step(code, l)).collect::<Result<Vec<_>, _>>()?;
    Ok((model, steps))
}

/// One human-readable trace line per step.
pub fn format_trace_line(code: &Code, e: &TraceEntry) -> String {
    let t = thread_name(code, e.step.tid);
    let label = e.stmt.map_or("-", |s| code.stmt(s).label.as_str());
    match e.effect {
        Effect::Flush { cell, value, .. } => format!("flush {t} {} {value}", code.cell_name(cell)),
        _ if e.step.rule == Rule::Fence => format!("fence {t}"),
        Effect::Write { cell, value } | Effect::Read { cell, value, .. } => {
            format!("{t} {label} {} {}={value}", e.step.rule.name(), code.cell_name(cell))
        }
        Effect::Local { local, value } => {
            let name = &code.threads[e.step.tid as usize - 1].locals[local as usize];
            format!("{t} {label} {} {name}={value}", e.step.rule.name())
        }
        Effect::Join(j) => format!("{t} {label} JOIN {}", thread_name(code, j)),
        _ => format!("{t} {label} {}", e.step.rule.name()),
    }
}

pub fn format_trace(code: &Code, trace: &[TraceEntry]) -> String {
    trace.iter().map(|e| format_trace_line(code, e) + "\n").collect()
}
