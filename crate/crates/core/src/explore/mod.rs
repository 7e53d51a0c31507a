//! Bounded exhaustive exploration of a program's configurations.
//!
//! The search is breadth-first and level-synchronous: every configuration of
//! one depth is expanded (possibly in parallel) before the next depth is
//! deduplicated, sequentially and in frontier order. Successors are generated
//! in (tid, rule) order, so the first violation found is the shortest one and
//! among those the lexicographically least, whatever the worker count.

pub mod props;
pub mod stutter;

use std::collections::{BTreeSet, HashSet};

use thiserror::Error;

use crate::lang::Program;
use crate::machine::{self, Limits, Model, Policy, Run, RunError, State, Step, StepError, TraceEntry};
use crate::par::Pool;
use crate::value::Value;

pub use props::{parse_properties, Monitors, PropKind, PropertySpec, Region};
pub use stutter::check_stutter;

pub const DEFAULT_MAX_STATES: usize = 20_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExploreParams {
    pub model: Model,
    /// WHL-T budget for loops not nested in another loop.
    pub unroll: u16,
    /// WHL-T budget for nested (busy-wait) loops.
    pub spin: u16,
    /// Entries per (thread, cell) store buffer.
    pub buffer: u16,
    pub max_states: usize,
    pub props: Vec<PropertySpec>,
    /// `None` uses the global pool; `Some(1)` runs sequentially.
    pub workers: Option<usize>,
    /// Record `(G, L)` at every leaf.
    pub collect_quiescent: bool,
    /// Count maximal schedules (keeps the edge list in memory).
    pub count_schedules: bool,
}

impl ExploreParams {
    pub fn new(model: Model) -> ExploreParams {
        ExploreParams {
            model,
            unroll: 2,
            spin: 2,
            buffer: 2,
            max_states: DEFAULT_MAX_STATES,
            props: Vec::new(),
            workers: None,
            collect_quiescent: false,
            count_schedules: false,
        }
    }

    pub fn limits(&self) -> Limits {
        Limits { unroll: Some(self.unroll), spin: Some(self.spin), buffer: Some(self.buffer), int_bound: None }
    }

    pub fn validate(&self) -> Result<(), ExploreError> {
        if self.unroll == 0 || self.spin == 0 || self.buffer == 0 {
            return Err(ExploreError::Params("bounds must be at least 1".into()));
        }
        if self.max_states < 1000 {
            return Err(ExploreError::Params("the state budget must be at least 1000".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ExploreError {
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("{0}")]
    Step(#[from] StepError),
    #[error("{0}")]
    Property(String),
    #[error("counterexample replay failed: {0}")]
    Replay(#[from] RunError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub schedule: Vec<Step>,
    pub trace: Vec<TraceEntry>,
    pub state: State,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Holds,
    Violated(Box<Counterexample>),
    /// The state budget ran out before the property was decided.
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub property: String,
    pub outcome: Outcome,
}

impl Verdict {
    pub fn holds(&self) -> bool {
        self.outcome == Outcome::Holds
    }

    pub fn is_violated(&self) -> bool {
        matches!(self.outcome, Outcome::Violated(_))
    }

    pub fn counterexample(&self) -> Option<&Counterexample> {
        match &self.outcome {
            Outcome::Violated(c) => Some(c),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Census {
    /// Distinct configurations visited.
    pub states: usize,
    pub transitions: usize,
    /// Configurations without enabled steps.
    pub leaves: usize,
    /// Leaves where every thread has terminated.
    pub finals: usize,
    pub max_depth: usize,
    /// Some loop wanted to iterate past its budget.
    pub bound_hit: bool,
    /// Some write was held back by a full store buffer.
    pub buffer_saturated: bool,
    /// Every reachable configuration was visited.
    pub complete: bool,
    pub budget_exceeded: bool,
    pub schedules: Option<u128>,
}

/// Shared memory and every thread's locals, as seen at a leaf.
pub type Snapshot = (Vec<Value>, Vec<Vec<Option<Value>>>);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Exploration {
    pub verdicts: Vec<Verdict>,
    pub census: Census,
    pub quiescent: BTreeSet<Snapshot>,
}

impl Exploration {
    pub fn all_hold(&self) -> bool {
        self.verdicts.iter().all(Verdict::holds)
    }

    pub fn any_violated(&self) -> bool {
        self.verdicts.iter().any(Verdict::is_violated)
    }
}

fn snapshot(s: &State) -> Snapshot {
    (s.g.clone(), s.threads.iter().map(|t| t.locals.to_vec()).collect())
}

struct Item {
    node: u32,
    state: State,
    mons: Monitors,
}

struct Succ {
    step: Step,
    state: State,
    mons: Monitors,
    fp: u128,
    violated: Vec<usize>,
}

struct Expansion {
    succs: Vec<Succ>,
    bound_hit: bool,
    saturated: bool,
}

fn fingerprint(s: &State, m: &Monitors) -> u128 {
    machine::fingerprint_of(&(s, m))
}

fn expand(p: &Program, params: &ExploreParams, limits: &Limits, it: &Item) -> Result<Expansion, ExploreError> {
    let code = &p.code;
    let en = machine::enabled(params.model, code, &it.state, limits)?;
    let mut succs = Vec::with_capacity(en.steps.len());
    for &s in &en.steps {
        let o = machine::step(params.model, code, &it.state, s, limits)?;
        let mut mons = it.mons.clone();
        props::observe(&params.props, code, &mut mons, s, o.stmt, &o.effect);
        let violated = props::violations(code, &params.props, &o.state, &mons).map_err(ExploreError::Property)?;
        let fp = fingerprint(&o.state, &mons);
        succs.push(Succ { step: s, state: o.state, mons, fp, violated });
    }
    Ok(Expansion { succs, bound_hit: en.bound_hit, saturated: en.saturated })
}

/// Explores every configuration reachable under the bounds and evaluates
/// the properties on each.
pub fn explore(p: &Program, params: &ExploreParams) -> Result<Exploration, ExploreError> {
    params.validate()?;
    let pool = Pool::new(params.workers).map_err(ExploreError::Params)?;

    let code = &p.code;
    let limits = params.limits();
    let n_props = params.props.len();
    let mut found: Vec<Option<u32>> = vec![None; n_props];
    let mut census = Census::default();
    let mut quiescent = BTreeSet::new();

    let init = State::initial(code);
    let mons = props::initial_monitors(&params.props);
    for i in props::violations(code, &params.props, &init, &mons).map_err(ExploreError::Property)? {
        found[i] = Some(0);
    }
    let mut nodes: Vec<(u32, Step)> = vec![(u32::MAX, Step::new(0, machine::Rule::ParComp))];
    let mut edges: Vec<Vec<u32>> = Vec::new();
    let mut visited: HashSet<u128> = HashSet::new();
    let mut ids: Option<std::collections::HashMap<u128, u32>> = params.count_schedules.then(Default::default);
    let fp0 = fingerprint(&init, &mons);
    match &mut ids {
        Some(ids) => {
            ids.insert(fp0, 0);
        }
        None => {
            visited.insert(fp0);
        }
    }
    let mut frontier = vec![Item { node: 0, state: init, mons }];
    let mut depth = 0usize;
    let mut stopped_early = false;

    'levels: while !frontier.is_empty() {
        if found.iter().all(Option::is_some) && n_props > 0 {
            stopped_early = true;
            break;
        }
        let expansions = pool.map(&frontier, |it| expand(p, params, &limits, it));
        let mut next = Vec::new();
        for (it, ex) in frontier.iter().zip(expansions) {
            let ex = ex?;
            census.bound_hit |= ex.bound_hit;
            census.buffer_saturated |= ex.saturated;
            census.transitions += ex.succs.len();
            if ex.succs.is_empty() {
                census.leaves += 1;
                if it.state.is_final() {
                    census.finals += 1;
                }
                if params.collect_quiescent {
                    quiescent.insert(snapshot(&it.state));
                }
            }
            if params.count_schedules {
                edges.resize(nodes.len(), Vec::new());
            }
            for s in ex.succs {
                let known = match &mut ids {
                    Some(ids) => match ids.get(&s.fp) {
                        Some(&to) => {
                            edges[it.node as usize].push(to);
                            true
                        }
                        None => {
                            ids.insert(s.fp, nodes.len() as u32);
                            false
                        }
                    },
                    None => !visited.insert(s.fp),
                };
                if known {
                    continue;
                }
                let id = nodes.len() as u32;
                nodes.push((it.node, s.step));
                if params.count_schedules {
                    edges[it.node as usize].push(id);
                }
                for v in s.violated {
                    found[v].get_or_insert(id);
                }
                if nodes.len() > params.max_states {
                    census.budget_exceeded = true;
                    break 'levels;
                }
                next.push(Item { node: id, state: s.state, mons: s.mons });
            }
        }
        frontier = next;
        if !frontier.is_empty() {
            depth += 1;
        }
    }
    census.states = nodes.len();
    census.max_depth = depth;
    census.complete = !census.budget_exceeded && !stopped_early;
    if params.count_schedules && census.complete {
        census.schedules = Some(count_paths(&nodes, &edges));
    }

    let mut verdicts = Vec::with_capacity(n_props);
    for (i, prop) in params.props.iter().enumerate() {
        let outcome = match found[i] {
            Some(node) => {
                let schedule = path_to(&nodes, node);
                let run = machine::run(params.model, p, Policy::Schedule(schedule.clone()), &limits, usize::MAX)?;
                Outcome::Violated(Box::new(Counterexample { schedule, trace: run.trace, state: run.config.state }))
            }
            None if census.budget_exceeded => Outcome::Inconclusive,
            None => Outcome::Holds,
        };
        verdicts.push(Verdict { property: prop.name.clone(), outcome });
    }
    Ok(Exploration { verdicts, census, quiescent })
}

fn path_to(nodes: &[(u32, Step)], mut node: u32) -> Vec<Step> {
    let mut out = Vec::new();
    while node != 0 {
        let (parent, step) = nodes[node as usize];
        out.push(step);
        node = parent;
    }
    out.reverse();
    out
}

/// Number of maximal paths from the root. The transition graph is acyclic:
/// every step advances some thread's control point or iteration counter, or
/// drains a buffer entry.
fn count_paths(nodes: &[(u32, Step)], edges: &[Vec<u32>]) -> u128 {
    let n = nodes.len();
    let mut adj: Vec<Vec<u32>> = edges.to_vec();
    adj.resize(n, Vec::new());
    // Iterative post-order DFS.
    let mut memo: Vec<Option<u128>> = vec![None; n];
    let mut stack: Vec<(u32, usize)> = vec![(0, 0)];
    while let Some(&mut (v, ref mut k)) = stack.last_mut() {
        let succ = &adj[v as usize];
        if *k < succ.len() {
            let w = succ[*k];
            *k += 1;
            if memo[w as usize].is_none() {
                stack.push((w, 0));
            }
        } else {
            let total = if succ.is_empty() {
                1
            } else {
                succ.iter().map(|w| memo[*w as usize].unwrap_or(0)).fold(0u128, u128::saturating_add)
            };
            memo[v as usize] = Some(total);
            stack.pop();
        }
    }
    memo[0].unwrap_or(0)
}

/// Replays `schedule` and re-evaluates the properties on the final
/// configuration. Returns the run and the indices of violated properties.
pub fn replay(p: &Program, params: &ExploreParams, schedule: &[Step]) -> Result<(Run, Vec<usize>), ExploreError> {
    let limits = params.limits();
    let run = machine::run(params.model, p, Policy::Schedule(schedule.to_vec()), &limits, usize::MAX)?;
    let mut mons = props::initial_monitors(&params.props);
    for e in &run.trace {
        props::observe(&params.props, &p.code, &mut mons, e.step, e.stmt, &e.effect);
    }
    let v = props::violations(&p.code, &params.props, &run.config.state, &mons).map_err(ExploreError::Property)?;
    Ok((run, v))
}

/// Replays a schedule file (`model` header plus steps), rejecting a model
/// that differs from `params.model`.
pub fn replay_file(p: &Program, params: &ExploreParams, text: &str) -> Result<(Run, Vec<usize>), ExploreError> {
    let (model, steps) = machine::parse_schedule(&p.code, text).map_err(ExploreError::Params)?;
    if model != params.model {
        return Err(ExploreError::Params(format!(
            "schedule was recorded under {model} but replay was asked for {}",
            params.model
        )));
    }
    replay(p, params, &steps)
}

/// `n` random maximal runs under the exploration bounds, seeded
/// deterministically from `seed`.
pub fn sample_runs(p: &Program, params: &ExploreParams, n: usize, seed: u64) -> Result<Vec<Run>, ExploreError> {
    let limits = params.limits();
    (0..n as u64)
        .map(|i| {
            machine::run(
                params.model,
                p,
                Policy::Random(seed.wrapping_mul(0x9E37_79B9).wrapping_add(i)),
                &limits,
                1_000_000,
            )
            .map_err(ExploreError::from)
        })
        .collect()
}

/// State budget from `MMX_MAX_STATES`, if set and valid.
pub fn max_states_from_env() -> Option<usize> {
    std::env::var("MMX_MAX_STATES").ok()?.trim().parse().ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::lang::parse_program;
    use crate::machine::format_trace;

    fn params(p: &Program, model: Model, props: &str) -> ExploreParams {
        let mut ps = ExploreParams::new(model);
        ps.props = parse_properties(p, props).unwrap();
        ps
    }

    #[test]
    fn peterson_sc_holds() {
        let p = parse_program(corpus::PETERSON).unwrap();
        let mut ps = params(&p, Model::Sc, corpus::PETERSON_PROPS);
        ps.unroll = 1;
        let ex = explore(&p, &ps).unwrap();
        assert!(ex.all_hold(), "{:?}", ex.verdicts);
        assert!(ex.census.complete);
    }

    #[test]
    fn peterson_pso_violates() {
        let p = parse_program(corpus::PETERSON).unwrap();
        let mut ps = params(&p, Model::Pso, corpus::PETERSON_PROPS);
        ps.buffer = 1;
        let ex = explore(&p, &ps).unwrap();
        let cx = ex.verdicts[0].counterexample().expect("violation");
        let trace = format_trace(&p.code, &cx.trace);
        assert!(trace.contains("P1 C1 GR flag2=false"), "{trace}");
        let (_, v) = replay(&p, &ps, &cx.schedule).unwrap();
        assert_eq!(v, vec![0]);
    }

    #[test]
    fn single_thread_has_one_schedule() {
        let p = parse_program("shared x = 0; thread A { x := 1; a := x; x := a + 1 }").unwrap();
        let mut ps = ExploreParams::new(Model::Sc);
        ps.count_schedules = true;
        let ex = explore(&p, &ps).unwrap();
        assert_eq!(ex.census.schedules, Some(1));
        // PARCOMP, three statements, END, JOIN, END: seven steps, eight states.
        assert_eq!(ex.census.states, 8);
        assert_eq!(ex.census.leaves, 1);
        assert_eq!(ex.census.finals, 1);
    }

    #[test]
    fn schedule_count_for_two_independent_writes() {
        let p = parse_program("shared x = 0; shared y = 0; thread A { x := 1 } thread B { y := 1 }").unwrap();
        let mut ps = ExploreParams::new(Model::Sc);
        ps.count_schedules = true;
        let ex = explore(&p, &ps).unwrap();
        // A's GW, END and the root's JOIN A form one chain, B's GW, END another;
        // JOIN B and the root END come last: C(5,2) = 10.
        assert_eq!(ex.census.schedules, Some(10));
    }

    #[test]
    fn check_stutter_rejects_never_written_values() {
        assert_eq!(check_stutter(&[Value::Int(0), Value::Int(1)], &[Value::Int(2)]), Err(0));
    }

    #[test]
    fn replay_rejects_wrong_model() {
        let p = parse_program(corpus::SB).unwrap();
        let ps = ExploreParams::new(Model::Sc);
        let err = replay_file(&p, &ps, "model pso\nmain PARCOMP\n").unwrap_err();
        assert!(err.to_string().contains("recorded under pso"), "{err}");
        let (run, v) = replay_file(&p, &ps, "model sc\n").unwrap();
        assert!(run.trace.is_empty() && v.is_empty());
        assert_eq!(run.config.state, State::initial(&p.code));
    }
}
