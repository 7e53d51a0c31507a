//! Partial store order engine: one FIFO store buffer per (thread, cell),
//! nondeterministic flushes, and fences that wait for the buffers to drain.

use crate::lang::code::LExpr;
use crate::lang::Program;
use crate::machine::{self, Config, Enabled, Limits, Model, Policy, Run, RunError, State, Step, StepError};
use crate::value::{EvalError, Value, DEFAULT_INT_BOUND};

pub fn pso_init(p: &Program) -> Config {
    Config::initial(Model::Pso, &p.code)
}

/// Evaluates `e` for spawned thread `idx` with buffer forwarding.
pub fn pso_eval(p: &Program, s: &State, idx: usize, e: &LExpr) -> Result<Value, EvalError> {
    machine::eval_in(&p.code, &s.g, &s.threads[idx], idx, e, DEFAULT_INT_BOUND).map(|(v, _)| v)
}

/// Enabled steps. `buffer_bound` caps the entries per (thread, cell); a
/// write that would exceed it is withheld and `saturated` is set.
pub fn pso_enabled(p: &Program, c: &Config, buffer_bound: Option<u16>) -> Result<Enabled, StepError> {
    let limits = Limits { buffer: buffer_bound, ..Limits::default() };
    machine::enabled(Model::Pso, &p.code, &c.state, &limits)
}

pub fn pso_step(p: &Program, c: &Config, s: Step) -> Result<Config, StepError> {
    let o = machine::step(Model::Pso, &p.code, &c.state, s, &Limits::default())?;
    Ok(crate::sc::apply(c, s, o))
}

pub fn pso_run(p: &Program, policy: Policy, max_steps: usize) -> Result<Run, RunError> {
    machine::run(Model::Pso, p, policy, &Limits::default(), max_steps)
}
