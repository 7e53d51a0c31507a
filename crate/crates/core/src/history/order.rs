//! Ordering requirements over the memory order of an execution.

use serde::Serialize;

use crate::lang::code::{CellId, StmtId};
use crate::machine::{Access, Effect, Model, TraceEntry};

use super::MergedHistory;

/// `before` must take effect in memory ahead of `after`, both in thread
/// `thread`. Instances pair up by occurrence: the k-th execution of a
/// statement belongs to iteration k. Within one iteration the k-th `before`
/// precedes the k-th `after`; across iterations every `before` of an earlier
/// iteration precedes every later `after`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct OrderReq {
    pub thread: usize,
    pub before: StmtId,
    pub after: StmtId,
    pub cross_iter: bool,
}

/// A memory event at its place in the memory order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Located {
    pub thread: usize,
    pub stmt: StmtId,
    pub cell: CellId,
    pub access: Access,
    /// A read served from the thread's own store buffer.
    pub forwarded: bool,
}

/// Memory order of a trace: reads when they happen, writes when they reach
/// memory (at issue under SC, at flush under PSO).
pub fn memory_order(model: Model, trace: &[TraceEntry]) -> Vec<Located> {
    let mut out = Vec::new();
    for e in trace {
        let thread = match e.step.tid.checked_sub(1) {
            Some(t) => t as usize,
            None => continue,
        };
        match e.effect {
            Effect::Read { cell, forwarded, .. } => out.push(Located {
                thread,
                stmt: e.stmt.expect("reads come from statements"),
                cell,
                access: Access::R,
                forwarded,
            }),
            Effect::Write { cell, .. } if model == Model::Sc => out.push(Located {
                thread,
                stmt: e.stmt.expect("writes come from statements"),
                cell,
                access: Access::W,
                forwarded: false,
            }),
            Effect::Flush { cell, stmt, .. } => {
                out.push(Located { thread, stmt, cell, access: Access::W, forwarded: false })
            }
            _ => {}
        }
    }
    out
}

/// The interleaving of the per-thread histories that a trace realised, as
/// back-pointers into those histories. Histories record events at issue, so
/// under PSO this is the issue order rather than the memory order.
pub fn issue_merge(trace: &[TraceEntry], threads: usize) -> MergedHistory {
    let mut next = vec![0u16; threads];
    let mut out = Vec::new();
    for e in trace {
        if let (Some(t), Effect::Read { .. } | Effect::Write { .. }) = (e.step.tid.checked_sub(1), e.effect) {
            out.push((t, next[t as usize]));
            next[t as usize] += 1;
        }
    }
    out
}

/// Checks every requirement against `events`. On failure returns the index
/// of the first requirement that is violated.
///
/// A forwarded read of the cell written by `before` counts as ordered after
/// it: the thread can only have read its own buffered value.
pub fn orderings_hold(events: &[Located], reqs: &[OrderReq]) -> Result<(), usize> {
    for (ri, r) in reqs.iter().enumerate() {
        let pos = |stmt: StmtId| -> Vec<(usize, &Located)> {
            events.iter().enumerate().filter(|(_, e)| e.thread == r.thread && e.stmt == stmt).collect()
        };
        let before = pos(r.before);
        let after = pos(r.after);
        let ok = |a: &(usize, &Located), b: &(usize, &Located)| {
            a.0 < b.0 || (b.1.forwarded && b.1.access == Access::R && a.1.access == Access::W && a.1.cell == b.1.cell)
        };
        let holds = if r.cross_iter {
            after.iter().enumerate().all(|(m, b)| before.iter().take(m).all(|a| ok(a, b)))
        } else {
            before.iter().zip(&after).all(|(a, b)| ok(a, b))
        };
        if !holds {
            return Err(ri);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(stmt: StmtId, access: Access) -> Located {
        Located { thread: 0, stmt, cell: stmt as CellId, access, forwarded: false }
    }

    fn req(before: StmtId, after: StmtId, cross_iter: bool) -> OrderReq {
        OrderReq { thread: 0, before, after, cross_iter }
    }

    #[test]
    fn within_iteration() {
        let evs = [at(1, Access::W), at(2, Access::R), at(2, Access::R), at(1, Access::W)];
        assert_eq!(orderings_hold(&evs, &[req(1, 2, false)]), Err(0));
        let evs = [at(1, Access::W), at(2, Access::R), at(1, Access::W), at(2, Access::R)];
        assert_eq!(orderings_hold(&evs, &[req(1, 2, false)]), Ok(()));
        assert_eq!(orderings_hold(&evs, &[req(2, 1, false)]), Err(0));
    }

    #[test]
    fn across_iterations() {
        // after(1) before(1) after(2) before(2): fine across iterations.
        let evs = [at(2, Access::R), at(1, Access::W), at(2, Access::R), at(1, Access::W)];
        assert_eq!(orderings_hold(&evs, &[req(1, 2, true)]), Ok(()));
        let evs = [at(2, Access::R), at(2, Access::R), at(1, Access::W)];
        assert_eq!(orderings_hold(&evs, &[req(1, 2, true)]), Err(0));
    }

    #[test]
    fn forwarded_reads_count_as_ordered() {
        let mut read = at(1, Access::R);
        read.stmt = 2;
        read.forwarded = true;
        assert_eq!(orderings_hold(&[read, at(1, Access::W)], &[req(1, 2, false)]), Ok(()));
        read.forwarded = false;
        assert_eq!(orderings_hold(&[read, at(1, Access::W)], &[req(1, 2, false)]), Err(0));
    }

    #[test]
    fn other_threads_are_ignored() {
        let mut e = at(2, Access::R);
        e.thread = 1;
        assert_eq!(orderings_hold(&[e, at(1, Access::W)], &[req(1, 2, false)]), Ok(()));
    }
}
