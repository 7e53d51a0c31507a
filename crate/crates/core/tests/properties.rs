use proptest::prelude::*;

use mmx::explore::{explore, sample_runs, ExploreParams};
use mmx::expr::Term;
use mmx::fence::{apply_fences, classify, plan_fences, remap, OrderClass, OrderingConstraint};
use mmx::history::order::memory_order;
use mmx::history::pattern::{match_pattern, parse_pattern};
use mmx::history::{compat_check, compat_check_rec, last_write, merge_all, HEvent, Placeholder, Problem, ReadVal};
use mmx::lang::{parse_program, Program};
use mmx::machine::{Access, MemEvent, Model};
use mmx::value::Value;

// Small random programs over two shared ints and two locals per thread.

fn simple_stmt() -> impl Strategy<Value = String> {
    prop_oneof![
        (0..2usize, 0..2usize).prop_map(|(c, l)| format!("{} := {};", ["x", "y"][c], ["a", "b"][l])),
        (0..2usize, 0..3i64).prop_map(|(c, k)| format!("{} := {k};", ["x", "y"][c])),
        (0..2usize, 0..2usize).prop_map(|(l, c)| format!("{} := {};", ["a", "b"][l], ["x", "y"][c])),
        (0..2usize).prop_map(|l| format!("{0} := {0} + 1;", ["a", "b"][l])),
        Just("skip;".to_string()),
        Just("fence;".to_string()),
    ]
}

fn stmt() -> impl Strategy<Value = String> {
    simple_stmt().prop_recursive(2, 8, 3, |inner| {
        prop_oneof![
            (0..2usize, prop::collection::vec(inner.clone(), 1..3)).prop_map(|(l, body)| format!(
                "while {} < 2 {{ {} }}",
                ["a", "b"][l],
                body.concat()
            )),
            (0..2usize, prop::collection::vec(inner.clone(), 1..3), prop::collection::vec(inner, 0..2)).prop_map(
                |(l, t, e)| {
                    if e.is_empty() {
                        format!("if {} = 1 {{ {} }}", ["a", "b"][l], t.concat())
                    } else {
                        format!("if {} = 1 {{ {} }} else {{ {} }}", ["a", "b"][l], t.concat(), e.concat())
                    }
                }
            ),
        ]
    })
}

fn program(max_stmts: usize) -> impl Strategy<Value = String> {
    let thread = || prop::collection::vec(stmt(), 1..=max_stmts);
    (thread(), thread()).prop_map(|(a, b)| {
        format!(
            "shared x = 0; shared y = 0;\nthread A {{ a := 0; b := 0; {} }}\nthread B {{ a := 0; b := 0; {} }}",
            a.concat(),
            b.concat()
        )
    })
}

fn params(model: Model) -> ExploreParams {
    let mut ps = ExploreParams::new(model);
    ps.unroll = 1;
    ps.spin = 1;
    ps.buffer = 2;
    ps.collect_quiescent = true;
    ps
}

/// Ordered pairs of distinct memory accesses of one thread, earlier first.
/// Pairs on opposite branches of an `if` are included; the planner rejects
/// them.
fn access_pairs(p: &Program) -> Vec<OrderingConstraint> {
    let code = &p.code;
    let mut out = Vec::new();
    for (t, th) in code.threads.iter().enumerate() {
        let acc: Vec<u32> = th.order.iter().copied().filter(|&s| p_is_access(p, s)).collect();
        for (i, &a) in acc.iter().enumerate() {
            for &b in &acc[i + 1..] {
                out.push(OrderingConstraint { thread: t, before: a, after: b, cross_iter: false });
            }
        }
    }
    out
}

fn p_is_access(p: &Program, s: u32) -> bool {
    use mmx::lang::code::LKind;
    matches!(p.code.stmt(s).kind, LKind::Write { .. } | LKind::Read { .. })
}

fn ev(access: Access, cell: u16, v: i64) -> MemEvent {
    MemEvent { access, cell, value: Value::Int(v), stmt: 0 }
}

fn history() -> impl Strategy<Value = Vec<MemEvent>> {
    prop::collection::vec((prop::bool::ANY, 0..2u16, 0..3i64), 0..8)
        .prop_map(|es| es.into_iter().map(|(w, c, v)| ev(if w { Access::W } else { Access::R }, c, v)).collect())
}

/// Patterns over the events produced by `history()`.
fn pattern_text() -> impl Strategy<Value = String> {
    let atom = prop_oneof![
        (prop::bool::ANY, 0..2usize, 0..3i64).prop_map(|(w, c, v)| format!(
            "{}({}, {v})",
            if w { "w" } else { "r" },
            ["x", "y"][c]
        )),
        (prop::bool::ANY, 0..2usize).prop_map(|(w, c)| format!("{}({}, _)", if w { "w" } else { "r" }, ["x", "y"][c])),
        Just("None!".to_string()),
        (0..2usize).prop_map(|c| format!("None?{}", ["x", "y"][c])),
    ];
    atom.prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..4).prop_map(|ps| format!("[{}]", ps.join("; "))),
            inner.clone().prop_map(|p| format!("[{p}]*")),
            (inner.clone(), inner).prop_map(|(a, b)| format!("({a} | {b})")),
        ]
    })
}

fn problem_from(h1: Vec<(bool, u16, i64)>, h2: Vec<(bool, u16, i64)>) -> Problem {
    // Reads become placeholders; a write with value 2 copies the thread's
    // latest placeholder instead, when there is one.
    let mut p = Problem {
        cells: vec!["x".into(), "y".into()],
        inits: vec![Value::Int(0), Value::Int(0)],
        ..Problem::default()
    };
    for (name, h) in [("A", h1), ("B", h2)] {
        let mut evs = Vec::new();
        let mut last = None;
        for (w, cell, v) in h {
            if w {
                let value = match (v, last) {
                    (2, Some(ph)) => Term::Atom(ph),
                    _ => Term::Const(Value::Int(v.min(1))),
                };
                evs.push(HEvent::Write { cell, value });
            } else {
                let id = p.placeholders.len() as u32;
                p.placeholders.push(Placeholder { name: format!("p{id}"), cell, query: false });
                evs.push(HEvent::Read { cell, val: ReadVal::Ph(id) });
                last = Some(id);
            }
        }
        p.threads.push((name.into(), evs));
    }
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn print_then_parse_is_identity(src in program(4)) {
        let p = parse_program(&src).unwrap();
        let again = parse_program(&p.to_string()).unwrap();
        prop_assert_eq!(&p.shared, &again.shared);
        prop_assert_eq!(&p.threads, &again.threads);
        prop_assert_eq!(p.to_string(), again.to_string());
    }

    #[test]
    fn sc_quiescent_states_are_pso_quiescent_states(src in program(3)) {
        let p = parse_program(&src).unwrap();
        let sc = explore(&p, &params(Model::Sc)).unwrap();
        let pso = explore(&p, &params(Model::Pso)).unwrap();
        prop_assert!(sc.census.complete && pso.census.complete);
        prop_assert!(sc.quiescent.is_subset(&pso.quiescent));
    }

    #[test]
    fn worker_count_does_not_change_results(src in program(3)) {
        let p = parse_program(&src).unwrap();
        let mut one = params(Model::Pso);
        one.workers = Some(1);
        one.count_schedules = true;
        let mut four = one.clone();
        four.workers = Some(4);
        prop_assert_eq!(explore(&p, &one).unwrap(), explore(&p, &four).unwrap());
    }

    #[test]
    fn preserved_orderings_hold_without_fences(src in program(3), seed in 0..1000u64) {
        let p = parse_program(&src).unwrap();
        let kept: Vec<OrderingConstraint> = access_pairs(&p)
            .into_iter()
            .filter(|c| matches!(classify(&p, c, false), Ok(OrderClass::Preserved(_))))
            .collect();
        for r in sample_runs(&p, &params(Model::Pso), 20, seed).unwrap() {
            prop_assert_eq!(mmx::history::orderings_hold(&memory_order(Model::Pso, &r.trace), &kept), Ok(()));
        }
    }

    #[test]
    fn planned_fences_enforce_every_ordering(src in program(3), seed in 0..1000u64) {
        let p = parse_program(&src).unwrap();
        let cs: Vec<OrderingConstraint> = access_pairs(&p).into_iter().filter(|c| classify(&p, c, true).is_ok()).collect();
        let plan = plan_fences(&p, &cs, true).unwrap();
        let fenced = apply_fences(&p, &plan).unwrap();
        let cs2 = remap(&p, &fenced, &cs).unwrap();
        for r in sample_runs(&fenced, &params(Model::Pso), 20, seed).unwrap() {
            prop_assert_eq!(mmx::history::orderings_hold(&memory_order(Model::Pso, &r.trace), &cs2), Ok(()));
        }
    }

    #[test]
    fn merges_preserve_thread_order(lens in prop::collection::vec(0..4usize, 1..4)) {
        let hs: Vec<Vec<(usize, usize)>> = lens.iter().enumerate().map(|(t, &n)| (0..n).map(|i| (t, i)).collect()).collect();
        for m in merge_all(&hs, 16).unwrap() {
            prop_assert_eq!(m.len(), lens.iter().sum::<usize>());
            for (t, &n) in lens.iter().enumerate() {
                let mine: Vec<usize> = m.iter().filter(|e| e.0 == t).map(|e| e.1).collect();
                prop_assert_eq!(mine, (0..n).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn last_write_laws(h in history(), cell in 0..2u16, v in 0..3i64) {
        let init = Value::Int(9);
        prop_assert_eq!(last_write(cell, init, &[]), init);
        let mut w = h.clone();
        w.push(ev(Access::W, cell, v));
        prop_assert_eq!(last_write(cell, init, &w), Value::Int(v));
        let base = last_write(cell, init, &h);
        let mut r = h.clone();
        r.push(ev(Access::R, cell, v));
        r.push(ev(Access::W, 1 - cell, v));
        prop_assert_eq!(last_write(cell, init, &r), base);
        let split = h.len() / 2;
        let (front, back) = h.split_at(split);
        let tail = last_write(cell, Value::Int(-1), back);
        prop_assert_eq!(base, if tail == Value::Int(-1) { last_write(cell, init, front) } else { tail });
    }

    #[test]
    fn plus_implies_star(p in pattern_text(), h in history()) {
        let cells = vec!["x".to_string(), "y".to_string()];
        let plus = parse_pattern(&format!("[{p}]+")).unwrap();
        let star = parse_pattern(&format!("[{p}]*")).unwrap();
        if match_pattern(&plus, &cells, &h) {
            prop_assert!(match_pattern(&star, &cells, &h));
        }
        let once = parse_pattern(&p).unwrap();
        if match_pattern(&once, &cells, &h) {
            prop_assert!(match_pattern(&plus, &cells, &h));
        }
    }

    #[test]
    fn compat_engines_agree_with_placeholders(
        h1 in prop::collection::vec((prop::bool::ANY, 0..2u16, 0..3i64), 0..5),
        h2 in prop::collection::vec((prop::bool::ANY, 0..2u16, 0..3i64), 0..5),
        fin in prop::option::of(0..2i64),
    ) {
        let mut p = problem_from(h1, h2);
        if let Some(v) = fin {
            p.constraints.push(Term::Binary(
                mmx::value::BinOp::Eq,
                Box::new(Term::Atom(mmx::history::CAtom::Final(0))),
                Box::new(Term::Const(Value::Int(v))),
            ));
        }
        let mut lit = compat_check(&p, 16).unwrap().witnesses;
        let mut rec = compat_check_rec(&p, None).unwrap().witnesses;
        lit.sort();
        rec.sort();
        prop_assert_eq!(lit, rec);
    }
}
