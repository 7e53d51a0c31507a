//! Report rendering. Every report exists as human text, as `key=value`
//! lines with a fixed field order, and as JSON.

use std::fmt::Write;

use clap::ValueEnum;
use mmx::explore::{Exploration, ExploreParams, Outcome};
use mmx::fence::{describe, FencePlacement, OrderClass, OrderingConstraint, Validation};
use mmx::history::{describe_witness, format_merge, CompatResult, Problem};
use mmx::lang::Program;
use mmx::machine::{format_step, format_trace_line, Run};
use serde_json::{json, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Kv,
    Json,
}

fn kv(out: &mut String, key: &str, v: impl std::fmt::Display) {
    let _ = writeln!(out, "{key}={v}");
}

fn json_text(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values always serialize") + "\n"
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn verdict_name(o: &Outcome) -> &'static str {
    match o {
        Outcome::Holds => "holds",
        Outcome::Violated(_) => "violated",
        Outcome::Inconclusive => "inconclusive",
    }
}

pub fn explore(fmt: Format, p: &Program, params: &ExploreParams, ex: &Exploration) -> String {
    let code = &p.code;
    let c = &ex.census;
    let mut out = String::new();
    match fmt {
        Format::Text => {
            let _ = writeln!(
                out,
                "model {}, unroll {}, spin {}, buffer {}",
                params.model, params.unroll, params.spin, params.buffer
            );
            for v in &ex.verdicts {
                let _ = writeln!(out, "property `{}`: {}", v.property, verdict_name(&v.outcome).to_uppercase());
                if let Some(cx) = v.counterexample() {
                    let _ = writeln!(out, "counterexample ({} steps):", cx.schedule.len());
                    for e in &cx.trace {
                        let _ = writeln!(out, "  {}", format_trace_line(code, e));
                    }
                }
            }
            let _ = writeln!(
                out,
                "states {}, transitions {}, leaves {}, finals {}, depth {}",
                c.states, c.transitions, c.leaves, c.finals, c.max_depth
            );
            let _ = writeln!(
                out,
                "bound hit: {}, buffer saturated: {}, complete: {}",
                yes(c.bound_hit),
                yes(c.buffer_saturated),
                yes(c.complete)
            );
            if c.budget_exceeded {
                let _ = writeln!(out, "state budget of {} exceeded", params.max_states);
            }
            if let Some(n) = c.schedules {
                let _ = writeln!(out, "schedules {n}");
            }
        }
        Format::Kv => {
            kv(&mut out, "model", params.model);
            kv(&mut out, "unroll", params.unroll);
            kv(&mut out, "spin", params.spin);
            kv(&mut out, "buffer", params.buffer);
            for (i, v) in ex.verdicts.iter().enumerate() {
                kv(&mut out, &format!("property.{i}.name"), &v.property);
                kv(&mut out, &format!("property.{i}.verdict"), verdict_name(&v.outcome));
                if let Some(cx) = v.counterexample() {
                    let steps: Vec<String> = cx.schedule.iter().map(|s| format_step(code, *s)).collect();
                    kv(&mut out, &format!("property.{i}.steps"), steps.len());
                    kv(&mut out, &format!("property.{i}.schedule"), steps.join(","));
                }
            }
            kv(&mut out, "states", c.states);
            kv(&mut out, "transitions", c.transitions);
            kv(&mut out, "leaves", c.leaves);
            kv(&mut out, "finals", c.finals);
            kv(&mut out, "max_depth", c.max_depth);
            kv(&mut out, "bound_hit", c.bound_hit);
            kv(&mut out, "buffer_saturated", c.buffer_saturated);
            kv(&mut out, "complete", c.complete);
            kv(&mut out, "budget_exceeded", c.budget_exceeded);
            if let Some(n) = c.schedules {
                kv(&mut out, "schedules", n);
            }
        }
        Format::Json => {
            let props: Vec<Value> = ex
                .verdicts
                .iter()
                .map(|v| {
                    let mut o = json!({ "name": v.property, "verdict": verdict_name(&v.outcome) });
                    if let Some(cx) = v.counterexample() {
                        o["schedule"] = cx.schedule.iter().map(|s| format_step(code, *s)).collect();
                        o["trace"] = cx.trace.iter().map(|e| format_trace_line(code, e)).collect();
                    }
                    o
                })
                .collect();
            let mut census = json!({
                "states": c.states,
                "transitions": c.transitions,
                "leaves": c.leaves,
                "finals": c.finals,
                "max_depth": c.max_depth,
                "bound_hit": c.bound_hit,
                "buffer_saturated": c.buffer_saturated,
                "complete": c.complete,
                "budget_exceeded": c.budget_exceeded,
            });
            if let Some(n) = c.schedules {
                census["schedules"] = json!(n.to_string());
            }
            let v = json!({
                "model": params.model,
                "unroll": params.unroll,
                "spin": params.spin,
                "buffer": params.buffer,
                "properties": props,
                "census": census,
            });
            out = json_text(&v);
        }
    }
    out
}

pub fn run(fmt: Format, p: &Program, r: &Run, violated: Option<&[String]>) -> String {
    let code = &p.code;
    let lines: Vec<String> = r.trace.iter().map(|e| format_trace_line(code, e)).collect();
    let memory: Vec<String> = code.cell_names.iter().zip(&r.config.state.g).map(|(n, v)| format!("{n}={v}")).collect();
    let mut out = String::new();
    match fmt {
        Format::Text => {
            for l in &lines {
                let _ = writeln!(out, "{l}");
            }
            let _ = writeln!(out, "steps {}, final: {}", lines.len(), yes(r.config.state.is_final()));
            let _ = writeln!(out, "memory {}", memory.join(" "));
            if let Some(v) = violated {
                for name in v {
                    let _ = writeln!(out, "violated `{name}`");
                }
            }
        }
        Format::Kv => {
            kv(&mut out, "steps", lines.len());
            kv(&mut out, "final", r.config.state.is_final());
            kv(&mut out, "memory", memory.join(" "));
            kv(&mut out, "trace", lines.join(","));
            if let Some(v) = violated {
                kv(&mut out, "violated", v.join(","));
            }
        }
        Format::Json => {
            let mut o = json!({
                "steps": lines.len(),
                "final": r.config.state.is_final(),
                "memory": memory,
                "trace": lines,
            });
            if let Some(v) = violated {
                o["violated"] = json!(v);
            }
            out = json_text(&o);
        }
    }
    out
}

pub struct PlanView<'a> {
    pub program: &'a Program,
    pub constraints: &'a [OrderingConstraint],
    pub classes: &'a [OrderClass],
    pub plan: &'a [FencePlacement],
    pub fenced: &'a Program,
    pub validation: Option<&'a Validation>,
}

fn constraint_text(p: &Program, c: &OrderingConstraint) -> String {
    let code = &p.code;
    format!(
        "{} {} < {}{}",
        code.threads[c.thread].name,
        code.stmt(c.before).label,
        code.stmt(c.after).label,
        if c.cross_iter { " cross-iter" } else { "" }
    )
}

fn class_text(c: &OrderClass) -> String {
    match c {
        OrderClass::Preserved(r) => format!("preserved ({r})"),
        OrderClass::NeedsFence { gaps, .. } => {
            let g: Vec<String> = gaps.iter().map(usize::to_string).collect();
            format!("needs fence (gaps {})", g.join(" "))
        }
    }
}

pub fn plan(fmt: Format, v: &PlanView<'_>) -> String {
    let p = v.program;
    let fences: Vec<String> = v.plan.iter().map(|f| describe(p, f)).collect();
    let orders: Vec<(String, String)> =
        v.constraints.iter().zip(v.classes).map(|(c, k)| (constraint_text(p, c), class_text(k))).collect();
    let mut out = String::new();
    match fmt {
        Format::Text => {
            for (c, k) in &orders {
                let _ = writeln!(out, "order {c}: {k}");
            }
            for f in &fences {
                let _ = writeln!(out, "{f}");
            }
            let _ = writeln!(out, "{} fences", fences.len());
            if let Some(val) = v.validation {
                for verdict in &val.exploration.verdicts {
                    let _ = writeln!(
                        out,
                        "pso property `{}`: {}",
                        verdict.property,
                        verdict_name(&verdict.outcome).to_uppercase()
                    );
                }
                let _ = writeln!(out, "orderings broken in {} of {} sampled runs", val.ordering_failures, val.runs);
            }
            let _ = writeln!(out, "\n{}", v.fenced);
        }
        Format::Kv => {
            for (i, (c, k)) in orders.iter().enumerate() {
                kv(&mut out, &format!("order.{i}"), c);
                kv(&mut out, &format!("order.{i}.class"), k);
            }
            kv(&mut out, "fences", fences.len());
            for (i, f) in fences.iter().enumerate() {
                kv(&mut out, &format!("fence.{i}"), f);
            }
            if let Some(val) = v.validation {
                for (i, verdict) in val.exploration.verdicts.iter().enumerate() {
                    kv(&mut out, &format!("property.{i}.name"), &verdict.property);
                    kv(&mut out, &format!("property.{i}.verdict"), verdict_name(&verdict.outcome));
                }
                kv(&mut out, "sampled_runs", val.runs);
                kv(&mut out, "ordering_failures", val.ordering_failures);
            }
        }
        Format::Json => {
            let mut o = json!({
                "orderings": orders.iter().map(|(c, k)| json!({ "order": c, "class": k })).collect::<Vec<_>>(),
                "fences": fences,
                "program": v.fenced.to_string(),
            });
            if let Some(val) = v.validation {
                o["validation"] = json!({
                    "properties": val.exploration.verdicts.iter()
                        .map(|x| json!({ "name": x.property, "verdict": verdict_name(&x.outcome) }))
                        .collect::<Vec<_>>(),
                    "sampled_runs": val.runs,
                    "ordering_failures": val.ordering_failures,
                });
            }
            out = json_text(&o);
        }
    }
    out
}

pub fn compat(fmt: Format, p: &Problem, engine: &str, r: &CompatResult) -> String {
    let mut out = String::new();
    let verdict = if r.sat() { "sat" } else { "unsat" };
    match fmt {
        Format::Text => {
            let _ = writeln!(
                out,
                "{} ({engine}): {} witnesses{}",
                verdict.to_uppercase(),
                r.witnesses.len(),
                if r.truncated { " (truncated)" } else { "" }
            );
            for w in &r.witnesses {
                let _ = writeln!(out, "  merge {}", format_merge(p, &w.merge));
                let vals: Vec<String> = describe_witness(p, w).into_iter().map(|(k, v)| format!("{k} = {v}")).collect();
                let _ = writeln!(out, "    {}", vals.join(", "));
            }
        }
        Format::Kv => {
            kv(&mut out, "engine", engine);
            kv(&mut out, "verdict", verdict);
            kv(&mut out, "witnesses", r.witnesses.len());
            kv(&mut out, "truncated", r.truncated);
            for (i, w) in r.witnesses.iter().enumerate() {
                kv(&mut out, &format!("witness.{i}.merge"), format_merge(p, &w.merge));
                for (k, v) in describe_witness(p, w) {
                    kv(&mut out, &format!("witness.{i}.{}", k.replace(' ', "_")), v);
                }
            }
        }
        Format::Json => {
            let ws: Vec<Value> = r
                .witnesses
                .iter()
                .map(|w| json!({ "merge": format_merge(p, &w.merge), "values": describe_witness(p, w) }))
                .collect();
            out = json_text(&json!({
                "engine": engine,
                "verdict": verdict,
                "truncated": r.truncated,
                "witnesses": ws,
            }));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use mmx::explore::explore as run_explore;
    use mmx::lang::parse_program;
    use mmx::machine::Model;

    fn tiny() -> (Program, ExploreParams, Exploration) {
        let p = parse_program("shared x = 0; thread A { x := 1 }").unwrap();
        let ps = ExploreParams::new(Model::Sc);
        let ex = run_explore(&p, &ps).unwrap();
        (p, ps, ex)
    }

    #[test]
    fn kv_fields_come_in_a_fixed_order() {
        let (p, ps, ex) = tiny();
        let keys: Vec<String> =
            explore(Format::Kv, &p, &ps, &ex).lines().map(|l| l.split('=').next().unwrap().to_string()).collect();
        assert_eq!(
            keys,
            [
                "model",
                "unroll",
                "spin",
                "buffer",
                "states",
                "transitions",
                "leaves",
                "finals",
                "max_depth",
                "bound_hit",
                "buffer_saturated",
                "complete",
                "budget_exceeded"
            ]
        );
    }

    #[test]
    fn json_is_valid_and_text_names_the_model() {
        let (p, ps, ex) = tiny();
        let v: Value = serde_json::from_str(&explore(Format::Json, &p, &ps, &ex)).unwrap();
        assert_eq!(v["census"]["finals"], 1);
        assert!(explore(Format::Text, &p, &ps, &ex).starts_with("model sc, unroll 2"));
    }
}
