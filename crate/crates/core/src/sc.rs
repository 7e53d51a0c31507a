//! Sequentially consistent engine: every write goes straight to memory.

use crate::lang::Program;
use crate::machine::{self, Config, Enabled, Limits, Model, Outcome, Policy, Run, RunError, Step, StepError};

pub fn sc_init(p: &Program) -> Config {
    Config::initial(Model::Sc, &p.code)
}

pub fn sc_enabled(p: &Program, c: &Config) -> Result<Enabled, StepError> {
    machine::enabled(Model::Sc, &p.code, &c.state, &Limits::default())
}

/// One transition; appends the history element, if any, to the stepping
/// thread's history.
pub fn sc_step(p: &Program, c: &Config, s: Step) -> Result<Config, StepError> {
    let o = machine::step(Model::Sc, &p.code, &c.state, s, &Limits::default())?;
    Ok(apply(c, s, o))
}

pub(crate) fn apply(c: &Config, s: Step, o: Outcome) -> Config {
    let mut histories = c.histories.clone();
    if s.tid > 0 {
        if let Some(ev) = machine::history_event(&o) {
            histories[s.tid as usize - 1].push(ev);
        }
    }
    Config { model: c.model, state: o.state, histories }
}

pub fn sc_run(p: &Program, policy: Policy, max_steps: usize) -> Result<Run, RunError> {
    machine::run(Model::Sc, p, policy, &Limits::default(), max_steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_program;
    use crate::machine::{format_trace, Access, MemEvent, RootPc, Rule};
    use crate::value::Value;

    fn prog(src: &str) -> Program {
        parse_program(src).unwrap()
    }

    fn steps(p: &Program, c: &Config) -> Vec<Step> {
        sc_enabled(p, c).unwrap().steps
    }

    #[test]
    fn init_binds_declared_cells() {
        let p = prog(crate::corpus::PETERSON);
        let c = sc_init(&p);
        assert_eq!(c.state.g, vec![Value::Bool(false), Value::Bool(false), Value::Int(1)]);
        assert!(c.histories.iter().all(Vec::is_empty));
        let b = prog(crate::corpus::BAKERY);
        assert_eq!(sc_init(&b).state.g, vec![Value::Int(0), Value::Int(0), Value::Bool(false), Value::Bool(false)]);
    }

    #[test]
    fn empty_body_ends_immediately() {
        let p = prog("shared x = 0; thread A { }");
        let c = sc_step(&p, &sc_init(&p), Step::new(0, Rule::ParComp)).unwrap();
        assert_eq!(steps(&p, &c), vec![Step::new(1, Rule::End)]);
    }

    #[test]
    fn join_waits_for_the_thread() {
        let p = prog("shared x = 0; thread A { x := 1 } thread B { skip }");
        let mut c = sc_step(&p, &sc_init(&p), Step::new(0, Rule::ParComp)).unwrap();
        assert_eq!(steps(&p, &c), vec![Step::new(1, Rule::Gw), Step::new(2, Rule::SkpSyc)]);
        c = sc_step(&p, &c, Step::new(2, Rule::SkpSyc)).unwrap();
        c = sc_step(&p, &c, Step::new(2, Rule::End)).unwrap();
        // Root waits on A first even though B has already ended.
        assert!(steps(&p, &c).iter().all(|s| s.tid != 0));
        c = sc_step(&p, &c, Step::new(1, Rule::Gw)).unwrap();
        c = sc_step(&p, &c, Step::new(1, Rule::End)).unwrap();
        c = sc_step(&p, &c, Step::new(0, Rule::Join(1))).unwrap();
        c = sc_step(&p, &c, Step::new(0, Rule::Join(2))).unwrap();
        assert_eq!(steps(&p, &c), vec![Step::new(0, Rule::End)]);
        c = sc_step(&p, &c, Step::new(0, Rule::End)).unwrap();
        assert_eq!(c.state.root, RootPc::Done);
        assert!(steps(&p, &c).is_empty());
    }

    #[test]
    fn rules_update_store_and_history() {
        let p = prog(
            "shared flag1 = false; shared token2 = 0; thread A { 1: flag1 := true; 2: ftok2 := token2; 3: a := 2 + 3 }",
        );
        let mut c = sc_step(&p, &sc_init(&p), Step::new(0, Rule::ParComp)).unwrap();
        c = sc_step(&p, &c, Step::new(1, Rule::Gw)).unwrap();
        assert_eq!(c.state.g[0], Value::Bool(true));
        let before = c.state.g.clone();
        c = sc_step(&p, &c, Step::new(1, Rule::Gr)).unwrap();
        assert_eq!(c.state.threads[0].locals[0], Some(Value::Int(0)));
        c = sc_step(&p, &c, Step::new(1, Rule::Lrw)).unwrap();
        assert_eq!(c.state.threads[0].locals[1], Some(Value::Int(5)));
        assert_eq!(c.state.g, before);
        assert_eq!(
            c.histories[0],
            vec![
                MemEvent { access: Access::W, cell: 0, value: Value::Bool(true), stmt: 0 },
                MemEvent { access: Access::R, cell: 1, value: Value::Int(0), stmt: 1 },
            ]
        );
    }

    #[test]
    fn runtime_errors_identify_the_step() {
        let p = prog("shared x = 0; thread A { a := 0; L: b := 1 / a }");
        let err = sc_run(&p, Policy::First, 100).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("A at L") && msg.contains("division by zero"), "{msg}");
        let p = prog("shared x = 0; thread A { a := 2147483647; b := a + 1 }");
        assert!(sc_run(&p, Policy::First, 100).unwrap_err().to_string().contains("exceeds"));
        let p = prog("shared x = 0; thread A { x := a }");
        assert!(sc_run(&p, Policy::First, 100).unwrap_err().to_string().contains("unbound"));
    }

    #[test]
    fn straight_line_program_is_policy_independent() {
        let p = prog("shared x = 0; shared y = 0; thread A { x := 1; a := x; y := a + 1; x := 7 }");
        let finals: Vec<_> = [Policy::First, Policy::RoundRobin, Policy::Random(3), Policy::Random(9)]
            .into_iter()
            .map(|pol| sc_run(&p, pol, 1000).unwrap().config.state.g)
            .collect();
        assert!(finals.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(finals[0], vec![Value::Int(7), Value::Int(2)]);
    }

    #[test]
    fn replaying_a_schedule_is_deterministic() {
        let p = prog(crate::corpus::PETERSON);
        let a = sc_run(&p, Policy::Random(11), 500).unwrap();
        let b = sc_run(&p, Policy::Schedule(a.schedule.clone()), 500).unwrap();
        assert_eq!(a.config, b.config);
        assert_eq!(format_trace(&p.code, &a.trace), format_trace(&p.code, &b.trace));
    }

    #[test]
    fn round_robin_peterson_passes_both_critical_sections() {
        let p = prog(crate::corpus::PETERSON);
        let r = sc_run(&p, Policy::RoundRobin, 500).unwrap();
        assert!(r.config.state.is_final());
        let trace = format_trace(&p.code, &r.trace);
        assert!(trace.contains("P1 CS SKP-SYC") && trace.contains("P2 CS SKP-SYC"), "{trace}");
    }

    #[test]
    fn trace_lines_are_stable() {
        let p = prog("shared x = 0; thread A { W: x := 1; R: a := x; a := a + 1 }");
        let r = sc_run(&p, Policy::First, 100).unwrap();
        assert_eq!(
            format_trace(&p.code, &r.trace),
            "main - PARCOMP\nA W GW x=1\nA R GR x=1\nA L3 LRW a=2\nA - END\nmain - JOIN A\nmain - END\n"
        );
    }
}
