use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn mmx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmx")).args(args).env_remove("MMX_MAX_STATES").output().expect("mmx runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn scratch(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("mmx-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn explore_peterson_under_both_models() {
    let sc = mmx(&["explore", "corpus:peterson.cvl", "--props", "corpus:peterson.props"]);
    assert_eq!(code(&sc), 0, "{}", stderr(&sc));
    assert!(stdout(&sc).contains("property `never-both P1@CS P2@CS`: HOLDS"), "{}", stdout(&sc));

    let pso =
        mmx(&["explore", "corpus:peterson.cvl", "--model", "pso", "--buffer", "1", "--props", "corpus:peterson.props"]);
    assert_eq!(code(&pso), 1);
    let out = stdout(&pso);
    assert!(out.contains("VIOLATED") && out.contains("P1 C1 GR flag2=false"), "{out}");
}

#[test]
fn saved_counterexample_replays() {
    let sched = std::env::temp_dir().join(format!("mmx-cli-{}-peterson.sched", std::process::id()));
    let o = mmx(&[
        "explore",
        "corpus:peterson.cvl",
        "--model",
        "pso",
        "--buffer",
        "1",
        "--props",
        "corpus:peterson.props",
        "--save-schedule",
        s(&sched),
    ]);
    assert_eq!(code(&o), 1);
    let r = mmx(&["replay", "corpus:peterson.cvl", s(&sched), "--props", "corpus:peterson.props", "--buffer", "1"]);
    assert_eq!(code(&r), 1, "{}", stderr(&r));
    assert!(stdout(&r).contains("violated `never-both P1@CS P2@CS`"));
    let wrong = mmx(&["replay", "corpus:peterson.cvl", s(&sched), "--model", "sc"]);
    assert_eq!(code(&wrong), 65);
    assert!(stderr(&wrong).contains("recorded under pso"));
}

#[test]
fn plans_for_the_corpus() {
    let b = mmx(&["plan", "corpus:bakery2.cvl", "--orderings", "corpus:bakery2.order"]);
    assert_eq!(code(&b), 0);
    let out = stdout(&b);
    for line in [
        "fence P1 between Q1 and R1",
        "fence P1 between T1 and U1",
        "fence P2 between Q2 and R2",
        "fence P2 between T2 and U2",
        "4 fences",
    ] {
        assert!(out.lines().any(|l| l == line), "missing {line:?} in\n{out}");
    }
    let simpson = mmx(&["plan", "corpus:simpson4.cvl", "--orderings", "corpus:simpson4.order", "--format", "kv"]);
    let out = stdout(&simpson);
    assert!(out.contains("fences=3\n"), "{out}");
    assert!(out.contains("fence.2=fence R between Q2 and R2\n"), "{out}");

    let empty = scratch("empty.order", "# nothing to keep\n");
    let e = mmx(&["plan", "corpus:sb.cvl", "--orderings", s(&empty)]);
    assert_eq!(code(&e), 0);
    assert!(stdout(&e).contains("0 fences"));
}

#[test]
fn validated_plan_and_written_program() {
    let out = std::env::temp_dir().join(format!("mmx-cli-{}-bakery.cvl", std::process::id()));
    let v = mmx(&[
        "plan",
        "corpus:bakery2.cvl",
        "--orderings",
        "corpus:bakery2.order",
        "--validate",
        "--props",
        "corpus:bakery2.props",
        "--output",
        s(&out),
        "--format",
        "kv",
    ]);
    assert_eq!(code(&v), 0, "{}{}", stdout(&v), stderr(&v));
    let text = stdout(&v);
    assert!(text.contains("property.0.verdict=holds\n") && text.contains("ordering_failures=0\n"), "{text}");
    let fenced = std::fs::read_to_string(&out).unwrap();
    assert_eq!(fenced.matches("fence;").count(), 4);
    let e = mmx(&["explore", s(&out), "--model", "pso", "--props", "corpus:bakery2.props"]);
    assert_eq!(code(&e), 0);
}

#[test]
fn compat_verdicts_and_failures() {
    let u = mmx(&["compat", "corpus:bakery2.hist", "--constraints", "corpus:bakery2.cons", "--cross-check"]);
    assert_eq!(code(&u), 1, "{}", stderr(&u));
    assert!(stdout(&u).starts_with("UNSAT"));

    let eps = scratch("eps.hist", "init x = 0\nthread A:\nthread B:\n");
    let sat = mmx(&["compat", s(&eps), "--format", "kv"]);
    assert_eq!(code(&sat), 0, "{}", stderr(&sat));
    assert!(stdout(&sat).contains("verdict=sat\nwitnesses=1\n"));

    let cap = mmx(&["compat", "corpus:bakery2.hist", "--cap", "4"]);
    assert_eq!(code(&cap), 3);
    assert!(stderr(&cap).contains("--rec"));

    let rec = mmx(&["compat", "corpus:bakery2.hist", "--rec", "--limit", "1", "--format", "json"]);
    assert_eq!(code(&rec), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&rec)).unwrap();
    assert_eq!(v["verdict"], "sat");
    assert_eq!(v["witnesses"].as_array().unwrap().len(), 1);
}

#[test]
fn exit_codes_for_bad_input() {
    assert_eq!(code(&mmx(&["explore", "/nonexistent/prog.cvl"])), 66);
    assert_eq!(code(&mmx(&["explore", "corpus:nothing.cvl"])), 66);
    assert_eq!(code(&mmx(&["explore"])), 64);
    assert_eq!(code(&mmx(&["frobnicate"])), 64);
    assert_eq!(code(&mmx(&["--help"])), 0);
    assert_eq!(code(&mmx(&["run", "corpus:sb.cvl", "--policy", "sideways"])), 64);
    let bad = scratch("bad.cvl", "shared x = 0; thread A { x := ; }");
    let o = mmx(&["explore", s(&bad)]);
    assert_eq!(code(&o), 65);
    assert!(!stderr(&o).is_empty());
    let bad_order = scratch("bad.order", "order T1 R1 < W1\n");
    assert_eq!(code(&mmx(&["plan", "corpus:sb.cvl", "--orderings", s(&bad_order)])), 65);
    assert_eq!(code(&mmx(&["explore", "corpus:sb.cvl", "--unroll", "0"])), 64);
}

#[test]
fn inconclusive_when_the_budget_runs_out() {
    let o = Command::new(env!("CARGO_BIN_EXE_mmx"))
        .args(["explore", "corpus:bakery2.cvl", "--model", "pso", "--props", "corpus:bakery2.props", "--format", "kv"])
        .env("MMX_MAX_STATES", "1000")
        .output()
        .unwrap();
    let expected_code = if stdout(&o).contains("verdict=violated") { 1 } else { 2 };
    assert_eq!(code(&o), expected_code, "{}", stdout(&o));
    let sc = Command::new(env!("CARGO_BIN_EXE_mmx"))
        .args(["explore", "corpus:bakery2.cvl", "--props", "corpus:bakery2.props", "--format", "kv"])
        .env("MMX_MAX_STATES", "1000")
        .output()
        .unwrap();
    assert_eq!(code(&sc), 2, "{}", stdout(&sc));
    assert!(stdout(&sc).contains("property.0.verdict=inconclusive\n"));
}

#[test]
fn reports_are_reproducible_across_runs_and_workers() {
    let args = |w: &'static str| {
        vec![
            "explore",
            "corpus:simpson4.cvl",
            "--model",
            "pso",
            "--props",
            "corpus:simpson4.props",
            "--count-schedules",
            "--format",
            "json",
            "--workers",
            w,
        ]
    };
    let one = mmx(&args("1"));
    let again = mmx(&args("1"));
    let four = mmx(&args("4"));
    assert_eq!(one.stdout, again.stdout);
    assert_eq!(one.stdout, four.stdout);
    let v: serde_json::Value = serde_json::from_str(&stdout(&one)).unwrap();
    assert_eq!(v["model"], "pso");
    assert!(v["properties"].as_array().unwrap().iter().any(|p| p["verdict"] == "violated"));
}

#[test]
fn run_reports_final_memory() {
    let o = mmx(&["run", "corpus:sb.cvl", "--format", "kv"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("final=true\n") && out.contains("memory=x=1 y=1\n"), "{out}");
    let r1 = mmx(&["run", "corpus:bakery2.cvl", "--policy", "random", "--seed", "5", "--max-steps", "200"]);
    let r2 = mmx(&["run", "corpus:bakery2.cvl", "--policy", "random", "--seed", "5", "--max-steps", "200"]);
    assert_eq!(r1.stdout, r2.stdout);
}
