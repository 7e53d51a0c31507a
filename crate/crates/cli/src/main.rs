mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mmx::explore::{self, max_states_from_env, parse_properties, ExploreParams, DEFAULT_MAX_STATES};
use mmx::fence::{self, OrderClass};
use mmx::history::{self, compat_check, compat_check_rec, parse_constraints, parse_histories, HistError};
use mmx::lang::{parse_program, Program};
use mmx::machine::{self, format_schedule, Limits, Model, Policy};

use report::{Format, PlanView};

const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;
const EXIT_NO_INPUT: u8 = 66;
const EXIT_CAP: u8 = 3;
const EXIT_MISMATCH: u8 = 70;

/// Run, explore and fence concurrent programs under SC and PSO.
///
/// File arguments may name a bundled example as `corpus:NAME`, for
/// instance `corpus:peterson.cvl`.
#[derive(Parser, Debug)]
#[command(name = "mmx", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Execute one run and print its trace.
    Run(RunArgs),
    /// Explore every configuration within the bounds and check properties.
    Explore(ExploreArgs),
    /// Plan fences from an orderings file and print the fenced program.
    Plan(PlanArgs),
    /// Decide whether per-thread histories have a compatible merge.
    Compat(CompatArgs),
    /// Replay a saved schedule and re-check the properties.
    Replay(ReplayArgs),
}

#[derive(Args, Debug, Clone)]
struct Bounds {
    /// Iterations allowed for each top-level loop.
    #[arg(long, default_value_t = 2)]
    unroll: u16,
    /// Iterations allowed for each nested (busy-wait) loop.
    #[arg(long, default_value_t = 2)]
    spin: u16,
    /// Entries per store buffer and cell under PSO.
    #[arg(long, default_value_t = 2)]
    buffer: u16,
    /// State budget; overrides MMX_MAX_STATES.
    #[arg(long)]
    max_states: Option<usize>,
    /// Worker threads (1 runs sequentially). Results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Debug)]
struct RunArgs {
    program: String,
    #[arg(long, default_value = "sc")]
    model: Model,
    /// first, round-robin or random.
    #[arg(long, default_value = "first")]
    policy: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    max_steps: usize,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args, Debug)]
struct ExploreArgs {
    program: String,
    #[arg(long, default_value = "sc")]
    model: Model,
    /// Property file.
    #[arg(long)]
    props: Option<String>,
    #[command(flatten)]
    bounds: Bounds,
    /// Also count maximal schedules.
    #[arg(long)]
    count_schedules: bool,
    /// Write the first counterexample's schedule to this file.
    #[arg(long)]
    save_schedule: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args, Debug)]
struct PlanArgs {
    program: String,
    /// Orderings file.
    #[arg(long)]
    orderings: String,
    /// Treat only same-variable and dependent orders as kept by PSO.
    #[arg(long)]
    strict: bool,
    /// Explore the fenced program under PSO and check the orderings on sampled runs.
    #[arg(long)]
    validate: bool,
    /// Property file used by --validate.
    #[arg(long)]
    props: Option<String>,
    #[command(flatten)]
    bounds: Bounds,
    /// Sampled runs for the ordering check of --validate.
    #[arg(long, default_value_t = 200)]
    runs: usize,
    /// Write the fenced program to this file.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args, Debug)]
struct CompatArgs {
    histories: String,
    /// Constraints file.
    #[arg(long)]
    constraints: Option<String>,
    /// Use the recursive engine instead of enumerating merges.
    #[arg(long)]
    rec: bool,
    /// Run both engines and report any difference.
    #[arg(long)]
    cross_check: bool,
    /// Most events the enumerating engine accepts.
    #[arg(long, default_value_t = history::DEFAULT_MERGE_CAP)]
    cap: usize,
    /// Stop the recursive engine after this many witnesses.
    #[arg(long)]
    limit: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    program: String,
    schedule: String,
    /// Model to replay under; must match the schedule header.
    #[arg(long)]
    model: Option<Model>,
    #[arg(long)]
    props: Option<String>,
    #[command(flatten)]
    bounds: Bounds,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

struct Failure {
    code: u8,
    msg: String,
}

fn fail(code: u8, msg: impl ToString) -> Failure {
    Failure { code, msg: msg.to_string() }
}

fn read(path: &str) -> Result<String, Failure> {
    if let Some(name) = path.strip_prefix("corpus:") {
        return mmx::corpus::file(name)
            .map(str::to_string)
            .ok_or_else(|| fail(EXIT_NO_INPUT, format!("no bundled file `{name}`")));
    }
    std::fs::read_to_string(path).map_err(|e| fail(EXIT_NO_INPUT, format!("{path}: {e}")))
}

fn program(path: &str) -> Result<Program, Failure> {
    parse_program(&read(path)?).map_err(|e| fail(EXIT_DATA, format!("{path}: {e}")))
}

fn params(p: &Program, model: Model, b: &Bounds, props: Option<&str>) -> Result<ExploreParams, Failure> {
    let mut ps = ExploreParams::new(model);
    ps.unroll = b.unroll;
    ps.spin = b.spin;
    ps.buffer = b.buffer;
    ps.workers = b.workers;
    ps.max_states = b.max_states.or_else(max_states_from_env).unwrap_or(DEFAULT_MAX_STATES);
    if let Some(path) = props {
        ps.props = parse_properties(p, &read(path)?).map_err(|e| fail(EXIT_DATA, format!("{path}: {e}")))?;
    }
    ps.validate().map_err(|e| fail(EXIT_USAGE, e))?;
    Ok(ps)
}

fn write_file(path: &PathBuf, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| fail(EXIT_NO_INPUT, format!("{}: {e}", path.display())))
}

fn verdict_code(ex: &explore::Exploration) -> u8 {
    if ex.any_violated() {
        1
    } else if ex.all_hold() {
        0
    } else {
        2
    }
}

fn cmd_run(a: RunArgs) -> Result<u8, Failure> {
    let p = program(&a.program)?;
    let policy = match a.policy.as_str() {
        "first" => Policy::First,
        "round-robin" => Policy::RoundRobin,
        "random" => Policy::Random(a.seed),
        other => return Err(fail(EXIT_USAGE, format!("unknown policy `{other}`"))),
    };
    let r = machine::run(a.model, &p, policy, &Limits::default(), a.max_steps).map_err(|e| fail(EXIT_DATA, e))?;
    print!("{}", report::run(a.format, &p, &r, None));
    Ok(0)
}

fn cmd_explore(a: ExploreArgs) -> Result<u8, Failure> {
    let p = program(&a.program)?;
    let mut ps = params(&p, a.model, &a.bounds, a.props.as_deref())?;
    ps.count_schedules = a.count_schedules;
    let ex = explore::explore(&p, &ps).map_err(|e| fail(EXIT_DATA, e))?;
    if let Some(path) = &a.save_schedule {
        if let Some(cx) = ex.verdicts.iter().find_map(|v| v.counterexample()) {
            write_file(path, &format_schedule(&p.code, ps.model, &cx.schedule))?;
        }
    }
    print!("{}", report::explore(a.format, &p, &ps, &ex));
    Ok(verdict_code(&ex))
}

fn cmd_plan(a: PlanArgs) -> Result<u8, Failure> {
    let p = program(&a.program)?;
    let cs = fence::parse_orderings(&p, &read(&a.orderings)?)
        .map_err(|e| fail(EXIT_DATA, format!("{}: {e}", a.orderings)))?;
    let classes: Vec<OrderClass> = cs
        .iter()
        .map(|c| fence::classify(&p, c, a.strict))
        .collect::<Result<_, _>>()
        .map_err(|e| fail(EXIT_DATA, e))?;
    let plan = fence::plan_fences(&p, &cs, a.strict).map_err(|e| fail(EXIT_DATA, e))?;
    let fenced = fence::apply_fences(&p, &plan).map_err(|e| fail(EXIT_DATA, e))?;
    let validation = if a.validate {
        let ps = params(&p, Model::Pso, &a.bounds, a.props.as_deref())?;
        Some(fence::validate_plan(&p, &cs, &ps, a.strict, a.runs, 0).map_err(|e| fail(EXIT_DATA, e))?)
    } else {
        None
    };
    if let Some(path) = &a.output {
        write_file(path, &fenced.to_string())?;
    }
    let view = PlanView {
        program: &p,
        constraints: &cs,
        classes: &classes,
        plan: &plan,
        fenced: &fenced,
        validation: validation.as_ref(),
    };
    print!("{}", report::plan(a.format, &view));
    Ok(match &validation {
        Some(v) if v.ordering_failures > 0 => 1,
        Some(v) => verdict_code(&v.exploration),
        None => 0,
    })
}

fn hist_failure(path: &str, e: HistError) -> Failure {
    match e {
        HistError::CapExceeded { .. } => fail(EXIT_CAP, format!("{e}; try --rec")),
        _ => fail(EXIT_DATA, format!("{path}: {e}")),
    }
}

fn cmd_compat(a: CompatArgs) -> Result<u8, Failure> {
    let mut prob = parse_histories(&read(&a.histories)?).map_err(|e| hist_failure(&a.histories, e))?;
    if let Some(path) = &a.constraints {
        parse_constraints(&mut prob, &read(path)?).map_err(|e| hist_failure(path, e))?;
    }
    let result = if a.cross_check {
        let lit = compat_check(&prob, a.cap).map_err(|e| hist_failure(&a.histories, e))?;
        let rec = compat_check_rec(&prob, None).map_err(|e| hist_failure(&a.histories, e))?;
        let (mut x, mut y) = (lit.witnesses.clone(), rec.witnesses.clone());
        x.sort();
        y.sort();
        if x != y {
            return Err(fail(
                EXIT_MISMATCH,
                format!("engines disagree: {} witnesses by enumeration, {} by recursion", x.len(), y.len()),
            ));
        }
        print!("{}", report::compat(a.format, &prob, "both", &lit));
        lit
    } else if a.rec {
        let r = compat_check_rec(&prob, a.limit).map_err(|e| hist_failure(&a.histories, e))?;
        print!("{}", report::compat(a.format, &prob, "recursive", &r));
        r
    } else {
        let r = compat_check(&prob, a.cap).map_err(|e| hist_failure(&a.histories, e))?;
        print!("{}", report::compat(a.format, &prob, "merge", &r));
        r
    };
    Ok(if result.sat() { 0 } else { 1 })
}

fn cmd_replay(a: ReplayArgs) -> Result<u8, Failure> {
    let p = program(&a.program)?;
    let text = read(&a.schedule)?;
    let (recorded, _) =
        machine::parse_schedule(&p.code, &text).map_err(|e| fail(EXIT_DATA, format!("{}: {e}", a.schedule)))?;
    let ps = params(&p, a.model.unwrap_or(recorded), &a.bounds, a.props.as_deref())?;
    let (run, violated) = explore::replay_file(&p, &ps, &text).map_err(|e| fail(EXIT_DATA, e))?;
    let names: Vec<String> = violated.iter().map(|&i| ps.props[i].name.clone()).collect();
    print!("{}", report::run(a.format, &p, &run, Some(&names)));
    Ok(if names.is_empty() { 0 } else { 1 })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let res = match cli.cmd {
        Command::Run(a) => cmd_run(a),
        Command::Explore(a) => cmd_explore(a),
        Command::Plan(a) => cmd_plan(a),
        Command::Compat(a) => cmd_compat(a),
        Command::Replay(a) => cmd_replay(a),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("mmx: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
