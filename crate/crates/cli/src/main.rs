use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cofj::classtable::Program;
use cofj::fj::eval_fj;
use cofj::op::{run, Mutation, OpConfig, OpRun};
use cofj::oracle::{check_sound, IntSearch, Verdict, DEFAULT_BUDGET};
use cofj::runtime::{RuntimeError, DEFAULT_FUEL};
use cofj::{parse_expr, Expr};

const OK: u8 = 0;
const INVALID: u8 = 1;
const RUNTIME: u8 = 2;
const NO_FUEL: u8 = 3;
const REFUTED: u8 = 4;
const INCONCLUSIVE: u8 = 5;

/// Interpreter for Featherweight Java with codefinitions.
#[derive(Parser)]
#[command(name = "cofj", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the main expression of a program, or `-e EXPR`.
    Run(RunArgs),
    /// Evaluate with the operational engine and check the result against
    /// the intermediate semantics.
    Check(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Program file.
    file: PathBuf,
    /// Expression to evaluate instead of `main`.
    #[arg(short = 'e', long = "expr", value_name = "EXPR")]
    expr: Option<String>,
    /// Evaluation steps before giving up.
    #[arg(long, env = "COFJ_FUEL", default_value_t = DEFAULT_FUEL,
          value_parser = clap::value_parser!(u64).range(1..))]
    fuel: u64,
    /// Work units for the derivation search.
    #[arg(long, default_value_t = DEFAULT_BUDGET, value_parser = clap::value_parser!(u64).range(1..))]
    budget: u64,
    /// Print the rules applied by the operational engine on stderr.
    #[arg(long)]
    trace: bool,
    #[arg(long, hide = true, value_enum)]
    inject_bug: Option<Bug>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum, default_value_t = Engine::Op)]
    engine: Engine,
    /// Also check the operational result, as `check` does.
    #[arg(long)]
    check_soundness: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Engine {
    /// Operational semantics with capsules.
    Op,
    /// Plain big-step FJ; codefinitions are ignored.
    Fj,
    /// Closed answers of the intermediate semantics.
    Intermediate,
}

#[derive(Clone, Copy, ValueEnum)]
enum Bug {
    CorecEnv,
    SkipCheck,
}

impl From<Bug> for Mutation {
    fn from(b: Bug) -> Self {
        match b {
            Bug::CorecEnv => Mutation::CorecEnvDropped,
            Bug::SkipCheck => Mutation::SkipCheck,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { INVALID } else { OK });
        }
    };
    let code = match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Check(args) => cmd_check(&args),
    };
    ExitCode::from(code.unwrap_or_else(|c| c))
}

/// Loads the program and picks the expression to evaluate.
fn load(args: &CommonArgs) -> Result<(Program, Expr), u8> {
    let fail = |msg: String| {
        eprintln!("error: {msg}");
        INVALID
    };
    let path = args.file.display();
    let text = std::fs::read_to_string(&args.file).map_err(|e| fail(format!("{path}: {e}")))?;
    let program = Program::load(&text).map_err(|e| fail(format!("{path}: {e}")))?;
    let expr = match &args.expr {
        Some(src) => {
            let e = parse_expr(src).map_err(|e| fail(format!("-e: parse error at {e}")))?;
            program
                .table
                .check_expr(&e, &Default::default(), false, "-e")
                .map_err(|e| fail(format!("-e: {e}")))?;
            e
        }
        None => program
            .main
            .clone()
            .ok_or_else(|| fail(format!("{path}: no `main` expression and no -e")))?,
    };
    Ok((program, expr))
}

fn runtime_error(e: &RuntimeError) -> u8 {
    eprintln!("error[{}]: {e}", e.kind());
    if e.is_divergence() {
        NO_FUEL
    } else {
        RUNTIME
    }
}

fn op_run(program: &Program, e: &Expr, args: &CommonArgs, hints: bool) -> OpRun {
    let cfg = OpConfig {
        fuel: args.fuel,
        trace: args.trace,
        mutation: args.inject_bug.map(Mutation::from),
        record_hints: hints,
    };
    let r = run(&program.table, e, &cfg);
    for line in &r.log {
        eprintln!("{line}");
    }
    r
}

fn soundness(program: &Program, e: &Expr, r: &OpRun, budget: u64) -> u8 {
    match check_sound(&program.table, e, r, budget) {
        Verdict::Confirmed => OK,
        Verdict::Refuted => {
            eprintln!(
                "soundness: refuted, no derivation of the result in the intermediate semantics"
            );
            REFUTED
        }
        Verdict::Inconclusive => {
            eprintln!("soundness: inconclusive, search budget exhausted");
            INCONCLUSIVE
        }
    }
}

fn cmd_run(args: &RunArgs) -> Result<u8, u8> {
    let common = &args.common;
    let (program, e) = load(common)?;
    match args.engine {
        Engine::Op => {
            let r = op_run(&program, &e, common, args.check_soundness);
            match &r.result {
                Ok(c) => println!("{c}"),
                Err(err) => return Err(runtime_error(err)),
            }
            if args.check_soundness {
                return Err(soundness(&program, &e, &r, common.budget));
            }
        }
        Engine::Fj => match eval_fj(&program.table, &e, common.fuel) {
            Ok(v) => println!("{v}"),
            Err(err) => return Err(runtime_error(&err)),
        },
        Engine::Intermediate => {
            // `any` ranges over what an operational run produced.
            let r = op_run(&program, &e, common, true);
            let (mut s, _) = IntSearch::from_run(&program.table, &r, common.budget);
            let d = s.derive(&e, &[], &[], None);
            let mut closed: Vec<String> = d
                .answers
                .iter()
                .filter(|(_, calls)| calls.is_empty())
                .map(|(v, _)| s.store.to_capsule(*v).canonical().to_string())
                .collect();
            closed.sort();
            closed.dedup();
            for c in &closed {
                println!("{c}");
            }
            if !d.complete {
                eprintln!("warning: search budget exhausted; answers may be missing");
            }
            if closed.is_empty() {
                eprintln!("error: no closed derivation found");
                return Err(if d.complete { RUNTIME } else { NO_FUEL });
            }
        }
    }
    Ok(OK)
}

fn cmd_check(args: &CommonArgs) -> Result<u8, u8> {
    let (program, e) = load(args)?;
    let r = op_run(&program, &e, args, true);
    match &r.result {
        Ok(c) => println!("{c}"),
        Err(err) => return Err(runtime_error(err)),
    }
    Ok(soundness(&program, &e, &r, args.budget))
}
