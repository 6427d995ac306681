//! Goldens for both engines over the fixture programs.

use cofj::corpus::{describe, load_corpus, Outcome};
use cofj::fj::{eval_fj_with, FjConfig};
use cofj::op::{eval_main, run, OpConfig};
use cofj::runtime::RuntimeError;
use cofj::Capsule;

const FJ_FUEL: u64 = 200_000;

fn fj(
    table: &cofj::classtable::ClassTable,
    e: &cofj::Expr,
    monitor: bool,
) -> Result<Capsule, RuntimeError> {
    eval_fj_with(
        table,
        e,
        FjConfig {
            fuel: FJ_FUEL,
            monitor,
        },
    )
    .map(|v| Capsule::ground((&v).into()))
}

#[test]
fn reference_interpreter_goldens() {
    let corpus = load_corpus().unwrap();
    let mut checked = 0;
    for f in &corpus {
        for e in &f.entries {
            let Some(expected) = &e.fj else { continue };
            for monitor in [false, true] {
                let r = fj(&f.program.table, &e.expr, monitor);
                assert!(
                    expected.matches(&r),
                    "{}: `{}` gave {}",
                    f.file,
                    e.text,
                    describe(&r)
                );
            }
            checked += 1;
        }
    }
    assert!(checked >= 40, "{checked}");
}

#[test]
fn cyclic_results_diverge_in_the_reference_interpreter() {
    let corpus = load_corpus().unwrap();
    for f in &corpus {
        for e in &f.entries {
            if let Outcome::Value(c) = &e.op {
                if !c.env.is_empty() {
                    assert_eq!(e.fj.as_ref(), Some(&Outcome::Diverges), "`{}`", e.text);
                }
            }
        }
    }
}

#[test]
fn main_expressions_evaluate() {
    let expected = [
        (
            "lists.cofj",
            "x0 where x0 = new NonEmptyList(2, new NonEmptyList(1, x0))",
        ),
        (
            "numbers.cofj",
            "new Number(4, x0) where x0 = new Number(9, x0)",
        ),
        ("graph.cofj", "new Nat(2)"),
        ("undetermined.cofj", "x0 where x0 = x0"),
    ];
    let corpus = load_corpus().unwrap();
    for (file, text) in expected {
        let f = corpus.iter().find(|f| f.file == file).unwrap();
        let r = eval_main(&f.program.table, f.program.main.as_ref().unwrap());
        assert_eq!(describe(&r), text, "{file}");
    }
}

#[test]
fn outputs_are_canonical_and_reparse() {
    let corpus = load_corpus().unwrap();
    for f in &corpus {
        for e in &f.entries {
            if let Ok(c) = eval_main(&f.program.table, &e.expr) {
                let text = c.to_string();
                let back = cofj::parse_capsule(&text).unwrap();
                assert_eq!(back.canonical().to_string(), text, "`{}`", e.text);
                assert!(c.is_closed());
            }
        }
    }
}

#[test]
fn traces_name_the_rules_used() {
    let corpus = load_corpus().unwrap();
    let lists = corpus.iter().find(|f| f.file == "lists.cofj").unwrap();
    let e = cofj::parse_expr("new ListFactory().two_one()").unwrap();
    let r = run(
        &lists.program.table,
        &e,
        &OpConfig {
            trace: true,
            ..OpConfig::default()
        },
    );
    let rules: Vec<&str> = r
        .log
        .iter()
        .filter_map(|l| l.strip_prefix("RULE(")?.split(')').next())
        .collect();
    for rule in ["corec", "invk-check", "new"] {
        assert!(rules.contains(&rule), "{rule} missing from {rules:?}");
    }
    let min = cofj::parse_expr("new ListFactory().two_one().min()").unwrap();
    let r = run(
        &lists.program.table,
        &min,
        &OpConfig {
            trace: true,
            ..OpConfig::default()
        },
    );
    assert!(r
        .log
        .iter()
        .any(|l| l.starts_with("RULE(look-up)") || l.starts_with("RULE(corec)")));
    assert!(r.log.iter().all(|l| l.starts_with("RULE(")));
}
