use std::process::{Command, Output};

fn corpus(file: &str) -> String {
    format!("{}/../core/corpus/{file}", env!("CARGO_MANIFEST_DIR"))
}

fn cofj(args: &[&str]) -> Output {
    cofj_env(args, &[])
}

fn cofj_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cofj"));
    cmd.args(args).env_remove("COFJ_FUEL");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn lists(expr: &str, extra: &[&str]) -> Output {
    let file = corpus("lists.cofj");
    let mut args = vec!["run", file.as_str(), "-e", expr];
    args.extend_from_slice(extra);
    cofj(&args)
}

#[test]
fn prints_the_canonical_capsule() {
    let o = lists("new ListFactory().two_one()", &[]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o),
        "x0 where x0 = new NonEmptyList(2, new NonEmptyList(1, x0))\n"
    );
}

#[test]
fn evaluates_main_without_expression() {
    let o = cofj(&["run", &corpus("graph.cofj")]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "new Nat(2)\n");
}

#[test]
fn failed_check_is_a_runtime_error() {
    let o = lists("new ListFactory().two_one().sum()", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("CorecCheckFailure"));
    assert!(stdout(&o).is_empty());
}

#[test]
fn fuel_exhaustion() {
    let o = lists("new ListFactory().from(0)", &["--engine", "fj"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("FuelExhausted"));

    let o = lists("new ListFactory().two_one()", &["--fuel", "3"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn fuel_from_the_environment() {
    let file = corpus("lists.cofj");
    let args = ["run", file.as_str(), "-e", "new ListFactory().two_one()"];
    assert_eq!(
        cofj_env(&args, &[("COFJ_FUEL", "3")]).status.code(),
        Some(3)
    );
    assert_eq!(
        cofj_env(&args, &[("COFJ_FUEL", "100000")]).status.code(),
        Some(0)
    );
    // The flag wins over the variable.
    let mut with_flag = args.to_vec();
    with_flag.extend(["--fuel", "100000"]);
    assert_eq!(
        cofj_env(&with_flag, &[("COFJ_FUEL", "3")]).status.code(),
        Some(0)
    );
}

#[test]
fn invalid_input() {
    assert_eq!(cofj(&["run", "/nonexistent.cofj"]).status.code(), Some(1));
    assert_eq!(lists("new ListFactory(", &[]).status.code(), Some(1));
    assert_eq!(lists("y.min()", &[]).status.code(), Some(1));
    assert_eq!(lists("any", &[]).status.code(), Some(1));
    assert_eq!(lists("1", &["--fuel", "0"]).status.code(), Some(1));
    assert_eq!(lists("1", &["--engine", "nope"]).status.code(), Some(1));

    let dir = std::env::temp_dir().join(format!("cofj-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.cofj");
    std::fs::write(&bad, "class A extends B { }\nmain new A();\n").unwrap();
    let o = cofj(&["run", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("invalid program"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn engines_agree_on_finite_data() {
    for engine in ["op", "fj", "intermediate"] {
        let o = lists(
            "new ListFactory().mixed_fin().remPos()",
            &["--engine", engine],
        );
        assert_eq!(o.status.code(), Some(0), "{engine}");
        assert_eq!(
            stdout(&o),
            "new NonEmptyList(-1, new NonEmptyList(0, new EmptyList()))\n",
            "{engine}"
        );
    }
}

#[test]
fn intermediate_engine_on_a_cycle() {
    let o = lists(
        "new ListFactory().two_one().min()",
        &["--engine", "intermediate"],
    );
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "1\n");
    let o = lists(
        "new ListFactory().two_one().sum()",
        &["--engine", "intermediate"],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn trace_goes_to_stderr() {
    let o = lists("new ListFactory().two_one()", &["--trace"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o),
        "x0 where x0 = new NonEmptyList(2, new NonEmptyList(1, x0))\n"
    );
    let err = stderr(&o);
    for rule in ["RULE(corec)", "RULE(invk-check)", "RULE(new)"] {
        assert!(err.contains(rule), "{rule} missing from trace");
    }
}

#[test]
fn output_is_deterministic() {
    for e in [
        "new ListFactory().two_one().remPos2()",
        "new ListFactory().one_zeros().incr()",
    ] {
        let a = lists(e, &["--trace"]);
        let b = lists(e, &["--trace"]);
        assert_eq!(a.stdout, b.stdout);
        assert_eq!(a.stderr, b.stderr);
    }
}

fn check(file: &str, expr: &str, extra: &[&str]) -> Output {
    let file = corpus(file);
    let mut args = vec!["check", file.as_str(), "-e", expr];
    args.extend_from_slice(extra);
    cofj(&args)
}

#[test]
fn check_confirms_corpus_results() {
    for e in [
        "new ListFactory().two_one().min()",
        "new ListFactory().two_one().allPos()",
        "new ListFactory().zero_one().allPos()",
        "new ListFactory().two_one().member(3)",
        "new ListFactory().two_one().member(1)",
        "new ListFactory().zero_one().remPos2()",
    ] {
        let o = check("lists.cofj", e, &[]);
        assert_eq!(o.status.code(), Some(0), "{e}: {}", stderr(&o));
    }
    assert_eq!(
        check("graph.cofj", "new Graph().v4().dist(3)", &[])
            .status
            .code(),
        Some(0)
    );
}

#[test]
fn check_refutes_injected_bugs() {
    let o = check(
        "lists.cofj",
        "new ListFactory().two_one()",
        &["--inject-bug", "corec-env"],
    );
    assert_eq!(o.status.code(), Some(4));
    let o = check(
        "lists.cofj",
        "new ListFactory().two_one().sum()",
        &["--inject-bug", "skip-check"],
    );
    assert_eq!(stdout(&o), "3\n");
    assert_eq!(o.status.code(), Some(4));
    let o = lists(
        "new ListFactory().zero_one().remPos()",
        &["--inject-bug", "skip-check", "--check-soundness"],
    );
    assert_eq!(stdout(&o), "new NonEmptyList(0, new EmptyList())\n");
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn check_with_a_tiny_budget_is_inconclusive() {
    let o = check(
        "lists.cofj",
        "new ListFactory().two_one().min()",
        &["--budget", "3"],
    );
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn check_reports_runtime_errors_first() {
    assert_eq!(
        check("lists.cofj", "new ListFactory().two_one().sum()", &[])
            .status
            .code(),
        Some(2)
    );
}
