//! Operational semantics over capsules: rules val, field, new, invk-ok,
//! invk-check, corec and look-up, plus strict primitives and conditionals.

use std::fmt;

use crate::algebra::{env_union, equivalent, gc, unfold};
use crate::ast::{call_bindings, name, substitute, Expr, Name, OpenValue, ANY};
use crate::capsule::{Call, Capsule, Environment};
use crate::classtable::ClassTable;
use crate::runtime::{apply_binop, Prim, RuntimeError, DEFAULT_FUEL};
use crate::trace::{CallTrace, Tag};

/// Deliberately broken variants of the semantics, used to show that the
/// soundness oracle notices each missing ingredient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    /// Rule corec neither binds `x := x` before nor after the codefinition.
    CorecEnvDropped,
    /// Rule invk-check returns without the checking evaluation.
    SkipCheck,
}

#[derive(Debug, Clone)]
pub struct OpConfig {
    pub fuel: u64,
    pub trace: bool,
    pub mutation: Option<Mutation>,
    /// Keep the result of every method call, for the soundness oracle.
    pub record_hints: bool,
}

impl Default for OpConfig {
    fn default() -> Self {
        OpConfig {
            fuel: DEFAULT_FUEL,
            trace: false,
            mutation: None,
            record_hints: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    Val,
    Field,
    New,
    Prim,
    If,
    InvkOk,
    InvkCheck,
    Corec,
    LookUp,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::Val => "val",
            Rule::Field => "field",
            Rule::New => "new",
            Rule::Prim => "prim",
            Rule::If => "if",
            Rule::InvkOk => "invk-ok",
            Rule::InvkCheck => "invk-check",
            Rule::Corec => "corec",
            Rule::LookUp => "look-up",
        })
    }
}

/// Per-run mutable state: fresh-name counter, fuel and optional logs.
#[derive(Debug, Clone)]
pub struct EvalState {
    counter: u64,
    fuel: u64,
    budget: u64,
    mutation: Option<Mutation>,
    log: Option<Vec<String>>,
    hints: Option<Vec<(Call, OpenValue)>>,
}

impl EvalState {
    pub fn new(cfg: &OpConfig) -> Self {
        EvalState {
            counter: 0,
            fuel: cfg.fuel,
            budget: cfg.fuel,
            mutation: cfg.mutation,
            log: cfg.trace.then(Vec::new),
            hints: cfg.record_hints.then(Vec::new),
        }
    }

    /// Names starting with `#` cannot be written in source programs.
    fn fresh(&mut self) -> Name {
        let x = name(&format!("#{}", self.counter));
        self.counter += 1;
        x
    }

    pub fn fuel_used(&self) -> u64 {
        self.budget - self.fuel
    }

    fn record(&mut self, rule: Rule, e: &Expr, tau: &CallTrace, env: &Environment) {
        if let Some(log) = &mut self.log {
            let mut s = e.to_string();
            if s.len() > 72 {
                let cut = (0..=69).rev().find(|&i| s.is_char_boundary(i)).unwrap_or(0);
                s.truncate(cut);
                s.push_str("...");
            }
            log.push(format!("RULE({rule}) {s} | {} | {}", tau.len(), env.len()));
        }
    }

    fn hint(&mut self, call: &Call, u: &OpenValue) {
        if let Some(h) = &mut self.hints {
            h.push((call.clone(), u.clone()));
        }
    }
}

/// Outcome of a top-level run together with its diagnostics.
#[derive(Debug, Clone)]
pub struct OpRun {
    pub result: Result<Capsule, RuntimeError>,
    pub log: Vec<String>,
    /// Calls with the open values they returned, meaningful in the
    /// environment of `raw`.
    pub hints: Vec<(Call, OpenValue)>,
    /// The result before garbage collection and renaming.
    pub raw: Option<Capsule>,
    pub fuel_used: u64,
}

/// `e, σ, τ ⇓ u, σ′`
pub fn eval(
    table: &ClassTable,
    e: &Expr,
    env: &Environment,
    tau: &mut CallTrace,
    st: &mut EvalState,
) -> Result<(OpenValue, Environment), RuntimeError> {
    if st.fuel == 0 {
        return Err(RuntimeError::FuelExhausted(st.budget));
    }
    st.fuel -= 1;
    let out = stacker::maybe_grow(64 * 1024, 4 * 1024 * 1024, || step(table, e, env, tau, st))?;
    debug_assert!(
        env.is_contained_in(&out.1),
        "environment shrank evaluating {e}"
    );
    Ok(out)
}

fn step(
    table: &ClassTable,
    e: &Expr,
    env: &Environment,
    tau: &mut CallTrace,
    st: &mut EvalState,
) -> Result<(OpenValue, Environment), RuntimeError> {
    if let Some(u) = e.as_open_value() {
        st.record(Rule::Val, e, tau, env);
        return Ok((u, env.clone()));
    }
    match e {
        Expr::Var(_) | Expr::Int(_) | Expr::Bool(_) => unreachable!("handled by val"),
        Expr::Any => Err(RuntimeError::PrimitiveMisuse(
            "`any` outside a codefinition".into(),
        )),
        Expr::Field(target, f) => {
            let (u, env1) = eval(table, target, env, tau, st)?;
            let (c, args) = unfold_object(&u, &env1, target)?;
            let i = table
                .fields(c)?
                .iter()
                .position(|g| g == f)
                .ok_or_else(|| RuntimeError::FieldNotFound {
                    class: c.clone(),
                    field: f.clone(),
                })?;
            let ui = args[i].clone();
            st.record(Rule::Field, e, tau, &env1);
            Ok((ui, env1))
        }
        Expr::New(c, args) => {
            let (us, joined) = eval_all(table, args, env, tau, st)?;
            st.record(Rule::New, e, tau, &joined);
            Ok((OpenValue::Obj(c.clone(), us), joined))
        }
        Expr::BinOp(op, l, r) => {
            let (us, joined) = eval_all(table, [&**l, &**r], env, tau, st)?;
            let a = unfold_prim(&us[0], &joined, l)?;
            let b = unfold_prim(&us[1], &joined, r)?;
            let out = match apply_binop(*op, a, b)? {
                Prim::Int(n) => OpenValue::Int(n),
                Prim::Bool(b) => OpenValue::Bool(b),
            };
            st.record(Rule::Prim, e, tau, &joined);
            Ok((out, joined))
        }
        Expr::If(c, t, f) => {
            let (u, env1) = eval(table, c, env, tau, st)?;
            let branch = match unfold_prim(&u, &env1, c)? {
                Prim::Bool(true) => t,
                Prim::Bool(false) => f,
                Prim::Int(n) => {
                    return Err(RuntimeError::PrimitiveMisuse(format!(
                        "condition {n} is not boolean"
                    )))
                }
            };
            let (v, env2) = eval(table, branch, env, tau, st)?;
            let joined = env_union(&env1, &env2)?;
            st.record(Rule::If, e, tau, &joined);
            Ok((v, joined))
        }
        Expr::Call(target, m, args) => {
            let (mut us, joined) = eval_all(
                table,
                std::iter::once(&**target).chain(args.iter()),
                env,
                tau,
                st,
            )?;
            let receiver = us.remove(0);
            let (class, _) = unfold_object(&receiver, &joined, target)?;
            let class = class.clone();
            let call = Call::new(receiver, m.clone(), us);
            invoke(table, e, &class, call, joined, tau, st)
        }
    }
}

fn invoke(
    table: &ClassTable,
    e: &Expr,
    class: &Name,
    call: Call,
    joined: Environment,
    tau: &mut CallTrace,
    st: &mut EvalState,
) -> Result<(OpenValue, Environment), RuntimeError> {
    let info = table.mbody(class, &call.method)?.clone();
    if info.params.len() != call.args.len() {
        return Err(RuntimeError::MethodNotFound {
            class: class.clone(),
            method: call.method.clone(),
        });
    }
    let mut bindings = call_bindings(call.receiver.clone(), &info.params, &call.args);

    match tau.lookup(&call, &joined) {
        Some((x, Tag::Check)) => {
            st.record(Rule::LookUp, e, tau, &joined);
            Ok((OpenValue::Var(x), joined))
        }
        Some((x, Tag::Plain)) => {
            let co = table.combody(class, &call.method)?;
            bindings.insert(name(ANY), OpenValue::Var(x.clone()));
            let body = substitute(co, &bindings);
            let dropped = st.mutation == Some(Mutation::CorecEnvDropped);
            let start = if dropped {
                joined
            } else {
                joined.with(x.clone(), OpenValue::Var(x.clone()))
            };
            let (u, mut env1) = eval(table, &body, &start, tau, st)?;
            if !dropped {
                env1.insert(x.clone(), OpenValue::Var(x));
            }
            st.record(Rule::Corec, e, tau, &env1);
            st.hint(&call, &u);
            Ok((u, env1))
        }
        None => {
            let x = st.fresh();
            let body = substitute(&info.body, &bindings);
            tau.push(call.clone(), x.clone(), Tag::Plain, &joined);
            let first = eval(table, &body, &joined, tau, st);
            tau.pop();
            let (u, env1) = first?;
            if !env1.contains(&x) {
                st.record(Rule::InvkOk, e, tau, &env1);
                st.hint(&call, &u);
                return Ok((u, env1));
            }
            let bound = env1.with(x.clone(), u);
            if st.mutation != Some(Mutation::SkipCheck) {
                let check_env = env_union(&joined, &bound)?;
                tau.push(call.clone(), x.clone(), Tag::Check, &check_env);
                let second = eval(table, &body, &check_env, tau, st);
                tau.pop();
                let (u2, env2) = second?;
                let expected = Capsule::new_unchecked(OpenValue::Var(x.clone()), bound.clone());
                let actual = Capsule::new_unchecked(u2, env2);
                if equivalent(&expected, &actual).is_none() {
                    return Err(RuntimeError::CorecCheckFailure {
                        expected: Box::new(expected.canonical()),
                        actual: Box::new(actual.canonical()),
                    });
                }
            }
            let result = OpenValue::Var(x);
            st.record(Rule::InvkCheck, e, tau, &bound);
            st.hint(&call, &result);
            Ok((result, bound))
        }
    }
}

/// Evaluates each expression from the same environment and joins the results.
fn eval_all<'e>(
    table: &ClassTable,
    es: impl IntoIterator<Item = &'e Expr>,
    env: &Environment,
    tau: &mut CallTrace,
    st: &mut EvalState,
) -> Result<(Vec<OpenValue>, Environment), RuntimeError> {
    let mut us = Vec::new();
    let mut joined = env.clone();
    for e in es {
        let (u, env_i) = eval(table, e, env, tau, st)?;
        joined = env_union(&joined, &env_i)?;
        us.push(u);
    }
    Ok((us, joined))
}

fn unfold_object<'a>(
    u: &'a OpenValue,
    env: &'a Environment,
    src: &Expr,
) -> Result<(&'a Name, &'a [OpenValue]), RuntimeError> {
    match unfold(u, env) {
        Some(OpenValue::Obj(c, args)) => Ok((c, args)),
        Some(p) => Err(RuntimeError::PrimitiveMisuse(format!(
            "{p} used as an object"
        ))),
        None => Err(RuntimeError::UndeterminedReceiver(src.to_string())),
    }
}

fn unfold_prim(u: &OpenValue, env: &Environment, src: &Expr) -> Result<Prim, RuntimeError> {
    match unfold(u, env) {
        Some(OpenValue::Int(n)) => Ok(Prim::Int(*n)),
        Some(OpenValue::Bool(b)) => Ok(Prim::Bool(*b)),
        Some(o) => Err(RuntimeError::PrimitiveMisuse(format!(
            "object {o} used as a primitive"
        ))),
        None => Err(RuntimeError::UndeterminedReceiver(src.to_string())),
    }
}

/// Runs `e` from empty environment and trace with the given configuration.
pub fn run(table: &ClassTable, e: &Expr, cfg: &OpConfig) -> OpRun {
    let mut st = EvalState::new(cfg);
    let mut tau = CallTrace::new();
    let mut raw = None;
    let result = eval(table, e, &Environment::new(), &mut tau, &mut st).map(|(u, env)| {
        let full = Capsule::new_unchecked(u, env);
        let c = gc(&full);
        raw = Some(full);
        debug_assert!(
            cfg.mutation.is_some() || c.is_closed(),
            "capsule property violated"
        );
        if c.is_closed() {
            c.canonical()
        } else {
            c
        }
    });
    OpRun {
        result,
        log: st.log.take().unwrap_or_default(),
        hints: st.hints.take().unwrap_or_default(),
        raw,
        fuel_used: st.fuel_used(),
    }
}

/// `e, ∅, ∅ ⇓ u, σ`, garbage-collected and in canonical form.
pub fn eval_main(table: &ClassTable, e: &Expr) -> Result<Capsule, RuntimeError> {
    run(table, e, &OpConfig::default()).result
}
