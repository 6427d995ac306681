//! Reference semantics used to cross-check the operational evaluator.
//!
//! Both judgements are computed as least fixpoints over a finite universe:
//! values are regular trees (see [`store`]) and the arbitrary value chosen for
//! `any` ranges over a finite candidate set. Answers found are genuine
//! derivations; absence of an answer is only conclusive when the search
//! reached a fixpoint within budget.

pub mod inductive;
pub mod intermediate;
pub mod store;
pub mod table;

use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;
use std::sync::Arc;

use crate::ast::{call_bindings, name, Expr, Name, OpenValue};
use crate::classtable::{ClassTable, MethodInfo};
use crate::runtime::{apply_binop, Prim};

pub use inductive::{derive_inductive_with_corules, InductiveSearch};
pub use intermediate::{check_sound, check_sound_with, derive_int, IntSearch, DEFAULT_REENTRY};
pub use store::{Label, ValueId, ValueStore};

/// Work units (goal expansions plus premise combinations) per search.
pub const DEFAULT_BUDGET: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Confirmed,
    Refuted,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Confirmed => "confirmed",
            Verdict::Refuted => "refuted",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Stored values appear in expressions as variables `@id`, a name no source
/// program can bind.
pub fn embed(v: ValueId) -> OpenValue {
    OpenValue::Var(name(&format!("@{v}")))
}

pub(crate) fn embedded(e: &Expr, store: &mut ValueStore) -> Option<ValueId> {
    match e {
        Expr::Var(x) => x.strip_prefix('@').and_then(|n| n.parse().ok()),
        Expr::Int(n) => Some(store.int(*n)),
        Expr::Bool(b) => Some(store.boolean(*b)),
        _ => None,
    }
}

#[derive(Debug)]
pub(crate) struct Interner<T> {
    items: Vec<T>,
    index: HashMap<T, u32>,
}

impl<T> Default for Interner<T> {
    fn default() -> Self {
        Interner {
            items: Vec::new(),
            index: HashMap::new(),
        }
    }
}

impl<T: Clone + Eq + Hash> Interner<T> {
    pub fn intern(&mut self, t: T) -> u32 {
        if let Some(&i) = self.index.get(&t) {
            return i;
        }
        let i = self.items.len() as u32;
        self.items.push(t.clone());
        self.index.insert(t, i);
        i
    }

    pub fn get(&self, i: u32) -> &T {
        &self.items[i as usize]
    }
}

/// A judgement whose answers are values annotated with `Ann`.
pub(crate) trait Judge {
    type Ann: Clone + Ord;
    fn classes(&self) -> &ClassTable;
    fn store(&mut self) -> &mut ValueStore;
    fn empty(&mut self) -> Self::Ann;
    fn join(&mut self, a: &Self::Ann, b: &Self::Ann) -> Self::Ann;
    /// Current answers of `e` in the context of the goal being expanded.
    fn sub(&mut self, e: &Expr) -> Vec<(ValueId, Self::Ann)>;
    fn charge(&mut self, units: u64) -> bool;
}

fn answers_of<J: Judge>(j: &mut J, e: &Expr) -> Vec<(ValueId, J::Ann)> {
    match embedded(e, j.store()) {
        Some(v) => {
            let a = j.empty();
            vec![(v, a)]
        }
        None => j.sub(e),
    }
}

/// All combinations of answers for a list of premises, annotations joined.
pub(crate) fn premises<J: Judge>(j: &mut J, es: &[&Expr]) -> Vec<(Vec<ValueId>, J::Ann)> {
    let empty = j.empty();
    let mut acc: Vec<(Vec<ValueId>, J::Ann)> = vec![(Vec::new(), empty)];
    for e in es {
        let answers = answers_of(j, e);
        if answers.is_empty() || !j.charge((acc.len() * answers.len()) as u64) {
            return Vec::new();
        }
        let mut next = Vec::with_capacity(acc.len() * answers.len());
        for (vs, a) in &acc {
            for (v, b) in &answers {
                let mut vs = vs.clone();
                vs.push(*v);
                let ab = j.join(a, b);
                next.push((vs, ab));
            }
        }
        acc = next;
    }
    acc
}

/// A resolved method invocation: receiver, arguments and the method found.
pub(crate) struct Invocation<Ann> {
    pub receiver: ValueId,
    pub args: Vec<ValueId>,
    pub method: Name,
    pub info: Arc<MethodInfo>,
    pub ann: Ann,
}

impl<Ann> Invocation<Ann> {
    pub fn bindings(&self) -> BTreeMap<Name, OpenValue> {
        let args: Vec<OpenValue> = self.args.iter().map(|&a| embed(a)).collect();
        call_bindings(embed(self.receiver), &self.info.params, &args)
    }
}

/// Rules other than method invocation; calls are returned as invocations
/// for the caller to apply its own rules.
pub(crate) enum Step<Ann> {
    Answers(Vec<(ValueId, Ann)>),
    Invoke(Vec<Invocation<Ann>>),
}

pub(crate) fn step<J: Judge>(j: &mut J, e: &Expr) -> Step<J::Ann> {
    if let Some(v) = embedded(e, j.store()) {
        let a = j.empty();
        return Step::Answers(vec![(v, a)]);
    }
    let mut out = Vec::new();
    match e {
        Expr::Var(_) | Expr::Any | Expr::Int(_) | Expr::Bool(_) => {}
        Expr::Field(target, f) => {
            for (v, a) in answers_of(j, target) {
                let Label::Obj(c) = j.store().label(v).clone() else {
                    continue;
                };
                let Ok(fields) = j.classes().fields(&c) else {
                    continue;
                };
                let Some(i) = fields.iter().position(|g| g == f) else {
                    continue;
                };
                if i < j.store().arity(v) {
                    out.push((j.store().child(v, i), a));
                }
            }
        }
        Expr::New(c, args) => {
            let es: Vec<&Expr> = args.iter().collect();
            let arity_ok = j
                .classes()
                .fields(c)
                .map(|fs| fs.len() == args.len())
                .unwrap_or(false);
            if arity_ok {
                for (vs, a) in premises(j, &es) {
                    out.push((j.store().construct(c, &vs), a));
                }
            }
        }
        Expr::BinOp(op, l, r) => {
            for (vs, a) in premises(j, &[l, r]) {
                let (Some(x), Some(y)) = (prim(j.store(), vs[0]), prim(j.store(), vs[1])) else {
                    continue;
                };
                match apply_binop(*op, x, y) {
                    Ok(Prim::Int(n)) => out.push((j.store().int(n), a)),
                    Ok(Prim::Bool(b)) => out.push((j.store().boolean(b), a)),
                    Err(_) => {}
                }
            }
        }
        Expr::If(c, t, f) => {
            for (v, a) in answers_of(j, c) {
                let branch = match j.store().label(v) {
                    Label::Bool(true) => t,
                    Label::Bool(false) => f,
                    _ => continue,
                };
                for (w, b) in answers_of(j, branch) {
                    let ab = j.join(&a, &b);
                    out.push((w, ab));
                }
            }
        }
        Expr::Call(target, m, args) => {
            let es: Vec<&Expr> = std::iter::once(&**target).chain(args.iter()).collect();
            let mut calls = Vec::new();
            for (mut vs, ann) in premises(j, &es) {
                let receiver = vs.remove(0);
                let Label::Obj(c) = j.store().label(receiver).clone() else {
                    continue;
                };
                let Ok(info) = j.classes().mbody(&c, m) else {
                    continue;
                };
                if info.params.len() != vs.len() {
                    continue;
                }
                let info = info.clone();
                calls.push(Invocation {
                    receiver,
                    args: vs,
                    method: m.clone(),
                    info,
                    ann,
                });
            }
            return Step::Invoke(calls);
        }
    }
    Step::Answers(out)
}

fn prim(store: &ValueStore, v: ValueId) -> Option<Prim> {
    match store.label(v) {
        Label::Int(n) => Some(Prim::Int(*n)),
        Label::Bool(b) => Some(Prim::Bool(*b)),
        _ => None,
    }
}
