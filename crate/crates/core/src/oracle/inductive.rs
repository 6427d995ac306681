//! Inductive interpretation of big-step FJ extended with the corules
//! `v ⇓ v` and "a call evaluates to its codefinition".

use std::collections::HashMap;

use crate::ast::{name, substitute, Expr, Name, ANY};
use crate::capsule::Capsule;
use crate::classtable::ClassTable;

use super::store::{ValueId, ValueStore};
use super::table::{GoalId, Table};
use super::{embed, step, Judge, Step, Verdict};

type CallKey = (ValueId, Name, Vec<ValueId>);

struct Search<'t> {
    classes: &'t ClassTable,
    store: ValueStore,
    candidates: Vec<ValueId>,
    call_candidates: HashMap<CallKey, Vec<ValueId>>,
}

struct Ctx<'a, 't> {
    s: &'a mut Search<'t>,
    tab: &'a mut Table<Expr, (ValueId, ())>,
    goal: GoalId,
}

impl Judge for Ctx<'_, '_> {
    type Ann = ();

    fn classes(&self) -> &ClassTable {
        self.s.classes
    }

    fn store(&mut self) -> &mut ValueStore {
        &mut self.s.store
    }

    fn empty(&mut self) {}

    fn join(&mut self, _: &(), _: &()) {}

    fn sub(&mut self, e: &Expr) -> Vec<(ValueId, ())> {
        self.tab.read(self.goal, e.clone())
    }

    fn charge(&mut self, units: u64) -> bool {
        self.tab.charge(units)
    }
}

fn expand(
    s: &mut Search<'_>,
    tab: &mut Table<Expr, (ValueId, ())>,
    goal: GoalId,
) -> Vec<(ValueId, ())> {
    let e = tab.goal(goal).clone();
    let mut cx = Ctx { s, tab, goal };
    let calls = match step(&mut cx, &e) {
        Step::Answers(out) => return out,
        Step::Invoke(calls) => calls,
    };
    let mut out = Vec::new();
    for inv in calls {
        let bindings = inv.bindings();
        let body = substitute(&inv.info.body, &bindings);
        out.extend(cx.tab.read(goal, body));
        let Some(co) = &inv.info.cobody else { continue };
        let choices: Vec<Option<ValueId>> = if co.contains_any() {
            let key = (inv.receiver, inv.method.clone(), inv.args.clone());
            let pool = cx.s.call_candidates.get(&key).unwrap_or(&cx.s.candidates);
            pool.iter().copied().map(Some).collect()
        } else {
            vec![None]
        };
        for u in choices {
            if !cx.tab.charge(1) {
                return out;
            }
            let mut b = bindings.clone();
            if let Some(u) = u {
                b.insert(name(ANY), embed(u));
            }
            out.extend(cx.tab.read(goal, substitute(co, &b)));
        }
    }
    out
}

/// A reusable search: values are interned once and `any` ranges over the
/// registered candidates.
pub struct InductiveSearch<'t> {
    s: Search<'t>,
    budget: u64,
}

impl<'t> InductiveSearch<'t> {
    pub fn new(classes: &'t ClassTable, budget: u64) -> Self {
        Self::with_store(classes, ValueStore::new(), budget)
    }

    /// Continues with values already interned elsewhere.
    pub fn with_store(classes: &'t ClassTable, store: ValueStore, budget: u64) -> Self {
        let s = Search {
            classes,
            store,
            candidates: Vec::new(),
            call_candidates: HashMap::new(),
        };
        InductiveSearch { s, budget }
    }

    pub fn store(&mut self) -> &mut ValueStore {
        &mut self.s.store
    }

    pub fn value(&mut self, c: &Capsule) -> Option<ValueId> {
        self.s.store.intern_capsule(c).ok()
    }

    /// Makes `v` and its subvalues available for `any`.
    pub fn add_candidate(&mut self, v: ValueId) {
        for u in self.s.store.subvalues(v) {
            if !self.s.candidates.contains(&u) {
                self.s.candidates.push(u);
            }
        }
    }

    /// Makes `v` the only choices for `any` when the codefinition of
    /// `receiver.method(args)` is used; other calls keep the shared ones.
    pub fn add_call_candidate(
        &mut self,
        receiver: ValueId,
        method: &str,
        args: &[ValueId],
        v: ValueId,
    ) {
        let pool = self
            .s
            .call_candidates
            .entry((receiver, name(method), args.to_vec()))
            .or_default();
        if !pool.contains(&v) {
            pool.push(v);
        }
    }

    /// Whether `e ⇓ v`; `e` may mention stored values through [`embed`].
    pub fn derives(&mut self, e: &Expr, v: ValueId) -> Verdict {
        let mut tab: Table<Expr, (ValueId, ())> = Table::new(self.budget);
        let root = tab.root(e.clone());
        let complete = tab.solve(&mut self.s, expand, |t| t.answers(root).contains(&(v, ())));
        if tab.answers(root).contains(&(v, ())) {
            Verdict::Confirmed
        } else if complete {
            Verdict::Refuted
        } else {
            Verdict::Inconclusive
        }
    }
}

/// Whether `e ⇓ v` is derivable in the inductive system with corules, with
/// `any` ranging over subvalues of `v`, of values written in `e` and of
/// `extra`.
pub fn derive_inductive_with_corules(
    classes: &ClassTable,
    e: &Expr,
    v: &Capsule,
    extra: &[Capsule],
    budget: u64,
) -> Verdict {
    let mut search = InductiveSearch::new(classes, budget);
    let Some(target) = search.value(v) else {
        return Verdict::Refuted;
    };
    search.add_candidate(target);
    let mut written = Vec::new();
    e.walk(&mut |sub| {
        if let Some(u) = sub.as_open_value() {
            written.push(Capsule::ground(u));
        }
    });
    for c in written.iter().chain(extra) {
        if let Some(id) = search.value(c) {
            search.add_candidate(id);
        }
    }
    search.derives(e, target)
}
