//! The intermediate judgement `⊨ρ;S e ⇓ v ⊣ S′`, where `ρ` maps calls to
//! values and `S` is the set of calls currently being evaluated.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::ast::{name, substitute, Expr, Name, ANY};
use crate::capsule::Capsule;
use crate::classtable::ClassTable;
use crate::op::OpRun;

use super::inductive::InductiveSearch;
use super::store::{UnboundVar, ValueId, ValueStore};
use super::table::{GoalId, Table};
use super::{embed, step, Interner, Invocation, Judge, Step, Verdict};

pub type CallId = u32;
type SetId = u32;
type RhoId = u32;
/// Expression, `ρ`, `S` and the remaining re-entries of calls already in `S`.
type Goal = (Expr, RhoId, SetId, u8);
type Answer = (ValueId, SetId);

/// Answers of one search; `complete` when the fixpoint was reached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivations {
    pub answers: Vec<(ValueId, Vec<CallId>)>,
    pub complete: bool,
}

impl Derivations {
    pub fn contains(&self, v: ValueId, calls: &[CallId]) -> bool {
        let mut want = calls.to_vec();
        want.sort_unstable();
        want.dedup();
        self.answers.iter().any(|(w, s)| *w == v && *s == want)
    }
}

#[derive(Debug)]
pub struct IntSearch<'t> {
    classes: &'t ClassTable,
    pub store: ValueStore,
    calls: Interner<(ValueId, Name, Vec<ValueId>)>,
    sets: Interner<BTreeSet<CallId>>,
    rhos: Interner<BTreeMap<CallId, ValueId>>,
    candidates: BTreeSet<ValueId>,
    call_candidates: HashMap<CallId, BTreeSet<ValueId>>,
    budget: u64,
    reentry: u8,
}

/// How often, along one branch, rule invk-ok may evaluate the body of a call
/// that is already in `S` instead of using its codefinition.
pub const DEFAULT_REENTRY: u8 = 1;

impl<'t> IntSearch<'t> {
    pub fn new(classes: &'t ClassTable, budget: u64) -> Self {
        IntSearch {
            classes,
            store: ValueStore::new(),
            calls: Interner::default(),
            sets: Interner::default(),
            rhos: Interner::default(),
            candidates: BTreeSet::new(),
            call_candidates: HashMap::new(),
            budget,
            reentry: DEFAULT_REENTRY,
        }
    }

    pub fn with_reentry(mut self, reentry: u8) -> Self {
        self.reentry = reentry;
        self
    }

    pub fn value(&mut self, c: &Capsule) -> Result<ValueId, UnboundVar> {
        self.store.intern_capsule(c)
    }

    pub fn call(&mut self, receiver: ValueId, method: &str, args: &[ValueId]) -> CallId {
        self.calls.intern((receiver, name(method), args.to_vec()))
    }

    /// Makes `v` and all its subvalues available as choices for `any`.
    pub fn add_candidate(&mut self, v: ValueId) {
        let subs = self.store.subvalues(v);
        self.candidates.extend(subs);
    }

    /// Makes `v` a choice for `any` in codefinitions of `c` only.
    pub fn add_call_candidate(&mut self, c: CallId, v: ValueId) {
        self.call_candidates.entry(c).or_default().insert(v);
    }

    /// Choices for `any` when the codefinition of `c` is used: the values
    /// registered for `c` if any, the shared candidates otherwise.
    pub fn candidates(&self, c: CallId) -> Vec<ValueId> {
        match self.call_candidates.get(&c) {
            Some(own) => own.iter().copied().collect(),
            None => self.candidates.iter().copied().collect(),
        }
    }

    /// All `(v, S′)` with `⊨ρ;S e ⇓ v ⊣ S′`, stopping early once `target`
    /// is found.
    pub fn derive(
        &mut self,
        e: &Expr,
        rho: &[(CallId, ValueId)],
        s: &[CallId],
        target: Option<(ValueId, &[CallId])>,
    ) -> Derivations {
        let rho = self.rhos.intern(rho.iter().copied().collect());
        let set = self.sets.intern(s.iter().copied().collect());
        let target = target.map(|(v, cs)| (v, self.sets.intern(cs.iter().copied().collect())));
        let mut tab: Table<Goal, Answer> = Table::new(self.budget);
        let root = tab.root((e.clone(), rho, set, self.reentry));
        let complete = tab.solve(self, expand, |t| {
            target.is_some_and(|a| t.answers(root).contains(&a))
        });
        Derivations {
            answers: tab
                .answers(root)
                .iter()
                .map(|&(v, s)| (v, self.sets.get(s).iter().copied().collect()))
                .collect(),
            complete,
        }
    }

    /// An inductive search over the same values and choices for `any`.
    pub fn inductive(&self) -> InductiveSearch<'t> {
        let mut ind = InductiveSearch::with_store(self.classes, self.store.clone(), self.budget);
        for &v in &self.candidates {
            ind.add_candidate(v);
        }
        for (&c, vs) in &self.call_candidates {
            let (r, m, args) = self.calls.get(c);
            for &v in vs {
                ind.add_call_candidate(*r, m, args, v);
            }
        }
        ind
    }

    /// A search whose choices for `any` come from an operational run: the
    /// subvalues of its result for every call, and for each call made the
    /// values the evaluator returned for it. Also returns the result's id.
    pub fn from_run(classes: &'t ClassTable, run: &OpRun, budget: u64) -> (Self, Option<ValueId>) {
        let mut s = IntSearch::new(classes, budget);
        let target = match (&run.raw, &run.result) {
            (Some(raw), _) => s.value(raw).ok(),
            (None, Ok(result)) => s.value(result).ok(),
            (None, Err(_)) => None,
        };
        if let Some(t) = target {
            s.add_candidate(t);
        }
        if let Some(raw) = &run.raw {
            for (call, u) in &run.hints {
                let mut ids = Vec::with_capacity(call.args.len() + 2);
                for w in call.components().chain(std::iter::once(u)) {
                    match s.store.intern_open(w, &raw.env) {
                        Ok(id) => ids.push(id),
                        Err(_) => break,
                    }
                }
                if ids.len() == call.args.len() + 2 {
                    let v = ids.pop().unwrap_or_default();
                    let c = s.call(ids[0], &call.method, &ids[1..]);
                    s.add_call_candidate(c, v);
                }
            }
        }
        (s, target)
    }

    fn set_with(&mut self, s: SetId, c: CallId) -> SetId {
        let mut t = self.sets.get(s).clone();
        t.insert(c);
        self.sets.intern(t)
    }

    fn set_without(&mut self, s: SetId, c: CallId) -> SetId {
        let mut t = self.sets.get(s).clone();
        t.remove(&c);
        self.sets.intern(t)
    }
}

struct Ctx<'a, 't> {
    s: &'a mut IntSearch<'t>,
    tab: &'a mut Table<Goal, Answer>,
    goal: GoalId,
    rho: RhoId,
    set: SetId,
    left: u8,
}

impl Judge for Ctx<'_, '_> {
    type Ann = SetId;

    fn classes(&self) -> &ClassTable {
        self.s.classes
    }

    fn store(&mut self) -> &mut ValueStore {
        &mut self.s.store
    }

    fn empty(&mut self) -> SetId {
        self.s.sets.intern(BTreeSet::new())
    }

    fn join(&mut self, a: &SetId, b: &SetId) -> SetId {
        if a == b {
            return *a;
        }
        let mut t = self.s.sets.get(*a).clone();
        t.extend(self.s.sets.get(*b).iter().copied());
        self.s.sets.intern(t)
    }

    fn sub(&mut self, e: &Expr) -> Vec<Answer> {
        self.tab
            .read(self.goal, (e.clone(), self.rho, self.set, self.left))
    }

    fn charge(&mut self, units: u64) -> bool {
        self.tab.charge(units)
    }
}

fn expand(s: &mut IntSearch<'_>, tab: &mut Table<Goal, Answer>, goal: GoalId) -> Vec<Answer> {
    let (e, rho, set, left) = tab.goal(goal).clone();
    let mut cx = Ctx {
        s,
        tab,
        goal,
        rho,
        set,
        left,
    };
    match step(&mut cx, &e) {
        Step::Answers(out) => out,
        Step::Invoke(calls) => {
            let mut out = Vec::new();
            for inv in calls {
                invoke(&mut cx, inv, &mut out);
            }
            out
        }
    }
}

fn invoke(cx: &mut Ctx<'_, '_>, inv: Invocation<SetId>, out: &mut Vec<Answer>) {
    let c =
        cx.s.calls
            .intern((inv.receiver, inv.method.clone(), inv.args.clone()));
    let in_s = cx.s.sets.get(cx.set).contains(&c);
    let looked_up = cx.s.rhos.get(cx.rho).get(&c).copied();

    // look-up
    if let Some(v) = looked_up {
        out.push((v, inv.ann));
    }

    // invk-ok and invk-check share the second premise.
    let bindings = inv.bindings();
    let body = substitute(&inv.info.body, &bindings);
    let extended = cx.s.set_with(cx.set, c);
    let body_goal = match (in_s, cx.left) {
        (false, left) => Some((body.clone(), cx.rho, extended, left)),
        (true, 0) => None,
        (true, left) => Some((body.clone(), cx.rho, extended, left - 1)),
    };
    let body_answers = match body_goal {
        Some(g) => cx.tab.read(cx.goal, g),
        None => Vec::new(),
    };
    for (v, s1) in body_answers {
        let c_in_s1 = cx.s.sets.get(s1).contains(&c);
        if !c_in_s1 || in_s {
            let a = cx.join(&inv.ann, &s1);
            out.push((v, a));
        } else {
            let mut rho2 = cx.s.rhos.get(cx.rho).clone();
            rho2.insert(c, v);
            let rho2 = cx.s.rhos.intern(rho2);
            let checked = cx.tab.read(cx.goal, (body.clone(), rho2, cx.set, cx.left));
            if checked.iter().any(|(w, _)| *w == v) {
                let rest = cx.s.set_without(s1, c);
                let a = cx.join(&inv.ann, &rest);
                out.push((v, a));
            }
        }
    }

    // corec
    if in_s && looked_up.is_none() {
        let Some(co) = inv.info.cobody.clone() else {
            return;
        };
        let choices: Vec<Option<ValueId>> = if co.contains_any() {
            cx.s.candidates(c).into_iter().map(Some).collect()
        } else {
            vec![None]
        };
        let with_c = cx.s.set_with(inv.ann, c);
        for u in choices {
            if !cx.tab.charge(1) {
                return;
            }
            let mut b = bindings.clone();
            if let Some(u) = u {
                b.insert(name(ANY), embed(u));
            }
            let e2 = substitute(&co, &b);
            for (v, s1) in cx.tab.read(cx.goal, (e2, cx.rho, cx.set, cx.left)) {
                let a = cx.join(&with_c, &s1);
                out.push((v, a));
            }
        }
    }
}

/// `⊨∅;∅ e ⇓ v ⊣ S′` for all reachable `(v, S′)`, with `any` ranging over
/// the given capsules and their subvalues.
pub fn derive_int(
    classes: &ClassTable,
    e: &Expr,
    candidates: &[Capsule],
    budget: u64,
) -> (Vec<(Capsule, usize)>, bool) {
    let mut s = IntSearch::new(classes, budget);
    for c in candidates {
        if let Ok(v) = s.value(c) {
            s.add_candidate(v);
        }
    }
    let d = s.derive(e, &[], &[], None);
    let out = d
        .answers
        .iter()
        .map(|(v, cs)| (s.store.to_capsule(*v), cs.len()))
        .collect();
    (out, d.complete)
}

/// Checks that an operational result is derivable as `⊨∅;∅ e ⇓ v ⊣ ∅`.
///
/// A refutation means no derivation exists within the re-entry bound and
/// with `any` drawn from the values the evaluator produced for the call at
/// hand, or from the subvalues of the result for calls it never made. Errors are vacuously
/// sound. A result that is not a closed capsule is refuted outright.
pub fn check_sound(classes: &ClassTable, e: &Expr, run: &OpRun, budget: u64) -> Verdict {
    check_sound_with(classes, e, run, budget, DEFAULT_REENTRY)
}

/// [`check_sound`] with an explicit re-entry bound.
pub fn check_sound_with(
    classes: &ClassTable,
    e: &Expr,
    run: &OpRun,
    budget: u64,
    reentry: u8,
) -> Verdict {
    let Ok(result) = &run.result else {
        return Verdict::Confirmed;
    };
    if !result.is_closed() {
        return Verdict::Refuted;
    }
    let (s, target) = IntSearch::from_run(classes, run, budget);
    let Some(target) = target else {
        return Verdict::Refuted;
    };
    let mut s = s.with_reentry(reentry);
    let d = s.derive(e, &[], &[], Some((target, &[])));
    if d.contains(target, &[]) {
        Verdict::Confirmed
    } else if d.complete {
        Verdict::Refuted
    } else {
        Verdict::Inconclusive
    }
}
