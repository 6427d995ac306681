//! Canonical capsule form and its textual rendering.
//!
//! The text format is `v where x0 = u0; x1 = u1`, or just `v` when no
//! binding is reachable. Variables are numbered by first occurrence in a
//! depth-first walk starting from the open value and continuing through the
//! bindings in numbering order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::algebra::{gc, undetermined, unfold};
use crate::ast::{deep, name, Name, OpenValue};
use crate::capsule::{Capsule, Environment};

pub fn canonicalize(c: &Capsule) -> Capsule {
    let c = gc(c);
    let env = &c.env;
    let und = undetermined(env);

    // Every variable is redirected to the variable owning its constructor, or
    // to the representative of its undetermined class.
    let mut target: BTreeMap<Name, Name> = BTreeMap::new();
    for (x, _) in env {
        let mut cur = x.clone();
        if und.contains(x) {
            cur = und.representative(x).cloned().unwrap_or(cur);
        } else {
            while let Some(OpenValue::Var(y)) = env.get(&cur) {
                if !env.contains(y) {
                    break;
                }
                cur = y.clone();
            }
        }
        target.insert(x.clone(), cur);
    }
    let redirect = |u: &OpenValue| {
        u.map_vars(&|x| OpenValue::Var(target.get(x).cloned().unwrap_or_else(|| x.clone())))
    };
    let mut bindings: BTreeMap<Name, OpenValue> = BTreeMap::new();
    for (x, t) in &target {
        if x != t {
            continue;
        }
        let b = if und.contains(x) {
            OpenValue::Var(x.clone())
        } else {
            redirect(unfold(&OpenValue::Var(x.clone()), env).expect("determined"))
        };
        bindings.insert(x.clone(), b);
    }
    let open = redirect(&c.open);

    // Inline every determined binding that does not lie on a cycle.
    let cyclic: BTreeSet<Name> = bindings
        .keys()
        .filter(|x| on_cycle(x, &bindings))
        .cloned()
        .collect();
    let inlinable = |x: &Name| bindings.get(x).is_some_and(|b| !b.is_var()) && !cyclic.contains(x);
    fn inline(
        u: &OpenValue,
        bindings: &BTreeMap<Name, OpenValue>,
        inlinable: &dyn Fn(&Name) -> bool,
    ) -> OpenValue {
        deep(|| match u {
            OpenValue::Var(x) if inlinable(x) => inline(&bindings[x], bindings, inlinable),
            OpenValue::Obj(c, args) => OpenValue::Obj(
                c.clone(),
                args.iter()
                    .map(|a| inline(a, bindings, inlinable))
                    .collect(),
            ),
            other => other.clone(),
        })
    }
    let open = inline(&open, &bindings, &inlinable);
    let env: Environment = bindings
        .iter()
        .filter(|(x, _)| !inlinable(x))
        .map(|(x, b)| (x.clone(), inline(b, &bindings, &inlinable)))
        .collect();

    renumber(&gc(&Capsule::new_unchecked(open, env)))
}

fn on_cycle(start: &Name, bindings: &BTreeMap<Name, OpenValue>) -> bool {
    let mut seen = BTreeSet::new();
    let mut stack = Vec::new();
    if let Some(b) = bindings.get(start) {
        b.for_each_var(&mut |y| stack.push(y.clone()));
    }
    while let Some(y) = stack.pop() {
        if &y == start {
            return true;
        }
        if !seen.insert(y.clone()) {
            continue;
        }
        if let Some(b) = bindings.get(&y) {
            b.for_each_var(&mut |z| stack.push(z.clone()));
        }
    }
    false
}

/// Variables in first-occurrence order.
fn occurrence_order(c: &Capsule) -> Vec<Name> {
    let mut order: Vec<Name> = Vec::new();
    let mut seen = BTreeSet::new();
    let mut visit = |u: &OpenValue, order: &mut Vec<Name>| {
        u.for_each_var(&mut |x| {
            if seen.insert(x.clone()) {
                order.push(x.clone());
            }
        })
    };
    visit(&c.open, &mut order);
    let mut i = 0;
    while i < order.len() {
        if let Some(b) = c.env.get(&order[i]) {
            let b = b.clone();
            visit(&b, &mut order);
        }
        i += 1;
    }
    order
}

fn renumber(c: &Capsule) -> Capsule {
    let order = occurrence_order(c);
    let fresh: BTreeMap<Name, Name> = order
        .iter()
        .enumerate()
        .map(|(i, x)| (x.clone(), name(&format!("x{i}"))))
        .collect();
    let rn = |u: &OpenValue| {
        u.map_vars(&|x| OpenValue::Var(fresh.get(x).cloned().unwrap_or_else(|| x.clone())))
    };
    let env = c
        .env
        .iter()
        .map(|(x, u)| (fresh.get(x).cloned().unwrap_or_else(|| x.clone()), rn(u)))
        .collect();
    Capsule::new_unchecked(rn(&c.open), env)
}

/// Renders the canonical form of `c`.
pub fn canonical_text(c: &Capsule) -> String {
    let canon = canonicalize(c);
    let mut out = canon.open.to_string();
    let order = occurrence_order(&canon);
    let mut first = true;
    for x in &order {
        if let Some(b) = canon.env.get(x) {
            out.push_str(if first { " where " } else { "; " });
            first = false;
            let _ = write!(out, "{x} = {b}");
        }
    }
    out
}
