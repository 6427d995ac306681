//! Unfolding, environment union, undetermined variables, strict renamings,
//! capsule equivalence and tree expansion.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use thiserror::Error;

use crate::ast::{Name, OpenValue};
use crate::capsule::{Call, Capsule, Environment};

/// Follows variable indirections to the first non-variable.
///
/// Returns `None` on an unguarded variable cycle (and on unbound variables).
pub fn unfold<'a>(u: &'a OpenValue, env: &'a Environment) -> Option<&'a OpenValue> {
    let mut cur = u;
    // Each step consumes one binding; more steps than bindings means a cycle.
    for _ in 0..=env.len() {
        match cur {
            OpenValue::Var(x) => cur = env.get(x)?,
            other => return Some(other),
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("environments disagree on `{var}`: {left} vs {right}")]
pub struct UnionConflict {
    pub var: Name,
    pub left: OpenValue,
    pub right: OpenValue,
}

/// `σ1 ⊔ σ2`, defined when the two agree syntactically on their shared domain.
pub fn env_union(a: &Environment, b: &Environment) -> Result<Environment, UnionConflict> {
    let (big, small) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let mut out = big.clone();
    for (x, u) in small {
        match big.get(x) {
            Some(v) if v != u => {
                let (left, right) = if std::ptr::eq(big, a) { (v, u) } else { (u, v) };
                return Err(UnionConflict {
                    var: x.clone(),
                    left: left.clone(),
                    right: right.clone(),
                });
            }
            Some(_) => {}
            None => {
                out.insert(x.clone(), u.clone());
            }
        }
    }
    Ok(out)
}

/// The undetermined variables of an environment and their partition into
/// classes of the least equivalence containing `σ(x) = y`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UndeterminedSet {
    class_of: BTreeMap<Name, usize>,
    classes: Vec<BTreeSet<Name>>,
}

impl UndeterminedSet {
    pub fn contains(&self, x: &str) -> bool {
        self.class_of.contains_key(x)
    }

    pub fn class_index(&self, x: &str) -> Option<usize> {
        self.class_of.get(x).copied()
    }

    pub fn classes(&self) -> &[BTreeSet<Name>] {
        &self.classes
    }

    /// Smallest variable of the class of `x`.
    pub fn representative(&self, x: &str) -> Option<&Name> {
        self.class_index(x).and_then(|i| self.classes[i].first())
    }

    pub fn vars(&self) -> impl Iterator<Item = &Name> {
        self.class_of.keys()
    }

    pub fn is_empty(&self) -> bool {
        self.class_of.is_empty()
    }

    pub fn same_class(&self, x: &str, y: &str) -> bool {
        matches!((self.class_index(x), self.class_index(y)), (Some(a), Some(b)) if a == b)
    }
}

pub fn undetermined(env: &Environment) -> UndeterminedSet {
    let vars: Vec<&Name> = env
        .iter()
        .filter(|(x, _)| unfold(&OpenValue::Var((*x).clone()), env).is_none())
        .map(|(x, _)| x)
        .collect();
    let index: BTreeMap<&Name, usize> = vars.iter().enumerate().map(|(i, x)| (*x, i)).collect();
    let mut parent: Vec<usize> = (0..vars.len()).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for (i, x) in vars.iter().enumerate() {
        if let Some(OpenValue::Var(y)) = env.get(x) {
            if let Some(&j) = index.get(y) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut root_to_class = BTreeMap::new();
    let mut out = UndeterminedSet::default();
    for (i, x) in vars.iter().enumerate() {
        let r = find(&mut parent, i);
        let c = *root_to_class.entry(r).or_insert_with(|| {
            out.classes.push(BTreeSet::new());
            out.classes.len() - 1
        });
        out.classes[c].insert((*x).clone());
        out.class_of.insert((*x).clone(), c);
    }
    out
}

/// A relation between undetermined classes of two environments inducing a
/// partial bijection; classes are named by their representatives.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Renaming {
    left_class: BTreeMap<Name, Name>,
    right_class: BTreeMap<Name, Name>,
    forward: BTreeMap<Name, Name>,
}

impl Renaming {
    fn for_envs(left: &UndeterminedSet, right: &UndeterminedSet) -> Self {
        let reps = |u: &UndeterminedSet| {
            u.vars()
                .map(|x| {
                    (
                        x.clone(),
                        u.representative(x).cloned().unwrap_or_else(|| x.clone()),
                    )
                })
                .collect()
        };
        Renaming {
            left_class: reps(left),
            right_class: reps(right),
            forward: BTreeMap::new(),
        }
    }

    /// Adds `[x] R [y]`; fails when the result would not be a partial bijection.
    fn relate(&mut self, x: &str, y: &str) -> bool {
        let (Some(cx), Some(cy)) = (self.left_class.get(x), self.right_class.get(y)) else {
            return false;
        };
        if let Some(prev) = self.forward.get(cx) {
            return prev == cy;
        }
        if self.forward.values().any(|v| v == cy) {
            return false;
        }
        self.forward.insert(cx.clone(), cy.clone());
        true
    }

    /// Whether the class of `x` (left) is related to the class of `y` (right).
    pub fn relates(&self, x: &str, y: &str) -> bool {
        match (self.left_class.get(x), self.right_class.get(y)) {
            (Some(cx), Some(cy)) => self.forward.get(cx) == Some(cy),
            _ => false,
        }
    }

    /// Related class representatives.
    pub fn pairs(&self) -> impl Iterator<Item = (&Name, &Name)> {
        self.forward.iter()
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn inverse(&self) -> Renaming {
        Renaming {
            left_class: self.right_class.clone(),
            right_class: self.left_class.clone(),
            forward: self
                .forward
                .iter()
                .map(|(a, b)| (b.clone(), a.clone()))
                .collect(),
        }
    }

    /// `then ∘ self`: relates `[x]` to `[z]` when `[x] self [y]` and `[y] then [z]`.
    /// Both renamings must share the middle environment.
    pub fn compose(&self, then: &Renaming) -> Renaming {
        let forward = self
            .forward
            .iter()
            .filter_map(|(a, b)| {
                let mid = then.left_class.get(b)?;
                then.forward.get(mid).map(|c| (a.clone(), c.clone()))
            })
            .collect();
        Renaming {
            left_class: self.left_class.clone(),
            right_class: then.right_class.clone(),
            forward,
        }
    }
}

impl fmt::Display for Renaming {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (a, b)) in self.forward.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "[{a}]~[{b}]")?;
        }
        f.write_str("}")
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum LeafPolicy<'r> {
    /// Collect the least relation, then force shared undetermined variables.
    Strict,
    /// Collect the least relation only.
    Loose,
    /// Check against a given relation.
    Given(&'r Renaming),
}

/// Coinductive product traversal over pairs of open values.
fn bisimulate(
    roots: &[(&OpenValue, &OpenValue)],
    left: &Environment,
    right: &Environment,
    policy: LeafPolicy<'_>,
) -> Option<Renaming> {
    let ul = undetermined(left);
    let ur = undetermined(right);
    let mut rel = Renaming::for_envs(&ul, &ur);
    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    let mut work: Vec<(&OpenValue, &OpenValue)> = roots.to_vec();
    while let Some((a, b)) = work.pop() {
        match (unfold(a, left), unfold(b, right)) {
            (Some(ta), Some(tb)) => {
                let key = (
                    ta as *const OpenValue as usize,
                    tb as *const OpenValue as usize,
                );
                if !seen.insert(key) {
                    continue;
                }
                match (ta, tb) {
                    (OpenValue::Obj(c1, a1), OpenValue::Obj(c2, a2)) => {
                        if c1 != c2 || a1.len() != a2.len() {
                            return None;
                        }
                        work.extend(a1.iter().zip(a2.iter()));
                    }
                    (OpenValue::Int(m), OpenValue::Int(n)) if m == n => {}
                    (OpenValue::Bool(p), OpenValue::Bool(q)) if p == q => {}
                    _ => return None,
                }
            }
            (None, None) => {
                let (OpenValue::Var(x), OpenValue::Var(y)) = (a, b) else {
                    return None;
                };
                match (left.contains(x), right.contains(y)) {
                    (true, true) => {
                        let ok = match policy {
                            LeafPolicy::Given(r) => r.relates(x, y),
                            _ => rel.relate(x, y),
                        };
                        if !ok {
                            return None;
                        }
                    }
                    // Unbound variables only arise from ill-formed capsules;
                    // they are rigid and match only themselves.
                    (false, false) if x == y => {}
                    _ => return None,
                }
            }
            _ => return None,
        }
    }
    match policy {
        LeafPolicy::Strict => {
            for x in ul.vars() {
                if ur.contains(x) && !rel.relate(x, x) {
                    return None;
                }
            }
            Some(rel)
        }
        LeafPolicy::Loose => Some(rel),
        LeafPolicy::Given(r) => Some(r.clone()),
    }
}

/// Capsule equivalence: `Some(R)` iff the capsules are bisimilar under a
/// strict renaming `R`.
pub fn equivalent(c1: &Capsule, c2: &Capsule) -> Option<Renaming> {
    bisimulate(
        &[(&c1.open, &c2.open)],
        &c1.env,
        &c2.env,
        LeafPolicy::Strict,
    )
}

/// Bisimilarity under some (not necessarily strict) renaming; this is the
/// relation characterizing equality of denoted value sets.
pub fn equivalent_up_to_renaming(c1: &Capsule, c2: &Capsule) -> Option<Renaming> {
    bisimulate(&[(&c1.open, &c2.open)], &c1.env, &c2.env, LeafPolicy::Loose)
}

/// Bisimilarity under the given renaming.
pub fn bisimilar_under(c1: &Capsule, c2: &Capsule, r: &Renaming) -> bool {
    bisimulate(
        &[(&c1.open, &c2.open)],
        &c1.env,
        &c2.env,
        LeafPolicy::Given(r),
    )
    .is_some()
}

/// Capsule equivalence extended by congruence to calls in one environment.
pub fn equivalent_calls(a: &Call, b: &Call, env: &Environment) -> bool {
    if a.method != b.method || a.args.len() != b.args.len() {
        return false;
    }
    let roots: Vec<_> = a.components().zip(b.components()).collect();
    bisimulate(&roots, env, env, LeafPolicy::Strict).is_some()
}

/// Finite truncation of a capsule's tree expansion.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Tree {
    Obj(Name, Vec<Tree>),
    Int(i64),
    Bool(bool),
    /// Undetermined variable.
    Var(Name),
    /// Unexplored remainder below the depth bound.
    Cut,
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tree::Obj(c, args) => {
                write!(f, "new {c}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Tree::Int(n) => write!(f, "{n}"),
            Tree::Bool(b) => write!(f, "{b}"),
            Tree::Var(x) => write!(f, "{x}"),
            Tree::Cut => f.write_str("⊤"),
        }
    }
}

/// Unrolls `c` through at most `depth` levels of constructors with arguments.
pub fn tree_expand(c: &Capsule, depth: usize) -> Tree {
    expand(&c.open, &c.env, depth)
}

fn expand(u: &OpenValue, env: &Environment, depth: usize) -> Tree {
    match unfold(u, env) {
        None => match u {
            OpenValue::Var(x) => Tree::Var(x.clone()),
            _ => unreachable!("non-variables always unfold"),
        },
        Some(OpenValue::Obj(c, args)) if args.is_empty() => Tree::Obj(c.clone(), vec![]),
        Some(OpenValue::Obj(_, _)) if depth == 0 => Tree::Cut,
        Some(OpenValue::Obj(c, args)) => Tree::Obj(
            c.clone(),
            args.iter().map(|a| expand(a, env, depth - 1)).collect(),
        ),
        Some(OpenValue::Int(n)) => Tree::Int(*n),
        Some(OpenValue::Bool(b)) => Tree::Bool(*b),
        Some(OpenValue::Var(_)) => unreachable!("unfold never yields a variable"),
    }
}

/// Tree equality `=R` where undetermined leaves must be related by `r`.
pub fn trees_equal_modulo(t1: &Tree, t2: &Tree, r: &Renaming) -> bool {
    match (t1, t2) {
        (Tree::Obj(c1, a1), Tree::Obj(c2, a2)) => {
            c1 == c2
                && a1.len() == a2.len()
                && a1.iter().zip(a2).all(|(x, y)| trees_equal_modulo(x, y, r))
        }
        (Tree::Var(x), Tree::Var(y)) => r.relates(x, y),
        (a, b) => a == b,
    }
}

/// Restricts the environment to variables reachable from the open value.
pub fn gc(c: &Capsule) -> Capsule {
    let reachable = reachable_vars(&c.open, &c.env);
    let env = c
        .env
        .iter()
        .filter(|(x, _)| reachable.contains(*x))
        .map(|(x, u)| (x.clone(), u.clone()))
        .collect();
    Capsule::new_unchecked(c.open.clone(), env)
}

/// Variables reachable from `u` through the environment, including `u`'s own.
pub fn reachable_vars(u: &OpenValue, env: &Environment) -> BTreeSet<Name> {
    let mut seen = BTreeSet::new();
    let mut stack = Vec::new();
    u.for_each_var(&mut |x| stack.push(x.clone()));
    while let Some(x) = stack.pop() {
        if !seen.insert(x.clone()) {
            continue;
        }
        if let Some(b) = env.get(&x) {
            b.for_each_var(&mut |y| {
                if !seen.contains(y) {
                    stack.push(y.clone());
                }
            });
        }
    }
    seen
}
