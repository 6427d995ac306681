//! Environments, capsules and calls: the value forms of the operational semantics.

use std::collections::btree_map;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::ast::{FreeVars, Name, OpenValue};

/// Finite map from variables to open values, ordered for reproducible iteration.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Environment(BTreeMap<Name, OpenValue>);

impl Environment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, x: &str) -> Option<&OpenValue> {
        self.0.get(x)
    }

    pub fn contains(&self, x: &str) -> bool {
        self.0.contains_key(x)
    }

    pub fn insert(&mut self, x: Name, u: OpenValue) -> Option<OpenValue> {
        self.0.insert(x, u)
    }

    /// `σ[x := u]`
    pub fn with(&self, x: Name, u: OpenValue) -> Self {
        let mut out = self.clone();
        out.insert(x, u);
        out
    }

    pub fn remove(&mut self, x: &str) -> Option<OpenValue> {
        self.0.remove(x)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> btree_map::Iter<'_, Name, OpenValue> {
        self.0.iter()
    }

    pub fn domain(&self) -> impl Iterator<Item = &Name> {
        self.0.keys()
    }

    /// Every binding's free variables are bound.
    pub fn is_closed(&self) -> bool {
        self.0
            .values()
            .all(|u| u.free_vars().iter().all(|y| self.contains(y)))
    }

    /// `self ≤ other`: `other` extends `self` without changing any binding.
    pub fn is_contained_in(&self, other: &Environment) -> bool {
        self.0.len() <= other.0.len() && self.0.iter().all(|(x, u)| other.get(x) == Some(u))
    }

    pub fn into_inner(self) -> BTreeMap<Name, OpenValue> {
        self.0
    }
}

impl FromIterator<(Name, OpenValue)> for Environment {
    fn from_iter<I: IntoIterator<Item = (Name, OpenValue)>>(iter: I) -> Self {
        Environment(iter.into_iter().collect())
    }
}

impl From<BTreeMap<Name, OpenValue>> for Environment {
    fn from(m: BTreeMap<Name, OpenValue>) -> Self {
        Environment(m)
    }
}

impl<'a> IntoIterator for &'a Environment {
    type Item = (&'a Name, &'a OpenValue);
    type IntoIter = btree_map::Iter<'a, Name, OpenValue>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// An open value together with an environment binding all of its variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Capsule {
    pub open: OpenValue,
    pub env: Environment,
}

impl Capsule {
    pub fn new(open: OpenValue, env: Environment) -> Self {
        let c = Capsule { open, env };
        debug_assert!(c.is_closed(), "capsule property violated: {c:?}");
        c
    }

    /// Builds a capsule without checking the capsule property. Used for
    /// deliberately broken evaluator variants.
    pub fn new_unchecked(open: OpenValue, env: Environment) -> Self {
        Capsule { open, env }
    }

    pub fn ground(open: OpenValue) -> Self {
        Capsule::new(open, Environment::new())
    }

    pub fn is_closed(&self) -> bool {
        self.open.free_vars().iter().all(|x| self.env.contains(x)) && self.env.is_closed()
    }

    /// Canonical form: reachable bindings only, indirections resolved,
    /// acyclic bindings inlined and variables renumbered `x0, x1, …`.
    pub fn canonical(&self) -> Capsule {
        crate::print::canonicalize(self)
    }
}

impl fmt::Display for Capsule {
    /// Canonical text `v where x0 = …; x1 = …`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::print::canonical_text(self))
    }
}

/// A method call `u0.m(ū)` over open values.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Call {
    pub receiver: OpenValue,
    pub method: Name,
    pub args: Vec<OpenValue>,
}

impl Call {
    pub fn new(receiver: OpenValue, method: Name, args: Vec<OpenValue>) -> Self {
        Call {
            receiver,
            method,
            args,
        }
    }

    /// Receiver followed by the arguments.
    pub fn components(&self) -> impl Iterator<Item = &OpenValue> {
        std::iter::once(&self.receiver).chain(self.args.iter())
    }
}

impl FreeVars for Call {
    fn free_vars(&self) -> BTreeSet<Name> {
        self.components().flat_map(|u| u.free_vars()).collect()
    }
}

impl fmt::Display for Call {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}(", self.receiver, self.method)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}
