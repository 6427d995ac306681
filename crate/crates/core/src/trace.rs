//! Call traces: pending calls mapped to the variables standing for their results.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};

use crate::algebra::{equivalent_calls, unfold};
use crate::ast::{Name, OpenValue};
use crate::capsule::{Call, Environment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tag {
    Plain,
    /// The call is being re-evaluated in the checking step.
    Check,
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tag::Plain => "",
            Tag::Check => "^ck",
        })
    }
}

#[derive(Debug, Clone)]
pub struct TraceEntry {
    pub call: Call,
    pub var: Name,
    pub tag: Tag,
    digest: u64,
}

/// Stack-shaped call trace. Lookup is up to capsule equivalence in the
/// ambient environment; entries are bucketed by a shallow shape digest that
/// equivalent calls always share.
#[derive(Debug, Clone, Default)]
pub struct CallTrace {
    entries: Vec<TraceEntry>,
    buckets: HashMap<u64, Vec<usize>>,
}

impl CallTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[TraceEntry] {
        &self.entries
    }

    pub fn push(&mut self, call: Call, var: Name, tag: Tag, env: &Environment) {
        let digest = shape_digest(&call, env);
        self.buckets
            .entry(digest)
            .or_default()
            .push(self.entries.len());
        self.entries.push(TraceEntry {
            call,
            var,
            tag,
            digest,
        });
    }

    pub fn pop(&mut self) -> Option<TraceEntry> {
        let e = self.entries.pop()?;
        if let Some(b) = self.buckets.get_mut(&e.digest) {
            b.pop();
            if b.is_empty() {
                self.buckets.remove(&e.digest);
            }
        }
        Some(e)
    }

    /// Most recent entry whose call is equivalent to `call` in `env`.
    pub fn lookup(&self, call: &Call, env: &Environment) -> Option<(Name, Tag)> {
        let bucket = self.buckets.get(&shape_digest(call, env))?;
        bucket
            .iter()
            .rev()
            .map(|&i| &self.entries[i])
            .find_map(|e| equivalent_calls(&e.call, call, env).then(|| (e.var.clone(), e.tag)))
    }
}

/// `τσ(c)`
pub fn trace_lookup(trace: &CallTrace, call: &Call, env: &Environment) -> Option<(Name, Tag)> {
    trace.lookup(call, env)
}

/// Hash of the method name and the two outermost constructor levels of each
/// component; invariant under capsule equivalence within one environment.
fn shape_digest(call: &Call, env: &Environment) -> u64 {
    fn shape(u: &OpenValue, env: &Environment, depth: u8, h: &mut DefaultHasher) {
        match unfold(u, env) {
            None => 0u8.hash(h),
            Some(OpenValue::Int(n)) => (1u8, n).hash(h),
            Some(OpenValue::Bool(b)) => (2u8, b).hash(h),
            Some(OpenValue::Obj(c, args)) => {
                (3u8, c, args.len()).hash(h);
                if depth > 0 {
                    for a in args {
                        shape(a, env, depth - 1, h);
                    }
                }
            }
            Some(OpenValue::Var(_)) => unreachable!(),
        }
    }
    let mut h = DefaultHasher::new();
    call.method.hash(&mut h);
    call.args.len().hash(&mut h);
    for u in call.components() {
        shape(u, env, 1, &mut h);
    }
    h.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::name;

    fn nel(h: i64, t: OpenValue) -> OpenValue {
        OpenValue::obj("NEL", vec![OpenValue::Int(h), t])
    }

    #[test]
    fn empty_trace() {
        let call = Call::new(OpenValue::obj("C", vec![]), name("m"), vec![]);
        assert_eq!(
            trace_lookup(&CallTrace::new(), &call, &Environment::new()),
            None
        );
    }

    #[test]
    fn lookup_up_to_equivalence() {
        // y = 1:2:y stored; query 1:(2:x) where x = 1:2:x is the same regular list.
        let env: Environment = [
            (name("y"), nel(1, nel(2, OpenValue::var("y")))),
            (name("x"), nel(1, nel(2, OpenValue::var("x")))),
        ]
        .into_iter()
        .collect();
        let stored = Call::new(OpenValue::var("y"), name("min"), vec![]);
        let query = Call::new(nel(1, nel(2, OpenValue::var("x"))), name("min"), vec![]);
        let a = crate::capsule::Capsule::new(stored.receiver.clone(), env.clone());
        let b = crate::capsule::Capsule::new(query.receiver.clone(), env.clone());
        assert!(crate::algebra::equivalent(&a, &b).is_some());

        let mut t = CallTrace::new();
        t.push(stored, name("r"), Tag::Plain, &env);
        assert_eq!(t.lookup(&query, &env), Some((name("r"), Tag::Plain)));
        let other = Call::new(nel(2, OpenValue::var("x")), name("min"), vec![]);
        assert_eq!(t.lookup(&other, &env), None);
    }

    #[test]
    fn checking_tag_is_reported() {
        let env = Environment::new();
        let call = Call::new(
            OpenValue::obj("C", vec![]),
            name("m"),
            vec![OpenValue::Int(1)],
        );
        let mut t = CallTrace::new();
        t.push(call.clone(), name("x"), Tag::Check, &env);
        assert_eq!(t.lookup(&call, &env), Some((name("x"), Tag::Check)));
        t.pop();
        assert_eq!(t.lookup(&call, &env), None);
    }
}
