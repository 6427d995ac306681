//! Abstract syntax shared by every evaluator.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

/// Interned-ish identifier. Cheap to clone and safe to share across threads.
pub type Name = Arc<str>;

pub fn name(s: &str) -> Name {
    Arc::from(s)
}

/// Runs one level of a structural recursion, growing the stack on demand so
/// that deeply nested values do not overflow it.
pub(crate) fn deep<R>(f: impl FnOnce() -> R) -> R {
    stacker::maybe_grow(32 * 1024, 1024 * 1024, f)
}

/// The receiver variable of every method body.
pub const THIS: &str = "this";
/// Placeholder variable admitted only in codefinitions.
pub const ANY: &str = "any";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Min,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Min => "min",
        }
    }
}

/// Source and runtime expressions.
///
/// Runtime expressions are obtained from method bodies by substituting open
/// values for `this`, the parameters and `any`; see [`substitute`].
#[derive(Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Var(Name),
    Field(Box<Expr>, Name),
    New(Name, Vec<Expr>),
    Call(Box<Expr>, Name, Vec<Expr>),
    Int(i64),
    Bool(bool),
    BinOp(BinOp, Box<Expr>, Box<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    Any,
}

impl Clone for Expr {
    fn clone(&self) -> Self {
        deep(|| match self {
            Expr::Var(x) => Expr::Var(x.clone()),
            Expr::Field(t, f) => Expr::Field(t.clone(), f.clone()),
            Expr::New(c, args) => Expr::New(c.clone(), args.clone()),
            Expr::Call(t, m, args) => Expr::Call(t.clone(), m.clone(), args.clone()),
            Expr::Int(n) => Expr::Int(*n),
            Expr::Bool(b) => Expr::Bool(*b),
            Expr::BinOp(op, l, r) => Expr::BinOp(*op, l.clone(), r.clone()),
            Expr::If(c, t, e) => Expr::If(c.clone(), t.clone(), e.clone()),
            Expr::Any => Expr::Any,
        })
    }
}

/// Deeply nested expressions are dropped without recursion.
impl Drop for Expr {
    fn drop(&mut self) {
        fn leaf(e: &Expr) -> bool {
            matches!(e, Expr::Var(_) | Expr::Int(_) | Expr::Bool(_) | Expr::Any)
        }
        let shallow = match &*self {
            Expr::Field(t, _) => leaf(t),
            Expr::New(_, args) => args.iter().all(leaf),
            Expr::Call(t, _, args) => leaf(t) && args.iter().all(leaf),
            Expr::BinOp(_, l, r) => leaf(l) && leaf(r),
            Expr::If(c, t, e) => leaf(c) && leaf(t) && leaf(e),
            _ => true,
        };
        if shallow {
            return;
        }
        let mut stack = vec![std::mem::replace(self, Expr::Any)];
        while let Some(mut e) = stack.pop() {
            let mut take = |b: &mut Box<Expr>| stack.push(std::mem::replace(&mut **b, Expr::Any));
            match &mut e {
                Expr::Field(t, _) => take(t),
                Expr::New(_, args) => stack.append(args),
                Expr::Call(t, _, args) => {
                    take(t);
                    stack.append(args);
                }
                Expr::BinOp(_, l, r) => {
                    take(l);
                    take(r);
                }
                Expr::If(c, t, f) => {
                    take(c);
                    take(t);
                    take(f);
                }
                _ => {}
            }
        }
    }
}

impl Expr {
    pub fn var(n: &str) -> Expr {
        Expr::Var(name(n))
    }

    pub fn field(target: Expr, f: &str) -> Expr {
        Expr::Field(Box::new(target), name(f))
    }

    pub fn new_obj(class: &str, args: Vec<Expr>) -> Expr {
        Expr::New(name(class), args)
    }

    pub fn call(target: Expr, m: &str, args: Vec<Expr>) -> Expr {
        Expr::Call(Box::new(target), name(m), args)
    }

    pub fn binop(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::BinOp(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn if_(c: Expr, t: Expr, e: Expr) -> Expr {
        Expr::If(Box::new(c), Box::new(t), Box::new(e))
    }

    /// Returns the open value this expression denotes syntactically, if it is one.
    pub fn as_open_value(&self) -> Option<OpenValue> {
        deep(|| match self {
            Expr::Var(x) => Some(OpenValue::Var(x.clone())),
            Expr::Int(n) => Some(OpenValue::Int(*n)),
            Expr::Bool(b) => Some(OpenValue::Bool(*b)),
            Expr::New(c, args) => args
                .iter()
                .map(Expr::as_open_value)
                .collect::<Option<Vec<_>>>()
                .map(|vs| OpenValue::Obj(c.clone(), vs)),
            _ => None,
        })
    }

    pub fn contains_any(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| found |= matches!(e, Expr::Any));
        found
    }

    /// Pre-order traversal over every subexpression.
    pub fn walk(&self, f: &mut dyn FnMut(&Expr)) {
        deep(|| {
            f(self);
            match self {
                Expr::Var(_) | Expr::Int(_) | Expr::Bool(_) | Expr::Any => {}
                Expr::Field(t, _) => t.walk(f),
                Expr::New(_, args) => args.iter().for_each(|a| a.walk(f)),
                Expr::Call(t, _, args) => {
                    t.walk(f);
                    args.iter().for_each(|a| a.walk(f));
                }
                Expr::BinOp(_, l, r) => {
                    l.walk(f);
                    r.walk(f);
                }
                Expr::If(c, t, e) => {
                    c.walk(f);
                    t.walk(f);
                    e.walk(f);
                }
            }
        })
    }

    /// Method names invoked anywhere in this expression.
    pub fn called_methods(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.walk(&mut |e| {
            if let Expr::Call(_, m, _) = e {
                out.insert(m.clone());
            }
        });
        out
    }
}

impl From<OpenValue> for Expr {
    fn from(mut v: OpenValue) -> Expr {
        deep(|| match &mut v {
            OpenValue::Obj(c, args) => Expr::New(
                c.clone(),
                std::mem::take(args).into_iter().map(Expr::from).collect(),
            ),
            OpenValue::Int(n) => Expr::Int(*n),
            OpenValue::Bool(b) => Expr::Bool(*b),
            OpenValue::Var(x) => Expr::Var(x.clone()),
        })
    }
}

impl From<&OpenValue> for Expr {
    fn from(v: &OpenValue) -> Expr {
        Expr::from(v.clone())
    }
}

/// Object possibly containing variables; cycles live in the environment.
#[derive(Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OpenValue {
    Obj(Name, Vec<OpenValue>),
    Int(i64),
    Bool(bool),
    Var(Name),
}

impl Clone for OpenValue {
    fn clone(&self) -> Self {
        deep(|| match self {
            OpenValue::Obj(c, args) => OpenValue::Obj(c.clone(), args.clone()),
            OpenValue::Int(n) => OpenValue::Int(*n),
            OpenValue::Bool(b) => OpenValue::Bool(*b),
            OpenValue::Var(x) => OpenValue::Var(x.clone()),
        })
    }
}

/// Deeply nested values are dropped without recursion.
impl Drop for OpenValue {
    fn drop(&mut self) {
        let OpenValue::Obj(_, args) = self else {
            return;
        };
        if args
            .iter()
            .all(|a| !matches!(a, OpenValue::Obj(_, b) if !b.is_empty()))
        {
            return;
        }
        let mut stack = std::mem::take(args);
        while let Some(mut v) = stack.pop() {
            if let OpenValue::Obj(_, a) = &mut v {
                stack.append(a);
            }
        }
    }
}

impl OpenValue {
    pub fn obj(class: &str, args: Vec<OpenValue>) -> OpenValue {
        OpenValue::Obj(name(class), args)
    }

    pub fn var(x: &str) -> OpenValue {
        OpenValue::Var(name(x))
    }

    pub fn is_var(&self) -> bool {
        matches!(self, OpenValue::Var(_))
    }

    /// Visits every variable occurrence, left to right.
    pub fn for_each_var(&self, f: &mut dyn FnMut(&Name)) {
        deep(|| match self {
            OpenValue::Var(x) => f(x),
            OpenValue::Obj(_, args) => args.iter().for_each(|a| a.for_each_var(f)),
            OpenValue::Int(_) | OpenValue::Bool(_) => {}
        })
    }

    /// Replaces variables according to `rename`; unmapped variables are kept.
    pub fn map_vars(&self, rename: &dyn Fn(&Name) -> OpenValue) -> OpenValue {
        deep(|| match self {
            OpenValue::Var(x) => rename(x),
            OpenValue::Obj(c, args) => {
                OpenValue::Obj(c.clone(), args.iter().map(|a| a.map_vars(rename)).collect())
            }
            other => other.clone(),
        })
    }
}

/// Anything with free variables.
pub trait FreeVars {
    fn free_vars(&self) -> BTreeSet<Name>;
}

impl FreeVars for OpenValue {
    fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.for_each_var(&mut |x| {
            out.insert(x.clone());
        });
        out
    }
}

impl FreeVars for Expr {
    fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.walk(&mut |e| {
            if let Expr::Var(x) = e {
                out.insert(x.clone());
            }
        });
        out
    }
}

pub fn free_vars<T: FreeVars + ?Sized>(t: &T) -> BTreeSet<Name> {
    t.free_vars()
}

/// Simultaneous substitution of open values for variables.
///
/// A binding for `any` also replaces the `any` placeholder. Open values
/// contain no binders, so substitution is trivially capture-free.
pub fn substitute(e: &Expr, bindings: &BTreeMap<Name, OpenValue>) -> Expr {
    deep(|| {
        if bindings.is_empty() {
            return e.clone();
        }
        let sub = |x: &Expr| substitute(x, bindings);
        match e {
            Expr::Var(x) => match bindings.get(x) {
                Some(v) => Expr::from(v),
                None => e.clone(),
            },
            Expr::Any => match bindings.get(ANY) {
                Some(v) => Expr::from(v),
                None => Expr::Any,
            },
            Expr::Int(_) | Expr::Bool(_) => e.clone(),
            Expr::Field(t, f) => Expr::Field(Box::new(sub(t)), f.clone()),
            Expr::New(c, args) => Expr::New(c.clone(), args.iter().map(sub).collect()),
            Expr::Call(t, m, args) => {
                Expr::Call(Box::new(sub(t)), m.clone(), args.iter().map(sub).collect())
            }
            Expr::BinOp(op, l, r) => Expr::BinOp(*op, Box::new(sub(l)), Box::new(sub(r))),
            Expr::If(c, t, f) => Expr::If(Box::new(sub(c)), Box::new(sub(t)), Box::new(sub(f))),
        }
    })
}

/// Builds the bindings `this ↦ receiver, params ↦ args` used by every
/// method-invocation rule.
pub fn call_bindings(
    receiver: OpenValue,
    params: &[Name],
    args: &[OpenValue],
) -> BTreeMap<Name, OpenValue> {
    let mut b = BTreeMap::new();
    b.insert(name(THIS), receiver);
    for (p, a) in params.iter().zip(args) {
        b.insert(p.clone(), a.clone());
    }
    b
}

fn write_args<T: fmt::Display>(f: &mut fmt::Formatter<'_>, args: &[T]) -> fmt::Result {
    f.write_str("(")?;
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{a}")?;
    }
    f.write_str(")")
}

impl fmt::Display for OpenValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        deep(|| match self {
            OpenValue::Obj(c, args) => {
                write!(f, "new {c}")?;
                write_args(f, args)
            }
            OpenValue::Int(n) => write!(f, "{n}"),
            OpenValue::Bool(b) => write!(f, "{b}"),
            OpenValue::Var(x) => write!(f, "{x}"),
        })
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        deep(|| match self {
            Expr::Var(x) => write!(f, "{x}"),
            Expr::Int(n) => write!(f, "{n}"),
            Expr::Bool(b) => write!(f, "{b}"),
            Expr::Any => f.write_str(ANY),
            Expr::Field(t, fld) => write!(f, "{t}.{fld}"),
            Expr::New(c, args) => {
                write!(f, "new {c}")?;
                write_args(f, args)
            }
            Expr::Call(t, m, args) => {
                write!(f, "{t}.{m}")?;
                write_args(f, args)
            }
            Expr::BinOp(BinOp::Min, l, r) => write!(f, "Math.min({l}, {r})"),
            Expr::BinOp(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
            Expr::If(c, t, e) => write!(f, "(if ({c}) {t} else {e})"),
        })
    }
}
