//! Inductive big-step evaluator over finite (ground) values.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use crate::ast::{deep, name, Expr, Name, OpenValue, THIS};
use crate::classtable::ClassTable;
use crate::runtime::{apply_binop, Prim, RuntimeError, DEFAULT_FUEL};

/// A finite object or primitive.
#[derive(Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FjValue {
    Obj(Name, Vec<FjValue>),
    Int(i64),
    Bool(bool),
}

impl Clone for FjValue {
    fn clone(&self) -> Self {
        deep(|| match self {
            FjValue::Obj(c, args) => FjValue::Obj(c.clone(), args.clone()),
            FjValue::Int(n) => FjValue::Int(*n),
            FjValue::Bool(b) => FjValue::Bool(*b),
        })
    }
}

/// Deeply nested values are dropped without recursion.
impl Drop for FjValue {
    fn drop(&mut self) {
        let FjValue::Obj(_, args) = self else { return };
        if args
            .iter()
            .all(|a| !matches!(a, FjValue::Obj(_, b) if !b.is_empty()))
        {
            return;
        }
        let mut stack = std::mem::take(args);
        while let Some(mut v) = stack.pop() {
            if let FjValue::Obj(_, a) = &mut v {
                stack.append(a);
            }
        }
    }
}

impl FjValue {
    fn prim(&self) -> Option<Prim> {
        match self {
            FjValue::Int(n) => Some(Prim::Int(*n)),
            FjValue::Bool(b) => Some(Prim::Bool(*b)),
            FjValue::Obj(..) => None,
        }
    }
}

impl From<Prim> for FjValue {
    fn from(p: Prim) -> Self {
        match p {
            Prim::Int(n) => FjValue::Int(n),
            Prim::Bool(b) => FjValue::Bool(b),
        }
    }
}

impl From<&FjValue> for OpenValue {
    fn from(v: &FjValue) -> Self {
        deep(|| match v {
            FjValue::Obj(c, args) => {
                OpenValue::Obj(c.clone(), args.iter().map(OpenValue::from).collect())
            }
            FjValue::Int(n) => OpenValue::Int(*n),
            FjValue::Bool(b) => OpenValue::Bool(*b),
        })
    }
}

impl TryFrom<&OpenValue> for FjValue {
    type Error = Name;

    /// Fails with the first variable found.
    fn try_from(u: &OpenValue) -> Result<Self, Name> {
        deep(|| match u {
            OpenValue::Obj(c, args) => Ok(FjValue::Obj(
                c.clone(),
                args.iter()
                    .map(FjValue::try_from)
                    .collect::<Result<_, _>>()?,
            )),
            OpenValue::Int(n) => Ok(FjValue::Int(*n)),
            OpenValue::Bool(b) => Ok(FjValue::Bool(*b)),
            OpenValue::Var(x) => Err(x.clone()),
        })
    }
}

impl fmt::Display for FjValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        OpenValue::from(self).fmt(f)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FjConfig {
    /// Maximum number of derivation nodes.
    pub fuel: u64,
    /// Report a call that re-enters itself with identical arguments.
    pub monitor: bool,
}

impl Default for FjConfig {
    fn default() -> Self {
        FjConfig {
            fuel: DEFAULT_FUEL,
            monitor: cfg!(debug_assertions),
        }
    }
}

pub fn eval_fj(table: &ClassTable, e: &Expr, fuel: u64) -> Result<FjValue, RuntimeError> {
    eval_fj_with(
        table,
        e,
        FjConfig {
            fuel,
            ..FjConfig::default()
        },
    )
}

pub fn eval_fj_with(table: &ClassTable, e: &Expr, cfg: FjConfig) -> Result<FjValue, RuntimeError> {
    let mut m = Machine {
        table,
        fuel: cfg.fuel,
        budget: cfg.fuel,
        active: cfg.monitor.then(HashSet::new),
    };
    m.eval(e, &BTreeMap::new())
}

type Locals = BTreeMap<Name, FjValue>;

struct Machine<'t> {
    table: &'t ClassTable,
    fuel: u64,
    budget: u64,
    active: Option<HashSet<(FjValue, Name, Vec<FjValue>)>>,
}

impl Machine<'_> {
    fn eval(&mut self, e: &Expr, locals: &Locals) -> Result<FjValue, RuntimeError> {
        if self.fuel == 0 {
            return Err(RuntimeError::FuelExhausted(self.budget));
        }
        self.fuel -= 1;
        stacker::maybe_grow(64 * 1024, 2 * 1024 * 1024, || self.step(e, locals))
    }

    fn step(&mut self, e: &Expr, locals: &Locals) -> Result<FjValue, RuntimeError> {
        match e {
            Expr::Var(x) => locals
                .get(x)
                .cloned()
                .ok_or_else(|| RuntimeError::UnboundVariable(x.clone())),
            Expr::Int(n) => Ok(FjValue::Int(*n)),
            Expr::Bool(b) => Ok(FjValue::Bool(*b)),
            Expr::Any => Err(RuntimeError::PrimitiveMisuse(
                "`any` outside a codefinition".into(),
            )),
            Expr::Field(target, f) => match &mut self.eval(target, locals)? {
                FjValue::Obj(c, args) => {
                    let i = self
                        .table
                        .fields(c)?
                        .iter()
                        .position(|g| g == f)
                        .ok_or_else(|| RuntimeError::FieldNotFound {
                            class: c.clone(),
                            field: f.clone(),
                        })?;
                    Ok(args.swap_remove(i))
                }
                v => Err(RuntimeError::PrimitiveMisuse(format!("field `{f}` of {v}"))),
            },
            Expr::New(c, args) => {
                let vs = args
                    .iter()
                    .map(|a| self.eval(a, locals))
                    .collect::<Result<_, _>>()?;
                Ok(FjValue::Obj(c.clone(), vs))
            }
            Expr::Call(target, m, args) => {
                let recv = self.eval(target, locals)?;
                let vs: Vec<FjValue> = args
                    .iter()
                    .map(|a| self.eval(a, locals))
                    .collect::<Result<_, _>>()?;
                let FjValue::Obj(c, _) = &recv else {
                    return Err(RuntimeError::PrimitiveMisuse(format!(
                        "method `{m}` called on {recv}"
                    )));
                };
                let info = self.table.mbody(c, m)?.clone();
                if info.params.len() != vs.len() {
                    return Err(RuntimeError::MethodNotFound {
                        class: c.clone(),
                        method: m.clone(),
                    });
                }
                let key = (recv.clone(), m.clone(), vs.clone());
                if let Some(active) = &mut self.active {
                    if !active.insert(key.clone()) {
                        return Err(RuntimeError::Divergence(format!("{recv}.{m}(..)")));
                    }
                }
                let mut frame: Locals = info.params.iter().cloned().zip(vs).collect();
                frame.insert(name(THIS), recv);
                let out = self.eval(&info.body, &frame);
                if let Some(active) = &mut self.active {
                    active.remove(&key);
                }
                out
            }
            Expr::BinOp(op, l, r) => {
                let a = self.eval(l, locals)?;
                let b = self.eval(r, locals)?;
                match (a.prim(), b.prim()) {
                    (Some(x), Some(y)) => Ok(apply_binop(*op, x, y)?.into()),
                    _ => Err(RuntimeError::PrimitiveMisuse(format!(
                        "`{}` on {a} and {b}",
                        op.symbol()
                    ))),
                }
            }
            Expr::If(c, t, f) => match self.eval(c, locals)? {
                FjValue::Bool(true) => self.eval(t, locals),
                FjValue::Bool(false) => self.eval(f, locals),
                v => Err(RuntimeError::PrimitiveMisuse(format!(
                    "condition {v} is not boolean"
                ))),
            },
        }
    }
}
