//! Runtime errors and primitive operations shared by the evaluators.

use thiserror::Error;

use crate::algebra::UnionConflict;
use crate::ast::{BinOp, Name};
use crate::capsule::Capsule;
use crate::classtable::LookupError;

pub const DEFAULT_FUEL: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuntimeError {
    #[error("class `{class}` has no field `{field}`")]
    FieldNotFound { class: Name, field: Name },
    #[error("class `{class}` has no method `{method}`")]
    MethodNotFound { class: Name, method: Name },
    #[error("cyclic call to `{class}.{method}`, which has no codefinition")]
    NoCodefinition { class: Name, method: Name },
    #[error("unknown class `{0}`")]
    UnknownClass(Name),
    #[error("receiver or operand `{0}` is undetermined")]
    UndeterminedReceiver(String),
    #[error("primitive misuse: {0}")]
    PrimitiveMisuse(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("integer overflow in `{0}`")]
    Overflow(String),
    #[error("unbound variable `{0}`")]
    UnboundVariable(Name),
    #[error(transparent)]
    UnionConflict(#[from] UnionConflict),
    #[error("codefinition check failed: expected {expected}, got {actual}")]
    CorecCheckFailure {
        expected: Box<Capsule>,
        actual: Box<Capsule>,
    },
    #[error("fuel exhausted after {0} steps")]
    FuelExhausted(u64),
    #[error("call `{0}` re-entered with identical arguments")]
    Divergence(String),
}

impl RuntimeError {
    /// Stable short name used by the corpus manifest and the CLI.
    pub fn kind(&self) -> &'static str {
        match self {
            RuntimeError::FieldNotFound { .. } => "FieldNotFound",
            RuntimeError::MethodNotFound { .. } => "MethodNotFound",
            RuntimeError::NoCodefinition { .. } => "NoCodefinition",
            RuntimeError::UnknownClass(_) => "UnknownClass",
            RuntimeError::UndeterminedReceiver(_) => "UndeterminedReceiver",
            RuntimeError::PrimitiveMisuse(_) => "PrimitiveMisuse",
            RuntimeError::DivisionByZero => "DivisionByZero",
            RuntimeError::Overflow(_) => "Overflow",
            RuntimeError::UnboundVariable(_) => "UnboundVariable",
            RuntimeError::UnionConflict(_) => "UnionConflict",
            RuntimeError::CorecCheckFailure { .. } => "CorecCheckFailure",
            RuntimeError::FuelExhausted(_) => "FuelExhausted",
            RuntimeError::Divergence(_) => "Divergence",
        }
    }

    /// Whether the error stands for a non-terminating evaluation.
    pub fn is_divergence(&self) -> bool {
        matches!(
            self,
            RuntimeError::FuelExhausted(_) | RuntimeError::Divergence(_)
        )
    }
}

impl From<LookupError> for RuntimeError {
    fn from(e: LookupError) -> Self {
        match e {
            LookupError::UnknownClass(c) => RuntimeError::UnknownClass(c),
            LookupError::MethodNotFound { class, method } => {
                RuntimeError::MethodNotFound { class, method }
            }
            LookupError::NoCodefinition { class, method } => {
                RuntimeError::NoCodefinition { class, method }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Prim {
    Int(i64),
    Bool(bool),
}

pub fn apply_binop(op: BinOp, l: Prim, r: Prim) -> Result<Prim, RuntimeError> {
    use Prim::{Bool, Int};
    let overflow = || RuntimeError::Overflow(op.symbol().to_string());
    Ok(match (op, l, r) {
        (BinOp::Eq, Int(a), Int(b)) => Bool(a == b),
        (BinOp::Eq, Bool(a), Bool(b)) => Bool(a == b),
        (BinOp::Ne, Int(a), Int(b)) => Bool(a != b),
        (BinOp::Ne, Bool(a), Bool(b)) => Bool(a != b),
        (_, Int(a), Int(b)) => match op {
            BinOp::Add => Int(a.checked_add(b).ok_or_else(overflow)?),
            BinOp::Sub => Int(a.checked_sub(b).ok_or_else(overflow)?),
            BinOp::Mul => Int(a.checked_mul(b).ok_or_else(overflow)?),
            BinOp::Div | BinOp::Rem if b == 0 => return Err(RuntimeError::DivisionByZero),
            BinOp::Div => Int(a.checked_div(b).ok_or_else(overflow)?),
            BinOp::Rem => Int(a.checked_rem(b).ok_or_else(overflow)?),
            BinOp::Min => Int(a.min(b)),
            BinOp::Lt => Bool(a < b),
            BinOp::Le => Bool(a <= b),
            BinOp::Gt => Bool(a > b),
            BinOp::Ge => Bool(a >= b),
            BinOp::Eq | BinOp::Ne => unreachable!(),
        },
        _ => {
            return Err(RuntimeError::PrimitiveMisuse(format!(
                "`{}` applied to {l:?} and {r:?}",
                op.symbol()
            )))
        }
    })
}
