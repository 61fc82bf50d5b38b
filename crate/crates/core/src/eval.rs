//! Expression evaluation over a store snapshot and a block scope.
//!
//! Typing is strict: arithmetic takes numbers, `AND`/`OR`/`NOT` take
//! booleans, ordering compares like with like, and `==`/`!=` accept any
//! pair (values of different types are unequal). No implicit coercions.

use std::cmp::Ordering;
use std::collections::HashMap;

use crate::dsl::{BinaryOp, Expr, UnaryOp};
use crate::store::{Store, StoreError};
use crate::value::Value;

/// Names bound inside one block execution: endpoint parameters and module
/// outputs (`MODULE.output`).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Scope {
    bindings: HashMap<String, Value>,
}

impl Scope {
    pub fn new() -> Scope {
        Scope::default()
    }

    pub fn bind(&mut self, name: impl Into<String>, value: Value) {
        self.bindings.insert(name.into(), value);
    }

    pub fn bind_output(&mut self, module: &str, output: &str, value: Value) {
        self.bindings.insert(format!("{module}.{output}"), value);
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.bindings.get(name)
    }

    pub fn output(&self, module: &str, output: &str) -> Option<&Value> {
        self.bindings.get(&format!("{module}.{output}"))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("type error: {0}")]
    Type(String),
    #[error(transparent)]
    HistoryUnavailable(StoreError),
    #[error("division by zero")]
    DivisionByZero,
    #[error("arithmetic result is not a finite number")]
    NonFinite,
    #[error("`{0}` is not bound in this block")]
    Unbound(String),
    #[error(transparent)]
    Store(StoreError),
}

/// Coarse error classification, used to compare evaluators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EvalErrorKind {
    Type,
    HistoryUnavailable,
    DivisionByZero,
    NonFinite,
    Unbound,
    Store,
}

impl EvalError {
    pub fn kind(&self) -> EvalErrorKind {
        match self {
            EvalError::Type(_) => EvalErrorKind::Type,
            EvalError::HistoryUnavailable(_) => EvalErrorKind::HistoryUnavailable,
            EvalError::DivisionByZero => EvalErrorKind::DivisionByZero,
            EvalError::NonFinite => EvalErrorKind::NonFinite,
            EvalError::Unbound(_) => EvalErrorKind::Unbound,
            EvalError::Store(_) => EvalErrorKind::Store,
        }
    }
}

impl From<StoreError> for EvalError {
    fn from(e: StoreError) -> EvalError {
        match e {
            StoreError::HistoryUnavailable { .. } => EvalError::HistoryUnavailable(e),
            other => EvalError::Store(other),
        }
    }
}

/// Outcome of a rule condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    True,
    False,
    /// The condition read history the window does not (yet) hold.
    Unavailable,
}

impl Condition {
    pub fn holds(self) -> bool {
        self == Condition::True
    }
}

fn type_error(op: &str, l: &Value, r: Option<&Value>) -> EvalError {
    match r {
        Some(r) => EvalError::Type(format!(
            "`{op}` is not defined for {} and {}",
            l.type_name(),
            r.type_name()
        )),
        None => EvalError::Type(format!("`{op}` is not defined for {}", l.type_name())),
    }
}

fn expect_bool(op: BinaryOp, v: &Value) -> Result<bool, EvalError> {
    v.as_bool().ok_or_else(|| type_error(op.symbol(), v, None))
}

pub fn eval(expr: &Expr, store: &Store, scope: &Scope) -> Result<Value, EvalError> {
    match expr {
        Expr::Literal(v) => Ok(v.clone()),
        Expr::Field {
            relation,
            field,
            offset,
        } => Ok(store.latest(relation, field, *offset)?),
        Expr::ModuleOutput { module, output } => scope
            .output(module, output)
            .cloned()
            .ok_or_else(|| EvalError::Unbound(format!("{module}.{output}"))),
        Expr::Var(name) => scope
            .get(name)
            .cloned()
            .ok_or_else(|| EvalError::Unbound(name.clone())),
        Expr::Unary(UnaryOp::Neg, inner) => match eval(inner, store, scope)? {
            Value::Number(n) => Ok(Value::Number(-n)),
            other => Err(type_error("-", &other, None)),
        },
        Expr::Unary(UnaryOp::Not, inner) => match eval(inner, store, scope)? {
            Value::Bool(b) => Ok(Value::Bool(!b)),
            other => Err(type_error("NOT", &other, None)),
        },
        Expr::Binary(op @ BinaryOp::And, l, r) => {
            if !expect_bool(*op, &eval(l, store, scope)?)? {
                return Ok(Value::Bool(false));
            }
            Ok(Value::Bool(expect_bool(*op, &eval(r, store, scope)?)?))
        }
        Expr::Binary(op @ BinaryOp::Or, l, r) => {
            if expect_bool(*op, &eval(l, store, scope)?)? {
                return Ok(Value::Bool(true));
            }
            Ok(Value::Bool(expect_bool(*op, &eval(r, store, scope)?)?))
        }
        Expr::Binary(op, l, r) => {
            let lv = eval(l, store, scope)?;
            let rv = eval(r, store, scope)?;
            apply_binary(*op, &lv, &rv)
        }
    }
}

fn apply_binary(op: BinaryOp, l: &Value, r: &Value) -> Result<Value, EvalError> {
    use BinaryOp::*;
    match op {
        Eq => Ok(Value::Bool(l == r)),
        Ne => Ok(Value::Bool(l != r)),
        Lt | Le | Gt | Ge => {
            let ord = l
                .partial_order(r)
                .ok_or_else(|| type_error(op.symbol(), l, Some(r)))?;
            Ok(Value::Bool(match op {
                Lt => ord == Ordering::Less,
                Le => ord != Ordering::Greater,
                Gt => ord == Ordering::Greater,
                _ => ord != Ordering::Less,
            }))
        }
        Add | Sub | Mul | Div => {
            let (Value::Number(a), Value::Number(b)) = (l, r) else {
                return Err(type_error(op.symbol(), l, Some(r)));
            };
            let n = match op {
                Add => a + b,
                Sub => a - b,
                Mul => a * b,
                _ if *b == 0.0 => return Err(EvalError::DivisionByZero),
                _ => a / b,
            };
            Value::number(n).map_err(|_| EvalError::NonFinite)
        }
        And | Or => unreachable!("short-circuit operators are handled by eval"),
    }
}

/// Evaluates a rule condition. Missing history makes the condition
/// [`Condition::Unavailable`] instead of an error.
pub fn eval_condition(expr: &Expr, store: &Store, scope: &Scope) -> Result<Condition, EvalError> {
    match eval(expr, store, scope) {
        Ok(Value::Bool(true)) => Ok(Condition::True),
        Ok(Value::Bool(false)) => Ok(Condition::False),
        Ok(other) => Err(EvalError::Type(format!(
            "condition evaluated to {}, expected boolean",
            other.type_name()
        ))),
        Err(EvalError::HistoryUnavailable(_)) => Ok(Condition::Unavailable),
        Err(e) => Err(e),
    }
}
