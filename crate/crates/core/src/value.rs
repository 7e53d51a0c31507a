//! Runtime values and the arithmetic/boolean operators shared by every
//! expression language in the crate (programs, properties, constraints).

use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// Largest integer magnitude admitted by default.
pub const DEFAULT_INT_BOUND: i64 = (1 << 31) - 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Tid(u32),
}

impl Value {
    pub fn as_bool(self) -> Result<bool, EvalError> {
        match self {
            Value::Bool(b) => Ok(b),
            other => Err(EvalError::Type(format!("expected a boolean, found {other}"))),
        }
    }

    pub fn as_int(self) -> Result<i64, EvalError> {
        match self {
            Value::Int(n) => Ok(n),
            other => Err(EvalError::Type(format!("expected an integer, found {other}"))),
        }
    }

    /// Array subscript: booleans index as `false = 0`, `true = 1`.
    pub fn as_index(self) -> Result<i64, EvalError> {
        match self {
            Value::Int(n) => Ok(n),
            Value::Bool(b) => Ok(b as i64),
            Value::Tid(_) => Err(EvalError::Type("thread id used as an index".into())),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Tid(t) => write!(f, "#{t}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("integer {0} exceeds the domain bound {1}")]
    Overflow(i128, i64),
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("type error: {0}")]
    Type(String),
    #[error("index {index} out of range for `{name}` (dimension {dim})")]
    IndexOutOfRange { name: String, index: i64, dim: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Implies,
}

impl UnOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnOp::Not => "!",
            UnOp::Neg => "-",
        }
    }
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
            BinOp::Implies => "->",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Implies => 1,
            BinOp::Or => 2,
            BinOp::And => 3,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div => 6,
        }
    }
}

fn checked(n: i128, bound: i64) -> Result<Value, EvalError> {
    if n.unsigned_abs() > bound as u128 {
        Err(EvalError::Overflow(n, bound))
    } else {
        Ok(Value::Int(n as i64))
    }
}

pub fn apply_unop(op: UnOp, v: Value, bound: i64) -> Result<Value, EvalError> {
    match op {
        UnOp::Not => Ok(Value::Bool(!v.as_bool()?)),
        UnOp::Neg => checked(-(v.as_int()? as i128), bound),
    }
}

/// Strict binary operator application. `&&`, `||` and `->` short-circuit in
/// [`crate::expr::Term::eval`] and only reach here with both operands.
pub fn apply_binop(op: BinOp, a: Value, b: Value, bound: i64) -> Result<Value, EvalError> {
    use BinOp::*;
    match op {
        Add | Sub | Mul | Div => {
            let (x, y) = (a.as_int()? as i128, b.as_int()? as i128);
            let r = match op {
                Add => x + y,
                Sub => x - y,
                Mul => x * y,
                _ => {
                    if y == 0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    x / y
                }
            };
            checked(r, bound)
        }
        Eq | Ne => {
            if std::mem::discriminant(&a) != std::mem::discriminant(&b) {
                return Err(EvalError::Type(format!("cannot compare {a} with {b}")));
            }
            Ok(Value::Bool((a == b) == (op == Eq)))
        }
        Lt | Le | Gt | Ge => {
            let (x, y) = (a.as_int()?, b.as_int()?);
            Ok(Value::Bool(match op {
                Lt => x < y,
                Le => x <= y,
                Gt => x > y,
                _ => x >= y,
            }))
        }
        And => Ok(Value::Bool(a.as_bool()? && b.as_bool()?)),
        Or => Ok(Value::Bool(a.as_bool()? || b.as_bool()?)),
        Implies => Ok(Value::Bool(!a.as_bool()? || b.as_bool()?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_respects_the_domain_bound() {
        let b = 10;
        assert_eq!(apply_binop(BinOp::Add, Value::Int(4), Value::Int(6), b), Ok(Value::Int(10)));
        assert_eq!(apply_binop(BinOp::Add, Value::Int(5), Value::Int(6), b), Err(EvalError::Overflow(11, 10)));
        assert_eq!(apply_binop(BinOp::Div, Value::Int(1), Value::Int(0), b), Err(EvalError::DivisionByZero));
    }

    #[test]
    fn comparisons_are_typed() {
        assert!(apply_binop(BinOp::Eq, Value::Bool(false), Value::Int(0), 10).is_err());
        assert_eq!(apply_binop(BinOp::Ne, Value::Bool(false), Value::Bool(true), 10), Ok(Value::Bool(true)));
        assert_eq!(Value::Bool(true).as_index(), Ok(1));
    }
}
