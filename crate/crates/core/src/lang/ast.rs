use std::fmt;

use crate::expr::{DisplayTerm, Term};
use crate::value::Value;

/// A variable occurrence after name resolution.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    Local(String),
    Shared(CellRef),
}

/// Reference to a shared variable, possibly an array element. Indices are
/// local expressions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CellRef {
    pub name: String,
    pub indices: Vec<Expr>,
}

pub type Expr = Term<Var>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SharedDecl {
    pub name: String,
    pub dims: Vec<usize>,
    pub init: Value,
}

impl SharedDecl {
    pub fn cell_count(&self) -> usize {
        self.dims.iter().product()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Thread {
    pub name: String,
    pub body: Vec<Stmt>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stmt {
    pub label: String,
    pub kind: StmtKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StmtKind {
    /// `shvar := lexp`
    Write {
        target: CellRef,
        value: Expr,
    },
    /// `lvar := shexp`
    Read {
        target: String,
        value: Expr,
    },
    /// `lvar := lexp`
    Local {
        target: String,
        value: Expr,
    },
    If {
        cond: Expr,
        then_branch: Vec<Stmt>,
        else_branch: Vec<Stmt>,
    },
    While {
        cond: Expr,
        body: Vec<Stmt>,
    },
    Skip,
    Fence,
    /// Nested parallel composition. Parsed so it can be reported; rejected by
    /// the static checks.
    Par(Vec<Thread>),
}

impl StmtKind {
    pub fn is_memory_access(&self) -> bool {
        matches!(self, StmtKind::Write { .. } | StmtKind::Read { .. })
    }
}

pub(crate) fn fmt_var(v: &Var, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match v {
        Var::Local(n) => write!(f, "{n}"),
        Var::Shared(c) => write!(f, "{c}"),
    }
}

impl fmt::Display for CellRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)?;
        for i in &self.indices {
            write!(f, "[{}]", DisplayTerm(i, &fmt_var))?;
        }
        Ok(())
    }
}

pub fn display_expr(e: &Expr) -> String {
    DisplayTerm(e, &fmt_var).to_string()
}

/// Counts shared-cell occurrences in an expression, including those nested in
/// array subscripts.
pub fn shared_refs(e: &Expr) -> usize {
    let mut n = 0;
    e.visit_atoms(&mut |v| {
        if let Var::Shared(c) = v {
            n += 1 + c.indices.iter().map(shared_refs).sum::<usize>();
        }
    });
    n
}

pub fn locals_of(e: &Expr, out: &mut Vec<String>) {
    e.visit_atoms(&mut |v| match v {
        Var::Local(n) => out.push(n.clone()),
        Var::Shared(c) => c.indices.iter().for_each(|i| locals_of(i, out)),
    });
}

pub fn shared_cell_of(e: &Expr) -> Option<&CellRef> {
    let mut found = None;
    e.visit_atoms(&mut |v| {
        if let Var::Shared(c) = v {
            found.get_or_insert(c);
        }
    });
    found
}
