//! The toy concurrent language: syntax tree, parser, printer and the
//! lowered form consumed by the engines.

pub mod ast;
pub mod code;
mod parser;
mod print;

use std::cmp::Ordering;

use thiserror::Error;

pub use ast::*;
pub use code::Code;
pub use parser::{parse_program, parse_value};

use crate::syntax::SyntaxError;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum LangError {
    #[error("syntax error at {0}")]
    Syntax(#[from] SyntaxError),
    #[error("thread {thread}, statement {label}: {msg}")]
    Discipline { thread: String, label: String, msg: String },
    #[error("{0}")]
    Static(String),
    #[error("unknown label `{label}` in thread {thread}")]
    UnknownLabel { thread: String, label: String },
    #[error("unknown thread `{0}`")]
    UnknownThread(String),
}

/// A checked program: one top-level parallel composition of `threads`.
#[derive(Clone, Debug)]
pub struct Program {
    pub shared: Vec<SharedDecl>,
    pub threads: Vec<Thread>,
    pub code: Code,
}

impl PartialEq for Program {
    fn eq(&self, other: &Self) -> bool {
        self.shared == other.shared && self.threads == other.threads
    }
}

impl Eq for Program {}

impl Program {
    pub fn new(shared: Vec<SharedDecl>, threads: Vec<Thread>) -> Result<Program, LangError> {
        if threads.is_empty() {
            return Err(LangError::Static("a program needs at least one thread".into()));
        }
        let code = code::lower(&shared, &threads)?;
        Ok(Program { shared, threads, code })
    }

    pub fn thread_index(&self, name: &str) -> Result<usize, LangError> {
        self.code.thread_by_name(name).ok_or_else(|| LangError::UnknownThread(name.to_string()))
    }

    /// Statement id of `label` in thread `t`.
    pub fn resolve(&self, t: usize, label: &str) -> Result<code::StmtId, LangError> {
        self.code.label(t, label).ok_or_else(|| LangError::UnknownLabel {
            thread: self.code.threads[t].name.clone(),
            label: label.to_string(),
        })
    }

    /// Total number of statements, nested ones included.
    pub fn statement_count(&self) -> usize {
        self.code.stmts.len()
    }
}

/// Textual order of two labels of the same thread.
pub fn label_order(p: &Program, thread: &str, a: &str, b: &str) -> Result<Ordering, LangError> {
    let t = p.thread_index(thread)?;
    let sa = p.code.stmt(p.resolve(t, a)?).ordinal;
    let sb = p.code.stmt(p.resolve(t, b)?).ordinal;
    Ok(sa.cmp(&sb))
}
