//! Flat, index-based form of a checked program. The engines and the planner
//! work on this representation; the tree AST is kept for printing.

use std::collections::HashMap;

use super::ast::*;
use super::LangError;
use crate::expr::Term;
use crate::value::{EvalError, Value};

pub type StmtId = u32;
pub type BlockId = u32;
pub type CellId = u16;
pub type LocalId = u16;

#[derive(Clone, Debug)]
pub struct DeclInfo {
    pub name: String,
    pub dims: Vec<usize>,
    pub base: CellId,
    pub init: Value,
}

#[derive(Clone, Debug)]
pub enum LCell {
    Fixed(CellId),
    Indexed { decl: u16, indices: Vec<LExpr> },
}

#[derive(Clone, Debug)]
pub enum LVar {
    Local(LocalId),
    Cell(LCell),
}

pub type LExpr = Term<LVar>;

#[derive(Clone, Debug)]
pub enum LKind {
    Write { cell: LCell, value: LExpr },
    Read { local: LocalId, cell: LCell, value: LExpr },
    Local { local: LocalId, value: LExpr },
    If { cond: LExpr, then_block: BlockId, else_block: BlockId },
    While { cond: LExpr, body: BlockId },
    Skip,
    Fence,
}

#[derive(Clone, Debug)]
pub struct StmtCode {
    pub label: String,
    pub thread: usize,
    /// Pre-order position within the thread; label order is ordinal order.
    pub ordinal: usize,
    pub block: BlockId,
    pub pos: usize,
    pub kind: LKind,
    /// Enclosing compound statements, outermost first.
    pub ancestors: Vec<StmtId>,
}

impl StmtCode {
    /// A `while` nested inside another loop body (busy-wait style).
    pub fn loop_depth(&self, code: &Code) -> usize {
        self.ancestors.iter().filter(|a| matches!(code.stmts[**a as usize].kind, LKind::While { .. })).count()
    }
}

#[derive(Clone, Debug)]
pub struct BlockCode {
    pub thread: usize,
    pub stmts: Vec<StmtId>,
    /// The compound statement owning this block; `None` for a thread body.
    pub parent: Option<StmtId>,
}

#[derive(Clone, Debug)]
pub struct ThreadCode {
    pub name: String,
    pub root: BlockId,
    pub locals: Vec<String>,
    pub labels: HashMap<String, StmtId>,
    /// Statements in pre-order.
    pub order: Vec<StmtId>,
}

#[derive(Clone, Debug)]
pub struct Code {
    pub decls: Vec<DeclInfo>,
    pub cell_names: Vec<String>,
    pub cell_inits: Vec<Value>,
    pub threads: Vec<ThreadCode>,
    pub blocks: Vec<BlockCode>,
    pub stmts: Vec<StmtCode>,
}

impl Code {
    pub fn stmt(&self, id: StmtId) -> &StmtCode {
        &self.stmts[id as usize]
    }

    pub fn block(&self, id: BlockId) -> &BlockCode {
        &self.blocks[id as usize]
    }

    pub fn cell_count(&self) -> usize {
        self.cell_names.len()
    }

    pub fn cell_name(&self, c: CellId) -> &str {
        &self.cell_names[c as usize]
    }

    pub fn cell_by_name(&self, name: &str) -> Option<CellId> {
        self.cell_names.iter().position(|n| n == name).map(|i| i as CellId)
    }

    pub fn decl_by_name(&self, name: &str) -> Option<usize> {
        self.decls.iter().position(|d| d.name == name)
    }

    /// Cells belonging to a shared variable (all elements for an array).
    pub fn cells_of_decl(&self, decl: usize) -> std::ops::Range<CellId> {
        let d = &self.decls[decl];
        let n: usize = d.dims.iter().product();
        d.base..d.base + n as CellId
    }

    pub fn thread_by_name(&self, name: &str) -> Option<usize> {
        self.threads.iter().position(|t| t.name == name)
    }

    pub fn label(&self, thread: usize, tag: &str) -> Option<StmtId> {
        self.threads.get(thread)?.labels.get(tag).copied()
    }

    /// Flat cell id from evaluated subscripts.
    pub fn cell_at(&self, decl: u16, idx: &[i64]) -> Result<CellId, EvalError> {
        let d = &self.decls[decl as usize];
        let mut flat = 0usize;
        for (k, (&i, &dim)) in idx.iter().zip(&d.dims).enumerate() {
            if i < 0 || i as usize >= dim {
                let _ = k;
                return Err(EvalError::IndexOutOfRange { name: d.name.clone(), index: i, dim });
            }
            flat = flat * dim + i as usize;
        }
        Ok(d.base + flat as CellId)
    }
}

pub(super) fn lower(decls: &[SharedDecl], threads: &[Thread]) -> Result<Code, LangError> {
    let mut code = Code {
        decls: Vec::new(),
        cell_names: Vec::new(),
        cell_inits: Vec::new(),
        threads: Vec::new(),
        blocks: Vec::new(),
        stmts: Vec::new(),
    };
    for d in decls {
        if code.decls.iter().any(|x| x.name == d.name) {
            return Err(LangError::Static(format!("shared variable `{}` declared twice", d.name)));
        }
        let base = code.cell_names.len() as CellId;
        let n = d.cell_count();
        for flat in 0..n {
            let mut name = d.name.clone();
            let mut rem = flat;
            let mut parts = Vec::with_capacity(d.dims.len());
            for dim in d.dims.iter().rev() {
                parts.push(rem % dim);
                rem /= dim;
            }
            for p in parts.iter().rev() {
                name.push_str(&format!("[{p}]"));
            }
            code.cell_names.push(name);
            code.cell_inits.push(d.init);
        }
        code.decls.push(DeclInfo { name: d.name.clone(), dims: d.dims.clone(), base, init: d.init });
    }
    if code.cell_names.len() > CellId::MAX as usize {
        return Err(LangError::Static("too many shared cells".into()));
    }
    for (ti, t) in threads.iter().enumerate() {
        if code.threads.iter().any(|x| x.name == t.name) {
            return Err(LangError::Static(format!("thread `{}` declared twice", t.name)));
        }
        if code.decls.iter().any(|d| d.name == t.name) {
            return Err(LangError::Static(format!("`{}` names both a thread and a shared variable", t.name)));
        }
        code.threads.push(ThreadCode {
            name: t.name.clone(),
            root: 0,
            locals: Vec::new(),
            labels: HashMap::new(),
            order: Vec::new(),
        });
        let mut lw = Lowerer { code: &mut code, thread: ti, ordinal: 0 };
        let root = lw.block(&t.body, None, &[])?;
        code.threads[ti].root = root;
    }
    Ok(code)
}

struct Lowerer<'a> {
    code: &'a mut Code,
    thread: usize,
    ordinal: usize,
}

impl Lowerer<'_> {
    fn err(&self, label: &str, msg: impl Into<String>) -> LangError {
        LangError::Discipline {
            thread: self.code.threads[self.thread].name.clone(),
            label: label.to_string(),
            msg: msg.into(),
        }
    }

    fn local(&mut self, name: &str) -> LocalId {
        let locals = &mut self.code.threads[self.thread].locals;
        match locals.iter().position(|l| l == name) {
            Some(i) => i as LocalId,
            None => {
                locals.push(name.to_string());
                (locals.len() - 1) as LocalId
            }
        }
    }

    fn block(&mut self, stmts: &[Stmt], parent: Option<StmtId>, ancestors: &[StmtId]) -> Result<BlockId, LangError> {
        let id = self.code.blocks.len() as BlockId;
        self.code.blocks.push(BlockCode { thread: self.thread, stmts: Vec::new(), parent });
        for (pos, s) in stmts.iter().enumerate() {
            let sid = self.stmt(s, id, pos, ancestors)?;
            self.code.blocks[id as usize].stmts.push(sid);
        }
        Ok(id)
    }

    fn stmt(&mut self, s: &Stmt, block: BlockId, pos: usize, ancestors: &[StmtId]) -> Result<StmtId, LangError> {
        let id = self.code.stmts.len() as StmtId;
        let ordinal = self.ordinal;
        self.ordinal += 1;
        if self.code.threads[self.thread].labels.insert(s.label.clone(), id).is_some() {
            return Err(self.err(&s.label, "duplicate label"));
        }
        self.code.threads[self.thread].order.push(id);
        // Placeholder so that nested statements get later ids.
        self.code.stmts.push(StmtCode {
            label: s.label.clone(),
            thread: self.thread,
            ordinal,
            block,
            pos,
            kind: LKind::Skip,
            ancestors: ancestors.to_vec(),
        });
        let mut inner_anc = ancestors.to_vec();
        inner_anc.push(id);
        let kind = match &s.kind {
            StmtKind::Write { target, value } => {
                if shared_refs(value) > 0 {
                    return Err(self.err(&s.label, "two shared accesses in one assignment"));
                }
                LKind::Write { cell: self.cell(target, &s.label)?, value: self.expr(value, &s.label)? }
            }
            StmtKind::Read { target, value } => {
                if shared_refs(value) != 1 {
                    return Err(self.err(&s.label, "two shared accesses in one assignment"));
                }
                let cell = shared_cell_of(value).expect("one shared ref");
                let cell = self.cell(cell, &s.label)?;
                let value = self.expr(value, &s.label)?;
                LKind::Read { local: self.local(target), cell, value }
            }
            StmtKind::Local { target, value } => {
                if shared_refs(value) > 0 {
                    return Err(self.err(&s.label, "shared read in a local assignment"));
                }
                let value = self.expr(value, &s.label)?;
                LKind::Local { local: self.local(target), value }
            }
            StmtKind::If { cond, then_branch, else_branch } => {
                if shared_refs(cond) > 0 {
                    return Err(self.err(&s.label, "shared variable in guard"));
                }
                let cond = self.expr(cond, &s.label)?;
                let then_block = self.block(then_branch, Some(id), &inner_anc)?;
                let else_block = self.block(else_branch, Some(id), &inner_anc)?;
                LKind::If { cond, then_block, else_block }
            }
            StmtKind::While { cond, body } => {
                if shared_refs(cond) > 0 {
                    return Err(self.err(&s.label, "shared variable in guard"));
                }
                let cond = self.expr(cond, &s.label)?;
                let body = self.block(body, Some(id), &inner_anc)?;
                LKind::While { cond, body }
            }
            StmtKind::Skip => LKind::Skip,
            StmtKind::Fence => LKind::Fence,
            StmtKind::Par(_) => {
                return Err(self.err(&s.label, "nested parallel composition is not supported"));
            }
        };
        self.code.stmts[id as usize].kind = kind;
        Ok(id)
    }

    fn cell(&mut self, c: &CellRef, label: &str) -> Result<LCell, LangError> {
        let Some(decl) = self.code.decls.iter().position(|d| d.name == c.name) else {
            return Err(self.err(label, format!("unknown shared variable `{}`", c.name)));
        };
        let dims = self.code.decls[decl].dims.clone();
        if dims.len() != c.indices.len() {
            return Err(
                self.err(label, format!("`{}` takes {} subscripts, found {}", c.name, dims.len(), c.indices.len()))
            );
        }
        let mut lowered = Vec::new();
        let mut consts = Vec::new();
        for i in &c.indices {
            if shared_refs(i) > 0 {
                return Err(self.err(label, "two shared accesses in one assignment"));
            }
            let e = self.expr(i, label)?;
            if let Term::Const(v) = &e {
                consts.push(v.as_index().map_err(|e| self.err(label, e.to_string()))?);
            }
            lowered.push(e);
        }
        if consts.len() == lowered.len() {
            let id = self.code.cell_at(decl as u16, &consts).map_err(|e| self.err(label, e.to_string()))?;
            Ok(LCell::Fixed(id))
        } else {
            Ok(LCell::Indexed { decl: decl as u16, indices: lowered })
        }
    }

    fn expr(&mut self, e: &Expr, label: &str) -> Result<LExpr, LangError> {
        e.try_map(&mut |v: &Var| -> Result<LVar, LangError> {
            Ok(match v {
                Var::Local(n) => LVar::Local(self.local(n)),
                Var::Shared(c) => LVar::Cell(self.cell(c, label)?),
            })
        })
    }
}
