use std::collections::{HashMap, HashSet};

use super::ast::*;
use super::{LangError, Program};
use crate::expr::{parse_term, Term};
use crate::syntax::{SyntaxError, Tok, Tokens};
use crate::value::Value;

/// Parses `.cvl` source text and runs the static checks.
pub fn parse_program(src: &str) -> Result<Program, LangError> {
    let mut p = Parser { ts: Tokens::new(src)?, shared: HashMap::new(), used_locals: HashSet::new() };
    let mut decls = Vec::new();
    let mut threads = Vec::new();
    while !p.ts.at_eof() {
        if p.ts.eat_word("shared") {
            loop {
                decls.push(p.decl()?);
                if !p.ts.eat_sym(",") {
                    break;
                }
                p.ts.eat_word("shared");
            }
            while p.ts.eat_sym(";") {}
        } else if p.ts.is_word("thread") {
            threads.push(p.thread()?);
            while p.ts.eat_sym(";") {}
        } else {
            return Err(p.ts.unexpected("`shared` or `thread`").into());
        }
    }
    Program::new(decls, threads)
}

struct Parser {
    ts: Tokens,
    shared: HashMap<String, usize>,
    used_locals: HashSet<String>,
}

impl Parser {
    fn decl(&mut self) -> Result<SharedDecl, LangError> {
        let name = self.ts.ident("a shared variable name")?;
        if self.used_locals.contains(&name) {
            return Err(LangError::Static(format!("`{name}` declared shared after use as a local")));
        }
        let mut dims = Vec::new();
        while self.ts.eat_sym("[") {
            let n = self.ts.int()?;
            if n <= 0 {
                return Err(self.ts.error("array dimensions must be positive").into());
            }
            dims.push(n as usize);
            self.ts.expect_sym("]")?;
        }
        self.ts.expect_sym("=")?;
        let init = self.constant()?;
        self.shared.insert(name.clone(), dims.len());
        Ok(SharedDecl { name, dims, init })
    }

    fn constant(&mut self) -> Result<Value, SyntaxError> {
        if self.ts.eat_word("true") {
            return Ok(Value::Bool(true));
        }
        if self.ts.eat_word("false") {
            return Ok(Value::Bool(false));
        }
        // `{0}` / `{false}` array initializer spelling is accepted too.
        if self.ts.eat_sym("{") {
            let v = self.constant()?;
            self.ts.expect_sym("}")?;
            return Ok(v);
        }
        Ok(Value::Int(self.ts.int()?))
    }

    fn thread(&mut self) -> Result<Thread, LangError> {
        self.ts.expect_word("thread")?;
        let name = self.ts.ident("a thread name")?;
        self.ts.expect_sym("{")?;
        let mut ordinal = 0;
        let body = self.block(&name, &mut ordinal)?;
        self.ts.expect_sym("}")?;
        Ok(Thread { name, body })
    }

    fn block(&mut self, thread: &str, ordinal: &mut usize) -> Result<Vec<Stmt>, LangError> {
        let mut out: Vec<Stmt> = Vec::new();
        loop {
            while self.ts.eat_sym(";") {}
            if self.ts.is_sym("}") || self.ts.at_eof() {
                return Ok(out);
            }
            if self.ts.is_word("thread") {
                // Consecutive nested thread blocks form one parallel composition.
                *ordinal += 1;
                let label = format!("L{ordinal}");
                let mut inner = Vec::new();
                while self.ts.is_word("thread") {
                    inner.push(self.thread()?);
                    while self.ts.eat_sym(";") {}
                }
                out.push(Stmt { label, kind: StmtKind::Par(inner) });
                continue;
            }
            out.push(self.stmt(thread, ordinal)?);
        }
    }

    fn stmt(&mut self, thread: &str, ordinal: &mut usize) -> Result<Stmt, LangError> {
        *ordinal += 1;
        let mut label = format!("L{ordinal}");
        if let (Tok::Word(tag), Tok::Sym(":")) = (self.ts.peek().clone(), self.ts.peek_at(1).clone()) {
            self.ts.next();
            self.ts.next();
            label = tag;
        }
        let discipline = |msg: &str| LangError::Discipline {
            thread: thread.to_string(),
            label: label.clone(),
            msg: msg.to_string(),
        };
        let kind = if self.ts.eat_word("skip") {
            StmtKind::Skip
        } else if self.ts.eat_word("fence") || self.ts.eat_word("sync") {
            StmtKind::Fence
        } else if self.ts.eat_word("if") {
            let cond = self.expr()?;
            if shared_refs(&cond) > 0 {
                return Err(discipline("shared variable in guard"));
            }
            self.ts.expect_sym("{")?;
            let then_branch = self.block(thread, ordinal)?;
            self.ts.expect_sym("}")?;
            let else_branch = if self.ts.eat_word("else") {
                self.ts.expect_sym("{")?;
                let b = self.block(thread, ordinal)?;
                self.ts.expect_sym("}")?;
                b
            } else {
                Vec::new()
            };
            StmtKind::If { cond, then_branch, else_branch }
        } else if self.ts.eat_word("while") {
            let cond = self.expr()?;
            if shared_refs(&cond) > 0 {
                return Err(discipline("shared variable in guard"));
            }
            self.ts.expect_sym("{")?;
            let body = self.block(thread, ordinal)?;
            self.ts.expect_sym("}")?;
            StmtKind::While { cond, body }
        } else {
            let target = self.var()?;
            self.ts.expect_sym(":=")?;
            let value = self.expr()?;
            let reads = shared_refs(&value);
            match target {
                Var::Shared(cell) => {
                    if reads > 0 || cell.indices.iter().any(|i| shared_refs(i) > 0) {
                        return Err(discipline("two shared accesses in one assignment"));
                    }
                    StmtKind::Write { target: cell, value }
                }
                Var::Local(name) => match reads {
                    0 => StmtKind::Local { target: name, value },
                    1 => {
                        let cell = shared_cell_of(&value).expect("one shared ref");
                        if cell.indices.iter().any(|i| shared_refs(i) > 0) {
                            return Err(discipline("two shared accesses in one assignment"));
                        }
                        StmtKind::Read { target: name, value }
                    }
                    _ => return Err(discipline("two shared accesses in one assignment")),
                },
            }
        };
        Ok(Stmt { label, kind })
    }

    fn var(&mut self) -> Result<Var, LangError> {
        let name = self.ts.ident("a variable")?;
        self.resolve(name).map_err(Into::into)
    }

    fn resolve(&mut self, name: String) -> Result<Var, SyntaxError> {
        if self.shared.contains_key(&name) {
            let mut indices = Vec::new();
            while self.ts.eat_sym("[") {
                indices.push(self.expr_inner()?);
                self.ts.expect_sym("]")?;
            }
            Ok(Var::Shared(CellRef { name, indices }))
        } else {
            if self.ts.is_sym("[") {
                return Err(self.ts.error(format!("`{name}` is not a shared array")));
            }
            self.used_locals.insert(name.clone());
            Ok(Var::Local(name))
        }
    }

    fn expr(&mut self) -> Result<Expr, LangError> {
        Ok(self.expr_inner()?)
    }

    fn expr_inner(&mut self) -> Result<Expr, SyntaxError> {
        // The atom callback needs `self` for name resolution; lend the token
        // stream out for the duration of the call.
        let mut ts = std::mem::replace(&mut self.ts, Tokens::new("").expect("empty"));
        let result = parse_term(&mut ts, &mut |ts: &mut Tokens, name: String| {
            std::mem::swap(&mut self.ts, ts);
            let r = self.resolve(name);
            std::mem::swap(&mut self.ts, ts);
            r
        });
        self.ts = ts;
        result
    }
}

/// Parses a constant literal the way declarations spell them.
pub fn parse_value(src: &str) -> Result<Value, SyntaxError> {
    let mut ts = Tokens::new(src)?;
    let t = parse_term(&mut ts, &mut |ts, w| Err::<(), _>(ts.error(format!("`{w}` is not a constant"))))?;
    match t {
        Term::Const(v) if ts.at_eof() => Ok(v),
        _ => Err(ts.error("expected a constant")),
    }
}
