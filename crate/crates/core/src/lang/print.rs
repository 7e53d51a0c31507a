use std::fmt;

use super::ast::*;
use super::Program;

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.shared {
            write!(f, "shared {}", d.name)?;
            for n in &d.dims {
                write!(f, "[{n}]")?;
            }
            writeln!(f, " = {};", d.init)?;
        }
        for t in &self.threads {
            writeln!(f)?;
            write_thread(t, 0, f)?;
        }
        Ok(())
    }
}

fn write_thread(t: &Thread, depth: usize, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    writeln!(f, "{:w$}thread {} {{", "", t.name, w = depth * 4)?;
    write_block(&t.body, depth + 1, f)?;
    writeln!(f, "{:w$}}}", "", w = depth * 4)
}

fn write_block(b: &[Stmt], depth: usize, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let pad = depth * 4;
    for s in b {
        match &s.kind {
            StmtKind::Par(ts) => {
                for t in ts {
                    write_thread(t, depth, f)?;
                }
                continue;
            }
            _ => write!(f, "{:pad$}{}: ", "", s.label)?,
        }
        match &s.kind {
            StmtKind::Write { target, value } => writeln!(f, "{target} := {};", display_expr(value))?,
            StmtKind::Read { target, value } | StmtKind::Local { target, value } => {
                writeln!(f, "{target} := {};", display_expr(value))?
            }
            StmtKind::Skip => writeln!(f, "skip;")?,
            StmtKind::Fence => writeln!(f, "fence;")?,
            StmtKind::If { cond, then_branch, else_branch } => {
                writeln!(f, "if {} {{", display_expr(cond))?;
                write_block(then_branch, depth + 1, f)?;
                if else_branch.is_empty() {
                    writeln!(f, "{:pad$}}}", "")?;
                } else {
                    writeln!(f, "{:pad$}}} else {{", "")?;
                    write_block(else_branch, depth + 1, f)?;
                    writeln!(f, "{:pad$}}}", "")?;
                }
            }
            StmtKind::While { cond, body } => {
                writeln!(f, "while {} {{", display_expr(cond))?;
                write_block(body, depth + 1, f)?;
                writeln!(f, "{:pad$}}}", "")?;
            }
            StmtKind::Par(_) => unreachable!(),
        }
    }
    Ok(())
}
