//! Text formats for compat problems.
//!
//! A histories file has `init CELL = VALUE` lines and `thread NAME: EVENTS`
//! lines; events are `w(cell, expr)` and `r(cell, ph)`, where the read value
//! is a placeholder, `ph=?` (a reported placeholder), `ph=VALUE` or a bare
//! constant. A constraints file holds one boolean expression per line over
//! placeholders and `final CELL`. `#` starts a comment in both.

use crate::expr::{parse_term, DisplayTerm, Term};
use crate::syntax::{SyntaxError, Tok, Tokens};
use crate::value::{BinOp, Value};

use super::{CAtom, HCell, HEvent, HistError, PhId, Placeholder, Problem, ReadVal};

fn syntax(line: usize, e: SyntaxError) -> HistError {
    HistError::Parse { line, msg: format!("column {}: {}", e.col, e.msg) }
}

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

/// `name` or `name[i][j]` with constant subscripts.
fn cell_name(ts: &mut Tokens) -> Result<String, SyntaxError> {
    let mut name = ts.ident("a cell name")?;
    while ts.eat_sym("[") {
        let i = ts.int()?;
        ts.expect_sym("]")?;
        name.push_str(&format!("[{i}]"));
    }
    Ok(name)
}

fn constant(ts: &mut Tokens) -> Result<Value, SyntaxError> {
    if ts.eat_word("true") {
        return Ok(Value::Bool(true));
    }
    if ts.eat_word("false") {
        return Ok(Value::Bool(false));
    }
    if ts.eat_sym("-") {
        return Ok(Value::Int(-ts.int()?));
    }
    Ok(Value::Int(ts.int()?))
}

fn intern(cells: &mut Vec<String>, inits: &mut Vec<Option<Value>>, name: String) -> HCell {
    match cells.iter().position(|c| *c == name) {
        Some(i) => i as HCell,
        None => {
            cells.push(name);
            inits.push(None);
            (cells.len() - 1) as HCell
        }
    }
}

fn ph_by_name(p: &Problem, name: &str) -> Option<PhId> {
    p.placeholders.iter().position(|ph| ph.name == name).map(|i| i as PhId)
}

pub fn parse_histories(text: &str) -> Result<Problem, HistError> {
    let mut p = Problem::default();
    let mut inits: Vec<Option<Value>> = Vec::new();
    for (line, l) in lines(text) {
        let mut ts = Tokens::new(l).map_err(|e| syntax(line, e))?;
        let res: Result<(), SyntaxError> = (|| {
            if ts.eat_word("init") {
                let name = cell_name(&mut ts)?;
                ts.expect_sym("=")?;
                let v = constant(&mut ts)?;
                let c = intern(&mut p.cells, &mut inits, name.clone());
                if inits[c as usize].replace(v).is_some() {
                    return Err(ts.error(format!("cell {name} initialised twice")));
                }
            } else if ts.eat_word("thread") {
                let name = ts.ident("a thread name")?;
                ts.expect_sym(":")?;
                let t = match p.threads.iter().position(|(n, _)| *n == name) {
                    Some(t) => t,
                    None => {
                        p.threads.push((name, Vec::new()));
                        p.threads.len() - 1
                    }
                };
                while !ts.at_eof() {
                    let ev = event(&mut ts, &mut p, &mut inits)?;
                    p.threads[t].1.push(ev);
                }
            } else {
                return Err(ts.unexpected("`init` or `thread`"));
            }
            Ok(())
        })();
        res.map_err(|e| syntax(line, e))?;
    }
    for (c, v) in p.cells.iter().zip(&inits) {
        match v {
            Some(v) => p.inits.push(*v),
            None => return Err(HistError::Invalid(format!("no initial value for cell {c}"))),
        }
    }
    Ok(p)
}

fn event(ts: &mut Tokens, p: &mut Problem, inits: &mut Vec<Option<Value>>) -> Result<HEvent, SyntaxError> {
    let kind = ts.word("`r` or `w`")?;
    if kind != "r" && kind != "w" {
        return Err(ts.error(format!("expected `r` or `w`, found `{kind}`")));
    }
    ts.expect_sym("(")?;
    let name = cell_name(ts)?;
    let cell = intern(&mut p.cells, inits, name);
    ts.expect_sym(",")?;
    let ev = if kind == "w" {
        let value =
            parse_term(ts, &mut |ts, w| ph_by_name(p, &w).ok_or_else(|| ts.error(format!("unknown placeholder {w}"))))?;
        HEvent::Write { cell, value }
    } else {
        let val = match ts.peek().clone() {
            Tok::Word(w) if w.starts_with(|c: char| c.is_ascii_alphabetic()) && w != "true" && w != "false" => {
                ts.next();
                if ph_by_name(p, &w).is_some() {
                    return Err(ts.error(format!("placeholder {w} is read twice")));
                }
                let id = p.placeholders.len() as PhId;
                let mut query = false;
                if ts.eat_sym("=") {
                    if ts.eat_sym("?") {
                        query = true;
                    } else {
                        let v = constant(ts)?;
                        p.constraints.push(Term::Binary(
                            BinOp::Eq,
                            Box::new(Term::Atom(CAtom::Ph(id))),
                            Box::new(Term::Const(v)),
                        ));
                    }
                }
                p.placeholders.push(Placeholder { name: w, cell, query });
                ReadVal::Ph(id)
            }
            _ => ReadVal::Known(constant(ts)?),
        };
        HEvent::Read { cell, val }
    };
    ts.expect_sym(")")?;
    Ok(ev)
}

/// Appends the constraints in `text` to `p`.
pub fn parse_constraints(p: &mut Problem, text: &str) -> Result<(), HistError> {
    for (line, l) in lines(text) {
        let mut ts = Tokens::new(l).map_err(|e| syntax(line, e))?;
        let c = parse_term(&mut ts, &mut |ts, w| {
            if w == "final" {
                let name = cell_name(ts)?;
                return p.cell_index(&name).map(CAtom::Final).ok_or_else(|| ts.error(format!("unknown cell {name}")));
            }
            ph_by_name(p, &w).map(CAtom::Ph).ok_or_else(|| ts.error(format!("unknown placeholder {w}")))
        })
        .map_err(|e| syntax(line, e))?;
        if !ts.at_eof() {
            return Err(syntax(line, ts.unexpected("end of line")));
        }
        p.constraints.push(c);
    }
    Ok(())
}

pub fn format_event(p: &Problem, e: &HEvent) -> String {
    match e {
        HEvent::Read { cell, val } => {
            let v = match val {
                ReadVal::Ph(ph) => p.placeholders[*ph as usize].name.clone(),
                ReadVal::Known(v) => v.to_string(),
            };
            format!("r({},{v})", p.cells[*cell as usize])
        }
        HEvent::Write { cell, value } => {
            let show = |ph: &PhId, f: &mut std::fmt::Formatter<'_>| write!(f, "{}", p.placeholders[*ph as usize].name);
            format!("w({},{})", p.cells[*cell as usize], DisplayTerm(value, &show))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histories_and_constraints() {
        let mut p = parse_histories(
            "init x = 0\ninit y = 0 # counter\nthread A: w(x, 1) r(y, a=?)\nthread B: r(x, b) w(y, b + 1) r(x, 1)\n",
        )
        .unwrap();
        assert_eq!(p.cells, vec!["x", "y"]);
        assert_eq!(p.inits, vec![Value::Int(0), Value::Int(0)]);
        assert_eq!(p.threads[1].1.len(), 3);
        assert!(p.placeholders[0].query && !p.placeholders[1].query);
        assert_eq!(format_event(&p, &p.threads[1].1[1]), "w(y,b + 1)");
        parse_constraints(&mut p, "final y = 1\n\nb != 0\n").unwrap();
        assert_eq!(p.constraints.len(), 2);
    }

    #[test]
    fn pinned_placeholders_become_constraints() {
        let p = parse_histories("init x = 0\nthread A: r(x, v = 3)").unwrap();
        assert_eq!(p.constraints.len(), 1);
    }

    #[test]
    fn array_cells() {
        let p = parse_histories("init a[0] = 0\ninit a[1] = 0\nthread A: w(a[1], 2)").unwrap();
        assert_eq!(p.cells, vec!["a[0]", "a[1]"]);
    }

    #[test]
    fn errors() {
        let err = |s: &str| parse_histories(s).unwrap_err().to_string();
        assert_eq!(err("thread A: w(x, 1)"), "no initial value for cell x");
        assert!(err("init x = 0\nthread A: w(x, p)").starts_with("line 2: column"));
        assert!(err("init x = 0\nthread A: r(x, p) r(x, p)").contains("read twice"));
        assert!(err("bogus").contains("`init` or `thread`"));
        let mut p = parse_histories("init x = 0").unwrap();
        assert!(parse_constraints(&mut p, "q = 1").unwrap_err().to_string().contains("unknown placeholder q"));
        assert!(parse_constraints(&mut p, "final z = 1").unwrap_err().to_string().contains("unknown cell z"));
    }
}
