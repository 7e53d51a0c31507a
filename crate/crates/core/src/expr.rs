//! A small expression tree generic over its variable atoms. Program
//! expressions, property predicates and compat constraints all reuse it with
//! different atom types.

use std::fmt;

use crate::syntax::{is_int_word, SyntaxError, Tok, Tokens};
use crate::value::{apply_binop, apply_unop, BinOp, EvalError, UnOp, Value};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term<A> {
    Const(Value),
    Atom(A),
    Unary(UnOp, Box<Term<A>>),
    Binary(BinOp, Box<Term<A>>, Box<Term<A>>),
}

impl<A> Term<A> {
    pub fn eval<E, F>(&self, atom: &mut F, bound: i64) -> Result<Value, E>
    where
        E: From<EvalError>,
        F: FnMut(&A) -> Result<Value, E>,
    {
        match self {
            Term::Const(v) => Ok(*v),
            Term::Atom(a) => atom(a),
            Term::Unary(op, e) => Ok(apply_unop(*op, e.eval(atom, bound)?, bound)?),
            Term::Binary(op @ (BinOp::And | BinOp::Or | BinOp::Implies), l, r) => {
                let lhs = l.eval(atom, bound)?.as_bool()?;
                let short = match op {
                    BinOp::And => (!lhs).then_some(false),
                    BinOp::Or => lhs.then_some(true),
                    _ => (!lhs).then_some(true),
                };
                match short {
                    Some(b) => Ok(Value::Bool(b)),
                    None => Ok(Value::Bool(r.eval(atom, bound)?.as_bool()?)),
                }
            }
            Term::Binary(op, l, r) => {
                let a = l.eval(atom, bound)?;
                let b = r.eval(atom, bound)?;
                Ok(apply_binop(*op, a, b, bound)?)
            }
        }
    }

    pub fn visit_atoms<'a>(&'a self, f: &mut impl FnMut(&'a A)) {
        match self {
            Term::Const(_) => {}
            Term::Atom(a) => f(a),
            Term::Unary(_, e) => e.visit_atoms(f),
            Term::Binary(_, l, r) => {
                l.visit_atoms(f);
                r.visit_atoms(f);
            }
        }
    }

    pub fn atoms(&self) -> Vec<&A> {
        let mut out = Vec::new();
        self.visit_atoms(&mut |a| out.push(a));
        out
    }

    pub fn try_map<B, E>(&self, f: &mut impl FnMut(&A) -> Result<B, E>) -> Result<Term<B>, E> {
        Ok(match self {
            Term::Const(v) => Term::Const(*v),
            Term::Atom(a) => Term::Atom(f(a)?),
            Term::Unary(op, e) => Term::Unary(*op, Box::new(e.try_map(f)?)),
            Term::Binary(op, l, r) => Term::Binary(*op, Box::new(l.try_map(f)?), Box::new(r.try_map(f)?)),
        })
    }
}

/// Precedence-climbing parser; `atom` is called on every non-literal word and
/// may consume trailing tokens (subscripts, qualifiers, argument lists).
pub fn parse_term<A>(
    ts: &mut Tokens,
    atom: &mut dyn FnMut(&mut Tokens, String) -> Result<A, SyntaxError>,
) -> Result<Term<A>, SyntaxError> {
    parse_binary(ts, atom, 1)
}

fn binop_here(ts: &Tokens) -> Option<BinOp> {
    let Tok::Sym(s) = ts.peek() else { return None };
    Some(match *s {
        "+" => BinOp::Add,
        "-" => BinOp::Sub,
        "*" => BinOp::Mul,
        "/" => BinOp::Div,
        "==" | "=" => BinOp::Eq,
        "!=" => BinOp::Ne,
        "<" => BinOp::Lt,
        "<=" => BinOp::Le,
        ">" => BinOp::Gt,
        ">=" => BinOp::Ge,
        "&&" => BinOp::And,
        "||" => BinOp::Or,
        "->" => BinOp::Implies,
        _ => return None,
    })
}

fn parse_binary<A>(
    ts: &mut Tokens,
    atom: &mut dyn FnMut(&mut Tokens, String) -> Result<A, SyntaxError>,
    min_prec: u8,
) -> Result<Term<A>, SyntaxError> {
    let mut lhs = parse_unary(ts, atom)?;
    while let Some(op) = binop_here(ts) {
        let prec = op.precedence();
        if prec < min_prec {
            break;
        }
        ts.next();
        // `->` is right associative, everything else left associative.
        let next_min = if op == BinOp::Implies { prec } else { prec + 1 };
        let rhs = parse_binary(ts, atom, next_min)?;
        lhs = Term::Binary(op, Box::new(lhs), Box::new(rhs));
    }
    Ok(lhs)
}

fn parse_unary<A>(
    ts: &mut Tokens,
    atom: &mut dyn FnMut(&mut Tokens, String) -> Result<A, SyntaxError>,
) -> Result<Term<A>, SyntaxError> {
    if ts.eat_sym("!") {
        return Ok(Term::Unary(UnOp::Not, Box::new(parse_unary(ts, atom)?)));
    }
    if ts.is_sym("-") {
        if let Tok::Word(w) = ts.peek_at(1) {
            if is_int_word(w) {
                return Ok(Term::Const(Value::Int(ts.int()?)));
            }
        }
        ts.next();
        return Ok(Term::Unary(UnOp::Neg, Box::new(parse_unary(ts, atom)?)));
    }
    parse_primary(ts, atom)
}

fn parse_primary<A>(
    ts: &mut Tokens,
    atom: &mut dyn FnMut(&mut Tokens, String) -> Result<A, SyntaxError>,
) -> Result<Term<A>, SyntaxError> {
    if ts.eat_sym("(") {
        let e = parse_binary(ts, atom, 1)?;
        ts.expect_sym(")")?;
        return Ok(e);
    }
    match ts.peek().clone() {
        Tok::Word(w) if is_int_word(&w) => Ok(Term::Const(Value::Int(ts.int()?))),
        Tok::Word(w) if w == "true" || w == "false" => {
            ts.next();
            Ok(Term::Const(Value::Bool(w == "true")))
        }
        Tok::Word(w) => {
            ts.next();
            Ok(Term::Atom(atom(ts, w)?))
        }
        _ => Err(ts.unexpected("an expression")),
    }
}

/// Prints with parentheses around every compound operand, which is enough for
/// `parse(print(e)) == e`.
pub struct DisplayTerm<'a, A, F>(pub &'a Term<A>, pub &'a F)
where
    F: Fn(&A, &mut fmt::Formatter<'_>) -> fmt::Result;

impl<A, F> fmt::Display for DisplayTerm<'_, A, F>
where
    F: Fn(&A, &mut fmt::Formatter<'_>) -> fmt::Result,
{
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(self.0, self.1, f)
    }
}

fn write_term<A, F>(t: &Term<A>, atom: &F, f: &mut fmt::Formatter<'_>) -> fmt::Result
where
    F: Fn(&A, &mut fmt::Formatter<'_>) -> fmt::Result,
{
    let operand = |t: &Term<A>, f: &mut fmt::Formatter<'_>| -> fmt::Result {
        match t {
            Term::Atom(_) | Term::Const(Value::Bool(_)) => write_term(t, atom, f),
            Term::Const(Value::Int(n)) if *n >= 0 => write_term(t, atom, f),
            _ => {
                write!(f, "(")?;
                write_term(t, atom, f)?;
                write!(f, ")")
            }
        }
    };
    match t {
        Term::Const(v) => write!(f, "{v}"),
        Term::Atom(a) => atom(a, f),
        Term::Unary(op, e) => {
            write!(f, "{}", op.symbol())?;
            if matches!(**e, Term::Atom(_)) {
                write_term(e, atom, f)
            } else {
                write!(f, "(")?;
                write_term(e, atom, f)?;
                write!(f, ")")
            }
        }
        Term::Binary(op, l, r) => {
            operand(l, f)?;
            write!(f, " {} ", op.symbol())?;
            operand(r, f)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(src: &str) -> Term<String> {
        let mut ts = Tokens::new(src).unwrap();
        parse_term(&mut ts, &mut |_, w| Ok(w)).unwrap()
    }

    fn eval(t: &Term<String>) -> Result<Value, EvalError> {
        t.eval(&mut |a: &String| if a == "x" { Ok(Value::Int(3)) } else { Err(EvalError::Unbound(a.clone())) }, 100)
    }

    #[test]
    fn precedence_and_unary_minus() {
        assert_eq!(eval(&parse("1 + 2 * x")), Ok(Value::Int(7)));
        assert_eq!(eval(&parse("-1 - -x")), Ok(Value::Int(2)));
        assert_eq!(eval(&parse("x = 3 && !(x < 2)")), Ok(Value::Bool(true)));
    }

    #[test]
    fn boolean_connectives_short_circuit() {
        assert_eq!(eval(&parse("false && y")), Ok(Value::Bool(false)));
        assert_eq!(eval(&parse("true || y")), Ok(Value::Bool(true)));
        assert!(eval(&parse("true && y")).is_err());
    }

    #[test]
    fn printing_round_trips() {
        for src in ["(a + b) * -1", "!(a && b) || c -> d", "a - (b - c)", "-(a) + 2", "-(1) * 2"] {
            let t = parse(src);
            let printed = DisplayTerm(&t, &|a: &String, f: &mut fmt::Formatter<'_>| write!(f, "{a}")).to_string();
            assert_eq!(parse(&printed), t, "{src} -> {printed}");
        }
    }
}
