//! A small expression language for supplying scalar maps and random-variable
//! formulas as text.
//!
//! Grammar, lowest precedence first: additive (`+`, `-`) < multiplicative
//! (`*`, `/`) < unary minus < power (`^`, right associative) < atoms. Atoms are
//! number literals, the variable `x`, named constants, parenthesized expressions,
//! and calls `abs/sqrt/sin/cos/exp(e)` and `min/max(e, e)`. Whitespace is
//! insignificant. There are no conditionals: every expressible function of `x` is
//! continuous wherever it is defined.

use std::fmt;

use crate::error::{Error, Result};
use crate::measure::L0Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Abs,
    Sqrt,
    Sin,
    Cos,
    Exp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinFn {
    Min,
    Max,
}

/// Parsed expression tree.
#[derive(Clone, Debug, PartialEq)]
pub enum ExprAst {
    Number(f64),
    Var,
    Const(String),
    Unary(UnaryOp, Box<ExprAst>),
    Binary(BinOp, Box<ExprAst>, Box<ExprAst>),
    Call2(BinFn, Box<ExprAst>, Box<ExprAst>),
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

struct Lexer<'a> {
    text: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            text: text.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    /// Next token with its starting byte offset; `None` at end of input.
    fn next(&mut self) -> Result<Option<(Tok, usize)>> {
        self.skip_ws();
        if self.pos >= self.text.len() {
            return Ok(None);
        }
        let start = self.pos;
        let c = self.text[self.pos];
        let simple = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = simple {
            self.pos += 1;
            return Ok(Some((tok, start)));
        }
        if c.is_ascii_digit() || c == b'.' {
            let mut end = self.pos;
            while end < self.text.len()
                && (self.text[end].is_ascii_digit() || self.text[end] == b'.')
            {
                end += 1;
            }
            if end < self.text.len() && (self.text[end] == b'e' || self.text[end] == b'E') {
                let mut e = end + 1;
                if e < self.text.len() && (self.text[e] == b'+' || self.text[e] == b'-') {
                    e += 1;
                }
                if e < self.text.len() && self.text[e].is_ascii_digit() {
                    while e < self.text.len() && self.text[e].is_ascii_digit() {
                        e += 1;
                    }
                    end = e;
                }
            }
            let s = std::str::from_utf8(&self.text[start..end]).expect("ascii");
            let v: f64 = s.parse().map_err(|_| Error::Parse {
                offset: start,
                message: format!("invalid number literal '{s}'"),
            })?;
            self.pos = end;
            return Ok(Some((Tok::Num(v), start)));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let mut end = self.pos;
            while end < self.text.len()
                && (self.text[end].is_ascii_alphanumeric() || self.text[end] == b'_')
            {
                end += 1;
            }
            let s = std::str::from_utf8(&self.text[start..end])
                .expect("ascii")
                .to_string();
            self.pos = end;
            return Ok(Some((Tok::Ident(s), start)));
        }
        Err(Error::Parse {
            offset: start,
            message: format!("unexpected character '{}'", c as char),
        })
    }
}

// ---------------------------------------------------------------------------
// Parser (recursive descent)
// ---------------------------------------------------------------------------

struct Parser {
    toks: Vec<(Tok, usize)>,
    cursor: usize,
    end_offset: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.cursor).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks
            .get(self.cursor)
            .map(|(_, o)| *o)
            .unwrap_or(self.end_offset)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.cursor).map(|(t, _)| t.clone());
        if t.is_some() {
            self.cursor += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&tok) {
            self.cursor += 1;
            Ok(())
        } else {
            Err(Error::Parse {
                offset: self.offset(),
                message: format!("expected {what}"),
            })
        }
    }

    fn additive(&mut self) -> Result<ExprAst> {
        let mut lhs = self.multiplicative()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.cursor += 1;
                    let rhs = self.multiplicative()?;
                    lhs = ExprAst::Binary(BinOp::Add, Box::new(lhs), Box::new(rhs));
                }
                Some(Tok::Minus) => {
                    self.cursor += 1;
                    let rhs = self.multiplicative()?;
                    lhs = ExprAst::Binary(BinOp::Sub, Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn multiplicative(&mut self) -> Result<ExprAst> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.cursor += 1;
                    let rhs = self.unary()?;
                    lhs = ExprAst::Binary(BinOp::Mul, Box::new(lhs), Box::new(rhs));
                }
                Some(Tok::Slash) => {
                    self.cursor += 1;
                    let rhs = self.unary()?;
                    lhs = ExprAst::Binary(BinOp::Div, Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<ExprAst> {
        if self.peek() == Some(&Tok::Minus) {
            self.cursor += 1;
            let inner = self.unary()?;
            return Ok(ExprAst::Unary(UnaryOp::Neg, Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<ExprAst> {
        let base = self.atom()?;
        if self.peek() == Some(&Tok::Caret) {
            self.cursor += 1;
            // Right associative; the exponent may carry a unary minus.
            let expo = self.unary()?;
            return Ok(ExprAst::Binary(BinOp::Pow, Box::new(base), Box::new(expo)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<ExprAst> {
        let offset = self.offset();
        match self.bump() {
            Some(Tok::Num(v)) => Ok(ExprAst::Number(v)),
            Some(Tok::LParen) => {
                let inner = self.additive()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(inner)
            }
            Some(Tok::Ident(name)) => {
                if self.peek() == Some(&Tok::LParen) {
                    self.cursor += 1;
                    let unary = match name.as_str() {
                        "abs" => Some(UnaryOp::Abs),
                        "sqrt" => Some(UnaryOp::Sqrt),
                        "sin" => Some(UnaryOp::Sin),
                        "cos" => Some(UnaryOp::Cos),
                        "exp" => Some(UnaryOp::Exp),
                        _ => None,
                    };
                    if let Some(op) = unary {
                        let arg = self.additive()?;
                        self.expect(Tok::RParen, "')'")?;
                        return Ok(ExprAst::Unary(op, Box::new(arg)));
                    }
                    let binfn = match name.as_str() {
                        "min" => Some(BinFn::Min),
                        "max" => Some(BinFn::Max),
                        _ => None,
                    };
                    if let Some(f) = binfn {
                        let a = self.additive()?;
                        self.expect(Tok::Comma, "','")?;
                        let b = self.additive()?;
                        self.expect(Tok::RParen, "')'")?;
                        return Ok(ExprAst::Call2(f, Box::new(a), Box::new(b)));
                    }
                    Err(Error::Parse {
                        offset,
                        message: format!("unknown function '{name}'"),
                    })
                } else if name == "x" {
                    Ok(ExprAst::Var)
                } else {
                    Ok(ExprAst::Const(name))
                }
            }
            Some(_) => Err(Error::Parse {
                offset,
                message: "expected an operand".into(),
            }),
            None => Err(Error::Parse {
                offset,
                message: "expected an operand".into(),
            }),
        }
    }
}

/// Parses expression text into a tree.
pub fn parse_expr(text: &str) -> Result<ExprAst> {
    let mut lexer = Lexer::new(text);
    let mut toks = Vec::new();
    while let Some(t) = lexer.next()? {
        toks.push(t);
    }
    let mut parser = Parser {
        toks,
        cursor: 0,
        end_offset: text.len(),
    };
    let ast = parser.additive()?;
    if parser.cursor != parser.toks.len() {
        return Err(Error::Parse {
            offset: parser.offset(),
            message: "unexpected trailing input".into(),
        });
    }
    Ok(ast)
}

// ---------------------------------------------------------------------------
// Printer
// ---------------------------------------------------------------------------

fn precedence(e: &ExprAst) -> u8 {
    match e {
        ExprAst::Binary(BinOp::Add | BinOp::Sub, _, _) => 1,
        ExprAst::Binary(BinOp::Mul | BinOp::Div, _, _) => 2,
        ExprAst::Unary(UnaryOp::Neg, _) => 3,
        ExprAst::Binary(BinOp::Pow, _, _) => 4,
        _ => 5,
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &ExprAst, min_prec: u8) -> fmt::Result {
    if precedence(child) < min_prec {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for ExprAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprAst::Number(v) => write!(f, "{v:?}"),
            ExprAst::Var => write!(f, "x"),
            ExprAst::Const(name) => write!(f, "{name}"),
            ExprAst::Unary(UnaryOp::Neg, a) => {
                write!(f, "-")?;
                write_child(f, a, 3)
            }
            ExprAst::Unary(op, a) => {
                let name = match op {
                    UnaryOp::Abs => "abs",
                    UnaryOp::Sqrt => "sqrt",
                    UnaryOp::Sin => "sin",
                    UnaryOp::Cos => "cos",
                    UnaryOp::Exp => "exp",
                    UnaryOp::Neg => unreachable!(),
                };
                write!(f, "{name}({a})")
            }
            ExprAst::Binary(op, l, r) => {
                let (sym, prec) = match op {
                    BinOp::Add => ("+", 1),
                    BinOp::Sub => ("-", 1),
                    BinOp::Mul => ("*", 2),
                    BinOp::Div => ("/", 2),
                    BinOp::Pow => ("^", 4),
                };
                if *op == BinOp::Pow {
                    // Right associative: parenthesize a pow on the left, allow a
                    // unary-minus exponent on the right.
                    if precedence(l) <= 4 {
                        write!(f, "({l})")?;
                    } else {
                        write!(f, "{l}")?;
                    }
                    write!(f, "{sym}")?;
                    write_child(f, r, 3)
                } else {
                    write_child(f, l, prec)?;
                    write!(f, " {sym} ")?;
                    // Left associative: a right child at the same level re-groups.
                    write_child(f, r, prec + 1)
                }
            }
            ExprAst::Call2(func, a, b) => {
                let name = match func {
                    BinFn::Min => "min",
                    BinFn::Max => "max",
                };
                write!(f, "{name}({a}, {b})")
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Integer exponents of magnitude at most 16 are computed by repeated
/// multiplication; everything else goes through exp/log and requires a positive
/// base.
pub(crate) fn pow_scalar(base: f64, expo: f64) -> std::result::Result<f64, String> {
    if expo.fract() == 0.0 && expo.abs() <= 16.0 {
        let n = expo as i32;
        let mut acc = 1.0;
        for _ in 0..n.unsigned_abs() {
            acc *= base;
        }
        if n < 0 {
            if base == 0.0 {
                return Err("zero raised to a negative power".into());
            }
            acc = 1.0 / acc;
        }
        Ok(acc)
    } else if base > 0.0 {
        Ok((expo * base.ln()).exp())
    } else if base == 0.0 {
        if expo > 0.0 {
            Ok(0.0)
        } else {
            Err("zero raised to a non-positive power".into())
        }
    } else {
        Err(format!(
            "negative base {base} with non-integer exponent {expo}"
        ))
    }
}

/// Scalar evaluation with a constant lookup; errors carry a plain message and get
/// an atom id attached by the caller.
pub(crate) fn eval_scalar(
    ast: &ExprAst,
    consts: &impl Fn(&str) -> Option<f64>,
    x: f64,
) -> std::result::Result<f64, String> {
    match ast {
        ExprAst::Number(v) => Ok(*v),
        ExprAst::Var => Ok(x),
        ExprAst::Const(name) => consts(name).ok_or_else(|| format!("unbound constant '{name}'")),
        ExprAst::Unary(op, a) => {
            let v = eval_scalar(a, consts, x)?;
            match op {
                UnaryOp::Neg => Ok(-v),
                UnaryOp::Abs => Ok(v.abs()),
                UnaryOp::Sqrt => {
                    if v < 0.0 {
                        Err(format!("sqrt of negative value {v}"))
                    } else {
                        Ok(v.sqrt())
                    }
                }
                UnaryOp::Sin => Ok(v.sin()),
                UnaryOp::Cos => Ok(v.cos()),
                UnaryOp::Exp => Ok(v.exp()),
            }
        }
        ExprAst::Binary(op, l, r) => {
            let a = eval_scalar(l, consts, x)?;
            let b = eval_scalar(r, consts, x)?;
            match op {
                BinOp::Add => Ok(a + b),
                BinOp::Sub => Ok(a - b),
                BinOp::Mul => Ok(a * b),
                BinOp::Div => {
                    if b == 0.0 {
                        Err("division by zero".into())
                    } else {
                        Ok(a / b)
                    }
                }
                BinOp::Pow => pow_scalar(a, b),
            }
        }
        ExprAst::Call2(func, l, r) => {
            let a = eval_scalar(l, consts, x)?;
            let b = eval_scalar(r, consts, x)?;
            match func {
                BinFn::Min => Ok(a.min(b)),
                BinFn::Max => Ok(a.max(b)),
            }
        }
    }
}

/// Atomwise evaluation: the value at an atom depends only on that atom's `x` value
/// and constant bindings.
pub fn eval_expr(ast: &ExprAst, bindings: &[(String, L0Real)], x: &L0Real) -> Result<L0Real> {
    for (name, value) in bindings {
        if !value.space().same(x.space()) {
            return Err(Error::precondition(format!(
                "binding '{name}' lives on a different space"
            )));
        }
    }
    let space = x.space().clone();
    let mut values = Vec::with_capacity(space.len());
    for i in 0..space.len() {
        let lookup = |name: &str| {
            bindings
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, v)| v.get(i))
        };
        match eval_scalar(ast, &lookup, x.get(i)) {
            Ok(v) => values.push(v),
            Err(message) => {
                return Err(Error::Domain {
                    atom: space.id(i).to_string(),
                    message,
                })
            }
        }
    }
    space.l0(values)
}

// ---------------------------------------------------------------------------
// Random tree generation (property-test support)
// ---------------------------------------------------------------------------

use rand::Rng;
use rand_chacha::ChaCha20Rng;

/// Random expression tree of bounded depth over the constants `c` and `d`.
pub fn random_expr(rng: &mut ChaCha20Rng, depth: usize) -> ExprAst {
    if depth == 0 || rng.gen_range(0..10) == 0 {
        return match rng.gen_range(0..4) {
            0 => ExprAst::Var,
            1 => ExprAst::Const(if rng.gen() { "c".into() } else { "d".into() }),
            _ => {
                // Nonnegative literals only; negatives appear as unary minus.
                let v: f64 = rng.gen_range(0.0..4.0);
                let v = (v * 16.0).round() / 16.0;
                ExprAst::Number(v)
            }
        };
    }
    match rng.gen_range(0..12) {
        0 => ExprAst::Unary(UnaryOp::Neg, Box::new(random_expr(rng, depth - 1))),
        1 => ExprAst::Unary(UnaryOp::Abs, Box::new(random_expr(rng, depth - 1))),
        2 => ExprAst::Unary(UnaryOp::Sin, Box::new(random_expr(rng, depth - 1))),
        3 => ExprAst::Unary(UnaryOp::Cos, Box::new(random_expr(rng, depth - 1))),
        4 => ExprAst::Unary(UnaryOp::Exp, Box::new(random_expr(rng, depth - 1))),
        5 => ExprAst::Binary(
            BinOp::Add,
            Box::new(random_expr(rng, depth - 1)),
            Box::new(random_expr(rng, depth - 1)),
        ),
        6 => ExprAst::Binary(
            BinOp::Sub,
            Box::new(random_expr(rng, depth - 1)),
            Box::new(random_expr(rng, depth - 1)),
        ),
        7 | 8 => ExprAst::Binary(
            BinOp::Mul,
            Box::new(random_expr(rng, depth - 1)),
            Box::new(random_expr(rng, depth - 1)),
        ),
        9 => {
            let e: f64 = rng.gen_range(2..=4) as f64;
            ExprAst::Binary(
                BinOp::Pow,
                Box::new(random_expr(rng, depth - 1)),
                Box::new(ExprAst::Number(e)),
            )
        }
        10 => ExprAst::Call2(
            BinFn::Min,
            Box::new(random_expr(rng, depth - 1)),
            Box::new(random_expr(rng, depth - 1)),
        ),
        _ => ExprAst::Call2(
            BinFn::Max,
            Box::new(random_expr(rng, depth - 1)),
            Box::new(random_expr(rng, depth - 1)),
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::FiniteProbSpace;
    use crate::search::seeded_rng;

    #[test]
    fn grammar_examples() {
        let ast = parse_expr("x^3 - c").unwrap();
        assert_eq!(
            ast,
            ExprAst::Binary(
                BinOp::Sub,
                Box::new(ExprAst::Binary(
                    BinOp::Pow,
                    Box::new(ExprAst::Var),
                    Box::new(ExprAst::Number(3.0))
                )),
                Box::new(ExprAst::Const("c".into()))
            )
        );

        let ast = parse_expr("min(x, 1) * c").unwrap();
        assert_eq!(
            ast,
            ExprAst::Binary(
                BinOp::Mul,
                Box::new(ExprAst::Call2(
                    BinFn::Min,
                    Box::new(ExprAst::Var),
                    Box::new(ExprAst::Number(1.0))
                )),
                Box::new(ExprAst::Const("c".into()))
            )
        );
    }

    #[test]
    fn syntax_error_offsets() {
        match parse_expr("x +") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        match parse_expr("foo(x)") {
            Err(Error::Parse { offset, message }) => {
                assert_eq!(offset, 0);
                assert!(message.contains("unknown function"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(
            parse_expr("2 + 3 * 4").unwrap(),
            parse_expr("2 + (3 * 4)").unwrap()
        );
        assert_eq!(
            parse_expr("2 ^ 3 ^ 2").unwrap(),
            parse_expr("2 ^ (3 ^ 2)").unwrap()
        );
        assert_eq!(
            parse_expr("-x^2").unwrap(),
            ExprAst::Unary(
                UnaryOp::Neg,
                Box::new(ExprAst::Binary(
                    BinOp::Pow,
                    Box::new(ExprAst::Var),
                    Box::new(ExprAst::Number(2.0))
                ))
            )
        );
        // x^-2 parses with a unary-minus exponent
        assert!(parse_expr("x^-2").is_ok());
    }

    #[test]
    fn eval_examples() {
        let sp = FiniteProbSpace::uniform(&["a", "b"]).unwrap();
        let ast = parse_expr("x^3 - c").unwrap();
        let c = sp.l0(vec![1.0, 8.0]).unwrap();
        let x = sp.l0(vec![1.0, 2.0]).unwrap();
        let out = eval_expr(&ast, &[("c".into(), c)], &x).unwrap();
        assert_eq!(out.values(), &[0.0, 0.0]);

        let ast = parse_expr("abs(x)").unwrap();
        let x = sp.l0(vec![-3.0, 2.0]).unwrap();
        assert_eq!(eval_expr(&ast, &[], &x).unwrap().values(), &[3.0, 2.0]);

        let ast = parse_expr("sqrt(x)").unwrap();
        let x = sp.l0(vec![-1.0, 4.0]).unwrap();
        match eval_expr(&ast, &[], &x) {
            Err(Error::Domain { atom, .. }) => assert_eq!(atom, "a"),
            other => panic!("expected domain error, got {other:?}"),
        }

        let ast = parse_expr("x / c").unwrap();
        let c = sp.l0(vec![1.0, 0.0]).unwrap();
        let x = sp.constant(1.0);
        match eval_expr(&ast, &[("c".into(), c)], &x) {
            Err(Error::Domain { atom, .. }) => assert_eq!(atom, "b"),
            other => panic!("expected domain error, got {other:?}"),
        }

        let ast = parse_expr("x + y").unwrap();
        match eval_expr(&ast, &[], &sp.constant(0.0)) {
            Err(Error::Domain { message, .. }) => assert!(message.contains("unbound")),
            other => panic!("expected unbound-constant error, got {other:?}"),
        }
    }

    #[test]
    fn integer_power_is_repeated_multiplication() {
        assert_eq!(pow_scalar(-2.0, 3.0).unwrap(), -8.0);
        assert_eq!(pow_scalar(2.0, -2.0).unwrap(), 0.25);
        assert_eq!(pow_scalar(0.0, 0.0).unwrap(), 1.0);
        assert!(pow_scalar(0.0, -1.0).is_err());
        assert!(pow_scalar(-2.0, 0.5).is_err());
        assert!((pow_scalar(2.0, 0.5).unwrap() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn roundtrip_on_random_trees() {
        let mut rng = seeded_rng(11, 0);
        for _ in 0..500 {
            let tree = random_expr(&mut rng, 6);
            let printed = tree.to_string();
            let reparsed = parse_expr(&printed)
                .unwrap_or_else(|e| panic!("failed to reparse '{printed}': {e}"));
            assert_eq!(reparsed, tree, "round trip changed '{printed}'");
        }
    }

    // Independent oracle: a separate recursive evaluator using std powf/powi.
    fn oracle(ast: &ExprAst, c: f64, d: f64, x: f64) -> Option<f64> {
        Some(match ast {
            ExprAst::Number(v) => *v,
            ExprAst::Var => x,
            ExprAst::Const(name) => {
                if name == "c" {
                    c
                } else if name == "d" {
                    d
                } else {
                    return None;
                }
            }
            ExprAst::Unary(op, a) => {
                let v = oracle(a, c, d, x)?;
                match op {
                    UnaryOp::Neg => -v,
                    UnaryOp::Abs => v.abs(),
                    UnaryOp::Sqrt => {
                        if v < 0.0 {
                            return None;
                        }
                        v.sqrt()
                    }
                    UnaryOp::Sin => v.sin(),
                    UnaryOp::Cos => v.cos(),
                    UnaryOp::Exp => v.exp(),
                }
            }
            ExprAst::Binary(op, l, r) => {
                let a = oracle(l, c, d, x)?;
                let b = oracle(r, c, d, x)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return None;
                        }
                        a / b
                    }
                    BinOp::Pow => {
                        if b.fract() == 0.0 && b.abs() <= 16.0 {
                            if a == 0.0 && b < 0.0 {
                                return None;
                            }
                            a.powi(b as i32)
                        } else if a > 0.0 {
                            a.powf(b)
                        } else if a == 0.0 && b > 0.0 {
                            0.0
                        } else {
                            return None;
                        }
                    }
                }
            }
            ExprAst::Call2(f, l, r) => {
                let a = oracle(l, c, d, x)?;
                let b = oracle(r, c, d, x)?;
                match f {
                    BinFn::Min => a.min(b),
                    BinFn::Max => a.max(b),
                }
            }
        })
    }

    #[test]
    fn eval_matches_oracle() {
        let sp = FiniteProbSpace::uniform(&["a"]).unwrap();
        let mut rng = seeded_rng(23, 0);
        let mut checked = 0;
        for _ in 0..300 {
            let tree = random_expr(&mut rng, 5);
            let c: f64 = rng.gen_range(-2.0..2.0);
            let d: f64 = rng.gen_range(-2.0..2.0);
            let x: f64 = rng.gen_range(-2.0..2.0);
            let expected = oracle(&tree, c, d, x);
            let got = eval_expr(
                &tree,
                &[("c".into(), sp.constant(c)), ("d".into(), sp.constant(d))],
                &sp.constant(x),
            );
            match (expected, got) {
                (Some(e), Ok(v)) if e.is_finite() && v.get(0).is_finite() => {
                    let scale = 1.0f64.max(e.abs());
                    assert!(
                        (v.get(0) - e).abs() <= 1e-12 * scale,
                        "mismatch on {tree}: {e} vs {}",
                        v.get(0)
                    );
                    checked += 1;
                }
                (None, Err(_)) => checked += 1,
                // Overflow to inf on both sides is acceptable parity.
                (Some(e), Ok(v)) => {
                    assert_eq!(e.is_finite(), v.get(0).is_finite());
                }
                (Some(e), Err(err)) => {
                    panic!("oracle got {e} but eval failed on {tree}: {err}")
                }
                (None, Ok(v)) => panic!("oracle errored but eval got {} on {tree}", v.get(0)),
            }
        }
        assert!(checked > 200, "too few comparable cases: {checked}");
    }
}
