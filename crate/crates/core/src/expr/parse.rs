//! Infix parser for expressions.
//!
//! Grammar: `+ - * / ^`, parentheses, integer and decimal literals,
//! `sin cos tan cot sec csc exp` of integer multiples of a coordinate or jet,
//! and jets written `D(f,k)(t)`. Identifiers are coordinates unless listed as
//! constants in the [`ParseContext`].

use std::collections::HashSet;

use num_bigint::BigInt;
use num_traits::Zero;

use super::{Expr, ExprError, ExprResult, Q, Sym};

/// Names to treat as constants rather than coordinates.
#[derive(Clone, Debug, Default)]
pub struct ParseContext {
    pub constants: HashSet<String>,
}

impl ParseContext {
    pub fn with_constants<I: IntoIterator<Item = S>, S: Into<String>>(names: I) -> Self {
        ParseContext { constants: names.into_iter().map(Into::into).collect() }
    }
}

pub fn parse(src: &str) -> ExprResult<Expr> {
    parse_with(src, &ParseContext::default())
}

pub fn parse_with(src: &str, ctx: &ParseContext) -> ExprResult<Expr> {
    let tokens = lex(src)?;
    let mut p = Parser { tokens, pos: 0, ctx };
    let e = p.expr()?;
    if p.pos < p.tokens.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Q),
    Ident(String),
    Op(char),
}

fn lex(src: &str) -> ExprResult<Vec<(Tok, usize)>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let int: String = chars[start..i].iter().collect();
            let mut value = Q::from_integer(int.parse::<BigInt>().unwrap_or_default());
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                let fs = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let frac: String = chars[fs..i].iter().collect();
                if !frac.is_empty() {
                    let scale = num_traits::pow(BigInt::from(10), frac.len());
                    value += Q::new(frac.parse::<BigInt>().unwrap(), scale);
                }
            }
            out.push((Tok::Num(value), start));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), start));
        } else if "+-*/^(),".contains(c) {
            out.push((Tok::Op(c), i));
            i += 1;
        } else {
            return Err(ExprError::Parse { pos: i, msg: format!("unexpected character `{c}`") });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
    ctx: &'a ParseContext,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> ExprError {
        let pos = self.tokens.get(self.pos).map(|t| t.1).unwrap_or(usize::MAX);
        ExprError::Parse { pos, msg: msg.to_string() }
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.0)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> ExprResult<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&format!("expected `{c}`")))
        }
    }

    fn expr(&mut self) -> ExprResult<Expr> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = &acc + &self.term()?;
            } else if self.eat('-') {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> ExprResult<Expr> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = &acc * &self.unary()?;
            } else if self.eat('/') {
                let d = self.unary()?;
                acc = acc.try_div(&d)?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> ExprResult<Expr> {
        if self.eat('-') {
            return Ok(-&self.unary()?);
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> ExprResult<Expr> {
        let base = self.atom()?;
        if self.eat('^') {
            let n = self.exponent()?;
            return base.pow(n);
        }
        Ok(base)
    }

    fn exponent(&mut self) -> ExprResult<i32> {
        let neg = self.eat('-');
        let paren = !neg && self.eat('(');
        let neg = neg || (paren && self.eat('-'));
        let n = match self.peek().cloned() {
            Some(Tok::Num(q)) if q.is_integer() => {
                self.pos += 1;
                i32::try_from(q.to_integer()).map_err(|_| self.error("exponent too large"))?
            }
            _ => return Err(self.error("expected integer exponent")),
        };
        if paren {
            self.expect(')')?;
        }
        Ok(if neg { -n } else { n })
    }

    fn atom(&mut self) -> ExprResult<Expr> {
        match self.peek().cloned() {
            Some(Tok::Num(q)) => {
                self.pos += 1;
                Ok(Expr::rational(q))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if self.peek() == Some(&Tok::Op('(')) {
                    return self.call(&name);
                }
                Ok(self.identifier(&name))
            }
            _ => Err(self.error("expected expression")),
        }
    }

    fn identifier(&self, name: &str) -> Expr {
        let known_const = Sym::lookup(name).is_some_and(|s| s.kind() == super::SymKind::Const);
        if self.ctx.constants.contains(name) || known_const {
            Expr::sym(Sym::constant(name))
        } else {
            Expr::sym(Sym::coord(name))
        }
    }

    fn call(&mut self, name: &str) -> ExprResult<Expr> {
        self.expect('(')?;
        if name == "D" {
            let func = match self.peek().cloned() {
                Some(Tok::Ident(f)) => f,
                _ => return Err(self.error("expected function name")),
            };
            self.pos += 1;
            self.expect(',')?;
            let order = match self.peek().cloned() {
                Some(Tok::Num(q)) if q.is_integer() && q >= Q::zero() => q.to_integer(),
                _ => return Err(self.error("expected derivative order")),
            };
            self.pos += 1;
            self.expect(')')?;
            self.expect('(')?;
            match self.peek() {
                Some(Tok::Ident(t)) if t == "t" => self.pos += 1,
                _ => return Err(self.error("jets depend on `t` only")),
            }
            self.expect(')')?;
            let order = u32::try_from(order).map_err(|_| self.error("order too large"))?;
            return Ok(Expr::sym(Sym::jet(&func, order)));
        }
        let arg = self.expr()?;
        self.expect(')')?;
        match name {
            "sin" => Expr::sin(&arg),
            "cos" => Expr::cos(&arg),
            "tan" => Expr::sin(&arg)?.try_div(&Expr::cos(&arg)?),
            "cot" => Expr::cos(&arg)?.try_div(&Expr::sin(&arg)?),
            "sec" => Expr::cos(&arg)?.recip(),
            "csc" => Expr::sin(&arg)?.recip(),
            "exp" => Expr::exp(&arg),
            _ => {
                if arg.as_symbol() == Some(Sym::time()) {
                    return Ok(Expr::sym(Sym::jet(name, 0)));
                }
                Err(self.error(&format!("unknown function `{name}`")))
            }
        }
    }
}
