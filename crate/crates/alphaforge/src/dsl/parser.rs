//! Recursive-descent parser for the factor grammar.
//!
//! Infix arithmetic with the usual precedence (`*` `/` over `+` `-`,
//! comparisons lowest), uppercase function calls for library operators,
//! `$name` feature leaves, and numeric literals. Infix comparisons are
//! sugar for the GT/LT/GE/LE library operators.

use super::ops::{self, OperatorSpec, ParamKind, ParamValue};
use super::{DslError, Expr, FeatureField};

pub fn parse(source: &str) -> Result<Expr, DslError> {
    let tokens = lex(source)?;
    let mut p = Parser { tokens, pos: 0 };
    let expr = p.comparison()?;
    p.expect_eof()?;
    Ok(expr)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Feature(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    Comma,
    Lt,
    Gt,
    Le,
    Ge,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier {s}"),
            Tok::Feature(s) => format!("${s}"),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::Lt => "'<'".into(),
            Tok::Gt => "'>'".into(),
            Tok::Le => "'<='".into(),
            Tok::Ge => "'>='".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn lex(source: &str) -> Result<Vec<(Tok, usize)>, DslError> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => push(&mut tokens, Tok::Plus, &mut i, 1),
            '-' => push(&mut tokens, Tok::Minus, &mut i, 1),
            '*' => push(&mut tokens, Tok::Star, &mut i, 1),
            '/' => push(&mut tokens, Tok::Slash, &mut i, 1),
            '(' => push(&mut tokens, Tok::LParen, &mut i, 1),
            ')' => push(&mut tokens, Tok::RParen, &mut i, 1),
            ',' => push(&mut tokens, Tok::Comma, &mut i, 1),
            '<' if bytes.get(i + 1) == Some(&b'=') => push(&mut tokens, Tok::Le, &mut i, 2),
            '>' if bytes.get(i + 1) == Some(&b'=') => push(&mut tokens, Tok::Ge, &mut i, 2),
            '<' => push(&mut tokens, Tok::Lt, &mut i, 1),
            '>' => push(&mut tokens, Tok::Gt, &mut i, 1),
            '$' => {
                let start = i + 1;
                let end = ident_end(bytes, start);
                if end == start {
                    return Err(DslError::Syntax {
                        position: i,
                        expected: "feature name after '$'".into(),
                    });
                }
                tokens.push((Tok::Feature(source[start..end].to_string()), i));
                i = end;
            }
            '0'..='9' | '.' => {
                let start = i;
                let end = number_end(bytes, start);
                let text = &source[start..end];
                let value: f64 = text.parse().map_err(|_| DslError::Syntax {
                    position: start,
                    expected: "numeric literal".into(),
                })?;
                tokens.push((Tok::Num(value), start));
                i = end;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                let end = ident_end(bytes, start);
                tokens.push((Tok::Ident(source[start..end].to_string()), start));
                i = end;
            }
            _ => {
                return Err(DslError::Syntax {
                    position: i,
                    expected: format!("valid token, found {c:?}"),
                })
            }
        }
    }
    tokens.push((Tok::Eof, bytes.len()));
    Ok(tokens)
}

fn push(tokens: &mut Vec<(Tok, usize)>, tok: Tok, i: &mut usize, len: usize) {
    tokens.push((tok, *i));
    *i += len;
}

fn ident_end(bytes: &[u8], start: usize) -> usize {
    let mut end = start;
    while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
        end += 1;
    }
    end
}

fn number_end(bytes: &[u8], start: usize) -> usize {
    let mut end = start;
    while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
        end += 1;
    }
    // optional exponent
    if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
        let mut j = end + 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            j += 1;
        }
        if j < bytes.len() && bytes[j].is_ascii_digit() {
            end = j;
            while end < bytes.len() && bytes[end].is_ascii_digit() {
                end += 1;
            }
        }
    }
    end
}

struct Parser {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].0
    }

    fn peek_pos(&self) -> usize {
        self.tokens[self.pos].1
    }

    fn advance(&mut self) -> Tok {
        let t = self.tokens[self.pos].0.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), DslError> {
        if *self.peek() == want {
            self.advance();
            Ok(())
        } else {
            Err(DslError::Syntax {
                position: self.peek_pos(),
                expected: format!("{}, found {}", want.describe(), self.peek().describe()),
            })
        }
    }

    fn expect_eof(&mut self) -> Result<(), DslError> {
        self.expect(Tok::Eof)
    }

    fn comparison(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.additive()?;
        loop {
            let op_name = match self.peek() {
                Tok::Gt => "GT",
                Tok::Lt => "LT",
                Tok::Ge => "GE",
                Tok::Le => "LE",
                _ => break,
            };
            self.advance();
            let rhs = self.additive()?;
            lhs = Expr::apply(ops::lookup(op_name).unwrap(), vec![lhs, rhs], vec![]);
        }
        Ok(lhs)
    }

    fn additive(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op_name = match self.peek() {
                Tok::Plus => "ADD",
                Tok::Minus => "SUB",
                _ => break,
            };
            self.advance();
            let rhs = self.multiplicative()?;
            lhs = Expr::apply(ops::lookup(op_name).unwrap(), vec![lhs, rhs], vec![]);
        }
        Ok(lhs)
    }

    fn multiplicative(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.unary()?;
        loop {
            let op_name = match self.peek() {
                Tok::Star => "MUL",
                Tok::Slash => "DIV",
                _ => break,
            };
            self.advance();
            let rhs = self.unary()?;
            lhs = Expr::apply(ops::lookup(op_name).unwrap(), vec![lhs, rhs], vec![]);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, DslError> {
        if *self.peek() == Tok::Minus {
            self.advance();
            let inner = self.unary()?;
            // A negated literal is a constant leaf, not a NEG application.
            return Ok(match inner {
                Expr::Const(v) => Expr::Const(-v),
                other => Expr::apply(ops::lookup("NEG").unwrap(), vec![other], vec![]),
            });
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, DslError> {
        let pos = self.peek_pos();
        match self.advance() {
            Tok::Num(v) => Ok(Expr::Const(v)),
            Tok::Feature(name) => FeatureField::from_name(&name)
                .map(Expr::Feature)
                .ok_or(DslError::UnknownFeature(name)),
            Tok::LParen => {
                let e = self.comparison()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let op = ops::lookup(&name).ok_or_else(|| DslError::UnknownOperator(name.clone()))?;
                if op.infix.is_some() {
                    // ADD/SUB/... are infix-only spellings
                    return Err(DslError::UnknownOperator(name));
                }
                self.expect(Tok::LParen)?;
                self.call_args(op)
            }
            other => Err(DslError::Syntax {
                position: pos,
                expected: format!("expression, found {}", other.describe()),
            }),
        }
    }

    /// Parse the argument list of `op` after the opening parenthesis:
    /// `arity` child expressions followed by the declared parameter slots.
    fn call_args(&mut self, op: &'static OperatorSpec) -> Result<Expr, DslError> {
        let mut args: Vec<Expr> = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                args.push(self.comparison()?);
                if *self.peek() == Tok::Comma {
                    self.advance();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;

        let expected = op.arity + op.params.len();
        if args.len() != expected {
            return Err(DslError::Arity {
                op: op.name.to_string(),
                expected,
                got: args.len(),
            });
        }
        let params_args = args.split_off(op.arity);
        let mut params = Vec::with_capacity(op.params.len());
        for (arg, (slot, kind)) in params_args.into_iter().zip(op.params.iter()) {
            params.push(coerce_param(op, slot, *kind, arg)?);
        }
        Ok(Expr::apply(op, args, params))
    }
}

fn coerce_param(
    op: &OperatorSpec,
    slot: &str,
    kind: ParamKind,
    arg: Expr,
) -> Result<ParamValue, DslError> {
    let value = match arg {
        Expr::Const(v) => v,
        _ => {
            return Err(DslError::BadParameter {
                op: op.name.to_string(),
                slot: slot.to_string(),
                reason: "expected a numeric literal".into(),
            })
        }
    };
    match kind {
        ParamKind::Window => {
            if value.fract() != 0.0 || value < 1.0 || value > usize::MAX as f64 {
                Err(DslError::BadParameter {
                    op: op.name.to_string(),
                    slot: slot.to_string(),
                    reason: format!("window must be a positive integer, got {value}"),
                })
            } else {
                Ok(ParamValue::Window(value as usize))
            }
        }
        ParamKind::Scalar | ParamKind::Threshold => Ok(ParamValue::Real(value)),
    }
}
