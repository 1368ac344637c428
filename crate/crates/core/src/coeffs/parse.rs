//! Recursive-descent parser for the coefficient expression grammar.
//!
//! Grammar: numbers in decimal or scientific notation, the identifier `x`,
//! the constant `pi`, operators `+ - * / ^` (with `^` right-associative),
//! the functions `sin cos exp log abs step`, and parentheses.

use std::f64::consts::PI;

use super::expr::{self, Expr};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokenize(src: &'a str) -> Result<Vec<(usize, Token)>> {
        let mut lx = Lexer {
            src: src.as_bytes(),
            pos: 0,
        };
        let mut out = Vec::new();
        while let Some(tok) = lx.next_token()? {
            out.push(tok);
        }
        Ok(out)
    }

    fn next_token(&mut self) -> Result<Option<(usize, Token)>> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if self.pos >= self.src.len() {
            return Ok(None);
        }
        let start = self.pos;
        let c = self.src[self.pos];
        let tok = match c {
            b'+' => {
                self.pos += 1;
                Token::Plus
            }
            b'-' => {
                self.pos += 1;
                Token::Minus
            }
            b'*' => {
                self.pos += 1;
                Token::Star
            }
            b'/' => {
                self.pos += 1;
                Token::Slash
            }
            b'^' => {
                self.pos += 1;
                Token::Caret
            }
            b'(' => {
                self.pos += 1;
                Token::LParen
            }
            b')' => {
                self.pos += 1;
                Token::RParen
            }
            b'0'..=b'9' | b'.' => {
                let mut end = self.pos;
                let mut seen_exp = false;
                while end < self.src.len() {
                    let d = self.src[end];
                    if d.is_ascii_digit() || d == b'.' {
                        end += 1;
                    } else if (d == b'e' || d == b'E') && !seen_exp {
                        // scientific notation, possibly with a signed exponent
                        let mut k = end + 1;
                        if k < self.src.len() && (self.src[k] == b'+' || self.src[k] == b'-') {
                            k += 1;
                        }
                        if k < self.src.len() && self.src[k].is_ascii_digit() {
                            seen_exp = true;
                            end = k;
                        } else {
                            break;
                        }
                    } else {
                        break;
                    }
                }
                let text = std::str::from_utf8(&self.src[self.pos..end]).unwrap();
                let value = text.parse::<f64>().map_err(|_| Error::Parse {
                    offset: start,
                    message: format!("malformed number `{}`", text),
                })?;
                self.pos = end;
                Token::Number(value)
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let mut end = self.pos;
                while end < self.src.len()
                    && (self.src[end].is_ascii_alphanumeric() || self.src[end] == b'_')
                {
                    end += 1;
                }
                let name = std::str::from_utf8(&self.src[self.pos..end]).unwrap().to_string();
                self.pos = end;
                Token::Ident(name)
            }
            other => {
                return Err(Error::Parse {
                    offset: start,
                    message: format!("unexpected character `{}`", other as char),
                })
            }
        };
        Ok(Some((start, tok)))
    }
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn offset(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|(o, _)| *o)
            .unwrap_or(self.len)
    }

    fn expect(&mut self, tok: Token) -> Result<()> {
        let offset = self.offset();
        match self.bump() {
            Some(t) if t == tok => Ok(()),
            other => Err(Error::Parse {
                offset,
                message: format!("expected {:?}, found {:?}", tok, other),
            }),
        }
    }

    fn expression(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.bump();
                    lhs = expr::add(lhs, self.term()?);
                }
                Some(Token::Minus) => {
                    self.bump();
                    lhs = expr::sub(lhs, self.term()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.bump();
                    lhs = expr::mul(lhs, self.factor()?);
                }
                Some(Token::Slash) => {
                    self.bump();
                    lhs = expr::div(lhs, self.factor()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(Token::Minus) => {
                self.bump();
                Ok(expr::neg(self.factor()?))
            }
            Some(Token::Plus) => {
                self.bump();
                self.factor()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if let Some(Token::Caret) = self.peek() {
            self.bump();
            // right-associative; the exponent may carry a sign
            let exponent = self.factor()?;
            return Ok(expr::pow(base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let offset = self.offset();
        match self.bump() {
            Some(Token::Number(v)) => Ok(Expr::real(v)),
            Some(Token::LParen) => {
                let inner = self.expression()?;
                self.expect(Token::RParen)?;
                Ok(inner)
            }
            Some(Token::Ident(name)) => match name.as_str() {
                "x" => Ok(Expr::X),
                "pi" => Ok(Expr::real(PI)),
                "sin" | "cos" | "exp" | "log" | "abs" | "step" => {
                    self.expect(Token::LParen)?;
                    let arg = Box::new(self.expression()?);
                    self.expect(Token::RParen)?;
                    Ok(match name.as_str() {
                        "sin" => Expr::Sin(arg),
                        "cos" => Expr::Cos(arg),
                        "exp" => Expr::Exp(arg),
                        "log" => Expr::Log(arg),
                        "abs" => Expr::Abs(arg),
                        _ => Expr::Step(arg),
                    })
                }
                other => Err(Error::Parse {
                    offset,
                    message: format!("unknown identifier `{}`", other),
                }),
            },
            other => Err(Error::Parse {
                offset,
                message: format!("unexpected token {:?}", other),
            }),
        }
    }
}

/// Parse a single expression covering the whole input.
pub fn parse(src: &str) -> Result<Expr> {
    let tokens = Lexer::tokenize(src)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        len: src.len(),
    };
    let e = parser.expression()?;
    if parser.pos != parser.tokens.len() {
        return Err(Error::Parse {
            offset: parser.offset(),
            message: "trailing input".into(),
        });
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_scientific_and_powers() {
        let e = parse("2.5e-1 * x^2 + x^(-1/2)").unwrap();
        let v = e.eval(0.25).re;
        assert!((v - (0.25 * 0.0625 + 2.0)).abs() < 1e-14);
    }

    #[test]
    fn parses_pi_and_functions() {
        let e = parse("sin(pi*x)").unwrap();
        assert!((e.eval(0.5).re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn precedence_unary_minus_and_caret() {
        let e = parse("-x^2").unwrap();
        assert!((e.eval(2.0).re + 4.0).abs() < 1e-15);
        let f = parse("2^-2").unwrap();
        assert!((f.eval(0.0).re - 0.25).abs() < 1e-15);
    }

    #[test]
    fn rejects_unknown_identifier() {
        assert!(parse("y + 1").is_err());
        assert!(parse("1 +").is_err());
        assert!(parse("(1").is_err());
    }
}
