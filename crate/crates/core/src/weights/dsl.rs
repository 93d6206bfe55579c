//! Recursive-descent parser for the weight expression language.
//!
//! ```text
//! atom := "one" | "pow(" float ")" | "pow2(" float ")"
//!       | "exp(" float "," float ")" | "loginv(" float ")"
//! expr := atom | "scale(" expr "," float ")" | "sum(" expr "," expr ")"
//! ```
//!
//! Whitespace between tokens is ignored.

use super::{RadialWeight, WeightExpr};
use crate::error::{Error, Result};

pub fn parse_weight(text: &str) -> Result<RadialWeight> {
    let mut p = Parser { src: text, pos: 0 };
    let expr = p.expr()?;
    p.skip_ws();
    if p.pos != text.len() {
        return Err(p.error("unexpected trailing input"));
    }
    RadialWeight::new(expr)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, msg: impl Into<String>) -> Error {
        Error::Syntax {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn expect(&mut self, tok: char) -> Result<()> {
        self.skip_ws();
        if self.rest().starts_with(tok) {
            self.pos += tok.len_utf8();
            Ok(())
        } else {
            Err(self.error(format!("expected '{tok}'")))
        }
    }

    fn ident(&mut self) -> Result<&'a str> {
        self.skip_ws();
        let rest = self.rest();
        let len = rest
            .char_indices()
            .find(|(_, c)| !c.is_ascii_alphanumeric())
            .map_or(rest.len(), |(i, _)| i);
        if len == 0 {
            return Err(self.error("expected a weight name"));
        }
        self.pos += len;
        Ok(&rest[..len])
    }

    fn float(&mut self) -> Result<f64> {
        self.skip_ws();
        let rest = self.rest();
        let bytes = rest.as_bytes();
        let mut i = 0;
        if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
            i += 1;
        }
        let digits_start = i;
        while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
            i += 1;
        }
        if i == digits_start {
            return Err(self.error("expected a number"));
        }
        if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
            let mut j = i + 1;
            if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                j += 1;
            }
            let exp_digits = j;
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            if j == exp_digits {
                return Err(self.error("malformed exponent"));
            }
            i = j;
        }
        let value: f64 = rest[..i]
            .parse()
            .map_err(|_| self.error(format!("malformed number '{}'", &rest[..i])))?;
        self.pos += i;
        Ok(value)
    }

    fn expr(&mut self) -> Result<WeightExpr> {
        let start = self.pos;
        let name = self.ident()?;
        let e = match name {
            "one" => WeightExpr::One,
            "pow" | "pow2" | "loginv" => {
                self.expect('(')?;
                let a = self.float()?;
                self.expect(')')?;
                match name {
                    "pow" => WeightExpr::Pow(a),
                    "pow2" => WeightExpr::Pow2(a),
                    _ => WeightExpr::LogInv(a),
                }
            }
            "exp" => {
                self.expect('(')?;
                let c = self.float()?;
                self.expect(',')?;
                let beta = self.float()?;
                self.expect(')')?;
                WeightExpr::Exp { c, beta }
            }
            "scale" => {
                self.expect('(')?;
                let inner = self.expr()?;
                self.expect(',')?;
                let s = self.float()?;
                self.expect(')')?;
                WeightExpr::Scale(Box::new(inner), s)
            }
            "sum" => {
                self.expect('(')?;
                let a = self.expr()?;
                self.expect(',')?;
                let b = self.expr()?;
                self.expect(')')?;
                WeightExpr::Sum(Box::new(a), Box::new(b))
            }
            other => {
                self.pos = start;
                self.skip_ws();
                return Err(self.error(format!("unknown weight '{other}'")));
            }
        };
        Ok(e)
    }
}
