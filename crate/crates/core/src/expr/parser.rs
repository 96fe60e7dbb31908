use std::collections::HashSet;
use std::sync::Arc;

use super::{Expr, ExprError, Func, Var};

/// Parse `text` into an expression over the named coordinates.
///
/// Precedence from tightest to loosest: `^`, unary `-`, `*` `/`, `+` `-`.
/// Binary operators of equal precedence associate to the left. The exponent
/// of `^` must be a numeric literal (an optional sign is accepted).
pub fn parse_expr(text: &str, coords: &[String]) -> Result<Expr, ExprError> {
    check_coords(coords)?;
    let vars: Vec<Var> = coords
        .iter()
        .enumerate()
        .map(|(index, name)| Var {
            index,
            name: Arc::from(name.as_str()),
        })
        .collect();
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        vars: &vars,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error("operator or end of input"));
    }
    Ok(e)
}

fn check_coords(coords: &[String]) -> Result<(), ExprError> {
    if coords.is_empty() {
        return Err(ExprError::Coordinates("coordinate list is empty".into()));
    }
    let mut seen = HashSet::new();
    for name in coords {
        let valid = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
            && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !valid {
            return Err(ExprError::Coordinates(format!("`{}` is not an identifier", name)));
        }
        if Func::from_name(name).is_some() {
            return Err(ExprError::Coordinates(format!("`{}` is reserved for a function", name)));
        }
        if !seen.insert(name.as_str()) {
            return Err(ExprError::Coordinates(format!("`{}` appears twice", name)));
        }
    }
    Ok(())
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    vars: &'a [Var],
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn found(&self) -> String {
        match std::str::from_utf8(&self.src[self.pos.min(self.src.len())..])
            .ok()
            .and_then(|rest| rest.chars().next())
        {
            Some(c) => format!("`{}`", c),
            None => "end of input".to_string(),
        }
    }

    fn error(&self, expected: &str) -> ExprError {
        ExprError::Syntax {
            pos: self.pos,
            expected: expected.to_string(),
            found: self.found(),
        }
    }

    fn expect(&mut self, byte: u8) -> Result<(), ExprError> {
        if self.peek() == Some(byte) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("`{}`", byte as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    lhs = lhs + self.term()?;
                }
                Some(b'-') => {
                    self.pos += 1;
                    lhs = lhs - self.term()?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    lhs = lhs * self.unary()?;
                }
                Some(b'/') => {
                    self.pos += 1;
                    lhs = lhs / self.unary()?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(-self.unary()?);
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.peek() != Some(b'^') {
            return Ok(base);
        }
        self.pos += 1;
        let sign = match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                -1.0
            }
            Some(b'+') => {
                self.pos += 1;
                1.0
            }
            _ => 1.0,
        };
        self.skip_ws();
        match self.number()? {
            Some(p) => Ok(base.powf(sign * p)),
            None => Err(self.error("numeric exponent")),
        }
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => match self.number()? {
                Some(v) => Ok(Expr::Const(v)),
                None => Err(self.error("number")),
            },
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
                if let Some(func) = Func::from_name(name) {
                    self.expect(b'(')?;
                    let arg = self.expr()?;
                    self.expect(b')')?;
                    return Ok(Expr::call(func, arg));
                }
                match self.vars.iter().find(|v| &*v.name == name) {
                    Some(v) => Ok(Expr::Var(v.clone())),
                    None => Err(ExprError::UnknownIdentifier {
                        name: name.to_string(),
                        pos: start,
                    }),
                }
            }
            _ => Err(self.error("number, identifier or `(`")),
        }
    }

    /// Decimal literal with optional fraction and exponent part.
    fn number(&mut self) -> Result<Option<f64>, ExprError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut n = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            self.pos = start;
            return Ok(None);
        }
        if matches!(self.src.get(self.pos), Some(b'e') | Some(b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = mark;
                return Err(self.error("exponent digits"));
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
        text.parse::<f64>().map(Some).map_err(|_| ExprError::Syntax {
            pos: start,
            expected: "number".into(),
            found: format!("`{}`", text),
        })
    }
}
