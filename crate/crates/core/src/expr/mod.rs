//! Scalar expressions over named coordinates.
//!
//! Expressions are parsed from a small infix grammar, differentiated
//! symbolically and evaluated in double precision. They carry the
//! coefficient functions of one-forms, vector fields and metrics.

mod diff;
mod parser;

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use thiserror::Error;

pub use parser::parse_expr;

/// Function names understood by the parser.
pub const FUNCTIONS: [&str; 8] = ["exp", "log", "sin", "cos", "tan", "sqrt", "abs", "atan"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at byte {pos}: expected {expected}, found {found}")]
    Syntax {
        pos: usize,
        expected: String,
        found: String,
    },
    #[error("unknown identifier `{name}` at byte {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("invalid coordinate list: {0}")]
    Coordinates(String),
    #[error("domain error in `{subexpr}` at point {point:?}: {reason}")]
    Domain {
        point: Vec<f64>,
        subexpr: String,
        reason: String,
    },
    #[error("point has {found} components, expected {expected}")]
    PointLength { expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Tan,
    Sqrt,
    Abs,
    Atan,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "atan" => Func::Atan,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Atan => "atan",
        }
    }

    fn apply(self, u: f64) -> Result<f64, &'static str> {
        let v = match self {
            Func::Exp => u.exp(),
            Func::Log => {
                if u <= 0.0 {
                    return Err("logarithm of a non-positive value");
                }
                u.ln()
            }
            Func::Sin => u.sin(),
            Func::Cos => u.cos(),
            Func::Tan => u.tan(),
            Func::Sqrt => {
                if u < 0.0 {
                    return Err("square root of a negative value");
                }
                u.sqrt()
            }
            Func::Abs => u.abs(),
            Func::Atan => u.atan(),
        };
        Ok(v)
    }
}

/// A coordinate reference: position in the coordinate list plus its name.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Var {
    pub index: usize,
    pub name: Arc<str>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    /// Power with a constant exponent.
    Pow(Box<Expr>, f64),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn zero() -> Expr {
        Expr::Const(0.0)
    }

    pub fn one() -> Expr {
        Expr::Const(1.0)
    }

    pub fn var(index: usize, name: &str) -> Expr {
        Expr::Var(Var {
            index,
            name: Arc::from(name),
        })
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    pub fn powf(self, exponent: f64) -> Expr {
        if exponent == 1.0 {
            return self;
        }
        if exponent == 0.0 {
            return Expr::one();
        }
        match self {
            Expr::Const(c) => Expr::Const(c.powf(exponent)),
            e => Expr::Pow(Box::new(e), exponent),
        }
    }

    pub fn call(func: Func, arg: Expr) -> Expr {
        if let Expr::Const(c) = arg {
            if let Ok(v) = func.apply(c) {
                if v.is_finite() {
                    return Expr::Const(v);
                }
            }
        }
        Expr::Call(func, Box::new(arg))
    }

    /// Largest coordinate index referenced, if any.
    pub fn max_var_index(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(v) => Some(v.index),
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.max_var_index(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                match (a.max_var_index(), b.max_var_index()) {
                    (Some(x), Some(y)) => Some(x.max(y)),
                    (x, y) => x.or(y),
                }
            }
        }
    }

    /// Symbolic partial derivative with respect to the coordinate at `index`.
    pub fn differentiate(&self, index: usize) -> Expr {
        diff::differentiate(self, index)
    }

    /// Evaluate at `point`; any non-finite intermediate is a domain error.
    pub fn evaluate(&self, point: &[f64]) -> Result<f64, ExprError> {
        self.eval_inner(point).map_err(|(node, reason)| ExprError::Domain {
            point: point.to_vec(),
            subexpr: node.to_string(),
            reason: reason.to_string(),
        })
    }

    fn eval_inner<'a>(&'a self, point: &[f64]) -> Result<f64, (&'a Expr, &'static str)> {
        let v = match self {
            Expr::Const(c) => *c,
            Expr::Var(v) => match point.get(v.index) {
                Some(x) => *x,
                None => return Err((self, "coordinate index outside the point")),
            },
            Expr::Neg(a) => -a.eval_inner(point)?,
            Expr::Add(a, b) => a.eval_inner(point)? + b.eval_inner(point)?,
            Expr::Sub(a, b) => a.eval_inner(point)? - b.eval_inner(point)?,
            Expr::Mul(a, b) => a.eval_inner(point)? * b.eval_inner(point)?,
            Expr::Div(a, b) => {
                let num = a.eval_inner(point)?;
                let den = b.eval_inner(point)?;
                if den == 0.0 {
                    return Err((self, "division by zero"));
                }
                num / den
            }
            Expr::Pow(a, p) => {
                let base = a.eval_inner(point)?;
                if base < 0.0 && p.fract() != 0.0 {
                    return Err((self, "non-integer power of a negative value"));
                }
                if base == 0.0 && *p < 0.0 {
                    return Err((self, "negative power of zero"));
                }
                base.powf(*p)
            }
            Expr::Call(f, a) => {
                let u = a.eval_inner(point)?;
                f.apply(u).map_err(|reason| (self, reason))?
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err((self, "non-finite value"))
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Const(c) if *c < 0.0 || c.is_sign_negative() => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        match (self, rhs) {
            (Expr::Const(a), Expr::Const(b)) => Expr::Const(a + b),
            (a, b) if b.is_zero() => a,
            (a, b) if a.is_zero() => b,
            (a, b) => Expr::Add(Box::new(a), Box::new(b)),
        }
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        match (self, rhs) {
            (Expr::Const(a), Expr::Const(b)) => Expr::Const(a - b),
            (a, b) if b.is_zero() => a,
            (a, b) if a.is_zero() => -b,
            (a, b) => Expr::Sub(Box::new(a), Box::new(b)),
        }
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        match (self, rhs) {
            (Expr::Const(a), Expr::Const(b)) => Expr::Const(a * b),
            (a, b) if a.is_zero() || b.is_zero() => Expr::zero(),
            (a, b) if a.is_one() => b,
            (a, b) if b.is_one() => a,
            (a, b) => Expr::Mul(Box::new(a), Box::new(b)),
        }
    }
}

impl Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        match (self, rhs) {
            (Expr::Const(a), Expr::Const(b)) if b != 0.0 => Expr::Const(a / b),
            (a, b) if a.is_zero() && !b.is_zero() => Expr::zero(),
            (a, b) if b.is_one() => a,
            (a, b) => Expr::Div(Box::new(a), Box::new(b)),
        }
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(-c),
            Expr::Neg(a) => *a,
            e => Expr::Neg(Box::new(e)),
        }
    }
}

fn write_number(f: &mut fmt::Formatter<'_>, c: f64) -> fmt::Result {
    // `{:?}` is the shortest representation that reads back to the same bits.
    write!(f, "{:?}", c)
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({})", e)
    } else {
        write!(f, "{}", e)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => {
                if c.is_sign_negative() {
                    write!(f, "-")?;
                    write_number(f, -c)
                } else {
                    write_number(f, *c)
                }
            }
            Expr::Var(v) => write!(f, "{}", v.name),
            Expr::Neg(a) => {
                write!(f, "-")?;
                // unary minus binds looser than `^`, tighter than `*`
                write_operand(f, a, a.precedence() < 3)
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                let (op, prec) = match self {
                    Expr::Add(..) => ("+", 1),
                    Expr::Sub(..) => ("-", 1),
                    Expr::Mul(..) => ("*", 2),
                    _ => ("/", 2),
                };
                write_operand(f, a, a.precedence() < prec)?;
                write!(f, "{}", op)?;
                write_operand(f, b, b.precedence() <= prec)
            }
            Expr::Pow(a, p) => {
                write_operand(f, a, a.precedence() <= 4)?;
                write!(f, "^")?;
                write_number(f, *p)
            }
            Expr::Call(func, a) => write!(f, "{}({})", func.name(), a),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coords() -> Vec<String> {
        ["x1", "x2", "y1", "y2", "z"].iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn evaluate_simple() {
        let c = coords();
        let e = parse_expr("2*y2", &c).unwrap();
        assert_eq!(e.evaluate(&[0.0, 0.0, 0.0, 0.25, 0.0]).unwrap(), 0.5);
        let e = parse_expr("exp(y2)+1", &c).unwrap();
        assert_eq!(e.evaluate(&[0.0; 5]).unwrap(), 2.0);
    }

    #[test]
    fn sign_singularity_is_domain_error() {
        let c = coords();
        let e = parse_expr("y2/abs(y2)", &c).unwrap();
        match e.evaluate(&[0.0; 5]) {
            Err(ExprError::Domain { reason, .. }) => assert_eq!(reason, "division by zero"),
            other => panic!("expected domain error, got {:?}", other),
        }
        assert_eq!(e.evaluate(&[0.0, 0.0, 0.0, -3.0, 0.0]).unwrap(), -1.0);
    }

    #[test]
    fn log_of_nonpositive() {
        let c = coords();
        let e = parse_expr("log(y1)", &c).unwrap();
        assert!(matches!(e.evaluate(&[0.0; 5]), Err(ExprError::Domain { .. })));
    }

    #[test]
    fn wrong_point_length() {
        let c = coords();
        let e = parse_expr("z", &c).unwrap();
        assert!(e.evaluate(&[1.0]).is_err());
    }

    #[test]
    fn display_respects_precedence() {
        let c = coords();
        for text in ["-(y1+y2)*z", "y1-(y2-z)", "(y1^2)^3", "-y1^2", "x1/(x2*y1)", "(-y1)^2"] {
            let e = parse_expr(text, &c).unwrap();
            let back = parse_expr(&e.to_string(), &c).unwrap();
            assert_eq!(e, back, "{} printed as {}", text, e);
        }
    }

    #[test]
    fn folding_identities() {
        let x = Expr::var(0, "x");
        assert_eq!(x.clone() * Expr::one(), x);
        assert_eq!(x.clone() + Expr::zero(), x);
        assert!((x.clone() * Expr::zero()).is_zero());
        assert_eq!(Expr::constant(2.0) * Expr::constant(3.0), Expr::constant(6.0));
        assert_eq!(-(-x.clone()), x);
    }
}
