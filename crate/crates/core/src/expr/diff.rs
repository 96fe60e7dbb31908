use super::{Expr, Func};

pub(super) fn differentiate(e: &Expr, index: usize) -> Expr {
    match e {
        Expr::Const(_) => Expr::zero(),
        Expr::Var(v) => {
            if v.index == index {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Expr::Neg(a) => -differentiate(a, index),
        Expr::Add(a, b) => differentiate(a, index) + differentiate(b, index),
        Expr::Sub(a, b) => differentiate(a, index) - differentiate(b, index),
        Expr::Mul(a, b) => {
            let da = differentiate(a, index);
            let db = differentiate(b, index);
            da * (**b).clone() + (**a).clone() * db
        }
        Expr::Div(a, b) => {
            let da = differentiate(a, index);
            let db = differentiate(b, index);
            if db.is_zero() {
                return da / (**b).clone();
            }
            (da * (**b).clone() - (**a).clone() * db) / (**b).clone().powf(2.0)
        }
        Expr::Pow(a, p) => {
            let da = differentiate(a, index);
            if da.is_zero() {
                return Expr::zero();
            }
            Expr::Const(*p) * (**a).clone().powf(p - 1.0) * da
        }
        Expr::Call(func, a) => {
            let du = differentiate(a, index);
            if du.is_zero() {
                return Expr::zero();
            }
            let u = (**a).clone();
            match func {
                Func::Exp => Expr::call(Func::Exp, u) * du,
                Func::Log => du / u,
                Func::Sin => Expr::call(Func::Cos, u) * du,
                Func::Cos => -(Expr::call(Func::Sin, u) * du),
                Func::Tan => du / Expr::call(Func::Cos, u).powf(2.0),
                Func::Sqrt => du / (Expr::Const(2.0) * Expr::call(Func::Sqrt, u)),
                // sign(u) written as u/abs(u); undefined where u = 0
                Func::Abs => (u.clone() / Expr::call(Func::Abs, u)) * du,
                Func::Atan => du / (Expr::one() + u.powf(2.0)),
            }
        }
    }
}
