//! Expression trees for inverse score formulas, evaluated over intervals.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use crate::interval::{integer, Interval, IntervalError, Quotient, Rational};

/// Leaves an inverse formula may refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    /// The score value (an uncertainty interval).
    Value,
    /// The confusion-matrix figure held fixed (tp when solving for tn and vice versa).
    Known,
    P,
    N,
    BetaPlus,
    BetaMinus,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Var(Var),
    Const(Rational),
    Add(Arc<Expr>, Arc<Expr>),
    Sub(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
    Neg(Arc<Expr>),
    Square(Arc<Expr>),
    Sqrt(Arc<Expr>),
}

/// Bindings for the leaves of an [`Expr`].
#[derive(Debug, Clone)]
pub struct EvalContext {
    pub value: Interval,
    pub known: Rational,
    pub p: Rational,
    pub n: Rational,
    pub beta_plus: Rational,
    pub beta_minus: Rational,
}

/// Interval enclosure of an expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Eval {
    Finite(Interval),
    /// Some divisor contained zero; nothing is known about the result.
    WholeLine,
    /// A square root of an entirely negative interval: no real value exists.
    Empty,
}

impl Expr {
    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    pub fn int(x: i64) -> Expr {
        Expr::Const(integer(x))
    }

    pub fn frac(numer: i64, denom: i64) -> Expr {
        Expr::Const(Rational::new(numer.into(), denom.into()))
    }

    pub fn square(self) -> Expr {
        Expr::Square(Arc::new(self))
    }

    pub fn sqrt(self) -> Expr {
        Expr::Sqrt(Arc::new(self))
    }

    pub fn eval(&self, ctx: &EvalContext) -> Eval {
        use Eval::*;
        match self {
            Expr::Var(v) => Finite(match v {
                Var::Value => ctx.value.clone(),
                Var::Known => Interval::point(ctx.known.clone()),
                Var::P => Interval::point(ctx.p.clone()),
                Var::N => Interval::point(ctx.n.clone()),
                Var::BetaPlus => Interval::point(ctx.beta_plus.clone()),
                Var::BetaMinus => Interval::point(ctx.beta_minus.clone()),
            }),
            Expr::Const(c) => Finite(Interval::point(c.clone())),
            Expr::Add(a, b) => binary(a, b, ctx, |x, y| Finite(x + y)),
            Expr::Sub(a, b) => binary(a, b, ctx, |x, y| Finite(x - y)),
            Expr::Mul(a, b) => binary(a, b, ctx, |x, y| Finite(x * y)),
            Expr::Div(a, b) => binary(a, b, ctx, |x, y| match x.div(y) {
                Quotient::Finite(q) => Finite(q),
                Quotient::WholeLine => WholeLine,
            }),
            Expr::Neg(a) => match a.eval(ctx) {
                Finite(x) => Finite(-&x),
                other => other,
            },
            Expr::Square(a) => match a.eval(ctx) {
                Finite(x) => Finite(x.square()),
                other => other,
            },
            Expr::Sqrt(a) => match a.eval(ctx) {
                Finite(x) => match x.sqrt() {
                    Ok(r) => Finite(r),
                    Err(IntervalError::EmptyDomain) => Empty,
                    Err(_) => unreachable!("sqrt only fails on empty domains"),
                },
                other => other,
            },
        }
    }
}

fn binary(
    a: &Expr,
    b: &Expr,
    ctx: &EvalContext,
    op: impl FnOnce(&Interval, &Interval) -> Eval,
) -> Eval {
    let lhs = a.eval(ctx);
    if lhs == Eval::Empty {
        return Eval::Empty;
    }
    let rhs = b.eval(ctx);
    match (lhs, rhs) {
        (_, Eval::Empty) => Eval::Empty,
        (Eval::Finite(x), Eval::Finite(y)) => op(&x, &y),
        _ => Eval::WholeLine,
    }
}

macro_rules! expr_op {
    ($tr:ident, $method:ident, $variant:ident) => {
        impl $tr for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$variant(Arc::new(self), Arc::new(rhs))
            }
        }
    };
}
expr_op!(Add, add, Add);
expr_op!(Sub, sub, Sub);
expr_op!(Mul, mul, Mul);
expr_op!(Div, div, Div);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Arc::new(self))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Var(v) => write!(
                f,
                "{}",
                match v {
                    Var::Value => "v",
                    Var::Known => "k",
                    Var::P => "p",
                    Var::N => "n",
                    Var::BetaPlus => "beta_plus",
                    Var::BetaMinus => "beta_minus",
                }
            ),
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "{a}*{b}"),
            Expr::Div(a, b) => write!(f, "{a}/{b}"),
            Expr::Neg(a) => write!(f, "-{a}"),
            Expr::Square(a) => write!(f, "{a}^2"),
            Expr::Sqrt(a) => write!(f, "sqrt({a})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::rational;

    fn ctx(value: Interval) -> EvalContext {
        EvalContext {
            value,
            known: integer(30),
            p: integer(40),
            n: integer(70),
            beta_plus: integer(1),
            beta_minus: integer(1),
        }
    }

    #[test]
    fn evaluates_accuracy_inverse() {
        let v = Expr::var(Var::Value);
        let e = v * (Expr::var(Var::N) + Expr::var(Var::P)) - Expr::var(Var::Known);
        let value = Interval::new(rational(926, 1000), rational(928, 1000)).unwrap();
        assert_eq!(
            e.eval(&ctx(value)),
            Eval::Finite(Interval::new(rational(7186, 100), rational(7208, 100)).unwrap())
        );
    }

    #[test]
    fn division_by_zero_and_empty_propagation() {
        let value = Interval::new(rational(-1, 10), rational(1, 10)).unwrap();
        let e = Expr::var(Var::Known) / Expr::var(Var::Value);
        assert_eq!(e.eval(&ctx(value.clone())), Eval::WholeLine);

        let neg = (Expr::int(-5) + Expr::var(Var::Value)).sqrt();
        assert_eq!(neg.eval(&ctx(value.clone())), Eval::Empty);
        // Empty wins over WholeLine: no real root exists on this branch.
        let both = e + neg;
        assert_eq!(both.eval(&ctx(value)), Eval::Empty);
    }
}
