//! Forward formulas and closed-form inverses of the built-in scores.

use std::sync::Arc;

use num_traits::{One, Zero};

use super::{
    ConfusionCounts, Expr, Inverse, ScoreDefinition, ScoreError, ScoreId, ScoreParams, ScoreValue,
    ValueRange, Var,
};
use crate::interval::{integer, Rational};

fn v() -> Expr {
    Expr::var(Var::Value)
}
fn k() -> Expr {
    Expr::var(Var::Known)
}
fn p() -> Expr {
    Expr::var(Var::P)
}
fn n() -> Expr {
    Expr::var(Var::N)
}
fn c(x: i64) -> Expr {
    Expr::int(x)
}
fn beta_plus_sq() -> Expr {
    Expr::var(Var::BetaPlus).square()
}
fn beta_minus_sq() -> Expr {
    Expr::var(Var::BetaMinus).square()
}

fn one(e: Expr) -> Inverse {
    Inverse::Branches(vec![e])
}

/// Both branches `(base + root) / denom` and `(base - root) / denom`.
fn pm(base: Expr, root: Expr, denom: Expr) -> Inverse {
    Inverse::Branches(vec![
        (base.clone() + root.clone()) / denom.clone(),
        (base - root) / denom,
    ])
}

/// Exact figures of one confusion matrix as rationals.
struct Figures {
    tp: Rational,
    tn: Rational,
    fp: Rational,
    fn_: Rational,
    p: Rational,
    n: Rational,
}

impl Figures {
    fn new(c: &ConfusionCounts) -> Self {
        Figures {
            tp: integer(c.tp),
            tn: integer(c.tn),
            fp: integer(c.fp()),
            fn_: integer(c.fn_()),
            p: integer(c.p),
            n: integer(c.n),
        }
    }
}

fn undefined(id: ScoreId) -> ScoreError {
    ScoreError::Undefined {
        score: id.name().to_string(),
    }
}

fn ratio(id: ScoreId, numer: Rational, denom: Rational) -> Result<Rational, ScoreError> {
    if denom.is_zero() {
        Err(undefined(id))
    } else {
        Ok(numer / denom)
    }
}

/// Exact value of a built-in score.
pub(super) fn forward(
    id: ScoreId,
    counts: &ConfusionCounts,
    params: &ScoreParams,
) -> Result<ScoreValue, ScoreError> {
    use ScoreId::*;
    let f = Figures::new(counts);
    let exact = |r: Result<Rational, ScoreError>| r.map(ScoreValue::Exact);
    match id {
        Acc => exact(ratio(id, &f.tp + &f.tn, &f.p + &f.n)),
        Sens => exact(ratio(id, f.tp.clone(), f.p.clone())),
        Spec => exact(ratio(id, f.tn.clone(), f.n.clone())),
        Ppv => exact(ratio(id, f.tp.clone(), &f.tp + &f.fp)),
        Npv => exact(ratio(id, f.tn.clone(), &f.tn + &f.fn_)),
        Fbp => {
            let b2 = params.beta_plus() * params.beta_plus();
            let denom = &b2 * &f.p + &f.fp + &f.tp;
            exact(ratio(id, (b2 + Rational::one()) * &f.tp, denom))
        }
        Fbn => {
            let b2 = params.beta_minus() * params.beta_minus();
            let denom = &b2 * &f.n + &f.fn_ + &f.tn;
            exact(ratio(id, (b2 + Rational::one()) * &f.tn, denom))
        }
        Upm => {
            let total = &f.p + &f.n;
            let denom = &f.tn * (&total - &f.tn + &f.tp) + &f.tp * (&total + &f.tn - &f.tp);
            exact(ratio(id, integer(4) * &f.tp * &f.tn, denom))
        }
        Gm => Ok(ScoreValue::sqrt_of(&f.tp * &f.tn / (&f.p * &f.n))),
        Fm => {
            let x = ratio(id, &f.tp * &f.tp, &f.p * (&f.tp + &f.fp))?;
            Ok(ScoreValue::sqrt_of(x))
        }
        Mk => {
            let ppv = ratio(id, f.tp.clone(), &f.tp + &f.fp)?;
            let npv = ratio(id, f.tn.clone(), &f.tn + &f.fn_)?;
            exact(Ok(ppv + npv - Rational::one()))
        }
        Bm => exact(Ok(&f.tp / &f.p + &f.tn / &f.n - Rational::one())),
        Mcc => {
            let d = &f.p * &f.n * (&f.tp + &f.fp) * (&f.tn + &f.fn_);
            let numer = &f.tp * &f.tn - &f.fp * &f.fn_;
            let coeff = ratio(id, numer, d.clone())?;
            Ok(ScoreValue::surd(Rational::zero(), coeff, d))
        }
        Lrp => exact(ratio(id, &f.tp * &f.n, &f.fp * &f.p)),
        Lrn => exact(ratio(id, &f.fn_ * &f.n, &f.tn * &f.p)),
        Pt => {
            let s = &f.tp / &f.p;
            let q = &f.fp / &f.n;
            let gap = &s - &q;
            if gap.is_zero() {
                return Err(undefined(id));
            }
            Ok(ScoreValue::surd(-&q / &gap, gap.recip(), s * q))
        }
        Dor => exact(ratio(id, &f.tp * &f.tn, &f.fp * &f.fn_)),
        Ji => exact(ratio(id, f.tp.clone(), &f.p + &f.fp)),
        Bacc => exact(Ok((&f.tp / &f.p + &f.tn / &f.n) / integer(2))),
        Kappa => {
            let numer = integer(2) * (&f.n * &f.tp + &f.p * &f.tn - &f.n * &f.p);
            let denom = &f.n * &f.n + &f.p * &f.p + (&f.n - &f.p) * (&f.tp - &f.tn);
            exact(ratio(id, numer, denom))
        }
    }
}

/// Solutions for tn with tp known.
fn inverse_tn(id: ScoreId) -> Inverse {
    use ScoreId::*;
    match id {
        Acc => one(v() * (n() + p()) - k()),
        Sens => Inverse::Independent,
        Spec => one(n() * v()),
        Ppv => one(n() + k() - k() / v()),
        Npv => one(v() * (k() - p()) / (v() - c(1))),
        Fbp => {
            one((-(beta_plus_sq() * k()) + v() * (beta_plus_sq() * p() + n() + k()) - k()) / v())
        }
        Fbn => one(v() * (beta_minus_sq() * n() + p() - k()) / (beta_minus_sq() - v() + c(1))),
        Upm => upm_inverse(),
        Gm => one(v().square() * n() * p() / k()),
        Fm => one(n() + k() - k().square() / (v().square() * p())),
        Mk => pm(
            v() * (n() - p() + c(2) * k()) - p(),
            (v().square() * (n() + p()).square()
                + v()
                    * (c(2) * n() * p() - c(4) * n() * k() + c(2) * p().square()
                        - c(4) * p() * k())
                + p().square())
            .sqrt(),
            c(2) * v(),
        ),
        Bm => one(n() * (p() * (v() + c(1)) - k()) / p()),
        Mcc => pm(
            n() * p().sqrt() * (v().square() * (n() - p() + c(2) * k()) + c(2) * p() - c(2) * k()),
            v() * n().sqrt()
                * (n() + p())
                * (v().square() * n() * p() + c(4) * p() * k() - c(4) * k().square()).sqrt(),
            c(2) * p().sqrt() * (v().square() * n() + p()),
        ),
        Lrp => one(n() - n() * k() / (v() * p())),
        Lrn => one(n() * (p() - k()) / (v() * p())),
        Pt => one(n() - n() * k() * v().square() / (p() * (c(1) - v()).square())),
        Dor => one(v() * n() * (p() - k()) / (v() * p() - v() * k() + k())),
        Ji => one(n() + p() - k() / v()),
        Bacc => one(n() * (c(2) * v() * p() - k()) / p()),
        Kappa => one((v() * (n().square() + n() * k() + p().square() - p() * k())
            + c(2) * n() * p()
            - c(2) * n() * k())
            / (v() * (n() - p()) + c(2) * p())),
    }
}

/// Solutions for tp with tn known.
fn inverse_tp(id: ScoreId) -> Inverse {
    use ScoreId::*;
    match id {
        Acc => one(v() * (n() + p()) - k()),
        Sens => one(p() * v()),
        Spec => Inverse::Independent,
        Ppv => one(v() * (k() - n()) / (v() - c(1))),
        Npv => one(p() + k() - k() / v()),
        Fbp => one(v() * (beta_plus_sq() * p() + n() - k()) / (beta_plus_sq() - v() + c(1))),
        Fbn => {
            one((-(beta_minus_sq() * k()) + v() * (beta_minus_sq() * n() + p() + k()) - k()) / v())
        }
        Upm => upm_inverse(),
        Gm => one(v().square() * n() * p() / k()),
        Fm => pm(
            v().square() * p(),
            v() * p().sqrt() * (v().square() * p() + c(4) * n() - c(4) * k()).sqrt(),
            c(2),
        ),
        Mk => pm(
            v() * (p() - n() + c(2) * k()) - n(),
            (v().square() * (n() + p()).square()
                + v()
                    * (c(2) * n().square() + c(2) * n() * p()
                        - c(4) * n() * k()
                        - c(4) * p() * k())
                + n().square())
            .sqrt(),
            c(2) * v(),
        ),
        Bm => one(p() * (n() * (v() + c(1)) - k()) / n()),
        Mcc => pm(
            n().sqrt() * p() * (v().square() * (p() - n() + c(2) * k()) + c(2) * n() - c(2) * k()),
            v() * p().sqrt()
                * (n() + p())
                * (v().square() * n() * p() + c(4) * n() * k() - c(4) * k().square()).sqrt(),
            c(2) * n().sqrt() * (v().square() * p() + n()),
        ),
        Lrp => one(v() * p() * (n() - k()) / n()),
        Lrn => one(p() * (n() - v() * k()) / n()),
        Pt => one(p() * (n() - k()) * (c(1) - v()).square() / (n() * v().square())),
        Dor => one(v() * p() * (n() - k()) / (v() * n() - v() * k() + k())),
        Ji => one(v() * (n() + p() - k())),
        Bacc => one(p() * (c(2) * v() * n() - k()) / n()),
        Kappa => one((v() * (n().square() - n() * k() + p().square() + p() * k())
            + c(2) * n() * p()
            - c(2) * p() * k())
            / (v() * (p() - n()) + c(2) * n())),
    }
}

/// The unified performance measure is symmetric in (tp, p) and (tn, n), and
/// its inverse for either figure has the same form.
fn upm_inverse() -> Inverse {
    let total = n() + p();
    let disc = c(16) * k().square()
        + v().square() * (total.clone().square() + c(8) * total.clone() * k())
        + v() * (-(c(8) * total.clone() * k()) - c(16) * k().square());
    let base = total / c(2) + k();
    let root = disc.sqrt() / c(2);
    Inverse::Branches(vec![
        base.clone() + (-(c(2) * k()) + root.clone()) / v(),
        base + (-(c(2) * k()) - root) / v(),
    ])
}

fn value_range(id: ScoreId) -> ValueRange {
    use ScoreId::*;
    match id {
        Mk | Bm | Mcc | Kappa => ValueRange::symmetric_unit(),
        Lrp | Lrn | Dor => ValueRange::nonnegative(),
        _ => ValueRange::unit(),
    }
}

pub(super) fn definition(id: ScoreId) -> ScoreDefinition {
    ScoreDefinition {
        name: id.name().to_string(),
        builtin: Some(id),
        forward: Arc::new(move |counts, params| forward(id, counts, params)),
        inverse_tp: inverse_tp(id),
        inverse_tn: inverse_tn(id),
        linear_in_tp_tn: id.is_linear(),
        value_range: value_range(id),
    }
}
