//! Exact forward values of scores, including those involving one square root.

use std::cmp::Ordering;
use std::fmt;

use num_traits::{Signed, Zero};

use crate::interval::{exact_sqrt, to_f64, Interval, Rational};

/// The exact value of a score at an integer confusion matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScoreValue {
    Exact(Rational),
    /// `a + c * sqrt(x)` with `x >= 0`.
    Surd {
        a: Rational,
        c: Rational,
        x: Rational,
    },
}

impl ScoreValue {
    pub fn surd(a: Rational, c: Rational, x: Rational) -> ScoreValue {
        debug_assert!(!x.is_negative());
        if c.is_zero() || x.is_zero() {
            return ScoreValue::Exact(a);
        }
        if let Some(root) = exact_sqrt(&x) {
            return ScoreValue::Exact(a + c * root);
        }
        ScoreValue::Surd { a, c, x }
    }

    /// `sqrt(x)` as a score value.
    pub fn sqrt_of(x: Rational) -> ScoreValue {
        ScoreValue::surd(Rational::zero(), Rational::from_integer(1.into()), x)
    }

    /// Compares the value with a rational threshold, exactly.
    pub fn cmp_rational(&self, t: &Rational) -> Ordering {
        match self {
            ScoreValue::Exact(v) => v.cmp(t),
            ScoreValue::Surd { a, c, x } => {
                // Sign of c*sqrt(x) - d.
                let d = t - a;
                let lhs_sign = c.signum();
                if lhs_sign.is_positive() {
                    if !d.is_positive() {
                        // c*sqrt(x) > 0 >= d since x > 0 for a stored surd.
                        return Ordering::Greater;
                    }
                    (c * c * x).cmp(&(&d * &d))
                } else {
                    if !d.is_negative() {
                        return Ordering::Less;
                    }
                    (&d * &d).cmp(&(c * c * x))
                }
            }
        }
    }

    /// Whether the value lies in the closed interval.
    pub fn lies_in(&self, interval: &Interval) -> bool {
        self.cmp_rational(interval.lo()) != Ordering::Less
            && self.cmp_rational(interval.hi()) != Ordering::Greater
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ScoreValue::Exact(v) => to_f64(v),
            ScoreValue::Surd { a, c, x } => to_f64(a) + to_f64(c) * to_f64(x).sqrt(),
        }
    }
}

impl fmt::Display for ScoreValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::rational;

    #[test]
    fn perfect_squares_collapse() {
        assert_eq!(
            ScoreValue::sqrt_of(rational(9, 16)),
            ScoreValue::Exact(rational(3, 4))
        );
    }

    #[test]
    fn surd_comparisons() {
        // sqrt(2) ~ 1.41421356
        let s = ScoreValue::sqrt_of(rational(2, 1));
        assert_eq!(s.cmp_rational(&rational(141421, 100000)), Ordering::Greater);
        assert_eq!(s.cmp_rational(&rational(141422, 100000)), Ordering::Less);
        assert_eq!(s.cmp_rational(&rational(-5, 1)), Ordering::Greater);

        // 1 - sqrt(2) ~ -0.41421356
        let t = ScoreValue::surd(rational(1, 1), rational(-1, 1), rational(2, 1));
        assert_eq!(t.cmp_rational(&rational(-41421, 100000)), Ordering::Less);
        assert_eq!(t.cmp_rational(&rational(-41422, 100000)), Ordering::Greater);
        assert_eq!(t.cmp_rational(&rational(3, 1)), Ordering::Less);
        assert!(t.lies_in(&Interval::new(rational(-5, 10), rational(-4, 10)).unwrap()));
        assert!(!t.lies_in(&Interval::new(rational(-4, 10), rational(0, 1)).unwrap()));
    }
}
