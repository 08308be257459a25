//! Closed intervals with exact rational endpoints.
//!
//! Addition, subtraction, multiplication and division are exact. Square
//! roots are the only operation that leaves the rationals; they are computed
//! in double precision and widened outward so the result always encloses the
//! true root.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

pub type Rational = BigRational;

/// Relative outward slack applied to floating-point square roots.
pub const SQRT_SLACK: f64 = 1.0 / (1u64 << 40) as f64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IntervalError {
    #[error("interval lower bound {lo} exceeds upper bound {hi}")]
    Inverted { lo: Rational, hi: Rational },
    #[error("square root of an interval lying entirely below zero")]
    EmptyDomain,
}

pub fn rational(numer: i64, denom: i64) -> Rational {
    Rational::new(numer.into(), denom.into())
}

pub fn integer(value: impl Into<BigInt>) -> Rational {
    Rational::from_integer(value.into())
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Interval {
    lo: Rational,
    hi: Rational,
}

/// Result of dividing by an interval; divisors containing zero make the
/// quotient unbounded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Quotient {
    Finite(Interval),
    WholeLine,
}

impl Interval {
    pub fn new(lo: Rational, hi: Rational) -> Result<Self, IntervalError> {
        if lo > hi {
            return Err(IntervalError::Inverted { lo, hi });
        }
        Ok(Interval { lo, hi })
    }

    pub fn point(x: Rational) -> Self {
        Interval {
            lo: x.clone(),
            hi: x,
        }
    }

    /// `[center - radius, center + radius]`; a negative radius is treated as its magnitude.
    pub fn around(center: &Rational, radius: &Rational) -> Self {
        let r = radius.abs();
        Interval {
            lo: center - &r,
            hi: center + &r,
        }
    }

    pub fn from_ints(lo: i64, hi: i64) -> Result<Self, IntervalError> {
        Self::new(integer(lo), integer(hi))
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, x: &Rational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = (&self.lo).max(&other.lo).clone();
        let hi = (&self.hi).min(&other.hi).clone();
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: (&self.lo).min(&other.lo).clone(),
            hi: (&self.hi).max(&other.hi).clone(),
        }
    }

    pub fn div(&self, divisor: &Interval) -> Quotient {
        if divisor.contains_zero() {
            return Quotient::WholeLine;
        }
        let inv = Interval {
            lo: divisor.hi.recip(),
            hi: divisor.lo.recip(),
        };
        Quotient::Finite(self * &inv)
    }

    /// `{x² : x ∈ self}`, tighter than `self * self` when the interval straddles zero.
    pub fn square(&self) -> Interval {
        let a = &self.lo * &self.lo;
        let b = &self.hi * &self.hi;
        if self.contains_zero() {
            Interval {
                lo: Rational::zero(),
                hi: a.max(b),
            }
        } else if a <= b {
            Interval { lo: a, hi: b }
        } else {
            Interval { lo: b, hi: a }
        }
    }

    /// Encloses `{√x : x ∈ self, x ≥ 0}`; negative parts are clamped to zero.
    pub fn sqrt(&self) -> Result<Interval, IntervalError> {
        if self.hi.is_negative() {
            return Err(IntervalError::EmptyDomain);
        }
        let lo = if self.lo.is_positive() {
            sqrt_bound(&self.lo, false)
        } else {
            Rational::zero()
        };
        let hi = sqrt_bound(&self.hi, true);
        Ok(Interval { lo, hi })
    }

    pub fn to_f64_pair(&self) -> (f64, f64) {
        (to_f64(&self.lo), to_f64(&self.hi))
    }
}

pub(crate) fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub(crate) fn exact_sqrt(x: &Rational) -> Option<Rational> {
    let rn = x.numer().sqrt();
    let rd = x.denom().sqrt();
    (&rn * &rn == *x.numer() && &rd * &rd == *x.denom()).then(|| Rational::new(rn, rd))
}

/// Outward-rounded square root of a nonnegative rational.
fn sqrt_bound(x: &Rational, upper: bool) -> Rational {
    if x.is_zero() {
        return Rational::zero();
    }
    if let Some(exact) = exact_sqrt(x) {
        return exact;
    }
    let f = to_f64(x);
    if f.is_finite() && f > 0.0 && f.is_normal() {
        let root = f.sqrt();
        let widened = if upper {
            root * (1.0 + SQRT_SLACK)
        } else {
            root * (1.0 - SQRT_SLACK)
        };
        if let Some(r) = Rational::from_float(widened) {
            return r;
        }
    }
    // Out of f64 range: fall back to the integer square root, which is
    // always a valid (if loose) bound.
    let floor = x.floor().to_integer();
    if upper {
        integer(floor.sqrt() + 1)
    } else {
        integer(floor.sqrt())
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (lo, hi) = self.to_f64_pair();
        write!(f, "[{lo}, {hi}]")
    }
}

impl Add for &Interval {
    type Output = Interval;
    fn add(self, rhs: &Interval) -> Interval {
        Interval {
            lo: &self.lo + &rhs.lo,
            hi: &self.hi + &rhs.hi,
        }
    }
}

impl Sub for &Interval {
    type Output = Interval;
    fn sub(self, rhs: &Interval) -> Interval {
        Interval {
            lo: &self.lo - &rhs.hi,
            hi: &self.hi - &rhs.lo,
        }
    }
}

impl Mul for &Interval {
    type Output = Interval;
    fn mul(self, rhs: &Interval) -> Interval {
        let products = [
            &self.lo * &rhs.lo,
            &self.lo * &rhs.hi,
            &self.hi * &rhs.lo,
            &self.hi * &rhs.hi,
        ];
        let lo = products.iter().min().unwrap().clone();
        let hi = products.iter().max().unwrap().clone();
        Interval { lo, hi }
    }
}

impl Neg for &Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval {
            lo: -&self.hi,
            hi: -&self.lo,
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr for Interval {
            type Output = Interval;
            fn $method(self, rhs: Interval) -> Interval {
                (&self).$method(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// A finite union of pairwise disjoint, non-adjacent closed intervals,
/// sorted by lower bound.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash)]
pub struct IntervalSet {
    intervals: Vec<Interval>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet::default()
    }

    pub fn from_intervals(mut intervals: Vec<Interval>) -> Self {
        intervals.sort_by(|a, b| a.lo.cmp(&b.lo));
        let mut merged: Vec<Interval> = Vec::with_capacity(intervals.len());
        for iv in intervals {
            match merged.last_mut() {
                Some(last) if iv.lo <= last.hi => {
                    if iv.hi > last.hi {
                        last.hi = iv.hi;
                    }
                }
                _ => merged.push(iv),
            }
        }
        IntervalSet { intervals: merged }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, x: &Rational) -> bool {
        self.intervals.iter().any(|iv| iv.contains(x))
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        let all = self
            .intervals
            .iter()
            .chain(&other.intervals)
            .cloned()
            .collect();
        IntervalSet::from_intervals(all)
    }

    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < self.intervals.len() && j < other.intervals.len() {
            let a = &self.intervals[i];
            let b = &other.intervals[j];
            if let Some(x) = a.intersect(b) {
                out.push(x);
            }
            if a.hi < b.hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        // Pieces of disjoint sorted inputs are already disjoint and sorted,
        // but two of them may touch at a shared endpoint.
        IntervalSet::from_intervals(out)
    }

    pub fn clip(&self, bounds: &Interval) -> IntervalSet {
        self.intersect(&IntervalSet::from(bounds.clone()))
    }

    /// Smallest integer `z` with `lo ≤ z ≤ hi` that lies in the set.
    pub fn contains_integer_in(&self, lo: &BigInt, hi: &BigInt) -> Option<BigInt> {
        self.integers_in(lo, hi).next()
    }

    /// All integers of the set within `[lo, hi]`, in increasing order.
    pub fn integers_in<'a>(
        &'a self,
        lo: &'a BigInt,
        hi: &'a BigInt,
    ) -> impl Iterator<Item = BigInt> + 'a {
        self.intervals.iter().flat_map(move |iv| {
            let first = iv.lo.ceil().to_integer().max(lo.clone());
            let last = iv.hi.floor().to_integer().min(hi.clone());
            num_iter_range(first, last)
        })
    }
}

fn num_iter_range(first: BigInt, last: BigInt) -> impl Iterator<Item = BigInt> {
    let mut next = first;
    std::iter::from_fn(move || {
        if next > last {
            return None;
        }
        let out = next.clone();
        next += 1;
        Some(out)
    })
}

impl From<Interval> for IntervalSet {
    fn from(iv: Interval) -> Self {
        IntervalSet {
            intervals: vec![iv],
        }
    }
}

impl fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.intervals.is_empty() {
            return write!(f, "∅");
        }
        let parts: Vec<String> = self.intervals.iter().map(|iv| iv.to_string()).collect();
        write!(f, "{}", parts.join(" ∪ "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decimal::parse_decimal;

    fn d(s: &str) -> Rational {
        parse_decimal(s).unwrap()
    }

    fn iv(lo: &str, hi: &str) -> Interval {
        Interval::new(d(lo), d(hi)).unwrap()
    }

    #[test]
    fn basic_arithmetic() {
        assert_eq!(&iv("1", "2") + &iv("3", "4"), iv("4", "6"));
        assert_eq!(&iv("-1", "1") * &iv("-1", "1"), iv("-1", "1"));
        assert_eq!(&iv("1", "2") - &iv("3", "4"), iv("-3", "-1"));
        assert_eq!(-&iv("1", "2"), iv("-2", "-1"));
    }

    #[test]
    fn accuracy_times_total() {
        let acc = iv("0.926", "0.928");
        let total = Interval::point(integer(110));
        assert_eq!(&acc * &total, iv("101.86", "102.08"));
        let tn = &(&acc * &total) - &Interval::point(integer(30));
        assert_eq!(tn, iv("71.86", "72.08"));
    }

    #[test]
    fn division() {
        assert_eq!(
            iv("4", "8").div(&iv("2", "4")),
            Quotient::Finite(iv("1", "4"))
        );
        assert_eq!(iv("1", "1").div(&iv("-1", "1")), Quotient::WholeLine);
        assert_eq!(iv("1", "1").div(&iv("0", "1")), Quotient::WholeLine);
        assert_eq!(
            iv("1", "2").div(&iv("-4", "-2")),
            Quotient::Finite(iv("-1", "-0.25"))
        );
    }

    #[test]
    fn inverted_bounds_rejected() {
        assert!(Interval::new(integer(2), integer(1)).is_err());
    }

    #[test]
    fn sqrt_cases() {
        let r = iv("4", "9").sqrt().unwrap();
        assert_eq!(r, iv("2", "3"));
        assert_eq!(iv("0", "0").sqrt().unwrap(), iv("0", "0"));
        assert_eq!(iv("-1", "4").sqrt().unwrap(), iv("0", "2"));
        assert_eq!(iv("-2", "-1").sqrt(), Err(IntervalError::EmptyDomain));

        let two = iv("2", "2").sqrt().unwrap();
        let (lo, hi) = two.to_f64_pair();
        assert!(lo < std::f64::consts::SQRT_2 && std::f64::consts::SQRT_2 < hi);
        assert!(&two.lo * &two.lo < integer(2));
        assert!(&two.hi * &two.hi > integer(2));
        assert!((hi - lo) / lo <= 2.0 * SQRT_SLACK * 1.01);
    }

    #[test]
    fn square_straddling_zero() {
        assert_eq!(iv("-2", "1").square(), iv("0", "4"));
        assert_eq!(iv("-3", "-2").square(), iv("4", "9"));
    }

    #[test]
    fn set_normalization_and_intersection() {
        let s = IntervalSet::from_intervals(vec![iv("3", "4"), iv("1", "2"), iv("2", "2.5")]);
        assert_eq!(s.intervals(), &[iv("1", "2.5"), iv("3", "4")]);

        let a = IntervalSet::from(iv("1", "3"));
        let b = IntervalSet::from(iv("2", "5"));
        assert_eq!(a.intersect(&b), IntervalSet::from(iv("2", "3")));

        let a = IntervalSet::from(iv("1", "2"));
        let b = IntervalSet::from(iv("3", "4"));
        assert!(a.intersect(&b).is_empty());

        let a = IntervalSet::from(iv("71.86", "72.08"));
        assert!(a.clip(&iv("0", "70")).is_empty());
    }

    #[test]
    fn integer_containment() {
        let s = IntervalSet::from(iv("71.86", "72.08"));
        let zero = BigInt::from(0);
        assert_eq!(s.contains_integer_in(&zero, &BigInt::from(70)), None);
        assert_eq!(
            s.contains_integer_in(&zero, &BigInt::from(100)),
            Some(BigInt::from(72))
        );
        let s = IntervalSet::from(iv("2.1", "2.9"));
        assert_eq!(s.contains_integer_in(&zero, &BigInt::from(10)), None);

        let s = IntervalSet::from_intervals(vec![iv("-3.5", "-1"), iv("4", "6.2")]);
        let all: Vec<_> = s.integers_in(&BigInt::from(-2), &BigInt::from(5)).collect();
        assert_eq!(
            all,
            vec![
                BigInt::from(-2),
                BigInt::from(-1),
                BigInt::from(4),
                BigInt::from(5)
            ]
        );
    }
}
