//! Phase-one bounded-variable primal simplex over exact rationals.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::interval::Rational;

/// `lo <= sum(coef * x) <= hi` with integer data.
#[derive(Debug, Clone)]
pub(super) struct Row {
    pub coefs: Vec<(usize, BigInt)>,
    pub lo: Option<BigInt>,
    pub hi: Option<BigInt>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Basic(usize),
    AtLower,
    AtUpper,
    /// Nonbasic strictly between its bounds.
    Between,
}

/// Finds a point of the relaxation `rows` with `lower <= x <= upper`, or
/// returns `None` when the relaxation is empty.
///
/// The search starts from the integral point `start`, which must lie within
/// the bounds. Each row gets a slack `r = a.x` bounded by the row limits.
/// Rows violated at `start` also get an artificial variable, and the sum of
/// artificials is minimized with Bland's rule until it reaches zero. Only
/// the variables needed to repair the violated rows move away from `start`.
pub(super) fn feasible_point(
    rows: &[Row],
    lower: &[i64],
    upper: &[i64],
    start: &[i64],
) -> Option<Vec<Rational>> {
    let n = lower.len();
    let m = rows.len();
    let slack = |j: usize| n + j;

    let mut lb: Vec<Option<Rational>> = lower
        .iter()
        .map(|&l| Some(Rational::from_integer(l.into())))
        .collect();
    let mut ub: Vec<Option<Rational>> = upper
        .iter()
        .map(|&u| Some(Rational::from_integer(u.into())))
        .collect();
    let mut value: Vec<Rational> = start
        .iter()
        .map(|&s| Rational::from_integer(s.into()))
        .collect();
    let mut state: Vec<State> = (0..n)
        .map(|i| {
            if start[i] == lower[i] {
                State::AtLower
            } else if start[i] == upper[i] {
                State::AtUpper
            } else {
                State::Between
            }
        })
        .collect();
    let mut cost = vec![false; n];
    for row in rows {
        lb.push(row.lo.clone().map(Rational::from_integer));
        ub.push(row.hi.clone().map(Rational::from_integer));
        value.push(Rational::zero());
        state.push(State::AtLower);
        cost.push(false);
    }

    // Dense tableau: row j reads sum_k t[j][k] z_k = 0, with coefficient 1
    // on its basic variable.
    let mut t: Vec<Vec<Rational>> = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut artificial_rows = Vec::new();
    for (j, row) in rows.iter().enumerate() {
        let mut activity = Rational::zero();
        let mut line = vec![Rational::zero(); n + m];
        for (i, a) in &row.coefs {
            let a = Rational::from_integer(a.clone());
            activity += &a * &value[*i];
            line[*i] += a;
        }
        let below = lb[slack(j)].as_ref().is_some_and(|lo| &activity < lo);
        let above = ub[slack(j)].as_ref().is_some_and(|hi| &activity > hi);
        if !below && !above {
            // r_j basic: -a.x + r_j = 0.
            for c in line.iter_mut() {
                *c = -c.clone();
            }
            line[slack(j)] = Rational::from_integer(1.into());
            state[slack(j)] = State::Basic(j);
            basis.push(slack(j));
        } else {
            let (bound, st) = if below {
                (lb[slack(j)].clone().expect("finite"), State::AtLower)
            } else {
                (ub[slack(j)].clone().expect("finite"), State::AtUpper)
            };
            value[slack(j)] = bound;
            state[slack(j)] = st;
            // below: a.x - r + art = 0; above: -a.x + r + art = 0.
            if below {
                line[slack(j)] = Rational::from_integer((-1).into());
            } else {
                for c in line.iter_mut() {
                    *c = -c.clone();
                }
                line[slack(j)] = Rational::from_integer(1.into());
            }
            artificial_rows.push(j);
            basis.push(usize::MAX);
        }
        t.push(line);
    }
    for &j in &artificial_rows {
        let col = lb.len();
        lb.push(Some(Rational::zero()));
        ub.push(None);
        value.push(Rational::zero());
        state.push(State::Basic(j));
        cost.push(true);
        basis[j] = col;
        for (r, line) in t.iter_mut().enumerate() {
            line.push(if r == j {
                Rational::from_integer(1.into())
            } else {
                Rational::zero()
            });
        }
    }
    let cols = lb.len();

    loop {
        // Basic values from the nonbasic ones.
        for j in 0..m {
            let mut v = Rational::zero();
            for k in 0..cols {
                if !matches!(state[k], State::Basic(_)) && !t[j][k].is_zero() {
                    v -= &t[j][k] * &value[k];
                }
            }
            value[basis[j]] = v;
        }
        let infeasibility: Rational = (0..cols)
            .filter(|&k| cost[k])
            .map(|k| value[k].clone())
            .sum();
        if infeasibility.is_zero() {
            return Some(value[..n].to_vec());
        }

        // Bland: lowest-index improving nonbasic column.
        let mut entering = None;
        for k in 0..cols {
            let st = state[k];
            if matches!(st, State::Basic(_)) {
                continue;
            }
            if lb[k].is_some() && lb[k] == ub[k] {
                continue;
            }
            let mut d = if cost[k] {
                Rational::from_integer(1.into())
            } else {
                Rational::zero()
            };
            for j in 0..m {
                if cost[basis[j]] && !t[j][k].is_zero() {
                    d -= &t[j][k];
                }
            }
            let direction = match st {
                State::AtLower if d.is_negative() => Some(true),
                State::AtUpper if d.is_positive() => Some(false),
                State::Between if !d.is_zero() => Some(d.is_negative()),
                _ => None,
            };
            if let Some(increasing) = direction {
                entering = Some((k, increasing));
                break;
            }
        }
        let (k, increasing) = entering?;

        // Ratio test; ties go to the lowest-index leaving variable.
        let mut best: Option<(Rational, usize, bool)> = None;
        for j in 0..m {
            let rate = if increasing {
                -t[j][k].clone()
            } else {
                t[j][k].clone()
            };
            if rate.is_zero() {
                continue;
            }
            let b = basis[j];
            let limit = if rate.is_negative() {
                lb[b].as_ref().map(|lo| ((&value[b] - lo) / -&rate, false))
            } else {
                ub[b].as_ref().map(|hi| ((hi - &value[b]) / &rate, true))
            };
            if let Some((step, to_upper)) = limit {
                let better = match &best {
                    None => true,
                    Some((s, row, _)) => step < *s || (step == *s && basis[j] < basis[*row]),
                };
                if better {
                    best = Some((step, j, to_upper));
                }
            }
        }
        let span = if increasing {
            ub[k].as_ref().map(|hi| hi - &value[k])
        } else {
            lb[k].as_ref().map(|lo| &value[k] - lo)
        };
        let flip = match (&span, &best) {
            (Some(s), Some((step, _, _))) => s <= step,
            (Some(_), None) => true,
            (None, _) => false,
        };
        if flip {
            if increasing {
                state[k] = State::AtUpper;
                value[k] = ub[k].clone().expect("finite span");
            } else {
                state[k] = State::AtLower;
                value[k] = lb[k].clone().expect("finite span");
            }
            continue;
        }
        let (_, r, to_upper) = best.expect("phase one is bounded below");

        let leaving = basis[r];
        state[leaving] = if to_upper {
            State::AtUpper
        } else {
            State::AtLower
        };
        value[leaving] = if to_upper {
            ub[leaving].clone().expect("finite")
        } else {
            lb[leaving].clone().expect("finite")
        };
        if cost[leaving] {
            // An artificial that left the basis is never needed again.
            ub[leaving] = Some(Rational::zero());
        }
        pivot(&mut t, r, k);
        basis[r] = k;
        state[k] = State::Basic(r);
    }
}

fn pivot(t: &mut [Vec<Rational>], r: usize, k: usize) {
    let p = t[r][k].clone();
    for c in t[r].iter_mut() {
        if !c.is_zero() {
            *c /= &p;
        }
    }
    let pivot_row = t[r].clone();
    for (j, line) in t.iter_mut().enumerate() {
        if j == r || line[k].is_zero() {
            continue;
        }
        let f = line[k].clone();
        for (c, pr) in line.iter_mut().zip(&pivot_row) {
            if !pr.is_zero() {
                *c -= &f * pr;
            }
        }
    }
}
