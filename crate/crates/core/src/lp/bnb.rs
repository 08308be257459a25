//! Presolve, bound propagation and depth-first branch and bound.
//!
//! Variables with identical columns are merged first. Small systems are
//! then searched in the coordinates of an LLL-reduced lattice basis, which
//! keeps the tree shallow when rows have narrow windows, and every node
//! tries a local repair of its rounded relaxation point before branching.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::lattice;
use super::simplex::{feasible_point, Row};
use super::{Assignment, FeasibilityResult, LinearSystem, Solution, SolverOptions};
use crate::interval::Rational;

/// Rounds of propagation per node before falling back to the relaxation.
const PROPAGATION_ROUNDS: usize = 64;

/// Scales each constraint to coprime integer coefficients and rounds its
/// limits inward, which loses no integer solution. `None` when some
/// constraint is already unsatisfiable.
fn presolve(system: &LinearSystem) -> Option<Vec<Row>> {
    let mut rows = Vec::with_capacity(system.constraints.len());
    for c in &system.constraints {
        let mut merged: BTreeMap<usize, Rational> = BTreeMap::new();
        for (i, a) in &c.coefficients {
            *merged.entry(*i).or_insert_with(Rational::zero) += a;
        }
        merged.retain(|_, a| !a.is_zero());
        if merged.is_empty() {
            let zero = Rational::zero();
            if c.lo.as_ref().is_some_and(|lo| lo > &zero)
                || c.hi.as_ref().is_some_and(|hi| hi < &zero)
            {
                return None;
            }
            continue;
        }
        let denom = merged
            .values()
            .fold(BigInt::one(), |acc, a| acc.lcm(a.denom()));
        let ints: Vec<(usize, BigInt)> = merged
            .iter()
            .map(|(i, a)| (*i, (a * Rational::from_integer(denom.clone())).to_integer()))
            .collect();
        let g = ints.iter().fold(BigInt::zero(), |acc, (_, a)| acc.gcd(a));
        let scale = Rational::new(denom, g.clone());
        let coefs = ints.into_iter().map(|(i, a)| (i, a / &g)).collect();
        let lo = c.lo.as_ref().map(|lo| (lo * &scale).ceil().to_integer());
        let hi = c.hi.as_ref().map(|hi| (hi * &scale).floor().to_integer());
        if let (Some(lo), Some(hi)) = (&lo, &hi) {
            if lo > hi {
                return None;
            }
        }
        rows.push(Row { coefs, lo, hi });
    }
    Some(rows)
}

fn ceil_div(a: &BigInt, b: &BigInt) -> BigInt {
    -((-a).div_floor(b))
}

/// Tightens integer bounds from each row in turn until nothing changes.
/// Returns `false` when some row cannot be met within the bounds.
fn propagate(rows: &[Row], lower: &mut [i64], upper: &mut [i64]) -> bool {
    for _ in 0..PROPAGATION_ROUNDS {
        let mut changed = false;
        for row in rows {
            let mut min_act = BigInt::zero();
            let mut max_act = BigInt::zero();
            for (i, a) in &row.coefs {
                let (l, u) = (BigInt::from(lower[*i]), BigInt::from(upper[*i]));
                if a.is_positive() {
                    min_act += a * l;
                    max_act += a * u;
                } else {
                    min_act += a * u;
                    max_act += a * l;
                }
            }
            if row.hi.as_ref().is_some_and(|hi| &min_act > hi)
                || row.lo.as_ref().is_some_and(|lo| &max_act < lo)
            {
                return false;
            }
            for (i, a) in &row.coefs {
                let (l, u) = (BigInt::from(lower[*i]), BigInt::from(upper[*i]));
                let (own_min, own_max) = if a.is_positive() {
                    (a * &l, a * &u)
                } else {
                    (a * &u, a * &l)
                };
                let mut new_lo = l.clone();
                let mut new_hi = u.clone();
                if let Some(hi) = &row.hi {
                    // a x <= hi - (min activity of the others)
                    let room = hi - (&min_act - &own_min);
                    if a.is_positive() {
                        new_hi = new_hi.min(room.div_floor(a));
                    } else {
                        new_lo = new_lo.max(ceil_div(&room, a));
                    }
                }
                if let Some(lo) = &row.lo {
                    // a x >= lo - (max activity of the others)
                    let need = lo - (&max_act - &own_max);
                    if a.is_positive() {
                        new_lo = new_lo.max(ceil_div(&need, a));
                    } else {
                        new_hi = new_hi.min(need.div_floor(a));
                    }
                }
                if new_lo > new_hi {
                    return false;
                }
                if new_lo != l || new_hi != u {
                    lower[*i] = new_lo.to_i64().expect("within original bounds");
                    upper[*i] = new_hi.to_i64().expect("within original bounds");
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    true
}

fn round_nearest(x: &Rational) -> i64 {
    let half = Rational::new(1.into(), 2.into());
    (x + half).floor().to_integer().to_i64().unwrap_or(i64::MAX)
}

/// Steps of local search per call, per variable.
const SEARCH_STEPS_PER_VARIABLE: usize = 20;

/// Greedy repair of an integral point by single and paired unit moves,
/// steering by the total row violation measured in units of each row's
/// window. Floating point only guides the search; callers check any point
/// returned exactly.
fn local_search(rows: &[Row], lower: &[i64], upper: &[i64], start: &[i64]) -> Option<Vec<i64>> {
    let n = start.len();
    // Per row: coefficients, limits and activity scaled by the window.
    let mut scaled: Vec<(Vec<(usize, f64)>, f64, f64)> = Vec::with_capacity(rows.len());
    for row in rows {
        let width = match (&row.lo, &row.hi) {
            (Some(lo), Some(hi)) => (hi - lo).to_f64().unwrap_or(f64::MAX).max(1.0),
            _ => row
                .coefs
                .iter()
                .map(|(_, a)| a.abs().to_f64().unwrap_or(f64::MAX))
                .fold(1.0, f64::max),
        };
        let coefs = row
            .coefs
            .iter()
            .map(|(i, a)| (*i, a.to_f64().unwrap_or(0.0) / width))
            .collect();
        let lo = row
            .lo
            .as_ref()
            .map_or(f64::NEG_INFINITY, |l| l.to_f64().unwrap_or(0.0) / width);
        let hi = row
            .hi
            .as_ref()
            .map_or(f64::INFINITY, |h| h.to_f64().unwrap_or(0.0) / width);
        scaled.push((coefs, lo, hi));
    }
    // Column view: rows each variable enters, with its scaled coefficient.
    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (r, (coefs, _, _)) in scaled.iter().enumerate() {
        for &(i, a) in coefs {
            columns[i].push((r, a));
        }
    }
    let mut x = start.to_vec();
    let mut act: Vec<f64> = scaled
        .iter()
        .map(|(coefs, _, _)| coefs.iter().map(|&(i, a)| a * x[i] as f64).sum())
        .collect();
    let violation = |r: usize, v: f64| {
        let (_, lo, hi) = &scaled[r];
        (lo - v).max(v - hi).max(0.0)
    };
    let total = |act: &[f64]| (0..act.len()).map(|r| violation(r, act[r])).sum::<f64>();
    let mut current = total(&act);
    let moves: Vec<(usize, i64)> = (0..n)
        .flat_map(|j| [(j, 1), (j, -1)])
        .filter(|&(j, _)| lower[j] < upper[j])
        .collect();
    let mut delta = act.clone();
    for _ in 0..SEARCH_STEPS_PER_VARIABLE * n.max(1) {
        if current == 0.0 {
            return Some(x);
        }
        let mut best: Option<(f64, usize, Option<usize>)> = None;
        for (a, &(i, di)) in moves.iter().enumerate() {
            if !(lower[i]..=upper[i]).contains(&(x[i] + di)) {
                continue;
            }
            for b in a..moves.len() {
                let (j, dj) = moves[b];
                let pair = b != a;
                if pair && (j == i || !(lower[j]..=upper[j]).contains(&(x[j] + dj))) {
                    continue;
                }
                delta.copy_from_slice(&act);
                for &(r, c) in &columns[i] {
                    delta[r] += c * di as f64;
                }
                if pair {
                    for &(r, c) in &columns[j] {
                        delta[r] += c * dj as f64;
                    }
                }
                let v = total(&delta);
                if v < current - 1e-12 && best.as_ref().is_none_or(|(bv, _, _)| v < *bv) {
                    best = Some((v, a, pair.then_some(b)));
                }
            }
        }
        let (v, a, b) = best?;
        for m in std::iter::once(a).chain(b) {
            let (j, d) = moves[m];
            x[j] += d;
            for &(r, c) in &columns[j] {
                act[r] += c * d as f64;
            }
        }
        current = v;
    }
    (current == 0.0).then_some(x)
}

/// A system with clones merged: variables whose coefficients agree in every
/// constraint become one variable bounded by the sums of their bounds.
struct Merged {
    system: LinearSystem,
    /// Original variables behind each merged one.
    groups: Vec<Vec<usize>>,
}

fn merge_parallel(system: &LinearSystem) -> Merged {
    let mut columns: Vec<BTreeMap<usize, Rational>> = vec![BTreeMap::new(); system.variables.len()];
    for (ci, c) in system.constraints.iter().enumerate() {
        for (i, a) in &c.coefficients {
            *columns[*i].entry(ci).or_insert_with(Rational::zero) += a;
        }
    }
    let mut index: BTreeMap<Vec<(usize, Rational)>, usize> = BTreeMap::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut of: Vec<usize> = Vec::with_capacity(columns.len());
    for (i, col) in columns.into_iter().enumerate() {
        let key: Vec<(usize, Rational)> = col.into_iter().filter(|(_, a)| !a.is_zero()).collect();
        let g = *index.entry(key).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(i);
        of.push(g);
    }
    let mut merged = LinearSystem::new();
    for group in &groups {
        let lower = group.iter().map(|&i| system.variables[i].lower).sum();
        let upper = group.iter().map(|&i| system.variables[i].upper).sum();
        let name = system.variables[group[0]].name.clone();
        merged.add_variable(name, lower, upper);
    }
    for c in &system.constraints {
        let mut coefs: BTreeMap<usize, Rational> = BTreeMap::new();
        for (i, a) in &c.coefficients {
            let g = of[*i];
            // Every member of a group carries the same coefficient.
            if groups[g][0] == *i {
                *coefs.entry(g).or_insert_with(Rational::zero) += a;
            }
        }
        merged.add_constraint(coefs.into_iter().collect(), c.lo.clone(), c.hi.clone());
    }
    Merged {
        system: merged,
        groups,
    }
}

impl Merged {
    /// Splits merged values back over the original variables, filling each
    /// member from its lower bound in turn.
    fn expand(&self, original: &LinearSystem, values: &[i64]) -> Vec<i64> {
        let mut x: Vec<i64> = original.variables.iter().map(|v| v.lower).collect();
        for (group, &total) in self.groups.iter().zip(values) {
            let mut rest = total - group.iter().map(|&i| x[i]).sum::<i64>();
            for &i in group {
                let add = rest.min(original.variables[i].upper - x[i]);
                x[i] += add;
                rest -= add;
            }
        }
        x
    }
}

/// Largest system, after merging clones, that is solved in reduced lattice
/// coordinates.
const LATTICE_MAX_VARIABLES: usize = 24;

/// The system in coordinates `x = sum_j lambda_j q_j` over an LLL-reduced
/// basis `q`, where branching on a coordinate cuts across a thin direction
/// of the feasible region.
struct Reformulation {
    system: LinearSystem,
    basis: Vec<Vec<BigInt>>,
    start: Vec<i64>,
}

fn reformulate(system: &LinearSystem) -> Option<Reformulation> {
    let n = system.variables.len();
    if !(2..=LATTICE_MAX_VARIABLES).contains(&n) {
        return None;
    }
    let rows = presolve(system)?;
    let lower: Vec<i64> = system.variables.iter().map(|v| v.lower).collect();
    let upper: Vec<i64> = system.variables.iter().map(|v| v.upper).collect();
    // Longest vectors first: their coordinates take the fewest values.
    let mut basis = lattice::reduce(&rows, &lower, &upper);
    basis.reverse();
    let inverse = lattice::inverse(&basis)?;
    let mut lambda = LinearSystem::new();
    for (j, row) in inverse.iter().enumerate() {
        let (lo, hi) = lattice::box_range(row, &lower, &upper)?;
        lambda.add_variable(format!("lambda_{j}"), lo, hi);
    }
    for row in &rows {
        let mut coefs = Vec::new();
        for (j, q) in basis.iter().enumerate() {
            let c: BigInt = row.coefs.iter().map(|(i, a)| a * &q[*i]).sum();
            if !c.is_zero() {
                coefs.push((j, Rational::from_integer(c)));
            }
        }
        lambda.add_constraint(
            coefs,
            row.lo.clone().map(Rational::from_integer),
            row.hi.clone().map(Rational::from_integer),
        );
    }
    for i in 0..n {
        let coefs = basis
            .iter()
            .enumerate()
            .filter(|(_, q)| !q[i].is_zero())
            .map(|(j, q)| (j, Rational::from_integer(q[i].clone())))
            .collect();
        lambda.add_constraint(
            coefs,
            Some(Rational::from_integer(lower[i].into())),
            Some(Rational::from_integer(upper[i].into())),
        );
    }
    let centre: Vec<BigInt> = centre(&lower, &upper)
        .into_iter()
        .map(BigInt::from)
        .collect();
    let start = inverse
        .iter()
        .map(|row| {
            row.iter()
                .zip(&centre)
                .map(|(a, c)| a * c)
                .sum::<BigInt>()
                .to_i64()
        })
        .collect::<Option<Vec<i64>>>()?;
    Some(Reformulation {
        system: lambda,
        basis,
        start,
    })
}

impl Reformulation {
    fn point(&self, lambda: &[i64]) -> Option<Vec<i64>> {
        let n = self.basis.first().map_or(0, Vec::len);
        (0..n)
            .map(|i| {
                self.basis
                    .iter()
                    .zip(lambda)
                    .map(|(q, &l)| &q[i] * BigInt::from(l))
                    .sum::<BigInt>()
                    .to_i64()
            })
            .collect()
    }
}

fn centre(lower: &[i64], upper: &[i64]) -> Vec<i64> {
    lower
        .iter()
        .zip(upper)
        .map(|(&l, &u)| l + (u - l) / 2)
        .collect()
}

pub(super) fn solve(system: &LinearSystem, options: &SolverOptions) -> Solution {
    let merged = merge_parallel(system);
    let (mut solution, values) = match reformulate(&merged.system) {
        Some(r) => {
            let s = search(&r.system, options, r.start.clone());
            let values = match &s.result {
                FeasibilityResult::Feasible(a) => r.point(&a.values),
                _ => None,
            };
            (s, values)
        }
        None => {
            let sys = &merged.system;
            let lower: Vec<i64> = sys.variables.iter().map(|v| v.lower).collect();
            let upper: Vec<i64> = sys.variables.iter().map(|v| v.upper).collect();
            let s = search(sys, options, centre(&lower, &upper));
            let values = match &s.result {
                FeasibilityResult::Feasible(a) => Some(a.values.clone()),
                _ => None,
            };
            (s, values)
        }
    };
    if solution.result.is_feasible() {
        let values = values
            .map(|v| merged.expand(system, &v))
            .filter(|v| system.is_satisfied_by(v));
        solution.result = match values {
            Some(values) => FeasibilityResult::Feasible(Assignment { values }),
            None => FeasibilityResult::Indeterminate {
                nodes: solution.nodes,
            },
        };
    }
    solution
}

fn search(system: &LinearSystem, options: &SolverOptions, start: Vec<i64>) -> Solution {
    let Some(rows) = presolve(system) else {
        return Solution {
            result: FeasibilityResult::Infeasible,
            nodes: 0,
        };
    };
    let lower: Vec<i64> = system.variables.iter().map(|v| v.lower).collect();
    let upper: Vec<i64> = system.variables.iter().map(|v| v.upper).collect();
    // Each node starts its relaxation from an integral point: `start` at the
    // root, then the parent's rounded relaxation point.
    let mut stack = vec![(lower, upper, start)];
    let mut nodes = 0u64;
    let feasible = |values: Vec<i64>, nodes| Solution {
        result: FeasibilityResult::Feasible(Assignment { values }),
        nodes,
    };
    while let Some((mut lo, mut hi, hint)) = stack.pop() {
        if nodes >= options.node_limit {
            return Solution {
                result: FeasibilityResult::Indeterminate { nodes },
                nodes,
            };
        }
        nodes += 1;
        if !propagate(&rows, &mut lo, &mut hi) {
            continue;
        }
        if lo == hi {
            if system.is_satisfied_by(&lo) {
                return feasible(lo, nodes);
            }
            continue;
        }
        let start: Vec<i64> = hint
            .iter()
            .zip(lo.iter().zip(&hi))
            .map(|(&s, (&l, &h))| s.clamp(l, h))
            .collect();
        let Some(x) = feasible_point(&rows, &lo, &hi, &start) else {
            continue;
        };
        let rounded: Vec<i64> = x
            .iter()
            .zip(lo.iter().zip(&hi))
            .map(|(xi, (&l, &h))| round_nearest(xi).clamp(l, h))
            .collect();
        if system.is_satisfied_by(&rounded) {
            return feasible(rounded, nodes);
        }
        if let Some(repaired) = local_search(&rows, &lo, &hi, &rounded) {
            if system.is_satisfied_by(&repaired) {
                return feasible(repaired, nodes);
            }
        }

        // Most fractional variable, lowest index on ties.
        let half = Rational::new(1.into(), 2.into());
        let mut branch: Option<(usize, Rational)> = None;
        for (j, xj) in x.iter().enumerate() {
            if xj.is_integer() {
                continue;
            }
            let dist = (xj.fract() - &half).abs();
            if branch.as_ref().is_none_or(|(_, d)| dist < *d) {
                branch = Some((j, dist));
            }
        }
        let (j, split, down_first) = match branch {
            Some((j, _)) => (
                j,
                x[j].floor().to_integer().to_i64().expect("bounded"),
                x[j].fract() < half,
            ),
            // Integral relaxation points satisfy the original system, so this
            // arm only keeps the split well defined.
            None => match (0..lo.len()).find(|&j| lo[j] < hi[j]) {
                Some(j) => (j, lo[j], true),
                None => continue,
            },
        };
        let mut down_hi = hi.clone();
        down_hi[j] = split;
        let mut up_lo = lo.clone();
        up_lo[j] = split + 1;
        let down = (lo, down_hi, rounded.clone());
        let up = (up_lo, hi, rounded);
        if down_first {
            stack.push(up);
            stack.push(down);
        } else {
            stack.push(down);
            stack.push(up);
        }
    }
    Solution {
        result: FeasibilityResult::Infeasible,
        nodes,
    }
}
