//! Lattice reduction for narrow systems: an LLL-reduced basis of the integer
//! lattice under a norm that measures each row in units of its window.
//!
//! The reduction works in floating point, but the basis is only ever
//! changed by exact integer operations, so it stays unimodular however
//! rounding falls; precision affects the quality of the basis, not the
//! correctness of anything built on it.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

use super::simplex::Row;
use crate::interval::Rational;

/// Lovász constant of the reduction.
const DELTA: f64 = 0.75;

/// Swaps allowed per basis vector before the reduction stops early.
const SWAPS_PER_VECTOR: usize = 200;

/// Maps lattice vectors to the space where the reduction measures length:
/// one coordinate per two-sided row, `a_r.v / w_r` with `w_r` the number of
/// integers in the window, and one per variable, `v_j / d_j` with `d_j` the
/// number of values it can take.
struct Embedding<'a> {
    rows: Vec<(&'a Row, f64)>,
    scales: Vec<f64>,
}

impl<'a> Embedding<'a> {
    fn new(rows: &'a [Row], lower: &[i64], upper: &[i64]) -> Self {
        let rows = rows
            .iter()
            .filter_map(|row| match (&row.lo, &row.hi) {
                (Some(lo), Some(hi)) => {
                    let w = (hi - lo + BigInt::one()).to_f64().unwrap_or(f64::MAX);
                    Some((row, w))
                }
                _ => None,
            })
            .collect();
        let scales = lower
            .iter()
            .zip(upper)
            .map(|(&l, &u)| (u - l + 1) as f64)
            .collect();
        Embedding { rows, scales }
    }

    fn image(&self, v: &[BigInt]) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .rows
            .iter()
            .map(|(row, w)| {
                let dot: BigInt = row.coefs.iter().map(|(i, a)| a * &v[*i]).sum();
                dot.to_f64().unwrap_or(f64::MAX) / w
            })
            .collect();
        out.extend(
            v.iter()
                .zip(&self.scales)
                .map(|(x, d)| x.to_f64().unwrap_or(f64::MAX) / d),
        );
        out
    }
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// LLL reduction of the standard basis of `Z^n` for the norm described on
/// [`Embedding`]. Returns the basis vectors, shortest first.
pub(super) fn reduce(rows: &[Row], lower: &[i64], upper: &[i64]) -> Vec<Vec<BigInt>> {
    let n = lower.len();
    let embedding = Embedding::new(rows, lower, upper);
    let mut basis: Vec<Vec<BigInt>> = (0..n)
        .map(|i| (0..n).map(|j| BigInt::from(u8::from(i == j))).collect())
        .collect();
    if n < 2 {
        return basis;
    }
    let mut images: Vec<Vec<f64>> = basis.iter().map(|b| embedding.image(b)).collect();
    let mut swaps = 0;
    let mut k = 1;
    while k < n && swaps < SWAPS_PER_VECTOR * n {
        let (mu, norms) = gram_schmidt(&images[..=k]);
        let mut row = mu[k].clone();
        let mut changed = false;
        for j in (0..k).rev() {
            let q = row[j].round();
            if q == 0.0 || !q.is_finite() {
                continue;
            }
            let qi = BigInt::from(q as i64);
            let bj = basis[j].clone();
            for (a, b) in basis[k].iter_mut().zip(&bj) {
                *a -= &qi * b;
            }
            for i in 0..j {
                row[i] -= q * mu[j][i];
            }
            row[j] -= q;
            changed = true;
        }
        if changed {
            images[k] = embedding.image(&basis[k]);
        }
        let (mu, norms) = if changed {
            gram_schmidt(&images[..=k])
        } else {
            (mu, norms)
        };
        let m = mu[k][k - 1];
        if norms[k] < (DELTA - m * m) * norms[k - 1] {
            basis.swap(k, k - 1);
            images.swap(k, k - 1);
            swaps += 1;
            k = (k - 1).max(1);
        } else {
            k += 1;
        }
    }
    basis
}

/// Gram-Schmidt coefficients and squared lengths of `vectors`.
fn gram_schmidt(vectors: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let k = vectors.len();
    let mut star: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut mu = vec![vec![0.0; k]; k];
    let mut norms = Vec::with_capacity(k);
    for (i, v) in vectors.iter().enumerate() {
        let mut s = v.clone();
        for j in 0..i {
            let m = if norms[j] > 0.0 {
                dot(v, &star[j]) / norms[j]
            } else {
                0.0
            };
            mu[i][j] = m;
            for (x, y) in s.iter_mut().zip(&star[j]) {
                *x -= m * y;
            }
        }
        norms.push(dot(&s, &s));
        star.push(s);
    }
    (mu, norms)
}

/// Inverse of a unimodular integer matrix given by its columns, as rows.
pub(super) fn inverse(columns: &[Vec<BigInt>]) -> Option<Vec<Vec<BigInt>>> {
    let n = columns.len();
    // Augmented [Q | I] with Q[i][j] = columns[j][i].
    let mut a: Vec<Vec<Rational>> = (0..n)
        .map(|i| {
            let mut row: Vec<Rational> = (0..n)
                .map(|j| Rational::from_integer(columns[j][i].clone()))
                .collect();
            row.extend((0..n).map(|j| Rational::from_integer(BigInt::from(u8::from(i == j)))));
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n).find(|&r| !a[r][c].is_zero())?;
        a.swap(c, p);
        let pivot = a[c][c].clone();
        for x in a[c].iter_mut() {
            *x /= &pivot;
        }
        let prow = a[c].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != c && !row[c].is_zero() {
                let f = row[c].clone();
                for (x, y) in row.iter_mut().zip(&prow) {
                    *x -= &f * y;
                }
            }
        }
    }
    a.into_iter()
        .map(|row| {
            row[n..]
                .iter()
                .map(|x| x.is_integer().then(|| x.to_integer()))
                .collect()
        })
        .collect()
}

/// Bounds of `sum_i c_i x_i` over the box, as `i64` when they fit.
pub(super) fn box_range(c: &[BigInt], lower: &[i64], upper: &[i64]) -> Option<(i64, i64)> {
    let mut lo = BigInt::zero();
    let mut hi = BigInt::zero();
    for ((ci, &l), &u) in c.iter().zip(lower).zip(upper) {
        let (a, b) = (ci * BigInt::from(l), ci * BigInt::from(u));
        if a <= b {
            lo += a;
            hi += b;
        } else {
            lo += b;
            hi += a;
        }
    }
    Some((lo.to_i64()?, hi.to_i64()?))
}
