//! Integer partitions with a bounded number of parts and a bounded part size.

use std::collections::HashMap;

/// Partitions of `q` into exactly `m >= 2` positive parts, produced in the
/// order of Knuth's Algorithm H (parts kept in nonincreasing order).
struct ExactParts {
    /// `a[0..m]` holds the current partition; `a[m]` is the sentinel.
    a: Vec<i64>,
    m: usize,
    state: HState,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum HState {
    Visit,
    Advance,
    Done,
}

impl ExactParts {
    fn new(q: u64, m: usize) -> Self {
        debug_assert!(m >= 2);
        if (q as usize) < m {
            return ExactParts {
                a: Vec::new(),
                m,
                state: HState::Done,
            };
        }
        let mut a = vec![1i64; m + 1];
        a[0] = q as i64 - m as i64 + 1;
        a[m] = -1;
        ExactParts {
            a,
            m,
            state: HState::Visit,
        }
    }

    /// Steps H3 through H6: moves to the next partition, or finishes.
    fn advance(&mut self) {
        let a = &mut self.a;
        if a[1] < a[0] - 1 {
            a[0] -= 1;
            a[1] += 1;
            return;
        }
        let mut j = 2;
        let mut s = a[0] + a[1] - 1;
        while a[j] >= a[0] - 1 {
            s += a[j];
            j += 1;
        }
        if j >= self.m {
            self.state = HState::Done;
            return;
        }
        let x = a[j] + 1;
        a[j] = x;
        while j > 1 {
            j -= 1;
            a[j] = x;
            s -= x;
        }
        a[0] = s;
    }
}

impl Iterator for ExactParts {
    type Item = Vec<u64>;

    fn next(&mut self) -> Option<Vec<u64>> {
        if self.state == HState::Advance {
            self.advance();
        }
        if self.state == HState::Done {
            return None;
        }
        self.state = HState::Advance;
        Some(self.a[..self.m].iter().map(|&x| x as u64).collect())
    }
}

/// Every partition of `q` into at most `m` parts, none larger than `cap`.
///
/// Each partition is returned as a nondecreasing vector of length `m`,
/// padded with leading zeros. Partitions with fewer parts come first; within
/// a part count the order is that of Algorithm H.
pub fn partitions(q: u64, m: usize, cap: u64) -> impl Iterator<Item = Vec<u64>> + Send {
    let feasible = q > 0 && q <= cap.saturating_mul(m as u64);
    let zero: Box<dyn Iterator<Item = Vec<u64>> + Send> = if q == 0 {
        Box::new(std::iter::once(vec![0; m]))
    } else {
        Box::new(std::iter::empty())
    };
    let parts = (1..=m.min(q as usize))
        .filter(move |_| feasible)
        .flat_map(move |j| exact_parts(q, j))
        .filter(move |parts| parts[0] <= cap)
        .map(move |parts| {
            let mut out = vec![0; m - parts.len()];
            out.extend(parts.into_iter().rev());
            out
        });
    zero.chain(parts)
}

fn exact_parts(q: u64, j: usize) -> Box<dyn Iterator<Item = Vec<u64>> + Send> {
    if j == 1 {
        Box::new(std::iter::once(vec![q]))
    } else {
        Box::new(ExactParts::new(q, j))
    }
}

/// Number of partitions of `q` into at most `m` parts bounded by `cap`.
/// Saturates at `u128::MAX`.
pub fn count_partitions(q: u64, m: u64, cap: u64) -> u128 {
    let mut memo = HashMap::new();
    count_in_box(q, m, cap, &mut memo)
}

/// Partitions fitting an `m` by `cap` box: either fewer than `m` parts, or
/// exactly `m` parts, which after removing one from each part leaves a
/// partition into at most `m` parts bounded by `cap - 1`.
fn count_in_box(q: u64, m: u64, cap: u64, memo: &mut HashMap<(u64, u64, u64), u128>) -> u128 {
    if q == 0 {
        return 1;
    }
    if m == 0 || cap == 0 || q > m.saturating_mul(cap) {
        return 0;
    }
    if let Some(&v) = memo.get(&(q, m, cap)) {
        return v;
    }
    let fewer = count_in_box(q, m - 1, cap, memo);
    let exact = if q >= m {
        count_in_box(q - m, m, cap - 1, memo)
    } else {
        0
    };
    let v = fewer.saturating_add(exact);
    memo.insert((q, m, cap), v);
    v
}
