//! Consistency of scores computed from one confusion matrix.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};
use thiserror::Error;

use crate::interval::{Interval, IntervalSet, Rational};
use crate::scores::{ConfusionCounts, Inversion, ScoreDefinition, ScoreId, ScoreParams, Unknown};

/// Largest `p * n` the exhaustive search accepts.
pub const BRUTEFORCE_LIMIT: u64 = 10_000_000;

/// Default number of witnesses collected when not enumerating all of them.
pub const DEFAULT_WITNESS_CAP: usize = 16;

/// A score value as it was reported, with its numerical uncertainty.
#[derive(Debug, Clone)]
pub struct ReportedScore {
    pub definition: Arc<ScoreDefinition>,
    pub value: Rational,
    pub uncertainty: Rational,
}

impl ReportedScore {
    pub fn new(id: ScoreId, value: Rational, uncertainty: Rational) -> Self {
        Self::with_definition(id.definition(), value, uncertainty)
    }

    pub fn with_definition(
        definition: Arc<ScoreDefinition>,
        value: Rational,
        uncertainty: Rational,
    ) -> Self {
        ReportedScore {
            definition,
            value,
            uncertainty,
        }
    }

    pub fn name(&self) -> &str {
        &self.definition.name
    }

    /// The closed interval the true value must lie in.
    pub fn interval(&self) -> Interval {
        Interval::around(&self.value, &self.uncertainty)
    }

    /// Whether the score is defined at `counts` and lands in its interval.
    pub fn is_matched_by(&self, counts: &ConfusionCounts, params: &ScoreParams) -> bool {
        self.matches(counts, params, &self.interval())
    }

    fn matches(&self, counts: &ConfusionCounts, params: &ScoreParams, interval: &Interval) -> bool {
        self.definition
            .evaluate(counts, params)
            .is_ok_and(|v| v.lies_in(interval))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProblemError {
    #[error("class sizes must be positive (p={p}, n={n})")]
    EmptyClass { p: u64, n: u64 },
    #[error("at least one score must be reported")]
    NoScores,
    #[error("score {0:?} is reported more than once")]
    DuplicateScore(String),
    #[error("uncertainty of {0:?} must be strictly positive")]
    NonPositiveUncertainty(String),
    #[error("exhaustive search over {cells} matrices exceeds the limit of {limit}")]
    TooLarge { cells: u64, limit: u64 },
}

/// Checks that scores are present, distinct and have positive uncertainty.
pub(crate) fn validate_scores(scores: &[ReportedScore]) -> Result<(), ProblemError> {
    if scores.is_empty() {
        return Err(ProblemError::NoScores);
    }
    let mut seen = BTreeSet::new();
    for s in scores {
        if !seen.insert(s.name()) {
            return Err(ProblemError::DuplicateScore(s.name().to_string()));
        }
        if !s.uncertainty.is_positive() {
            return Err(ProblemError::NonPositiveUncertainty(s.name().to_string()));
        }
    }
    Ok(())
}

/// Scores reported for one evaluation set of known composition.
#[derive(Debug, Clone)]
pub struct SingleProblem {
    pub p: u64,
    pub n: u64,
    pub scores: Vec<ReportedScore>,
    pub params: ScoreParams,
}

impl SingleProblem {
    pub fn new(p: u64, n: u64, scores: Vec<ReportedScore>, params: ScoreParams) -> Self {
        SingleProblem {
            p,
            n,
            scores,
            params,
        }
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        if self.p == 0 || self.n == 0 {
            return Err(ProblemError::EmptyClass {
                p: self.p,
                n: self.n,
            });
        }
        validate_scores(&self.scores)
    }

    /// Whether `counts` reproduces every reported score.
    pub fn is_witness(&self, counts: &ConfusionCounts) -> bool {
        self.scores
            .iter()
            .all(|s| s.is_matched_by(counts, &self.params))
    }
}

/// How many witnesses a test collects before stopping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WitnessMode {
    First,
    UpTo(usize),
    All,
}

impl WitnessMode {
    fn is_full(&self, found: usize) -> bool {
        match *self {
            WitnessMode::First => found >= 1,
            WitnessMode::UpTo(cap) => found >= cap.max(1),
            WitnessMode::All => false,
        }
    }
}

impl Default for WitnessMode {
    fn default() -> Self {
        WitnessMode::UpTo(DEFAULT_WITNESS_CAP)
    }
}

/// Outcome of a single-matrix test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub consistent: bool,
    /// Sorted `(tp, tn)` pairs reproducing every score.
    pub witnesses: Vec<(u64, u64)>,
    /// Set when collection stopped at the witness cap.
    pub truncated: bool,
}

impl Verdict {
    fn from_witnesses(mut witnesses: Vec<(u64, u64)>, truncated: bool) -> Self {
        witnesses.sort_unstable();
        Verdict {
            consistent: !witnesses.is_empty(),
            witnesses,
            truncated,
        }
    }
}

/// Tests the problem by solving each score for the figure with the larger
/// domain while iterating over the other.
pub fn test_single(problem: &SingleProblem, mode: WitnessMode) -> Result<Verdict, ProblemError> {
    problem.validate()?;
    let (p, n) = (problem.p, problem.n);
    // Iterate the smaller domain, solve for the other figure.
    let (outer_max, inner_max, unknown) = if p <= n {
        (p, n, Unknown::Tn)
    } else {
        (n, p, Unknown::Tp)
    };
    let inner_bounds = Interval::from_ints(0, inner_max as i64).expect("ordered bounds");
    let intervals: Vec<Interval> = problem.scores.iter().map(|s| s.interval()).collect();

    let mut witnesses = Vec::new();
    for alpha in 0..=outer_max {
        let Some(candidates) = candidate_set(problem, &intervals, unknown, alpha, &inner_bounds)
        else {
            continue;
        };
        let zero = BigInt::from(0);
        let top = BigInt::from(inner_max);
        let iter: Box<dyn Iterator<Item = BigInt> + '_> = match &candidates {
            Some(set) => Box::new(set.integers_in(&zero, &top)),
            None => Box::new((0..=inner_max).map(BigInt::from)),
        };
        for beta in iter {
            let beta = beta.to_u64().expect("candidate within bounds");
            let (tp, tn) = match unknown {
                Unknown::Tn => (alpha, beta),
                Unknown::Tp => (beta, alpha),
            };
            let counts = ConfusionCounts { tp, tn, p, n };
            let ok = problem
                .scores
                .iter()
                .zip(&intervals)
                .all(|(s, iv)| s.matches(&counts, &problem.params, iv));
            if ok {
                witnesses.push((tp, tn));
                if mode.is_full(witnesses.len()) {
                    return Ok(Verdict::from_witnesses(witnesses, true));
                }
            }
        }
    }
    Ok(Verdict::from_witnesses(witnesses, false))
}

/// Intersection of all inverse sets for one value of the iterated figure.
/// `None` means no candidate exists; `Some(None)` means every value of the
/// unknown in range remains a candidate.
fn candidate_set(
    problem: &SingleProblem,
    intervals: &[Interval],
    unknown: Unknown,
    alpha: u64,
    bounds: &Interval,
) -> Option<Option<IntervalSet>> {
    let mut acc: Option<IntervalSet> = None;
    for (score, iv) in problem.scores.iter().zip(intervals) {
        let inv =
            score
                .definition
                .invert(iv, unknown, alpha, problem.p, problem.n, &problem.params);
        let Inversion::Set(set) = inv else { continue };
        let clipped = set.clip(bounds);
        let next = match acc {
            None => clipped,
            Some(prev) => prev.intersect(&clipped),
        };
        if next.is_empty() {
            return None;
        }
        acc = Some(next);
    }
    Some(acc)
}

/// Tests every `(tp, tn)` pair by direct evaluation.
pub fn test_single_bruteforce(
    problem: &SingleProblem,
    mode: WitnessMode,
) -> Result<Verdict, ProblemError> {
    problem.validate()?;
    let (p, n) = (problem.p, problem.n);
    let cells = p.saturating_mul(n);
    if cells > BRUTEFORCE_LIMIT {
        return Err(ProblemError::TooLarge {
            cells,
            limit: BRUTEFORCE_LIMIT,
        });
    }
    let mut witnesses = Vec::new();
    for tp in 0..=p {
        for tn in 0..=n {
            if problem.is_witness(&ConfusionCounts { tp, tn, p, n }) {
                witnesses.push((tp, tn));
                if mode.is_full(witnesses.len()) {
                    return Ok(Verdict::from_witnesses(witnesses, true));
                }
            }
        }
    }
    Ok(Verdict::from_witnesses(witnesses, false))
}
