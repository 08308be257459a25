//! Consistency of scores aggregated over folds and datasets: the mean of
//! per-fold scores (as an integer linear feasibility problem) and the score
//! of the summed confusion matrix.

use std::fmt;

use num_traits::Zero;
use rayon::prelude::*;
use thiserror::Error;

use crate::folds::{
    expand_experiment, Bundle, ExperimentSpec, Fold, FoldError, Pruning, DEFAULT_CONFIG_BUDGET,
};
use crate::interval::{integer, Interval, Rational};
use crate::lp::{solve_feasibility, FeasibilityResult, LinearSystem, SolverOptions};
use crate::scores::{ConfusionCounts, ScoreId, ScoreParams, ScoreValue};
use crate::single::{
    test_single, validate_scores, ProblemError, ReportedScore, SingleProblem, Verdict, WitnessMode,
};

/// Bundles solved together between in-order scans for a feasible one.
const CHUNK: usize = 256;

/// How per-fold results were combined into the reported figures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Aggregation {
    /// Mean of the per-fold scores.
    Mos,
    /// Score of the summed confusion matrices.
    Som,
    /// Not stated: both are tried.
    Unknown,
}

/// The assumption an individual test is run under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Assumption {
    Mos,
    Som,
}

impl Assumption {
    pub fn name(self) -> &'static str {
        match self {
            Assumption::Mos => "mos",
            Assumption::Som => "som",
        }
    }
}

/// Reported smallest and largest per-fold value of a score.
#[derive(Debug, Clone)]
pub struct FoldExtremes {
    pub score: ReportedScore,
    pub min: Rational,
    pub max: Rational,
}

#[derive(Debug, Clone)]
pub struct AggregatedProblem {
    pub spec: ExperimentSpec,
    pub scores: Vec<ReportedScore>,
    pub params: ScoreParams,
    pub aggregation: Aggregation,
    /// Per-fold bounds: `min - uncertainty <= score_i <= max + uncertainty`.
    pub fold_extremes: Vec<FoldExtremes>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MosError {
    #[error("{0} is not linear in the confusion matrix and cannot be averaged exactly")]
    NonlinearScore(String),
    #[error("{score} is undefined on fold {fold} ({p} positives, {n} negatives)")]
    UndefinedInFold {
        score: String,
        fold: usize,
        p: u64,
        n: u64,
    },
    #[error(transparent)]
    Folds(#[from] FoldError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// Limits and witness collection for the aggregated tests.
#[derive(Debug, Clone, Copy)]
pub struct AggregatedOptions {
    pub solver: SolverOptions,
    /// Largest number of fold bundles examined before giving up.
    pub config_budget: u128,
    pub witness_mode: WitnessMode,
    /// Solve every bundle even after a feasible one is found, so the
    /// examined count is the full size of the stream.
    pub full_count: bool,
}

impl Default for AggregatedOptions {
    fn default() -> Self {
        AggregatedOptions {
            solver: SolverOptions::default(),
            config_budget: DEFAULT_CONFIG_BUDGET,
            witness_mode: WitnessMode::default(),
            full_count: false,
        }
    }
}

/// Per-fold confusion matrices reproducing the reported means.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MosWitness {
    pub bundle: Bundle,
    /// `(tp, tn)` per fold, in the order of [`Bundle::folds`].
    pub matrices: Vec<(u64, u64)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    Mos(MosWitness),
    /// The summed matrices, with the totals they are drawn from.
    Som {
        p: u64,
        n: u64,
        verdict: Verdict,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IndeterminateReason {
    /// The branch-and-bound node limit was hit on a bundle.
    NodeBudget { bundle: u64 },
    /// More bundles exist than the configuration budget allows.
    ConfigBudget { budget: u128 },
}

impl fmt::Display for IndeterminateReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndeterminateReason::NodeBudget { bundle } => {
                write!(f, "node budget exhausted on fold configuration {bundle}")
            }
            IndeterminateReason::ConfigBudget { budget } => {
                write!(f, "more than {budget} fold configurations")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EntryVerdict {
    Consistent(Box<Witness>),
    Inconsistent,
    Indeterminate(IndeterminateReason),
    /// None of the reported scores can be tested under this assumption.
    NotApplicable,
}

/// Outcome of one assumption.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssumptionEntry {
    pub assumption: Assumption,
    pub verdict: EntryVerdict,
    /// Reported scores this assumption could not use.
    pub skipped_scores: Vec<String>,
    /// Fold bundles solved (for the mean of scores).
    pub configurations_examined: u64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OverallStatus {
    Consistent,
    Inconsistent,
    Indeterminate,
    NotApplicable,
}

impl OverallStatus {
    pub fn name(self) -> &'static str {
        match self {
            OverallStatus::Consistent => "consistent",
            OverallStatus::Inconsistent => "inconsistent",
            OverallStatus::Indeterminate => "indeterminate",
            OverallStatus::NotApplicable => "not_applicable",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregatedVerdict {
    pub entries: Vec<AssumptionEntry>,
}

impl AggregatedVerdict {
    pub fn entry(&self, assumption: Assumption) -> Option<&AssumptionEntry> {
        self.entries.iter().find(|e| e.assumption == assumption)
    }

    /// Consistent if any assumption is; inconsistent only if every
    /// applicable assumption is.
    pub fn status(&self) -> OverallStatus {
        let has = |f: fn(&EntryVerdict) -> bool| self.entries.iter().any(|e| f(&e.verdict));
        if has(|v| matches!(v, EntryVerdict::Consistent(_))) {
            OverallStatus::Consistent
        } else if has(|v| matches!(v, EntryVerdict::Indeterminate(_))) {
            OverallStatus::Indeterminate
        } else if has(|v| matches!(v, EntryVerdict::Inconsistent)) {
            OverallStatus::Inconsistent
        } else {
            OverallStatus::NotApplicable
        }
    }
}

fn linear_id(score: &ReportedScore) -> Option<ScoreId> {
    score
        .definition
        .builtin
        .filter(|id| id.is_linear() && score.definition.linear_in_tp_tn)
}

/// Coefficients of `(tp, tn)` in one fold's value of a linear score, or
/// `None` if the score is undefined on the fold.
fn fold_coefficients(id: ScoreId, fold: Fold) -> Option<(Rational, Rational)> {
    let p = integer(fold.p);
    let n = integer(fold.n);
    let zero = Rational::zero;
    match id {
        ScoreId::Acc => {
            let c = (&p + &n).recip();
            Some((c.clone(), c))
        }
        ScoreId::Sens => (fold.p > 0).then(|| (p.recip(), zero())),
        ScoreId::Spec => (fold.n > 0).then(|| (zero(), n.recip())),
        ScoreId::Bacc => (fold.p > 0 && fold.n > 0).then(|| {
            let two = integer(2);
            ((&two * &p).recip(), (&two * &n).recip())
        }),
        _ => None,
    }
}

/// The integer system whose solutions are per-fold matrices reproducing
/// every reported mean (and per-fold extremes): variables `tp_0..tp_k`
/// followed by `tn_0..tn_k`.
pub fn build_system(
    folds: &[Fold],
    scores: &[ReportedScore],
    extremes: &[FoldExtremes],
) -> Result<LinearSystem, MosError> {
    let k = folds.len();
    let mut sys = LinearSystem::new();
    for (i, f) in folds.iter().enumerate() {
        sys.add_variable(format!("tp_{i}"), 0, f.p as i64);
    }
    for (i, f) in folds.iter().enumerate() {
        sys.add_variable(format!("tn_{i}"), 0, f.n as i64);
    }
    let per_fold = |score: &ReportedScore| -> Result<Vec<(Rational, Rational)>, MosError> {
        let id = linear_id(score).ok_or_else(|| MosError::NonlinearScore(score.name().into()))?;
        folds
            .iter()
            .enumerate()
            .map(|(i, &f)| {
                fold_coefficients(id, f).ok_or_else(|| MosError::UndefinedInFold {
                    score: score.name().into(),
                    fold: i,
                    p: f.p,
                    n: f.n,
                })
            })
            .collect()
    };
    let weight = integer(k as u64).recip();
    for score in scores {
        let coefs = per_fold(score)?;
        let mut row = Vec::with_capacity(2 * k);
        for (i, (a, b)) in coefs.into_iter().enumerate() {
            if !a.is_zero() {
                row.push((i, a * &weight));
            }
            if !b.is_zero() {
                row.push((k + i, b * &weight));
            }
        }
        let iv = score.interval();
        sys.add_constraint(row, Some(iv.lo().clone()), Some(iv.hi().clone()));
    }
    for ext in extremes {
        let coefs = per_fold(&ext.score)?;
        let eps = &ext.score.uncertainty;
        for (i, (a, b)) in coefs.into_iter().enumerate() {
            let mut row = Vec::with_capacity(2);
            if !a.is_zero() {
                row.push((i, a));
            }
            if !b.is_zero() {
                row.push((k + i, b));
            }
            sys.add_constraint(row, Some(&ext.min - eps), Some(&ext.max + eps));
        }
    }
    Ok(sys)
}

/// Exact mean of a score over folds, `None` if undefined on some fold.
pub fn mean_score(
    score: &ReportedScore,
    folds: &[Fold],
    matrices: &[(u64, u64)],
    params: &ScoreParams,
) -> Option<Rational> {
    let mut sum = Rational::zero();
    for (f, &(tp, tn)) in folds.iter().zip(matrices) {
        let c = ConfusionCounts::new(tp, tn, f.p, f.n).ok()?;
        match score.definition.evaluate(&c, params).ok()? {
            ScoreValue::Exact(v) => sum += v,
            ScoreValue::Surd { .. } => return None,
        }
    }
    Some(sum / integer(folds.len() as u64))
}

/// Rechecks a mean-of-scores witness by direct evaluation of every fold.
pub fn mos_witness_holds(
    folds: &[Fold],
    matrices: &[(u64, u64)],
    scores: &[ReportedScore],
    extremes: &[FoldExtremes],
    params: &ScoreParams,
) -> bool {
    if folds.len() != matrices.len() {
        return false;
    }
    let means_ok = scores
        .iter()
        .all(|s| mean_score(s, folds, matrices, params).is_some_and(|m| s.interval().contains(&m)));
    let extremes_ok = extremes.iter().all(|e| {
        let eps = &e.score.uncertainty;
        let Ok(band) = Interval::new(&e.min - eps, &e.max + eps) else {
            return false;
        };
        folds.iter().zip(matrices).all(|(f, &(tp, tn))| {
            ConfusionCounts::new(tp, tn, f.p, f.n)
                .ok()
                .and_then(|c| e.score.definition.evaluate(&c, params).ok())
                .is_some_and(|v| v.lies_in(&band))
        })
    });
    means_ok && extremes_ok
}

enum BundleOutcome {
    Feasible(Vec<(u64, u64)>),
    Infeasible,
    Indeterminate,
}

fn solve_bundle(
    bundle: &Bundle,
    scores: &[ReportedScore],
    extremes: &[FoldExtremes],
    params: &ScoreParams,
    options: &SolverOptions,
) -> BundleOutcome {
    let folds: Vec<Fold> = bundle.folds().collect();
    let system = match build_system(&folds, scores, extremes) {
        Ok(s) => s,
        // A reported mean cannot include a fold where the score is undefined.
        Err(_) => return BundleOutcome::Infeasible,
    };
    let solution = solve_feasibility(&system, options).expect("system is well formed");
    match solution.result {
        FeasibilityResult::Feasible(a) => {
            let k = folds.len();
            let matrices: Vec<(u64, u64)> = (0..k)
                .map(|i| (a.values[i] as u64, a.values[k + i] as u64))
                .collect();
            if mos_witness_holds(&folds, &matrices, scores, extremes, params) {
                BundleOutcome::Feasible(matrices)
            } else {
                BundleOutcome::Indeterminate
            }
        }
        FeasibilityResult::Infeasible => BundleOutcome::Infeasible,
        FeasibilityResult::Indeterminate { .. } => BundleOutcome::Indeterminate,
    }
}

/// Tests the mean-of-scores assumption, over every candidate fold bundle
/// when the folding is not known.
///
/// Bundles are solved in parallel chunks on the current rayon pool and
/// scanned in order, so the witness and the number of bundles examined do
/// not depend on the number of threads.
pub fn test_mos(
    problem: &AggregatedProblem,
    options: &AggregatedOptions,
) -> Result<AssumptionEntry, MosError> {
    problem.spec.validate()?;
    validate_scores(&problem.scores)?;
    let (linear, skipped): (Vec<_>, Vec<_>) = problem
        .scores
        .iter()
        .cloned()
        .partition(|s| linear_id(s).is_some());
    let (extremes, skipped_extremes): (Vec<_>, Vec<_>) = problem
        .fold_extremes
        .iter()
        .cloned()
        .partition(|e| linear_id(&e.score).is_some());
    let mut skipped_scores: Vec<String> = skipped.iter().map(|s| s.name().to_string()).collect();
    skipped_scores.extend(
        skipped_extremes
            .iter()
            .map(|e| format!("{} (fold extremes)", e.score.name())),
    );
    let mut entry = AssumptionEntry {
        assumption: Assumption::Mos,
        verdict: EntryVerdict::NotApplicable,
        skipped_scores,
        configurations_examined: 0,
        warnings: Vec::new(),
    };
    if linear.is_empty() && extremes.is_empty() {
        return Ok(entry);
    }

    let ids = linear
        .iter()
        .chain(extremes.iter().map(|e| &e.score))
        .filter_map(linear_id);
    let pruning = Pruning::for_scores(ids);
    let expansion = expand_experiment(&problem.spec, pruning, options.config_budget)?;
    entry.warnings = expansion.warnings.iter().map(ToString::to_string).collect();

    let mut bundles = expansion.bundles();
    let mut examined: u64 = 0;
    let mut first_indeterminate: Option<u64> = None;
    let mut witness: Option<MosWitness> = None;
    let mut budget_hit = false;
    loop {
        let remaining = options.config_budget.saturating_sub(u128::from(examined));
        if remaining == 0 {
            budget_hit = bundles.next().is_some();
            break;
        }
        let take = remaining.min(CHUNK as u128) as usize;
        let chunk: Vec<Bundle> = bundles.by_ref().take(take).collect();
        if chunk.is_empty() {
            break;
        }
        let outcomes: Vec<BundleOutcome> = chunk
            .par_iter()
            .map(|b| solve_bundle(b, &linear, &extremes, &problem.params, &options.solver))
            .collect();
        for (bundle, outcome) in chunk.into_iter().zip(outcomes) {
            examined += 1;
            match outcome {
                BundleOutcome::Feasible(matrices) => {
                    if witness.is_none() {
                        witness = Some(MosWitness { bundle, matrices });
                    }
                }
                BundleOutcome::Indeterminate => {
                    first_indeterminate.get_or_insert(examined);
                }
                BundleOutcome::Infeasible => {}
            }
            if witness.is_some() && !options.full_count {
                break;
            }
        }
        if witness.is_some() && !options.full_count {
            break;
        }
    }
    entry.configurations_examined = examined;
    entry.verdict = if let Some(w) = witness {
        EntryVerdict::Consistent(Box::new(Witness::Mos(w)))
    } else if budget_hit {
        EntryVerdict::Indeterminate(IndeterminateReason::ConfigBudget {
            budget: options.config_budget,
        })
    } else if let Some(bundle) = first_indeterminate {
        EntryVerdict::Indeterminate(IndeterminateReason::NodeBudget { bundle })
    } else {
        EntryVerdict::Inconsistent
    };
    Ok(entry)
}

/// Tests the score-of-means assumption: the scores of the summed confusion
/// matrix over all folds, datasets and repetitions.
pub fn test_som(
    problem: &AggregatedProblem,
    options: &AggregatedOptions,
) -> Result<AssumptionEntry, MosError> {
    problem.spec.validate()?;
    let (p, n) = problem.spec.som_totals();
    let single = SingleProblem::new(p, n, problem.scores.clone(), problem.params.clone());
    let verdict = test_single(&single, options.witness_mode)?;
    Ok(AssumptionEntry {
        assumption: Assumption::Som,
        verdict: if verdict.consistent {
            EntryVerdict::Consistent(Box::new(Witness::Som { p, n, verdict }))
        } else {
            EntryVerdict::Inconsistent
        },
        skipped_scores: Vec::new(),
        configurations_examined: 0,
        warnings: Vec::new(),
    })
}

/// Runs the tests the stated aggregation calls for.
pub fn test_aggregated(
    problem: &AggregatedProblem,
    options: &AggregatedOptions,
) -> Result<AggregatedVerdict, MosError> {
    let entries = match problem.aggregation {
        Aggregation::Mos => vec![test_mos(problem, options)?],
        Aggregation::Som => vec![test_som(problem, options)?],
        Aggregation::Unknown => vec![test_mos(problem, options)?, test_som(problem, options)?],
    };
    Ok(AggregatedVerdict { entries })
}
