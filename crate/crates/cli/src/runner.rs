//! Runs planned problems on the current thread pool, one isolated job per
//! problem, with results kept in input order.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use scoreforge::folds::{count_configurations, Folding, Pruning, DEFAULT_CONFIG_BUDGET};
use scoreforge::lp::{SolverOptions, DEFAULT_NODE_LIMIT};
use scoreforge::mos::{test_aggregated, AggregatedOptions};
use scoreforge::single::{test_single, WitnessMode};

use crate::document::SCHEMA_VERSION;
use crate::plan::{PlannedProblem, Task};
use crate::report::{aggregated_entry, single_entry, ProblemReport, Status};

/// Which witnesses to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum WitnessChoice {
    First,
    All,
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub witnesses: WitnessChoice,
    pub node_limit: u64,
    pub config_budget: u128,
    pub full_count: bool,
    pub timing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            witnesses: WitnessChoice::First,
            node_limit: DEFAULT_NODE_LIMIT,
            config_budget: DEFAULT_CONFIG_BUDGET,
            full_count: false,
            timing: false,
        }
    }
}

impl RunOptions {
    fn witness_mode(&self) -> WitnessMode {
        match self.witnesses {
            WitnessChoice::First => WitnessMode::First,
            WitnessChoice::All => WitnessMode::All,
        }
    }

    fn aggregated(&self) -> AggregatedOptions {
        AggregatedOptions {
            solver: SolverOptions {
                node_limit: self.node_limit,
            },
            config_budget: self.config_budget,
            witness_mode: self.witness_mode(),
            full_count: self.full_count,
        }
    }
}

fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".into())
}

fn evaluate(problem: &PlannedProblem, options: &RunOptions) -> ProblemReport {
    let report = |status: Status, verdicts| ProblemReport {
        id: problem.id.clone(),
        status,
        verdicts,
        error: None,
        timing_ms: None,
    };
    match &problem.task {
        Task::Single(single) => match test_single(single, options.witness_mode()) {
            Ok(v) => {
                let entry = single_entry(&v);
                report(entry.status, vec![entry])
            }
            Err(e) => ProblemReport::error(&problem.id, e.to_string()),
        },
        Task::Aggregated(agg) => match test_aggregated(agg, &options.aggregated()) {
            Ok(v) => report(
                v.status().into(),
                v.entries.iter().map(aggregated_entry).collect(),
            ),
            Err(e) => ProblemReport::error(&problem.id, e.to_string()),
        },
    }
}

/// Runs one problem; a panic inside the test becomes an error report.
pub fn run_problem(problem: &PlannedProblem, options: &RunOptions) -> ProblemReport {
    let start = Instant::now();
    let mut out =
        catch_unwind(AssertUnwindSafe(|| evaluate(problem, options))).unwrap_or_else(|payload| {
            ProblemReport::error(
                &problem.id,
                format!("internal error: {}", panic_message(payload.as_ref())),
            )
        });
    if options.timing {
        out.timing_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    out
}

pub fn run_all(problems: &[PlannedProblem], options: &RunOptions) -> Vec<ProblemReport> {
    problems
        .par_iter()
        .map(|p| run_problem(p, options))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DatasetCount {
    pub dataset: usize,
    pub p: u64,
    pub n: u64,
    pub strategy: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Configurations of one repetition before score-implied pruning.
    pub raw: u64,
    /// Configurations left after pruning folds on which a reported score
    /// is undefined.
    pub pruned: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CountReport {
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub repeats: Option<u64>,
    pub datasets: Vec<DatasetCount>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CountDocument {
    pub schema_version: &'static str,
    pub results: Vec<CountReport>,
}

fn count_problem(problem: &PlannedProblem) -> CountReport {
    match &problem.task {
        Task::Single(s) => CountReport {
            id: problem.id.clone(),
            repeats: None,
            datasets: vec![DatasetCount {
                dataset: 0,
                p: s.p,
                n: s.n,
                strategy: "single",
                k: None,
                raw: 1,
                pruned: 1,
            }],
        },
        Task::Aggregated(a) => {
            let ids = a
                .scores
                .iter()
                .chain(a.fold_extremes.iter().map(|e| &e.score))
                .filter_map(|s| s.definition.builtin);
            let pruning = Pruning::for_scores(ids);
            let datasets = a
                .spec
                .datasets
                .iter()
                .enumerate()
                .map(|(i, d)| {
                    let (strategy, k, raw, pruned) = match &d.folding {
                        Folding::Explicit(c) => ("explicit", c.len(), 1, 1),
                        Folding::Stratified => ("stratified", a.spec.k, 1, 1),
                        Folding::Unknown => {
                            let c = count_configurations(d.p, d.n, a.spec.k, pruning);
                            ("unknown", a.spec.k, c.raw, c.pruned)
                        }
                    };
                    DatasetCount {
                        dataset: i,
                        p: d.p,
                        n: d.n,
                        strategy,
                        k: Some(k),
                        raw,
                        pruned,
                    }
                })
                .collect();
            CountReport {
                id: problem.id.clone(),
                repeats: Some(a.spec.repeats),
                datasets,
            }
        }
    }
}

pub fn count_all(problems: &[PlannedProblem]) -> CountDocument {
    CountDocument {
        schema_version: SCHEMA_VERSION,
        results: problems.par_iter().map(count_problem).collect(),
    }
}
