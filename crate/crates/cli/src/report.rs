//! The verdict document written to standard output.
//!
//! Field order is fixed by the struct definitions, so the same input always
//! serializes to the same bytes; timings are only emitted on request.

use serde::Serialize;

use scoreforge::folds::Bundle;
use scoreforge::mos::{AssumptionEntry, EntryVerdict, MosWitness, OverallStatus, Witness};
use scoreforge::single::Verdict;

use crate::document::SCHEMA_VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Consistent,
    Inconsistent,
    Indeterminate,
    NotApplicable,
    Error,
}

impl From<OverallStatus> for Status {
    fn from(s: OverallStatus) -> Self {
        match s {
            OverallStatus::Consistent => Status::Consistent,
            OverallStatus::Inconsistent => Status::Inconsistent,
            OverallStatus::Indeterminate => Status::Indeterminate,
            OverallStatus::NotApplicable => Status::NotApplicable,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Matrix {
    pub tp: u64,
    pub tn: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Totals {
    pub p: u64,
    pub n: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FoldMatrix {
    pub dataset: usize,
    pub repetition: usize,
    pub fold: usize,
    pub p: u64,
    pub n: u64,
    pub tp: u64,
    pub tn: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum WitnessReport {
    Matrix(Matrix),
    Folds { folds: Vec<FoldMatrix> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EntryReport {
    pub assumption: &'static str,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    /// Class totals the witnesses are drawn from, for a summed matrix.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub totals: Option<Totals>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub witnesses: Vec<WitnessReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncated: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub configurations_examined: Option<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub skipped_scores: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemReport {
    pub id: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub verdicts: Vec<EntryReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<f64>,
}

impl ProblemReport {
    pub fn error(id: &str, message: String) -> Self {
        ProblemReport {
            id: id.to_string(),
            status: Status::Error,
            verdicts: Vec::new(),
            error: Some(message),
            timing_ms: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictDocument {
    pub schema_version: &'static str,
    pub status: Status,
    pub results: Vec<ProblemReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<f64>,
}

/// Batch status: an inconsistency anywhere dominates, then input errors,
/// then incomplete searches.
pub fn batch_status(results: &[ProblemReport]) -> Status {
    let any = |s: Status| results.iter().any(|r| r.status == s);
    if any(Status::Inconsistent) {
        Status::Inconsistent
    } else if any(Status::Error) {
        Status::Error
    } else if any(Status::Indeterminate) {
        Status::Indeterminate
    } else if any(Status::Consistent) {
        Status::Consistent
    } else {
        Status::NotApplicable
    }
}

impl VerdictDocument {
    pub fn new(results: Vec<ProblemReport>, timing_ms: Option<f64>) -> Self {
        VerdictDocument {
            schema_version: SCHEMA_VERSION,
            status: batch_status(&results),
            results,
            timing_ms,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }
}

pub fn exit_code(status: Status) -> u8 {
    match status {
        Status::Consistent | Status::NotApplicable => 0,
        Status::Inconsistent => 1,
        Status::Indeterminate => 2,
        Status::Error => 64,
    }
}

fn matrices(verdict: &Verdict) -> Vec<WitnessReport> {
    verdict
        .witnesses
        .iter()
        .map(|&(tp, tn)| WitnessReport::Matrix(Matrix { tp, tn }))
        .collect()
}

pub fn single_entry(verdict: &Verdict) -> EntryReport {
    EntryReport {
        assumption: "single",
        status: if verdict.consistent {
            Status::Consistent
        } else {
            Status::Inconsistent
        },
        reason: None,
        totals: None,
        witnesses: matrices(verdict),
        truncated: verdict.consistent.then_some(verdict.truncated),
        configurations_examined: None,
        skipped_scores: Vec::new(),
        warnings: Vec::new(),
    }
}

fn fold_matrices(bundle: &Bundle, witness: &MosWitness) -> Vec<FoldMatrix> {
    let mut out = Vec::with_capacity(witness.matrices.len());
    let mut cells = witness.matrices.iter();
    for (dataset, reps) in bundle.parts.iter().enumerate() {
        for (repetition, config) in reps.iter().enumerate() {
            for (fold, f) in config.folds().iter().enumerate() {
                let &(tp, tn) = cells.next().expect("one matrix per fold");
                out.push(FoldMatrix {
                    dataset,
                    repetition,
                    fold,
                    p: f.p,
                    n: f.n,
                    tp,
                    tn,
                });
            }
        }
    }
    out
}

pub fn aggregated_entry(entry: &AssumptionEntry) -> EntryReport {
    let mut report = EntryReport {
        assumption: entry.assumption.name(),
        status: Status::NotApplicable,
        reason: None,
        totals: None,
        witnesses: Vec::new(),
        truncated: None,
        configurations_examined: None,
        skipped_scores: entry.skipped_scores.clone(),
        warnings: entry.warnings.clone(),
    };
    if entry.assumption == scoreforge::mos::Assumption::Mos {
        report.configurations_examined = Some(entry.configurations_examined);
    }
    match &entry.verdict {
        EntryVerdict::Consistent(w) => {
            report.status = Status::Consistent;
            match w.as_ref() {
                Witness::Mos(m) => {
                    report.witnesses = vec![WitnessReport::Folds {
                        folds: fold_matrices(&m.bundle, m),
                    }];
                }
                Witness::Som { p, n, verdict } => {
                    report.totals = Some(Totals { p: *p, n: *n });
                    report.witnesses = matrices(verdict);
                    report.truncated = Some(verdict.truncated);
                }
            }
        }
        EntryVerdict::Inconsistent => report.status = Status::Inconsistent,
        EntryVerdict::Indeterminate(reason) => {
            report.status = Status::Indeterminate;
            report.reason = Some(reason.to_string());
        }
        EntryVerdict::NotApplicable => {
            report.reason = Some("no reported score can be averaged exactly".into());
        }
    }
    report
}
