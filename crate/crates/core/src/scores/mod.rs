//! Binary-classification performance scores: forward evaluation from a
//! confusion matrix and interval-valued inversion for one unknown figure.

mod builtin;
pub mod expr;
mod value;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, LazyLock};

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::interval::{integer, Interval, IntervalSet, Rational};
pub use expr::{Eval, EvalContext, Expr, Var};
pub use value::ScoreValue;

/// The twenty built-in scores, by canonical abbreviation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScoreId {
    Acc,
    Sens,
    Spec,
    Ppv,
    Npv,
    Fbp,
    Fbn,
    Upm,
    Gm,
    Fm,
    Mk,
    Bm,
    Mcc,
    Lrp,
    Lrn,
    Pt,
    Dor,
    Ji,
    Bacc,
    Kappa,
}

impl ScoreId {
    pub const ALL: [ScoreId; 20] = [
        ScoreId::Acc,
        ScoreId::Sens,
        ScoreId::Spec,
        ScoreId::Ppv,
        ScoreId::Npv,
        ScoreId::Fbp,
        ScoreId::Fbn,
        ScoreId::Upm,
        ScoreId::Gm,
        ScoreId::Fm,
        ScoreId::Mk,
        ScoreId::Bm,
        ScoreId::Mcc,
        ScoreId::Lrp,
        ScoreId::Lrn,
        ScoreId::Pt,
        ScoreId::Dor,
        ScoreId::Ji,
        ScoreId::Bacc,
        ScoreId::Kappa,
    ];

    pub const LINEAR: [ScoreId; 4] = [ScoreId::Acc, ScoreId::Sens, ScoreId::Spec, ScoreId::Bacc];

    pub fn name(self) -> &'static str {
        match self {
            ScoreId::Acc => "acc",
            ScoreId::Sens => "sens",
            ScoreId::Spec => "spec",
            ScoreId::Ppv => "ppv",
            ScoreId::Npv => "npv",
            ScoreId::Fbp => "fbp",
            ScoreId::Fbn => "fbn",
            ScoreId::Upm => "upm",
            ScoreId::Gm => "gm",
            ScoreId::Fm => "fm",
            ScoreId::Mk => "mk",
            ScoreId::Bm => "bm",
            ScoreId::Mcc => "mcc",
            ScoreId::Lrp => "lrp",
            ScoreId::Lrn => "lrn",
            ScoreId::Pt => "pt",
            ScoreId::Dor => "dor",
            ScoreId::Ji => "ji",
            ScoreId::Bacc => "bacc",
            ScoreId::Kappa => "kappa",
        }
    }

    pub fn is_linear(self) -> bool {
        Self::LINEAR.contains(&self)
    }

    /// Scores whose standardized form contains a square root.
    pub fn is_radical(self) -> bool {
        matches!(self, ScoreId::Gm | ScoreId::Fm | ScoreId::Mcc | ScoreId::Pt)
    }

    pub fn definition(self) -> Arc<ScoreDefinition> {
        BUILTINS[self as usize].clone()
    }
}

impl fmt::Display for ScoreId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Accepted synonyms. Names marked `true` pin the score's beta to 1.
const ALIASES: &[(&str, ScoreId, bool)] = &[
    ("accuracy", ScoreId::Acc, false),
    ("sensitivity", ScoreId::Sens, false),
    ("recall", ScoreId::Sens, false),
    ("tpr", ScoreId::Sens, false),
    ("true_positive_rate", ScoreId::Sens, false),
    ("specificity", ScoreId::Spec, false),
    ("tnr", ScoreId::Spec, false),
    ("selectivity", ScoreId::Spec, false),
    ("true_negative_rate", ScoreId::Spec, false),
    ("precision", ScoreId::Ppv, false),
    ("positive_predictive_value", ScoreId::Ppv, false),
    ("negative_predictive_value", ScoreId::Npv, false),
    ("f1", ScoreId::Fbp, true),
    ("f1p", ScoreId::Fbp, true),
    ("f1_plus", ScoreId::Fbp, true),
    ("f1n", ScoreId::Fbn, true),
    ("f1_minus", ScoreId::Fbn, true),
    ("unified_performance_measure", ScoreId::Upm, false),
    ("p4", ScoreId::Upm, false),
    ("geometric_mean", ScoreId::Gm, false),
    ("fowlkes_mallows_index", ScoreId::Fm, false),
    ("markedness", ScoreId::Mk, false),
    ("bookmaker_informedness", ScoreId::Bm, false),
    ("informedness", ScoreId::Bm, false),
    ("matthews_correlation_coefficient", ScoreId::Mcc, false),
    ("phi", ScoreId::Mcc, false),
    ("positive_likelihood_ratio", ScoreId::Lrp, false),
    ("negative_likelihood_ratio", ScoreId::Lrn, false),
    ("prevalence_threshold", ScoreId::Pt, false),
    ("diagnostic_odds_ratio", ScoreId::Dor, false),
    ("jaccard_index", ScoreId::Ji, false),
    ("threat_score", ScoreId::Ji, false),
    ("critical_success_index", ScoreId::Ji, false),
    ("balanced_accuracy", ScoreId::Bacc, false),
    ("cohens_kappa", ScoreId::Kappa, false),
];

/// Outcome of resolving a user-facing score name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResolvedName {
    pub id: ScoreId,
    /// The alias implies beta = 1 (`f1` and friends).
    pub unit_beta: bool,
}

pub fn resolve_name(name: &str) -> Option<ResolvedName> {
    let key = name.trim().to_ascii_lowercase().replace(['-', ' '], "_");
    if let Some(id) = ScoreId::ALL.iter().find(|id| id.name() == key) {
        return Some(ResolvedName {
            id: *id,
            unit_beta: false,
        });
    }
    ALIASES
        .iter()
        .find(|(alias, _, _)| *alias == key)
        .map(|&(_, id, unit_beta)| ResolvedName { id, unit_beta })
}

/// Every accepted name (canonical or alias) with the id it resolves to.
pub fn known_names() -> impl Iterator<Item = (&'static str, ScoreId)> {
    ScoreId::ALL
        .iter()
        .map(|id| (id.name(), *id))
        .chain(ALIASES.iter().map(|&(a, id, _)| (a, id)))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown score name {0:?}")]
pub struct UnknownScore(pub String);

impl FromStr for ScoreId {
    type Err = UnknownScore;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        resolve_name(s)
            .map(|r| r.id)
            .ok_or_else(|| UnknownScore(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScoreError {
    #[error("{score} is undefined for this confusion matrix")]
    Undefined { score: String },
    #[error("beta must be strictly positive")]
    NonPositiveBeta,
    #[error("confusion matrix out of range: tp={tp}, tn={tn}, p={p}, n={n}")]
    InvalidCounts { tp: u64, tn: u64, p: u64, n: u64 },
}

/// Weights of the F-beta scores.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoreParams {
    beta_plus: Rational,
    beta_minus: Rational,
}

impl ScoreParams {
    pub fn new(beta_plus: Rational, beta_minus: Rational) -> Result<Self, ScoreError> {
        if !beta_plus.is_positive() || !beta_minus.is_positive() {
            return Err(ScoreError::NonPositiveBeta);
        }
        Ok(ScoreParams {
            beta_plus,
            beta_minus,
        })
    }

    pub fn beta_plus(&self) -> &Rational {
        &self.beta_plus
    }

    pub fn beta_minus(&self) -> &Rational {
        &self.beta_minus
    }
}

impl Default for ScoreParams {
    fn default() -> Self {
        ScoreParams {
            beta_plus: Rational::one(),
            beta_minus: Rational::one(),
        }
    }
}

/// One confusion matrix described by its two free figures and the class sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub p: u64,
    pub n: u64,
}

impl ConfusionCounts {
    /// One class may be empty, as on a small fold; scores dividing by its
    /// size are then undefined.
    pub fn new(tp: u64, tn: u64, p: u64, n: u64) -> Result<Self, ScoreError> {
        if p + n == 0 || tp > p || tn > n {
            return Err(ScoreError::InvalidCounts { tp, tn, p, n });
        }
        Ok(ConfusionCounts { tp, tn, p, n })
    }

    pub fn fp(&self) -> u64 {
        self.n - self.tn
    }

    pub fn fn_(&self) -> u64 {
        self.p - self.tp
    }

    pub fn scaled(&self, factor: u64) -> ConfusionCounts {
        ConfusionCounts {
            tp: self.tp * factor,
            tn: self.tn * factor,
            p: self.p * factor,
            n: self.n * factor,
        }
    }
}

/// The figure an inversion solves for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Unknown {
    Tp,
    Tn,
}

/// How a score can be solved for one figure given the other.
#[derive(Debug, Clone)]
pub enum Inverse {
    /// The score does not depend on this figure.
    Independent,
    /// Closed-form solutions; several entries are the branches of a root.
    Branches(Vec<Expr>),
}

/// Attainable values of a score; `hi = None` means unbounded above.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueRange {
    pub lo: Rational,
    pub hi: Option<Rational>,
}

impl ValueRange {
    pub fn unit() -> Self {
        ValueRange {
            lo: Rational::zero(),
            hi: Some(Rational::one()),
        }
    }

    pub fn symmetric_unit() -> Self {
        ValueRange {
            lo: -Rational::one(),
            hi: Some(Rational::one()),
        }
    }

    pub fn nonnegative() -> Self {
        ValueRange {
            lo: Rational::zero(),
            hi: None,
        }
    }

    pub fn clip(&self, value: &Interval) -> Option<Interval> {
        let lo = value.lo().max(&self.lo).clone();
        let hi = match &self.hi {
            Some(h) => value.hi().min(h).clone(),
            None => value.hi().clone(),
        };
        Interval::new(lo, hi).ok()
    }
}

pub type ForwardFn =
    dyn Fn(&ConfusionCounts, &ScoreParams) -> Result<ScoreValue, ScoreError> + Send + Sync;

/// A score: how to compute it and how to solve it for tp or tn.
#[derive(Clone)]
pub struct ScoreDefinition {
    pub name: String,
    /// Set for the built-in scores.
    pub builtin: Option<ScoreId>,
    pub forward: Arc<ForwardFn>,
    pub inverse_tp: Inverse,
    pub inverse_tn: Inverse,
    pub linear_in_tp_tn: bool,
    pub value_range: ValueRange,
}

impl fmt::Debug for ScoreDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScoreDefinition")
            .field("name", &self.name)
            .field("linear_in_tp_tn", &self.linear_in_tp_tn)
            .finish_non_exhaustive()
    }
}

/// What inverting a score over a value interval yields.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Inversion {
    Set(IntervalSet),
    /// No information: every value of the unknown is possible.
    WholeLine,
}

impl Inversion {
    pub fn is_empty(&self) -> bool {
        matches!(self, Inversion::Set(s) if s.is_empty())
    }
}

impl ScoreDefinition {
    pub fn evaluate(
        &self,
        counts: &ConfusionCounts,
        params: &ScoreParams,
    ) -> Result<ScoreValue, ScoreError> {
        (self.forward)(counts, params)
    }

    /// Encloses every real value of `unknown` for which the score, with the
    /// other figure fixed at `known`, lands in `value`.
    pub fn invert(
        &self,
        value: &Interval,
        unknown: Unknown,
        known: u64,
        p: u64,
        n: u64,
        params: &ScoreParams,
    ) -> Inversion {
        let Some(value) = self.value_range.clip(value) else {
            return Inversion::Set(IntervalSet::empty());
        };
        let inverse = match unknown {
            Unknown::Tp => &self.inverse_tp,
            Unknown::Tn => &self.inverse_tn,
        };
        match inverse {
            Inverse::Independent => {
                // Any value of the unknown gives the same score; probe with 0.
                let counts = match unknown {
                    Unknown::Tp => ConfusionCounts {
                        tp: 0,
                        tn: known,
                        p,
                        n,
                    },
                    Unknown::Tn => ConfusionCounts {
                        tp: known,
                        tn: 0,
                        p,
                        n,
                    },
                };
                match self.evaluate(&counts, params) {
                    Ok(v) if v.lies_in(&value) => Inversion::WholeLine,
                    _ => Inversion::Set(IntervalSet::empty()),
                }
            }
            Inverse::Branches(branches) => {
                let ctx = EvalContext {
                    value,
                    known: integer(known),
                    p: integer(p),
                    n: integer(n),
                    beta_plus: params.beta_plus.clone(),
                    beta_minus: params.beta_minus.clone(),
                };
                let mut pieces = Vec::with_capacity(branches.len());
                for branch in branches {
                    match branch.eval(&ctx) {
                        Eval::Finite(iv) => pieces.push(iv),
                        Eval::WholeLine => return Inversion::WholeLine,
                        Eval::Empty => {}
                    }
                }
                Inversion::Set(IntervalSet::from_intervals(pieces))
            }
        }
    }
}

static BUILTINS: LazyLock<Vec<Arc<ScoreDefinition>>> = LazyLock::new(|| {
    ScoreId::ALL
        .iter()
        .map(|id| Arc::new(builtin::definition(*id)))
        .collect()
});

/// Named score definitions: the built-ins plus any user registrations.
#[derive(Debug, Clone)]
pub struct ScoreRegistry {
    by_name: BTreeMap<String, Arc<ScoreDefinition>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("a score named {0:?} is already registered")]
pub struct DuplicateScore(pub String);

impl ScoreRegistry {
    pub fn builtin() -> Self {
        let by_name = ScoreId::ALL
            .iter()
            .map(|id| (id.name().to_string(), id.definition()))
            .collect();
        ScoreRegistry { by_name }
    }

    pub fn register(&mut self, definition: ScoreDefinition) -> Result<(), DuplicateScore> {
        let name = definition.name.clone();
        if self.by_name.contains_key(&name) || resolve_name(&name).is_some() {
            return Err(DuplicateScore(name));
        }
        self.by_name.insert(name, Arc::new(definition));
        Ok(())
    }

    /// Looks up a registered name, falling back to the built-in aliases.
    pub fn get(&self, name: &str) -> Option<Arc<ScoreDefinition>> {
        self.by_name
            .get(name)
            .cloned()
            .or_else(|| resolve_name(name).map(|r| r.id.definition()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.by_name.keys().map(String::as_str)
    }
}

impl Default for ScoreRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

#[cfg(test)]
mod tests;
