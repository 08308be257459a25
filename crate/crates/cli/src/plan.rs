//! Turns a parsed document into test problems, collecting every input error
//! with the JSON pointer of the offending value.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Signed};
use scoreforge::decimal::{parse_decimal, Decimal};
use scoreforge::folds::{Dataset, ExperimentSpec, Fold, FoldConfiguration, FoldError, Folding};
use scoreforge::interval::Rational;
use scoreforge::mos::{AggregatedProblem, Aggregation, FoldExtremes};
use scoreforge::scores::{known_names, resolve_name, ScoreId, ScoreParams};
use scoreforge::single::{ReportedScore, SingleProblem};

use crate::document::{
    escape_token, AggregationName, Counts, EpsMode, ExtremesSpec, ProblemDocument, ProblemSpec,
    Strategy, SCHEMA_VERSION,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputError {
    pub pointer: String,
    pub message: String,
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.pointer, self.message)
    }
}

#[derive(Debug, Clone)]
pub enum Task {
    /// One confusion matrix of known composition.
    Single(SingleProblem),
    /// Scores aggregated over folds or datasets.
    Aggregated(AggregatedProblem),
}

#[derive(Debug, Clone)]
pub struct PlannedProblem {
    pub id: String,
    pub task: Task,
}

/// Collects errors for one problem under a common pointer prefix.
struct Errors<'a> {
    base: String,
    out: &'a mut Vec<InputError>,
}

impl Errors<'_> {
    fn push(&mut self, suffix: &str, message: impl Into<String>) {
        self.out.push(InputError {
            pointer: format!("{}{suffix}", self.base),
            message: message.into(),
        });
    }
}

/// Closest accepted name to an unknown one, as the canonical id.
pub fn suggest(name: &str) -> Option<&'static str> {
    let key = name.trim().to_ascii_lowercase();
    known_names()
        .map(|(known, id)| (strsim::levenshtein(&key, known), id))
        .filter(|&(d, _)| d <= 2.max(key.len() / 3))
        .min_by_key(|&(d, id)| (d, id))
        .map(|(_, id)| id.name())
}

fn unknown_score_message(name: &str) -> String {
    match suggest(name) {
        Some(s) => format!("unknown score name {name:?}; did you mean {s:?}?"),
        None => format!("unknown score name {name:?}"),
    }
}

fn parse_positive(text: &str, what: &str) -> Result<Rational, String> {
    let v = parse_decimal(text).map_err(|e| e.to_string())?;
    if v.is_positive() {
        Ok(v)
    } else {
        Err(format!("{what} must be positive (got {text})"))
    }
}

fn uncertainty(written: &Decimal, eps: &Option<Rational>, mode: EpsMode) -> Rational {
    match eps {
        Some(e) => e.clone(),
        None => written.implied_uncertainty(mode == EpsMode::Round),
    }
}

fn params(spec: &ProblemSpec, errs: &mut Errors) -> ScoreParams {
    let Some(p) = &spec.params else {
        return ScoreParams::default();
    };
    let mut beta = |text: &Option<String>, key: &str| match text {
        None => Rational::one(),
        Some(t) => parse_positive(t, key).unwrap_or_else(|m| {
            errs.push(&format!("/params/{key}"), m);
            Rational::one()
        }),
    };
    let plus = beta(&p.beta_plus, "beta_plus");
    let minus = beta(&p.beta_minus, "beta_minus");
    ScoreParams::new(plus, minus).unwrap_or_default()
}

fn scores(
    spec: &ProblemSpec,
    params: &ScoreParams,
    eps: &Option<Rational>,
    mode: EpsMode,
    errs: &mut Errors,
) -> Vec<ReportedScore> {
    if spec.scores.is_empty() {
        errs.push("/scores", "at least one score is required");
    }
    let mut seen: BTreeMap<ScoreId, &str> = BTreeMap::new();
    let mut out = Vec::new();
    for (name, text) in &spec.scores {
        let at = format!("/scores/{}", escape_token(name));
        let Some(resolved) = resolve_name(name) else {
            errs.push(&at, unknown_score_message(name));
            continue;
        };
        if let Some(first) = seen.insert(resolved.id, name) {
            errs.push(&at, format!("{name:?} is the same score as {first:?}"));
            continue;
        }
        if resolved.unit_beta {
            let (beta, key) = match resolved.id {
                ScoreId::Fbn => (params.beta_minus(), "beta_minus"),
                _ => (params.beta_plus(), "beta_plus"),
            };
            if !beta.is_one() {
                errs.push(
                    &at,
                    format!("{name:?} means beta = 1, but params.{key} is {beta}"),
                );
                continue;
            }
        }
        match text.parse::<Decimal>() {
            Ok(d) => {
                let u = uncertainty(&d, eps, mode);
                out.push(ReportedScore::new(resolved.id, d.value, u));
            }
            Err(e) => errs.push(&at, e.to_string()),
        }
    }
    out
}

fn extremes(
    spec: &ProblemSpec,
    eps: &Option<Rational>,
    mode: EpsMode,
    errs: &mut Errors,
) -> Vec<FoldExtremes> {
    let Some(map) = &spec.fold_score_extremes else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for (name, ExtremesSpec { min, max }) in map {
        let at = format!("/fold_score_extremes/{}", escape_token(name));
        let Some(resolved) = resolve_name(name) else {
            errs.push(&at, unknown_score_message(name));
            continue;
        };
        let parsed = |text: &str, key: &str, errs: &mut Errors| match text.parse::<Decimal>() {
            Ok(d) => Some(d),
            Err(e) => {
                errs.push(&format!("{at}/{key}"), e.to_string());
                None
            }
        };
        let (Some(lo), Some(hi)) = (parsed(min, "min", errs), parsed(max, "max", errs)) else {
            continue;
        };
        if lo.value > hi.value {
            errs.push(&at, format!("min {min} exceeds max {max}"));
            continue;
        }
        let written = if lo.places >= hi.places { &lo } else { &hi };
        let u = uncertainty(written, eps, mode);
        out.push(FoldExtremes {
            score: ReportedScore::new(resolved.id, lo.value.clone(), u),
            min: lo.value,
            max: hi.value,
        });
    }
    out
}

fn fold_configuration(folds: &[Counts], at: &str, errs: &mut Errors) -> Option<FoldConfiguration> {
    if folds.is_empty() {
        errs.push(at, "at least one fold is required");
        return None;
    }
    let mut ok = true;
    for (i, f) in folds.iter().enumerate() {
        if f.p + f.n == 0 {
            errs.push(
                &format!("{at}/{i}"),
                "a fold must contain at least one sample",
            );
            ok = false;
        }
    }
    ok.then(|| FoldConfiguration::new(folds.iter().map(|f| Fold::new(f.p, f.n)).collect()))
}

fn fold_error_pointer(e: &FoldError) -> &'static str {
    match e {
        FoldError::TooFewFolds(_) => "/folding/k",
        FoldError::NoRepeats => "/folding/repeats",
        FoldError::FoldTotals { .. } => "/folding",
        _ => "",
    }
}

/// The datasets of a problem as `(p, n, explicit folds, pointer)`.
type RawDataset<'a> = (u64, u64, Option<&'a [Counts]>, String);

fn raw_datasets<'a>(spec: &'a ProblemSpec, errs: &mut Errors) -> Vec<RawDataset<'a>> {
    match (&spec.testset, &spec.datasets) {
        (Some(t), None) => vec![(t.p, t.n, None, "/testset".into())],
        (None, Some(ds)) => {
            if ds.is_empty() {
                errs.push("/datasets", "at least one dataset is required");
            }
            ds.iter()
                .enumerate()
                .map(|(i, d)| (d.p, d.n, d.folds.as_deref(), format!("/datasets/{i}")))
                .collect()
        }
        _ => {
            errs.push("", "exactly one of testset and datasets is required");
            Vec::new()
        }
    }
}

fn experiment(spec: &ProblemSpec, errs: &mut Errors) -> Option<ExperimentSpec> {
    let raw = raw_datasets(spec, errs);
    if raw.is_empty() {
        return None;
    }
    for (p, n, _, at) in &raw {
        if *p == 0 || *n == 0 {
            errs.push(at, format!("both classes must be present (p={p}, n={n})"));
            return None;
        }
    }
    let Some(folding) = &spec.folding else {
        // Each dataset is evaluated as a whole.
        for (_, _, folds, at) in &raw {
            if folds.is_some() {
                errs.push(&format!("{at}/folds"), "folds require a folding section");
            }
        }
        let datasets = raw
            .iter()
            .map(|&(p, n, _, _)| Dataset {
                p,
                n,
                folding: Folding::Explicit(FoldConfiguration::new(vec![Fold::new(p, n)])),
            })
            .collect();
        return Some(ExperimentSpec {
            datasets,
            k: 1,
            repeats: 1,
        });
    };
    let repeats = folding.repeats.unwrap_or(1);
    if repeats == 0 {
        errs.push("/folding/repeats", "repeats must be at least 1");
        return None;
    }
    let mut datasets = Vec::with_capacity(raw.len());
    let k = match folding.strategy {
        Strategy::Explicit => {
            if folding.folds.is_some() && raw.len() > 1 {
                errs.push(
                    "/folding/folds",
                    "with several datasets, give each dataset its own folds",
                );
                return None;
            }
            let mut k = None;
            for (p, n, own, at) in &raw {
                let (folds, fat) = match (own, &folding.folds) {
                    (Some(f), None) => (*f, format!("{at}/folds")),
                    (None, Some(f)) => (f.as_slice(), "/folding/folds".to_string()),
                    (Some(_), Some(_)) => {
                        errs.push("/folding/folds", "folds are given twice");
                        return None;
                    }
                    (None, None) => {
                        errs.push(at, "explicit folding requires the fold composition");
                        return None;
                    }
                };
                let config = fold_configuration(folds, &fat, errs)?;
                k.get_or_insert(config.len());
                datasets.push(Dataset {
                    p: *p,
                    n: *n,
                    folding: Folding::Explicit(config),
                });
            }
            let k = k.unwrap_or(0);
            if let Some(stated) = folding.k {
                if datasets.iter().any(|d| match &d.folding {
                    Folding::Explicit(c) => c.len() != stated,
                    _ => false,
                }) {
                    errs.push(
                        "/folding/k",
                        format!("k={stated} differs from the number of folds given"),
                    );
                    return None;
                }
            }
            k
        }
        strategy => {
            if folding.folds.is_some() {
                errs.push(
                    "/folding/folds",
                    "folds are only allowed with the explicit strategy",
                );
                return None;
            }
            let Some(k) = folding.k else {
                errs.push(
                    "/folding",
                    "k is required for stratified and unknown folding",
                );
                return None;
            };
            for (p, n, own, at) in &raw {
                if own.is_some() {
                    errs.push(
                        &format!("{at}/folds"),
                        "folds are only allowed with the explicit strategy",
                    );
                    return None;
                }
                datasets.push(Dataset {
                    p: *p,
                    n: *n,
                    folding: match strategy {
                        Strategy::Stratified => Folding::Stratified,
                        _ => Folding::Unknown,
                    },
                });
            }
            k
        }
    };
    let spec = ExperimentSpec {
        datasets,
        k,
        repeats,
    };
    if let Err(e) = spec.validate() {
        errs.push(fold_error_pointer(&e), e.to_string());
        return None;
    }
    Some(spec)
}

fn plan_problem(
    spec: &ProblemSpec,
    cli_mode: Option<EpsMode>,
    errs: &mut Errors,
) -> Option<PlannedProblem> {
    let before = errs.out.len();
    if spec.id.trim().is_empty() {
        errs.push("/id", "id must not be empty");
    }
    let eps = match &spec.eps {
        None => None,
        Some(num) => match parse_positive(&num.to_string(), "eps") {
            Ok(v) => Some(v),
            Err(m) => {
                errs.push("/eps", m);
                None
            }
        },
    };
    let mode = spec.eps_mode.or(cli_mode).unwrap_or(EpsMode::FloorCeil);
    let params = params(spec, errs);
    let scores = scores(spec, &params, &eps, mode, errs);
    let extremes = extremes(spec, &eps, mode, errs);

    let single = spec.folding.is_none() && spec.aggregation.is_none() && spec.datasets.is_none();
    let task = if single {
        if spec.fold_score_extremes.is_some() {
            errs.push(
                "/fold_score_extremes",
                "fold extremes need folds or several datasets",
            );
        }
        let Some(t) = spec.testset else {
            errs.push("", "exactly one of testset and datasets is required");
            return None;
        };
        if t.p == 0 || t.n == 0 {
            errs.push(
                "/testset",
                format!("both classes must be present (p={}, n={})", t.p, t.n),
            );
        }
        Task::Single(SingleProblem::new(t.p, t.n, scores, params))
    } else {
        let experiment = experiment(spec, errs)?;
        let aggregation = match spec.aggregation {
            Some(AggregationName::Mos) => Aggregation::Mos,
            Some(AggregationName::Som) => Aggregation::Som,
            Some(AggregationName::Unknown) | None => Aggregation::Unknown,
        };
        Task::Aggregated(AggregatedProblem {
            spec: experiment,
            scores,
            params,
            aggregation,
            fold_extremes: extremes,
        })
    };
    (errs.out.len() == before).then(|| PlannedProblem {
        id: spec.id.clone(),
        task,
    })
}

/// Plans every problem of the document; fails with all input errors found.
pub fn plan(
    doc: &ProblemDocument,
    cli_mode: Option<EpsMode>,
) -> Result<Vec<PlannedProblem>, Vec<InputError>> {
    let mut errors = Vec::new();
    if doc.schema_version != SCHEMA_VERSION {
        errors.push(InputError {
            pointer: "/schema_version".into(),
            message: format!(
                "unsupported schema version {:?} (expected {SCHEMA_VERSION:?})",
                doc.schema_version
            ),
        });
    }
    if doc.problems.is_empty() {
        errors.push(InputError {
            pointer: "/problems".into(),
            message: "at least one problem is required".into(),
        });
    }
    let mut ids = BTreeSet::new();
    let mut planned = Vec::with_capacity(doc.problems.len());
    for (i, spec) in doc.problems.iter().enumerate() {
        let mut errs = Errors {
            base: format!("/problems/{i}"),
            out: &mut errors,
        };
        if !ids.insert(spec.id.as_str()) {
            errs.push("/id", format!("duplicate id {:?}", spec.id));
        }
        if let Some(p) = plan_problem(spec, cli_mode, &mut errs) {
            planned.push(p);
        }
    }
    if errors.is_empty() {
        Ok(planned)
    } else {
        Err(errors)
    }
}
