//! Fold structures of k-fold cross-validation: stratified inference,
//! enumeration of every admissible configuration, and experiment expansion.

mod partitions;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::scores::ScoreId;
pub use partitions::{count_partitions, partitions};

/// Default budget on the number of candidate fold bundles before a
/// blowup warning is raised.
pub const DEFAULT_CONFIG_BUDGET: u128 = 10_000_000;

/// Class composition of one evaluation set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fold {
    pub p: u64,
    pub n: u64,
}

impl Fold {
    pub fn new(p: u64, n: u64) -> Self {
        Fold { p, n }
    }
}

/// A multiset of folds, kept sorted so equal multisets compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FoldConfiguration {
    folds: Vec<Fold>,
}

impl FoldConfiguration {
    pub fn new(mut folds: Vec<Fold>) -> Self {
        folds.sort_unstable();
        FoldConfiguration { folds }
    }

    pub fn folds(&self) -> &[Fold] {
        &self.folds
    }

    pub fn len(&self) -> usize {
        self.folds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.folds.is_empty()
    }

    pub fn total_p(&self) -> u64 {
        self.folds.iter().map(|f| f.p).sum()
    }

    pub fn total_n(&self) -> u64 {
        self.folds.iter().map(|f| f.n).sum()
    }

    /// Whether this is a valid k-fold split of `(p, n)`: totals match, fold
    /// sizes differ by at most one, and each class appears in two folds.
    pub fn is_admissible(&self, p: u64, n: u64, k: usize) -> bool {
        if self.len() != k || k == 0 || self.total_p() != p || self.total_n() != n {
            return false;
        }
        let small = (p + n) / k as u64;
        self.folds
            .iter()
            .all(|f| f.p + f.n == small || f.p + f.n == small + 1)
            && self.folds.iter().filter(|f| f.p >= 1).count() >= 2
            && self.folds.iter().filter(|f| f.n >= 1).count() >= 2
    }

    pub fn satisfies(&self, pruning: Pruning) -> bool {
        (!pruning.positives_in_every_fold || self.folds.iter().all(|f| f.p >= 1))
            && (!pruning.negatives_in_every_fold || self.folds.iter().all(|f| f.n >= 1))
    }
}

impl fmt::Display for FoldConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, fold) in self.folds.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "({}, {})", fold.p, fold.n)?;
        }
        f.write_str("]")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FoldError {
    #[error("k must be at least 2 (got {0})")]
    TooFewFolds(usize),
    #[error("{total} samples cannot fill {k} folds")]
    TooFewSamples { total: u64, k: usize },
    #[error("class sizes must be positive (p={p}, n={n})")]
    EmptyClass { p: u64, n: u64 },
    #[error("repetitions must be at least 1")]
    NoRepeats,
    #[error("explicit folds sum to ({got_p}, {got_n}) but the dataset has ({p}, {n})")]
    FoldTotals {
        p: u64,
        n: u64,
        got_p: u64,
        got_n: u64,
    },
    #[error("no datasets given")]
    NoDatasets,
}

/// The fold structure stratified k-fold splitting produces: class counts
/// per fold differ by at most one.
pub fn stratified_configuration(p: u64, n: u64, k: usize) -> Result<FoldConfiguration, FoldError> {
    if k < 2 {
        return Err(FoldError::TooFewFolds(k));
    }
    if p + n < k as u64 {
        return Err(FoldError::TooFewSamples { total: p + n, k });
    }
    let kk = k as u64;
    let (pd, pm) = (p / kk, p % kk);
    let (nd, nm) = (n / kk, n % kk);
    let rows: [(u64, Fold); 3] = if pm + nm > kk {
        [
            (pm + nm - kk, Fold::new(pd + 1, nd + 1)),
            (kk - nm, Fold::new(pd + 1, nd)),
            (kk - pm, Fold::new(pd, nd + 1)),
        ]
    } else {
        [
            (kk - pm - nm, Fold::new(pd, nd)),
            (pm, Fold::new(pd + 1, nd)),
            (nm, Fold::new(pd, nd + 1)),
        ]
    };
    let folds = rows
        .into_iter()
        .flat_map(|(count, fold)| std::iter::repeat_n(fold, count as usize))
        .collect();
    Ok(FoldConfiguration::new(folds))
}

/// Extra structure some reported scores impose on every fold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pruning {
    /// Each fold has a positive (sensitivity must be defined per fold).
    pub positives_in_every_fold: bool,
    /// Each fold has a negative (specificity must be defined per fold).
    pub negatives_in_every_fold: bool,
}

impl Pruning {
    pub const NONE: Pruning = Pruning {
        positives_in_every_fold: false,
        negatives_in_every_fold: false,
    };

    /// The pruning implied by averaging the given scores over folds.
    pub fn for_scores(ids: impl IntoIterator<Item = ScoreId>) -> Self {
        let mut out = Pruning::default();
        for id in ids {
            match id {
                ScoreId::Sens => out.positives_in_every_fold = true,
                ScoreId::Spec => out.negatives_in_every_fold = true,
                ScoreId::Bacc => {
                    out.positives_in_every_fold = true;
                    out.negatives_in_every_fold = true;
                }
                _ => {}
            }
        }
        out
    }
}

/// Sizes of the two fold groups of a k-fold split.
#[derive(Debug, Clone, Copy)]
struct Layout {
    /// Number of folds of size `size_a` (the larger ones).
    count_a: usize,
    size_a: u64,
    count_b: usize,
    size_b: u64,
}

fn layout(p: u64, n: u64, k: usize) -> Layout {
    let total = p + n;
    let kk = k as u64;
    Layout {
        count_a: (total % kk) as usize,
        size_a: total / kk + 1,
        count_b: k - (total % kk) as usize,
        size_b: total / kk,
    }
}

fn enumerable(p: u64, n: u64, k: usize) -> bool {
    k >= 2 && p >= 2 && n >= 2 && p + n >= k as u64
}

/// Every admissible fold configuration of `(p, n)` into `k` folds, each
/// exactly once.
///
/// The larger folds (those of size `(p+n)/k + 1`) take `p_a` positives in
/// total; `p_a` runs from its largest feasible value downwards, and for each
/// value the partitions of `p_a` over the larger folds are crossed with the
/// partitions of `p - p_a` over the smaller ones. The stream is empty unless
/// `k >= 2`, `p >= 2`, `n >= 2` and `p + n >= k`.
pub fn enumerate_configurations(
    p: u64,
    n: u64,
    k: usize,
) -> impl Iterator<Item = FoldConfiguration> + Send {
    enumerate_pruned(p, n, k, Pruning::NONE)
}

/// [`enumerate_configurations`] restricted to configurations satisfying
/// `pruning`; pruned configurations are skipped during generation.
pub fn enumerate_pruned(
    p: u64,
    n: u64,
    k: usize,
    pruning: Pruning,
) -> impl Iterator<Item = FoldConfiguration> + Send {
    let ok = enumerable(p, n, k);
    let lay = if ok {
        layout(p, n, k)
    } else {
        Layout {
            count_a: 0,
            size_a: 0,
            count_b: 0,
            size_b: 0,
        }
    };
    // Positives per fold must leave room for a negative if required.
    let cap = |size: u64| {
        if pruning.negatives_in_every_fold {
            size.saturating_sub(1)
        } else {
            size
        }
    };
    let (cap_a, cap_b) = (cap(lay.size_a), cap(lay.size_b));
    let max_a = p.min(lay.count_a as u64 * cap_a);
    let min_a = p.saturating_sub(lay.count_b as u64 * cap_b);
    let range: Box<dyn Iterator<Item = u64> + Send> = if ok && min_a <= max_a {
        Box::new((min_a..=max_a).rev())
    } else {
        Box::new(std::iter::empty())
    };
    range.flat_map(move |pa| {
        let group_b: Arc<Vec<Vec<u64>>> =
            Arc::new(group_partitions(p - pa, lay.count_b, cap_b, pruning).collect());
        group_partitions(pa, lay.count_a, cap_a, pruning).flat_map(move |a_parts| {
            let group_b = Arc::clone(&group_b);
            (0..group_b.len()).filter_map(move |i| {
                let folds: Vec<Fold> = a_parts
                    .iter()
                    .map(|&pi| Fold::new(pi, lay.size_a - pi))
                    .chain(group_b[i].iter().map(|&pi| Fold::new(pi, lay.size_b - pi)))
                    .collect();
                let with_p = folds.iter().filter(|f| f.p >= 1).count();
                let with_n = folds.iter().filter(|f| f.n >= 1).count();
                (with_p >= 2 && with_n >= 2).then(|| FoldConfiguration::new(folds))
            })
        })
    })
}

/// Partitions of `q` over `m` folds with at most `cap` positives each,
/// skipping zero parts when every fold needs a positive.
fn group_partitions(
    q: u64,
    m: usize,
    cap: u64,
    pruning: Pruning,
) -> Box<dyn Iterator<Item = Vec<u64>> + Send> {
    if pruning.positives_in_every_fold {
        let m64 = m as u64;
        if m == 0 {
            return if q == 0 {
                Box::new(std::iter::once(Vec::new()))
            } else {
                Box::new(std::iter::empty())
            };
        }
        if q < m64 || cap == 0 {
            return Box::new(std::iter::empty());
        }
        // Give every fold one positive up front, partition the rest.
        Box::new(
            partitions(q - m64, m, cap - 1).map(|parts| parts.into_iter().map(|x| x + 1).collect()),
        )
    } else {
        Box::new(partitions(q, m, cap))
    }
}

/// Configuration counts without and with score-implied pruning.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConfigurationCount {
    pub raw: u64,
    pub pruned: u64,
}

pub fn count_configurations(p: u64, n: u64, k: usize, pruning: Pruning) -> ConfigurationCount {
    let mut raw = 0;
    let mut pruned = 0;
    for c in enumerate_configurations(p, n, k) {
        raw += 1;
        if c.satisfies(pruning) {
            pruned += 1;
        }
    }
    ConfigurationCount { raw, pruned }
}

/// Upper bound on the number of configurations, from partition counts alone.
pub fn estimate_configurations(p: u64, n: u64, k: usize) -> u128 {
    if !enumerable(p, n, k) {
        return 0;
    }
    let lay = layout(p, n, k);
    let max_a = p.min(lay.count_a as u64 * lay.size_a);
    let min_a = p.saturating_sub(lay.count_b as u64 * lay.size_b);
    (min_a..=max_a)
        .map(|pa| {
            count_partitions(pa, lay.count_a as u64, lay.size_a).saturating_mul(count_partitions(
                p - pa,
                lay.count_b as u64,
                lay.size_b,
            ))
        })
        .fold(0u128, u128::saturating_add)
}

/// How the folds of a dataset are known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Folding {
    /// The fold composition was reported.
    Explicit(FoldConfiguration),
    /// Stratified splitting into `k` folds.
    Stratified,
    /// Any admissible split into `k` folds.
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub p: u64,
    pub n: u64,
    pub folding: Folding,
}

/// A cross-validation experiment over one or more datasets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentSpec {
    pub datasets: Vec<Dataset>,
    /// Folds per dataset for stratified or unknown folding.
    pub k: usize,
    /// Number of repetitions of the whole k-fold procedure.
    pub repeats: u64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), FoldError> {
        if self.datasets.is_empty() {
            return Err(FoldError::NoDatasets);
        }
        if self.repeats == 0 {
            return Err(FoldError::NoRepeats);
        }
        for d in &self.datasets {
            if d.p == 0 || d.n == 0 {
                return Err(FoldError::EmptyClass { p: d.p, n: d.n });
            }
            match &d.folding {
                Folding::Explicit(c) => {
                    if c.total_p() != d.p || c.total_n() != d.n {
                        return Err(FoldError::FoldTotals {
                            p: d.p,
                            n: d.n,
                            got_p: c.total_p(),
                            got_n: c.total_n(),
                        });
                    }
                }
                Folding::Stratified | Folding::Unknown => {
                    if self.k < 2 {
                        return Err(FoldError::TooFewFolds(self.k));
                    }
                    if d.p + d.n < self.k as u64 {
                        return Err(FoldError::TooFewSamples {
                            total: d.p + d.n,
                            k: self.k,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Totals the score of means is computed from.
    pub fn som_totals(&self) -> (u64, u64) {
        let p: u64 = self.datasets.iter().map(|d| d.p).sum();
        let n: u64 = self.datasets.iter().map(|d| d.n).sum();
        (p * self.repeats, n * self.repeats)
    }
}

/// One candidate assignment of folds to every dataset and repetition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bundle {
    /// Indexed by dataset, then repetition.
    pub parts: Vec<Vec<FoldConfiguration>>,
}

impl Bundle {
    /// All folds in dataset-then-repetition order.
    pub fn folds(&self) -> impl Iterator<Item = Fold> + '_ {
        self.parts
            .iter()
            .flatten()
            .flat_map(|c| c.folds().iter().copied())
    }

    pub fn fold_count(&self) -> usize {
        self.parts
            .iter()
            .flatten()
            .map(FoldConfiguration::len)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExpansionWarning {
    CombinatorialBlowup { estimated: u128, budget: u128 },
}

impl fmt::Display for ExpansionWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExpansionWarning::CombinatorialBlowup { estimated, budget } => write!(
                f,
                "about {estimated} fold configurations to examine, above the budget of {budget}"
            ),
        }
    }
}

/// An experiment reduced to what the two aggregations need.
pub struct Expansion {
    pub som: (u64, u64),
    /// Upper bound on the number of bundles.
    pub estimated_bundles: u128,
    pub warnings: Vec<ExpansionWarning>,
    bundles: Box<dyn Iterator<Item = Bundle> + Send>,
}

impl Expansion {
    /// Candidate bundles for the mean of scores, in a deterministic order.
    pub fn bundles(self) -> Box<dyn Iterator<Item = Bundle> + Send> {
        self.bundles
    }
}

impl fmt::Debug for Expansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Expansion")
            .field("som", &self.som)
            .field("estimated_bundles", &self.estimated_bundles)
            .field("warnings", &self.warnings)
            .finish_non_exhaustive()
    }
}

/// Choices for one dataset: each yields the configurations of all its
/// repetitions.
#[derive(Clone)]
enum Choices {
    Fixed(Vec<FoldConfiguration>),
    /// Single repetition, streamed from the enumerator.
    Stream {
        p: u64,
        n: u64,
        k: usize,
        pruning: Pruning,
    },
    /// Several repetitions: multisets of size `repeats` over `pool`.
    Multisets {
        pool: Arc<Vec<FoldConfiguration>>,
        repeats: usize,
    },
}

impl Choices {
    fn iter(&self) -> Box<dyn Iterator<Item = Vec<FoldConfiguration>> + Send> {
        match self {
            Choices::Fixed(c) => Box::new(std::iter::once(c.clone())),
            Choices::Stream { p, n, k, pruning } => {
                Box::new(enumerate_pruned(*p, *n, *k, *pruning).map(|c| vec![c]))
            }
            Choices::Multisets { pool, repeats } => {
                let pool = Arc::clone(pool);
                Box::new(
                    MultisetIndices::new(pool.len(), *repeats)
                        .map(move |idx| idx.into_iter().map(|i| pool[i].clone()).collect()),
                )
            }
        }
    }
}

/// Nondecreasing index tuples of length `r` over `0..len`.
struct MultisetIndices {
    len: usize,
    current: Option<Vec<usize>>,
}

impl MultisetIndices {
    fn new(len: usize, r: usize) -> Self {
        MultisetIndices {
            len,
            current: (len > 0).then(|| vec![0; r]),
        }
    }
}

impl Iterator for MultisetIndices {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let cur = self.current.as_mut().expect("checked above");
        match cur.iter().rposition(|&x| x + 1 < self.len) {
            Some(pos) => {
                let v = cur[pos] + 1;
                for x in &mut cur[pos..] {
                    *x = v;
                }
            }
            None => self.current = None,
        }
        Some(out)
    }
}

fn binomial_multiset(len: u128, r: u64) -> u128 {
    // C(len + r - 1, r)
    let mut acc: u128 = 1;
    for i in 0..r as u128 {
        acc = match acc.checked_mul(len + i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Reduces an experiment to its score-of-means totals and a stream of
/// candidate fold bundles for the mean of scores.
pub fn expand_experiment(
    spec: &ExperimentSpec,
    pruning: Pruning,
    budget: u128,
) -> Result<Expansion, FoldError> {
    spec.validate()?;
    let repeats = spec.repeats as usize;
    // A single dataset without repetitions is streamed; otherwise each
    // dataset's configurations are collected so repetitions can be drawn
    // as multisets.
    let stream = spec.datasets.len() == 1 && repeats == 1;
    let mut estimated: u128 = 1;
    for d in &spec.datasets {
        if d.folding == Folding::Unknown {
            let est = estimate_configurations(d.p, d.n, spec.k);
            estimated = estimated.saturating_mul(binomial_multiset(est, spec.repeats));
        }
    }
    let mut choices = Vec::with_capacity(spec.datasets.len());
    for d in &spec.datasets {
        let choice = match &d.folding {
            Folding::Explicit(c) => Choices::Fixed(vec![c.clone(); repeats]),
            Folding::Stratified => {
                Choices::Fixed(vec![stratified_configuration(d.p, d.n, spec.k)?; repeats])
            }
            Folding::Unknown if stream => Choices::Stream {
                p: d.p,
                n: d.n,
                k: spec.k,
                pruning,
            },
            Folding::Unknown => Choices::Multisets {
                pool: Arc::new(enumerate_pruned(d.p, d.n, spec.k, pruning).collect()),
                repeats,
            },
        };
        choices.push(choice);
    }
    let mut warnings = Vec::new();
    if estimated > budget {
        warnings.push(ExpansionWarning::CombinatorialBlowup { estimated, budget });
    }
    Ok(Expansion {
        som: spec.som_totals(),
        estimated_bundles: estimated,
        warnings,
        bundles: Box::new(CartesianBundles::new(choices)),
    })
}

/// Lazy Cartesian product over per-dataset choices, first dataset slowest.
struct CartesianBundles {
    choices: Vec<Choices>,
    iters: Vec<Box<dyn Iterator<Item = Vec<FoldConfiguration>> + Send>>,
    current: Vec<Vec<FoldConfiguration>>,
    done: bool,
}

impl CartesianBundles {
    fn new(choices: Vec<Choices>) -> Self {
        let mut iters = Vec::with_capacity(choices.len());
        let mut current = Vec::with_capacity(choices.len());
        let mut done = false;
        for c in &choices {
            let mut it = c.iter();
            match it.next() {
                Some(first) => current.push(first),
                None => done = true,
            }
            iters.push(it);
        }
        CartesianBundles {
            choices,
            iters,
            current,
            done,
        }
    }

    fn step(&mut self) {
        for i in (0..self.choices.len()).rev() {
            if let Some(next) = self.iters[i].next() {
                self.current[i] = next;
                return;
            }
            // Restart this position and carry into the previous one.
            let mut fresh = self.choices[i].iter();
            self.current[i] = fresh.next().expect("nonempty on first pass");
            self.iters[i] = fresh;
        }
        self.done = true;
    }
}

impl Iterator for CartesianBundles {
    type Item = Bundle;

    fn next(&mut self) -> Option<Bundle> {
        if self.done {
            return None;
        }
        let out = Bundle {
            parts: self.current.clone(),
        };
        self.step();
        Some(out)
    }
}
