//! The problem document as written on disk.
//!
//! These types mirror the JSON layout one to one; turning them into test
//! problems (name resolution, uncertainty inference, fold layout) happens in
//! [`crate::plan`].

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Number;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDocument {
    pub schema_version: String,
    pub problems: Vec<ProblemSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub testset: Option<Counts>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub datasets: Option<Vec<DatasetSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub folding: Option<FoldingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aggregation: Option<AggregationName>,
    /// Score name to the value as written, e.g. `"0.8290"`.
    pub scores: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<Number>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_mode: Option<EpsMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fold_score_extremes: Option<BTreeMap<String, ExtremesSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ParamsSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Counts {
    pub p: u64,
    pub n: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub p: u64,
    pub n: u64,
    /// Fold composition of this dataset under explicit folding.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub folds: Option<Vec<Counts>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FoldingSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repeats: Option<u64>,
    pub strategy: Strategy,
    /// Fold composition when there is a single test set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub folds: Option<Vec<Counts>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Explicit,
    Stratified,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationName {
    Mos,
    Som,
    Unknown,
}

/// How a reported value's precision translates into an uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum EpsMode {
    /// Half a unit in the last written digit.
    Round,
    /// One unit in the last written digit.
    FloorCeil,
}

impl fmt::Display for EpsMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EpsMode::Round => "round",
            EpsMode::FloorCeil => "floor_ceil",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtremesSpec {
    pub min: String,
    pub max: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_plus: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_minus: Option<String>,
}

/// A parse failure located by JSON pointer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    pub pointer: String,
    pub message: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = if self.pointer.is_empty() {
            "/"
        } else {
            &self.pointer
        };
        write!(f, "{at}: {}", self.message)
    }
}

/// Escapes one JSON pointer reference token.
pub fn escape_token(token: &str) -> String {
    token.replace('~', "~0").replace('/', "~1")
}

fn pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for segment in path.iter() {
        match segment {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } | Segment::Enum { variant: key } => {
                out.push('/');
                out.push_str(&escape_token(key));
            }
            Segment::Unknown => out.push_str("/?"),
        }
    }
    out
}

impl ProblemDocument {
    pub fn parse(text: &str) -> Result<ProblemDocument, SyntaxError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let doc: ProblemDocument =
            serde_path_to_error::deserialize(de).map_err(|e| SyntaxError {
                pointer: pointer(e.path()),
                message: e.inner().to_string(),
            })?;
        Ok(doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents always serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_problem() {
        let doc = ProblemDocument::parse(
            r#"{"schema_version": "1", "problems": [
                {"id": "a", "testset": {"p": 10, "n": 20}, "scores": {"acc": "0.5"}}
            ]}"#,
        )
        .unwrap();
        assert_eq!(doc.problems[0].testset, Some(Counts { p: 10, n: 20 }));
        assert_eq!(doc.problems[0].scores["acc"], "0.5");
    }

    #[test]
    fn errors_carry_pointers() {
        let err = ProblemDocument::parse(
            r#"{"schema_version": "1", "problems": [
                {"id": "a", "testset": {"p": -1, "n": 20}, "scores": {}}
            ]}"#,
        )
        .unwrap_err();
        assert_eq!(err.pointer, "/problems/0/testset/p");

        let err = ProblemDocument::parse(
            r#"{"schema_version": "1", "problems": [{"id": "a", "scores": {}, "color": 1}]}"#,
        )
        .unwrap_err();
        assert_eq!(err.pointer, "/problems/0/color");
        assert!(err.message.contains("color"), "{}", err.message);
    }

    #[test]
    fn eps_keeps_its_written_form() {
        let doc = ProblemDocument::parse(
            r#"{"schema_version": "1", "problems": [
                {"id": "a", "testset": {"p": 1, "n": 1}, "scores": {}, "eps": 0.00010}
            ]}"#,
        )
        .unwrap();
        assert_eq!(doc.problems[0].eps.as_ref().unwrap().to_string(), "0.00010");
    }

    #[test]
    fn pointer_tokens_are_escaped() {
        assert_eq!(escape_token("a/b~c"), "a~1b~0c");
    }
}
