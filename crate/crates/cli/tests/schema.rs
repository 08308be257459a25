use std::path::PathBuf;

use serde_json::Value;

use scoreforge_cli::document::ProblemDocument;
use scoreforge_cli::plan::plan;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn validator() -> jsonschema::Validator {
    let text = std::fs::read_to_string(root().join("schema/problem.v1.json")).unwrap();
    let schema: Value = serde_json::from_str(&text).unwrap();
    jsonschema::validator_for(&schema).expect("schema compiles")
}

#[test]
fn corpus_conforms_to_schema_and_parser() {
    let validator = validator();
    let mut seen = 0;
    for entry in std::fs::read_dir(root().join("corpus")).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let value: Value = serde_json::from_str(&text).unwrap();
        let errors: Vec<String> = validator
            .iter_errors(&value)
            .map(|e| e.to_string())
            .collect();
        assert!(errors.is_empty(), "{}: {errors:?}", path.display());
        let doc = ProblemDocument::parse(&text).unwrap();
        assert!(plan(&doc, None).is_ok(), "{}", path.display());
        seen += 1;
    }
    assert!(seen >= 7);
}

#[test]
fn schema_and_parser_reject_the_same_shapes() {
    let validator = validator();
    let problem = |body: &str| format!(r#"{{"schema_version": "1", "problems": [{body}]}}"#);
    let rejected = [
        problem(r#"{"id": "a", "testset": {"p": 1, "n": 1}, "scores": {"acc": 0.5}}"#),
        problem(
            r#"{"id": "a", "testset": {"p": 1, "n": 1}, "scores": {"acc": "0.5"}, "extra": 1}"#,
        ),
        problem(r#"{"id": "a", "testset": {"p": -1, "n": 1}, "scores": {"acc": "0.5"}}"#),
        problem(
            r#"{"id": "a", "testset": {"p": 1, "n": 1}, "scores": {"acc": "0.5"}, "aggregation": "avg"}"#,
        ),
        problem(
            r#"{"id": "a", "testset": {"p": 1, "n": 1}, "scores": {"acc": "0.5"}, "eps": "0.1"}"#,
        ),
        problem(
            r#"{"id": "a", "testset": {"p": 1, "n": 1}, "folding": {"k": 2}, "scores": {"acc": "0.5"}}"#,
        ),
        r#"{"problems": []}"#.to_string(),
    ];
    for text in rejected {
        let value: Value = serde_json::from_str(&text).unwrap();
        assert!(!validator.is_valid(&value), "schema accepts {text}");
        assert!(
            ProblemDocument::parse(&text).is_err(),
            "parser accepts {text}"
        );
    }

    // Semantic checks the parser defers to planning are also in the schema.
    let semantic = [
        problem(r#"{"id": "a", "testset": {"p": 1, "n": 1}, "scores": {}}"#),
        problem(r#"{"id": "a", "testset": {"p": 1, "n": 1}, "scores": {"acc": "0.5"}, "eps": -1}"#),
        problem(
            r#"{"id": "a", "testset": {"p": 1, "n": 1}, "datasets": [{"p": 1, "n": 1}], "scores": {"acc": "0.5"}}"#,
        ),
        problem(r#"{"id": "a", "testset": {"p": 1, "n": 1}, "scores": {"acc": "x"}}"#),
        r#"{"schema_version": "2", "problems": []}"#.to_string(),
    ];
    for text in semantic {
        let value: Value = serde_json::from_str(&text).unwrap();
        assert!(!validator.is_valid(&value), "schema accepts {text}");
        let doc = ProblemDocument::parse(&text).unwrap();
        assert!(plan(&doc, None).is_err(), "planner accepts {text}");
    }
}
