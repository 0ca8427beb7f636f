//! Shared fixtures for the CLI and acceptance test suites.
// Each test target compiles this module separately and uses different
// subsets of it.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

/// 20-row dataset realizing the hand-counted two-group confusion fixture
/// once scores are binarized at 0.5:
/// m: TP=4 FN=1 FP=1 TN=4, f: TP=2 FN=3 FP=1 TN=4 (DI = 0.6).
/// Carries feature and quasi-identifier columns so every stage can run.
pub fn metrics_fixture_csv() -> String {
    let mut rows = Vec::new();
    let mut push = |n: usize, y: u8, s: f64, g: &str| {
        for _ in 0..n {
            rows.push((y, s, g.to_owned()));
        }
    };
    push(4, 1, 0.9, "m");
    push(1, 1, 0.1, "m");
    push(1, 0, 0.9, "m");
    push(4, 0, 0.1, "m");
    push(2, 1, 0.9, "f");
    push(3, 1, 0.1, "f");
    push(1, 0, 0.9, "f");
    push(4, 0, 0.1, "f");
    let mut text = String::from("y,score,sex,x1,city,zip\n");
    for (i, (y, s, g)) in rows.iter().enumerate() {
        let x1 = (i % 10) as f64 / 10.0;
        let city = if i % 3 == 0 { "madrid" } else { "bilbao" };
        let zip = format!("280{:02}", i % 4);
        text.push_str(&format!("{y},{s},{g},{x1},{city},{zip}\n"));
    }
    text
}

/// 16-row shifted-score dataset: a uniform 0.5 threshold yields a 0.25
/// TPR gap; per-group thresholds reach TPR 1 in both groups.
pub fn shifted_fixture_csv() -> String {
    let mut text = String::from("y,score,grp\n");
    for s in [0.9, 0.8, 0.7, 0.6] {
        text.push_str(&format!("1,{s},a\n"));
    }
    for s in [0.4, 0.3, 0.2, 0.1] {
        text.push_str(&format!("0,{s},a\n"));
    }
    for s in [0.7, 0.6, 0.5, 0.4] {
        text.push_str(&format!("1,{s},b\n"));
    }
    for s in [0.3, 0.25, 0.2, 0.1] {
        text.push_str(&format!("0,{s},b\n"));
    }
    text
}

pub fn metrics_fixture_config(dir: &Path) -> serde_json::Value {
    serde_json::json!({
        "dataset": {"path": "data.csv"},
        "schema": {
            "roles": {
                "y": "label",
                "score": "score",
                "sex": "sensitive",
                "x1": "feature",
                "city": "feature",
                "zip": "quasi_identifier"
            },
            "privileged": {"sex": "m"}
        },
        "surrogate": {"max_depth": 3, "min_leaf": 2},
        "privacy": {"k": 2},
        "output_dir": dir.join("out").display().to_string()
    })
}

pub fn shifted_fixture_config(dir: &Path) -> serde_json::Value {
    serde_json::json!({
        "dataset": {"path": "scores.csv"},
        "schema": {
            "roles": {"y": "label", "score": "score", "grp": "sensitive"},
            "privileged": {"grp": "a"}
        },
        "stages": {
            "metrics": true,
            "proxy": false,
            "privacy": false,
            "explain": false,
            "mitigate": true,
            "assess": false
        },
        "output_dir": dir.join("out").display().to_string()
    })
}

/// All-clear answers for the built-in questionnaire: the opposite of each
/// question's risk answer.
pub fn all_clear_answers() -> serde_json::Value {
    let risk_no = [
        "sensitive-variables",
        "proxy-correlation",
        "dataset-bias",
        "error-impact",
        "error-distribution",
        "human-impersonation",
        "life-impact",
        "understanding-gap",
        "explanation-request",
        "data-purpose-clarity",
        "human-rights",
        "sdg-impact",
        "personal-data",
        "pia-concerns",
        "reidentification-risk",
        "security-concerns",
        "supplier-information",
    ];
    let mut answers = serde_json::Map::new();
    for id in risk_no {
        answers.insert(id.to_owned(), serde_json::json!("no"));
    }
    // Risk answer is "no" for these two; answer yes.
    answers.insert("algorithm-transparency".into(), serde_json::json!("yes"));
    answers.insert("attack-robustness".into(), serde_json::json!("yes"));
    serde_json::json!({"questionnaire_id": "builtin", "answers": answers})
}

pub fn write(dir: &Path, name: &str, content: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, content).unwrap();
    path
}

pub fn cli_binary() -> &'static str {
    env!("CARGO_BIN_EXE_fairaudit")
}

pub fn run_cli(args: &[&str]) -> Output {
    Command::new(cli_binary())
        .args(args)
        .output()
        .expect("cli binary runs")
}

pub fn read_report(dir: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join("out").join("report.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}
