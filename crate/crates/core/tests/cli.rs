use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mcinfer::ingest::{
    read_records, write_dataset, write_records, PredictionRecord, RelationProbs, RelationRecord, ScoreRecord,
};
use mcinfer::model::{Choice, Dataset, Paragraph, Question};
use tempfile::TempDir;

fn mcinfer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcinfer"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// One question with two choices; the first entails the second.
struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new(golds: [bool; 2], p_true: [f64; 2], probs: RelationProbs) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let dataset = Dataset {
            paragraphs: vec![Paragraph {
                id: "p1".into(),
                text: "The storm closed the road, so the bus was late.".into(),
            }],
            questions: vec![Question {
                id: "q1".into(),
                paragraph_id: "p1".into(),
                text: "Why was the bus late?".into(),
            }],
            choices: ["c1", "c2"]
                .iter()
                .zip(golds)
                .map(|(id, gold)| Choice {
                    id: id.to_string(),
                    question_id: "q1".into(),
                    text: format!("answer {id}"),
                    gold: Some(gold),
                })
                .collect(),
        };
        write_dataset(&dataset, dir.path().join("dataset.json")).unwrap();
        let scores: Vec<ScoreRecord> = ["c1", "c2"]
            .iter()
            .zip(p_true)
            .map(|(id, p)| ScoreRecord {
                choice_id: id.to_string(),
                p_true: p,
            })
            .collect();
        write_records(&scores, dir.path().join("scores.jsonl")).unwrap();
        let relation = RelationRecord {
            group_id: "q1".into(),
            src: "c1".into(),
            dst: "c2".into(),
            probs,
        };
        write_records(&[relation], dir.path().join("relations.jsonl")).unwrap();
        Fixture { dir }
    }

    fn entailment() -> Self {
        Fixture::new([true, true], [0.9, 0.4], RelationProbs::new(0.8, 0.1, 0.1))
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn infer(&self, extra: &[&str]) -> Output {
        let (d, s, r, o) = (self.path("dataset.json"), self.path("scores.jsonl"), self.path("relations.jsonl"), self.path("predictions.jsonl"));
        let mut args = vec![
            "infer", "--dataset", p(&d), "--scores", p(&s), "--relations", p(&r), "--out", p(&o),
        ];
        args.extend_from_slice(extra);
        mcinfer(&args)
    }
}

#[test]
fn infer_flips_entailed_choice() {
    let f = Fixture::entailment();
    let out = f.infer(&["--mode", "within-question", "--constraint", "soft", "--lambda", "1.0", "--tau", "0.5"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let predictions = read_records::<PredictionRecord>(f.path("predictions.jsonl")).unwrap().records;
    let labels: Vec<(&str, bool)> = predictions.iter().map(|r| (r.choice_id.as_str(), r.label)).collect();
    assert_eq!(labels, [("c1", true), ("c2", true)]);
    assert_eq!(predictions[1].p_true, 0.4);
}

#[test]
fn eval_all_correct() {
    let f = Fixture::entailment();
    assert!(f.infer(&[]).status.success());
    let (d, pr, rep) = (f.path("dataset.json"), f.path("predictions.jsonl"), f.path("report.json"));
    let out = mcinfer(&["eval", "--dataset", p(&d), "--predictions", p(&pr), "--out", p(&rep)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&rep).unwrap()).unwrap();
    assert_eq!(report["em0"], 100.0);
    assert_eq!(report["em1"], 100.0);
    assert_eq!(report["choice_accuracy"], 100.0);
    assert!(report.get("mcnemar").is_none());
}

#[test]
fn eval_compares_two_prediction_files() {
    let f = Fixture::entailment();
    let baseline = vec![
        PredictionRecord { choice_id: "c1".into(), label: true, p_true: 0.9 },
        PredictionRecord { choice_id: "c2".into(), label: false, p_true: 0.4 },
    ];
    write_records(&baseline, f.path("baseline.jsonl")).unwrap();
    assert!(f.infer(&[]).status.success());
    let (d, a, b) = (f.path("dataset.json"), f.path("predictions.jsonl"), f.path("baseline.jsonl"));
    let out = mcinfer(&["eval", "--dataset", p(&d), "--predictions", p(&a), "--predictions-b", p(&b), "--uncorrected"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["mcnemar"]["b"], 1);
    assert_eq!(report["mcnemar"]["c"], 0);
    assert_eq!(report["mcnemar"]["statistic"], 1.0);
    assert_eq!(report["mcnemar"]["corrected"], false);
    assert_eq!(report["em0"], 100.0);
}

#[test]
fn missing_score_exits_two_and_names_choice() {
    let f = Fixture::entailment();
    write_records(
        &[ScoreRecord { choice_id: "c1".into(), p_true: 0.9 }],
        f.path("scores.jsonl"),
    )
    .unwrap();
    let out = f.infer(&[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("'c2'"), "{}", stderr(&out));
    assert!(!f.path("predictions.jsonl").exists());
}

#[test]
fn bad_record_names_file_and_line() {
    let f = Fixture::entailment();
    fs::write(
        f.path("scores.jsonl"),
        "{\"choice_id\": \"c1\", \"p_true\": 0.9}\n{\"choice_id\": \"c2\", \"p_true\": 1.5}\n",
    )
    .unwrap();
    let out = f.infer(&[]);
    assert_eq!(out.status.code(), Some(2));
    let message = stderr(&out);
    assert!(message.contains("scores.jsonl") && message.contains("line 2"), "{message}");
}

#[test]
fn infeasible_with_error_policy_exits_three() {
    // Exactly-one plus hard c1 -> c2 entailment still admits [false, true].
    let f = Fixture::new([true, false], [0.9, 0.2], RelationProbs::new(0.9, 0.05, 0.05));
    let out = f.infer(&["--constraint", "hard", "--exactly-one", "on", "--on-infeasible", "error"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));

    // Mutual entailment forces equal values, which exactly-one forbids.
    fs::write(
        f.path("relations.jsonl"),
        concat!(
            "{\"group_id\": \"q1\", \"src\": \"c1\", \"dst\": \"c2\", \"probs\": {\"entail\": 0.9, \"contradict\": 0.05, \"neutral\": 0.05}}\n",
            "{\"group_id\": \"q1\", \"src\": \"c2\", \"dst\": \"c1\", \"probs\": {\"entail\": 0.9, \"contradict\": 0.05, \"neutral\": 0.05}}\n",
        ),
    )
    .unwrap();
    fs::remove_file(f.path("predictions.jsonl")).unwrap();
    let out = f.infer(&["--constraint", "hard", "--exactly-one", "on", "--on-infeasible", "error"]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("q1"));
    assert!(!f.path("predictions.jsonl").exists());

    let out = f.infer(&["--constraint", "hard", "--exactly-one", "on"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stderr(&out).contains("solved softly"), "{}", stderr(&out));
    let labels: Vec<bool> = read_records::<PredictionRecord>(f.path("predictions.jsonl"))
        .unwrap()
        .records
        .iter()
        .map(|r| r.label)
        .collect();
    assert_eq!(labels, [true, false]);
}

#[test]
fn usage_errors_write_nothing() {
    let f = Fixture::entailment();
    for extra in [&["--lambda", "-1"][..], &["--threads", "zero"], &["--constraint", "firm"]] {
        let out = f.infer(extra);
        assert_eq!(out.status.code(), Some(1), "{extra:?}: {}", stderr(&out));
        assert!(!f.path("predictions.jsonl").exists());
    }
}

#[test]
fn validate_reports_violations() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    fs::write(
        &path,
        r#"{"paragraphs": [{"id": "p", "text": "t", "questions": [{"id": "q", "text": "?", "choices": []}]}]}"#,
    )
    .unwrap();
    let out = mcinfer(&["validate", "--dataset", p(&path)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["valid"], false);
    assert_eq!(report["violations"][0]["kind"], "empty_question");

    let report_path = dir.path().join("report.json");
    let out = mcinfer(&["validate", "--dataset", p(&path), "--strict", "--out", p(&report_path)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!report_path.exists());
}

#[test]
fn baseline_and_selftrain_pipeline() {
    let f = Fixture::entailment();
    let (d, r, l, acc) = (f.path("dataset.json"), f.path("baseline.jsonl"), f.path("labels.jsonl"), f.path("acc.json"));
    let out = mcinfer(&["baseline-relations", "--dataset", p(&d), "--out", p(&r)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let relations = read_records::<RelationRecord>(&r).unwrap().records;
    assert_eq!(relations.len(), 2);

    let out = mcinfer(&["selftrain", "--dataset", p(&d)]);
    assert_eq!(out.status.code(), Some(0));
    let gold_only = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        gold_only,
        "{\"src\": \"c1\", \"dst\": \"c2\", \"label\": \"entailment\"}\n{\"src\": \"c2\", \"dst\": \"c1\", \"label\": \"entailment\"}\n"
    );

    let rel = f.path("relations.jsonl");
    let out = mcinfer(&["selftrain", "--dataset", p(&d), "--relations", p(&rel), "--report", p(&acc)]);
    assert_eq!(out.status.code(), Some(2), "c2 -> c1 is labeled but has no prediction");
    assert!(stderr(&out).contains("c2 -> c1"), "{}", stderr(&out));
    assert!(!acc.exists());

    let both = vec![
        RelationRecord { group_id: "q1".into(), src: "c1".into(), dst: "c2".into(), probs: RelationProbs::new(0.8, 0.1, 0.1) },
        RelationRecord { group_id: "q1".into(), src: "c2".into(), dst: "c1".into(), probs: RelationProbs::new(0.1, 0.1, 0.8) },
    ];
    write_records(&both, &rel).unwrap();
    let out = mcinfer(&["selftrain", "--dataset", p(&d), "--relations", p(&rel), "--report", p(&acc), "--out", p(&l)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(
        fs::read_to_string(&l).unwrap(),
        "{\"src\": \"c1\", \"dst\": \"c2\", \"label\": \"entailment\"}\n"
    );
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&acc).unwrap()).unwrap();
    assert_eq!(report["entail_acc"], 50.0);
    assert_eq!(report["entail_total"], 2);
    assert_eq!(report["defined"], true);
}

#[test]
fn synth_infer_eval_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| -> Vec<Vec<u8>> {
        let root = dir.path().join(name);
        let bundle = root.join("bundle");
        let out = mcinfer(&["synth", "--seed", "11", "--mode", "cross-question", "--out-dir", p(&bundle)]);
        assert!(out.status.success(), "{}", stderr(&out));
        let (d, s, r, pr, rep) = (
            bundle.join("dataset.json"),
            bundle.join("scores.jsonl"),
            bundle.join("relations.jsonl"),
            root.join("p.jsonl"),
            root.join("report.json"),
        );
        let out = mcinfer(&[
            "infer", "--dataset", p(&d), "--scores", p(&s), "--relations", p(&r), "--mode", "cross-question",
            "--threads", threads, "--out", p(&pr),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        let out = mcinfer(&["eval", "--dataset", p(&d), "--predictions", p(&pr), "--out", p(&rep)]);
        assert!(out.status.success(), "{}", stderr(&out));
        [d, s, r, pr, rep].iter().map(|f| fs::read(f).unwrap()).collect()
    };
    let first = run("a", "1");
    assert_eq!(first, run("b", "4"));
    assert_eq!(first, run("c", "auto"));
}

#[test]
fn synth_rejects_bad_config_without_writing() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("synth.json");
    fs::write(&config, r#"{"groups": 3, "questions_per_group": 1, "choices_per_question": 0, "p_true": 0.5, "relation_density": 0.5, "eps": 0.1, "delta": 0.1, "rho": 0.0, "mode": "cross-question", "seed": 1}"#).unwrap();
    let out_dir = dir.path().join("bundle");
    let out = mcinfer(&["synth", "--config", p(&config), "--out-dir", p(&out_dir)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_dir.exists());

    fs::write(&config, r#"{"groups": 3, "colour": "red"}"#).unwrap();
    let out = mcinfer(&["synth", "--config", p(&config), "--out-dir", p(&out_dir)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("colour"), "{}", stderr(&out));
}
