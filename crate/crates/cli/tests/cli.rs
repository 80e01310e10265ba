use std::path::Path;
use std::process::{Command, Output};

fn punctkit(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_punctkit"))
        .args(args)
        .current_dir(cwd)
        .env_remove("PUNCTKIT_JOBS")
        .output()
        .expect("run punctkit")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const SENTENCES: &[&str] = &[
    "امروز هوا خوب است، باید بیرون برویم.",
    "فردا، شاید باران بیاید.",
    "کتاب را خواندی؟ بله، خیلی جالب بود.",
    "او گفت: من می\u{200C}آیم، حتما.",
    "ما رفتیم، آنها ماندند.",
    "قیمت نان، شیر و پنیر بالا رفت.",
];

fn write_corpus(dir: &Path) {
    std::fs::write(dir.join("docs.txt"), SENTENCES.join("\n") + "\n").unwrap();
    std::fs::write(
        dir.join("manifest.toml"),
        "seed = 3\n\n[split]\ntrain = 3\nvalidation = 1\ntest = 1\n\n[[sources]]\nid = \"docs\"\npath = \"docs.txt\"\n",
    )
    .unwrap();
}

#[test]
fn curate_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    write_corpus(dir.path());
    let out = punctkit(&["curate", "--manifest", "manifest.toml", "--out", "out", "--seed", "8"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    for name in ["train.jsonl", "validation.jsonl", "test.jsonl", "split_manifest.json", "filter_audit.jsonl", "run_report.json"] {
        assert!(dir.path().join("out").join(name).exists(), "{name}");
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/run_report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 8);
    assert_eq!(report["conserved"], true);
    assert!(String::from_utf8_lossy(&out.stdout).contains("dedup"));
}

#[test]
fn invalid_manifest_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "seed = \"x\"\n").unwrap();
    let out = punctkit(&["curate", "--manifest", "bad.toml", "--out", "out"], dir.path());
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("INVALID_MANIFEST"), "{}", stderr(&out));
}

#[test]
fn unreadable_source_exits_2_with_id() {
    let dir = tempfile::tempdir().unwrap();
    write_corpus(dir.path());
    std::fs::remove_file(dir.path().join("docs.txt")).unwrap();
    let out = punctkit(&["curate", "--manifest", "manifest.toml", "--out", "out"], dir.path());
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("docs"), "{}", stderr(&out));
}

#[test]
fn stats_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("empty.jsonl"), "").unwrap();
    assert_eq!(code(&punctkit(&["stats", "empty.jsonl"], dir.path())), 3);

    let lines: String = SENTENCES.iter().map(|s| format!("{}\n", serde_json::json!({ "text": s }))).collect();
    std::fs::write(dir.path().join("c.jsonl"), lines).unwrap();
    let out = punctkit(&["stats", "c.jsonl", "--out", "stats"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("stats/stats.json")).unwrap()).unwrap();
    assert_eq!(stats["total_sentences"], 6);
    assert!(dir.path().join("stats/stats.txt").exists());
}

#[test]
fn evaluate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("gold.txt"), "الف، ب.\nج د.\n").unwrap();
    std::fs::write(dir.path().join("short.txt"), "الف، ب.\n").unwrap();
    std::fs::write(dir.path().join("pred.txt"), "الف، ب.\nج، د.\n").unwrap();
    assert_eq!(code(&punctkit(&["evaluate", "gold.txt", "short.txt"], dir.path())), 4);
    let out = punctkit(&["evaluate", "gold.txt", "pred.txt", "--mode", "text", "--out", "eval"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("eval/eval_report.json")).unwrap()).unwrap();
    assert_eq!(report["samples"], 2);
    assert_eq!(report["fsm_matches"], 1);
}

#[test]
fn stage_commands_chain() {
    let dir = tempfile::tempdir().unwrap();
    let doc = format!("{} {}\n{}\n", SENTENCES[0], SENTENCES[1], SENTENCES[0]);
    std::fs::write(dir.path().join("docs.txt"), doc).unwrap();
    let run = |args: &[&str]| {
        let out = punctkit(args, dir.path());
        assert_eq!(code(&out), 0, "{args:?}: {}", stderr(&out));
        out
    };
    run(&["segment", "docs.txt", "--source-id", "d", "--out", "seg.jsonl"]);
    run(&["filter", "seg.jsonl", "--out", "filtered"]);
    run(&["dedup", "filtered/accepted.jsonl", "--out", "unique.jsonl"]);
    run(&["make-labels", "unique.jsonl", "--out", "labels.jsonl"]);
    let seg = std::fs::read_to_string(dir.path().join("seg.jsonl")).unwrap();
    let unique = std::fs::read_to_string(dir.path().join("unique.jsonl")).unwrap();
    let labels = std::fs::read_to_string(dir.path().join("labels.jsonl")).unwrap();
    assert_eq!(seg.lines().count(), 3);
    assert_eq!(unique.lines().count(), 2);
    assert_eq!(labels.lines().count(), 2);
}

#[test]
fn split_rejects_zero_part() {
    let dir = tempfile::tempdir().unwrap();
    let lines: String = SENTENCES.iter().map(|s| format!("{}\n", serde_json::json!({ "text": s }))).collect();
    std::fs::write(dir.path().join("c.jsonl"), lines).unwrap();
    let out = punctkit(&["split", "c.jsonl", "--out", "p", "--train", "4", "--validation", "1", "--test", "0"], dir.path());
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("SPLIT_SIZES"));
    let ok = punctkit(&["split", "c.jsonl", "--out", "p", "--train", "4", "--validation", "1", "--test", "1", "--seed", "5"], dir.path());
    assert_eq!(code(&ok), 0, "{}", stderr(&ok));
}

#[test]
fn normalize_prints_lines() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("in.txt"), "سلام,   دنیا?\n").unwrap();
    let out = punctkit(&["normalize", "in.txt"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "سلام، دنیا؟\n");
}

#[test]
fn train_and_restore() {
    let dir = tempfile::tempdir().unwrap();
    let records: String = SENTENCES
        .iter()
        .map(|s| {
            let sample = punctkit::labeler::extract_labels(s).unwrap();
            format!("{}\n", serde_json::json!({ "words": sample.words, "labels": sample.labels }))
        })
        .collect();
    std::fs::write(dir.path().join("train.labels.jsonl"), records).unwrap();
    let out = punctkit(&["train-baseline", "train.labels.jsonl", "--out", "model.json", "--epochs", "10"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    std::fs::write(dir.path().join("gold.txt"), SENTENCES.join("\n") + "\n").unwrap();
    let out = punctkit(&["restore", "gold.txt", "--model", "model.json", "--strip", "--out", "pred.txt"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let pred = std::fs::read_to_string(dir.path().join("pred.txt")).unwrap();
    assert_eq!(pred.lines().count(), SENTENCES.len());
    for (p, g) in pred.lines().zip(SENTENCES) {
        assert_eq!(punctkit::labeler::strip_punctuation(p), punctkit::labeler::strip_punctuation(g));
    }

    // already punctuated input is refused without --strip
    let out = punctkit(&["restore", "gold.txt", "--model", "model.json"], dir.path());
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("ALREADY_PUNCTUATED"), "{}", stderr(&out));
}

#[test]
fn restore_through_external_command() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("in.txt"), "الف ب\nج د\n").unwrap();
    let out = punctkit(&["restore", "in.txt", "--command", "cat"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "الف ب\nج د\n");
}

#[test]
fn usage_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&punctkit(&["curate"], dir.path())), 1);
    assert_eq!(code(&punctkit(&["--help"], dir.path())), 0);
}
