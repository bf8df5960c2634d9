//! The command-line pipeline on a small synthetic dump.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use coldstart_core::synth::{generate, SynthConfig};
use serde_json::json;

fn coldstart(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_coldstart"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs");
    out
}

fn ok(args: &[&str]) -> String {
    let out = coldstart(args);
    assert!(
        out.status.success(),
        "coldstart {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Writes articles.jsonl, edits.tsv and views.tsv for a planted corpus.
fn write_dump(dir: &Path, seed: u64) {
    let planted = generate(
        &SynthConfig {
            n_users: 150,
            n_articles: 200,
            n_terms: 400,
            articles_per_user: (22, 30),
            ..SynthConfig::default()
        },
        seed,
    )
    .unwrap();
    let (articles, edits) = planted.to_records();
    let mut body = String::new();
    for a in &articles {
        let text = a.tokens.join(" ");
        body.push_str(&json!({ "id": a.article_id, "title": a.title, "text": text }).to_string());
        body.push('\n');
    }
    // one malformed line is reported and skipped
    body.push_str("{not json\n");
    fs::write(dir.join("articles.jsonl"), body).unwrap();
    let edits: String = edits
        .iter()
        .map(|e| format!("{}\t{}\t{}\n", e.user_id, e.article_id, e.edit_count))
        .collect();
    fs::write(dir.join("edits.tsv"), edits).unwrap();
    let views: String = planted
        .corpus
        .article_ids
        .iter()
        .zip(&planted.views)
        .map(|(id, v)| format!("{id}\t{v}\n"))
        .collect();
    fs::write(dir.join("views.tsv"), views).unwrap();
}

#[test]
fn full_pipeline_runs_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    write_dump(root, 5);
    let p = |name: &str| root.join(name).to_string_lossy().into_owned();

    let summary = ok(&[
        "preprocess", "--articles", &p("articles.jsonl"), "--edits", &p("edits.tsv"), "--out", &p("corpus"),
        "--min-df", "2", "--max-df", "0.5", "--min-edits", "5", "--views", &p("views.tsv"),
    ]);
    assert!(summary.starts_with("kept 200 articles, 150 users"), "{summary}");
    assert!(root.join("corpus/views.tsv").exists());

    for method in ["content", "collab"] {
        ok(&[
            "build-topics", "--method", method, "--corpus", &p("corpus"), "--k", "8", "--dims", "20", "--seed", "1",
            "--out", &p(&format!("models/{method}")),
        ]);
    }
    ok(&[
        "build-topics", "--method", "joint", "--corpus", &p("corpus"), "--k", "8", "--dims", "20", "--epochs", "5",
        "--batch-size", "512", "--seed", "1", "--out", &p("models/joint"),
    ]);
    for f in ["meta.json", "topics.bin", "latents.bin", "questionnaire.json", "P.bin", "Q.bin", "Qbar.bin", "training.txt"] {
        assert!(root.join("models/joint").join(f).exists(), "missing {f}");
    }
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(root.join("models/joint/questionnaire.json")).unwrap()).unwrap();
    assert_eq!(doc["questions"].as_array().unwrap().len(), 8);

    let levels = ["a-great", "b-slight", "none", "a-moderate", "b-great", "none", "a-slight", "b-moderate"];
    fs::write(root.join("answers.txt"), levels.join("\n") + "\n").unwrap();
    let list = ok(&["recommend", "--model", &p("models/joint"), "--responses", &p("answers.txt"), "--k", "50"]);
    let lines: Vec<&str> = list.lines().collect();
    assert_eq!(lines[0], "# method=q-based fallback=false");
    assert_eq!(lines.len(), 51);
    let diverse = ok(&[
        "recommend", "--model", &p("models/joint"), "--responses", &p("answers.txt"), "--k", "50", "--diversify", "5",
    ]);
    assert_eq!(diverse.lines().count(), 6);

    fs::write(root.join("short.txt"), "a-great\n").unwrap();
    assert!(!coldstart(&["recommend", "--model", &p("models/joint"), "--responses", &p("short.txt")]).status.success());

    ok(&[
        "evaluate", "--corpus", &p("corpus"), "--models", &p("models"), "--k", "50", "--holdout", "20", "--seed", "3",
        "--out", &p("report"),
    ]);
    let recall = fs::read_to_string(root.join("report/recall.tsv")).unwrap();
    let rows: Vec<&str> = recall.lines().collect();
    assert!(rows[0].starts_with("method\tk\tusers\tmean"));
    assert_eq!(rows.len(), 8);
    for method in ["joint", "content", "collab", "collab-nostrat", "edit-pop", "view-pop", "cf"] {
        assert!(rows.iter().any(|r| r.starts_with(&format!("{method}\t50\t"))), "{method} missing");
    }
    let cohesion = fs::read_to_string(root.join("report/cohesion.tsv")).unwrap();
    assert_eq!(cohesion.lines().count(), 4);
    assert!(root.join("report/summary.txt").exists());
}

#[test]
fn bad_inputs_fail_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let missing = root.join("nothing.jsonl").to_string_lossy().into_owned();
    let out = coldstart(&["preprocess", "--articles", &missing, "--edits", &missing, "--out", "x"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nothing.jsonl"));
    let out = coldstart(&["build-topics", "--method", "spectral", "--corpus", "x", "--out", "y"]);
    assert!(!out.status.success());
}
