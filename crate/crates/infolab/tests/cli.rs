//! The `infolab` binary: exit codes, messages and repeatability.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use infolab::synthetic::{fixture_config, write_pipeline_fixture, FixturePaths};

struct Workspace {
    _tmp: tempfile::TempDir,
    root: PathBuf,
    paths: FixturePaths,
    config: PathBuf,
}

fn workspace() -> Workspace {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().to_path_buf();
    let paths = write_pipeline_fixture(&root.join("data"), 3, 70).unwrap();
    let config = root.join("config.json");
    let cfg = fixture_config(&paths, &root.join("out"));
    std::fs::write(&config, serde_json::to_vec_pretty(&cfg).unwrap()).unwrap();
    Workspace {
        _tmp: tmp,
        root,
        paths,
        config,
    }
}

fn infolab(ws: &Workspace, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_infolab"))
        .args(args)
        .arg("--config")
        .arg(&ws.config)
        .env_remove("INFOLAB_DATA_DIR")
        .current_dir(&ws.root)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path_arg(p: &Path) -> String {
    p.display().to_string()
}

#[test]
fn help_and_version_succeed() {
    let ws = workspace();
    assert_eq!(code(&infolab(&ws, &["--help"])), 0);
    assert_eq!(code(&infolab(&ws, &["--version"])), 0);
    assert_eq!(code(&infolab(&ws, &["agreement", "--help"])), 0);
    assert_eq!(code(&infolab(&ws, &["no-such-command"])), 1);
}

#[test]
fn missing_input_is_a_usage_error_naming_the_path() {
    let ws = workspace();
    let missing = ws.root.join("nowhere/corpus.tsv");
    let out = infolab(&ws, &["ingest", "--corpus", &path_arg(&missing)]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
    assert!(
        stderr(&out).contains("nowhere/corpus.tsv"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn missing_artifact_names_the_producer() {
    let ws = workspace();
    let out = infolab(&ws, &["build-dataset", "--target", "anchor"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("infolab ingest"), "{}", stderr(&out));
}

#[test]
fn malformed_corpus_is_a_data_error() {
    let ws = workspace();
    let bad = ws.root.join("bad.tsv");
    std::fs::write(&bad, "the\tthe\tDT\n").unwrap();
    let out = infolab(&ws, &["ingest", "--corpus", &path_arg(&bad)]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    assert!(stderr(&out).contains("line 1"), "{}", stderr(&out));
}

#[test]
fn damaged_arpa_is_an_integrity_error() {
    let ws = workspace();
    let full =
        "\\data\\\nngram 1=3\n\n\\1-grams:\n-0.5\t<s>\t0\n-0.3\ta\t0\n-0.4\t</s>\t0\n\n\\end\\\n";
    let truncated = ws.root.join("truncated.arpa");
    std::fs::write(&truncated, &full[..full.len() - 8]).unwrap();
    let miscounted = ws.root.join("miscounted.arpa");
    std::fs::write(&miscounted, full.replace("ngram 1=3", "ngram 1=4")).unwrap();
    for lm in [&truncated, &miscounted] {
        let out = infolab(&ws, &["ingest", "--lm", &path_arg(lm)]);
        assert_eq!(code(&out), 3, "{}: {}", lm.display(), stderr(&out));
    }
    let good = ws.root.join("good.arpa");
    std::fs::write(&good, full).unwrap();
    assert_eq!(
        code(&infolab(&ws, &["ingest", "--lm", &path_arg(&good)])),
        0
    );
}

#[test]
fn repeated_commands_give_identical_output() {
    let ws = workspace();
    let run = |out_dir: &str| {
        let out = ws.root.join(out_dir);
        let ingest = infolab(&ws, &["ingest", "--out", &path_arg(&out)]);
        assert_eq!(code(&ingest), 0, "{}", stderr(&ingest));
        let d = infolab(
            &ws,
            &[
                "distractors",
                "--target",
                "anchor",
                "--seed",
                "7",
                "--out",
                &path_arg(&out),
            ],
        );
        assert_eq!(code(&d), 0, "{}", stderr(&d));
        (
            std::fs::read(out.join("corpus.tsv")).unwrap(),
            std::fs::read(out.join("lm.arpa")).unwrap(),
            d.stdout,
        )
    };
    let a = run("a");
    let b = run("b");
    assert_eq!(a, b);
    let doc: serde_json::Value = serde_json::from_slice(&a.2).unwrap();
    assert_eq!(doc["seed"], 7);
    assert_eq!(doc["distractors"].as_array().unwrap().len(), 10);
    assert!(!doc["distractors"]
        .as_array()
        .unwrap()
        .iter()
        .any(|d| d == "mooring"));
}

#[test]
fn data_root_env_resolves_relative_inputs() {
    let ws = workspace();
    let mut cfg = fixture_config(&ws.paths, Path::new("out"));
    cfg.inputs.corpus = Some(PathBuf::from(ws.paths.corpus.file_name().unwrap()));
    let config = ws.root.join("relative.json");
    std::fs::write(&config, serde_json::to_vec(&cfg).unwrap()).unwrap();
    let elsewhere = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_infolab"))
        .args(["ingest", "--config"])
        .arg(&config)
        .env("INFOLAB_DATA_DIR", &ws.paths.dir)
        .current_dir(elsewhere.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}
