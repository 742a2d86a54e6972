//! End-to-end runs of every stage on the generated fixture.

use std::collections::BTreeMap;
use std::path::Path;

use infolab::model_io::ModelKind;
use infolab::pipeline::{parse_regimes, Pipeline};
use infolab::synthetic::{fixture_config, write_pipeline_fixture, FIXTURE_TARGETS};
use infolab::Error;
use infolab_core::corpus::Pos;

fn targets() -> Vec<(String, Pos)> {
    FIXTURE_TARGETS
        .iter()
        .map(|w| (w.to_string(), Pos::Noun))
        .collect()
}

fn run_all(data: &Path, out: &Path) -> Pipeline {
    let paths = write_pipeline_fixture(data, 3, 70).unwrap();
    let p = Pipeline::new(fixture_config(&paths, out), data.to_path_buf())
        .unwrap()
        .with_jobs(2);
    let t = targets();
    p.ingest().unwrap();
    let sets = p.distractors(&t).unwrap();
    assert!(sets.iter().all(|s| s.distractors.len() == 10));
    assert!(
        !sets[0].distractors.contains(&"mooring".to_string()),
        "synonym must be filtered"
    );
    assert!(
        sets.iter()
            .all(|s| !s.distractors.contains(&"tundra".to_string())),
        "rarer word must be filtered"
    );
    p.build_datasets(&t).unwrap();
    let all = [
        ModelKind::BagNgram,
        ModelKind::FeatureLr,
        ModelKind::ContextFfnn,
    ];
    let models = p.train(&t, &all).unwrap();
    assert_eq!(models.len(), 9);
    for m in &models {
        assert!(
            m.accuracy.test > 0.5,
            "{} {} test accuracy {}",
            m.target,
            m.classifier,
            m.accuracy.test
        );
    }
    p.score(&t, ModelKind::BagNgram).unwrap();
    p.baseline(&t).unwrap();
    p.experiment(&t, ModelKind::BagNgram, &parse_regimes("all").unwrap())
        .unwrap();
    let doc = p.report(false).unwrap();
    assert_eq!(doc.rows.len(), 3);
    assert!(doc.frequency_polysemy.is_some());
    p.finish().unwrap();
    p
}

fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path
                    .strip_prefix(dir)
                    .unwrap()
                    .to_string_lossy()
                    .into_owned();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

#[test]
fn two_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let a = run_all(&tmp.path().join("data"), &tmp.path().join("out_a"));
    let b = run_all(&tmp.path().join("data"), &tmp.path().join("out_b"));
    assert_eq!(a.hash, b.hash);
    let (ta, tb) = (tree(&a.out), tree(&b.out));
    assert_eq!(ta.keys().collect::<Vec<_>>(), tb.keys().collect::<Vec<_>>());
    for (name, bytes) in &ta {
        assert!(bytes == &tb[name], "{name} differs between runs");
    }
    assert!(ta.contains_key("models/anchor.noun.context_ffnn.cilm"));
    assert!(ta.contains_key("experiment.tsv"));
    // every file except the manifest itself is recorded in it
    let manifest = a.manifest();
    for name in ta.keys().filter(|n| *n != "manifest.json") {
        assert!(
            manifest.artifacts.contains_key(name),
            "{name} missing from manifest"
        );
    }
}

#[test]
fn report_detects_tampering_and_mixed_configs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let p = run_all(&tmp.path().join("data"), &out);

    let paths = write_pipeline_fixture(&tmp.path().join("data"), 3, 70).unwrap();
    let reseeded = infolab::config::RunConfig {
        seed: 12,
        ..fixture_config(&paths, &out)
    };
    let q = Pipeline::new(reseeded, tmp.path().to_path_buf()).unwrap();
    assert!(matches!(q.report(false), Err(Error::Integrity(_))));
    q.report(true).unwrap();

    let tsv = p.out.join("experiment.tsv");
    let mut bytes = std::fs::read(&tsv).unwrap();
    bytes.push(b'x');
    std::fs::write(&tsv, bytes).unwrap();
    let again = Pipeline::new(fixture_config(&paths, &out), tmp.path().to_path_buf()).unwrap();
    let err = again.report(true).unwrap_err();
    assert!(matches!(err, Error::Integrity(_)), "{err}");
    assert_eq!(err.exit_code() as i32, 3);
}

#[test]
fn stages_out_of_order_name_their_producer() {
    let tmp = tempfile::tempdir().unwrap();
    let paths = write_pipeline_fixture(&tmp.path().join("data"), 3, 70).unwrap();
    let p = Pipeline::new(
        fixture_config(&paths, &tmp.path().join("out")),
        tmp.path().to_path_buf(),
    )
    .unwrap();
    let t = targets();
    let producer = |e: Error| match e {
        Error::MissingArtifact { producer, .. } => producer,
        other => panic!("unexpected {other}"),
    };
    assert_eq!(producer(p.build_datasets(&t).unwrap_err()), "ingest");
    p.ingest().unwrap();
    assert_eq!(producer(p.build_datasets(&t).unwrap_err()), "distractors");
    p.distractors(&t).unwrap();
    p.build_datasets(&t).unwrap();
    assert_eq!(
        producer(p.score(&t, ModelKind::BagNgram).unwrap_err()),
        "train"
    );
    assert_eq!(
        producer(
            p.experiment(&t, ModelKind::BagNgram, &parse_regimes("inf").unwrap())
                .unwrap_err()
        ),
        "score"
    );
    assert_eq!(producer(p.report(false).unwrap_err()), "experiment");
}
