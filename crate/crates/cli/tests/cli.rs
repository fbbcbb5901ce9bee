//! End-to-end runs of the `tastemap` binary on the 50-listener fixture.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/tiny").join(name)
}

fn tastemap(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tastemap"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ok(o: Output) -> Output {
    assert_eq!(code(&o), 0, "stderr: {}", stderr(&o));
    o
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn ingest(out: &Path) {
    ok(tastemap(
        out,
        &[
            "--config",
            path(&fixture("run.toml")),
            "ingest",
            "--events",
            path(&fixture("events.tsv")),
            "--meta",
            path(&fixture("meta.tsv")),
        ],
    ));
}

fn genres(out: &Path) {
    ok(tastemap(
        out,
        &[
            "derive-genres",
            "--events",
            path(&fixture("events.tsv")),
            "--tags",
            path(&fixture("tags.tsv")),
            "--sweep-k",
            "2,4,6",
        ],
    ));
}

#[test]
fn pipeline_runs_and_recovers_the_fixture_plant() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    ingest(out);
    genres(out);
    ok(tastemap(out, &["profiles", "--depths", "1,5,10,30"]));
    ok(tastemap(out, &["experiment", "short-term"]));
    ok(tastemap(out, &["experiment", "regions"]));
    ok(tastemap(out, &["experiment", "ages", "--min-cell-streams", "10"]));
    let score = ok(tastemap(out, &["score", "--truth", path(&fixture("ground_truth.json"))]));
    let report: serde_json::Value = serde_json::from_slice(&score.stdout).unwrap();
    assert_eq!(report["genre_ami"], 1.0);
    assert_eq!(report["short_term"]["recall"], 1.0);
    assert_eq!(report["long_term"]["precision"], 1.0);

    for f in [
        "ingest/aggregates.jsonl",
        "ingest/manifest.json",
        "genres/taxonomy.json",
        "genres/tree.nwk",
        "genres/sweep.csv",
        "profiles/listeners.csv",
        "profiles/rarefaction.csv",
        "experiments/short_term.json",
        "experiments/short_term_pairs.csv",
        "experiments/regions_z.csv",
        "experiments/age_matrix.csv",
        "experiments/manifest_ages.json",
        "score/recovery.json",
    ] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("genres/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "derive-genres");
    assert!(manifest["inputs"].as_array().unwrap().iter().any(|d| d["path"].as_str().unwrap().ends_with("events.tsv")));
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 3);
}

#[test]
fn too_few_long_term_pairs_is_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    ingest(out);
    genres(out);
    ok(tastemap(out, &["profiles", "--depths", "1,5"]));
    let o = tastemap(out, &["experiment", "long-term"]);
    assert_eq!(code(&o), 4, "stderr: {}", stderr(&o));
    assert!(stderr(&o).contains("insufficient data"));
}

#[test]
fn missing_inputs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let o = tastemap(out, &["ingest", "--events", "no/such.tsv", "--meta", path(&fixture("meta.tsv"))]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("no/such.tsv"));
    let o = tastemap(out, &["profiles"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("derive-genres"), "{}", stderr(&o));
}

#[test]
fn experiment_without_taxonomy_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    ingest(out);
    for e in ["short-term", "long-term", "regions"] {
        let o = tastemap(out, &["experiment", e]);
        assert_eq!(code(&o), 2, "{e}: {}", stderr(&o));
        assert!(stderr(&o).contains("taxonomy.json"));
    }
}

#[test]
fn bad_config_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("run.toml")).unwrap().replace("2017-05-31", "2017-02-01");
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, text).unwrap();
    let o = tastemap(
        dir.path(),
        &[
            "--config",
            path(&cfg),
            "ingest",
            "--events",
            path(&fixture("events.tsv")),
            "--meta",
            path(&fixture("meta.tsv")),
        ],
    );
    assert_eq!(code(&o), 3, "{}", stderr(&o));

    let cfg = dir.path().join("unknown.toml");
    std::fs::write(&cfg, "seed = 1\nno_such_key = 2\n").unwrap();
    let o = tastemap(dir.path(), &["--config", path(&cfg), "synth"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn too_many_genres_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    ingest(out);
    let text = std::fs::read_to_string(fixture("run.toml")).unwrap().replace("k = 4", "k = 500");
    let cfg = out.join("k.toml");
    std::fs::write(&cfg, text).unwrap();
    let o = tastemap(out, &["--config", path(&cfg), "derive-genres", "--events", path(&fixture("events.tsv"))]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&tastemap(dir.path(), &["ingest"])), 2);
    assert_eq!(code(&tastemap(dir.path(), &["frobnicate"])), 2);
    assert_eq!(code(&tastemap(dir.path(), &["--help"])), 0);
}

#[test]
fn dump_config_applies_the_seed_override() {
    let dir = tempfile::tempdir().unwrap();
    let o = ok(tastemap(dir.path(), &["--config", path(&fixture("synth.toml")), "--seed", "42", "--dump-config", "synth"]));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("seed = 42\n"), "{text}");
    assert!(text.contains("listeners_per_region = 10"));
    assert!(!dir.path().join("events.tsv").exists());
}

#[test]
fn synth_reproduces_the_committed_fixture() {
    let dir = tempfile::tempdir().unwrap();
    ok(tastemap(dir.path(), &["--config", path(&fixture("synth.toml")), "synth"]));
    for f in ["events.tsv", "meta.tsv", "tags.tsv", "ground_truth.json", "run.toml"] {
        assert_eq!(
            std::fs::read(dir.path().join(f)).unwrap(),
            std::fs::read(fixture(f)).unwrap(),
            "{f} differs"
        );
    }
}

#[test]
fn scoring_against_another_seed_is_an_id_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let other = dir.path().join("other");
    ok(tastemap(&other, &["--config", path(&fixture("synth.toml")), "--seed", "8", "synth"]));
    let out = dir.path().join("run");
    ingest(&out);
    let o = tastemap(&out, &["score", "--truth", path(&other.join("ground_truth.json"))]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    assert!(stderr(&o).contains("not in the ground truth"), "{}", stderr(&o));
}
