use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_creodrift"))
}

fn toy_manifest() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/toy/manifest.toml")
}

fn run(args: &[&str]) -> (i32, String) {
    let out = bin().args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn provenance(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("provenance.json")).unwrap()).unwrap()
}

#[test]
fn toy_user_clusters() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let manifest = toy_manifest();
    for out in [&a, &b] {
        let (code, err) = run(&["user-clusters", "--manifest", manifest.to_str().unwrap(), "--out", out.to_str().unwrap(), "--threads", "2"]);
        assert_eq!(code, 0, "{err}");
    }
    let dm = fs::read_to_string(a.join("distances_dim0.csv")).unwrap();
    assert_eq!(dm.lines().count(), 10);
    assert_eq!(dm.lines().next().unwrap().split(',').count(), 10);
    assert_eq!(fs::read_to_string(a.join("proj_dim0.csv")).unwrap().lines().count(), 10);
    assert!(fs::read_to_string(a.join("proj_dim1.svg")).unwrap().starts_with("<svg"));

    let (pa, pb) = (provenance(&a), provenance(&b));
    assert_eq!(pa["content_digest"], pb["content_digest"]);
    assert_eq!(pa["stages"].as_array().unwrap().len(), 5);
    // every artifact in the output directory is hashed
    let stages = pa["stages"].as_array().unwrap();
    let hashed: Vec<&str> = stages.iter().flat_map(|s| s["outputs"].as_object().unwrap().keys().map(String::as_str)).collect();
    for entry in walk(&a) {
        let rel = entry.strip_prefix(&a).unwrap().to_str().unwrap().replace('\\', "/");
        if rel != "provenance.json" {
            assert!(hashed.contains(&rel.as_str()), "{rel} not hashed");
        }
    }

    let (code, _) = run(&["user-clusters", "--manifest", manifest.to_str().unwrap(), "--out", b.to_str().unwrap(), "--seed", "5"]);
    assert_eq!(code, 0);
    assert_ne!(provenance(&b)["content_digest"], pa["content_digest"]);
}

fn walk(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(walk(&path));
        } else {
            out.push(path);
        }
    }
    out
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let out = out.to_str().unwrap();
    let manifest = toy_manifest();
    let manifest = manifest.to_str().unwrap();
    assert_eq!(run(&["no-such-experiment", "--manifest", manifest, "--out", out]).0, 2);
    assert_eq!(run(&["simulate", "--manifest", manifest, "--out", out]).0, 2);
    assert_eq!(run(&["user-clusters", "--manifest", "/nonexistent.toml", "--out", out]).0, 2);
    assert_eq!(run(&["user-clusters"]).0, 2);

    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, "experiment = \"user-drift\"\n[inputs]\ndumps = []\n").unwrap();
    let (code, err) = run(&["user-drift", "--manifest", bad.to_str().unwrap(), "--out", out]);
    assert_eq!(code, 2, "{err}");

    // valid manifest, but the dump holds nothing usable: a runtime failure
    fs::write(tmp.path().join("empty.jsonl"), "not json\n").unwrap();
    let m = tmp.path().join("m.toml");
    fs::write(&m, "experiment = \"user-drift\"\nseed = 1\n[inputs]\ndumps = [\"empty.jsonl\"]\n").unwrap();
    let (code, err) = run(&["user-drift", "--manifest", m.to_str().unwrap(), "--out", out]);
    assert_eq!(code, 1);
    assert!(err.contains("stage 'ingest'"), "{err}");
}

#[test]
fn stage_rerun_fails_fast_on_missing_input() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let manifest = toy_manifest();
    let args = ["user-clusters", "--manifest", manifest.to_str().unwrap(), "--out", out.to_str().unwrap()];
    assert_eq!(run(&args).0, 0);
    let before = provenance(&out)["content_digest"].clone();

    let mut rerun = args.to_vec();
    rerun.extend(["--stage", "distances"]);
    assert_eq!(run(&rerun).0, 0);
    assert_eq!(provenance(&out)["content_digest"], before);

    fs::remove_file(out.join("diagrams/e004.csv")).unwrap();
    let (code, err) = run(&rerun);
    assert_eq!(code, 1);
    assert!(err.contains("run stage 'persistence' first"), "{err}");

    let mut unknown = args.to_vec();
    unknown.extend(["--stage", "nope"]);
    assert_eq!(run(&unknown).0, 2);
}

#[test]
fn simulate_four_configs() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let configs = [
        ("complete", "graph = complete\nn = 6\nsteps = 200\nvocab_size = 20\ndim = 4\nsample_interval = 50\ncheckpoints = 0, 200\nsnapshot_top_n = 10\n"),
        ("ring", "graph = ring\nn = 5\nsteps = 100\nvocab_size = 20\ndim = 4\ntrack_pairs = true\n"),
        ("er", "graph = erdos_renyi\nn = 8\np = 0.5\nsteps = 100\nvocab_size = 20\ndim = 4\n"),
        ("cliques", "graph = two_cliques\nclique_a = 3\nclique_b = 3\nbridges = 0\nsteps = 100\nvocab_size = 20\ndim = 4\n"),
    ];
    for (name, text) in configs {
        fs::write(dir.join(format!("{name}.cfg")), text).unwrap();
    }
    fs::write(
        dir.join("m.toml"),
        "experiment = \"simulate\"\nseed = 3\noutput_dir = \"runs\"\n[inputs]\nconfigs = [\"complete.cfg\", \"ring.cfg\", \"er.cfg\", \"cliques.cfg\"]\n",
    )
    .unwrap();
    let (code, err) = run(&["simulate", "--manifest", dir.join("m.toml").to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let runs = dir.join("runs");
    for (name, _) in configs {
        assert!(runs.join(name).join("drift.csv").is_file());
        assert!(runs.join(name).join("events.csv").is_file());
    }
    assert_eq!(fs::read_dir(runs.join("complete/diagrams")).unwrap().count(), 2);
    assert_eq!(fs::read_dir(runs.join("complete/diagrams/step_200")).unwrap().count(), 6);
    assert!(!runs.join("ring/diagrams").exists());
    let pairs = fs::read_to_string(runs.join("ring/pairs.csv")).unwrap();
    assert_eq!(pairs.lines().next().unwrap(), "step,a,b,distance");
    let drift = fs::read_to_string(runs.join("complete/drift.csv")).unwrap();
    assert_eq!(drift.lines().count(), 1 + 5);
}
