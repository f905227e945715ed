use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn traverse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_traverse")).args(args).current_dir(root()).output().unwrap()
}

#[test]
fn annulus_census_counts_four() {
    let out = traverse(&["--analysis", "census", "--scene", "scenes/annulus.json"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("#mm(v) = 4"), "{text}");
}

#[test]
fn disk_graph_is_one_edge() {
    let dir = tempfile::tempdir().unwrap();
    let out = traverse(&["--analysis", "graph", "--scene", "scenes/disk.json", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let dot = std::fs::read_to_string(dir.path().join("graph.dot")).unwrap();
    assert_eq!(dot.matches(" -> ").count(), 1, "{dot}");
    assert_eq!(dot.lines().filter(|l| l.contains("[label=") && !l.contains(" -> ")).count(), 2, "{dot}");
}

#[test]
fn malformed_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"name\": ").unwrap();
    let out = traverse(&["--analysis", "census", "--scene", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn nongeneric_scene_exits_three_unless_allowed() {
    let out = traverse(&["--analysis", "census", "--scene", "scenes/aligned_holes.json"]);
    assert_eq!(out.status.code(), Some(3));
    let out = traverse(&["--analysis", "census", "--scene", "scenes/aligned_holes.json", "--allow-nongeneric"]);
    assert!(out.status.success());
}

#[test]
fn bad_thread_count_exits_two() {
    let out = Command::new(env!("CARGO_BIN_EXE_traverse"))
        .args(["--analysis", "strata", "--scene", "scenes/disk.json"])
        .env("TRAVERSE_THREADS", "zero")
        .current_dir(root())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn repeated_runs_are_identical() {
    let args = ["--analysis", "chains", "--chain", "data/chains/z_tetra_boundary.json", "--coloring", "data/chains/coloring_01.json"];
    let a = traverse(&args);
    let b = traverse(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}
