//! End-to-end runs of the binary: exit codes, printed summaries, and
//! byte-level determinism of every artifact.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_headwater"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

/// Four reaches in a line, one cell each: 4 -> 3 -> 2 -> 1 (outlet).
fn path4(dir: &Path) -> (PathBuf, PathBuf) {
    let net = dir.join("net.tsv");
    fs::write(&net, "1\t0\tM\n2\t1\tM\n3\t2\tM\n4\t3\tM\n").unwrap();
    let ras = dir.join("ras.txt");
    fs::write(&ras, "4 1\n1 2 3 4\n").unwrap();
    (net, ras)
}

fn single(dir: &Path) -> (PathBuf, PathBuf) {
    let net = dir.join("one.tsv");
    fs::write(&net, "1\t0\tM\n").unwrap();
    let ras = dir.join("one_ras.txt");
    fs::write(&ras, "1 1\n1\n").unwrap();
    (net, ras)
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = |net: &str, ras: &str| {
        vec![
            "gen".to_string(),
            "--n".into(),
            "100".into(),
            "--grid".into(),
            "64x64".into(),
            "--seed".into(),
            "7".into(),
            "--network".into(),
            net.into(),
            "--raster".into(),
            ras.into(),
        ]
    };
    for (net, ras) in [("a.tsv", "a_ras.txt"), ("b.tsv", "b_ras.txt")] {
        let a: Vec<String> = args(net, ras);
        let a: Vec<&str> = a.iter().map(String::as_str).collect();
        let out = run(dir.path(), &a);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        assert!(stdout(&out).contains("wrote network"));
    }
    assert_eq!(
        fs::read(dir.path().join("a.tsv")).unwrap(),
        fs::read(dir.path().join("b.tsv")).unwrap()
    );
    assert_eq!(
        fs::read(dir.path().join("a_ras.txt")).unwrap(),
        fs::read(dir.path().join("b_ras.txt")).unwrap()
    );
}

#[test]
fn gen_rejects_zero_reaches() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["gen", "--n", "0"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("--n"), "{}", stderr(&out));
}

#[test]
fn gen_rejects_a_grid_with_no_room() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["gen", "--n", "5000", "--grid", "8x8"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("GridTooSmall"), "{}", stderr(&out));
}

#[test]
fn gen_branching_one_makes_a_pure_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["gen", "--n", "5", "--seed", "3", "--branching", "1:1.0"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = fs::read_to_string(dir.path().join("network.tsv")).unwrap();
    // Every reach has exactly one child, so each id appears once as a
    // downstream target except the deepest.
    assert_eq!(text.lines().count(), 5);
    for line in text.lines() {
        assert!(line.ends_with('M'), "{line}");
    }
    let out = run(
        dir.path(),
        &["gen", "--n", "5", "--branching", "1:nope"],
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn build_reports_three_layers_on_a_path_of_four() {
    let dir = tempfile::tempdir().unwrap();
    let (net, ras) = path4(dir.path());
    let out = run(
        dir.path(),
        &[
            "build",
            "--network",
            net.to_str().unwrap(),
            "--raster",
            ras.to_str().unwrap(),
            "--b",
            "2",
            "--index",
            "p4.lrg",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("layers: 3"), "{}", stdout(&out));
}

#[test]
fn build_on_a_single_reach() {
    let dir = tempfile::tempdir().unwrap();
    let (net, ras) = single(dir.path());
    let out = run(
        dir.path(),
        &[
            "build",
            "--network",
            net.to_str().unwrap(),
            "--raster",
            ras.to_str().unwrap(),
            "--index",
            "one.lrg",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("layers: 1"), "{text}");
    assert!(text.contains("stored: 1 polygons"), "{text}");
}

#[test]
fn build_rejects_cycles_with_the_offending_ids() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("cyc.tsv");
    fs::write(&net, "1\t0\tM\n2\t3\tM\n3\t2\tM\n").unwrap();
    let ras = dir.path().join("cyc_ras.txt");
    fs::write(&ras, "3 1\n1 2 3\n").unwrap();
    let out = run(
        dir.path(),
        &[
            "build",
            "--network",
            net.to_str().unwrap(),
            "--raster",
            ras.to_str().unwrap(),
            "--index",
            "cyc.lrg",
        ],
    );
    assert_eq!(code(&out), 4);
    let err = stderr(&out);
    assert!(err.contains("CycleDetected"), "{err}");
    assert!(err.contains('2') && err.contains('3'), "{err}");
}

#[test]
fn build_without_inputs_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["build", "--network", "missing.tsv", "--raster", "also_missing.txt", "--index", "x.lrg"],
    );
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("missing.tsv"), "{}", stderr(&out));
}

#[test]
fn build_rejects_base_below_two() {
    let dir = tempfile::tempdir().unwrap();
    let (net, ras) = path4(dir.path());
    let out = run(
        dir.path(),
        &[
            "build",
            "--network",
            net.to_str().unwrap(),
            "--raster",
            ras.to_str().unwrap(),
            "--b",
            "1",
            "--index",
            "p4.lrg",
        ],
    );
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("InvalidBase"), "{}", stderr(&out));
}

#[test]
fn query_root_covers_the_whole_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["gen", "--n", "30", "--grid", "16x16", "--seed", "3"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = run(
        dir.path(),
        &["build", "--network", "network.tsv", "--raster", "raster.txt", "--b", "2", "--index", "g.lrg"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = run(dir.path(), &["query", "--index", "g.lrg", "--reach", "1", "--out", "root.wkt"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("area: 256 cells"), "{}", stdout(&out));
    assert_eq!(
        fs::read_to_string(dir.path().join("root.wkt")).unwrap(),
        "POLYGON((0 0, 16 0, 16 16, 0 16, 0 0))\n"
    );
}

#[test]
fn query_leaf_is_its_own_catchment() {
    let dir = tempfile::tempdir().unwrap();
    let (net, ras) = path4(dir.path());
    run(
        dir.path(),
        &[
            "build",
            "--network",
            net.to_str().unwrap(),
            "--raster",
            ras.to_str().unwrap(),
            "--b",
            "2",
            "--index",
            "p4.lrg",
        ],
    );
    let out = run(dir.path(), &["query", "--index", "p4.lrg", "--reach", "4", "--out", "leaf.wkt"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("merged: 1 polygons"), "{}", stdout(&out));
    assert_eq!(
        fs::read_to_string(dir.path().join("leaf.wkt")).unwrap(),
        "POLYGON((3 0, 4 0, 4 1, 3 1, 3 0))\n"
    );
}

#[test]
fn query_unknown_reach_exits_five() {
    let dir = tempfile::tempdir().unwrap();
    let (net, ras) = path4(dir.path());
    run(
        dir.path(),
        &[
            "build",
            "--network",
            net.to_str().unwrap(),
            "--raster",
            ras.to_str().unwrap(),
            "--index",
            "p4.lrg",
        ],
    );
    for reach in ["99", "0"] {
        let out = run(dir.path(), &["query", "--index", "p4.lrg", "--reach", reach, "--out", "x.wkt"]);
        assert_eq!(code(&out), 5, "reach {reach}");
        assert!(stderr(&out).contains("UnknownReach"), "{}", stderr(&out));
    }
}

#[test]
fn index_files_are_reproducible_and_reload_clean() {
    let dir = tempfile::tempdir().unwrap();
    run(dir.path(), &["gen", "--n", "50", "--grid", "24x24", "--seed", "11"]);
    for idx in ["i1.lrg", "i2.lrg"] {
        let out = run(
            dir.path(),
            &["build", "--network", "network.tsv", "--raster", "raster.txt", "--b", "3", "--index", idx],
        );
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    let first = fs::read(dir.path().join("i1.lrg")).unwrap();
    assert_eq!(first, fs::read(dir.path().join("i2.lrg")).unwrap());

    // Load and re-save through the library: still byte-identical.
    let resaved = dir.path().join("i3.lrg");
    headwater::lrg::LrgIndex::load(&dir.path().join("i1.lrg"))
        .unwrap()
        .save(&resaved)
        .unwrap();
    assert_eq!(first, fs::read(&resaved).unwrap());
}

#[test]
fn bench_on_a_single_vertex_is_all_trivial_rows() {
    let dir = tempfile::tempdir().unwrap();
    let (net, ras) = single(dir.path());
    let out = run(
        dir.path(),
        &[
            "bench",
            "--network",
            net.to_str().unwrap(),
            "--raster",
            ras.to_str().unwrap(),
            "--out",
            "m",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("m.csv")).unwrap();
    assert!(csv.contains("network,vertices,1\n"), "{csv}");
    assert!(csv.contains("baseline,query_avg_polygons,1.000000\n"), "{csv}");
    assert!(csv.contains("lrg_sw_b2,query_avg_polygons,1.000000\n"), "{csv}");
    assert!(csv.contains("lrg_sw_b2,reduction_query_polygons,0.000000\n"), "{csv}");
}

#[test]
fn bench_reports_are_deterministic_with_one_column_per_base() {
    let dir = tempfile::tempdir().unwrap();
    run(dir.path(), &["gen", "--n", "60", "--grid", "20x20", "--seed", "5"]);
    for out_stem in ["m1", "m2"] {
        let out = run(
            dir.path(),
            &[
                "bench",
                "--network",
                "network.tsv",
                "--raster",
                "raster.txt",
                "--b",
                "2,4,6",
                "--out",
                out_stem,
                "--format",
                "csv",
            ],
        );
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        assert!(stdout(&out).starts_with("model,metric,value\n"));
    }
    let csv = fs::read_to_string(dir.path().join("m1.csv")).unwrap();
    assert_eq!(csv, fs::read_to_string(dir.path().join("m2.csv")).unwrap());
    assert_eq!(
        fs::read_to_string(dir.path().join("m1.txt")).unwrap(),
        fs::read_to_string(dir.path().join("m2.txt")).unwrap()
    );
    for b in [2, 4, 6] {
        assert!(csv.contains(&format!("lrg_sw_b{b},preprocessing_polygons,")), "{csv}");
    }
    // Stdout in csv mode is exactly the csv artifact.
    let table = fs::read_to_string(dir.path().join("m1.txt")).unwrap();
    assert!(table.contains("lrg_sw_b4"), "{table}");
}

#[test]
fn bench_rejects_a_base_below_two() {
    let dir = tempfile::tempdir().unwrap();
    let (net, ras) = single(dir.path());
    let out = run(
        dir.path(),
        &[
            "bench",
            "--network",
            net.to_str().unwrap(),
            "--raster",
            ras.to_str().unwrap(),
            "--b",
            "2,1",
            "--out",
            "m",
        ],
    );
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("InvalidBase"), "{}", stderr(&out));
}
