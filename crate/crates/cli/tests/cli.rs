//! End-to-end tests of the command-line interface: exit codes, output
//! formats, and determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_geodesic-psim")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawn cli")
}

fn fixtures() -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().to_path_buf();
    geodesic_psim::fixtures::generate(&path, 0).unwrap();
    (dir, path)
}

fn p(path: &Path, name: &str) -> String {
    path.join(name).to_string_lossy().into_owned()
}

#[test]
fn self_pair_scores_one_with_exit_zero() {
    let (_guard, fx) = fixtures();
    let out = run(&[
        "score",
        "--ref",
        &p(&fx, "icosphere_sub2.obj"),
        "--ref-tex",
        &p(&fx, "tex_gradient.png"),
        "--dist",
        &p(&fx, "icosphere_sub2.obj"),
        "--dist-tex",
        &p(&fx, "tex_gradient.png"),
        "--keypoints",
        "50",
        "--json",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let parsed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(parsed["q"], 1.0);
    assert_eq!(parsed["keypoints_used"], 50);
}

#[test]
fn plain_mode_prints_only_q() {
    let (_guard, fx) = fixtures();
    let out = run(&[
        "score",
        "--ref",
        &p(&fx, "plane_grid16.obj"),
        "--ref-tex",
        &p(&fx, "tex_checker.png"),
        "--dist",
        &p(&fx, "plane_grid16.obj"),
        "--dist-tex",
        &p(&fx, "tex_checker.png"),
        "--keypoints",
        "30",
        "--plain",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "1");
}

#[test]
fn missing_required_flag_is_usage_error() {
    let out = run(&["score", "--ref", "a.obj"]);
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = run(&["score", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn unreadable_obj_is_input_error() {
    let (_guard, fx) = fixtures();
    let out = run(&[
        "score",
        "--ref",
        &p(&fx, "no_such_file.obj"),
        "--ref-tex",
        &p(&fx, "tex_gradient.png"),
        "--dist",
        &p(&fx, "icosphere_sub1.obj"),
        "--dist-tex",
        &p(&fx, "tex_gradient.png"),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn malformed_obj_reports_line_and_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.obj");
    std::fs::write(&bad, "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nf 1/1 2/9 3/1\n").unwrap();
    let tex = dir.path().join("t.png");
    geodesic_psim::fixtures::generate(dir.path(), 0).unwrap();
    std::fs::rename(dir.path().join("tex_uniform.png"), &tex).unwrap();
    let out = run(&[
        "score",
        "--ref",
        bad.to_str().unwrap(),
        "--ref-tex",
        tex.to_str().unwrap(),
        "--dist",
        bad.to_str().unwrap(),
        "--dist-tex",
        tex.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 5"));
}

#[test]
fn clean_reports_exact_counts_and_is_byte_stable() {
    let (_guard, fx) = fixtures();
    let dirty = p(&fx, "dirty.obj");
    let out1_path = p(&fx, "cleaned1.obj");
    let out = run(&["clean", "--in", &dirty, "--out", &out1_path]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["duplicated_vertices_removed"], 3);
    assert_eq!(report["unreferenced_vertices_removed"], 2);
    assert_eq!(report["duplicated_faces_removed"], 2);
    assert_eq!(report["null_faces_removed"], 1);

    // Re-cleaning the canonical output changes nothing, byte for byte.
    let out2_path = p(&fx, "cleaned2.obj");
    let out = run(&["clean", "--in", &out1_path, "--out", &out2_path]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["duplicated_vertices_removed"], 0);
    assert_eq!(report["unreferenced_vertices_removed"], 0);
    assert_eq!(report["iterations"], 1);
    let b1 = std::fs::read(&out1_path).unwrap();
    let b2 = std::fs::read(&out2_path).unwrap();
    assert_eq!(b1, b2);
}

#[test]
fn clean_zero_face_input_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("null.obj");
    std::fs::write(&path, "v 0 0 0\nv 1 0 0\nvt 0 0\nf 1/1 1/1 2/1\n").unwrap();
    let out_path = dir.path().join("out.obj");
    let out = run(&["clean", "--in", path.to_str().unwrap(), "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn fixtures_same_seed_identical_bytes_different_seed_changes_noise_only() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let dir_c = tempfile::tempdir().unwrap();
    assert_eq!(
        run(&["fixtures", "--out", dir_a.path().to_str().unwrap(), "--seed", "7"])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        run(&["fixtures", "--out", dir_b.path().to_str().unwrap(), "--seed", "7"])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        run(&["fixtures", "--out", dir_c.path().to_str().unwrap(), "--seed", "8"])
            .status
            .code(),
        Some(0)
    );
    for entry in std::fs::read_dir(dir_a.path()).unwrap() {
        let name = entry.unwrap().file_name();
        let a = std::fs::read(dir_a.path().join(&name)).unwrap();
        let b = std::fs::read(dir_b.path().join(&name)).unwrap();
        assert_eq!(a, b, "seed-7 runs differ on {name:?}");
        let c = std::fs::read(dir_c.path().join(&name)).unwrap();
        let is_noise = name.to_string_lossy().starts_with("tex_noise");
        if is_noise {
            assert_ne!(a, c, "noise texture {name:?} should change with the seed");
        } else {
            assert_eq!(a, c, "non-noise file {name:?} should not depend on the seed");
        }
    }
}

#[test]
fn batch_writes_csv_and_json() {
    let (_guard, fx) = fixtures();
    let out_csv = p(&fx, "scores.csv");
    let out = run(&[
        "batch",
        "--manifest",
        &p(&fx, "ladder.csv"),
        "--out",
        &out_csv,
        "--keypoints",
        "40",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&out_csv).unwrap();
    assert!(csv.starts_with("ref_mesh,ref_tex,dist_mesh,dist_tex,mos,score"));
    assert_eq!(csv.lines().count(), 8);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fx.join("scores.json")).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 7);
    assert!(json[0]["score"].as_f64().unwrap() > 0.99);
}

#[test]
fn batch_flags_missing_files_and_scores_the_rest() {
    let (_guard, fx) = fixtures();
    let manifest = fx.join("broken.csv");
    std::fs::write(
        &manifest,
        "ref_mesh,ref_tex,dist_mesh,dist_tex\n\
         icosphere_sub1.obj,tex_gradient.png,icosphere_sub1.obj,tex_gradient.png\n\
         missing.obj,tex_gradient.png,icosphere_sub1.obj,tex_gradient.png\n",
    )
    .unwrap();
    let out_csv = p(&fx, "broken_scores.csv");
    let out = run(&[
        "batch",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        &out_csv,
        "--keypoints",
        "20",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fx.join("broken_scores.json")).unwrap())
            .unwrap();
    assert_eq!(json[0]["score"], 1.0);
    assert!(json[1]["score"].is_null());
    assert!(json[1]["error"].as_str().unwrap().contains("missing.obj"));
}

#[test]
fn eval_scores_only_correlates_precomputed_scores() {
    let dir = tempfile::tempdir().unwrap();
    let scores = dir.path().join("scores.csv");
    std::fs::write(&scores, "score,mos\n0.9,4.5\n0.8,4.0\n0.7,3.0\n0.6,2.5\n0.5,2.0\n").unwrap();
    let report_path = dir.path().join("report.json");
    let out = run(&[
        "eval",
        "--scores-only",
        scores.to_str().unwrap(),
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["srcc"], 1.0);
    assert_eq!(report["n"], 5);
    assert!(report_path.with_extension("csv").exists());
}

#[test]
fn eval_self_pairs_surface_zero_variance_error() {
    let (_guard, fx) = fixtures();
    let manifest = fx.join("selfpairs.csv");
    let mut text = String::from("ref_mesh,ref_tex,dist_mesh,dist_tex,mos\n");
    for mos in [1, 2, 3, 4, 5] {
        text.push_str(&format!(
            "icosphere_sub1.obj,tex_gradient.png,icosphere_sub1.obj,tex_gradient.png,{mos}\n"
        ));
    }
    std::fs::write(&manifest, text).unwrap();
    let out = run(&[
        "eval",
        "--manifest",
        manifest.to_str().unwrap(),
        "--keypoints",
        "20",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("zero variance"));
}

#[test]
fn dump_features_writes_per_keypoint_json() {
    let (_guard, fx) = fixtures();
    let dump = fx.join("features.json");
    let out = run(&[
        "score",
        "--ref",
        &p(&fx, "icosphere_sub1.obj"),
        "--ref-tex",
        &p(&fx, "tex_gradient.png"),
        "--dist",
        &p(&fx, "icosphere_sub2.obj"),
        "--dist-tex",
        &p(&fx, "tex_gradient.png"),
        "--keypoints",
        "15",
        "--plain",
        "--dump-features",
        dump.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let details: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&dump).unwrap()).unwrap();
    let rows = details.as_array().unwrap();
    assert_eq!(rows.len(), 15);
    assert!(rows[0]["reference"]["dmc"].as_f64().unwrap() > 0.0);
}
