use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pb_core::media::io;
use pb_core::plot::PlotOptions;
use pb_core::{Frame, FrameSequence, Rational};

fn pb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pb")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = pb(args);
    assert!(
        out.status.success(),
        "pb {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails(args: &[&str], code: i32) -> String {
    let out = pb(args);
    assert_eq!(out.status.code(), Some(code), "pb {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stderr).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gray_dir(dir: &Path, values: &[u8]) -> PathBuf {
    let frames = values.iter().map(|&v| Frame::filled(4, 4, 1, v).unwrap()).collect();
    let seq = FrameSequence::at_fps(frames, Rational::integer(3)).unwrap();
    io::save_frame_dir(dir, &seq).unwrap();
    dir.to_path_buf()
}

fn value(stdout: &str, key: &str) -> f64 {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(' ')))
        .unwrap_or_else(|| panic!("{key} missing from {stdout}"))
        .parse()
        .unwrap()
}

fn write_script(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

const OCCLUDED: &str = r#"{"width": 40, "height": 32, "steps": 180, "order": "raster", "seed": 3, "occluder": {"size": 10}}"#;

fn polylines(svg: &str) -> Vec<Vec<(f64, f64)>> {
    let doc = roxmltree::Document::parse(svg).unwrap();
    doc.descendants()
        .filter(|n| n.has_tag_name("polyline"))
        .map(|n| {
            n.attribute("points")
                .unwrap()
                .split_whitespace()
                .map(|p| {
                    let (x, y) = p.split_once(',').unwrap();
                    (x.parse().unwrap(), y.parse().unwrap())
                })
                .collect()
        })
        .collect()
}

#[test]
fn synth_writes_requested_frames_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    let script = write_script(tmp.path(), "s.json", r#"{"width": 16, "height": 12, "steps": 30, "order": "random-patch", "seed": 5}"#);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&["synth", "--script", s(&script), "--out", s(&a)]);
    ok(&["synth", "--script", s(&script), "--out", s(&b)]);
    let files = io::list_images(&a.join("frames")).unwrap();
    assert_eq!(files.len(), 30);
    assert!(!a.join("masks").exists() && !a.join("detections.json").exists());
    for f in files.iter().map(|p| p.file_name().unwrap()).chain([std::ffi::OsStr::new("sequence.json")]) {
        assert_eq!(
            std::fs::read(a.join("frames").join(f)).unwrap(),
            std::fs::read(b.join("frames").join(f)).unwrap()
        );
    }
}

#[test]
fn synth_occluder_writes_three_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let script = write_script(tmp.path(), "s.json", OCCLUDED);
    let out = tmp.path().join("o");
    ok(&["synth", "--script", s(&script), "--out", s(&out)]);
    assert_eq!(io::list_images(&out.join("frames")).unwrap().len(), 180);
    assert_eq!(io::load_masks(&out.join("masks")).unwrap().len(), 180);
    let det = io::load_detections(&out.join("detections.json")).unwrap();
    assert_eq!(det.frames().len(), 180);
}

#[test]
fn synth_schema_errors_name_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write_script(tmp.path(), "bad.json", r#"{"width": 8, "height": 8, "stpes": 3, "seed": 1}"#);
    let err = fails(&["synth", "--script", s(&bad), "--out", s(&tmp.path().join("x"))], 2);
    assert!(err.contains("stpes"), "{err}");
    let missing = write_script(tmp.path(), "missing.json", r#"{"width": 8, "height": 8, "seed": 1}"#);
    let err = fails(&["synth", "--script", s(&missing), "--out", s(&tmp.path().join("x"))], 2);
    assert!(err.contains("steps"), "{err}");
}

#[test]
fn curate_emits_keyframes_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let script = write_script(tmp.path(), "s.json", OCCLUDED);
    let src = tmp.path().join("src");
    ok(&["synth", "--script", s(&script), "--out", s(&src)]);
    let run = |out: &Path, extra: &[&str]| {
        let frames = src.join("frames");
        let det = src.join("detections.json");
        let masks = src.join("masks");
        let mut args = vec![
            "curate", "--frames", s(&frames), "--detections", s(&det), "--masks", s(&masks),
            "--canvas-mode", "full", "--out", s(out),
        ];
        args.extend_from_slice(extra);
        ok(&args);
        io::load_sequence(&out.join("keyframes"), None).unwrap()
    };
    let forward = run(&tmp.path().join("fwd"), &[]);
    assert_eq!(forward.len(), 6);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("fwd/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["keyframes"], 6);
    assert_eq!(manifest["segment_count_rule"], "ceil");
    assert_eq!(manifest["trim"], serde_json::json!([0, 179]));
    assert_eq!(manifest["segments"].as_array().unwrap().len(), 6);

    let reversed = run(&tmp.path().join("rev"), &["--reverse"]);
    assert_eq!(reversed.len(), 6);
    for (a, b) in forward.frames().iter().zip(reversed.frames().iter().rev()) {
        assert_eq!(a.data(), b.data());
    }
}

#[test]
fn curate_config_file_is_overridden_by_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let script = write_script(tmp.path(), "s.json", OCCLUDED);
    let src = tmp.path().join("src");
    ok(&["synth", "--script", s(&script), "--out", s(&src)]);
    let cfg = write_script(tmp.path(), "cfg.json", r#"{"segment_seconds": 20, "canvas_mode": "gradient-split"}"#);
    let out = tmp.path().join("c");
    ok(&[
        "curate", "--frames", s(&src.join("frames")), "--detections", s(&src.join("detections.json")),
        "--config", s(&cfg), "--canvas-mode", "full", "--out", s(&out),
    ]);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["keyframes"], 3);
    assert_eq!(manifest["canvas"]["mode"], "full");

    let unknown = write_script(tmp.path(), "bad.json", r#"{"segment_secs": 20}"#);
    let err = fails(
        &["curate", "--frames", s(&src.join("frames")), "--detections", s(&src.join("detections.json")),
          "--config", s(&unknown), "--out", s(&out)],
        2,
    );
    assert!(err.contains("segment_secs"), "{err}");
}

#[test]
fn curate_missing_detections_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let frames = gray_dir(&tmp.path().join("f"), &[1, 2, 3]);
    let err = fails(
        &["curate", "--frames", s(&frames), "--detections", s(&tmp.path().join("none.json")), "--out", s(tmp.path())],
        2,
    );
    assert!(err.contains("detections not found"), "{err}");
}

#[test]
fn curate_stage_failure_names_the_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let frames = gray_dir(&tmp.path().join("f"), &[1, 2, 3]);
    let det = write_script(tmp.path(), "det.json", r#"{"frames": []}"#);
    let out = pb(&["curate", "--frames", s(&frames), "--detections", s(&det), "--out", s(&tmp.path().join("o"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stage trim"));
}

#[test]
fn pdp_identical_sequences_print_zeros() {
    let tmp = tempfile::tempdir().unwrap();
    let a = gray_dir(&tmp.path().join("a"), &[250, 180, 90, 10]);
    let out = ok(&["pdp", "--gt", s(&a), "--gen", s(&a)]);
    assert_eq!(out, "pdp 0.0\npdp_norm 0.0\nfinal_distance 0.0\n");
}

#[test]
fn pdp_analytic_fixture_via_cli() {
    let tmp = tempfile::tempdir().unwrap();
    let frame = |white: usize| {
        let data = (0..10_000).map(|p| if p < white { 255 } else { 0 }).collect();
        Frame::new(100, 100, 1, data).unwrap()
    };
    let save = |name: &str, f: &dyn Fn(usize) -> usize| {
        let frames = (0..=100).map(|i| frame(f(i))).collect();
        let dir = tmp.path().join(name);
        io::save_frame_dir(&dir, &FrameSequence::at_fps(frames, Rational::integer(3)).unwrap()).unwrap();
        dir
    };
    let gt = save("gt", &|i| 100 * (100 - i));
    let gen = save("gen", &|i| (100 - i) * (100 - i));
    let profiles = tmp.path().join("p");
    let svg = tmp.path().join("p.svg");
    let out = ok(&["pdp", "--gt", s(&gt), "--gen", s(&gen), "--out", s(&profiles), "--plot", s(&svg)]);
    assert!((value(&out, "pdp") - (1.0f64 / 30.0).sqrt()).abs() < 1e-3, "{out}");
    assert_eq!(value(&out, "final_distance"), 0.0);
    for f in ["gt_profile.csv", "gen_profile.csv", "gt_curve.csv", "gen_curve.csv"] {
        assert!(profiles.join(f).exists(), "{f}");
    }
    assert_eq!(polylines(&std::fs::read_to_string(svg).unwrap()).len(), 2);
}

#[test]
fn pdp_batch_prints_rows_and_mean() {
    let tmp = tempfile::tempdir().unwrap();
    gray_dir(&tmp.path().join("g1"), &[250, 120, 0]);
    gray_dir(&tmp.path().join("x1"), &[250, 200, 100, 0]);
    gray_dir(&tmp.path().join("g2"), &[200, 100, 50]);
    gray_dir(&tmp.path().join("x2"), &[200, 50]);
    gray_dir(&tmp.path().join("g3"), &[10, 20, 30]);
    let list = write_script(tmp.path(), "pairs.txt", "# gt gen\ng1 x1\ng2 x2\ng3 g3\n");
    let out = ok(&["pdp", "--batch", s(&list), "--plot", s(&tmp.path().join("b.svg"))]);
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows.len(), 5, "{out}");
    assert!(rows[3].starts_with("3\t0.0\t0.0\t0.0"));
    let mean: Vec<f64> = rows[4].split('\t').skip(1).take(3).map(|v| v.parse().unwrap()).collect();
    let col: Vec<f64> = rows[1..4].iter().map(|r| r.split('\t').nth(1).unwrap().parse().unwrap()).collect();
    assert!((mean[0] - col.iter().sum::<f64>() / 3.0).abs() < 1e-15);
    assert_eq!(polylines(&std::fs::read_to_string(tmp.path().join("b.svg")).unwrap()).len(), 5);
}

#[test]
fn pdp_scores_and_embeddings_inputs() {
    let tmp = tempfile::tempdir().unwrap();
    let gt = write_script(tmp.path(), "gt.csv", "index,distance\n0,1.0\n1,0.5\n2,0.0\n");
    let gen = write_script(tmp.path(), "gen.csv", "index,distance\n0,1.0\n1,0.25\n2,0.0\n");
    let out = ok(&["pdp", "--gt-scores", s(&gt), "--gen-scores", s(&gen), "--n-points", "3"]);
    // squared gap 1/16 at the midpoint only: trapezoid gives 1/32
    assert!((value(&out, "pdp") - (1.0f64 / 32.0).sqrt()).abs() < 1e-12, "{out}");

    let emb = write_script(tmp.path(), "e.txt", "dim=2 count=3 model=toy\n1 0\n1 1\n0 1\n");
    let out = ok(&["pdp", "--gt-embeddings", s(&emb), "--gen-embeddings", s(&emb)]);
    assert_eq!(value(&out, "pdp"), 0.0);
}

#[test]
fn pdp_empty_input_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let a = gray_dir(&tmp.path().join("a"), &[1, 2]);
    let empty = tmp.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    fails(&["pdp", "--gt", s(&a), "--gen", s(&empty), "--fps", "3"], 2);
    fails(&["pdp", "--gt", s(&a), "--gen", s(&tmp.path().join("missing"))], 2);
}

#[test]
fn eval_identical_pairs_score_zero() {
    let tmp = tempfile::tempdir().unwrap();
    for root in ["gt", "gen"] {
        gray_dir(&tmp.path().join(root).join("v1"), &[250, 120, 0]);
        gray_dir(&tmp.path().join(root).join("v2"), &[90, 30]);
        for v in ["v1", "v2"] {
            std::fs::write(
                tmp.path().join(root).join(v).join("embeddings.txt"),
                "dim=2 count=3 model=toy\n1 0\n0.5 2\n0 1\n",
            )
            .unwrap();
        }
    }
    let out = ok(&["eval", "--gt", s(&tmp.path().join("gt")), "--gen", s(&tmp.path().join("gen"))]);
    let report: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(report["videos"].as_array().unwrap().len(), 2);
    for v in report["videos"].as_array().unwrap() {
        for key in ["mse", "pdp", "pdp_norm", "final_distance"] {
            assert_eq!(v["metrics"][key], 0.0, "{key}");
        }
    }
    assert!(report["fid"].as_f64().unwrap().abs() < 1e-9);
    assert_eq!(report["aggregate"]["pdp"], 0.0);
}

#[test]
fn eval_alignment_mode_changes_matches() {
    let tmp = tempfile::tempdir().unwrap();
    gray_dir(&tmp.path().join("gt/v"), &[0, 80, 160, 240]);
    gray_dir(&tmp.path().join("gen/v"), &[160, 0, 240, 80]);
    let matches = |mode: &str| {
        let out = ok(&["eval", "--gt", s(&tmp.path().join("gt")), "--gen", s(&tmp.path().join("gen")), "--mode", mode]);
        let report: serde_json::Value = serde_json::from_str(&out).unwrap();
        (report["videos"][0]["matches"].clone(), report["videos"][0]["metrics"]["mse"].as_f64().unwrap())
    };
    let (near, near_cost) = matches("nearest");
    let (mono, mono_cost) = matches("monotone");
    assert_eq!(near, serde_json::json!([2, 0, 3, 1]));
    assert_ne!(near, mono);
    let m: Vec<u64> = mono.as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    assert!(m.windows(2).all(|p| p[0] <= p[1]));
    assert!(mono_cost > near_cost);
}

#[test]
fn eval_lists_orphans() {
    let tmp = tempfile::tempdir().unwrap();
    gray_dir(&tmp.path().join("gt/shared"), &[1, 2]);
    gray_dir(&tmp.path().join("gen/shared"), &[1, 2]);
    gray_dir(&tmp.path().join("gt/lonely"), &[1, 2]);
    gray_dir(&tmp.path().join("gen/stray"), &[1, 2]);
    let err = fails(&["eval", "--gt", s(&tmp.path().join("gt")), "--gen", s(&tmp.path().join("gen"))], 2);
    assert!(err.contains("lonely") && err.contains("stray"), "{err}");
}

fn profile_csv(dir: &Path, name: &str, values: &[f64]) -> PathBuf {
    let p = pb_core::DistanceProfile::new(values.to_vec()).unwrap();
    write_script(dir, name, &p.to_csv())
}

#[test]
fn plot_counts_polylines() {
    let tmp = tempfile::tempdir().unwrap();
    let a = profile_csv(tmp.path(), "a.csv", &[0.9, 0.5, 0.2]);
    let b = profile_csv(tmp.path(), "b.csv", &[0.7, 0.6, 0.1, 0.0]);
    let c = profile_csv(tmp.path(), "c.csv", &[0.4, 0.1]);
    let svg = tmp.path().join("o.svg");
    ok(&["plot", "--csv", s(&a), "--out", s(&svg), "--y-label", "ssim"]);
    let text = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(polylines(&text).len(), 1);
    assert!(text.contains(">Time<") && text.contains(">ssim<"));
    ok(&["plot", "--csv", s(&a), "--csv", s(&b), "--csv", s(&c), "--mean", "--out", s(&svg)]);
    assert_eq!(polylines(&std::fs::read_to_string(&svg).unwrap()).len(), 4);
}

#[test]
fn plot_normalized_endpoints_hit_corners() {
    let tmp = tempfile::tempdir().unwrap();
    let a = profile_csv(tmp.path(), "a.csv", &[0.8, 0.7, 0.3, 0.2]);
    let svg = tmp.path().join("o.svg");
    ok(&["plot", "--csv", s(&a), "--normalize", "--out", s(&svg)]);
    let opts = PlotOptions::default();
    let line = &polylines(&std::fs::read_to_string(&svg).unwrap())[0];
    let (first, last) = (line[0], line[line.len() - 1]);
    assert!((first.0 - opts.plot_left()).abs() < 1e-3 && (first.1 - opts.plot_top()).abs() < 1e-3);
    assert!((last.0 - opts.plot_right()).abs() < 1e-3 && (last.1 - opts.plot_bottom()).abs() < 1e-3);
}

#[test]
fn plot_malformed_csv_reports_row() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write_script(tmp.path(), "bad.csv", "t,value\n0,1\n0.5,oops\n1,0\n");
    let err = fails(&["plot", "--csv", s(&bad), "--out", s(&tmp.path().join("o.svg"))], 2);
    assert!(err.contains("row 3"), "{err}");
}

#[test]
fn zero_jobs_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let a = gray_dir(&tmp.path().join("a"), &[1, 2]);
    let out = Command::new(env!("CARGO_BIN_EXE_pb"))
        .args(["pdp", "--gt", s(&a), "--gen", s(&a)])
        .env("PB_JOBS", "0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_pb"))
        .args(["pdp", "--gt", s(&a), "--gen", s(&a)])
        .env("PB_JOBS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
}
