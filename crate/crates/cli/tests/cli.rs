use std::path::{Path, PathBuf};
use std::process::Command;

use graspgen::export::{load_grasp_json, CLOUD_COLOR, CONTACT_COLOR};
use graspgen::GraspSetFile;
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn graspgen(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_graspgen"))
        .args(args)
        .output()
        .expect("binary runs");
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn schema_check(path: &Path) {
    let schema: Value = serde_json::from_str(
        &std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/grasp-set.schema.json"))
            .unwrap(),
    )
    .unwrap();
    let instance: Value = serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(&instance).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:#?}");
}

struct Run {
    _dir: tempfile::TempDir,
    json: PathBuf,
    viz: PathBuf,
    report: PathBuf,
    code: i32,
    stderr: String,
}

fn run_cube(extra: &[&str]) -> Run {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("grasps.json");
    let viz = dir.path().join("viz.ply");
    let report = dir.path().join("report.json");
    let cube = fixture("cube_40mm.obj");
    let mut args = vec![
        "--input",
        cube.to_str().unwrap(),
        "--n-points",
        "500",
        "--seed",
        "3",
        "--out",
        json.to_str().unwrap(),
        "--viz",
        viz.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    let (code, stderr) = graspgen(&args);
    Run {
        _dir: dir,
        json,
        viz,
        report,
        code,
        stderr,
    }
}

/// Vertices of an ASCII colored PLY as `(x, y, z, [r, g, b])`.
fn read_colored_ply(path: &Path) -> Vec<([f64; 3], [u8; 3])> {
    let text = std::fs::read_to_string(path).unwrap();
    let (header, body) = text.split_once("end_header\n").unwrap();
    let count: usize = header
        .lines()
        .find_map(|l| l.strip_prefix("element vertex "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(header.contains("property uchar red\nproperty uchar green\nproperty uchar blue"));
    let rows: Vec<_> = body
        .lines()
        .map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            (
                [f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap()],
                [f[3].parse().unwrap(), f[4].parse().unwrap(), f[5].parse().unwrap()],
            )
        })
        .collect();
    assert_eq!(rows.len(), count);
    rows
}

#[test]
fn cube_run_produces_valid_outputs() {
    let run = run_cube(&["--stroke", "60", "--mu", "0.5"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    schema_check(&run.json);
    let set = load_grasp_json(&run.json).unwrap();
    assert_eq!(set.grasps.len(), 30);
    assert!(set.metadata.counts.is_non_increasing());
    assert_eq!(set.metadata.counts.post_clustering, 30);
    for g in &set.grasps {
        // Opposite faces: the contacts differ by the full 40 mm along one axis.
        let ni = g.normal_i;
        let nj = g.normal_j;
        assert_eq!(ni.iter().zip(&nj).map(|(a, b)| a * b).sum::<f64>(), -1.0);
        for p in &g.poses {
            let n: f64 = p.quaternion.iter().map(|q| q * q).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() <= 1e-9);
        }
    }

    let report: Value = serde_json::from_slice(&std::fs::read(&run.report).unwrap()).unwrap();
    assert_eq!(report["counts"]["post_clustering"], 30);
    let stages: Vec<&str> = report["timings"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t["stage"].as_str().unwrap())
        .collect();
    assert_eq!(stages, ["load", "downsample", "synthesis", "clustering", "export"]);

    // Red points are contact points, on opposite faces, in millimeters.
    let rows = read_colored_ply(&run.viz);
    let red: Vec<[f64; 3]> = rows.iter().filter(|r| r.1 == CONTACT_COLOR).map(|r| r.0).collect();
    let green = rows.iter().filter(|r| r.1 == CLOUD_COLOR).count();
    assert_eq!(red.len() + green, 500);
    for p in &red {
        assert!(p.iter().any(|c| (c.abs() - 20.0).abs() < 1e-4), "{p:?} is not on a face");
    }
}

#[test]
fn written_file_round_trips_bit_exact() {
    let run = run_cube(&["--stroke", "60", "--mu", "0.5", "--kt", "2", "--kr", "2"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let set = load_grasp_json(&run.json).unwrap();
    let bytes = std::fs::read(&run.json).unwrap();
    assert_eq!(graspgen::export::to_json_bytes(&set), bytes);
    let again: GraspSetFile = serde_json::from_slice(&bytes).unwrap();
    for (a, b) in set.grasps.iter().zip(&again.grasps) {
        assert_eq!(a.width.to_bits(), b.width.to_bits());
        assert_eq!(a.contact_i.map(f64::to_bits), b.contact_i.map(f64::to_bits));
    }
}

#[test]
fn one_grasp_gives_two_red_points() {
    let run = run_cube(&["--stroke", "60", "--mu", "0.5", "--kt", "1", "--kr", "1"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let set = load_grasp_json(&run.json).unwrap();
    assert_eq!(set.grasps.len(), 1);
    let rows = read_colored_ply(&run.viz);
    let red: Vec<[f64; 3]> = rows.iter().filter(|r| r.1 == CONTACT_COLOR).map(|r| r.0).collect();
    assert_eq!(red.len(), 2);
    let g = &set.grasps[0];
    for (p, c) in red.iter().zip([g.contact_i, g.contact_j]) {
        for k in 0..3 {
            assert!((p[k] - c[k] * 1000.0).abs() < 1e-4);
        }
    }
    // Triads: 3 axes of 10 samples for every pose.
    let triad = rows.iter().filter(|r| r.1 != CONTACT_COLOR && r.1 != CLOUD_COLOR).count();
    assert_eq!(triad, 30 * g.poses.len());
}

#[test]
fn narrow_stroke_yields_empty_set_and_exit_code_two() {
    let run = run_cube(&["--stroke", "30", "--mu", "0.5"]);
    assert_eq!(run.code, 2, "{}", run.stderr);
    schema_check(&run.json);
    let set = load_grasp_json(&run.json).unwrap();
    assert!(set.grasps.is_empty());
    assert_eq!(set.metadata.counts.post_collision, 0);
    assert_eq!(set.metadata.input.points, 500);
    let rows = read_colored_ply(&run.viz);
    assert_eq!(rows.len(), 500);
    assert!(rows.iter().all(|r| r.1 == CLOUD_COLOR));
}

#[test]
fn usage_errors_exit_64() {
    let cube = fixture("cube_40mm.obj");
    let cube = cube.to_str().unwrap();
    let (code, err) = graspgen(&["--input", cube, "--stroke", "60", "--mu", "-0.1"]);
    assert_eq!(code, 64);
    assert!(err.contains("--mu"), "{err}");
    let (code, err) = graspgen(&["--input", cube, "--stroke", "60", "--mu", "0.5", "--bogus"]);
    assert_eq!(code, 64);
    assert!(err.contains("--bogus"), "{err}");
    let (code, _) = graspgen(&["--help"]);
    assert_eq!(code, 0);
}

#[test]
fn missing_input_file_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.json");
    let (code, err) = graspgen(&[
        "--input",
        "/nonexistent/part.ply",
        "--stroke",
        "60",
        "--mu",
        "0.5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 1);
    assert!(err.contains("/nonexistent/part.ply"), "{err}");
    assert!(!out.exists());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        format!(
            "input = {:?}\nstroke = 60\nmu = 0.5\nn-points = 400\nkt = 4\nkr = 1\nout = \"g.json\"\n",
            fixture("bar_120mm.obj")
        ),
    )
    .unwrap();
    let (code, err) = graspgen(&["--config", cfg.to_str().unwrap(), "--kr", "2"]);
    assert_eq!(code, 0, "{err}");
    let set = load_grasp_json(&dir.path().join("g.json")).unwrap();
    assert_eq!(set.metadata.config.k_translational, 4);
    assert_eq!(set.metadata.config.k_rotational, 2);
    assert_eq!(set.grasps.len(), 8);
}

#[test]
fn point_cloud_input_in_meters() {
    use graspgen_core::cloud::{sample_mesh, write_ply, PlyEncoding};
    let dir = tempfile::tempdir().unwrap();
    let ply = dir.path().join("cyl.ply");
    let cloud = sample_mesh(&graspgen_core::shapes::cylinder(0.02, 0.05, 24), 400, 1).unwrap();
    write_ply(&cloud, &ply, PlyEncoding::BinaryLittleEndian).unwrap();
    let out = dir.path().join("g.json");
    let (code, err) = graspgen(&[
        "--input",
        ply.to_str().unwrap(),
        "--unit",
        "m",
        "--stroke",
        "0.06",
        "--mu",
        "0.5",
        "--voxel",
        "0.004",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let set = load_grasp_json(&out).unwrap();
    assert_eq!(set.metadata.input.format, "ply");
    assert_eq!(set.metadata.config.n_points, None);
    assert!(set.metadata.input.points < 400);
    assert!(!set.grasps.is_empty());
}
