use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use latentwalk::cli::{main_with_args, Manifest};
use latentwalk::toyworld::{parse_pgm, Attribute};
use latentwalk::walk::import_trajectory;
use tempfile::TempDir;

fn run(ws: &Path, args: &[&str]) -> i32 {
    let mut all = vec!["latentwalk", "--workspace", ws.to_str().unwrap()];
    all.extend_from_slice(args);
    main_with_args(all)
}

/// A quickly trained workspace shared by the tests in this file.
fn workspace() -> &'static Path {
    static WS: OnceLock<TempDir> = OnceLock::new();
    WS.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let ws = dir.path();
        assert_eq!(
            run(
                ws,
                &["prepare", "--n", "600", "--ae-epochs", "8", "--encoder-epochs", "8"]
            ),
            0
        );
        assert_eq!(run(ws, &["train-mapping", "--epochs", "10"]), 0);
        assert_eq!(run(ws, &["train-classifiers", "--epochs", "10"]), 0);
        dir
    })
    .path()
}

fn manifest(path: &Path) -> Manifest {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn strip_panels(path: &Path) -> Vec<Vec<f64>> {
    let img = parse_pgm(&fs::read_to_string(path).unwrap()).unwrap();
    let n = (img.width() + 1) / 33;
    (0..n)
        .map(|k| {
            let mut px = Vec::with_capacity(1024);
            for r in 0..32 {
                for c in 0..32 {
                    px.push(img.get(r, k * 33 + c));
                }
            }
            px
        })
        .collect()
}

#[test]
fn prepare_lists_three_models_and_hashes_them() {
    let ws = workspace();
    let m = manifest(&ws.join("manifests/prepare.json"));
    let models: Vec<&str> = m
        .artifacts
        .iter()
        .map(|a| a.path.as_str())
        .filter(|p| p.starts_with("models/"))
        .collect();
    assert_eq!(models.len(), 3, "{models:?}");
    for a in &m.artifacts {
        let bytes = fs::read(ws.join(&a.path)).unwrap();
        assert_eq!(bytes.len() as u64, a.bytes);
        assert_eq!(a.sha256.len(), 64);
    }
    assert_eq!(m.config["n"], 600);
    assert!(m.timings_ms.contains_key("autoencoder"));
}

#[test]
fn classifier_run_writes_every_attribute_and_a_report() {
    let ws = workspace();
    for a in Attribute::ALL {
        assert!(ws.join(format!("classifiers/{a}.json")).exists());
    }
    let report = fs::read_to_string(ws.join("reports/classifiers.tsv")).unwrap();
    assert_eq!(report.lines().count(), 5);
    assert!(report.starts_with("attribute\ttrain_accuracy\theldout_accuracy"));
}

#[test]
fn existing_checkpoints_need_force() {
    let ws = workspace();
    let before = fs::read(ws.join("models/mapping.json")).unwrap();
    assert_eq!(run(ws, &["train-mapping", "--epochs", "1"]), 1);
    assert_eq!(run(ws, &["train-classifiers", "--attrs", "smile", "--epochs", "1"]), 1);
    assert_eq!(fs::read(ws.join("models/mapping.json")).unwrap(), before);
}

#[test]
fn validation_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let ws = dir.path();
    assert_eq!(run(ws, &["prepare", "--n", "50"]), 1);
    assert_eq!(run(ws, &["train-mapping"]), 1);
    assert_eq!(run(ws, &["walk", "g00001", "--attr", "smile"]), 1);
    assert_eq!(run(ws, &["train-classifiers", "--attrs", "beard"]), 1);
    assert_eq!(run(ws, &["no-such-verb"]), 1);
    assert_eq!(run(ws, &["--help"]), 0);
}

#[test]
fn walk_writes_a_valid_trajectory_and_grid() {
    let ws = workspace();
    let out = ws.join("walks");
    let args = [
        "--out",
        out.to_str().unwrap(),
        "walk",
        "g00007",
        "--attr",
        "smile",
        "--iterations",
        "100",
        "--snapshot-every",
        "10",
        "--stop-loss",
        "0",
    ];
    assert_eq!(run(ws, &args), 0);
    let dir = out.join("walk-g00007-smile-y1");
    let t = import_trajectory(&dir.join("trajectory.json")).unwrap();
    let panels = strip_panels(&dir.join("grid.pgm"));
    assert_eq!(panels.len(), t.snapshots.len());
    let grid = image::open(dir.join("grid.pgm")).unwrap();
    assert_eq!(grid.height(), 32);
    let table = fs::read_to_string(dir.join("snapshots.tsv")).unwrap();
    assert_eq!(table.lines().count(), t.snapshots.len() + 1);
    let gradient = fs::read_to_string(dir.join("gradient.tsv")).unwrap();
    assert_eq!(gradient.lines().count(), 129);

    assert_eq!(run(ws, &args), 1);
    let mut forced = args.to_vec();
    forced.insert(0, "--force");
    assert_eq!(run(ws, &forced), 0);

    let down = [
        "--out",
        out.to_str().unwrap(),
        "walk",
        "g00007",
        "--attr",
        "smile",
        "-y",
        "0",
        "--iterations",
        "100",
        "--snapshot-every",
        "10",
        "--stop-loss",
        "0",
    ];
    assert_eq!(run(ws, &down), 0);
    let up_grid = fs::read(dir.join("grid.pgm")).unwrap();
    let down_grid = fs::read(out.join("walk-g00007-smile-y0/grid.pgm")).unwrap();
    assert_ne!(up_grid, down_grid);
}

#[test]
fn walk_on_a_pgm_file_matches_the_dataset_id() {
    let ws = workspace();
    let data = latentwalk::toyworld::sample_dataset(600, 7).unwrap();
    let file = ws.join("glyph3.pgm");
    data.images[3].save_pgm(&file).unwrap();
    let out = ws.join("by-file");
    let common = [
        "--out",
        out.to_str().unwrap(),
        "walk",
        "--attr",
        "eye_size",
        "--iterations",
        "20",
        "--snapshot-every",
        "5",
    ];
    let mut by_file = common.to_vec();
    by_file.insert(3, file.to_str().unwrap());
    let mut by_id = common.to_vec();
    by_id.insert(3, "g00003");
    assert_eq!(run(ws, &by_file), 0);
    assert_eq!(run(ws, &by_id), 0);
    let ta = import_trajectory(&out.join("walk-glyph3-eye_size-y1/trajectory.json")).unwrap();
    let tb = import_trajectory(&out.join("walk-g00003-eye_size-y1/trajectory.json")).unwrap();
    assert_eq!(ta.snapshots.len(), tb.snapshots.len());
    // PGM quantizes pixels to 1/255, so the two encodings are close, not equal.
    assert!((ta.initial_loss - tb.initial_loss).abs() < 0.05 * tb.initial_loss.max(1e-3));
}

#[test]
fn interpolation_endpoints_are_the_reconstructions() {
    let ws = workspace();
    let out = ws.join("interp");
    let o = out.to_str().unwrap();
    assert_eq!(
        run(ws, &["--out", o, "interpolate", "g00001", "g00002", "--steps", "6"]),
        0
    );
    assert_eq!(run(ws, &["--out", o, "arith", "g00001", "g00005", "g00005"]), 0);
    assert_eq!(run(ws, &["--out", o, "average", "g00002"]), 0);
    let path = strip_panels(&out.join("interpolate-g00001-g00002/strip.pgm"));
    assert_eq!(path.len(), 6);
    let arith = strip_panels(&out.join("arith-g00001-g00005-g00005/strip.pgm"));
    assert_eq!(arith[0], path[0]);
    assert_eq!(arith[3], arith[0]);
    let avg = strip_panels(&out.join("average-1/strip.pgm"));
    assert_eq!(avg[0], path[5]);
    assert_eq!(avg[1], path[5]);
}

#[test]
fn average_of_random_latents_reports_the_collapse() {
    let ws = workspace();
    let out = ws.join("avg");
    assert_eq!(
        run(ws, &["--out", out.to_str().unwrap(), "average", "--random", "64"]),
        0
    );
    let m = manifest(&out.join("average-random-64/manifest.json"));
    let norm = m.metrics["linear_mean_norm"];
    assert!((norm - 0.125).abs() < 0.03, "{norm}");
    assert!((m.metrics["spherical_mean_norm"] - 1.0).abs() < 1e-9);
    let panels = strip_panels(&out.join("average-random-64/strip.pgm"));
    assert_eq!(panels.len(), 2);
}

#[test]
fn empty_random_average_is_rejected() {
    let ws = workspace();
    let out = ws.join("anti");
    assert_eq!(
        run(ws, &["--out", out.to_str().unwrap(), "average", "--random", "0"]),
        1
    );
}

#[test]
fn collapse_study_and_gradcheck_run_without_a_workspace() {
    let dir = tempfile::tempdir().unwrap();
    let ws = dir.path();
    assert_eq!(run(ws, &["eval-collapse", "--n", "1,4,60", "--trials", "200"]), 0);
    let table = fs::read_to_string(ws.join("out/eval-collapse/collapse.tsv")).unwrap();
    let n1: Vec<&str> = table.lines().nth(1).unwrap().split('\t').collect();
    assert_eq!(n1[0], "1");
    assert_eq!(n1[2].parse::<f64>().unwrap(), 1.0);
    assert_eq!(run(ws, &["gradcheck"]), 0);
}
