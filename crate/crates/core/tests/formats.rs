use std::fs;

use latentwalk::classifier::{import_embeddings, EmbeddingDataset};
use latentwalk::mapping::{load_mapping, save_mapping, MappingSpec};
use latentwalk::nn::{Checkpoint, MlpModel};
use latentwalk::toyworld::{parse_pgm, render_glyph, GlyphImage, GlyphParams};
use latentwalk::walk::{import_trajectory, semantic_walk, trajectory_from_text, trajectory_to_text, WalkConfig};
use latentwalk::{Error, LatentVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn dataset(n: usize, d: usize) -> EmbeddingDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let vectors: Vec<LatentVector> = (0..n).map(|_| LatentVector::random(d, &mut rng)).collect();
    let labels = (0..n).map(|i| vec![(i % 2) as u8, u8::from(i % 3 == 0)]).collect();
    EmbeddingDataset::new(
        (0..n).map(|i| format!("r{i}")).collect(),
        vectors,
        vec!["a".into(), "b".into()],
        labels,
    )
    .unwrap()
}

#[test]
fn embeddings_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.jsonl");
    let data = dataset(20, 16);
    data.export(&path).unwrap();
    assert_eq!(import_embeddings(&path).unwrap(), data);
}

#[test]
fn slightly_off_unit_vectors_are_renormalized() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.jsonl");
    let header = r#"{"format_version":1,"d":2,"attributes":["a"]}"#;
    let text = format!("{header}\n{{\"id\":\"x\",\"vector\":[1.0005,0.0],\"attrs\":{{\"a\":1}}}}\n{{\"id\":\"y\",\"vector\":[0.0,1.0],\"attrs\":{{\"a\":0}}}}\n");
    fs::write(&path, text).unwrap();
    let data = import_embeddings(&path).unwrap();
    assert_eq!(data.vectors[0].as_array()[0], 1.0);
}

#[test]
fn malformed_embedding_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.jsonl");
    let cases = [
        r#"{"format_version":2,"d":2,"attributes":["a"]}"#.to_owned(),
        "{\"format_version\":1,\"d\":2,\"attributes\":[\"a\"]}\n{\"id\":\"x\",\"vector\":[2.0,0.0],\"attrs\":{\"a\":1}}".to_owned(),
        "{\"format_version\":1,\"d\":3,\"attributes\":[\"a\"]}\n{\"id\":\"x\",\"vector\":[1.0,0.0],\"attrs\":{\"a\":1}}".to_owned(),
        "{\"format_version\":1,\"d\":2,\"attributes\":[\"a\"]}\n{\"id\":\"x\",\"vector\":[1.0,0.0],\"attrs\":{\"a\":2}}".to_owned(),
        "{\"format_version\":1,\"d\":2,\"attributes\":[\"a\"]}\n{\"id\":\"x\",\"vector\":[1.0,0.0],\"attrs\":{}}".to_owned(),
        "not json".to_owned(),
    ];
    for (i, text) in cases.iter().enumerate() {
        fs::write(&path, text).unwrap();
        let err = import_embeddings(&path).unwrap_err();
        assert_eq!(err.exit_code(), 1, "case {i}: {err}");
    }
    fs::write(&path, &cases[0]).unwrap();
    assert!(matches!(
        import_embeddings(&path),
        Err(Error::Version { found: 2, expected: 1 })
    ));
}

#[test]
fn single_class_attribute_is_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let vectors = vec![LatentVector::random(4, &mut rng), LatentVector::random(4, &mut rng)];
    let err = EmbeddingDataset::new(
        vec!["a".into(), "b".into()],
        vectors,
        vec!["x".into()],
        vec![vec![1], vec![1]],
    );
    assert!(err.is_err());
}

fn sample_trajectory() -> latentwalk::walk::Trajectory {
    let specs = [
        latentwalk::nn::LayerSpec::dense(8, 1),
        latentwalk::nn::LayerSpec::sigmoid(1),
    ];
    let clf = MlpModel::init(&specs, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let z0 = LatentVector::random(8, &mut rng);
    let cfg = WalkConfig {
        iterations: 28,
        snapshot_every: 7,
        stop_loss: 0.0,
        ..WalkConfig::default()
    };
    semantic_walk(&clf, &z0, &cfg).unwrap()
}

#[test]
fn trajectories_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    let t = sample_trajectory();
    latentwalk::walk::export_trajectory(&t, &path).unwrap();
    let back = import_trajectory(&path).unwrap();
    assert_eq!(back, t);
    assert_eq!(trajectory_to_text(&back).unwrap(), fs::read_to_string(&path).unwrap());
    assert_eq!(back.snapshot_iters, vec![0, 7, 14, 21, 28]);
}

#[test]
fn tampered_trajectories_are_rejected() {
    let text = trajectory_to_text(&sample_trajectory()).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["format_version"] = 9.into();
    assert!(matches!(
        trajectory_from_text(&v.to_string()),
        Err(Error::Version { .. })
    ));

    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["snapshots"][1][0] = 5.0.into();
    assert!(trajectory_from_text(&v.to_string()).is_err());

    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["d"] = 9.into();
    assert!(trajectory_from_text(&v.to_string()).is_err());

    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["steps"].as_array_mut().unwrap().pop();
    assert!(trajectory_from_text(&v.to_string()).is_err());
}

#[test]
fn mapping_checkpoints_check_their_role() {
    let dir = tempfile::tempdir().unwrap();
    let spec = MappingSpec {
        in_dim: 4,
        out_dim: 2,
        hidden: vec![3],
    };
    let model = MlpModel::init(&spec.layers().unwrap(), 0).unwrap();
    let good = dir.path().join("m.json");
    save_mapping(&model, &good).unwrap();
    assert_eq!(load_mapping(&good).unwrap(), model);
    let bad = dir.path().join("c.json");
    Checkpoint::new(model).with_role("classifier").save(&bad).unwrap();
    assert!(load_mapping(&bad).is_err());
}

#[test]
fn pgm_output_is_readable_by_an_independent_decoder() {
    let dir = tempfile::tempdir().unwrap();
    let a = render_glyph(&GlyphParams::default()).unwrap();
    let b = render_glyph(&GlyphParams {
        smile: 0.9,
        ..GlyphParams::default()
    })
    .unwrap();
    let strip = GlyphImage::hstack(&[a.clone(), b], 1).unwrap();
    let path = dir.path().join("s.pgm");
    strip.save_pgm(&path).unwrap();
    let decoded = image::open(&path).unwrap().into_luma8();
    assert_eq!((decoded.width(), decoded.height()), (65, 32));
    for r in 0..32 {
        for c in 0..32 {
            let expected = (a.get(r, c) * 255.0).round() as u8;
            assert_eq!(decoded.get_pixel(c as u32, r as u32).0[0], expected);
        }
        assert_eq!(decoded.get_pixel(32, r as u32).0[0], 255);
    }
    let reparsed = parse_pgm(&fs::read_to_string(&path).unwrap()).unwrap();
    assert!(reparsed.mse(&strip).unwrap() < 1e-5);
}
