use whatif_core::{classify, compute_cam, decode_image, ModelGraph, TensorF32};
use whatif_testkit::{fixtures_dir, toy_model_path};

fn expected() -> serde_json::Value {
    let text = std::fs::read_to_string(fixtures_dir().join("toy/expected.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn floats(v: &serde_json::Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn toy_model_forward_on_zeros_matches_reference() {
    let graph = ModelGraph::load_path(&toy_model_path()).unwrap();
    assert_eq!(graph.num_classes(), 10);
    let out = graph.forward(&TensorF32::zeros(vec![1, 3, 32, 32])).unwrap();
    let exp = expected();
    for (got, want) in out.logits.iter().zip(floats(&exp["zeros"]["logits"])) {
        assert!((*got as f64 - want).abs() < 1e-5, "{got} vs {want}");
    }
    for (got, want) in out.probabilities.iter().zip(floats(&exp["zeros"]["probabilities"])) {
        assert!((*got as f64 - want).abs() < 1e-5, "{got} vs {want}");
    }
}

#[test]
fn toy_model_classifies_fixture_image_like_reference() {
    let graph = ModelGraph::load_path(&toy_model_path()).unwrap();
    let img = decode_image(&std::fs::read(fixtures_dir().join("toy/image.png")).unwrap()).unwrap();
    let scores = classify(&graph, &img, 5).unwrap();
    let exp = expected();
    let top5: Vec<usize> = exp["image"]["top5"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap() as usize)
        .collect();
    let got: Vec<usize> = scores.topk.iter().map(|c| c.class_id).collect();
    assert_eq!(got, top5);
    for (got, want) in scores.distribution.iter().zip(floats(&exp["image"]["probabilities"])) {
        assert!((*got as f64 - want).abs() < 1e-5);
    }
    let sum: f64 = scores.distribution.iter().map(|&p| p as f64).sum();
    assert!((sum - 1.0).abs() < 1e-5);
    assert_eq!(scores.topk[0].label, graph.labels()[top5[0]]);

    let k1 = classify(&graph, &img, 1).unwrap();
    assert_eq!(k1.topk.len(), 1);
    assert!(classify(&graph, &img, 0).is_err());
}

#[test]
fn toy_model_cam_matches_reference_class_maps() {
    let graph = ModelGraph::load_path(&toy_model_path()).unwrap();
    let img = decode_image(&std::fs::read(fixtures_dir().join("toy/image.png")).unwrap()).unwrap();
    let exp = expected();
    let maps = exp["image"]["conv10"].as_array().unwrap();
    for (class_id, map) in maps.iter().enumerate() {
        let cam = compute_cam(&graph, &img, class_id).unwrap();
        let want: Vec<f64> = map.as_array().unwrap().iter().flat_map(floats).collect();
        assert_eq!(cam.raw.len(), want.len());
        for (g, w) in cam.raw.iter().zip(&want) {
            assert!((*g as f64 - w).abs() < 1e-5);
        }
        assert!((cam.raw_mean() - cam.logit as f64).abs() < 1e-4);
        assert_eq!(cam.upsampled.dims(), img.dims());
    }
    assert!(compute_cam(&graph, &img, 10).is_err());
}

#[test]
fn forward_is_bit_stable() {
    let graph = ModelGraph::load_path(&toy_model_path()).unwrap();
    let img = decode_image(&std::fs::read(fixtures_dir().join("toy/image.png")).unwrap()).unwrap();
    let a = graph.forward_image(&img).unwrap();
    let b = graph.forward_image(&img).unwrap();
    assert_eq!(a.probabilities, b.probabilities);
    assert_eq!(a.class_maps, b.class_maps);
}

#[test]
fn constant_class_map_gives_flat_cam() {
    // 1x1 conv with zero weights and bias 2.0 on every channel
    let (manifest, mut blobs) = whatif_testkit::random_cam_model(3, 4);
    let mut m: serde_json::Value = serde_json::from_slice(&manifest).unwrap();
    let last_conv = m["layers"]
        .as_array()
        .unwrap()
        .iter()
        .find(|l| l["name"] == "final")
        .unwrap()
        .clone();
    let wshape: Vec<usize> = last_conv["weight"]["shape"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap() as usize)
        .collect();
    blobs.insert("final.w".into(), vec![0u8; wshape.iter().product::<usize>() * 4]);
    blobs.insert("final.b".into(), whatif_testkit::le_bytes(&[2.0; 4]));
    m["name"] = "flat".into();
    let graph = whatif_core::load_model(&serde_json::to_vec(&m).unwrap(), &blobs).unwrap();
    let img = whatif_core::ImageBuffer::filled(10, 10, 3, 0.3);
    let cam = compute_cam(&graph, &img, 2).unwrap();
    assert!(cam.raw.iter().all(|&v| v == 2.0));
    assert_eq!(cam.logit, 2.0);
    assert!(cam.normalized.iter().all(|&v| v == 0.0));
}
