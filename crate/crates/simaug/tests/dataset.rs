use simaug::config::parse_config;
use simaug::core::learn::{subsample_indices, FeatureConfig};
use simaug::dataset::{
    clip_features, generate, record_features, regenerate, MANIFEST, PARTIAL_MANIFEST,
};
use simaug::formats::read_manifest;

const CONFIG: &str = "seed = 12\nclasses = wave, kick\nvideos_per_class = 2\nframe_count = 12\n";

#[test]
fn features_from_disk_match_a_fresh_render() {
    let tmp = tempfile::tempdir().unwrap();
    let config = parse_config(CONFIG, tmp.path()).unwrap();
    let records = generate(&config, tmp.path()).unwrap();
    assert_eq!(records, read_manifest(&tmp.path().join(MANIFEST)).unwrap());
    let fc = FeatureConfig::default();
    for r in &records {
        let (_, clip) = regenerate(tmp.path(), &r.video_id).unwrap();
        let idx = subsample_indices(r.frame_count, fc.frames);
        let picked = simaug::core::render::RenderedClip {
            indices: idx.clone(),
            frames: idx.iter().map(|&i| clip.frames[i].clone()).collect(),
            groundtruth: clip.groundtruth.clone(),
            camera: clip.camera.clone(),
        };
        assert_eq!(
            record_features(tmp.path(), r, &fc).unwrap(),
            clip_features(&picked, &fc).unwrap()
        );
    }
}

#[test]
fn a_failed_video_leaves_a_partial_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let config = parse_config(CONFIG, tmp.path()).unwrap();
    // a file where the third video's directory should go
    std::fs::create_dir_all(tmp.path().join("videos")).unwrap();
    std::fs::write(tmp.path().join("videos/syn00002"), b"").unwrap();
    let err = generate(&config, tmp.path()).unwrap_err();
    assert!(format!("{err:#}").contains("syn00002"), "{err:#}");
    assert!(!tmp.path().join(MANIFEST).exists());
    let partial = read_manifest(&tmp.path().join(PARTIAL_MANIFEST)).unwrap();
    let ids: Vec<&str> = partial.iter().map(|r| r.video_id.as_str()).collect();
    assert_eq!(ids, ["syn00000", "syn00001"]);
}

#[test]
fn regenerating_an_unknown_video_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let config = parse_config(
        "seed = 1\nclasses = wave\nvideos_per_class = 1\nframe_count = 8\n",
        tmp.path(),
    )
    .unwrap();
    generate(&config, tmp.path()).unwrap();
    let err = regenerate(tmp.path(), "syn99999").unwrap_err();
    assert!(format!("{err:#}").contains("not in the manifest"));
}
