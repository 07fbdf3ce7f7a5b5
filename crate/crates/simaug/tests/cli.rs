use std::path::Path;
use std::process::{Command, Output};

use simaug::core::math::Quat;
use simaug::core::motion::{forward_kinematics, parse_bvh, Pose, Skeleton};
use simaug::formats::{write_positions, PositionSequence};

fn simaug(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simaug"))
        .args(args)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn missing_config_is_a_one_line_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = simaug(&[
        "generate",
        "--config",
        s(&tmp.path().join("nope.cfg")),
        "--out",
        s(tmp.path()),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: "), "{}", stderr(&o));
}

#[test]
fn config_syntax_errors_name_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.cfg");
    std::fs::write(&cfg, "seed = 1\nclasses = wave\nvideos_per_class = two\n").unwrap();
    let o = simaug(&[
        "generate",
        "--config",
        s(&cfg),
        "--out",
        s(&tmp.path().join("out")),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn unknown_strategy_lists_the_choices() {
    let tmp = tempfile::tempdir().unwrap();
    let split = tmp.path().join("split.json");
    let o = simaug(&[
        "train",
        "--strategy",
        "magic",
        "--split",
        s(&split),
        "--out",
        s(&tmp.path().join("m")),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr(&o);
    for name in [
        "real-only",
        "synthetic-only",
        "joint",
        "finetune",
        "adversarial",
    ] {
        assert!(e.contains(name), "{e}");
    }
}

#[test]
fn bad_azimuth_band_is_rejected_by_the_parser() {
    let o = simaug(&["split", "--manifest", "m.jsonl", "--hold-azimuth", "90:10"]);
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("min < max"), "{}", stderr(&o));
}

#[test]
fn convert_motion_reproduces_captured_positions() {
    let tmp = tempfile::tempdir().unwrap();
    let topo = Skeleton::kinect25();
    let frames: Vec<_> = (0..5)
        .map(|f| {
            let mut pose = Pose::identity(topo.len());
            pose.rotations[6] = Quat::rot_x(0.3 * f as f64);
            pose.rotations[1] = Quat::rot_y(-0.2 * f as f64);
            forward_kinematics(&topo, &pose)
        })
        .collect();
    let positions = tmp.path().join("clip.txt");
    let seq = PositionSequence {
        frame_time: 1.0 / 30.0,
        frames: frames.clone(),
    };
    std::fs::write(&positions, write_positions(&seq)).unwrap();
    let out = tmp.path().join("clip.bvh");
    let o = simaug(&[
        "convert-motion",
        "--positions",
        s(&positions),
        "--topology",
        "kinect25",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let clip = parse_bvh(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(clip.len(), 5);
    for (pose, want) in clip.frames.iter().zip(&frames) {
        for (g, w) in forward_kinematics(&clip.topology, pose).iter().zip(want) {
            assert!((*g - *w).norm() < 1e-5);
        }
    }
    assert!(tmp.path().join("clip.bvh.run.json").is_file());
}

#[test]
fn unknown_topology_is_reported() {
    let o = simaug(&[
        "convert-motion",
        "--positions",
        "x",
        "--topology",
        "smpl",
        "--out",
        "y",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("kinect25"));
}

#[test]
fn split_and_regenerate_on_a_generated_dataset() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("d.cfg");
    std::fs::write(
        &cfg,
        "seed = 4\nclasses = wave, kick\nvideos_per_class = 3\nframe_count = 8\nazimuth = 0 360\nimage_format = ppm\n",
    )
    .unwrap();
    let data = tmp.path().join("data");
    assert_eq!(
        simaug(&["generate", "--config", s(&cfg), "--out", s(&data)])
            .status
            .code(),
        Some(0)
    );
    assert!(data.join("run.json").is_file());
    let manifest = data.join("manifest.jsonl");

    let o = simaug(&[
        "split",
        "--manifest",
        s(&manifest),
        "--loso",
        "no-such-scene",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("known scenes"), "{}", stderr(&o));

    let o = simaug(&[
        "split",
        "--manifest",
        s(&manifest),
        "--hold-azimuth",
        "0:180",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let split: serde_json::Value =
        serde_json::from_slice(&std::fs::read(data.join("split.json")).unwrap()).unwrap();
    let n = |k: &str| split[k].as_array().unwrap().len();
    assert_eq!(n("train") + n("test") + n("excluded"), 6);

    let again = tmp.path().join("again");
    let o = simaug(&[
        "regenerate",
        "--dataset",
        s(&data),
        "--video",
        "syn00004",
        "--out",
        s(&again),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let a = image::open(again.join("frame_00003.png"))
        .unwrap()
        .to_rgb8();
    let b = image::open(data.join("videos/syn00004/frames/frame_00003.ppm"))
        .unwrap()
        .to_rgb8();
    assert_eq!(a, b);
}
