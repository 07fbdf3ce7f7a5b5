use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::GenError;
use crate::math::{sin, to_radians, Quat, Vec3, PI};
use crate::motion::{MotionClip, Pose, Skeleton};
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedClip {
    pub id: String,
    pub clip: MotionClip,
}

/// Motion clips grouped by action label.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MotionLibrary {
    actions: BTreeMap<String, Vec<NamedClip>>,
}

impl MotionLibrary {
    pub fn new(actions: BTreeMap<String, Vec<NamedClip>>) -> Result<Self, GenError> {
        for (action, clips) in &actions {
            if clips.is_empty() {
                return Err(GenError::EmptyAction(action.clone()));
            }
            for c in clips {
                c.clip.validate()?;
            }
        }
        Ok(MotionLibrary { actions })
    }

    pub fn insert(&mut self, action: &str, clip: NamedClip) -> Result<(), GenError> {
        clip.clip.validate()?;
        self.actions
            .entry(action.to_string())
            .or_default()
            .push(clip);
        Ok(())
    }

    pub fn actions(&self) -> impl Iterator<Item = &str> {
        self.actions.keys().map(String::as_str)
    }

    pub fn clips(&self, action: &str) -> Option<&[NamedClip]> {
        self.actions.get(action).map(Vec::as_slice)
    }

    pub fn contains(&self, action: &str) -> bool {
        self.actions.contains_key(action)
    }

    fn available(&self) -> String {
        self.actions().collect::<Vec<_>>().join(", ")
    }

    pub(crate) fn unknown(&self, action: &str) -> GenError {
        GenError::UnknownAction {
            action: action.to_string(),
            available: self.available(),
        }
    }
}

/// Uniform draw over the clips recorded for `action`.
pub fn sample_motion<'a>(
    library: &'a MotionLibrary,
    action: &str,
    rng: &mut RngStream,
) -> Result<&'a NamedClip, GenError> {
    let clips = library
        .clips(action)
        .ok_or_else(|| library.unknown(action))?;
    Ok(&clips[rng.index(clips.len())])
}

/// Actions available from [`procedural_library`].
pub const PROCEDURAL_ACTIONS: [&str; 6] = ["bow", "jump", "kick", "punch", "squat", "wave"];

struct Rig {
    topo: Skeleton,
    idx: BTreeMap<&'static str, usize>,
    stand: f64,
}

impl Rig {
    fn new() -> Rig {
        let topo = Skeleton::kinect25();
        let mut idx = BTreeMap::new();
        for &(name, _, _) in crate::motion::KINECT25_JOINTS.iter() {
            idx.insert(name, topo.index_of(name).expect("template joint"));
        }
        let stand = -topo
            .rest_positions()
            .iter()
            .map(|p| p.y)
            .fold(0.0, f64::min);
        Rig { topo, idx, stand }
    }

    fn set(&self, pose: &mut Pose, joint: &str, q: Quat) {
        pose.rotations[self.idx[joint]] = q;
    }
}

/// Per-clip variation of a procedural action.
struct Style {
    amplitude: f64,
    cycles: f64,
    /// +1 or -1: which side leads.
    side: f64,
    sway: f64,
    phase: f64,
}

fn deg(x: f64) -> f64 {
    to_radians(x)
}

fn pose_at(rig: &Rig, action: &str, style: &Style, t: f64) -> Pose {
    let mut pose = Pose::identity(rig.topo.len());
    let mut root = Vec3::new(0.0, rig.stand, 0.0);
    let a = style.amplitude;
    let w = 2.0 * PI * (style.cycles * t + style.phase);
    let osc = sin(w);
    let pulse = 0.5 - 0.5 * crate::math::cos(w);
    // lead side: +1 means the figure's left (+X)
    let (lead, trail) = if style.side > 0.0 {
        ("Left", "Right")
    } else {
        ("Right", "Left")
    };
    let s = style.side;
    let j = |p: &str, side: &str| -> String { format!("{p}{side}") };
    let sway = Quat::rot_y(deg(style.sway) * sin(2.0 * PI * t));
    match action {
        "wave" => {
            rig.set(
                &mut pose,
                &j("Shoulder", lead),
                Quat::rot_z(s * deg(140.0 * a)),
            );
            rig.set(
                &mut pose,
                &j("Elbow", lead),
                Quat::rot_z(s * deg(35.0 * a * osc)),
            );
            rig.set(&mut pose, &j("Shoulder", trail), Quat::rot_z(-s * deg(8.0)));
        }
        "punch" => {
            let left = pulse;
            let right = 1.0 - pulse;
            for (side, e) in [("Left", left), ("Right", right)] {
                rig.set(
                    &mut pose,
                    &j("Shoulder", side),
                    Quat::rot_x(-deg(90.0 * a * e + 20.0)),
                );
                rig.set(
                    &mut pose,
                    &j("Elbow", side),
                    Quat::rot_x(-deg(100.0 * (1.0 - e))),
                );
            }
            rig.set(
                &mut pose,
                "SpineMid",
                Quat::rot_y(deg(15.0 * a * (left - right))),
            );
        }
        "kick" => {
            rig.set(
                &mut pose,
                &j("Hip", lead),
                Quat::rot_x(-deg(75.0 * a * pulse)),
            );
            rig.set(
                &mut pose,
                &j("Knee", lead),
                Quat::rot_x(deg(60.0 * (1.0 - pulse) * pulse * 4.0)),
            );
            rig.set(&mut pose, "SpineMid", Quat::rot_x(-deg(10.0 * pulse)));
            for side in ["Left", "Right"] {
                rig.set(
                    &mut pose,
                    &j("Shoulder", side),
                    Quat::rot_z(if side == "Left" {
                        deg(25.0)
                    } else {
                        -deg(25.0)
                    }),
                );
            }
        }
        "squat" => {
            let d = 80.0 * a * pulse;
            for side in ["Left", "Right"] {
                rig.set(&mut pose, &j("Hip", side), Quat::rot_x(-deg(d)));
                rig.set(&mut pose, &j("Knee", side), Quat::rot_x(deg(2.0 * d)));
                rig.set(&mut pose, &j("Ankle", side), Quat::rot_x(-deg(d)));
                rig.set(
                    &mut pose,
                    &j("Shoulder", side),
                    Quat::rot_x(-deg(80.0 * pulse)),
                );
            }
            rig.set(&mut pose, "SpineMid", Quat::rot_x(deg(0.4 * d)));
            // thigh and shin of 0.42 and 0.40 m folding by d degrees
            let c = crate::math::cos(deg(d));
            root.y -= (0.42 + 0.40) * (1.0 - c);
        }
        "jump" => {
            let air = sin(w).max(0.0);
            let crouch = (-sin(w)).max(0.0);
            root.y += 0.35 * a * air - 0.12 * crouch;
            for side in ["Left", "Right"] {
                let out = if side == "Left" { 1.0 } else { -1.0 };
                rig.set(&mut pose, &j("Hip", side), Quat::rot_x(-deg(30.0 * crouch)));
                rig.set(
                    &mut pose,
                    &j("Knee", side),
                    Quat::rot_x(deg(60.0 * crouch + 20.0 * air)),
                );
                rig.set(
                    &mut pose,
                    &j("Shoulder", side),
                    Quat::rot_z(out * deg(150.0 * a * air)),
                );
            }
        }
        "bow" => {
            let d = 65.0 * a * pulse;
            rig.set(&mut pose, "SpineMid", Quat::rot_x(deg(d * 0.6)));
            rig.set(&mut pose, "SpineShoulder", Quat::rot_x(deg(d * 0.4)));
            rig.set(&mut pose, "Neck", Quat::rot_x(deg(d * 0.2)));
            for side in ["Left", "Right"] {
                rig.set(&mut pose, &j("Shoulder", side), Quat::rot_x(-deg(d * 0.5)));
            }
        }
        _ => {}
    }
    pose.rotations[0] = sway;
    pose.root_translation = root;
    pose
}

/// Six synthetic actions on the built-in humanoid, `variants` clips each.
/// Variants differ in amplitude, speed, leading side, phase and body sway;
/// they are a deterministic function of `seed`.
pub fn procedural_library(variants: usize, seed: u64) -> MotionLibrary {
    let rig = Rig::new();
    let mut actions = BTreeMap::new();
    for (k, &action) in PROCEDURAL_ACTIONS.iter().enumerate() {
        let mut clips = Vec::with_capacity(variants);
        for v in 0..variants {
            let mut rng = RngStream::new(seed, (k * 1000 + v) as u64);
            let style = Style {
                amplitude: rng.uniform(0.75, 1.2),
                cycles: rng.uniform(1.0, 2.0),
                side: if rng.index(2) == 0 { 1.0 } else { -1.0 },
                sway: rng.uniform(-20.0, 20.0),
                phase: rng.uniform(0.0, 1.0),
            };
            let frames = 40 + rng.index(25);
            let poses = (0..frames)
                .map(|f| pose_at(&rig, action, &style, f as f64 / frames as f64))
                .collect();
            let clip = MotionClip::new(rig.topo.clone(), 1.0 / 30.0, poses)
                .expect("procedural poses are valid");
            clips.push(NamedClip {
                id: format!("{action}_{v:02}"),
                clip,
            });
        }
        actions.insert(action.to_string(), clips);
    }
    MotionLibrary { actions }
}
