//! Skeletal motion: topology, poses, forward kinematics, BVH text I/O and
//! conversion of captured joint positions into local-rotation animation.
//!
//! Conventions: right-handed, Y-up, meters. Rotations are unit quaternions
//! internally; Euler angles only appear at the BVH boundary.

mod bvh;
mod euler;
mod retarget;
mod skeleton;
mod solve;

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{Quat, Vec3};

pub use bvh::{
    clip_difference, parse_bvh, parse_bvh_bytes, write_bvh, BvhError, BvhErrorKind, Channel,
};
pub use euler::{euler_to_quat, quat_to_euler_zxy};
pub use retarget::rescale_to_topology;
pub use skeleton::{Joint, Skeleton, KINECT25_JOINTS};
pub use solve::positions_to_local_rotations;

/// Per-joint world positions, in joint order.
pub type JointPositions = Vec<Vec3>;

/// Tolerance on `|q| - 1` for rotations accepted into a clip.
pub const UNIT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MotionError {
    #[error("invalid topology: {0}")]
    Topology(String),
    #[error(transparent)]
    Bvh(#[from] BvhError),
    #[error("frame {frame}, joint {joint:?}: {reason}")]
    InvalidPose {
        frame: usize,
        joint: String,
        reason: &'static str,
    },
    #[error("frame {frame}: expected {expected} joints, found {found}")]
    JointCount {
        frame: usize,
        expected: usize,
        found: usize,
    },
    #[error("frame {frame}, joint {joint:?}: joint coincides with its parent")]
    DegenerateBone { frame: usize, joint: String },
    #[error("topology mismatch at joint {index}: expected {expected:?}, found {found:?}")]
    TopologyMismatch {
        index: usize,
        expected: String,
        found: String,
    },
    #[error("clip has no frames")]
    EmptyClip,
    #[error("frame time must be positive and finite, got {0}")]
    FrameTime(f64),
}

/// Root placement and per-joint local rotations for one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    /// World position of the root joint.
    pub root_translation: Vec3,
    /// Rotation of each joint relative to its parent's frame.
    pub rotations: Vec<Quat>,
}

impl Pose {
    pub fn identity(joint_count: usize) -> Pose {
        Pose {
            root_translation: Vec3::ZERO,
            rotations: alloc::vec![Quat::IDENTITY; joint_count],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionClip {
    pub topology: Skeleton,
    /// Seconds per frame.
    pub frame_time: f64,
    pub frames: Vec<Pose>,
}

impl MotionClip {
    pub fn new(
        topology: Skeleton,
        frame_time: f64,
        frames: Vec<Pose>,
    ) -> Result<Self, MotionError> {
        let clip = MotionClip {
            topology,
            frame_time,
            frames,
        };
        clip.validate()?;
        Ok(clip)
    }

    pub fn validate(&self) -> Result<(), MotionError> {
        if !(self.frame_time > 0.0 && self.frame_time.is_finite()) {
            return Err(MotionError::FrameTime(self.frame_time));
        }
        if self.frames.is_empty() {
            return Err(MotionError::EmptyClip);
        }
        for (f, pose) in self.frames.iter().enumerate() {
            validate_pose(&self.topology, pose, f)?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Duration covered by the frames, in seconds.
    pub fn duration(&self) -> f64 {
        self.frames.len() as f64 * self.frame_time
    }
}

pub(crate) fn validate_pose(
    topology: &Skeleton,
    pose: &Pose,
    frame: usize,
) -> Result<(), MotionError> {
    if pose.rotations.len() != topology.len() {
        return Err(MotionError::JointCount {
            frame,
            expected: topology.len(),
            found: pose.rotations.len(),
        });
    }
    if !pose.root_translation.is_finite() {
        return Err(MotionError::InvalidPose {
            frame,
            joint: topology.joint(0).name.clone(),
            reason: "non-finite root translation",
        });
    }
    for (j, q) in pose.rotations.iter().enumerate() {
        if !q.is_finite() {
            return Err(MotionError::InvalidPose {
                frame,
                joint: topology.joint(j).name.clone(),
                reason: "non-finite rotation",
            });
        }
        if (q.norm() - 1.0).abs() > UNIT_TOLERANCE {
            return Err(MotionError::InvalidPose {
                frame,
                joint: topology.joint(j).name.clone(),
                reason: "rotation is not a unit quaternion",
            });
        }
    }
    Ok(())
}

/// World rotation and position of every joint.
///
/// The root is placed at `pose.root_translation` with rotation
/// `pose.rotations[0]`; every other joint sits at its parent's world transform
/// applied to its rest offset, and composes its local rotation after the
/// parent's.
///
/// # Panics
/// If the pose does not have one rotation per joint.
pub fn world_transforms(topology: &Skeleton, pose: &Pose) -> (Vec<Quat>, Vec<Vec3>) {
    assert_eq!(
        pose.rotations.len(),
        topology.len(),
        "pose does not match topology"
    );
    let n = topology.len();
    let mut rot: Vec<Quat> = Vec::with_capacity(n);
    let mut pos: Vec<Vec3> = Vec::with_capacity(n);
    for (i, joint) in topology.joints().iter().enumerate() {
        match joint.parent {
            None => {
                rot.push(pose.rotations[i]);
                pos.push(pose.root_translation);
            }
            Some(p) => {
                pos.push(pos[p] + rot[p].rotate(joint.offset));
                rot.push(rot[p] * pose.rotations[i]);
            }
        }
    }
    (rot, pos)
}

/// World position of every joint for one pose.
pub fn forward_kinematics(topology: &Skeleton, pose: &Pose) -> JointPositions {
    world_transforms(topology, pose).1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::PI;
    use crate::rng::RngStream;
    use alloc::vec;
    use proptest::prelude::*;

    fn chain() -> Skeleton {
        Skeleton::new(vec![
            Joint::new("root", None, Vec3::ZERO),
            Joint::new("a", Some(0), Vec3::new(0.0, 0.5, 0.0)),
            Joint::new("b", Some(1), Vec3::new(0.3, 0.2, 0.0)),
            Joint::new("c", Some(0), Vec3::new(-0.2, -0.4, 0.1)),
        ])
        .unwrap()
    }

    pub(crate) fn random_quat(rng: &mut RngStream) -> Quat {
        Quat::new(rng.normal(), rng.normal(), rng.normal(), rng.normal()).normalize()
    }

    #[test]
    fn identity_pose_sums_offsets() {
        let s = chain();
        let p = forward_kinematics(&s, &Pose::identity(s.len()));
        assert_eq!(p[0], Vec3::ZERO);
        assert_eq!(p[1], Vec3::new(0.0, 0.5, 0.0));
        assert_eq!(p[2], Vec3::new(0.3, 0.7, 0.0));
        assert_eq!(p[3], Vec3::new(-0.2, -0.4, 0.1));
    }

    #[test]
    fn root_yaw_matches_rotation_matrix() {
        let l = 1.7;
        let s = Skeleton::new(vec![
            Joint::new("root", None, Vec3::ZERO),
            Joint::new("child", Some(0), Vec3::new(l, 0.0, 0.0)),
        ])
        .unwrap();
        let mut pose = Pose::identity(2);
        pose.rotations[0] = Quat::rot_y(PI / 2.0);
        let p = forward_kinematics(&s, &pose);
        // Ry(90) = [[0,0,1],[0,1,0],[-1,0,0]] applied to (L,0,0) by hand
        let expected = Vec3::new(0.0, 0.0, -l);
        assert!((p[1] - expected).norm() < 1e-12, "{:?}", p[1]);
    }

    #[test]
    fn validate_rejects_nan() {
        let s = chain();
        let mut pose = Pose::identity(s.len());
        pose.rotations[2].x = f64::NAN;
        let err = MotionClip::new(s, 1.0 / 30.0, vec![pose]).unwrap_err();
        assert!(
            matches!(err, MotionError::InvalidPose { frame: 0, ref joint, .. } if joint == "b")
        );
    }

    proptest! {
        #[test]
        fn fk_preserves_bone_lengths(seed in any::<u64>()) {
            let s = chain();
            let mut rng = RngStream::new(seed, 3);
            let pose = Pose {
                root_translation: Vec3::new(rng.normal(), rng.normal(), rng.normal()),
                rotations: (0..s.len()).map(|_| random_quat(&mut rng)).collect(),
            };
            let p = forward_kinematics(&s, &pose);
            for (i, j) in s.joints().iter().enumerate().skip(1) {
                let len = (p[i] - p[j.parent.unwrap()]).norm();
                let rest = j.offset.norm();
                prop_assert!((len - rest).abs() <= 1e-6 * rest);
            }
        }

        #[test]
        fn fk_is_rigid_equivariant(seed in any::<u64>()) {
            let s = chain();
            let mut rng = RngStream::new(seed, 4);
            let pose = Pose {
                root_translation: Vec3::new(rng.normal(), rng.normal(), rng.normal()),
                rotations: (0..s.len()).map(|_| random_quat(&mut rng)).collect(),
            };
            let r = random_quat(&mut rng);
            let t = Vec3::new(rng.normal(), rng.normal(), rng.normal());
            let mut moved = pose.clone();
            moved.rotations[0] = r * pose.rotations[0];
            moved.root_translation = r.rotate(pose.root_translation) + t;
            let a = forward_kinematics(&s, &pose);
            let b = forward_kinematics(&s, &moved);
            for (pa, pb) in a.iter().zip(&b) {
                let expect = r.rotate(*pa) + t;
                prop_assert!((expect.x - pb.x).abs() <= 1e-9);
                prop_assert!((expect.y - pb.y).abs() <= 1e-9);
                prop_assert!((expect.z - pb.z).abs() <= 1e-9);
            }
        }
    }
}
