use alloc::vec::Vec;

use super::{JointPositions, MotionClip, MotionError, Pose, Skeleton};
use crate::math::{best_fit_rotation, Quat, Vec3};

const MIN_BONE: f64 = 1e-9;

/// Convert captured world joint positions into a local-rotation animation.
///
/// Each joint's rotation aligns the rest directions of its child bones with
/// the observed parent-to-child directions, expressed in the parent's solved
/// frame. A joint with one child uses the shortest-arc rotation, so twist
/// about the bone axis is zero (point data cannot observe it). A joint with
/// several non-collinear children takes the least-squares rotation over all
/// child directions, which is exact whenever the input was produced by
/// forward kinematics. Leaves and end sites keep identity rotations.
///
/// Bone lengths come from `topology`; only directions are taken from the
/// input, so FK of the result reproduces the input up to bone-length
/// rescaling.
pub fn positions_to_local_rotations(
    topology: &Skeleton,
    sequence: &[JointPositions],
    frame_time: f64,
) -> Result<MotionClip, MotionError> {
    if sequence.is_empty() {
        return Err(MotionError::EmptyClip);
    }
    let n = topology.len();
    let rest_dirs: Vec<Option<Vec3>> = topology
        .joints()
        .iter()
        .map(|j| {
            if j.end_site || j.parent.is_none() {
                None
            } else {
                Some(j.offset.normalize())
            }
        })
        .collect();
    // joints whose solved children all point the same way
    let collinear: Vec<bool> = (0..n)
        .map(|j| {
            let dirs: Vec<Vec3> = topology
                .children(j)
                .iter()
                .filter_map(|&c| rest_dirs[c])
                .collect();
            dirs.iter()
                .all(|d| dirs.iter().all(|e| d.cross(*e).norm() < 1e-6))
        })
        .collect();

    let mut frames = Vec::with_capacity(sequence.len());
    let mut world = alloc::vec![Quat::IDENTITY; n];
    let mut pairs: Vec<(Vec3, Vec3)> = Vec::new();
    for (f, positions) in sequence.iter().enumerate() {
        if positions.len() != n {
            return Err(MotionError::JointCount {
                frame: f,
                expected: n,
                found: positions.len(),
            });
        }
        if let Some(j) = positions.iter().position(|p| !p.is_finite()) {
            return Err(MotionError::InvalidPose {
                frame: f,
                joint: topology.joint(j).name.clone(),
                reason: "non-finite position",
            });
        }
        let mut pose = Pose::identity(n);
        pose.root_translation = positions[0];
        for j in 0..n {
            let joint = topology.joint(j);
            let parent_world = joint.parent.map_or(Quat::IDENTITY, |p| world[p]);
            if joint.end_site {
                world[j] = parent_world;
                continue;
            }
            let inv_parent = parent_world.conjugate();
            pairs.clear();
            for &c in topology.children(j) {
                let Some(rest) = rest_dirs[c] else { continue };
                let observed = positions[c] - positions[j];
                let Some(dir) = observed.try_normalize(MIN_BONE) else {
                    return Err(MotionError::DegenerateBone {
                        frame: f,
                        joint: topology.joint(c).name.clone(),
                    });
                };
                pairs.push((rest, inv_parent.rotate(dir)));
            }
            let local = match pairs.len() {
                0 => Quat::IDENTITY,
                1 => Quat::shortest_arc(pairs[0].0, pairs[0].1),
                _ if collinear[j] => Quat::shortest_arc(pairs[0].0, pairs[0].1),
                _ => best_fit_rotation(&pairs),
            };
            pose.rotations[j] = local;
            world[j] = parent_world * local;
        }
        frames.push(pose);
    }
    MotionClip::new(topology.clone(), frame_time, frames)
}
