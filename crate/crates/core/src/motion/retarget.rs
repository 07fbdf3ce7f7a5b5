use alloc::string::String;

use super::{MotionClip, MotionError, Skeleton};

/// Drive a differently proportioned skeleton with the same motion.
///
/// Rotations are copied; the root trajectory is scaled by the ratio of the
/// target's rest height to the source's. `target` must have the same joint
/// names, order, parents and end-site flags as the clip's topology.
pub fn rescale_to_topology(
    clip: &MotionClip,
    target: &Skeleton,
) -> Result<MotionClip, MotionError> {
    let source = &clip.topology;
    let n = source.len().max(target.len());
    for i in 0..n {
        let (a, b) = (source.joints().get(i), target.joints().get(i));
        let same = match (a, b) {
            (Some(a), Some(b)) => {
                a.name == b.name && a.parent == b.parent && a.end_site == b.end_site
            }
            _ => false,
        };
        if !same {
            let name = |j: Option<&super::Joint>| {
                j.map_or_else(|| String::from("<none>"), |j| j.name.clone())
            };
            return Err(MotionError::TopologyMismatch {
                index: i,
                expected: name(a),
                found: name(b),
            });
        }
    }
    let (hs, ht) = (source.height(), target.height());
    if !(hs > 0.0 && ht > 0.0) {
        return Err(MotionError::Topology(String::from(
            "skeleton height must be positive to rescale",
        )));
    }
    let ratio = ht / hs;
    let mut out = clip.clone();
    out.topology = target.clone();
    for pose in out.frames.iter_mut() {
        pose.root_translation = pose.root_translation * ratio;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{Quat, Vec3};
    use crate::motion::{forward_kinematics, Joint, Pose};
    use alloc::vec;
    use alloc::vec::Vec;

    fn clip() -> MotionClip {
        let topo = Skeleton::kinect25();
        let mut pose = Pose::identity(topo.len());
        pose.root_translation = Vec3::new(0.2, 0.93, -0.4);
        pose.rotations[5] = Quat::rot_z(0.7);
        pose.rotations[18] = Quat::rot_x(-0.4);
        MotionClip::new(topo, 1.0 / 30.0, vec![pose]).unwrap()
    }

    #[test]
    fn identical_target_is_identity() {
        let c = clip();
        assert_eq!(rescale_to_topology(&c, &c.topology).unwrap(), c);
    }

    #[test]
    fn doubled_offsets_double_positions() {
        let c = clip();
        let doubled: Vec<Vec3> = c.topology.offsets().iter().map(|o| *o * 2.0).collect();
        let target = c.topology.with_offsets(&doubled).unwrap();
        let out = rescale_to_topology(&c, &target).unwrap();
        assert_eq!(
            out.frames[0].root_translation,
            c.frames[0].root_translation * 2.0
        );
        let a = forward_kinematics(&c.topology, &c.frames[0]);
        let b = forward_kinematics(&target, &out.frames[0]);
        for (pa, pb) in a.iter().zip(&b) {
            assert!((*pa * 2.0 - *pb).norm() < 1e-12);
        }
    }

    #[test]
    fn renamed_joint_is_reported() {
        let c = clip();
        let mut joints: Vec<Joint> = c.topology.joints().to_vec();
        joints[7].name = "Wrist_L".into();
        let target = Skeleton::new(joints).unwrap();
        match rescale_to_topology(&c, &target) {
            Err(MotionError::TopologyMismatch {
                index: 7, found, ..
            }) => assert_eq!(found, "Wrist_L"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
