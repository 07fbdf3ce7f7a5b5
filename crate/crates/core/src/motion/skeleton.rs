use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::MotionError;
use crate::math::Vec3;

/// One joint of a skeleton. `offset` is the rest position relative to the
/// parent joint, in meters, expressed in the parent's frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Joint {
    pub name: String,
    pub parent: Option<usize>,
    pub offset: Vec3,
    /// BVH "End Site" marker: no channels, never solved, always a leaf.
    pub end_site: bool,
}

impl Joint {
    pub fn new(name: &str, parent: Option<usize>, offset: Vec3) -> Self {
        Joint {
            name: name.to_string(),
            parent,
            offset,
            end_site: false,
        }
    }

    pub fn end_site(name: &str, parent: usize, offset: Vec3) -> Self {
        Joint {
            name: name.to_string(),
            parent: Some(parent),
            offset,
            end_site: true,
        }
    }
}

/// Joint hierarchy in topological order (every parent precedes its children).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Joint>", into = "Vec<Joint>")]
pub struct Skeleton {
    joints: Vec<Joint>,
    #[serde(skip)]
    children: Vec<Vec<usize>>,
}

impl TryFrom<Vec<Joint>> for Skeleton {
    type Error = MotionError;
    fn try_from(joints: Vec<Joint>) -> Result<Self, Self::Error> {
        Skeleton::new(joints)
    }
}

impl From<Skeleton> for Vec<Joint> {
    fn from(s: Skeleton) -> Self {
        s.joints
    }
}

impl Skeleton {
    pub fn new(joints: Vec<Joint>) -> Result<Self, MotionError> {
        if joints.is_empty() {
            return Err(MotionError::Topology("skeleton has no joints".into()));
        }
        if joints[0].parent.is_some() {
            return Err(MotionError::Topology("first joint must be the root".into()));
        }
        let mut children = vec![Vec::new(); joints.len()];
        for (i, j) in joints.iter().enumerate() {
            if !j.offset.is_finite() {
                return Err(MotionError::Topology(format!(
                    "joint {:?} has a non-finite offset",
                    j.name
                )));
            }
            if joints[..i].iter().any(|k| k.name == j.name) {
                return Err(MotionError::Topology(format!(
                    "duplicate joint name {:?}",
                    j.name
                )));
            }
            match j.parent {
                None if i > 0 => {
                    return Err(MotionError::Topology(format!("second root {:?}", j.name)));
                }
                None => {
                    if j.end_site {
                        return Err(MotionError::Topology("root cannot be an end site".into()));
                    }
                }
                Some(p) => {
                    if p >= i {
                        return Err(MotionError::Topology(format!(
                            "joint {:?} references parent {p} which does not precede it",
                            j.name
                        )));
                    }
                    if joints[p].end_site {
                        return Err(MotionError::Topology(format!(
                            "end site {:?} cannot have children",
                            joints[p].name
                        )));
                    }
                    if !j.end_site && j.offset.norm() <= 0.0 {
                        return Err(MotionError::Topology(format!(
                            "joint {:?} has a zero-length rest offset",
                            j.name
                        )));
                    }
                    children[p].push(i);
                }
            }
        }
        Ok(Skeleton { joints, children })
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn len(&self) -> usize {
        self.joints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joints.is_empty()
    }

    pub fn joint(&self, i: usize) -> &Joint {
        &self.joints[i]
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.name == name)
    }

    pub fn offsets(&self) -> Vec<Vec3> {
        self.joints.iter().map(|j| j.offset).collect()
    }

    /// Same hierarchy with new rest offsets.
    pub fn with_offsets(&self, offsets: &[Vec3]) -> Result<Skeleton, MotionError> {
        if offsets.len() != self.len() {
            return Err(MotionError::Topology(format!(
                "expected {} offsets, got {}",
                self.len(),
                offsets.len()
            )));
        }
        let joints = self
            .joints
            .iter()
            .zip(offsets)
            .map(|(j, &o)| Joint {
                offset: o,
                ..j.clone()
            })
            .collect();
        Skeleton::new(joints)
    }

    /// World joint positions at rest (identity rotations, root at the origin).
    pub fn rest_positions(&self) -> Vec<Vec3> {
        let mut out: Vec<Vec3> = Vec::with_capacity(self.len());
        for j in &self.joints {
            let p = match j.parent {
                None => Vec3::ZERO,
                Some(p) => out[p] + j.offset,
            };
            out.push(p);
        }
        out
    }

    /// Vertical (Y) extent of the rest pose.
    pub fn height(&self) -> f64 {
        let ys = self.rest_positions();
        let lo = ys.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
        let hi = ys.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    }

    /// Joint index order of a depth-first walk visiting children in index order.
    pub fn depth_first_order(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.len());
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            order.push(i);
            for &c in self.children[i].iter().rev() {
                stack.push(c);
            }
        }
        order
    }

    /// Look up a built-in topology by name.
    pub fn builtin(name: &str) -> Option<Skeleton> {
        match name {
            "kinect25" => Some(Skeleton::kinect25()),
            _ => None,
        }
    }

    /// Kinect-style 25-joint humanoid, Y-up, facing +Z, about 1.63 m tall.
    ///
    /// Joint order is depth-first (see [`KINECT25_JOINTS`]); it differs from
    /// the Kinect SDK enumeration, which is not topologically sorted.
    pub fn kinect25() -> Skeleton {
        let joints = KINECT25_JOINTS
            .iter()
            .map(|&(name, parent, o)| Joint::new(name, parent, Vec3::new(o[0], o[1], o[2])))
            .collect();
        Skeleton::new(joints).expect("built-in topology is valid")
    }
}

/// Built-in humanoid template: `(name, parent, rest offset)`.
pub const KINECT25_JOINTS: [(&str, Option<usize>, [f64; 3]); 25] = [
    ("SpineBase", None, [0.0, 0.0, 0.0]),
    ("SpineMid", Some(0), [0.0, 0.25, 0.0]),
    ("SpineShoulder", Some(1), [0.0, 0.25, 0.0]),
    ("Neck", Some(2), [0.0, 0.08, 0.0]),
    ("Head", Some(3), [0.0, 0.12, 0.0]),
    ("ShoulderLeft", Some(2), [0.18, -0.03, 0.0]),
    ("ElbowLeft", Some(5), [0.02, -0.28, 0.0]),
    ("WristLeft", Some(6), [0.0, -0.25, 0.0]),
    ("HandLeft", Some(7), [0.0, -0.07, 0.0]),
    ("HandTipLeft", Some(8), [0.0, -0.08, 0.0]),
    ("ThumbLeft", Some(7), [0.0, -0.05, 0.04]),
    ("ShoulderRight", Some(2), [-0.18, -0.03, 0.0]),
    ("ElbowRight", Some(11), [-0.02, -0.28, 0.0]),
    ("WristRight", Some(12), [0.0, -0.25, 0.0]),
    ("HandRight", Some(13), [0.0, -0.07, 0.0]),
    ("HandTipRight", Some(14), [0.0, -0.08, 0.0]),
    ("ThumbRight", Some(13), [0.0, -0.05, 0.04]),
    ("HipLeft", Some(0), [0.09, -0.05, 0.0]),
    ("KneeLeft", Some(17), [0.0, -0.42, 0.0]),
    ("AnkleLeft", Some(18), [0.0, -0.40, 0.0]),
    ("FootLeft", Some(19), [0.0, -0.06, 0.12]),
    ("HipRight", Some(0), [-0.09, -0.05, 0.0]),
    ("KneeRight", Some(21), [0.0, -0.42, 0.0]),
    ("AnkleRight", Some(22), [0.0, -0.40, 0.0]),
    ("FootRight", Some(23), [0.0, -0.06, 0.12]),
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinect25_is_depth_first() {
        let s = Skeleton::kinect25();
        assert_eq!(s.depth_first_order(), (0..25).collect::<Vec<_>>());
        assert!((s.height() - 1.63).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_topologies() {
        let ok = |j: Vec<Joint>| Skeleton::new(j);
        assert!(ok(vec![]).is_err());
        assert!(ok(vec![
            Joint::new("a", None, Vec3::ZERO),
            Joint::new("a", Some(0), Vec3::X)
        ])
        .is_err());
        assert!(ok(vec![
            Joint::new("a", None, Vec3::ZERO),
            Joint::new("b", Some(1), Vec3::X)
        ])
        .is_err());
        assert!(ok(vec![
            Joint::new("a", None, Vec3::ZERO),
            Joint::new("b", Some(0), Vec3::ZERO)
        ])
        .is_err());
        assert!(ok(vec![
            Joint::new("a", None, Vec3::ZERO),
            Joint::new("b", None, Vec3::X)
        ])
        .is_err());
        // zero offset is allowed on an end-site marker
        assert!(ok(vec![
            Joint::new("a", None, Vec3::ZERO),
            Joint::end_site("a_End", 0, Vec3::ZERO)
        ])
        .is_ok());
    }
}
