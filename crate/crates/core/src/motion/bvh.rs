//! BVH text format.
//!
//! The parser accepts any rotation channel order per joint and position
//! channels on the root. The writer always emits
//! `Xposition Yposition Zposition Zrotation Xrotation Yrotation` for the root
//! and `Zrotation Xrotation Yrotation` for every other joint, with channel
//! values fixed to six decimals so that `write(parse(write(clip)))` is
//! byte-identical to `write(clip)`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write as _;

use thiserror::Error;

use super::euler::{euler_to_quat, quat_to_euler_zxy};
use super::{Joint, MotionClip, MotionError, Pose, Skeleton};
use crate::math::Vec3;

const MAX_DEPTH: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Xposition,
    Yposition,
    Zposition,
    Xrotation,
    Yrotation,
    Zrotation,
}

impl Channel {
    fn parse(s: &str) -> Option<Channel> {
        Some(match s {
            "Xposition" => Channel::Xposition,
            "Yposition" => Channel::Yposition,
            "Zposition" => Channel::Zposition,
            "Xrotation" => Channel::Xrotation,
            "Yrotation" => Channel::Yrotation,
            "Zrotation" => Channel::Zrotation,
            _ => return None,
        })
    }

    fn is_position(self) -> bool {
        matches!(
            self,
            Channel::Xposition | Channel::Yposition | Channel::Zposition
        )
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {kind}")]
pub struct BvhError {
    /// 1-based line number.
    pub line: usize,
    pub kind: BvhErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BvhErrorKind {
    #[error("input is not valid UTF-8")]
    Utf8,
    #[error("missing {0} section")]
    MissingSection(&'static str),
    #[error("expected {expected}, found {found:?}")]
    Unexpected {
        expected: &'static str,
        found: String,
    },
    #[error("unexpected end of input, expected {0}")]
    UnexpectedEof(&'static str),
    #[error("invalid number {0:?}")]
    InvalidNumber(String),
    #[error("unknown channel {0:?}")]
    UnknownChannel(String),
    #[error("channel {0:?} is not supported on a non-root joint")]
    UnsupportedChannel(String),
    #[error("channel {0:?} listed twice")]
    DuplicateChannel(String),
    #[error("frame row has {found} values, expected {expected}")]
    ChannelCountMismatch { expected: usize, found: usize },
    #[error("MOTION declares {declared} frames, found {found}")]
    FrameCountMismatch { declared: usize, found: usize },
    #[error("frame time must be positive, got {0}")]
    FrameTime(f64),
    #[error("hierarchy nested deeper than {MAX_DEPTH} joints")]
    TooDeep,
    #[error("{0}")]
    Topology(String),
}

fn err(line: usize, kind: BvhErrorKind) -> MotionError {
    MotionError::Bvh(BvhError { line, kind })
}

struct Tokens<'a> {
    items: Vec<(&'a str, usize)>,
    pos: usize,
    last_line: usize,
}

impl<'a> Tokens<'a> {
    fn next(&mut self, expected: &'static str) -> Result<(&'a str, usize), MotionError> {
        match self.items.get(self.pos) {
            Some(&t) => {
                self.pos += 1;
                Ok(t)
            }
            None => Err(err(self.last_line, BvhErrorKind::UnexpectedEof(expected))),
        }
    }

    fn peek(&self) -> Option<&'a str> {
        self.items.get(self.pos).map(|t| t.0)
    }

    fn expect(&mut self, word: &'static str) -> Result<usize, MotionError> {
        let (t, line) = self.next(word)?;
        if t != word {
            return Err(err(
                line,
                BvhErrorKind::Unexpected {
                    expected: word,
                    found: t.to_string(),
                },
            ));
        }
        Ok(line)
    }

    fn number(&mut self, what: &'static str) -> Result<f64, MotionError> {
        let (t, line) = self.next(what)?;
        parse_number(t, line)
    }
}

fn parse_number(t: &str, line: usize) -> Result<f64, MotionError> {
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(err(line, BvhErrorKind::InvalidNumber(t.to_string()))),
    }
}

struct JointChannels {
    joint: usize,
    channels: Vec<Channel>,
}

struct HierarchyParser<'a> {
    tokens: Tokens<'a>,
    joints: Vec<Joint>,
    channels: Vec<JointChannels>,
}

impl<'a> HierarchyParser<'a> {
    fn unique_name(&self, base: String) -> String {
        if !self.joints.iter().any(|j| j.name == base) {
            return base;
        }
        let mut k = 2;
        loop {
            let candidate = format!("{base}{k}");
            if !self.joints.iter().any(|j| j.name == candidate) {
                return candidate;
            }
            k += 1;
        }
    }

    fn offset(&mut self) -> Result<Vec3, MotionError> {
        self.tokens.expect("OFFSET")?;
        let x = self.tokens.number("offset x")?;
        let y = self.tokens.number("offset y")?;
        let z = self.tokens.number("offset z")?;
        Ok(Vec3::new(x, y, z))
    }

    fn joint(&mut self, parent: Option<usize>, depth: usize) -> Result<(), MotionError> {
        let (name, name_line) = self.tokens.next("joint name")?;
        if depth > MAX_DEPTH {
            return Err(err(name_line, BvhErrorKind::TooDeep));
        }
        if self.joints.iter().any(|j| j.name == name) {
            return Err(err(
                name_line,
                BvhErrorKind::Topology(format!("duplicate joint name {name:?}")),
            ));
        }
        self.tokens.expect("{")?;
        let offset = self.offset()?;
        let index = self.joints.len();
        self.joints.push(Joint::new(name, parent, offset));

        self.tokens.expect("CHANNELS")?;
        let (count_tok, count_line) = self.tokens.next("channel count")?;
        let count: usize = count_tok.parse().map_err(|_| {
            err(
                count_line,
                BvhErrorKind::InvalidNumber(count_tok.to_string()),
            )
        })?;
        if count > 6 {
            return Err(err(
                count_line,
                BvhErrorKind::Topology(format!("{count} channels on one joint")),
            ));
        }
        let mut channels = Vec::with_capacity(count);
        for _ in 0..count {
            let (t, line) = self.tokens.next("channel name")?;
            let c = Channel::parse(t)
                .ok_or_else(|| err(line, BvhErrorKind::UnknownChannel(t.to_string())))?;
            if c.is_position() && parent.is_some() {
                return Err(err(line, BvhErrorKind::UnsupportedChannel(t.to_string())));
            }
            if channels.contains(&c) {
                return Err(err(line, BvhErrorKind::DuplicateChannel(t.to_string())));
            }
            channels.push(c);
        }
        self.channels.push(JointChannels {
            joint: index,
            channels,
        });

        loop {
            let (t, line) = self.tokens.next("JOINT, End Site or }")?;
            match t {
                "JOINT" => self.joint(Some(index), depth + 1)?,
                "End" => {
                    self.tokens.expect("Site")?;
                    self.tokens.expect("{")?;
                    let offset = self.offset()?;
                    self.tokens.expect("}")?;
                    let name = self.unique_name(format!("{}_End", self.joints[index].name));
                    self.joints.push(Joint::end_site(&name, index, offset));
                }
                "}" => return Ok(()),
                other => {
                    return Err(err(
                        line,
                        BvhErrorKind::Unexpected {
                            expected: "JOINT, End Site or }",
                            found: other.to_string(),
                        },
                    ))
                }
            }
        }
    }
}

/// Parse raw bytes; non-UTF-8 input is a structured error.
pub fn parse_bvh_bytes(bytes: &[u8]) -> Result<MotionClip, MotionError> {
    let text = core::str::from_utf8(bytes).map_err(|e| {
        let line = bytes[..e.valid_up_to()]
            .iter()
            .filter(|&&b| b == b'\n')
            .count()
            + 1;
        err(line, BvhErrorKind::Utf8)
    })?;
    parse_bvh(text)
}

/// Parse a BVH document (HIERARCHY + MOTION sections).
///
/// The root's world position is its OFFSET plus its position channels.
/// End sites become joints flagged as markers, named `<parent>_End`.
pub fn parse_bvh(text: &str) -> Result<MotionClip, MotionError> {
    let lines: Vec<&str> = text.lines().collect();
    let motion_line = lines
        .iter()
        .position(|l| l.split_whitespace().next() == Some("MOTION"))
        .ok_or_else(|| err(lines.len().max(1), BvhErrorKind::MissingSection("MOTION")))?;

    let mut items = Vec::new();
    for (i, l) in lines[..motion_line].iter().enumerate() {
        for t in l.split_whitespace() {
            items.push((t, i + 1));
        }
    }
    let mut p = HierarchyParser {
        tokens: Tokens {
            items,
            pos: 0,
            last_line: motion_line + 1,
        },
        joints: Vec::new(),
        channels: Vec::new(),
    };
    match p.tokens.next("HIERARCHY") {
        Ok(("HIERARCHY", _)) => {}
        Ok((_, line)) => return Err(err(line, BvhErrorKind::MissingSection("HIERARCHY"))),
        Err(_) => return Err(err(1, BvhErrorKind::MissingSection("HIERARCHY"))),
    }
    p.tokens.expect("ROOT")?;
    p.joint(None, 0)?;
    if let Some(t) = p.tokens.peek() {
        let line = p.tokens.items[p.tokens.pos].1;
        return Err(err(
            line,
            BvhErrorKind::Unexpected {
                expected: "MOTION",
                found: t.to_string(),
            },
        ));
    }
    let topology = Skeleton::new(p.joints)
        .map_err(|e| err(motion_line + 1, BvhErrorKind::Topology(e.to_string())))?;
    let layout = p.channels;
    let width: usize = layout.iter().map(|c| c.channels.len()).sum();

    // MOTION header
    let mut rest = lines
        .iter()
        .enumerate()
        .skip(motion_line + 1)
        .filter(|(_, l)| !l.trim().is_empty());
    let (fl, frames_line) = rest
        .next()
        .ok_or_else(|| err(lines.len(), BvhErrorKind::UnexpectedEof("Frames:")))?;
    let declared = {
        let toks: Vec<&str> = frames_line.split_whitespace().collect();
        if toks.len() != 2 || toks[0] != "Frames:" {
            return Err(err(
                fl + 1,
                BvhErrorKind::Unexpected {
                    expected: "Frames: <count>",
                    found: frames_line.trim().to_string(),
                },
            ));
        }
        toks[1]
            .parse::<usize>()
            .map_err(|_| err(fl + 1, BvhErrorKind::InvalidNumber(toks[1].to_string())))?
    };
    let (tl, time_line) = rest
        .next()
        .ok_or_else(|| err(lines.len(), BvhErrorKind::UnexpectedEof("Frame Time:")))?;
    let frame_time = {
        let toks: Vec<&str> = time_line.split_whitespace().collect();
        if toks.len() != 3 || toks[0] != "Frame" || toks[1] != "Time:" {
            return Err(err(
                tl + 1,
                BvhErrorKind::Unexpected {
                    expected: "Frame Time: <seconds>",
                    found: time_line.trim().to_string(),
                },
            ));
        }
        let t = parse_number(toks[2], tl + 1)?;
        if t <= 0.0 {
            return Err(err(tl + 1, BvhErrorKind::FrameTime(t)));
        }
        t
    };

    let mut frames = Vec::with_capacity(declared.min(1 << 16));
    let mut values = Vec::with_capacity(width);
    for (li, row) in rest {
        if frames.len() == declared {
            return Err(err(
                li + 1,
                BvhErrorKind::FrameCountMismatch {
                    declared,
                    found: frames.len() + 1,
                },
            ));
        }
        values.clear();
        for t in row.split_whitespace() {
            values.push(parse_number(t, li + 1)?);
        }
        if values.len() != width {
            return Err(err(
                li + 1,
                BvhErrorKind::ChannelCountMismatch {
                    expected: width,
                    found: values.len(),
                },
            ));
        }
        frames.push(decode_row(&topology, &layout, &values));
    }
    if frames.len() != declared || declared == 0 {
        return Err(err(
            lines.len() + 1,
            BvhErrorKind::FrameCountMismatch {
                declared,
                found: frames.len(),
            },
        ));
    }
    MotionClip::new(topology, frame_time, frames)
}

fn decode_row(topology: &Skeleton, layout: &[JointChannels], values: &[f64]) -> Pose {
    let mut pose = Pose::identity(topology.len());
    pose.root_translation = topology.joint(0).offset;
    let mut k = 0;
    let mut rot_channels: Vec<(Channel, f64)> = Vec::with_capacity(3);
    for jc in layout {
        rot_channels.clear();
        for &c in &jc.channels {
            let v = values[k];
            k += 1;
            match c {
                Channel::Xposition => pose.root_translation.x += v,
                Channel::Yposition => pose.root_translation.y += v,
                Channel::Zposition => pose.root_translation.z += v,
                _ => rot_channels.push((c, v)),
            }
        }
        pose.rotations[jc.joint] = euler_to_quat(&rot_channels);
    }
    pose
}

/// Fixed six-decimal rendering via an integer, so the text depends only on
/// the rounded value. `-0` prints as `0`.
fn push_fixed6(out: &mut String, v: f64, wrap_angle: bool) {
    let mut n = crate::math::round(v * 1e6) as i64;
    if wrap_angle && n == -180_000_000 {
        n = 180_000_000;
    }
    let sign = if n < 0 { "-" } else { "" };
    let a = n.unsigned_abs();
    let _ = write!(out, "{sign}{}.{:06}", a / 1_000_000, a % 1_000_000);
}

fn push_plain(out: &mut String, v: f64) {
    let v = if v == 0.0 { 0.0 } else { v };
    let _ = write!(out, "{v}");
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push('\t');
    }
}

fn write_joint(out: &mut String, topo: &Skeleton, i: usize, depth: usize) {
    let j = topo.joint(i);
    indent(out, depth);
    if j.end_site {
        out.push_str("End Site\n");
    } else if j.parent.is_none() {
        let _ = writeln!(out, "ROOT {}", j.name);
    } else {
        let _ = writeln!(out, "JOINT {}", j.name);
    }
    indent(out, depth);
    out.push_str("{\n");
    indent(out, depth + 1);
    out.push_str("OFFSET ");
    push_plain(out, j.offset.x);
    out.push(' ');
    push_plain(out, j.offset.y);
    out.push(' ');
    push_plain(out, j.offset.z);
    out.push('\n');
    if !j.end_site {
        indent(out, depth + 1);
        if j.parent.is_none() {
            out.push_str(
                "CHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation\n",
            );
        } else {
            out.push_str("CHANNELS 3 Zrotation Xrotation Yrotation\n");
        }
        for &c in topo.children(i) {
            write_joint(out, topo, c, depth + 1);
        }
    }
    indent(out, depth);
    out.push_str("}\n");
}

/// Serialize a clip as BVH text. Joints are written depth-first.
pub fn write_bvh(clip: &MotionClip) -> Result<String, MotionError> {
    let topo = &clip.topology;
    if !(clip.frame_time > 0.0 && clip.frame_time.is_finite()) {
        return Err(MotionError::FrameTime(clip.frame_time));
    }
    if clip.frames.is_empty() {
        return Err(MotionError::EmptyClip);
    }
    let order: Vec<usize> = topo
        .depth_first_order()
        .into_iter()
        .filter(|&i| !topo.joint(i).end_site)
        .collect();
    for (f, pose) in clip.frames.iter().enumerate() {
        if pose.rotations.len() != topo.len() {
            return Err(MotionError::JointCount {
                frame: f,
                expected: topo.len(),
                found: pose.rotations.len(),
            });
        }
        if !pose.root_translation.is_finite() {
            return Err(MotionError::InvalidPose {
                frame: f,
                joint: topo.joint(0).name.clone(),
                reason: "non-finite root translation",
            });
        }
        for &j in &order {
            let q = pose.rotations[j];
            if !q.is_finite() {
                return Err(MotionError::InvalidPose {
                    frame: f,
                    joint: topo.joint(j).name.clone(),
                    reason: "non-finite rotation",
                });
            }
            if q.norm() == 0.0 {
                return Err(MotionError::InvalidPose {
                    frame: f,
                    joint: topo.joint(j).name.clone(),
                    reason: "zero quaternion",
                });
            }
        }
    }

    let mut out = String::new();
    out.push_str("HIERARCHY\n");
    write_joint(&mut out, topo, 0, 0);
    out.push_str("MOTION\n");
    let _ = writeln!(out, "Frames: {}", clip.frames.len());
    out.push_str("Frame Time: ");
    push_plain(&mut out, clip.frame_time);
    out.push('\n');
    let root_offset = topo.joint(0).offset;
    for pose in &clip.frames {
        let t = pose.root_translation - root_offset;
        push_fixed6(&mut out, t.x, false);
        out.push(' ');
        push_fixed6(&mut out, t.y, false);
        out.push(' ');
        push_fixed6(&mut out, t.z, false);
        for &j in &order {
            let (z, x, y) = quat_to_euler_zxy(pose.rotations[j]);
            for a in [z, x, y] {
                out.push(' ');
                push_fixed6(&mut out, a, true);
            }
        }
        out.push('\n');
    }
    Ok(out)
}

/// Largest per-joint rotation difference (degrees) and root translation
/// difference between two clips with the same topology.
pub fn clip_difference(a: &MotionClip, b: &MotionClip) -> Option<(f64, f64)> {
    if a.topology != b.topology || a.frames.len() != b.frames.len() {
        return None;
    }
    let mut rot: f64 = 0.0;
    let mut trans: f64 = 0.0;
    for (pa, pb) in a.frames.iter().zip(&b.frames) {
        trans = trans.max((pa.root_translation - pb.root_translation).norm());
        for (qa, qb) in pa.rotations.iter().zip(&pb.rotations) {
            rot = rot.max(crate::math::to_degrees(qa.angle_to(*qb)));
        }
    }
    Some((rot, trans))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Quat;
    use alloc::vec;
    use proptest::prelude::*;

    const TWO_JOINT: &str = "HIERARCHY
ROOT hips
{
  OFFSET 0.0 0.9 0.0
  CHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation
  JOINT spine
  {
    OFFSET 0.0 0.3 0.0
    CHANNELS 3 Zrotation Xrotation Yrotation
    End Site
    {
      OFFSET 0.0 0.2 0.0
    }
  }
}
MOTION
Frames: 1
Frame Time: 0.033333
0 0 0 0 0 0 0 0 0
";

    #[test]
    fn zero_channels_give_identity() {
        let clip = parse_bvh(TWO_JOINT).unwrap();
        let non_end: Vec<_> = clip
            .topology
            .joints()
            .iter()
            .filter(|j| !j.end_site)
            .collect();
        assert_eq!(non_end.len(), 2);
        assert_eq!(clip.topology.len(), 3);
        assert_eq!(clip.topology.joint(2).name, "spine_End");
        assert_eq!(clip.frame_time, 0.033333);
        let pose = &clip.frames[0];
        assert_eq!(pose.root_translation, Vec3::new(0.0, 0.9, 0.0));
        for q in &pose.rotations {
            assert!(q.angle_to(Quat::IDENTITY) < 1e-15);
        }
    }

    #[test]
    fn missing_row_names_line() {
        let mut text = TWO_JOINT.replace("Frames: 1", "Frames: 10");
        for _ in 0..8 {
            text.push_str("0 0 0 0 0 0 0 0 0\n");
        }
        // 9 rows for 10 declared frames
        let e = parse_bvh(&text).unwrap_err();
        let total_lines = text.lines().count();
        match e {
            MotionError::Bvh(BvhError {
                line,
                kind:
                    BvhErrorKind::FrameCountMismatch {
                        declared: 10,
                        found: 9,
                    },
            }) => assert_eq!(line, total_lines + 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn extra_row_names_its_line() {
        let text = format!("{TWO_JOINT}1 2 3 0 0 0 0 0 0\n");
        let e = parse_bvh(&text).unwrap_err();
        assert!(matches!(
            e,
            MotionError::Bvh(BvhError {
                line: 20,
                kind: BvhErrorKind::FrameCountMismatch { .. }
            })
        ));
    }

    #[test]
    fn width_mismatch_and_bad_numbers() {
        let short = TWO_JOINT.replace("0 0 0 0 0 0 0 0 0", "0 0 0 0 0 0 0 0");
        assert!(matches!(
            parse_bvh(&short),
            Err(MotionError::Bvh(BvhError {
                line: 19,
                kind: BvhErrorKind::ChannelCountMismatch {
                    expected: 9,
                    found: 8
                }
            }))
        ));
        let bad = TWO_JOINT.replace("0 0 0 0 0 0 0 0 0", "0 0 0 0 zero 0 0 0 0");
        assert!(matches!(
            parse_bvh(&bad),
            Err(MotionError::Bvh(BvhError {
                line: 19,
                kind: BvhErrorKind::InvalidNumber(_)
            }))
        ));
        let no_motion = &TWO_JOINT[..TWO_JOINT.find("MOTION").unwrap()];
        assert!(matches!(
            parse_bvh(no_motion),
            Err(MotionError::Bvh(BvhError {
                kind: BvhErrorKind::MissingSection("MOTION"),
                ..
            }))
        ));
        assert!(matches!(
            parse_bvh("MOTION\nFrames: 1\n"),
            Err(MotionError::Bvh(BvhError {
                kind: BvhErrorKind::MissingSection("HIERARCHY"),
                ..
            }))
        ));
    }

    #[test]
    fn honors_declared_channel_order() {
        let text = TWO_JOINT
            .replace(
                "CHANNELS 3 Zrotation Xrotation Yrotation",
                "CHANNELS 3 Xrotation Yrotation Zrotation",
            )
            .replace("0 0 0 0 0 0 0 0 0", "0 0 0 0 0 0 10 20 30");
        let clip = parse_bvh(&text).unwrap();
        let expected = euler_to_quat(&[
            (Channel::Xrotation, 10.0),
            (Channel::Yrotation, 20.0),
            (Channel::Zrotation, 30.0),
        ]);
        assert!(clip.frames[0].rotations[1].angle_to(expected) < 1e-12);
    }

    fn identity_clip(frames: usize) -> MotionClip {
        let topo = Skeleton::new(vec![
            Joint::new("hips", None, Vec3::ZERO),
            Joint::new("spine", Some(0), Vec3::new(0.0, 0.4, 0.0)),
        ])
        .unwrap();
        MotionClip::new(topo, 1.0 / 30.0, vec![Pose::identity(2); frames]).unwrap()
    }

    #[test]
    fn writes_counts() {
        let text = write_bvh(&identity_clip(3)).unwrap();
        assert!(text.contains("HIERARCHY"));
        assert!(text.contains("Frames: 3"));
        let rows: Vec<&str> = text.lines().rev().take(3).collect();
        for r in rows {
            assert_eq!(r.split_whitespace().count(), 9);
        }
    }

    #[test]
    fn refuses_nan() {
        let mut clip = identity_clip(2);
        clip.frames[0].rotations[1].y = f64::NAN;
        match write_bvh(&clip) {
            Err(MotionError::InvalidPose {
                frame: 0, joint, ..
            }) => assert_eq!(joint, "spine"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fixed6_formatting() {
        let mut s = String::new();
        push_fixed6(&mut s, -0.0000001, false);
        s.push(' ');
        push_fixed6(&mut s, -179.9999999, true);
        s.push(' ');
        push_fixed6(&mut s, 12.5, false);
        assert_eq!(s, "0.000000 180.000000 12.500000");
    }

    proptest! {
        #[test]
        fn parser_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..400)) {
            let _ = parse_bvh_bytes(&bytes);
        }

        #[test]
        fn parser_never_panics_on_mutations(cut in 0usize..400, junk in "[ {}A-Za-z0-9.:\n-]{0,20}") {
            let cut = cut.min(TWO_JOINT.len());
            let text = format!("{}{}{}", &TWO_JOINT[..cut], junk, &TWO_JOINT[cut..]);
            if let Ok(clip) = parse_bvh(&text) {
                prop_assert!(clip.validate().is_ok());
            }
        }
    }
}
