//! Captured joint positions, one file per clip.
//!
//! ```text
//! # optional comment lines
//! frame_time 0.0333333
//! 0 0 0.012 0.981 -0.004
//! 0 1 0.013 1.190 -0.010
//! ...
//! ```
//!
//! After the `frame_time <seconds>` header each line is
//! `frame_index joint_index x y z`, whitespace separated, positions in
//! meters. Frame indices run from 0 without gaps; every frame lists every
//! joint of the target topology exactly once, in any order. Blank lines
//! and lines starting with `#` are ignored anywhere.

use simaug_core::math::Vec3;
use simaug_core::motion::JointPositions;

use super::{line_err, FormatError};

#[derive(Debug, Clone, PartialEq)]
pub struct PositionSequence {
    pub frame_time: f64,
    pub frames: Vec<JointPositions>,
}

pub fn parse_positions(text: &str, joints: usize) -> Result<PositionSequence, FormatError> {
    let mut frame_time = None;
    let mut slots: Vec<Vec<Option<Vec3>>> = Vec::new();
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        last_line = line;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        if frame_time.is_none() {
            if tokens.len() != 2 || tokens[0] != "frame_time" {
                return Err(line_err(line, "expected `frame_time <seconds>` header"));
            }
            let v: f64 = tokens[1]
                .parse()
                .map_err(|_| line_err(line, format!("bad frame time {:?}", tokens[1])))?;
            if !(v > 0.0 && v.is_finite()) {
                return Err(line_err(
                    line,
                    format!("frame time must be positive, got {v}"),
                ));
            }
            frame_time = Some(v);
            continue;
        }
        if tokens.len() != 5 {
            return Err(line_err(
                line,
                format!("expected 5 fields, found {}", tokens.len()),
            ));
        }
        let frame: usize = tokens[0]
            .parse()
            .map_err(|_| line_err(line, format!("bad frame index {:?}", tokens[0])))?;
        let joint: usize = tokens[1]
            .parse()
            .map_err(|_| line_err(line, format!("bad joint index {:?}", tokens[1])))?;
        let mut xyz = [0.0; 3];
        for (k, t) in tokens[2..].iter().enumerate() {
            xyz[k] = t
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| line_err(line, format!("bad coordinate {t:?}")))?;
        }
        if joint >= joints {
            return Err(line_err(
                line,
                format!("joint {joint} outside topology of {joints} joints"),
            ));
        }
        if frame > slots.len() {
            return Err(line_err(
                line,
                format!("frame {frame} skips frame {}", slots.len()),
            ));
        }
        if frame == slots.len() {
            slots.push(vec![None; joints]);
        }
        let slot = &mut slots[frame][joint];
        if slot.is_some() {
            return Err(line_err(
                line,
                format!("frame {frame} joint {joint} given twice"),
            ));
        }
        *slot = Some(Vec3::new(xyz[0], xyz[1], xyz[2]));
    }
    let frame_time =
        frame_time.ok_or_else(|| line_err(last_line.max(1), "missing frame_time header"))?;
    if slots.is_empty() {
        return Err(FormatError::Invalid("no position lines".into()));
    }
    let mut frames = Vec::with_capacity(slots.len());
    for (f, s) in slots.into_iter().enumerate() {
        let positions: Option<Vec<Vec3>> = s.iter().copied().collect();
        let missing = s.iter().position(Option::is_none);
        frames.push(positions.ok_or_else(|| {
            FormatError::Invalid(format!(
                "frame {f} lacks joint {}",
                missing.unwrap_or_default()
            ))
        })?);
    }
    Ok(PositionSequence { frame_time, frames })
}

pub fn write_positions(seq: &PositionSequence) -> String {
    let mut out = format!("frame_time {}\n", seq.frame_time);
    for (f, frame) in seq.frames.iter().enumerate() {
        for (j, p) in frame.iter().enumerate() {
            out.push_str(&format!("{f} {j} {} {} {}\n", p.x, p.y, p.z));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let seq = PositionSequence {
            frame_time: 1.0 / 30.0,
            frames: vec![
                vec![Vec3::new(0.1, 0.2, 0.3), Vec3::new(-1e-7, 2.5, 1.0 / 3.0)],
                vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(4.0, 5.0, 6.0)],
            ],
        };
        assert_eq!(parse_positions(&write_positions(&seq), 2).unwrap(), seq);
    }

    #[test]
    fn any_joint_order_and_comments() {
        let text =
            "# capture\nframe_time 0.5\n\n0 1 1 1 1\n0 0 0 0 0\n# mid\n1 0 2 2 2\n1 1 3 3 3\n";
        let s = parse_positions(text, 2).unwrap();
        assert_eq!(s.frames[0][1], Vec3::new(1.0, 1.0, 1.0));
        assert_eq!(s.frames[1][1], Vec3::new(3.0, 3.0, 3.0));
    }

    #[test]
    fn malformed_input_reports_the_line() {
        let cases = [
            ("0 0 0 0 0\n", 1),
            ("frame_time -1\n", 1),
            ("frame_time 1\n0 0 0 0\n", 2),
            ("frame_time 1\n0 0 0 0 x\n", 2),
            ("frame_time 1\n0 5 0 0 0\n", 2),
            ("frame_time 1\n0 0 0 0 0\n2 0 0 0 0\n", 3),
            ("frame_time 1\n0 0 0 0 0\n0 0 1 1 1\n", 3),
        ];
        for (text, line) in cases {
            match parse_positions(text, 2) {
                Err(FormatError::Line { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
        assert!(matches!(
            parse_positions("frame_time 1\n0 0 0 0 0\n", 2),
            Err(FormatError::Invalid(_))
        ));
    }
}
